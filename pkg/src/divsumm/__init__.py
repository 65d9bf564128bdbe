"""Diversity-aware multi-document extractive summarization."""

from .argument import ArgLabel, ArgumentBackendConfig, classify_arguments, lexicon_score, partition
from .cluster import ClusterAssignment, agglomerative, kmeans, kmeans_best, kmeans_pp_seed
from .corpus import Document, Sentence, Topic, load_topic, segment_sentences, truncate_heads
from .embed import (EmbeddingBackendConfig, SimilarityMatrix, cosine, dot, embed_batch,
                    hashed_tfidf_embed, load_embedding_file, pairwise_similarity)
from .rouge import RougeScore, rouge1, rouge1_against_refs, rouge_tokenize
from .summarize import (Backends, SelectionInstance, Summary, SummaryConfig, assemble,
                        brute_force_select, diversity_loss, greedy_diverse_select,
                        mix_summarize, representative_centroid, representative_cumulative,
                        run_pipeline)

__version__ = "0.1.0"
