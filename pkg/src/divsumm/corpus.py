"""Topic corpora on disk, sentence segmentation, and head truncation.

A topic directory looks like::

    <topic>/articles/*.txt     one news article per file (UTF-8)
    <topic>/refs/*.txt         optional human reference summaries
    <topic>/manifest.json      optional {"name": ..., "notes": ...}
"""

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusIOError, EmptyDocument, MissingArticles
from .rng import XorShift64Star

ABBREVIATIONS = frozenset(
    a.lower()
    for a in ("Mr.", "Mrs.", "Dr.", "St.", "U.S.", "vs.", "etc.", "e.g.", "i.e.", "Jr.", "Sr.", "Prof.")
)

# terminator, optional closing quotes/brackets, then the whitespace run
_BOUNDARY = re.compile(r"[.!?][\"'”’)\]]*(\s+)")
_PARAGRAPH = re.compile(r"\n[ \t\r\f\v]*\n")
_OPENERS = "\"'“‘([`"
_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    source_order: int = 0


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    index_in_doc: int
    global_index: int
    text: str

    @property
    def char_len(self):
        return len(self.text)

    @property
    def key(self):
        """Lookup key used by embedding and score files."""
        return f"{self.doc_id}#{self.index_in_doc}"


@dataclass(frozen=True)
class Topic:
    name: str
    documents: tuple
    references: tuple = ()
    manifest: dict = field(default_factory=dict, compare=False)

    def sentences(self):
        """All sentences of the topic, globally indexed in document order."""
        return segment_topic(self.documents)


def _read_text(path):
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CorpusIOError(path, exc.strerror or str(exc)) from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusIOError(path, f"not valid UTF-8 ({exc.reason})") from exc
    return text.replace("\r\n", "\n").replace("\r", "\n")


def _txt_files(directory):
    # byte-order sort, independent of the filesystem's listing order
    return sorted((p for p in directory.iterdir() if p.suffix == ".txt" and p.is_file()),
                  key=lambda p: p.name.encode("utf-8"))


def load_topic(dir_path):
    """Load a topic directory into a :class:`Topic`.

    Raises:
        MissingArticles: ``articles/`` is absent or holds no ``.txt`` file.
        EmptyDocument: an article or reference is blank.
        CorpusIOError: a file cannot be read or decoded.
    """
    root = Path(dir_path)
    articles_dir = root / "articles"
    if not articles_dir.is_dir():
        raise MissingArticles(f"{root}: no articles/ directory")
    paths = _txt_files(articles_dir)
    if not paths:
        raise MissingArticles(f"{articles_dir}: no .txt articles")

    documents = []
    for order, path in enumerate(paths):
        text = _read_text(path)
        if not text.strip():
            raise EmptyDocument(path)
        documents.append(Document(id=path.stem, text=text, source_order=order))

    references = []
    refs_dir = root / "refs"
    if refs_dir.is_dir():
        for path in _txt_files(refs_dir):
            text = _read_text(path)
            if not text.strip():
                raise EmptyDocument(path)
            references.append(text.strip())

    manifest = {}
    manifest_path = root / "manifest.json"
    if manifest_path.is_file():
        try:
            manifest = json.loads(_read_text(manifest_path))
        except json.JSONDecodeError as exc:
            raise CorpusIOError(manifest_path, f"invalid JSON at line {exc.lineno}") from exc

    return Topic(name=root.resolve().name, documents=tuple(documents),
                 references=tuple(references), manifest=manifest)


def _is_abbreviation(text, term_end):
    """True if the word ending at ``term_end`` (exclusive) is a guarded abbreviation."""
    start = term_end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:term_end].lstrip(_OPENERS).lower()
    return word in ABBREVIATIONS


def _starts_upper(text, pos):
    while pos < len(text) and text[pos] in _OPENERS:
        pos += 1
    return pos < len(text) and text[pos].isupper()


def split_sentences(text):
    """Split raw text into trimmed sentence strings.

    A boundary is a ``.``, ``!`` or ``?`` (optionally followed by closing
    quotes or brackets), then whitespace, then an uppercase letter (possibly
    behind an opening quote) or end of text. Guarded abbreviations never end
    a sentence. Blank lines always do. Internal whitespace runs collapse to
    one space.
    """
    cuts = set()
    for m in _PARAGRAPH.finditer(text):
        cuts.add(m.start())
    for m in _BOUNDARY.finditer(text):
        ws_start, ws_end = m.span(1)
        if ws_end < len(text) and not _starts_upper(text, ws_end):
            continue
        # position right after the terminator character itself
        if _is_abbreviation(text, m.start() + 1):
            continue
        cuts.add(ws_start)

    pieces = []
    prev = 0
    for cut in sorted(cuts) + [len(text)]:
        piece = _WS.sub(" ", text[prev:cut]).strip()
        if piece:
            pieces.append(piece)
        prev = cut
    if not pieces:
        stripped = _WS.sub(" ", text).strip()
        if stripped:
            pieces.append(stripped)
    return pieces


def segment_sentences(doc, start_index=0):
    """Segment one document; ``global_index`` counts up from ``start_index``."""
    return [
        Sentence(doc_id=doc.id, index_in_doc=i, global_index=start_index + i, text=s)
        for i, s in enumerate(split_sentences(doc.text))
    ]


def segment_topic(documents):
    sentences = []
    for doc in documents:
        sentences.extend(segment_sentences(doc, start_index=len(sentences)))
    return sentences


def _head(doc, n_words):
    taken = []
    count = 0
    for sentence in split_sentences(doc.text):
        if count >= n_words:
            break
        taken.append(sentence)
        count += len(sentence.split())
    return " ".join(taken)


def truncate_heads(topic, n_docs, n_words, seed):
    """Sample ``n_docs`` articles and concatenate roughly their first ``n_words`` words.

    Sentences are taken whole until the running word count reaches
    ``n_words``, so a document is never cut mid-sentence. The sampled
    documents keep their original source order.
    """
    if n_docs < 1 or n_words < 1:
        raise ValueError("n_docs and n_words must be >= 1")
    docs = list(topic.documents)
    rng = XorShift64Star(seed)
    picked = sorted(rng.sample(len(docs), min(n_docs, len(docs))))
    chosen = sorted((docs[i] for i in picked), key=lambda d: d.source_order)
    text = " ".join(_head(d, n_words) for d in chosen)
    return Document(id=f"{topic.name}-truncated", text=text, source_order=0)
