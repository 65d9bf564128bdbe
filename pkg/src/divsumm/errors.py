"""Exception hierarchy shared across the package."""


class SummError(Exception):
    """Base class for all package errors."""


# corpus

class CorpusError(SummError):
    pass


class MissingArticles(CorpusError):
    pass


class CorpusIOError(CorpusError):
    """Unreadable or unusable file; ``path`` names the offender."""

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")


class EmptyDocument(CorpusIOError):
    def __init__(self, path):
        super().__init__(path, "document is empty after whitespace trimming")


# embedding / vectors

class DimensionMismatch(SummError):
    pass


class ZeroVector(SummError):
    pass


class MissingEmbedding(SummError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"no embedding for sentence key {key!r}")


class ParseError(SummError):
    def __init__(self, path, line, reason):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {reason}")


class DuplicateKey(SummError):
    def __init__(self, key, line=None):
        self.key = key
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate key {key!r}{where}")


class RemoteError(SummError):
    def __init__(self, status, body=""):
        self.status = status
        self.body = body[:200]
        super().__init__(f"remote backend returned status {status}: {self.body}")


# argument classification

class MissingScore(SummError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"no argument score for sentence key {key!r}")


class AlignmentError(SummError):
    pass


# clustering / selection

class InvalidK(SummError):
    pass


class EmptyCluster(SummError):
    pass


class InvalidCount(SummError):
    pass


class TooLarge(SummError):
    pass


class NoReferences(SummError):
    pass


class PipelineError(SummError):
    """A pipeline stage failed. ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


class ConfigError(SummError):
    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        loc = []
        if key is not None:
            loc.append(f"key {key!r}")
        if line is not None:
            loc.append(f"line {line}")
        prefix = f"{', '.join(loc)}: " if loc else ""
        super().__init__(prefix + message)
