"""Exception types shared across the pipeline."""


class KnowdisError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(KnowdisError):
    """Invalid configuration value or unusable input argument."""


class DependencyError(KnowdisError):
    """A pipeline stage was requested before its upstream stage ran."""


class FixtureParseError(KnowdisError):
    """Malformed line in a fixture or dataset file."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


class MissingEmbeddingError(KnowdisError):
    """A lemma has no vector in the embedding space."""

    def __init__(self, lemma):
        super().__init__(f"no embedding for lemma {lemma!r}")
        self.lemma = lemma


class TrainingError(KnowdisError):
    """Training preconditions violated (e.g. single-class data)."""
