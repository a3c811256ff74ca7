"""Exception and warning types shared across the pipeline."""


class CoordnetError(Exception):
    """Base class for pipeline errors.

    ``stage`` names the pipeline stage so the CLI can print ``stage: message``.
    """

    stage = "coordnet"


class CorpusError(CoordnetError, ValueError):
    stage = "ingest"


class EmbeddingError(CoordnetError, ValueError):
    stage = "embed"


class KnnError(CoordnetError, ValueError):
    stage = "knn"


class InductionError(CoordnetError, ValueError):
    stage = "induce"


class PruneError(CoordnetError, ValueError):
    stage = "prune"


class AnalysisError(CoordnetError, ValueError):
    stage = "analyze"


class ConfigError(CoordnetError, ValueError):
    stage = "config"


class CoordnetWarning(UserWarning):
    pass


class LongBodyWarning(CoordnetWarning):
    pass


class EmptyCoreWarning(CoordnetWarning):
    """Pruning kept no edges (all weights equal, or a single edge)."""
