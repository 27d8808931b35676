"""Exception types shared across the pipeline."""


class DegenerateInput(ValueError):
    """Too little data to compute the requested statistic (e.g. <2 annotators)."""


class ConfigError(ValueError):
    """Invalid campaign or pipeline configuration."""


class MissingGold(ValueError):
    """An annotator has no gold-standard document to be scored against."""


class MissingStage(FileNotFoundError):
    """A pipeline stage was invoked before the stage it depends on."""
