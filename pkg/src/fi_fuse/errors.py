"""Exception hierarchy.

Every error carries the process exit code the CLI reports for it, so the
command line front end never has to map exception types itself.
"""


class FiFuseError(Exception):
    exit_code = 1


class ConfigError(FiFuseError):
    exit_code = 2


class DataError(FiFuseError):
    exit_code = 3


class TrainingError(FiFuseError):
    exit_code = 4


class FusionError(FiFuseError):
    exit_code = 5


# configuration
class EmptyGrid(ConfigError):
    pass


class InvalidHyperparameter(ConfigError):
    pass


class UnknownName(ConfigError):
    pass


# data ingestion and partitioning
class MissingTarget(DataError):
    pass


class NonNumericFeature(DataError):
    pass


class EmptyDataset(DataError):
    pass


class BadFoldCount(DataError):
    pass


class BadShape(DataError):
    pass


class FormatError(DataError):
    pass


# training and explanation
class ShapeMismatch(TrainingError):
    pass


class ClassCountTooLow(ShapeMismatch):
    pass


class TrainingDiverged(TrainingError):
    pass


class TooManyFeatures(TrainingError):
    pass


class EmptyBackground(TrainingError):
    pass


class DegenerateKernel(TrainingError):
    pass


# fusion
class InsufficientSources(FusionError):
    pass


class TooFewSamples(FusionError):
    pass


class ZeroArea(FusionError):
    pass
