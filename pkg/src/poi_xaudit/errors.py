"""Exception hierarchy shared across the package.

Each error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses without a lookup table.
"""


class PoiXauditError(Exception):
    exit_code = 1


class ConfigError(PoiXauditError):
    exit_code = 2


class MissingArtifact(PoiXauditError):
    exit_code = 3


class MissingCheckpoint(MissingArtifact):
    pass


class MissingDataset(MissingArtifact):
    pass


class DataError(PoiXauditError):
    exit_code = 4


class EmptyDataset(DataError):
    pass


class CorruptDataset(DataError):
    pass


class TrajectoryTooShort(DataError):
    pass


class NotEnoughUsers(DataError):
    pass


class UnknownPoi(DataError, KeyError):
    pass


class UnknownId(DataError, KeyError):
    pass


class NoCandidate(DataError):
    pass


class EmptySet(DataError, ValueError):
    pass


class BadIndex(DataError, IndexError):
    pass


class BadK(DataError, ValueError):
    pass


class CheckpointError(DataError):
    pass


class NumericError(PoiXauditError, ArithmeticError):
    exit_code = 5


class ShapeError(NumericError, ValueError):
    pass


class DomainError(NumericError, ValueError):
    pass
