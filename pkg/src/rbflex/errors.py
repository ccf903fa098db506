"""Exception hierarchy shared by all rbflex modules.

Two broad families matter to the CLI: configuration problems (bad spaces,
impossible sample sizes, invalid hyperparameters) and data problems
(malformed files, batches that cannot be drawn). Everything else is a plain
RBFleXError.
"""


class RBFleXError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RBFleXError):
    """Invalid experiment configuration (CLI exit code 2)."""


class DataError(RBFleXError):
    """Invalid or unusable input data (CLI exit code 3)."""


# tensor / graph execution

class ShapeMismatch(RBFleXError):
    """Tensor shape incompatible with the layer or graph input."""


class NonFiniteValue(RBFleXError):
    """NaN or Inf produced during a forward pass or found in a trace."""


# design spaces

class SpaceExhausted(ConfigError):
    """Asked to sample more specs than the design space contains."""


# data pipeline

class MalformedFile(DataError):
    """Binary image file whose size is not a whole number of records."""


class LabelOutOfRange(DataError):
    """Record label byte outside the 0..9 class range."""


class NotEnoughImages(DataError):
    """Minibatch request larger than the image set (or smaller than 2)."""


# scoring

class InvalidGamma(ConfigError):
    """RBF bandwidth that is not a positive finite number."""


class NotSymmetric(RBFleXError):
    """Matrix handed to the SPD log-determinant is not symmetric."""


class AllDegenerate(RBFleXError):
    """Every score in a collection is the degenerate sentinel (exit code 4)."""


# hyperparameter detection

class LengthMismatch(RBFleXError):
    """Paired vectors of unequal length."""


class AllRowsIdentical(RBFleXError):
    """No pairwise distance available: every row of the matrix is equal."""


# rank statistics

class ConstantSeries(RBFleXError):
    """Correlation undefined because one series is constant."""


class AllTied(RBFleXError):
    """Kendall's tau undefined because one side ties every pair."""


class JoinMiss(DataError):
    """spec_id missing from the reference accuracy table."""
