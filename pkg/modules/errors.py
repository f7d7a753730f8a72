"""
Exception hierarchy shared by the simulator, gradient estimators and training loops
"""


class LabError(Exception):
    """Base class for every error raised by the training laboratory"""


class CapacityError(LabError, ValueError):
    """Requested register or circuit exceeds what the simulator supports"""


class BindingError(LabError, ValueError):
    """Inputs, parameters or qubit indices do not fit the circuit they are bound to"""


class SpecError(LabError, ValueError):
    """An ansatz specification cannot be realized"""


class UnsupportedGeneratorError(LabError, ValueError):
    """A trainable angle was attached to a gate without a Pauli-rotation generator"""


class ConfigError(LabError, ValueError):
    """Invalid run, training or estimator configuration"""


class DegeneratePartitionError(LabError, ValueError):
    """A batch partition that must be non-empty turned out empty"""


class NumericFaultError(LabError, ArithmeticError):
    """NaN or infinite values reached the optimizer"""


class DegenerateFeatureError(LabError, ValueError):
    """A feature column has no spread and cannot be min-max scaled"""


class IngestionError(LabError, ValueError):
    """A dataset file could not be turned into a numeric table"""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


class HistogramLookupError(LabError, KeyError):
    """Gradient histogram requested for an epoch that was not captured"""
