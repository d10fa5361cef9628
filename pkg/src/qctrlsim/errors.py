"""Exception types shared across the package."""


class QctrlError(Exception):
    """Base class for every error raised by qctrlsim."""


class DomainError(QctrlError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class CapacityError(QctrlError):
    """A hardware-style resource limit (memory, channel count) was exceeded."""


class CollisionError(QctrlError):
    """Two tones were assigned to the same readout frequency bin."""

    def __init__(self, f1, f2, bin_index):
        self.tones = (f1, f2)
        self.bin_index = bin_index
        super().__init__(
            f"tones {f1 / 1e6:.6g} MHz and {f2 / 1e6:.6g} MHz both fall in bin {bin_index}"
        )


class FitError(QctrlError):
    """A fit failed to converge or the data carried no usable signal."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class InfeasiblePlanError(QctrlError):
    """No frequency plan on the search grid satisfies every constraint."""

    def __init__(self, message, tightest=None):
        self.tightest = tightest
        super().__init__(message)
