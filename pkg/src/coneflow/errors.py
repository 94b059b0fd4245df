"""Error types shared across the solver and auditors."""


class ConeflowError(Exception):
    """Base class for all package-specific errors."""


class DefinitenessError(ConeflowError):
    """A metric field failed the positive-definiteness guard.

    Carries the offending grid index and the eigenvalue that fell below
    the floor, plus the flow time if the violation happened mid-run.
    """

    def __init__(self, index, eigenvalue, t=None):
        self.index = int(index)
        self.eigenvalue = float(eigenvalue)
        self.t = t
        at = f" at t={t:.6g}" if t is not None else ""
        super().__init__(
            f"metric not positive definite{at}: eigenvalue {eigenvalue:.6g} "
            f"at grid index {index}"
        )


class NonFiniteError(ConeflowError):
    """NaN or infinity detected in an evolving field."""

    def __init__(self, index, t=None):
        self.index = int(index)
        self.t = t
        at = f" at t={t:.6g}" if t is not None else ""
        super().__init__(f"non-finite value{at} at grid index {index}")


class ConfigError(ConeflowError):
    """A configuration document failed schema or semantic validation."""


class BarrierRangeError(ConeflowError):
    """Eigenvalue outside the representable barrier regime."""
