"""Exception hierarchy for simulation failures.

Every failure mode raised by the library derives from EncircleError so
callers can distinguish library faults from programming errors.
"""


class EncircleError(Exception):
    """Base class for all library errors."""


class ConfigError(EncircleError):
    """Invalid configuration value or scenario structure."""


class ScenarioParseError(EncircleError):
    """Scenario document could not be parsed or violates the schema."""


class DegenerateBasisError(EncircleError):
    """All fuzzy rule products underflowed to zero.

    Carries the largest input magnitude so the caller can see how far the
    network input drifted outside the membership support.
    """

    def __init__(self, max_abs_input: float):
        self.max_abs_input = float(max_abs_input)
        super().__init__(
            f"fuzzy basis degenerate: all rule products underflowed "
            f"(max |input variable| = {self.max_abs_input:.6g})"
        )


class AdaptationDivergedError(EncircleError):
    """Network weights or residual became non-finite during adaptation."""

    def __init__(self, detail: str, step: int | None = None):
        self.step = step
        super().__init__(f"adaptation diverged: {detail}")


class CovarianceDegenerateError(EncircleError):
    """Covariance lost positive definiteness beyond tolerance."""

    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"covariance degenerate: min eigenvalue {self.min_eigenvalue:.6g} <= 1e-12"
        )


class GeometryDegenerateError(EncircleError):
    """Agent geometry does not admit the radius construction."""


class InvalidControlError(EncircleError):
    """A control command came out non-finite."""
