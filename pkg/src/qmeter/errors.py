"""Exception hierarchy shared by the analytic and grid engines."""


class QMeterError(Exception):
    """Base class for all qmeter errors."""


class SingularDuration(QMeterError):
    """omega*T sits on (or too close to) an integer multiple of pi."""


class AsymmetricInput(QMeterError):
    """Coupling or drive is not symmetric about T/2; closed forms do not apply."""


class QuadratureError(QMeterError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class GridError(QMeterError):
    """State does not fit, or is under-resolved on, the requested grid."""


class AliasingError(GridError):
    pass


class PhaseBoundError(QMeterError):
    """Split-step phase increment too large for the requested dt."""

    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class NormError(QMeterError):
    pass


class ScenarioError(QMeterError):
    """Schema violation in a scenario document."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
