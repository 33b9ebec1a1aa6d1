"""Exception types shared across the toolkit."""


class HybridManipError(Exception):
    """Base class; ``kind`` is a short machine-readable tag used in diagnostics."""

    kind = "error"


class FrameMismatchError(HybridManipError, ValueError):
    kind = "frame-mismatch"


class EulerSingularityError(HybridManipError, ArithmeticError):
    kind = "euler-singularity"


class ContactError(HybridManipError):
    """Raised when a terrestrial-only operation is called without contact."""

    kind = "no-contact"


class ContactLostError(HybridManipError):
    kind = "contact-lost"

    def __init__(self, msg, normal_force=None):
        super().__init__(msg)
        self.normal_force = normal_force


class InfeasibleCommandError(HybridManipError, ValueError):
    kind = "controller-infeasible"


class NoReliableContact(HybridManipError):
    kind = "no-reliable-contact"


class NumericalFailure(HybridManipError, ArithmeticError):
    kind = "numerical-failure"


class NonConvergenceError(HybridManipError):
    kind = "estimator-nonconvergence"

    def __init__(self, msg, last_iterate=None, diagnostics=None):
        super().__init__(msg)
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics


class SimulationAbort(HybridManipError):
    """Closed-loop run stopped; carries the underlying cause and sim time."""

    kind = "simulation-abort"

    def __init__(self, msg, cause=None, time=None):
        super().__init__(msg)
        self.cause = cause
        self.time = time
        if cause is not None and hasattr(cause, "kind"):
            self.kind = cause.kind


class ScenarioError(HybridManipError, ValueError):
    kind = "invalid-scenario"
