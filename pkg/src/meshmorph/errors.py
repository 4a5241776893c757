"""Exception types shared across the package."""


class MeshMorphError(Exception):
    """Base class for all errors raised by meshmorph."""


class DegenerateElementError(MeshMorphError):
    """An element has coincident corners or a zero-length edge."""


class InvalidReferenceError(MeshMorphError):
    """Reference configuration is inadmissible (non-positive area)."""


class ConnectivityError(MeshMorphError):
    """Two meshes that must share connectivity do not."""


class GeometryError(MeshMorphError):
    """Problem geometry parameters are inconsistent or unbuildable."""


class MotionError(MeshMorphError):
    """A prescribed motion is malformed or does not match the interface."""


class ConstraintError(MeshMorphError):
    """Conflicting or out-of-range constraint specification."""


class SolverError(MeshMorphError):
    """A linear solve failed or did not meet its residual contract."""


class StepFailureError(SolverError):
    """Incremental deformation failed; carries the failing step index."""

    def __init__(self, message, step):
        super().__init__(f"{message} (step {step})")
        self.step = step


class NewtonDivergenceError(SolverError):
    """Newton iteration exceeded its budget; carries increment and residual."""

    def __init__(self, message, increment, residual_norm):
        super().__init__(
            f"{message} (increment {increment}, last residual {residual_norm:.3e})"
        )
        self.increment = increment
        self.residual_norm = residual_norm


class InadmissibleStateError(MeshMorphError):
    """A deformation state has non-positive Jacobian at a quadrature point."""


class UnconvergedStateError(MeshMorphError):
    """Sensitivity requested on a state that is not a converged equilibrium."""


class ConfigError(MeshMorphError):
    """Configuration file is missing, malformed, or inconsistent."""
