"""Exception types shared across the package."""


class DiracThermoError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(DiracThermoError, ValueError):
    """An argument does not match the model's mechanical dimension."""


class ArenaError(DiracThermoError, ValueError):
    """Unknown arena tag."""


class BaseMismatchError(DiracThermoError, ValueError):
    """Two fiber elements sit over different base points."""


class TemperatureSignError(DiracThermoError, ValueError):
    """The entropy slope of the Lagrangian has the wrong sign.

    All constructions here require dL/dS < 0 (equivalently a positive
    temperature). A vanishing or positive slope at a queried point is
    rejected rather than worked around.
    """


class DegenerateLagrangianError(DiracThermoError, ValueError):
    """The Lagrangian is degenerate in the velocities.

    Raised when a momentum inversion or Hamiltonian construction is
    requested for a model whose velocity Hessian is singular (for
    instance a velocity-independent Lagrangian). Such models support
    only the Lagrangian-side formulations.
    """


class ModelBuildError(DiracThermoError, ValueError):
    """Invalid parameters handed to a model builder."""


class NewtonError(DiracThermoError, RuntimeError):
    """An iterative solve failed to converge."""


class IntegrationError(DiracThermoError, RuntimeError):
    """An integrator aborted (blow-up, inconsistent start, Newton failure)."""
