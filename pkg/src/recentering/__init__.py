"""Recentered coherent-state kernels for reparametrization-invariant systems.

Subpackages by topic:

- :mod:`recentering.kernel_core`: Gram matrices, PSD checks, damped quotients, recentering.
- :mod:`recentering.classical`: Hamilton versus reparametrized integration.
- :mod:`recentering.oscillator`: truncated one-dof representation and constrained kernels.
- :mod:`recentering.lattice`, :mod:`recentering.free_field`: ultralocal start, mode truncation,
  recentering onto the relativistic kernel.
- :mod:`recentering.phi4`: few-site quartic model with Lanczos ground states.
- :mod:`recentering.ultralocal`: general ultralocal functionals, admissibility and reducibility.
- :mod:`recentering.cli`: config-driven experiment runner.
"""

__version__ = "0.1.0"

from ._accel import backend  # noqa: E402
from .errors import (  # noqa: E402
    ConvergenceError,
    DivergenceError,
    InadmissibleError,
    InputError,
    KernelEvaluationError,
    NumericalError,
    RecenteringError,
    TruncationError,
)

__all__ = [
    "__version__",
    "backend",
    "RecenteringError",
    "InputError",
    "KernelEvaluationError",
    "NumericalError",
    "TruncationError",
    "DivergenceError",
    "ConvergenceError",
    "InadmissibleError",
]
