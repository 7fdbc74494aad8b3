"""Zero-temperature Casimir-Polder and quantum friction forces on an atom above a surface.

The package evaluates, in the near-field (quasi-static) regime:

* surface response models and the reflected Green tensor (:mod:`materials`);
* dressed, velocity-dependent atomic polarizabilities (:mod:`response`);
* the stationary dipole power spectrum and correlations (:mod:`spectrum`);
* Casimir-Polder and friction forces (:mod:`forces`);
* an independent discretized-bath simulation of the same system (:mod:`bath`).
"""

__version__ = "0.1.0"

from .constants import EPS0, HBAR
from .errors import ConvergenceError, DomainError, PoleError, QFrictionError
from .quadrature import QuadratureConfig
from .materials import SurfaceModel, green_nearfield, permittivity, surface_response
from .response import (AtomModel, alpha_scalar, bare_polarizability, polarizability_oscillator,
                       qrt_correlation, self_energy, tls_delta_shift, tls_gamma, tls_polarizability)
from .spectrum import (correlation_from_spectrum, current_J, eta_tensor, fdt_residual, g_tensor,
                       power_spectrum)
from .forces import (ForceResult, casimir_polder_fdt, casimir_polder_qrt, friction_exponent_fit,
                     friction_full, friction_lowv, friction_nearfield_ohmic, friction_qrt, tls_I1,
                     tls_I2)
from .bath import BathConfig, build_bath, evolve_moving, evolve_static
