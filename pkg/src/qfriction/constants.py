"""Physical constants in SI units."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Constants:
    """Reduced Planck constant (J s) and vacuum permittivity (F/m)."""

    hbar: float = 1.054571817e-34
    eps0: float = 8.8541878128e-12


CONSTANTS = Constants()
HBAR = CONSTANTS.hbar
EPS0 = CONSTANTS.eps0
