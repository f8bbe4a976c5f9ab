"""CODATA physical constants used throughout the package (SI units)."""
from dataclasses import dataclass

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = _sc.hbar  # J s
    c: float = _sc.c  # m / s
    eps0: float = _sc.epsilon_0  # F / m
    kB: float = _sc.k  # J / K

    def __post_init__(self):
        for name in ("hbar", "c", "eps0", "kB"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


CONSTANTS = PhysicalConstants()

HBAR = CONSTANTS.hbar
C_LIGHT = CONSTANTS.c
EPS0 = CONSTANTS.eps0
KB = CONSTANTS.kB
