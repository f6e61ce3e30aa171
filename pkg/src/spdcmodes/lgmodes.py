"""Laguerre-Gauss mode machinery in transverse momentum space.

Convention
----------
The momentum-space modes used throughout the package are

    LG_p^l(q) = (-1)^p sqrt(p!/(p+|l|)!) * (w/sqrt(2*pi))
                * (w|q|/sqrt(2))^|l| * L_p^|l|(w^2|q|^2/2)
                * exp(-w^2|q|^2/4) * exp(i*l*phi_q)

so the fundamental is exp(-w^2|q|^2/4) * w/sqrt(2*pi), positive at q=0, and
every mode is unit-normalized over the transverse plane.  The (-1)^p factor
is required for consistency with the closed-form expansion coefficients
t_coefficient below: both sides of the engine must share one convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre

# exact integer factorials, widened to float only at the point of use;
# p and |l| stay small so 64 is generous
_FACTORIALS = tuple(math.factorial(n) for n in range(65))


@dataclass(frozen=True, order=True)
class LGIndex:
    """Transverse mode label: radial index p >= 0, azimuthal index ell."""

    p: int
    ell: int

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("radial index p must be nonnegative")

    def __str__(self):
        return f"p{self.p}l{self.ell:+d}"


@dataclass(frozen=True)
class BeamSpec:
    """Collection/pump beam: waist and center wavelength, both in meters."""

    waist: float
    center_wavelength: float

    def __post_init__(self):
        if self.waist <= 0:
            raise ValueError("waist must be positive")
        if self.center_wavelength <= 0:
            raise ValueError("center wavelength must be positive")


def lg_radial_profile(p: int, ell_abs: int, waist: float, q_abs):
    """Radial (angle-free) part of the momentum-space mode; real valued.

    Vectorized over |q|.  Includes the (-1)^p sign and the normalization.
    """
    x = 0.5 * (waist * np.asarray(q_abs, dtype=float)) ** 2
    norm = ((-1) ** p * waist / math.sqrt(2 * math.pi)
            * math.sqrt(_FACTORIALS[p] / _FACTORIALS[p + ell_abs]))
    radial = (waist * np.asarray(q_abs) / math.sqrt(2)) ** ell_abs
    return norm * radial * eval_genlaguerre(p, ell_abs, x) * np.exp(-x / 2)


def lg_momentum_amplitude(mode: LGIndex, waist: float, q) -> complex:
    """Normalized momentum-space LG amplitude at transverse momentum q (2-vector).

    Total function on valid inputs; integrates to unit power over the plane.
    """
    if waist <= 0:
        raise ValueError("waist must be positive")
    qx, qy = float(q[0]), float(q[1])
    q_abs = math.hypot(qx, qy)
    phi = math.atan2(qy, qx)
    ell = mode.ell
    value = lg_radial_profile(mode.p, abs(ell), waist, q_abs)
    return complex(value * np.exp(1j * ell * phi))


def t_coefficient(u: int, p: int, ell: int, waist: float) -> float:
    """Closed-form expansion coefficient of the radial Laguerre polynomial.

    T_u^{p,l} = sqrt(p!(p+|l|)!/pi) * (w/sqrt(2))^(2u+|l|+1)
                * (-1)^(p+u) / ((p-u)! (|l|+u)!)
    for 0 <= u <= p; the waist is the collection waist of the photon the
    index belongs to.
    """
    if u < 0 or u > p:
        raise IndexError(f"u={u} outside [0, p={p}]")
    la = abs(ell)
    return (math.sqrt(_FACTORIALS[p] * _FACTORIALS[p + la] / math.pi)
            * (waist / math.sqrt(2)) ** (2 * u + la + 1)
            * (-1) ** (p + u) / (_FACTORIALS[p - u] * _FACTORIALS[la + u]))


def t_matrix(p_max: int, ell: int, waist: float) -> np.ndarray:
    """All T_u^{p,l} for p <= p_max as a (p_max+1, p_max+1) lower-triangular array."""
    out = np.zeros((p_max + 1, p_max + 1))
    for p in range(p_max + 1):
        for u in range(p + 1):
            out[p, u] = t_coefficient(u, p, ell, waist)
    return out
