"""Crystal dispersion: refractive indices, wavevector expansions, QPM mismatch.

The dispersion model is data-driven (Sellmeier coefficient sets or tabulated
index samples per crystal axis) so that golden values can be regenerated when
the coefficient source changes.  Group velocity and group-velocity dispersion
are obtained from 5-point central finite differences in angular frequency,
which works identically for both model kinds.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import EnergyMismatch, NoRoot, OutOfRange

C_LIGHT = 299_792_458.0  # m/s

# Conventional axis binding for collinear type-II KTP (y -> y + z):
# pump and signal polarized along y, idler along z.  Recorded in every
# emitted dataset because the assignment fixes the sign of 1/u_i - 1/u_s.
TYPE_II_AXES = {"pump": "y", "signal": "y", "idler": "z"}

# relative step, in omega, of the difference stencils for u0 and G0
_DERIV_REL_STEP = 1e-5


@dataclass(frozen=True)
class DispersionModel:
    """Refractive index per crystal axis, either Sellmeier or tabulated.

    sellmeier maps axis -> coefficient list [c0, b1, a1, ..., d] with
    n^2 = c0 + sum b_k/(1 - a_k/lam_um^2) - d*lam_um^2 (lambda in um).
    table maps axis -> (wavelengths_m, indices) sorted strictly increasing.
    valid_range is (min_m, max_m).
    """

    valid_range: tuple[float, float]
    sellmeier: dict = field(default_factory=dict)
    table: dict = field(default_factory=dict)
    name: str = "custom"

    def __post_init__(self):
        lo, hi = self.valid_range
        if not (0 < lo < hi):
            raise ValueError("valid_range must satisfy 0 < min < max")
        for axis, coeffs in self.sellmeier.items():
            c = tuple(float(v) for v in coeffs)
            if len(c) < 4 or len(c) % 2 != 0:
                raise ValueError(f"axis {axis}: Sellmeier list needs even length >= 4")
            object.__setattr__(self, "sellmeier", {**self.sellmeier, axis: c})
        for axis, tab in self.table.items():
            lam = np.asarray(tab[0], dtype=float)
            n = np.asarray(tab[1], dtype=float)
            if lam.ndim != 1 or lam.shape != n.shape or lam.size < 2:
                raise ValueError(f"axis {axis}: table needs matching 1-D arrays")
            if np.any(np.diff(lam) <= 0):
                raise ValueError(f"axis {axis}: table wavelengths must increase strictly")
            object.__setattr__(self, "table", {**self.table, axis: (lam, n)})

    def axes(self):
        return sorted(set(self.sellmeier) | set(self.table))


@dataclass(frozen=True)
class CrystalSpec:
    """Nonlinear crystal geometry plus its dispersion model.

    poling_period is in meters, or None for "auto" (solved for collinear
    degeneracy by degenerate_poling_period at configuration time).
    """

    length: float
    dispersion: DispersionModel
    poling_period: float | None = None
    pm_type: str = "type_II"
    axes: dict = field(default_factory=lambda: dict(TYPE_II_AXES))
    temperature: float | None = None  # recorded in outputs, ignored by the math

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("crystal length must be positive")
        if self.poling_period is not None and self.poling_period <= 0:
            raise ValueError("explicit poling period must be positive")
        if self.pm_type != "type_II":
            raise ValueError(f"unsupported phase-matching type: {self.pm_type}")


@dataclass(frozen=True)
class WaveParams:
    """Wavevector, group velocity and GVD at a center wavelength."""

    k0: float  # rad/m
    u0: float  # m/s
    G0: float  # s^2/m
    center_wavelength: float  # m

    def __post_init__(self):
        if self.k0 <= 0 or self.u0 <= 0:
            raise ValueError("k0 and u0 must be positive")


def _sellmeier_n(coeffs, wavelength):
    lam_um = wavelength * 1e6
    l2 = lam_um * lam_um
    n2 = coeffs[0] - coeffs[-1] * l2
    for j in range(1, len(coeffs) - 1, 2):
        n2 += coeffs[j] / (1.0 - coeffs[j + 1] / l2)
    if n2 <= 1.0:
        raise OutOfRange(f"Sellmeier set yields n^2 = {n2:.4f} <= 1 at {lam_um:.4f} um")
    return math.sqrt(n2)


def refractive_index(model: DispersionModel, wavelength: float, axis: str) -> float:
    """Refractive index of one crystal axis at a vacuum wavelength (meters)."""
    lo, hi = model.valid_range
    if not (lo <= wavelength <= hi):
        raise OutOfRange(
            f"wavelength {wavelength * 1e9:.2f} nm outside model range "
            f"[{lo * 1e9:.0f}, {hi * 1e9:.0f}] nm")
    if axis in model.sellmeier:
        return _sellmeier_n(model.sellmeier[axis], wavelength)
    if axis in model.table:
        lam, n = model.table[axis]
        if not (lam[0] <= wavelength <= lam[-1]):
            raise OutOfRange(
                f"wavelength {wavelength * 1e9:.2f} nm outside tabulated span of axis {axis}")
        return float(np.interp(wavelength, lam, n))
    raise ValueError(f"dispersion model has no axis {axis!r}")


def wave_params(crystal: CrystalSpec, role: str, center_wavelength: float) -> WaveParams:
    """k0, group velocity and GVD for one wave role at its center wavelength.

    k(omega) = omega*n(lambda(omega))/c; u0 = 1/k'(omega0), G0 = k''(omega0),
    both from 5-point central differences with relative step 1e-5.
    """
    axis = crystal.axes[role]
    omega0 = 2 * math.pi * C_LIGHT / center_wavelength

    def k_of_omega(omega):
        lam = 2 * math.pi * C_LIGHT / omega
        return omega * refractive_index(crystal.dispersion, lam, axis) / C_LIGHT

    h = _DERIV_REL_STEP * omega0
    km2, km1, k0, kp1, kp2 = (k_of_omega(omega0 + m * h) for m in (-2, -1, 0, 1, 2))
    dk = (km2 - 8 * km1 + 8 * kp1 - kp2) / (12 * h)
    d2k = (-km2 + 16 * km1 - 30 * k0 + 16 * kp1 - kp2) / (12 * h * h)
    return WaveParams(k0=k0, u0=1.0 / dk, G0=d2k, center_wavelength=center_wavelength)


def _bare_mismatch(crystal: CrystalSpec, lambda_p, lambda_s, lambda_i):
    n = crystal.dispersion
    kp = 2 * math.pi * refractive_index(n, lambda_p, crystal.axes["pump"]) / lambda_p
    ks = 2 * math.pi * refractive_index(n, lambda_s, crystal.axes["signal"]) / lambda_s
    ki = 2 * math.pi * refractive_index(n, lambda_i, crystal.axes["idler"]) / lambda_i
    return kp - ks - ki


def phase_mismatch0(crystal: CrystalSpec, lambda_p: float, lambda_s: float,
                    lambda_i: float) -> float:
    """Constant QPM mismatch dk0 = k_p0 - k_s0 - k_i0 - 2*pi/poling_period.

    Center wavelengths must conserve energy to 1e-9 relative.
    """
    if crystal.poling_period is None:
        raise ValueError("crystal has no poling period; solve one with degenerate_poling_period")
    resid = 1.0 / lambda_p - 1.0 / lambda_s - 1.0 / lambda_i
    if abs(resid * lambda_p) > 1e-9:
        raise EnergyMismatch(
            f"1/lp - 1/ls - 1/li = {resid:.3e} m^-1 violates energy conservation")
    return _bare_mismatch(crystal, lambda_p, lambda_s, lambda_i) - 2 * math.pi / crystal.poling_period


_POLING_BRACKET = (1e-6, 100e-6)


def degenerate_poling_period(crystal: CrystalSpec, lambda_p: float) -> float:
    """Poling period that zeroes the mismatch at collinear degeneracy (2*lambda_p).

    The mismatch dk0(Lambda) = bare - 2*pi/Lambda is monotone in Lambda, so the
    root is 2*pi/bare; NoRoot if it falls outside the [1 um, 100 um] bracket.
    """
    lam_d = 2 * lambda_p
    try:
        bare = _bare_mismatch(crystal, lambda_p, lam_d, lam_d)
    except OutOfRange as exc:
        raise NoRoot(f"cannot bracket a poling period: {exc}") from exc
    if bare <= 0:
        raise NoRoot("bare mismatch is not positive; no grating compensates it")
    period = 2 * math.pi / bare
    lo, hi = _POLING_BRACKET
    if not (lo <= period <= hi):
        raise NoRoot(f"solution {period * 1e6:.3f} um outside bracket [1, 100] um")
    return period


def _parse_value(text, path, lineno):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError) as exc:
        raise ValueError(f"{path}:{lineno}: cannot parse value {text!r}") from exc


def load_dispersion_file(path) -> DispersionModel:
    """Read a dispersion data file (keys axis.<x|y|z>.sellmeier / .table,
    valid_range_nm) into a DispersionModel."""
    sellmeier, table = {}, {}
    valid_range = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            parsed = _parse_value(value.strip(), path, lineno)
            if key == "valid_range_nm":
                lo, hi = parsed
                valid_range = (lo * 1e-9, hi * 1e-9)
            elif key.startswith("axis.") and key.endswith(".sellmeier"):
                sellmeier[key.split(".")[1]] = tuple(float(v) for v in parsed)
            elif key.startswith("axis.") and key.endswith(".table"):
                pts = sorted((lam * 1e-9, n) for lam, n in parsed)
                lam = np.array([p[0] for p in pts])
                n = np.array([p[1] for p in pts])
                table[key.split(".")[1]] = (lam, n)
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    if valid_range is None:
        raise ValueError(f"{path}: missing valid_range_nm")
    if not sellmeier and not table:
        raise ValueError(f"{path}: no axis data found")
    return DispersionModel(valid_range=valid_range, sellmeier=sellmeier,
                           table=table, name=str(path))


def builtin_ktp() -> DispersionModel:
    """The shipped KTP coefficient set (see data/ktp.txt for the citations)."""
    with resources.as_file(resources.files("spdcmodes").joinpath("data/ktp.txt")) as p:
        model = load_dispersion_file(p)
    return DispersionModel(valid_range=model.valid_range, sellmeier=model.sellmeier,
                           table=model.table, name="builtin-ktp")
