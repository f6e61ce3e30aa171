"""Biphoton state assembly: joint correlation matrices, spectral overlaps,
reduced spatial density matrices, purity/fidelity, target states.

All matrices are normalized over the requested truncated subspace, and every
result records that truncation so emitted datasets stay self-describing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .biphoton import (C_LIGHT, ComplexSpectrum, DetuningGrid, SpdcConfig,
                       amplitude_table, trapezoid_weights)
from .errors import DegenerateSubspace, DimensionMismatch, GridMismatch
from .lgmodes import LGIndex


@dataclass(frozen=True)
class CollectionChannel:
    """One OAM collection channel: label ell with its own collection waists.

    Without coefficient arrays the channel collects the pure p=0 radial mode;
    with them it collects |u> = sum_i A_pi |p_i> (idler) and
    |v> = sum_s B_ps |p_s> (signal).
    """

    ell: int
    signal_waist: float
    idler_waist: float | None = None
    signal_coeffs: tuple | None = None  # B over p_s
    idler_coeffs: tuple | None = None   # A over p_i

    def __post_init__(self):
        if self.idler_waist is None:
            object.__setattr__(self, "idler_waist", self.signal_waist)
        both = (self.signal_coeffs is None) == (self.idler_coeffs is None)
        if not both:
            raise ValueError("supply signal and idler coefficients together")
        if self.signal_coeffs is not None:
            object.__setattr__(self, "signal_coeffs", tuple(complex(c) for c in self.signal_coeffs))
            object.__setattr__(self, "idler_coeffs", tuple(complex(c) for c in self.idler_coeffs))

    @property
    def label(self) -> str:
        return f"{self.ell}"


def channel_spectrum(config: SpdcConfig, channel: CollectionChannel,
                     grid: DetuningGrid) -> ComplexSpectrum:
    """Raw complex spectrum of one collection channel."""
    cfg = config.with_collection_waists(channel.signal_waist, channel.idler_waist)
    if channel.signal_coeffs is None:
        block = amplitude_table(cfg, 0, 0, channel.ell, grid.omega_values)
        values = block[:, 0, 0]
    else:
        b = np.asarray(channel.signal_coeffs, dtype=complex)
        a = np.asarray(channel.idler_coeffs, dtype=complex)
        block = amplitude_table(cfg, b.size - 1, a.size - 1, channel.ell,
                                grid.omega_values)
        values = np.einsum("opq,p,q->o", block, b, a)
    return ComplexSpectrum(grid, values, 0, 0, channel.ell)


@dataclass(frozen=True)
class ModeCorrelationMatrix:
    """Joint mode-pair probabilities over a truncated LG subspace, total 1."""

    signal_modes: tuple
    idler_modes: tuple
    probabilities: np.ndarray
    spectral_window: tuple | None = None  # (center wavelength m, width m)
    subspace: dict = field(default_factory=dict)

    def __post_init__(self):
        probs = np.array(self.probabilities, dtype=float)
        if probs.shape != (len(self.signal_modes), len(self.idler_modes)):
            raise ValueError("probability matrix shape must match the mode lists")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        total = probs.sum()
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"probabilities must sum to 1, got {total}")
        probs.flags.writeable = False
        object.__setattr__(self, "probabilities", probs)

    def entry(self, signal: LGIndex, idler: LGIndex) -> float:
        i = self.signal_modes.index(signal)
        j = self.idler_modes.index(idler)
        return float(self.probabilities[i, j])

    def to_json_dict(self) -> dict:
        return {
            "labels": [str(m) for m in self.signal_modes],
            "re": self.probabilities.tolist(),
            "im": np.zeros_like(self.probabilities).tolist(),
            "meta": {"subspace": dict(self.subspace),
                     "window": list(self.spectral_window) if self.spectral_window else None},
        }


def _window_omegas(config: SpdcConfig, window, points: int = 129) -> np.ndarray:
    """Uniform detuning samples spanning a top-hat wavelength window on the
    signal photon; narrow windows need their own fine sampling."""
    center, width = window
    omega0 = 2 * math.pi * C_LIGHT / config.signal.center_wavelength
    om_hi = 2 * math.pi * C_LIGHT / (center - width / 2) - omega0
    om_lo = 2 * math.pi * C_LIGHT / (center + width / 2) - omega0
    return np.linspace(om_lo, om_hi, points)


def joint_correlation_matrix(config: SpdcConfig, p_max: int, ell_max: int,
                             grid: DetuningGrid, window: tuple | None = None
                             ) -> ModeCorrelationMatrix:
    """Probabilities of all joint LG detections with p <= p_max, |ell| <= ell_max.

    Entry ((p_s, l_s), (p_i, l_i)) integrates |C|^2 over the grid (or over a
    top-hat signal-wavelength window); pairs violating OAM conservation are
    exactly zero.  The matrix is normalized to unit total over the subspace.
    """
    if p_max > 4 or ell_max > 6:
        raise ValueError("cost guard: p_max <= 4 and ell_max <= 6")
    if window is not None:
        center, width = window
        lams = grid.wavelengths(config.signal.center_wavelength)
        if not (lams.min() <= center - width / 2 and center + width / 2 <= lams.max()):
            raise ValueError("window must lie inside the grid span")
        omegas = _window_omegas(config, window)
    else:
        omegas = grid.omega_values
    weights = trapezoid_weights(omegas)

    modes = tuple(LGIndex(p, ell) for p in range(p_max + 1)
                  for ell in range(-ell_max, ell_max + 1))
    probs = np.zeros((len(modes), len(modes)))
    # one amplitude block per |ell| covers every (p_s, p_i) pair at once
    for ell_abs in range(ell_max + 1):
        block = amplitude_table(config, p_max, p_max, ell_abs, omegas)
        power = np.einsum("o,opq->pq", weights, np.abs(block) ** 2)
        for i, ms in enumerate(modes):
            if abs(ms.ell) != ell_abs:
                continue
            for j, mi in enumerate(modes):
                if mi.ell == -ms.ell:
                    probs[i, j] = power[ms.p, mi.p]
    probs /= probs.sum()
    return ModeCorrelationMatrix(
        signal_modes=modes, idler_modes=modes, probabilities=probs,
        spectral_window=window,
        subspace={"p_max": p_max, "ell_max": ell_max})


def spectral_overlap(config: SpdcConfig, channel_a: CollectionChannel,
                     channel_b: CollectionChannel, grid: DetuningGrid) -> complex:
    """Overlap integral of the unit-normalized spectra of two OAM channels."""
    sa = channel_spectrum(config, channel_a, grid).normalized()
    sb = channel_spectrum(config, channel_b, grid).normalized()
    if sa.grid.count != sb.grid.count or not np.array_equal(
            sa.grid.omega_values, sb.grid.omega_values):
        raise GridMismatch("spectra must share one detuning grid")
    w = trapezoid_weights(grid.omega_values)
    return complex(np.sum(w * sa.values * np.conj(sb.values)))


@dataclass(frozen=True)
class SpatialDensityMatrix:
    """Hermitian trace-1 PSD matrix over a list of two-photon basis labels."""

    labels: tuple
    matrix: np.ndarray
    subspace: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = len(self.labels)
        if m.shape != (d, d):
            raise ValueError("matrix shape must match the labels")
        if np.max(np.abs(m - m.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise ValueError("matrix must be Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-9:
            raise ValueError("matrix must have unit trace")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("matrix must be positive semidefinite")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def to_json_dict(self) -> dict:
        return {
            "labels": [list(l) if isinstance(l, tuple) else l for l in self.labels],
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
            "meta": {"subspace": dict(self.subspace)},
        }


def reduced_spatial_density(config: SpdcConfig, channels: list, grid: DetuningGrid
                            ) -> SpatialDensityMatrix:
    """Spatial density matrix after tracing the spectral domain.

    Entries are overlap integrals of the raw channel spectra, globally
    normalized to unit trace; Hermitian and PSD by construction (Gram matrix).
    """
    if not channels:
        raise ValueError("subspace must contain at least one channel")
    w = trapezoid_weights(grid.omega_values)
    spectra = [channel_spectrum(config, ch, grid).values for ch in channels]
    stack = np.asarray(spectra)
    gram = np.einsum("o,ao,bo->ab", w, stack, stack.conj())
    gram /= np.trace(gram).real
    gram = 0.5 * (gram + gram.conj().T)
    labels = tuple((ch.ell, -ch.ell) for ch in channels)
    sub = {"channels": [{"ell": ch.ell, "signal_waist": ch.signal_waist,
                         "idler_waist": ch.idler_waist} for ch in channels]}
    return SpatialDensityMatrix(labels=labels, matrix=gram, subspace=sub)


def purity(rho: SpatialDensityMatrix) -> float:
    """Tr(rho^2); 1 for pure states, 1/d for the maximally mixed state."""
    m = rho.matrix
    return float(np.trace(m @ m).real)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho: SpatialDensityMatrix, target: SpatialDensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.dimension != target.dimension:
        raise DimensionMismatch(
            f"dimension {rho.dimension} vs {target.dimension}")
    root = _psd_sqrt(rho.matrix)
    inner = _psd_sqrt(root @ target.matrix @ root)
    value = float(np.trace(inner).real ** 2)
    return min(value, 1.0)


def target_state(ell: int, ell_tilde: int, phase: float = 0.0,
                 labels: tuple | None = None) -> SpatialDensityMatrix:
    """Maximally entangled two-channel target (|l,-l> + e^{i phi}|lt,-lt>)/sqrt(2)."""
    if ell == ell_tilde:
        raise DegenerateSubspace("target needs two distinct OAM labels")
    vec = np.array([1.0, np.exp(1j * phase)]) / math.sqrt(2)
    rho = np.outer(vec, vec.conj())
    if labels is None:
        labels = ((ell, -ell), (ell_tilde, -ell_tilde))
    return SpatialDensityMatrix(labels=labels, matrix=rho,
                                subspace={"target": [ell, ell_tilde], "phase": phase})


def best_phase_fidelity(rho: SpatialDensityMatrix, ell: int, ell_tilde: int,
                        n_phases: int = 256) -> tuple[float, float]:
    """Fidelity maximized over the target phase; returns (fidelity, phase)."""
    best = (-1.0, 0.0)
    for phi in np.linspace(0.0, 2 * math.pi, n_phases, endpoint=False):
        f = fidelity(rho, target_state(ell, ell_tilde, phi, labels=rho.labels))
        if f > best[0]:
            best = (f, float(phi))
    return best
