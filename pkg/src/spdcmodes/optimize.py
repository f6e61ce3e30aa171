"""Collection-mode engineering: per-OAM waist matching and derivative-free
optimization of radial-mode superpositions against spectral cost functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .biphoton import (ComplexSpectrum, DetuningGrid, SpdcConfig, amplitude_table,
                       collection_probability, trapezoid_weights)
from .errors import NoCrossing
from .state import CollectionChannel, channel_spectrum


@dataclass(frozen=True)
class WaistSweepResult:
    """Collection probability of one OAM order over a range of waists."""

    ell: int
    waists: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        w = np.array(self.waists, dtype=float)
        p = np.array(self.probabilities, dtype=float)
        if w.shape != p.shape or w.ndim != 1:
            raise ValueError("waists and probabilities must be matching 1-D arrays")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        w.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "waists", w)
        object.__setattr__(self, "probabilities", p)

    @property
    def argmax_waist(self) -> float:
        return float(self.waists[int(np.argmax(self.probabilities))])


# Sweeps reach waists tight enough that sinc tails keep several percent of
# the mass outside any practical grid; level matching compares probabilities
# whose truncation bias largely cancels, so the sweep guard is looser.
_SWEEP_TAIL_TOLERANCE = 0.1


def _probability(config: SpdcConfig, ell: int, waist: float, grid: DetuningGrid) -> float:
    cfg = config.with_collection_waists(waist, waist)
    return collection_probability(cfg, 0, 0, ell, grid,
                                  tail_tolerance=_SWEEP_TAIL_TOLERANCE)


def waist_sweep(config: SpdcConfig, ell: int, w_range: tuple[float, float, float],
                grid: DetuningGrid, threads: int = 1) -> WaistSweepResult:
    """P_ell versus collection waist, signal and idler waists swept together."""
    w_min, w_max, step = w_range
    if step <= 0 or w_min >= w_max:
        raise ValueError("need step > 0 and min < max")
    n = int(round((w_max - w_min) / step)) + 1
    waists = w_min + step * np.arange(n)
    waists = waists[waists <= w_max * (1 + 1e-12)]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            probs = list(pool.map(lambda w: _probability(config, ell, w, grid), waists))
    else:
        probs = [_probability(config, ell, w, grid) for w in waists]
    return WaistSweepResult(ell=ell, waists=waists, probabilities=np.asarray(probs))


def _bisect_level(fn, lo, hi, level, rtol=1e-4, max_iter=200):
    """Waist where fn(w) == level inside a bracket with a sign change."""
    f_lo = fn(lo) - level
    f_hi = fn(hi) - level
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if f_lo * f_hi > 0:
        raise ValueError("bracket does not straddle the level")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid) - level
        if abs(f_mid) <= rtol * level:
            return mid
        if f_lo * f_mid <= 0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def match_collection_waists(config: SpdcConfig, ells: list[int], reference_ell: int,
                            grid: DetuningGrid, w_range: tuple[float, float],
                            step: float = 2e-6, branch: str = "small",
                            threads: int = 1) -> dict[int, float]:
    """Collection waist per OAM order equalizing P_ell to the reference level.

    The reference order keeps its probability-maximizing waist; every other
    order gets the waist where its curve crosses that level, taken on the
    small-waist side of its maximum by default (branch="large" picks the
    far side, where the spectrum is pulled back toward degeneracy instead).
    """
    if reference_ell not in ells:
        raise ValueError("reference_ell must be one of ells")
    if branch not in ("small", "large"):
        raise ValueError("branch must be 'small' or 'large'")
    w_min, w_max = w_range
    sweeps = {ell: waist_sweep(config, ell, (w_min, w_max, step), grid, threads=threads)
              for ell in ells}
    ref = sweeps[reference_ell]
    level = float(ref.probabilities.max())
    result = {reference_ell: ref.argmax_waist}

    for ell in ells:
        if ell == reference_ell:
            continue
        sweep = sweeps[ell]
        probs, waists = sweep.probabilities, sweep.waists
        peak = int(np.argmax(probs))
        if probs[peak] < level:
            raise NoCrossing(
                f"P_{ell} never reaches the reference level within the range")
        if branch == "small":
            side = range(peak, 0, -1)
        else:
            side = range(peak, len(probs) - 1)
        bracket = None
        for i in side:
            j = i - 1 if branch == "small" else i + 1
            if (probs[i] - level) * (probs[j] - level) <= 0:
                bracket = (min(waists[i], waists[j]), max(waists[i], waists[j]))
                break
        if bracket is None:
            raise NoCrossing(
                f"P_{ell} does not cross the reference level on the {branch} branch")
        result[ell] = _bisect_level(
            lambda w: _probability(config, ell, w, grid), *bracket, level)
    return result


@dataclass(frozen=True)
class SuperpositionModes:
    """Unit-norm coefficient arrays of the collection superpositions:
    A over idler radial indices, B over signal radial indices."""

    idler_coeffs: np.ndarray  # A
    signal_coeffs: np.ndarray  # B

    def __post_init__(self):
        a = np.array(self.idler_coeffs, dtype=complex)
        b = np.array(self.signal_coeffs, dtype=complex)
        if a.ndim != 1 or b.ndim != 1 or a.size == 0 or b.size == 0:
            raise ValueError("coefficient arrays must be nonempty 1-D")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "idler_coeffs", a)
        object.__setattr__(self, "signal_coeffs", b)

    @property
    def p_max(self) -> int:
        return self.idler_coeffs.size - 1

    def normalized(self) -> "SuperpositionModes":
        return SuperpositionModes(
            self.idler_coeffs / np.linalg.norm(self.idler_coeffs),
            self.signal_coeffs / np.linalg.norm(self.signal_coeffs))

    def canonical(self) -> "SuperpositionModes":
        """Normalized, with the global phases rotated so A[0], B[0] >= 0."""
        m = self.normalized()
        a, b = m.idler_coeffs.copy(), m.signal_coeffs.copy()
        for arr in (a, b):
            pivot = arr[np.argmax(np.abs(arr))] if abs(arr[0]) < 1e-14 else arr[0]
            if abs(pivot) > 0:
                arr *= np.conj(pivot) / abs(pivot)
        return SuperpositionModes(a, b)

    @staticmethod
    def uniform(p_max: int) -> "SuperpositionModes":
        ones = np.ones(p_max + 1, dtype=complex)
        return SuperpositionModes(ones, ones).normalized()


class _ChannelTable:
    """Per-ell cache of C[omega, p_s, p_i] blocks and the grid weights."""

    def __init__(self, config: SpdcConfig, p_max: int, grid: DetuningGrid):
        self.config = config
        self.p_max = p_max
        self.grid = grid
        self.weights = trapezoid_weights(grid.omega_values)
        self._blocks: dict[int, np.ndarray] = {}

    def block(self, ell: int) -> np.ndarray:
        key = abs(ell)
        if key not in self._blocks:
            self._blocks[key] = amplitude_table(
                self.config, self.p_max, self.p_max, key, self.grid.omega_values)
        return self._blocks[key]

    def combined(self, modes: SuperpositionModes, ell: int) -> np.ndarray:
        m = modes.normalized()
        return np.einsum("opq,p,q->o", self.block(ell),
                         m.signal_coeffs, m.idler_coeffs)

    def total_power(self, ell: int) -> float:
        block = self.block(ell)
        return float(np.einsum("o,opq->", self.weights, np.abs(block) ** 2))


def overlap_deficit(values_a: np.ndarray, values_b: np.ndarray,
                    weights: np.ndarray) -> float:
    """1 - |<a,b>|^2 / (||a||^2 ||b||^2); in [0, 1] by Cauchy-Schwarz."""
    inner = np.sum(weights * values_a * np.conj(values_b))
    norm_a = np.sum(weights * np.abs(values_a) ** 2)
    norm_b = np.sum(weights * np.abs(values_b) ** 2)
    value = 1.0 - abs(inner) ** 2 / (norm_a * norm_b)
    return float(min(max(value, 0.0), 1.0))


def cost_target_spectrum(modes: SuperpositionModes, ell: int,
                         target: ComplexSpectrum, config: SpdcConfig,
                         grid: DetuningGrid, table: _ChannelTable | None = None) -> float:
    """1 - |<target, C_uv>|^2 with the combined spectrum renormalized per call."""
    if table is None:
        table = _ChannelTable(config, modes.p_max, grid)
    values = table.combined(modes, ell)
    w = table.weights
    norm = math.sqrt(float(np.sum(w * np.abs(values) ** 2)))
    inner = np.sum(w * np.conj(target.values) * values / norm)
    return float(min(max(1.0 - abs(inner) ** 2, 0.0), 1.0))


def cost_brightness(modes: SuperpositionModes, ell: int, config: SpdcConfig,
                    p_max: int, grid: DetuningGrid,
                    table: _ChannelTable | None = None) -> float:
    """1 - (collected power of the superposition) / (total subspace power)."""
    if modes.p_max != p_max:
        raise ValueError("coefficient arrays must cover p = 0..p_max")
    if table is None:
        table = _ChannelTable(config, p_max, grid)
    values = table.combined(modes, ell)
    collected = float(np.sum(table.weights * np.abs(values) ** 2))
    value = 1.0 - collected / table.total_power(ell)
    return float(min(max(value, 0.0), 1.0))


def cost_spectral_match(modes_a: SuperpositionModes, modes_b: SuperpositionModes,
                        ell: int, ell_prime: int, config: SpdcConfig,
                        grid: DetuningGrid, table: _ChannelTable | None = None) -> float:
    """Normalized overlap deficit between the combined spectra of two OAM orders."""
    if table is None:
        table = _ChannelTable(config, max(modes_a.p_max, modes_b.p_max), grid)
    va = table.combined(modes_a, ell)
    vb = table.combined(modes_b, ell_prime)
    return overlap_deficit(va, vb, table.weights)


@dataclass(frozen=True)
class MinimizeOptions:
    max_iterations: int = 5000
    cost_tolerance: float = 1e-8  # spread of simplex costs at convergence
    simplex_step: float = 0.1


@dataclass(frozen=True)
class MinimizeResult:
    modes: SuperpositionModes
    cost: float
    iterations: int
    converged: bool  # False means the iteration cap was hit (best-so-far returned)


def nelder_mead(fn, x0: np.ndarray, options: MinimizeOptions) -> tuple[np.ndarray, float, int, bool]:
    """Downhill simplex over a real vector; deterministic given the start."""
    alpha, gamma, beta, delta = 1.0, 2.0, 0.5, 0.5
    n = x0.size
    simplex = [np.array(x0, dtype=float)]
    for k in range(n):
        v = np.array(x0, dtype=float)
        v[k] += options.simplex_step
        simplex.append(v)
    costs = [fn(v) for v in simplex]

    iterations = 0
    converged = False
    while iterations < options.max_iterations:
        iterations += 1
        order = np.argsort(costs, kind="stable")
        simplex = [simplex[i] for i in order]
        costs = [costs[i] for i in order]
        if costs[-1] - costs[0] <= options.cost_tolerance:
            converged = True
            break

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        reflected = centroid + alpha * (centroid - worst)
        f_ref = fn(reflected)
        if costs[0] <= f_ref < costs[-2]:
            simplex[-1], costs[-1] = reflected, f_ref
            continue
        if f_ref < costs[0]:
            expanded = centroid + gamma * (centroid - worst)
            f_exp = fn(expanded)
            if f_exp < f_ref:
                simplex[-1], costs[-1] = expanded, f_exp
            else:
                simplex[-1], costs[-1] = reflected, f_ref
            continue
        contracted = centroid + beta * (worst - centroid)
        f_con = fn(contracted)
        if f_con < costs[-1]:
            simplex[-1], costs[-1] = contracted, f_con
            continue
        best = simplex[0]
        simplex = [best] + [best + delta * (v - best) for v in simplex[1:]]
        costs = [costs[0]] + [fn(v) for v in simplex[1:]]

    i_best = int(np.argmin(costs))
    return simplex[i_best], float(costs[i_best]), iterations, converged


def _pack(modes: SuperpositionModes) -> np.ndarray:
    flat = np.concatenate([modes.idler_coeffs, modes.signal_coeffs])
    return np.column_stack([flat.real, flat.imag]).ravel()


def _unpack(x: np.ndarray) -> SuperpositionModes:
    z = x.reshape(-1, 2)
    flat = z[:, 0] + 1j * z[:, 1]
    half = flat.size // 2
    return SuperpositionModes(flat[:half], flat[half:])


def minimize(cost_fn, start: SuperpositionModes,
             options: MinimizeOptions | None = None) -> MinimizeResult:
    """Simplex minimization of a cost over the interleaved real/imaginary
    parts of the idler and signal coefficient arrays.

    The cost function receives renormalized SuperpositionModes on every
    evaluation; the returned coefficients are canonical (unit norm, leading
    entries rotated real nonnegative, which fixes the global-phase gauge).
    """
    if options is None:
        options = MinimizeOptions()

    def wrapped(x):
        return cost_fn(_unpack(x).normalized())

    x, cost, iters, converged = nelder_mead(wrapped, _pack(start.normalized()), options)
    return MinimizeResult(modes=_unpack(x).canonical(), cost=cost,
                          iterations=iters, converged=converged)


@dataclass(frozen=True)
class ModeOptimizationReport:
    """Result of the brightness + spectral-match pipeline over several ells."""

    reference_ell: int
    p_max: int
    reference: MinimizeResult
    matched: dict = field(default_factory=dict)  # ell -> MinimizeResult

    def spectra(self, config: SpdcConfig, grid: DetuningGrid) -> dict:
        out = {}
        for ell, res in [(self.reference_ell, self.reference)] + list(self.matched.items()):
            ch = CollectionChannel(ell, config.signal.waist, config.idler.waist,
                                   signal_coeffs=tuple(res.modes.signal_coeffs),
                                   idler_coeffs=tuple(res.modes.idler_coeffs))
            out[ell] = channel_spectrum(config, ch, grid)
        return out


def optimize_mode_superpositions(config: SpdcConfig, ells: list[int], p_max: int,
                                 grid: DetuningGrid, reference_ell: int | None = None,
                                 options: MinimizeOptions | None = None
                                 ) -> ModeOptimizationReport:
    """Brightness-optimize the reference OAM order, then match every other
    order's spectrum to it (overlap deficit), all from uniform starts."""
    if reference_ell is None:
        reference_ell = max(ells, key=abs)
    if reference_ell not in ells:
        raise ValueError("reference_ell must be one of ells")
    table = _ChannelTable(config, p_max, grid)
    start = SuperpositionModes.uniform(p_max)

    ref = minimize(
        lambda m: cost_brightness(m, reference_ell, config, p_max, grid, table),
        start, options)
    matched = {}
    for ell in ells:
        if ell == reference_ell:
            continue
        matched[ell] = minimize(
            lambda m, e=ell: cost_spectral_match(
                ref.modes, m, reference_ell, e, config, grid, table),
            start, options)
    return ModeOptimizationReport(reference_ell=reference_ell, p_max=p_max,
                                  reference=ref, matched=matched)
