"""Projective two-photon tomography on 2-D OAM subspaces: simulated
coincidence counts and maximum-likelihood density-matrix reconstruction.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSubspace, EmptyMatrix
from .optimize import MinimizeOptions, nelder_mead
from .state import SpatialDensityMatrix

# single-photon analysis states on the 2-D subspace {|l>, |lt>}
STATE_LABELS = ("l", "lt", "l+lt", "l-lt", "l+ilt", "l-ilt")

_SQ = 1 / math.sqrt(2)
_STATE_VECTORS = {
    "l": np.array([1.0, 0.0], dtype=complex),
    "lt": np.array([0.0, 1.0], dtype=complex),
    "l+lt": np.array([_SQ, _SQ], dtype=complex),
    "l-lt": np.array([_SQ, -_SQ], dtype=complex),
    "l+ilt": np.array([_SQ, 1j * _SQ], dtype=complex),
    "l-ilt": np.array([_SQ, -1j * _SQ], dtype=complex),
}

# the three per-photon bases resolve the identity basis by basis
_BASIS_PARTITION = (("l", "lt"), ("l+lt", "l-lt"), ("l+ilt", "l-ilt"))

# number of complete joint basis settings: sum of Born probabilities over all
# 36 projectors equals 9 for any trace-1 state
_SETTINGS = 9


@dataclass(frozen=True)
class ProjectorSet:
    """The 36 rank-1 joint projectors of the standard 2-qubit-style set,
    signal-major order."""

    ell: int
    ell_tilde: int
    signal_labels: tuple
    idler_labels: tuple
    projectors: np.ndarray  # (36, 4, 4)

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        return np.einsum("jab,ba->j", self.projectors, rho).real


def projector_set(ell: int, ell_tilde: int) -> ProjectorSet:
    """Joint projectors from the 6 per-photon states on each arm.

    The signal arm spans {|l>, |lt>}, the idler arm {|-l>, |-lt>}; both embed
    in the same 2-D coordinates, so the projectors are label-independent and
    the subspace labels are carried for bookkeeping only.
    """
    if ell == ell_tilde:
        raise DegenerateSubspace("tomography subspace needs distinct OAM labels")
    projectors = []
    labels_s, labels_i = [], []
    for ls in STATE_LABELS:
        for li in STATE_LABELS:
            vec = np.kron(_STATE_VECTORS[ls], _STATE_VECTORS[li])
            projectors.append(np.outer(vec, vec.conj()))
            labels_s.append(ls)
            labels_i.append(li)
    return ProjectorSet(ell=ell, ell_tilde=ell_tilde,
                        signal_labels=tuple(labels_s), idler_labels=tuple(labels_i),
                        projectors=np.asarray(projectors))


@dataclass(frozen=True)
class TomographyRun:
    """One tomography data set: projector set plus 36 coincidence counts."""

    projectors: ProjectorSet
    counts: np.ndarray
    total_counts: int
    rng_seed: int | None = None  # present when the counts were simulated

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.shape != (36,):
            raise ValueError("need exactly 36 counts")
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)


def embed_pair_state(rho: SpatialDensityMatrix) -> np.ndarray:
    """Embed a 2-channel spatial density matrix into the 4-D joint space.

    Channel k occupies the product basis state |k>_signal |k>_idler, i.e. the
    (0,0) and (3,3) block positions of the 4x4 matrix; cross terms sit on the
    anti-diagonal corners.
    """
    if rho.dimension != 2:
        raise ValueError("only 2-channel subspaces embed into the 4-D joint space")
    out = np.zeros((4, 4), dtype=complex)
    idx = (0, 3)
    for a in range(2):
        for b in range(2):
            out[idx[a], idx[b]] = rho.matrix[a, b]
    return out


def embedded_state(rho: SpatialDensityMatrix, ell: int, ell_tilde: int
                   ) -> SpatialDensityMatrix:
    """2-channel spatial state as a 4-D joint-space density matrix."""
    labels = ((ell, -ell), (ell, -ell_tilde), (ell_tilde, -ell), (ell_tilde, -ell_tilde))
    return SpatialDensityMatrix(labels=labels, matrix=embed_pair_state(rho),
                                subspace={"ell": ell, "ell_tilde": ell_tilde,
                                          **rho.subspace})


def simulate_counts(rho: np.ndarray | SpatialDensityMatrix, projectors: ProjectorSet,
                    total_counts: int, seed: int | None = None) -> TomographyRun:
    """Coincidence counts with Poisson statistics (or noiseless rounding).

    Expected count of projector j is total_counts * Tr(rho P_j) / 9, so the
    expected grand total equals total_counts.
    """
    if isinstance(rho, SpatialDensityMatrix):
        rho = embed_pair_state(rho)
    if total_counts <= 0:
        raise ValueError("total_counts must be positive")
    probs = projectors.probabilities(rho)
    means = total_counts * np.clip(probs, 0.0, None) / _SETTINGS
    if seed is None:
        counts = np.rint(means).astype(np.int64)
    else:
        counts = np.random.default_rng(seed).poisson(means).astype(np.int64)
    return TomographyRun(projectors=projectors, counts=counts,
                         total_counts=int(total_counts), rng_seed=seed)


def _t_params_to_rho(t: np.ndarray) -> np.ndarray:
    """Lower-triangular T from 16 real parameters; rho = T+ T / Tr(T+ T)."""
    T = np.zeros((4, 4), dtype=complex)
    T[np.diag_indices(4)] = t[:4]
    lower = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]
    for k, (r, c) in enumerate(lower):
        T[r, c] = t[4 + 2 * k] + 1j * t[5 + 2 * k]
    rho = T.conj().T @ T
    tr = np.trace(rho).real
    if tr <= 0:
        return np.eye(4, dtype=complex) / 4.0
    return rho / tr


def _rho_to_t_params(rho: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 1e-10, None)
    psd = (vecs * vals) @ vecs.conj().T
    psd /= np.trace(psd).real
    # lower-triangular T with T+ T = psd: flip-conjugate the Cholesky factor
    flip = np.eye(4)[::-1]
    T = flip @ np.linalg.cholesky(flip @ psd @ flip).conj().T @ flip
    t = np.zeros(16)
    t[:4] = np.diag(T).real
    lower = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]
    for k, (r, c) in enumerate(lower):
        t[4 + 2 * k] = T[r, c].real
        t[5 + 2 * k] = T[r, c].imag
    return t


def _neg_log_likelihood(counts: np.ndarray, probs: np.ndarray, scale: float) -> float:
    mu = np.clip(scale * probs, 1e-12, None)
    return float(np.sum(mu - counts * np.log(mu)))


def _linear_inversion(run: TomographyRun) -> np.ndarray:
    """Least-squares estimate of rho from the measured frequencies, projected
    back to the PSD trace-1 cone; used as a restart point."""
    scale = run.counts.sum() / _SETTINGS
    freqs = run.counts / max(scale, 1.0)
    # real parametrization of Hermitian rho: 16 basis matrices
    basis = []
    for a in range(4):
        for b in range(4):
            m = np.zeros((4, 4), dtype=complex)
            if a == b:
                m[a, a] = 1.0
            elif a < b:
                m[a, b] = m[b, a] = 1.0
            else:
                m[b, a] = 1j
                m[a, b] = -1j
            basis.append(m)
    design = np.array([[np.einsum("ab,ba->", P, m).real for m in basis]
                       for P in run.projectors.projectors])
    coeff, *_ = np.linalg.lstsq(design, freqs, rcond=None)
    rho = sum(c * m for c, m in zip(coeff, basis))
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    return rho


@dataclass(frozen=True)
class MleResult:
    rho: SpatialDensityMatrix
    log_likelihood: float
    iterations: int
    converged: bool


def mle_reconstruct(run: TomographyRun, options: MinimizeOptions | None = None) -> MleResult:
    """Maximum-likelihood density matrix from a tomography run.

    Minimizes the Poisson negative log-likelihood over the Cholesky-style
    parameters with the shared simplex minimizer, starting from the maximally
    mixed state; when the first pass fails to converge it restarts once from
    the PSD-projected linear-inversion estimate and keeps the better result.
    The brightness scale is profiled out exactly (sum of Born probabilities
    over the full projector set is 9 for any trace-1 state).
    """
    if options is None:
        options = MinimizeOptions(max_iterations=5000, cost_tolerance=1e-8,
                                  simplex_step=0.05)
    counts = run.counts.astype(float)
    scale = counts.sum() / _SETTINGS
    projectors = run.projectors

    def cost(t):
        rho = _t_params_to_rho(t)
        return _neg_log_likelihood(counts, projectors.probabilities(rho), scale)

    start = _rho_to_t_params(np.eye(4, dtype=complex) / 4.0)
    x1, f1, it1, conv1 = nelder_mead(cost, start, options)
    best, iterations, converged = (x1, f1), it1, conv1
    if not conv1:
        x2, f2, it2, conv2 = nelder_mead(cost, _rho_to_t_params(_linear_inversion(run)),
                                         options)
        iterations += it2
        converged = conv2
        if f2 < best[1]:
            best = (x2, f2)

    rho = _t_params_to_rho(best[0])
    rho = 0.5 * (rho + rho.conj().T)
    l, lt = run.projectors.ell, run.projectors.ell_tilde
    labels = ((l, -l), (l, -lt), (lt, -l), (lt, -lt))
    sdm = SpatialDensityMatrix(
        labels=labels, matrix=rho,
        subspace={"ell": l, "ell_tilde": lt})
    return MleResult(rho=sdm, log_likelihood=-best[1], iterations=iterations,
                     converged=converged)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) * sum of singular values of the Hermitian difference."""
    vals = np.linalg.eigvalsh(np.asarray(a) - np.asarray(b))
    return float(0.5 * np.sum(np.abs(vals)))


def visibility(crosstalk: np.ndarray) -> float:
    """Diagonal mass over total mass of a nonnegative crosstalk matrix."""
    m = np.asarray(crosstalk, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("crosstalk matrix must be square")
    if np.any(m < 0):
        raise ValueError("crosstalk entries must be nonnegative")
    total = m.sum()
    if total == 0:
        raise EmptyMatrix("crosstalk matrix has no counts")
    return float(np.trace(m) / total)


COUNTS_HEADER = ("setting_index", "signal_state", "idler_state", "counts")


def write_counts_csv(path, run: TomographyRun) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COUNTS_HEADER)
        for j in range(36):
            writer.writerow([j, run.projectors.signal_labels[j],
                             run.projectors.idler_labels[j], int(run.counts[j])])


def read_counts_csv(path, ell: int, ell_tilde: int) -> TomographyRun:
    """Load a counts file, validating the schema row by row."""
    pset = projector_set(ell, ell_tilde)
    counts = np.full(36, -1, dtype=np.int64)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != COUNTS_HEADER:
            raise ValueError(f"{path}: header must be {','.join(COUNTS_HEADER)}")
        for rowno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ValueError(f"{path}:{rowno}: expected 4 columns")
            try:
                j = int(row[0])
                n = int(row[3])
            except ValueError as exc:
                raise ValueError(f"{path}:{rowno}: non-integer index or counts") from exc
            if not 0 <= j < 36:
                raise ValueError(f"{path}:{rowno}: setting_index {j} outside 0..35")
            if row[1] not in STATE_LABELS or row[2] not in STATE_LABELS:
                raise ValueError(f"{path}:{rowno}: unknown state label")
            if (row[1], row[2]) != (pset.signal_labels[j], pset.idler_labels[j]):
                raise ValueError(f"{path}:{rowno}: labels do not match setting {j}")
            if n < 0:
                raise ValueError(f"{path}:{rowno}: counts must be nonnegative")
            counts[j] = n
    if np.any(counts < 0):
        missing = np.nonzero(counts < 0)[0]
        raise ValueError(f"{path}: missing settings {missing.tolist()}")
    return TomographyRun(projectors=pset, counts=counts, total_counts=int(counts.sum()))
