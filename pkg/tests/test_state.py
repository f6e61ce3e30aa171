import math

import numpy as np
import pytest

from spdcmodes import (CollectionChannel, DetuningGrid, fidelity, joint_correlation_matrix,
                       purity, reduced_spatial_density, spectral_overlap, target_state)
from spdcmodes.errors import DegenerateSubspace, DimensionMismatch
from spdcmodes.lgmodes import LGIndex
from spdcmodes.state import SpatialDensityMatrix, best_phase_fidelity


def bell(ell=1, ell_tilde=2, phase=0.0):
    return target_state(ell, ell_tilde, phase)


# --------------------------------------------------------- correlation matrix

def test_broadband_correlation_structure(fig2_config, grid_fig2):
    m = joint_correlation_matrix(fig2_config, 2, 3, grid_fig2)
    probs = m.probabilities
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)
    # OAM-violating entries are exactly zero
    for i, ms in enumerate(m.signal_modes):
        for j, mi in enumerate(m.idler_modes):
            if ms.ell + mi.ell != 0:
                assert probs[i, j] == 0.0
    # anti-diagonal (p=0) entries decrease with |ell|
    diag = [m.entry(LGIndex(0, ell), LGIndex(0, -ell)) for ell in range(4)]
    assert all(a > b for a, b in zip(diag, diag[1:]))
    assert max(diag) == probs.max()  # fundamental dominates broadband


def test_correlation_sign_relabeling_invariance(fig2_config, grid_fig2):
    m = joint_correlation_matrix(fig2_config, 1, 2, grid_fig2)
    for ms in m.signal_modes:
        for mi in m.idler_modes:
            if ms.ell + mi.ell != 0:
                continue
            flipped_s = LGIndex(ms.p, -ms.ell)
            flipped_i = LGIndex(mi.p, -mi.ell)
            assert m.entry(ms, mi) == m.entry(flipped_s, flipped_i)


def test_narrowband_prunes_modes(fig2_config, grid_fig2):
    broad = joint_correlation_matrix(fig2_config, 2, 3, grid_fig2)
    narrow = joint_correlation_matrix(fig2_config, 2, 3, grid_fig2,
                                      window=(809.66e-9, 0.03e-9))
    n_broad = int((broad.probabilities > 0.01).sum())
    n_narrow = int((narrow.probabilities > 0.01).sum())
    assert n_narrow < n_broad


def test_window_outside_grid_rejected(fig2_config, grid_fig2):
    with pytest.raises(ValueError):
        joint_correlation_matrix(fig2_config, 1, 1, grid_fig2,
                                 window=(830e-9, 0.03e-9))


def test_correlation_cost_guard(fig2_config, grid_fig2):
    with pytest.raises(ValueError):
        joint_correlation_matrix(fig2_config, 5, 3, grid_fig2)


# ----------------------------------------------------------- spectral overlap

def test_self_overlap_is_unity(fig3_config, grid_fig3):
    ch = CollectionChannel(2, 29e-6)
    a = spectral_overlap(fig3_config, ch, ch, grid_fig3)
    assert abs(a) == pytest.approx(1.0, abs=1e-9)


def test_overlap_bounded_by_one(fig3_config, grid_fig3):
    pairs = [(CollectionChannel(1, 25e-6), CollectionChannel(4, 42e-6)),
             (CollectionChannel(1, 85e-6), CollectionChannel(4, 42e-6)),
             (CollectionChannel(0, 42e-6), CollectionChannel(2, 42e-6))]
    for a, b in pairs:
        v = spectral_overlap(fig3_config, a, b, grid_fig3)
        assert abs(v) <= 1 + 1e-12


def test_matched_waists_overlap_near_unity(fig3_config, grid_fig3):
    a = spectral_overlap(fig3_config, CollectionChannel(1, 25e-6),
                         CollectionChannel(4, 42e-6), grid_fig3)
    assert abs(a) > 0.9


def test_large_branch_overlap_markedly_reduced(fig3_config, grid_fig3):
    a = spectral_overlap(fig3_config, CollectionChannel(1, 85e-6),
                         CollectionChannel(4, 42e-6), grid_fig3)
    assert abs(a) < 0.7


# ------------------------------------------------------------- density matrix

def test_single_channel_density_is_scalar_one(fig3_config, grid_fig3):
    rho = reduced_spatial_density(fig3_config, [CollectionChannel(2, 29e-6)], grid_fig3)
    assert rho.matrix.shape == (1, 1)
    assert rho.matrix[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_table_matched_pair_purity(fig3_config, grid_fig3):
    rho = reduced_spatial_density(
        fig3_config, [CollectionChannel(1, 25e-6), CollectionChannel(4, 42e-6)],
        grid_fig3)
    assert purity(rho) == pytest.approx(0.98, abs=0.01)


def test_table_large_branch_purity(fig3_config, grid_fig3):
    rho = reduced_spatial_density(
        fig3_config, [CollectionChannel(1, 85e-6), CollectionChannel(4, 42e-6)],
        grid_fig3)
    assert purity(rho) == pytest.approx(0.63, abs=0.04)


def test_density_psd_on_random_subspaces(fig3_config):
    rng = np.random.default_rng(11)
    grid = DetuningGrid.from_span_nm(fig3_config.signal.center_wavelength, 501, 6.0)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        ells = rng.choice(np.arange(5), size=n, replace=False)
        chans = [CollectionChannel(int(e), float(rng.uniform(20e-6, 90e-6)))
                 for e in ells]
        rho = reduced_spatial_density(fig3_config, chans, grid)
        assert np.linalg.eigvalsh(rho.matrix).min() >= -1e-10
        assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-9)


def test_offdiagonal_cauchy_schwarz(fig3_config, grid_fig3):
    chans = [CollectionChannel(1, 25e-6), CollectionChannel(2, 29e-6),
             CollectionChannel(4, 42e-6)]
    rho = reduced_spatial_density(fig3_config, chans, grid_fig3)
    m = rho.matrix
    for i in range(3):
        for j in range(3):
            bound = math.sqrt(m[i, i].real * m[j, j].real)
            assert abs(m[i, j]) <= bound + 1e-12


# ------------------------------------------------------------ purity/fidelity

def test_purity_trivials():
    assert purity(bell()) == pytest.approx(1.0, abs=1e-12)
    mixed = SpatialDensityMatrix(labels=("a", "b"), matrix=np.eye(2) / 2)
    assert purity(mixed) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_trivials():
    rho = bell()
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    basis = SpatialDensityMatrix(labels=rho.labels,
                                 matrix=np.diag([1.0, 0.0]).astype(complex))
    assert fidelity(basis, rho) == pytest.approx(0.5, abs=1e-12)


def test_fidelity_dimension_mismatch():
    rho3 = SpatialDensityMatrix(labels=("a", "b", "c"), matrix=np.eye(3) / 3)
    with pytest.raises(DimensionMismatch):
        fidelity(rho3, bell())


def test_fidelity_near_one_for_perturbed_target():
    rho = bell()
    eps = 1e-8
    perturbed = (1 - eps) * rho.matrix + eps * np.eye(2) / 2
    sdm = SpatialDensityMatrix(labels=rho.labels, matrix=perturbed)
    assert fidelity(sdm, rho) > 1 - 1e-6


def test_target_state_values():
    t0 = target_state(1, 2, 0.0)
    assert np.allclose(t0.matrix, 0.5 * np.ones((2, 2)))
    tpi = target_state(1, 2, math.pi)
    assert tpi.matrix[0, 1] == pytest.approx(-0.5, abs=1e-12)
    assert purity(tpi) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DegenerateSubspace):
        target_state(2, 2)


def test_best_phase_fidelity_finds_sign(fig3_config, grid_fig3):
    # odd ell difference flips the overlap sign; the swept fidelity must win
    chans = [CollectionChannel(1, 25e-6), CollectionChannel(2, 29e-6)]
    rho = reduced_spatial_density(fig3_config, chans, grid_fig3)
    f0 = fidelity(rho, target_state(1, 2, 0.0))
    fbest, phi = best_phase_fidelity(rho, 1, 2)
    assert fbest > f0
    assert fbest == pytest.approx(0.99, abs=0.01)
    assert phi == pytest.approx(math.pi, abs=0.1)


def test_json_schema_round_trip(fig3_config, grid_fig3):
    import json
    chans = [CollectionChannel(1, 25e-6), CollectionChannel(2, 29e-6)]
    rho = reduced_spatial_density(fig3_config, chans, grid_fig3)
    payload = json.loads(json.dumps(rho.to_json_dict()))
    assert payload["labels"] == [[1, -1], [2, -2]]
    re = np.array(payload["re"])
    im = np.array(payload["im"])
    assert np.allclose(re + 1j * im, rho.matrix)
    assert "subspace" in payload["meta"]
