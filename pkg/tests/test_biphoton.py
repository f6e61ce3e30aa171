from dataclasses import replace

import numpy as np
import pytest

from spdcmodes import DetuningGrid, collection_probability, make_config, mode_amplitude, spectrum
from spdcmodes.biphoton import amplitude_table, trapezoid_weights
from spdcmodes.errors import DetuningOutOfRange, EnergyMismatch, GridTooNarrow

# frozen output of the node-doubled brute-force quadrature (see test_oracle)
GOLDEN_C000_FIG3 = 57.697680942561


def test_amplitude_golden_against_oracle_value(fig3_config):
    value = mode_amplitude(fig3_config, 0, 0, 0, 0.0)
    assert abs(value - GOLDEN_C000_FIG3) / abs(GOLDEN_C000_FIG3) < 1e-4


def test_high_oam_amplitude_smaller_at_center(fig3_config):
    c0 = abs(mode_amplitude(fig3_config, 0, 0, 0, 0.0))
    c4 = abs(mode_amplitude(fig3_config, 0, 0, 4, 0.0))
    assert c4 < c0


def test_amplitude_depends_on_abs_ell(fig3_config):
    for omega in (0.0, 3e11, -7e11):
        plus = mode_amplitude(fig3_config, 1, 0, 3, omega)
        minus = mode_amplitude(fig3_config, 1, 0, -3, omega)
        assert plus == minus  # bit-identical: the formula consumes |ell|


def test_amplitude_is_real_for_ideal_qpm(fig3_config):
    # z -> -z maps the integrand to its conjugate, so the crystal integral is real
    for ell in (0, 2):
        v = mode_amplitude(fig3_config, 1, 1, ell, 4.0e11)
        assert abs(v.imag) < 1e-12 * abs(v)


def test_conjugation_symmetry_under_role_swap(fig3_config):
    swapped = fig3_config.swapped_roles()
    for ell in (0, 1, 3):
        for omega in (2.5e11, -6e11):
            direct = mode_amplitude(fig3_config, 1, 2, ell, omega)
            mirrored = mode_amplitude(swapped, 2, 1, ell, -omega)
            assert mirrored == pytest.approx(direct, rel=1e-10)


def test_detuning_window_enforced(fig3_config):
    limit = 0.05 * fig3_config.omega_signal0
    with pytest.raises(DetuningOutOfRange):
        mode_amplitude(fig3_config, 0, 0, 0, 1.01 * limit)


def test_energy_conservation_enforced(fig3_config):
    from spdcmodes.lgmodes import BeamSpec
    with pytest.raises(EnergyMismatch):
        replace(fig3_config, signal=BeamSpec(42e-6, 812e-9))


def test_spectrum_peak_at_degeneracy_for_fundamental(fig2_config, grid_fig2):
    spec = spectrum(fig2_config, 0, 0, 0, grid_fig2)
    peak = np.argmax(np.abs(spec.values))
    lam = grid_fig2.wavelengths(fig2_config.signal.center_wavelength)
    # within ~0.15 nm of the degenerate wavelength (collection momentum spread
    # shifts even the fundamental slightly)
    assert abs(lam[peak] - fig2_config.signal.center_wavelength) < 0.15e-9


def test_higher_oam_centroid_shifted(fig2_config, grid_fig2):
    om = grid_fig2.omega_values
    w = trapezoid_weights(om)

    def centroid(ell):
        d = np.abs(spectrum(fig2_config, 0, 0, ell, grid_fig2).values) ** 2 * w
        return float((d * om).sum() / d.sum())

    assert abs(centroid(1) - centroid(0)) > 1e11  # rad/s


def test_normalized_spectrum_unit_l2(fig3_config, grid_fig3):
    spec = spectrum(fig3_config, 0, 0, 1, grid_fig3, normalize=True)
    assert spec.l2_norm() == pytest.approx(1.0, abs=1e-9)
    assert spec.normalization == "unit_l2"


def test_collection_probability_grid_convergence(fig3_config):
    lam0 = fig3_config.signal.center_wavelength
    coarse = collection_probability(fig3_config, 0, 0, 1,
                                    DetuningGrid.from_span_nm(lam0, 2001, 6.0))
    fine = collection_probability(fig3_config, 0, 0, 1,
                                  DetuningGrid.from_span_nm(lam0, 4001, 6.0))
    assert fine == pytest.approx(coarse, rel=1e-6)


def test_collection_probability_rejects_narrow_grid(fig3_config):
    lam0 = fig3_config.signal.center_wavelength
    with pytest.raises(GridTooNarrow):
        collection_probability(fig3_config, 0, 0, 4,
                               DetuningGrid.from_span_nm(lam0, 501, 0.5))


def test_z_order_convergence(fig3_config, grid_fig3):
    omegas = np.array([0.0, grid_fig3.omega_values[-1] / 2,
                       -grid_fig3.omega_values[-1] / 2])
    for ell in range(5):
        c64 = amplitude_table(replace(fig3_config, z_order=64), 0, 0, ell, omegas)
        c128 = amplitude_table(replace(fig3_config, z_order=128), 0, 0, ell, omegas)
        assert np.max(np.abs(c64 - c128) / np.abs(c128)) < 1e-9


def test_residual_mismatch_shifts_spectrum(ktp):
    from spdcmodes import CrystalSpec
    from dataclasses import replace as drep
    crystal = CrystalSpec(length=10e-3, dispersion=ktp)
    base = make_config(crystal, 405e-9, 142e-6, 42e-6)
    detuned = drep(base, residual_mismatch=2000.0)  # rad/m
    grid = DetuningGrid.from_span_nm(base.signal.center_wavelength, 1001, 6.0)
    peak_base = np.argmax(np.abs(spectrum(base, 0, 0, 0, grid).values))
    peak_det = np.argmax(np.abs(spectrum(detuned, 0, 0, 0, grid).values))
    assert peak_det != peak_base


def test_explicit_poling_period_sets_residual(ktp):
    from spdcmodes import CrystalSpec
    crystal = CrystalSpec(length=10e-3, dispersion=ktp, poling_period=10.2e-6)
    cfg = make_config(crystal, 405e-9, 142e-6, 42e-6)
    assert cfg.residual_mismatch != 0.0


def test_grid_invariants():
    with pytest.raises(ValueError):
        DetuningGrid(np.array([0.0, 1.0, 1.5]))  # non-uniform
    with pytest.raises(ValueError):
        DetuningGrid(np.array([-1.0, 0.0, 2.0]))  # asymmetric
    grid = DetuningGrid.from_span(101, 5e12)
    assert grid.count == 101
    assert grid.omega_values[50] == 0.0


def test_deterministic_and_batch_consistent(fig3_config, grid_fig3):
    omegas = grid_fig3.omega_values[::400]
    block = amplitude_table(fig3_config, 1, 1, 2, omegas)
    again = amplitude_table(fig3_config, 1, 1, 2, omegas)
    assert np.array_equal(block, again)  # identical calls are bit-identical
    for k, om in enumerate(omegas):
        # pointwise evaluation may choose a lower quadrature order than the
        # whole-grid call; both are converged
        single = mode_amplitude(fig3_config, 1, 1, 2, float(om))
        assert single == pytest.approx(block[k, 1, 1], rel=1e-12)
