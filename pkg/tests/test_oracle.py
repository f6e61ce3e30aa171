"""Brute-force quadrature oracle: equivalence with the closed form, numerical
emergence of OAM conservation, and quadrature-budget contracts."""
import pytest

from spdcmodes import QuadratureSpec, mode_amplitude, oracle_amplitude
from spdcmodes.errors import BudgetExceeded

FAST = QuadratureSpec(radial_nodes=64, angular_nodes=96)


def test_oracle_node_doubling_converges(fig3_config):
    base = oracle_amplitude(fig3_config, 0, 0, 0, 0.0, FAST)
    doubled = oracle_amplitude(fig3_config, 0, 0, 0, 0.0, FAST.scaled(2.0))
    assert abs(base - doubled) / abs(doubled) < 1e-6
    # the frozen golden in test_biphoton comes from this doubled evaluation
    assert doubled.real == pytest.approx(57.697680942561, rel=1e-9)


def test_oracle_equivalence_battery(fig3_config, grid_fig3):
    om_half = grid_fig3.omega_values[-1] / 2
    worst = 0.0
    for p_s in range(3):
        for p_i in range(3):
            for ell in range(4):
                for omega in (0.0, om_half, -om_half):
                    closed = mode_amplitude(fig3_config, p_s, p_i, ell, omega)
                    oracle = oracle_amplitude(fig3_config, p_s, p_i, ell, omega, FAST)
                    worst = max(worst, abs(closed - oracle) / abs(oracle))
    assert worst < 1e-3


def test_oracle_shares_golden_with_closed_form(fig3_config):
    closed = mode_amplitude(fig3_config, 0, 0, 2, 0.0)
    oracle = oracle_amplitude(fig3_config, 0, 0, 2, 0.0, FAST)
    assert abs(closed - oracle) / abs(oracle) < 1e-3


def test_full_4d_oam_selection_rule(fig3_config):
    quad = QuadratureSpec(radial_nodes=48, angular_nodes=48)
    conserving = oracle_amplitude(fig3_config, 0, 0, 1, 0.0, quad,
                                  ell_signal=1, ell_idler=-1)
    for ell_s, ell_i in [(1, 1), (1, 0), (2, -1), (0, 1)]:
        violating = oracle_amplitude(fig3_config, 0, 0, 1, 0.0, quad,
                                     ell_signal=ell_s, ell_idler=ell_i)
        assert abs(violating) < 1e-6 * abs(conserving)


def test_full_4d_matches_reduced_when_conserving(fig3_config):
    quad = QuadratureSpec(radial_nodes=48, angular_nodes=48)
    full = oracle_amplitude(fig3_config, 0, 0, 1, 0.0, quad, ell_signal=1, ell_idler=-1)
    reduced = oracle_amplitude(fig3_config, 0, 0, 1, 0.0, FAST)
    assert abs(full - reduced) / abs(reduced) < 1e-4


def test_budget_guard(fig3_config):
    tiny_budget = QuadratureSpec(radial_nodes=96, angular_nodes=128, max_nodes=1000)
    with pytest.raises(BudgetExceeded):
        oracle_amplitude(fig3_config, 0, 0, 0, 0.0, tiny_budget)


def test_cost_guards(fig3_config):
    with pytest.raises(ValueError):
        oracle_amplitude(fig3_config, 4, 0, 0, 0.0, FAST)
    with pytest.raises(ValueError):
        oracle_amplitude(fig3_config, 0, 0, 5, 0.0, FAST)
