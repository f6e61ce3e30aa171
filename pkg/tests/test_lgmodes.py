import math

import numpy as np
import pytest

from spdcmodes import LGIndex, lg_momentum_amplitude, t_coefficient

# frozen from the exact-arithmetic oracle (mpmath, 50 digits)
GOLDEN_LG_P1_L0 = 4.402879895212197e-6  # w=30 um, |q| = 2/w
GOLDEN_T_U1_P2_L2 = -1.1792866968621584e-23  # w=40 um


def test_fundamental_peak_value():
    w = 30e-6
    value = lg_momentum_amplitude(LGIndex(0, 0), w, (0.0, 0.0))
    assert value == pytest.approx(w / math.sqrt(2 * math.pi), rel=1e-12)
    assert value.imag == 0.0


def test_vortex_null_on_axis():
    assert lg_momentum_amplitude(LGIndex(0, 1), 30e-6, (0.0, 0.0)) == 0


def test_radial_mode_golden_value():
    w = 30e-6
    value = lg_momentum_amplitude(LGIndex(1, 0), w, (2 / w, 0.0))
    assert value.real == pytest.approx(GOLDEN_LG_P1_L0, rel=1e-12)
    assert value.imag == pytest.approx(0.0, abs=1e-20)


def test_azimuthal_phase_convention():
    w = 30e-6
    q = (0.0, 1 / w)  # phi_q = pi/2
    for ell in (-2, 1, 3):
        value = lg_momentum_amplitude(LGIndex(0, ell), w, q)
        phase = value / abs(value)
        assert phase == pytest.approx(np.exp(1j * ell * math.pi / 2), abs=1e-12)


def test_negative_radial_index_rejected():
    with pytest.raises(ValueError):
        LGIndex(-1, 0)


def test_t_trivial_values():
    assert t_coefficient(0, 0, 0, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
    expected = -(1 / math.sqrt(math.pi)) * (1 / math.sqrt(2))
    assert t_coefficient(0, 1, 0, 1.0) == pytest.approx(expected, rel=1e-12)


def test_t_golden_value():
    assert t_coefficient(1, 2, 2, 40e-6) == pytest.approx(GOLDEN_T_U1_P2_L2, rel=1e-12)


def test_t_index_contract():
    with pytest.raises(IndexError):
        t_coefficient(3, 2, 0, 1.0)
    with pytest.raises(IndexError):
        t_coefficient(-1, 2, 0, 1.0)


def test_t_waist_scaling():
    w0 = 17e-6
    for p in range(4):
        for u in range(p + 1):
            for ell in (0, 1, 3):
                ratio = t_coefficient(u, p, ell, 2 * w0) / t_coefficient(u, p, ell, w0)
                assert ratio == pytest.approx(2.0 ** (2 * u + abs(ell) + 1), rel=1e-14)


def test_t_sign_pattern():
    for p in range(5):
        for u in range(p + 1):
            sign = math.copysign(1.0, t_coefficient(u, p, 2, 25e-6))
            assert sign == (-1) ** (p + u)


def test_momentum_orthonormality_quadrature():
    """2-D trapezoid over momentum space: modes with p<=2, |ell|<=3 are
    orthonormal to 1e-6 (extent 8/w, 256^2 grid)."""
    w = 30e-6
    n_grid = 256
    axis = np.linspace(-8 / w, 8 / w, n_grid)
    qx, qy = np.meshgrid(axis, axis, indexing="ij")
    q_abs = np.hypot(qx, qy)
    phi = np.arctan2(qy, qx)
    step = axis[1] - axis[0]

    from spdcmodes.lgmodes import lg_radial_profile
    modes = [(p, ell) for p in range(3) for ell in range(-3, 4)]
    stack = np.empty((len(modes), n_grid, n_grid), dtype=complex)
    for k, (p, ell) in enumerate(modes):
        stack[k] = lg_radial_profile(p, abs(ell), w, q_abs) * np.exp(1j * ell * phi)
    gram = np.einsum("aij,bij->ab", stack.conj(), stack) * step * step
    assert np.max(np.abs(gram - np.eye(len(modes)))) < 1e-6
