import pytest

from spdcmodes import CrystalSpec, DetuningGrid, builtin_ktp, make_config


@pytest.fixture(scope="session")
def ktp():
    return builtin_ktp()


@pytest.fixture(scope="session")
def fig3_config(ktp):
    """10 mm crystal, 405 nm pump, w_p=142 um, w_s=w_i=42 um."""
    crystal = CrystalSpec(length=10e-3, dispersion=ktp)
    return make_config(crystal, 405e-9, 142e-6, 42e-6)


@pytest.fixture(scope="session")
def fig2_config(ktp):
    """20 mm crystal, 404.8 nm pump, w_p=60 um, w_s=w_i=30 um."""
    crystal = CrystalSpec(length=20e-3, dispersion=ktp)
    return make_config(crystal, 404.8e-9, 60e-6, 30e-6)


@pytest.fixture(scope="session")
def grid_fig3(fig3_config):
    return DetuningGrid.from_span_nm(fig3_config.signal.center_wavelength)


@pytest.fixture(scope="session")
def grid_fig2(fig2_config):
    return DetuningGrid.from_span_nm(fig2_config.signal.center_wavelength)


@pytest.fixture(scope="session")
def sweep_grid(fig3_config):
    """Wide grid for waist sweeps that visit tight foci."""
    return DetuningGrid.from_span_nm(fig3_config.signal.center_wavelength,
                                     count=6001, span_nm=18.0)
