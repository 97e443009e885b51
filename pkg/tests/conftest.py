"""
Shared fixtures: reference parameter sets and an isolated output directory.
"""

import pytest

from app.core.params import ModelParams, SensitivitySpec, ShadowParams
from app.experiments.acceptance import supercritical_params
from app.experiments.config_loader import config_loader


@pytest.fixture(autouse=True)
def reset_config_cache():
    """Clear cached run files before each test."""
    config_loader.clear_cache()


@pytest.fixture
def weak_params():
    """Weak-competition defaults: chi_0 = 12.75 at k_0 = 1."""
    return ModelParams()


@pytest.fixture
def strong_params():
    """Strong competition: a = (2, 1), b = (1, 1), c = (3, 1), coexistence (1/2, 1/2)."""
    return ModelParams(a1=2.0, a2=1.0, b1=1.0, b2=1.0, c1=3.0, c2=1.0)


@pytest.fixture(scope="session")
def supercritical():
    """Seeded weak draw whose k0 branch has K2 > 0, with its k0."""
    return supercritical_params()


@pytest.fixture
def matched_phi_params():
    """Weak kinetics, D1 = 100, D2 = 0.01, cubic phi with phi'/phi = c2/(b2 u_bar) at v_bar."""
    return ModelParams(
        D1=100.0,
        D2=0.01,
        sensitivity=SensitivitySpec(p0=13.0 / 6.0, p1=-8.5, p2=15.0),
    )


@pytest.fixture
def shadow_params():
    """r = 6, a = (2, 1), c = (3, 1), L = pi: v_bar = 2/3, eps_1 = 2/3."""
    return ShadowParams(a1=2.0, a2=1.0, b1=0.0, b2=1.0, c1=3.0, c2=1.0, r=6.0, eps=0.5)


@pytest.fixture
def layer_params():
    """Bistable set with the equal-area plateau inside I_0."""
    return ShadowParams(a1=1.0, a2=1.0, b1=0.0, b2=1.0, c1=7.0, c2=1.0, r=2.0, eps=1e-4, L=1.0)


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    """Output directory wired through CHEMOTAX_LV_OUT."""
    path = tmp_path / "out"
    monkeypatch.setenv("CHEMOTAX_LV_OUT", str(path))
    return path
