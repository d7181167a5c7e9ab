import pytest

from refracted_risk import JumpSpec, LevyModel, RefractedModel
from refracted_risk.mc_oracle import SimConfig

# Cramer-Lundberg reference: drift 1.5, unit-rate Poisson claims ~ Exp(1)
CL = LevyModel(1.5, 0.0, JumpSpec(1.0, ((1.0, 1.0),)))
CL_REFRACTED = RefractedModel(CL, 0.25, 1.0)
BROWNIAN = LevyModel(1.0, 1.0)
BROWNIAN_REFRACTED = RefractedModel(BROWNIAN, 0.25, 1.0)
JUMP_DIFFUSION = LevyModel(2.0, 0.5, JumpSpec(1.5, ((0.4, 1.0), (0.6, 3.0))))
JD_REFRACTED = RefractedModel(JUMP_DIFFUSION, 0.3, 1.5)
HYPER_CL = LevyModel(2.0, 0.0, JumpSpec(1.2, ((0.3, 0.5), (0.5, 2.0), (0.2, 6.0))))
HYPER_REFRACTED = RefractedModel(HYPER_CL, 0.4, 0.8)

ALL_MODELS = [CL, BROWNIAN, JUMP_DIFFUSION, HYPER_CL]
ALL_REFRACTED = [CL_REFRACTED, BROWNIAN_REFRACTED, JD_REFRACTED, HYPER_REFRACTED]


@pytest.fixture
def cl():
    return CL


@pytest.fixture
def cl_rm():
    return CL_REFRACTED


@pytest.fixture
def bm_rm():
    return BROWNIAN_REFRACTED


@pytest.fixture
def mc_cfg():
    """Acceptance-scale simulation settings."""
    return SimConfig(n_paths=100_000, horizon=1000.0, seed=12345)


@pytest.fixture
def small_cfg():
    return SimConfig(n_paths=20_000, horizon=200.0, seed=7)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance table collected by tests/test_acceptance.py."""
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
