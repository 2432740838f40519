import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message="The TBB threading layer")

from cantilever_atoms import config as cfgmod  # noqa: E402
from cantilever_atoms.magnetostatics import paper_tip_magnet  # noqa: E402
from cantilever_atoms.trap import solve_bias  # noqa: E402

# quadrupole gradient giving a 1 kHz axial oscillation at E = k_B * 100 uK,
# as found by calibrate_quad_gradient (checked in test_montecarlo)
CALIBRATED_G = 5.045


@pytest.fixture(scope="session")
def tip_magnet():
    return paper_tip_magnet()


@pytest.fixture(scope="session")
def paper_trap(tip_magnet):
    trap, target = solve_bias(tip_magnet, 100e-6, quad_gradient=CALIBRATED_G, field_floor=1e-6)
    return trap, target


@pytest.fixture(scope="session")
def fig3_config():
    return cfgmod.load_config("paper_fig3.json")


@pytest.fixture(scope="session")
def axial_model(fig3_config):
    return cfgmod.build_axial_model(fig3_config)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
