import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cclqr import CcLqrProblem, config


@pytest.fixture(scope="session")
def sec5():
    """The double-integrator benchmark instance."""
    return config.sec5_config("solve").problem


@pytest.fixture(scope="session")
def sec5_cfg():
    return config.sec5_config("solve")


@pytest.fixture(scope="session")
def K0_sec5(sec5_cfg):
    return sec5_cfg.K0


@pytest.fixture()
def scalar_prob():
    """Scalar system a=0.5, b=1 with unit penalties and one constraint."""
    return CcLqrProblem(
        A=[[0.5]], B=[[1.0]],
        Q=[[[1.0]], [[1.0]]],
        R=[[[1.0]], [[1.0]]],
        c=[5.0],
    )


@pytest.fixture()
def scalar_unconstrained():
    return CcLqrProblem(A=[[0.5]], B=[[1.0]], Q=[[[1.0]]], R=[[[1.0]]], c=[])


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
