import numpy as np
import pytest

from src.core.expr import parse
from src.domain.models import PairSpec
from src.utils.sampling import sample_points


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def plane_points():
    # 40 points in [-1, 1]^2
    return sample_points([(-1.0, 1.0), (-1.0, 1.0)], 40, seed=0)


@pytest.fixture
def sample_pair():
    def build(branch="A", mu=1):
        return PairSpec(
            f_plus=parse("x1", 2),
            f_minus=parse("0", 2),
            g_plus=parse("x2", 2),
            g_minus=parse("x1 + x2", 2),
            m=2,
            branch=branch,
            mu=mu,
        )

    return build


@pytest.fixture
def write_config(tmp_path):
    import json

    def write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write
