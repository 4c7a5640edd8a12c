import numpy as np
import pytest

from bnt.data import Dataset, ScalingSpec


def make_dataset(x, y, names=None) -> Dataset:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    names = tuple(names) if names else tuple(f"x{i}" for i in range(x.shape[1]))
    return Dataset(feature_names=names, features=x, response=np.asarray(y, dtype=float))


def identity_scaler(d: int) -> ScalingSpec:
    """Scaler that leaves [0,1] data untouched."""
    return ScalingSpec(
        feature_min=np.zeros(d), feature_max=np.ones(d),
        response_min=0.0, response_max=1.0,
    )


@pytest.fixture
def step_dataset() -> Dataset:
    """Separable 4-point toy: y jumps from 0 to 10 between x=2 and x=3."""
    return make_dataset([1.0, 2.0, 3.0, 4.0], [0.0, 0.0, 10.0, 10.0])


@pytest.fixture
def tiny_chain_dataset() -> Dataset:
    """n=6, one feature with 3 distinct values; the full valid tree space
    is enumerable (5 trees)."""
    x = np.array([0.0, 0.0, 1.0, 1.0, 2.0, 2.0])
    y = np.array([0.1, -0.1, 5.0, 5.2, 9.9, 10.1])
    return make_dataset(x, y)
