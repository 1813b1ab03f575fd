import numpy as np
import pytest
from hypothesis import settings

from ballistic import _kernels
from ballistic.model import Configuration, Mode, Side

settings.register_profile("ballistic", deadline=None, max_examples=60)
settings.load_profile("ballistic")


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    _kernels.warmup()


def random_config(rng, n, lattice=False, side=Side.HALF_LINE):
    if lattice:
        pos = np.cumsum(rng.integers(1, 4, n)).astype(np.int64)
        return Configuration(Mode.LATTICE, side, pos,
                             rng.integers(-1, 2, n).astype(np.int8))
    pos = np.cumsum(rng.exponential(1.0, n))
    return Configuration(Mode.CONTINUOUS, side, pos,
                         rng.integers(-1, 2, n).astype(np.int8))


def config_from(positions, speeds, mode=Mode.CONTINUOUS, side=Side.HALF_LINE):
    dtype = np.int64 if mode is Mode.LATTICE else np.float64
    return Configuration(mode, side, np.asarray(positions, dtype=dtype),
                         np.asarray(speeds, dtype=np.int8))
