import os

for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")

import numpy as np
import pytest

from dynquant.hilbert import QuantizationContext
from dynquant.verify import DEFAULT_SEED


@pytest.fixture
def rng(request):
    seed = DEFAULT_SEED
    print(f"[seed {seed:#x}] {request.node.name}")
    return np.random.default_rng(seed)


@pytest.fixture
def ctx16():
    return QuantizationContext(hbar=1.0, dim=16)


def interior(x, ctx, guard=None):
    from dynquant.hilbert import interior_block
    return interior_block(x, guard, ctx)
