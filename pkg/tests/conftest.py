import os

# keep BLAS single-threaded so training is bit-reproducible everywhere
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from selreg.core import Dataset
from selreg.tasks import DiscreteTask


@pytest.fixture
def two_point_task() -> DiscreteTask:
    """X in {0, 1} equiprobable, variances (1, 9): the smallest task on which
    threshold rules at c=2 split the support."""
    return DiscreteTask(
        points=np.array([[0.0], [1.0]]),
        weights=np.array([0.5, 0.5]),
        means=np.array([0.0, 0.0]),
        variances=np.array([1.0, 9.0]),
    )


@pytest.fixture
def tiny_dataset() -> Dataset:
    return Dataset(np.array([[0.0], [1.0], [2.0]]), np.array([0.0, 1.0, 4.0]))
