import numpy as np
import pytest

import taskgp


@pytest.fixture(autouse=True)
def _runtime_guard():
    """Stop any runtime a failing test left behind, so failures don't cascade."""
    yield
    runtime = taskgp.current_runtime()
    if runtime is not None:
        try:
            runtime.stop()
        except taskgp.errors.NotRunning:
            pass


@pytest.fixture
def pool():
    """A small running pool for tests that just need a live runtime."""
    runtime = taskgp.start_runtime(taskgp.RuntimeConfig(worker_count=2))
    yield runtime
    if taskgp.current_runtime() is runtime:
        runtime.stop()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_dataset(rng, n, d=3, scale=1.0):
    return taskgp.Dataset(z=scale * rng.normal(size=(n, d)), y=rng.normal(size=n))
