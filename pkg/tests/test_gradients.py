"""Closed-form likelihood gradients against central finite differences."""

from dataclasses import replace

import numpy as np
import pytest

import taskgp
from taskgp.model import GPModel

_PARAM_NAMES = ("lengthscale", "vertical_scale", "noise_variance")


def finite_difference_gradients(model: GPModel, h: float = 1e-5) -> np.ndarray:
    """Central differences of the negative log likelihood on log-parameters.

    Differencing u = log(theta) keeps the evaluation points positive; the
    chain rule converts back: d/dtheta = (d/du) / theta.
    """
    base = model.params
    grads = np.empty(3)
    for i, name in enumerate(_PARAM_NAMES):
        theta = getattr(base, name)
        u = np.log(theta)
        model.params = replace(base, **{name: float(np.exp(u + h))})
        hi = -model.log_likelihood()
        model.params = replace(base, **{name: float(np.exp(u - h))})
        lo = -model.log_likelihood()
        grads[i] = (hi - lo) / (2.0 * h) / theta
    model.params = base
    return grads


def random_model(seed: int, n: int = 32) -> GPModel:
    rng = np.random.default_rng(seed)
    train = taskgp.Dataset(z=rng.normal(size=(n, 3)), y=rng.normal(size=n))
    params = taskgp.KernelParams(
        lengthscale=float(rng.uniform(0.5, 2.0)),
        vertical_scale=float(rng.uniform(0.5, 2.0)),
        noise_variance=float(rng.uniform(0.05, 0.5)),
    )
    return GPModel(train, params, tiles_per_dim=4)


class TestGradientsMatchFiniteDifferences:
    @pytest.mark.parametrize("seed", range(5))
    def test_random_models(self, pool, seed):
        model = random_model(seed)
        analytic = np.array(model.loss_gradients())
        numeric = finite_difference_gradients(model)
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-12)
        assert rel.max() < 1e-5

    def test_short_lengthscale_regime(self, pool):
        """Rapidly decaying kernels (nearly diagonal K) still check out."""
        rng = np.random.default_rng(99)
        train = taskgp.Dataset(z=rng.normal(size=(24, 2)), y=rng.normal(size=24))
        model = GPModel(
            train,
            taskgp.KernelParams(lengthscale=0.15, noise_variance=0.2),
            tiles_per_dim=2,
        )
        analytic = np.array(model.loss_gradients())
        numeric = finite_difference_gradients(model)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5)

    def test_gradients_tile_invariant(self, pool):
        rng = np.random.default_rng(5)
        train = taskgp.Dataset(z=rng.normal(size=(16, 2)), y=rng.normal(size=16))
        grads = [
            np.array(GPModel(train, tiles_per_dim=t).loss_gradients())
            for t in (1, 2, 4)
        ]
        np.testing.assert_allclose(grads[0], grads[1], atol=1e-10)
        np.testing.assert_allclose(grads[0], grads[2], atol=1e-10)
