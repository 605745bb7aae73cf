"""Gaussian-process regression on top of the tiled task-graph algorithms.

A :class:`GPModel` owns a training set, kernel hyperparameters, and a tile
configuration. Every heavy call (prediction, likelihood, gradients,
optimization) is submitted through ``run_as_root`` so the host thread just
blocks while the worker pool executes the tile graph. The Cholesky factor
and the weight vector derived from it are cached on the model and
invalidated whenever the parameters or the training data change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import covariance, tiled, tiles
from .covariance import KernelParams
from .data import Dataset
from .errors import (
    DimensionMismatch,
    InvalidConfig,
    NotPositiveDefinite,
    NumericalConsistencyError,
    TaskGPError,
    TilingError,
)
from .runtime import TaskHandle, run_as_root, submit

# Variances this far below zero are round-off from the subtraction in the
# posterior; anything worse indicates a real inconsistency.
_VARIANCE_SLACK = 1e-9

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class AdamConfig:
    """Adam settings for hyperparameter optimization.

    Parameters
    ----------
    learning_rate : float
        Step size on the log-parameters; must be positive.
    beta1, beta2 : float
        Exponential decay rates for the first and second moment
        estimates; each must lie in [0, 1).
    epsilon : float
        Denominator fuzz; must be positive.
    iterations : int
        Number of optimization steps; must be at least 1.
    """

    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    iterations: int = 100

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise InvalidConfig(
                f"learning_rate must be positive, got {self.learning_rate}"
            )
        for name, beta in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not 0.0 <= beta < 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1), got {beta}")
        if not self.epsilon > 0:
            raise InvalidConfig(f"epsilon must be positive, got {self.epsilon}")
        if self.iterations < 1:
            raise InvalidConfig(
                f"iterations must be at least 1, got {self.iterations}"
            )


@dataclass(frozen=True)
class PredictionResult:
    """Predicted mean plus optional uncertainty.

    Exactly one of ``variance`` / ``full_covariance`` is set when the
    corresponding prediction flavor was requested; both are None for
    mean-only prediction.
    """

    mean: np.ndarray
    variance: np.ndarray | None = None
    full_covariance: np.ndarray | None = None


class GPModel:
    """Squared-exponential GP regression over a fixed training set.

    Parameters
    ----------
    train : Dataset
        Training features and observations.
    params : KernelParams, optional
        Initial hyperparameters.
    tiles_per_dim : int, optional
        Tile grid size for the training covariance; must divide the
        training count.

    Notes
    -----
    Not safe for concurrent calls on the same instance: callers must
    serialize optimize/predict on one model. Distinct models may be used
    concurrently.
    """

    def __init__(
        self,
        train: Dataset,
        params: KernelParams | None = None,
        tiles_per_dim: int = 1,
    ):
        if tiles_per_dim < 1 or train.n % tiles_per_dim != 0:
            raise TilingError(
                f"tiles_per_dim={tiles_per_dim} must divide the "
                f"{train.n} training points"
            )
        self._train = train
        self._params = params if params is not None else KernelParams()
        self._tiles_per_dim = tiles_per_dim
        self._factor: tiled.TiledMatrix | None = None
        self._beta: tiled.TiledVector | None = None
        self._alpha: tiled.TiledVector | None = None
        # Adam state: first/second moments on the log-parameters.
        self._adam_m = np.zeros(3)
        self._adam_v = np.zeros(3)
        self._adam_step = 0

    # -- attribute management -------------------------------------------

    @property
    def train(self) -> Dataset:
        return self._train

    @train.setter
    def train(self, value: Dataset) -> None:
        if value.n % self._tiles_per_dim != 0:
            raise TilingError(
                f"tiles_per_dim={self._tiles_per_dim} must divide the "
                f"{value.n} training points"
            )
        self._train = value
        self._invalidate()

    @property
    def params(self) -> KernelParams:
        return self._params

    @params.setter
    def params(self, value: KernelParams) -> None:
        self._params = value
        self._invalidate()

    @property
    def tiles_per_dim(self) -> int:
        return self._tiles_per_dim

    def _invalidate(self) -> None:
        self._factor = None
        self._beta = None
        self._alpha = None

    # -- factor / weight plumbing (task-context code) ---------------------

    def _ensure_factor(self) -> tiled.TiledMatrix:
        if self._factor is None:
            k = covariance.assemble_covariance(
                self._train, self._params, self._tiles_per_dim
            )
            self._factor = tiled.tiled_cholesky(k)
            self._beta = None
            self._alpha = None
        return self._factor

    def _ensure_weights(self) -> tiled.TiledVector:
        """Alpha such that K @ alpha == y, via forward+backward substitution."""
        if self._alpha is None:
            factor = self._ensure_factor()
            y = tiled.TiledVector.from_dense(self._train.y, self._tiles_per_dim)
            self._beta = tiled.tiled_forward_solve(factor, y)
            self._alpha = tiled.tiled_backward_solve(factor, self._beta)
        return self._alpha

    def _check_test(self, test: Dataset) -> int:
        if test.d != self._train.d:
            raise DimensionMismatch(
                f"test has {test.d} features, model was trained with {self._train.d}"
            )
        # Test rows need their own tiling; reuse the training grid size
        # when possible, otherwise the largest compatible divisor.
        return math.gcd(self._tiles_per_dim, test.n)

    def _cross_and_mean(
        self, test: Dataset, row_tiles: int
    ) -> tuple[tiled.RectTiledMatrix, tiled.TiledVector]:
        cross = covariance.assemble_cross_covariance(
            test,
            self._train,
            self._params,
            row_tiles=row_tiles,
            col_tiles=self._tiles_per_dim,
        )
        mean = tiled.tiled_gemv(cross, self._ensure_weights())
        return cross, mean

    def _guarded(self, body):
        try:
            return run_as_root(body)
        except TaskGPError:
            # A poisoned factor would otherwise replay the failure after
            # the caller fixes the inputs.
            self._invalidate()
            raise

    # -- public API -------------------------------------------------------

    def predict(self, test: Dataset) -> PredictionResult:
        """Posterior mean at the test points.

        Parameters
        ----------
        test : Dataset
            Test features (the y column is ignored).

        Returns
        -------
        PredictionResult
            ``mean`` only; uncertainty fields are None.
        """
        row_tiles = self._check_test(test)

        def body() -> np.ndarray:
            _, mean = self._cross_and_mean(test, row_tiles)
            return mean.to_dense()

        return PredictionResult(mean=self._guarded(body))

    def predict_with_full_cov(self, test: Dataset) -> PredictionResult:
        """Posterior mean and full posterior covariance.

        The covariance subtracts the squared forward-substitution panels
        from the noise-free test prior, so its diagonal matches
        :meth:`predict_variance` on the same inputs.
        """
        row_tiles = self._check_test(test)

        def body() -> tuple[np.ndarray, np.ndarray]:
            cross, mean = self._cross_and_mean(test, row_tiles)
            v = tiled.tiled_forward_solve_matrix(self._factor, cross)
            prior = covariance.assemble_covariance(
                test, self._params, row_tiles, include_noise=False
            )
            t = self._tiles_per_dim
            grid: dict[tuple[int, int], TaskHandle] = {}
            for i in range(row_tiles):
                for j in range(i + 1):
                    acc = prior.grid[i, j]
                    for c in range(t):
                        acc = submit(
                            [v.grid[c, i], v.grid[c, j], acc],
                            lambda a=v.grid[c, i], b=v.grid[c, j], s=acc: tiled._freeze(
                                tiles.matmul_tn_sub(a.result(), b.result(), s.result())
                            ),
                        )
                    grid[i, j] = acc
            sigma = tiled.TiledMatrix(
                n=test.n, tiles_per_dim=row_tiles, grid=grid, symmetric=True
            )
            return mean.to_dense(), sigma.to_dense()

        mean, sigma = self._guarded(body)
        diag = _clamp_variances(np.diagonal(sigma).copy())
        np.fill_diagonal(sigma, diag)
        return PredictionResult(mean=mean, full_covariance=sigma)

    def predict_variance(self, test: Dataset) -> PredictionResult:
        """Posterior mean and per-point variances.

        Computes only column norms of the forward-substitution panels —
        the M-by-M posterior is never materialized, which is what makes
        this flavor cheaper than :meth:`predict_with_full_cov`.
        """
        row_tiles = self._check_test(test)
        prior_var = self._params.vertical_scale

        def body() -> tuple[np.ndarray, np.ndarray]:
            cross, mean = self._cross_and_mean(test, row_tiles)
            v = tiled.tiled_forward_solve_matrix(self._factor, cross)
            segments = []
            for i in range(row_tiles):
                acc = submit(
                    [v.grid[0, i]],
                    lambda a=v.grid[0, i]: tiles.column_sumsq(a.result()),
                )
                for c in range(1, self._tiles_per_dim):
                    acc = submit(
                        [v.grid[c, i], acc],
                        lambda a=v.grid[c, i], s=acc: s.result()
                        + tiles.column_sumsq(a.result()),
                    )
                segments.append(
                    submit([acc], lambda s=acc: tiled._freeze(prior_var - s.result()))
                )
            var = tiled.TiledVector(
                n=test.n, tiles_per_dim=row_tiles, segments=segments
            )
            return mean.to_dense(), var.to_dense()

        mean, var = self._guarded(body)
        return PredictionResult(mean=mean, variance=_clamp_variances(var))

    def log_likelihood(self) -> float:
        """Log marginal likelihood of the training observations."""

        def body() -> float:
            self._ensure_weights()
            factor, beta = self._factor, self._beta
            logdiag = [
                submit(
                    [factor.grid[i, i]],
                    lambda h=factor.grid[i, i]: float(
                        np.sum(np.log(np.diagonal(h.result())))
                    ),
                )
                for i in range(self._tiles_per_dim)
            ]
            sumsq = [
                submit([seg], lambda h=seg: float(h.result() @ h.result()))
                for seg in beta.segments
            ]
            half_log_det = sum(h.result() for h in logdiag)
            fit = sum(h.result() for h in sumsq)
            return -half_log_det - 0.5 * fit - self._train.n * _HALF_LOG_2PI

        return self._guarded(body)

    def loss_gradients(self) -> tuple[float, float, float]:
        """Gradient of the negative log marginal likelihood.

        Returns
        -------
        tuple of float
            Derivatives with respect to (lengthscale, vertical_scale,
            noise_variance); entries for non-trainable parameters are 0.
        """
        train_l, train_v, train_n = self._params.trainable
        if not (train_l or train_v or train_n):
            return (0.0, 0.0, 0.0)

        def body() -> tuple[float, float, float]:
            alpha = self._ensure_weights()
            factor = self._factor
            t = self._tiles_per_dim
            eye = tiled.RectTiledMatrix.identity(self._train.n, t)
            # Columns of x are the inverse factor; the kernel-matrix
            # inverse follows as x.T @ x, assembled tile by tile.
            x = tiled.tiled_forward_solve_matrix(factor, eye)
            kinv: dict[tuple[int, int], TaskHandle] = {}
            for r in range(t):
                for c in range(r + 1):
                    acc: TaskHandle | None = None
                    for i in range(max(r, c), t):
                        if acc is None:
                            acc = submit(
                                [x.grid[i, r], x.grid[i, c]],
                                lambda a=x.grid[i, r], b=x.grid[i, c]: a.result().T
                                @ b.result(),
                            )
                        else:
                            acc = submit(
                                [x.grid[i, r], x.grid[i, c], acc],
                                lambda a=x.grid[i, r], b=x.grid[i, c], s=acc: tiles.matmul_tn_add(
                                    a.result(), b.result(), s.result()
                                ),
                            )
                    kinv[r, c] = acc

            def quadratic_terms(dk: tiled.TiledMatrix) -> float:
                """0.5*tr(kinv @ dk) - 0.5*alpha.T @ dk @ alpha."""
                parts = []
                for r in range(t):
                    for c in range(r + 1):
                        weight = 1.0 if r == c else 2.0
                        parts.append(
                            submit(
                                [kinv[r, c], dk.grid[r, c]],
                                lambda a=kinv[r, c], b=dk.grid[r, c], w=weight: w
                                * float(np.sum(a.result() * b.result())),
                            )
                        )
                        parts.append(
                            submit(
                                [dk.grid[r, c], alpha.segments[r], alpha.segments[c]],
                                lambda b=dk.grid[r, c], ar=alpha.segments[r], ac=alpha.segments[c], w=weight: -w
                                * float(ar.result() @ b.result() @ ac.result()),
                            )
                        )
                return 0.5 * sum(p.result() for p in parts)

            grad_l = grad_v = grad_n = 0.0
            if train_l:
                dk = covariance.assemble_lengthscale_gradient(
                    self._train, self._params, t
                )
                grad_l = quadratic_terms(dk)
            if train_v:
                dk = covariance.assemble_vertical_gradient(
                    self._train, self._params, t
                )
                grad_v = quadratic_terms(dk)
            if train_n:
                # dK is the identity: the trace reduces to ||x||_F^2 and
                # the quadratic form to ||alpha||^2.
                frob = [
                    submit(
                        [x.grid[i, c]],
                        lambda h=x.grid[i, c]: float(np.sum(h.result() ** 2)),
                    )
                    for i in range(t)
                    for c in range(t)
                ]
                asq = [
                    submit([seg], lambda h=seg: float(h.result() @ h.result()))
                    for seg in alpha.segments
                ]
                trace = sum(h.result() for h in frob)
                fit = sum(h.result() for h in asq)
                grad_n = 0.5 * (trace - fit)
            return (grad_l, grad_v, grad_n)

        return self._guarded(body)

    def optimize(self, opt: AdamConfig | None = None) -> list[float]:
        """Adam steps on the log of each trainable hyperparameter.

        Working in log space keeps the parameters positive without any
        projection. Moments persist on the model, so repeated calls
        continue the same trajectory.

        Returns
        -------
        list of float
            Negative log likelihood after each step.
        """
        opt = opt if opt is not None else AdamConfig()
        history = []
        for _ in range(opt.iterations):
            self._adam_step += 1
            try:
                grads = np.array(self.loss_gradients())
                theta = np.array(
                    [
                        self._params.lengthscale,
                        self._params.vertical_scale,
                        self._params.noise_variance,
                    ]
                )
                # Chain rule onto u = log(theta): du = d(theta) * theta.
                g = grads * theta
                self._adam_m = opt.beta1 * self._adam_m + (1 - opt.beta1) * g
                self._adam_v = opt.beta2 * self._adam_v + (1 - opt.beta2) * g * g
                m_hat = self._adam_m / (1 - opt.beta1**self._adam_step)
                v_hat = self._adam_v / (1 - opt.beta2**self._adam_step)
                step = opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.epsilon)
                mask = np.array(self._params.trainable, dtype=bool)
                u = np.where(mask, np.log(np.maximum(theta, 1e-300)) - step, 0.0)
                theta = np.where(mask, np.exp(u), theta)
                if mask[2]:
                    theta[2] = max(theta[2], 1e-12)  # keep K numerically PD
                self.params = replace(
                    self._params,
                    lengthscale=float(theta[0]),
                    vertical_scale=float(theta[1]),
                    noise_variance=float(theta[2]),
                )
                history.append(-self.log_likelihood())
            except NotPositiveDefinite as exc:
                raise NotPositiveDefinite(
                    f"iteration {self._adam_step}: {exc}"
                ) from exc
        return history


def _clamp_variances(var: np.ndarray) -> np.ndarray:
    bad = var < -_VARIANCE_SLACK
    if np.any(bad):
        worst = float(var[bad].min())
        raise NumericalConsistencyError(
            f"variance {worst:g} is below the round-off allowance "
            f"-{_VARIANCE_SLACK:g}"
        )
    return np.where(var < 0.0, 0.0, var)
