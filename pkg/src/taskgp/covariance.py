"""Squared-exponential kernel and tiled covariance assembly.

Every assembly routine emits one independent task per tile, so covariance
construction overlaps with whatever consumes it (factorization, solves).
Tile entries are computed with a fixed per-entry reduction order, which
makes assembled matrices identical across tilings: entry (i, j) depends
only on rows i and j, never on which tile it landed in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DimensionMismatch, InvalidConfig
from .runtime import TaskHandle, submit
from .tiled import RectTiledMatrix, TiledMatrix, _freeze

# Row-block size for pairwise distance computation. Chunking bounds the
# broadcast temporaries without changing any entry's reduction order.
_CHUNK = 256


@dataclass(frozen=True)
class KernelParams:
    """Squared-exponential kernel hyperparameters.

    Parameters
    ----------
    lengthscale : float
        Length scale of the exponential; must be positive.
    vertical_scale : float
        Signal variance (value of the kernel at zero distance); must be
        positive.
    noise_variance : float
        Observation noise added on the diagonal of the training
        covariance; must be non-negative.
    trainable : tuple of bool
        Per-parameter optimization flags, in the order (lengthscale,
        vertical_scale, noise_variance).
    """

    lengthscale: float = 1.0
    vertical_scale: float = 1.0
    noise_variance: float = 0.1
    trainable: tuple[bool, bool, bool] = (True, True, True)

    def __post_init__(self) -> None:
        if not self.lengthscale > 0:
            raise InvalidConfig(f"lengthscale must be positive, got {self.lengthscale}")
        if not self.vertical_scale > 0:
            raise InvalidConfig(
                f"vertical_scale must be positive, got {self.vertical_scale}"
            )
        if self.noise_variance < 0:
            raise InvalidConfig(
                f"noise_variance must be non-negative, got {self.noise_variance}"
            )
        if len(self.trainable) != 3:
            raise InvalidConfig("trainable must hold exactly three flags")


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between rows of a and b."""
    out = np.empty((a.shape[0], b.shape[0]))
    for start in range(0, a.shape[0], _CHUNK):
        stop = min(start + _CHUNK, a.shape[0])
        diff = a[start:stop, None, :] - b[None, :, :]
        np.square(diff, out=diff)
        np.sum(diff, axis=2, out=out[start:stop])
    return out


def _kernel_block(a: np.ndarray, b: np.ndarray, params: KernelParams) -> np.ndarray:
    """Noise-free kernel matrix between row blocks a and b."""
    d2 = _sq_dists(a, b)
    d2 *= -1.0 / (2.0 * params.lengthscale**2)
    np.exp(d2, out=d2)
    d2 *= params.vertical_scale
    return d2


def kernel(zi, zj, same_index: bool, params: KernelParams) -> float:
    """Covariance between two points; noise applies only at equal indices.

    Parameters
    ----------
    zi, zj : array_like
        Feature vectors of the same length.
    same_index : bool
        True when both arguments are the same indexed training point, in
        which case the noise variance is added.
    params : KernelParams

    Returns
    -------
    float
    """
    zi = np.atleast_2d(np.asarray(zi, dtype=np.float64))
    zj = np.atleast_2d(np.asarray(zj, dtype=np.float64))
    if zi.shape != zj.shape or zi.shape[0] != 1:
        raise DimensionMismatch(
            f"need two equal-length vectors, got shapes {zi.shape} and {zj.shape}"
        )
    value = float(_kernel_block(zi, zj, params)[0, 0])
    if same_index:
        value += params.noise_variance
    return value


def _row_blocks(z: np.ndarray, tiles_per_dim: int) -> list[np.ndarray]:
    ts = z.shape[0] // tiles_per_dim
    return [z[i * ts : (i + 1) * ts] for i in range(tiles_per_dim)]


def assemble_covariance(
    data: Dataset,
    params: KernelParams,
    tiles_per_dim: int,
    include_noise: bool = True,
) -> TiledMatrix:
    """Symmetric training covariance as a grid of independent tile tasks.

    Parameters
    ----------
    data : Dataset
        Training inputs; the tile count must divide the row count.
    params : KernelParams
    tiles_per_dim : int
    include_noise : bool
        When True (default) the noise variance is added along the global
        diagonal; False gives the noise-free prior, as used for kernel
        gradients and posterior priors.

    Returns
    -------
    TiledMatrix
        Lower-triangular tile grid of handles; symmetric.
    """
    z = _freeze(data.z)
    blocks = _row_blocks(z, _check_tiles(data.n, tiles_per_dim))
    noise = params.noise_variance if include_noise else 0.0

    def diag_tile(block: np.ndarray) -> np.ndarray:
        tile = _kernel_block(block, block, params)
        if noise:
            tile[np.diag_indices_from(tile)] += noise
        return _freeze(tile)

    grid: dict[tuple[int, int], TaskHandle] = {}
    for i in range(tiles_per_dim):
        for j in range(i + 1):
            if i == j:
                grid[i, j] = submit((), lambda a=blocks[i]: diag_tile(a))
            else:
                grid[i, j] = submit(
                    (),
                    lambda a=blocks[i], b=blocks[j]: _freeze(
                        _kernel_block(a, b, params)
                    ),
                )
    return TiledMatrix(n=data.n, tiles_per_dim=tiles_per_dim, grid=grid, symmetric=True)


def assemble_cross_covariance(
    test: Dataset,
    train: Dataset,
    params: KernelParams,
    row_tiles: int = 1,
    col_tiles: int = 1,
) -> RectTiledMatrix:
    """Test-by-train covariance; the noise term never applies across sets.

    Returns an M-by-N rect tiled matrix with entry (m, n) equal to the
    noise-free kernel between test point m and training point n.
    """
    if test.d != train.d:
        raise DimensionMismatch(
            f"test has {test.d} features, train has {train.d}"
        )
    rows = _row_blocks(_freeze(test.z), _check_tiles(test.n, row_tiles))
    cols = _row_blocks(_freeze(train.z), _check_tiles(train.n, col_tiles))
    grid = {
        (i, j): submit(
            (),
            lambda a=rows[i], b=cols[j]: _freeze(_kernel_block(a, b, params)),
        )
        for i in range(row_tiles)
        for j in range(col_tiles)
    }
    return RectTiledMatrix(test.n, train.n, row_tiles, col_tiles, grid)


def assemble_lengthscale_gradient(
    data: Dataset, params: KernelParams, tiles_per_dim: int
) -> TiledMatrix:
    """Entrywise derivative of the training covariance w.r.t. the lengthscale."""
    scale = params.vertical_scale / params.lengthscale**3

    def tile(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d2 = _sq_dists(a, b)
        e = np.exp(d2 * (-1.0 / (2.0 * params.lengthscale**2)))
        return _freeze(scale * e * d2)

    return _assemble_symmetric(data, tiles_per_dim, tile)


def assemble_vertical_gradient(
    data: Dataset, params: KernelParams, tiles_per_dim: int
) -> TiledMatrix:
    """Entrywise derivative w.r.t. the vertical scale (the bare exponential)."""

    def tile(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d2 = _sq_dists(a, b)
        d2 *= -1.0 / (2.0 * params.lengthscale**2)
        return _freeze(np.exp(d2))

    return _assemble_symmetric(data, tiles_per_dim, tile)


def _assemble_symmetric(data: Dataset, tiles_per_dim: int, tile_fn) -> TiledMatrix:
    blocks = _row_blocks(_freeze(data.z), _check_tiles(data.n, tiles_per_dim))
    grid = {
        (i, j): submit((), lambda a=blocks[i], b=blocks[j]: tile_fn(a, b))
        for i in range(tiles_per_dim)
        for j in range(i + 1)
    }
    return TiledMatrix(n=data.n, tiles_per_dim=tiles_per_dim, grid=grid, symmetric=True)


def _check_tiles(n: int, tiles_per_dim: int) -> int:
    # TiledMatrix.from_dense validates the same way; assemblies bypass
    # from_dense so they re-check here.
    from .errors import TilingError

    if tiles_per_dim < 1:
        raise TilingError(f"tiles_per_dim must be >= 1, got {tiles_per_dim}")
    if n % tiles_per_dim != 0:
        raise TilingError(
            f"{tiles_per_dim} tiles per dimension do not evenly divide {n} points"
        )
    return tiles_per_dim
