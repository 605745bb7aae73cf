"""Tiled matrix/vector containers and the tiled algorithms over them.

A tiled container holds a grid of :class:`~taskgp.runtime.TaskHandle`\\ s,
one per tile, so algorithms compose by submitting tasks whose dependencies
are exactly the producing handles of their input tiles. Completed tiles are
immutable; an algorithm never overwrites a tile, it produces successors.

Symmetric matrices materialize only the lower-triangular tile grid. The
same storage holds lower-triangular factors (``symmetric=False``), where
missing upper tiles read as zero.

All algorithms here must run inside the runtime (from ``run_as_root`` or a
task body); they submit tasks and return immediately with handle-bearing
containers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tiles
from .errors import DimensionMismatch, TilingError
from .runtime import TaskHandle, submit


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def _split(n: int, tiles_per_dim: int, what: str) -> int:
    if tiles_per_dim < 1:
        raise TilingError(f"tiles_per_dim must be >= 1, got {tiles_per_dim}")
    if n % tiles_per_dim != 0:
        raise TilingError(
            f"{tiles_per_dim} tiles per dimension do not evenly divide {what}={n}"
        )
    return n // tiles_per_dim


@dataclass
class TiledMatrix:
    """Square matrix stored as a lower-triangular grid of tile handles."""

    n: int
    tiles_per_dim: int
    grid: dict[tuple[int, int], TaskHandle]
    symmetric: bool = True

    @property
    def tile_size(self) -> int:
        return self.n // self.tiles_per_dim

    @classmethod
    def from_dense(cls, a, tiles_per_dim: int, symmetric: bool = True) -> "TiledMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"need a square matrix, got shape {a.shape}")
        ts = _split(a.shape[0], tiles_per_dim, "matrix order")
        grid = {}
        for i in range(tiles_per_dim):
            for j in range(i + 1):
                block = a[i * ts : (i + 1) * ts, j * ts : (j + 1) * ts]
                grid[i, j] = TaskHandle.completed(_freeze(block.copy()))
        return cls(n=a.shape[0], tiles_per_dim=tiles_per_dim, grid=grid, symmetric=symmetric)

    def to_dense(self) -> np.ndarray:
        """Gather all tiles into a dense array (blocks until tiles complete)."""
        ts = self.tile_size
        out = np.zeros((self.n, self.n))
        for i in range(self.tiles_per_dim):
            for j in range(i + 1):
                block = self.grid[i, j].result()
                out[i * ts : (i + 1) * ts, j * ts : (j + 1) * ts] = block
                if self.symmetric and i != j:
                    out[j * ts : (j + 1) * ts, i * ts : (i + 1) * ts] = block.T
        return out


@dataclass
class TiledVector:
    """Length-n vector stored as tiles_per_dim equal segments of handles."""

    n: int
    tiles_per_dim: int
    segments: list[TaskHandle]

    @property
    def segment_size(self) -> int:
        return self.n // self.tiles_per_dim

    @classmethod
    def from_dense(cls, v, tiles_per_dim: int) -> "TiledVector":
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 1:
            raise DimensionMismatch(f"need a vector, got shape {v.shape}")
        ts = _split(v.shape[0], tiles_per_dim, "vector length")
        segments = [
            TaskHandle.completed(_freeze(v[i * ts : (i + 1) * ts].copy()))
            for i in range(tiles_per_dim)
        ]
        return cls(n=v.shape[0], tiles_per_dim=tiles_per_dim, segments=segments)

    def to_dense(self) -> np.ndarray:
        return np.concatenate([seg.result() for seg in self.segments])


@dataclass
class RectTiledMatrix:
    """General m-by-n matrix with independent row/column tilings."""

    m: int
    n: int
    row_tiles: int
    col_tiles: int
    grid: dict[tuple[int, int], TaskHandle] = field(repr=False)

    @property
    def row_tile_size(self) -> int:
        return self.m // self.row_tiles

    @property
    def col_tile_size(self) -> int:
        return self.n // self.col_tiles

    @classmethod
    def from_dense(cls, a, row_tiles: int, col_tiles: int) -> "RectTiledMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionMismatch(f"need a matrix, got shape {a.shape}")
        rs = _split(a.shape[0], row_tiles, "row count")
        cs = _split(a.shape[1], col_tiles, "column count")
        grid = {
            (i, j): TaskHandle.completed(
                _freeze(a[i * rs : (i + 1) * rs, j * cs : (j + 1) * cs].copy())
            )
            for i in range(row_tiles)
            for j in range(col_tiles)
        }
        return cls(a.shape[0], a.shape[1], row_tiles, col_tiles, grid)

    @classmethod
    def identity(cls, n: int, tiles_per_dim: int) -> "RectTiledMatrix":
        ts = _split(n, tiles_per_dim, "matrix order")
        eye = _freeze(np.eye(ts))
        zero = _freeze(np.zeros((ts, ts)))
        grid = {
            (i, j): TaskHandle.completed(eye if i == j else zero)
            for i in range(tiles_per_dim)
            for j in range(tiles_per_dim)
        }
        return cls(n, n, tiles_per_dim, tiles_per_dim, grid)

    def to_dense(self) -> np.ndarray:
        rs, cs = self.row_tile_size, self.col_tile_size
        out = np.zeros((self.m, self.n))
        for (i, j), handle in self.grid.items():
            out[i * rs : (i + 1) * rs, j * cs : (j + 1) * cs] = handle.result()
        return out


# -- tiled algorithms --------------------------------------------------------


def tiled_cholesky(k: TiledMatrix) -> TiledMatrix:
    """Lower Cholesky factor of a symmetric positive definite tiled matrix.

    Right-looking tile algorithm: at step k, POTRF factors the diagonal tile,
    TRSM updates the sub-diagonal panel, and SYRK/GEMM apply the trailing
    update. Every tile operation is one task depending only on its input
    tiles, so independent steps overlap freely across the pool.
    """
    t = k.tiles_per_dim
    g = dict(k.grid)
    for step in range(t):
        g[step, step] = submit(
            [g[step, step]],
            lambda a=g[step, step]: _freeze(tiles.tile_potrf(a.result())),
        )
        for i in range(step + 1, t):
            g[i, step] = submit(
                [g[step, step], g[i, step]],
                lambda l=g[step, step], b=g[i, step]: _freeze(
                    tiles.tile_trsm(l.result(), b.result())
                ),
            )
        for i in range(step + 1, t):
            g[i, i] = submit(
                [g[i, step], g[i, i]],
                lambda a=g[i, step], c=g[i, i]: _freeze(
                    tiles.tile_syrk(a.result(), c.result())
                ),
            )
            for j in range(step + 1, i):
                g[i, j] = submit(
                    [g[i, step], g[j, step], g[i, j]],
                    lambda a=g[i, step], b=g[j, step], c=g[i, j]: _freeze(
                        tiles.tile_gemm(a.result(), b.result(), c.result())
                    ),
                )
    return TiledMatrix(n=k.n, tiles_per_dim=t, grid=g, symmetric=False)


def _check_factor_vector(l: TiledMatrix, b: TiledVector) -> None:
    if b.n != l.n or b.tiles_per_dim != l.tiles_per_dim:
        raise DimensionMismatch(
            f"factor is {l.n} with {l.tiles_per_dim} tiles, vector is {b.n} "
            f"with {b.tiles_per_dim} segments"
        )


def tiled_forward_solve(l: TiledMatrix, b: TiledVector) -> TiledVector:
    """Solve l @ x == b by blocked forward substitution."""
    _check_factor_vector(l, b)
    t = l.tiles_per_dim
    x: list[TaskHandle] = []
    for i in range(t):
        acc = b.segments[i]
        for j in range(i):
            acc = submit(
                [l.grid[i, j], x[j], acc],
                lambda a=l.grid[i, j], v=x[j], c=acc: _freeze(
                    tiles.matvec_sub(a.result(), v.result(), c.result())
                ),
            )
        x.append(
            submit(
                [l.grid[i, i], acc],
                lambda d=l.grid[i, i], c=acc: _freeze(
                    tiles.solve_lower_vec(d.result(), c.result())
                ),
            )
        )
    return TiledVector(n=b.n, tiles_per_dim=t, segments=x)


def tiled_backward_solve(l: TiledMatrix, b: TiledVector) -> TiledVector:
    """Solve l.T @ x == b by blocked backward substitution."""
    _check_factor_vector(l, b)
    t = l.tiles_per_dim
    x: dict[int, TaskHandle] = {}
    for i in reversed(range(t)):
        acc = b.segments[i]
        for j in range(i + 1, t):
            acc = submit(
                [l.grid[j, i], x[j], acc],
                lambda a=l.grid[j, i], v=x[j], c=acc: _freeze(
                    tiles.matvec_t_sub(a.result(), v.result(), c.result())
                ),
            )
        x[i] = submit(
            [l.grid[i, i], acc],
            lambda d=l.grid[i, i], c=acc: _freeze(
                tiles.solve_lower_t_vec(d.result(), c.result())
            ),
        )
    return TiledVector(n=b.n, tiles_per_dim=t, segments=[x[i] for i in range(t)])


def tiled_forward_solve_matrix(l: TiledMatrix, b: RectTiledMatrix) -> RectTiledMatrix:
    """Solve l @ V == b.T panel-wise; returns V (n-by-m, tiled t-by-row_tiles).

    b is a rect matrix whose column tiling matches the factor; the result
    holds the forward-substituted panels that prediction reuses for both the
    posterior covariance and the variance-only path.
    """
    if b.n != l.n or b.col_tiles != l.tiles_per_dim:
        raise DimensionMismatch(
            f"factor is {l.n} with {l.tiles_per_dim} tiles, rect matrix has "
            f"{b.n} columns in {b.col_tiles} tiles"
        )
    t = l.tiles_per_dim
    v: dict[tuple[int, int], TaskHandle] = {}
    for c in range(b.row_tiles):
        for i in range(t):
            acc = submit(
                [b.grid[c, i]],
                lambda h=b.grid[c, i]: _freeze(h.result().T.copy()),
            )
            for j in range(i):
                acc = submit(
                    [l.grid[i, j], v[j, c], acc],
                    lambda a=l.grid[i, j], p=v[j, c], q=acc: _freeze(
                        tiles.matmul_nn_sub(a.result(), p.result(), q.result())
                    ),
                )
            v[i, c] = submit(
                [l.grid[i, i], acc],
                lambda d=l.grid[i, i], q=acc: _freeze(
                    tiles.solve_lower_panel(d.result(), q.result())
                ),
            )
    return RectTiledMatrix(
        m=b.n, n=b.m, row_tiles=t, col_tiles=b.row_tiles, grid=v
    )


def tiled_gemv(a: RectTiledMatrix, x: TiledVector) -> TiledVector:
    """Matrix-vector product a @ x with per-tile accumulation tasks."""
    if a.n != x.n or a.col_tiles != x.tiles_per_dim:
        raise DimensionMismatch(
            f"matrix has {a.n} columns in {a.col_tiles} tiles, vector is "
            f"{x.n} in {x.tiles_per_dim} segments"
        )
    out: list[TaskHandle] = []
    for r in range(a.row_tiles):
        acc = submit(
            [a.grid[r, 0], x.segments[0]],
            lambda h=a.grid[r, 0], s=x.segments[0]: _freeze(
                tiles.matvec(h.result(), s.result())
            ),
        )
        for c in range(1, a.col_tiles):
            acc = submit(
                [a.grid[r, c], x.segments[c], acc],
                lambda h=a.grid[r, c], s=x.segments[c], p=acc: _freeze(
                    tiles.matvec_add(h.result(), s.result(), p.result())
                ),
            )
        out.append(acc)
    return TiledVector(n=a.m, tiles_per_dim=a.row_tiles, segments=out)
