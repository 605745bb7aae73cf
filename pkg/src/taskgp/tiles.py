"""Dense tile kernels.

The four factorization kernels (potrf/trsm/syrk/gemm) are pluggable: the
default backend delegates to BLAS/LAPACK through numpy and scipy, and a
pure-loop reference backend exists for cross-checking and for environments
without a tuned BLAS. Select with :func:`set_tile_backend`.

The remaining helpers (vector solves, panel solves, accumulating products)
are fixed numpy implementations used by the tiled solve algorithms.

All kernels are value-oriented: inputs are never mutated and every kernel
returns a fresh array.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite, SingularTriangular


class BlasTileKernels:
    """Tile kernels backed by numpy/scipy BLAS and LAPACK routines."""

    name = "blas"

    @staticmethod
    def potrf(a: np.ndarray) -> np.ndarray:
        try:
            return np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from exc

    @staticmethod
    def trsm(l: np.ndarray, b: np.ndarray) -> np.ndarray:
        # X such that X @ l.T == b  <=>  l @ X.T == b.T
        return solve_triangular(l, b.T, lower=True, check_finite=False).T

    @staticmethod
    def syrk(a: np.ndarray, c: np.ndarray) -> np.ndarray:
        return c - a @ a.T

    @staticmethod
    def gemm(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
        return c - a @ b.T


class LoopTileKernels:
    """Hand-written loop kernels; slow, used as an independent reference."""

    name = "loops"

    @staticmethod
    def potrf(a: np.ndarray) -> np.ndarray:
        n = a.shape[0]
        out = np.zeros_like(a)
        for j in range(n):
            pivot = a[j, j] - sum(out[j, t] * out[j, t] for t in range(j))
            if pivot <= 0.0:
                raise NotPositiveDefinite(f"pivot {pivot} at index {j}")
            out[j, j] = pivot**0.5
            for i in range(j + 1, n):
                s = sum(out[i, t] * out[j, t] for t in range(j))
                out[i, j] = (a[i, j] - s) / out[j, j]
        return out

    @staticmethod
    def trsm(l: np.ndarray, b: np.ndarray) -> np.ndarray:
        rows, n = b.shape
        out = np.zeros_like(b)
        for r in range(rows):
            for j in range(n):
                s = sum(out[r, t] * l[j, t] for t in range(j))
                out[r, j] = (b[r, j] - s) / l[j, j]
        return out

    @staticmethod
    def syrk(a: np.ndarray, c: np.ndarray) -> np.ndarray:
        n, k = a.shape
        out = c.copy()
        for i in range(n):
            for j in range(n):
                out[i, j] -= sum(a[i, t] * a[j, t] for t in range(k))
        return out

    @staticmethod
    def gemm(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
        m, k = a.shape
        n = b.shape[0]
        out = c.copy()
        for i in range(m):
            for j in range(n):
                out[i, j] -= sum(a[i, t] * b[j, t] for t in range(k))
        return out


_BACKENDS = {cls.name: cls for cls in (BlasTileKernels, LoopTileKernels)}
_active = BlasTileKernels


def set_tile_backend(name: str) -> None:
    """Switch the factorization kernel backend ('blas' or a registered name)."""
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown tile backend {name!r}; have {sorted(_BACKENDS)}")


def get_tile_backend() -> str:
    return _active.name


def register_tile_backend(name: str, backend) -> None:
    """Register a vendor backend exposing potrf/trsm/syrk/gemm."""
    _BACKENDS[name] = backend


def _as_tile(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"tile must be 2-D, got shape {arr.shape}")
    return arr


def _check_lower_diag(l: np.ndarray) -> None:
    if np.any(np.diag(l) == 0.0):
        raise SingularTriangular("triangular factor has a zero diagonal entry")


def tile_potrf(a) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite tile."""
    a = _as_tile(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"potrf needs a square tile, got {a.shape}")
    return _active.potrf(a)


def tile_trsm(l, b) -> np.ndarray:
    """Solve X @ l.T == b for X, with l lower-triangular (panel update form)."""
    l, b = _as_tile(l), _as_tile(b)
    if l.shape[0] != l.shape[1] or b.shape[1] != l.shape[0]:
        raise DimensionMismatch(f"trsm shapes incompatible: {l.shape} vs {b.shape}")
    _check_lower_diag(l)
    return _active.trsm(l, b)


def tile_syrk(a, c) -> np.ndarray:
    """Symmetric rank-k update c - a @ a.T."""
    a, c = _as_tile(a), _as_tile(c)
    if c.shape[0] != c.shape[1] or a.shape[0] != c.shape[0]:
        raise DimensionMismatch(f"syrk shapes incompatible: {a.shape} vs {c.shape}")
    return _active.syrk(a, c)


def tile_gemm(a, b, c) -> np.ndarray:
    """Trailing update c - a @ b.T."""
    a, b, c = _as_tile(a), _as_tile(b), _as_tile(c)
    if a.shape[1] != b.shape[1] or c.shape != (a.shape[0], b.shape[0]):
        raise DimensionMismatch(
            f"gemm shapes incompatible: {a.shape}, {b.shape}, {c.shape}"
        )
    return _active.gemm(a, b, c)


# -- fixed helpers for the tiled solves and products ------------------------


def solve_lower_vec(l: np.ndarray, v: np.ndarray) -> np.ndarray:
    """x with l @ x == v, l lower-triangular."""
    _check_lower_diag(l)
    return solve_triangular(l, v, lower=True, check_finite=False)


def solve_lower_t_vec(l: np.ndarray, v: np.ndarray) -> np.ndarray:
    """x with l.T @ x == v, l lower-triangular."""
    _check_lower_diag(l)
    return solve_triangular(l, v, trans="T", lower=True, check_finite=False)


def solve_lower_panel(l: np.ndarray, b: np.ndarray) -> np.ndarray:
    """X with l @ X == b (multi-column forward substitution)."""
    _check_lower_diag(l)
    return solve_triangular(l, b, lower=True, check_finite=False)


def matvec(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return a @ x


def matvec_add(a: np.ndarray, x: np.ndarray, acc: np.ndarray) -> np.ndarray:
    return acc + a @ x


def matvec_sub(a: np.ndarray, x: np.ndarray, acc: np.ndarray) -> np.ndarray:
    return acc - a @ x


def matvec_t_sub(a: np.ndarray, x: np.ndarray, acc: np.ndarray) -> np.ndarray:
    return acc - a.T @ x


def matmul_nn_sub(a: np.ndarray, b: np.ndarray, acc: np.ndarray) -> np.ndarray:
    return acc - a @ b


def matmul_tn_sub(a: np.ndarray, b: np.ndarray, acc: np.ndarray) -> np.ndarray:
    return acc - a.T @ b


def matmul_tn_add(a: np.ndarray, b: np.ndarray, acc: np.ndarray) -> np.ndarray:
    return acc + a.T @ b


def column_sumsq(a: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->j", a, a)
