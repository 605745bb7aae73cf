"""Synthetic trajectory generation, lag embedding, and dataset CSV IO.

Everything here is a pure function of its arguments (plus the seed), safe
to call with or without the runtime.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, DivergenceError, InvalidConfig, ParseError

_DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class Dataset:
    """Feature matrix z (one row per sample) and observation vector y."""

    z: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        z = np.ascontiguousarray(self.z, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if z.ndim != 2 or z.shape[1] < 1:
            raise DimensionMismatch(f"z must be N x D with D >= 1, got shape {z.shape}")
        if y.ndim != 1 or y.shape[0] != z.shape[0]:
            raise DimensionMismatch(
                f"y must have one entry per row of z, got {y.shape} vs {z.shape}"
            )
        if not (np.isfinite(z).all() and np.isfinite(y).all()):
            raise InvalidConfig("dataset entries must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def d(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class SineForcing:
    amplitude: float = 1.0
    frequency: float = 1.0  # rad/s

    def __call__(self, t: float) -> float:
        return self.amplitude * np.sin(self.frequency * t)


@dataclass(frozen=True)
class MSDConfig:
    """Mass-spring-damper with a cubic stiffness term and sine forcing.

    Dynamics: mass*x'' + damping*x' + stiffness*x + cubic_stiffness*x**3
    = forcing(t). Positions are sampled every dt and perturbed with
    Gaussian measurement noise of std noise_std.
    """

    mass: float = 1.0
    damping: float = 0.3
    stiffness: float = 1.0
    cubic_stiffness: float = 0.5
    dt: float = 0.1
    steps: int = 1024
    forcing: SineForcing | None = field(default_factory=SineForcing)
    seed: int = 0
    noise_std: float = 0.05
    x0: float = 0.0
    v0: float = 0.0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise InvalidConfig(f"dt must be positive, got {self.dt}")
        if self.steps < 2:
            raise InvalidConfig(f"steps must be at least 2, got {self.steps}")
        if self.mass <= 0:
            raise InvalidConfig(f"mass must be positive, got {self.mass}")
        if self.noise_std < 0:
            raise InvalidConfig(f"noise_std must be non-negative, got {self.noise_std}")


def simulate_msd_states(cfg: MSDConfig) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free (position, velocity) trajectories via fixed-step RK4."""

    def accel(x: float, v: float, t: float) -> float:
        u = cfg.forcing(t) if cfg.forcing is not None else 0.0
        return (
            u
            - cfg.damping * v
            - cfg.stiffness * x
            - cfg.cubic_stiffness * x**3
        ) / cfg.mass

    xs = np.empty(cfg.steps)
    vs = np.empty(cfg.steps)
    x, v = float(cfg.x0), float(cfg.v0)
    xs[0], vs[0] = x, v
    h = cfg.dt
    for i in range(1, cfg.steps):
        t = (i - 1) * h
        k1x, k1v = v, accel(x, v, t)
        k2x, k2v = v + 0.5 * h * k1v, accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v, t + 0.5 * h)
        k3x, k3v = v + 0.5 * h * k2v, accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v, t + 0.5 * h)
        k4x, k4v = v + h * k3v, accel(x + h * k3x, v + h * k3v, t + h)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if abs(x) > _DIVERGENCE_LIMIT or abs(v) > _DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"state exceeded {_DIVERGENCE_LIMIT:g} at step {i}; "
                "unstable configuration (reduce dt or stiffness)"
            )
        xs[i], vs[i] = x, v
    return xs, vs


def simulate_msd(cfg: MSDConfig) -> np.ndarray:
    """Measured position trajectory: RK4 states plus seeded Gaussian noise."""
    xs, _ = simulate_msd_states(cfg)
    if cfg.noise_std > 0:
        rng = np.random.default_rng(cfg.seed)
        xs = xs + rng.normal(0.0, cfg.noise_std, size=cfg.steps)
    return xs


@dataclass(frozen=True)
class LagSpec:
    """Number of lagged samples used as features for each prediction."""

    num_regressors: int

    def __post_init__(self) -> None:
        if self.num_regressors < 1:
            raise InvalidConfig(
                f"num_regressors must be >= 1, got {self.num_regressors}"
            )


def lag_embed(series, spec: LagSpec) -> Dataset:
    """Turn a time series into a regression dataset of lagged windows.

    Row t of z holds the D preceding samples, most recent first; y[t] is
    the sample being predicted. A series of length L yields L - D rows.
    """
    series = np.asarray(series, dtype=np.float64)
    d = spec.num_regressors
    if series.ndim != 1 or series.shape[0] <= d:
        raise DimensionMismatch(
            f"need a 1-D series longer than {d} samples, got shape {series.shape}"
        )
    n = series.shape[0] - d
    z = np.empty((n, d))
    for j in range(d):
        z[:, j] = series[d - 1 - j : d - 1 - j + n]
    return Dataset(z=z, y=series[d:].copy())


def save_csv(data: Dataset, path: str, header: bool = False) -> None:
    """Write one row per sample: feature columns then y last, full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            cols = [f"z{j}" for j in range(data.d)] + ["y"]
            fh.write(",".join(cols) + "\n")
        for row, target in zip(data.z, data.y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{float(target)!r}\n")


def load_csv(path: str, header: bool = False) -> Dataset:
    """Read a dataset written by save_csv; the last column is y."""
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if lineno == 1 and header:
                continue
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
                if width < 2:
                    raise ParseError("need at least one feature column and y", lineno)
            elif len(fields) != width:
                raise ParseError(
                    f"expected {width} columns, got {len(fields)}", lineno
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from exc
    if not rows:
        raise ParseError("no data rows", 1)
    arr = np.array(rows)
    return Dataset(z=arr[:, :-1], y=arr[:, -1])
