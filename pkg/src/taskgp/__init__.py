"""taskgp: Gaussian-process regression as tiled task graphs.

Linear algebra is partitioned into matrix tiles; every tile operation is
a task scheduled by a work-stealing thread pool, so independent work
overlaps without global barriers. Start the runtime, build models, stop
the runtime:

    import taskgp

    taskgp.start_runtime(taskgp.RuntimeConfig(worker_count=4))
    model = taskgp.GPModel(train, taskgp.KernelParams(), tiles_per_dim=4)
    result = model.predict_variance(test)
    taskgp.stop_runtime()
"""

from . import errors
from .bench import BenchRecord, ExperimentSpec, emit_csv, load_records, run_experiment, summarize
from .covariance import (
    KernelParams,
    assemble_covariance,
    assemble_cross_covariance,
    kernel,
)
from .data import (
    Dataset,
    LagSpec,
    MSDConfig,
    SineForcing,
    lag_embed,
    load_csv,
    save_csv,
    simulate_msd,
    simulate_msd_states,
)
from .model import AdamConfig, GPModel, PredictionResult
from .runtime import (
    RuntimeConfig,
    TaskHandle,
    current_runtime,
    run_as_root,
    start_runtime,
    stop_runtime,
    submit,
)
from .tiled import RectTiledMatrix, TiledMatrix, TiledVector, tiled_cholesky
from .tiles import get_tile_backend, set_tile_backend

__version__ = "0.1.0"

__all__ = [
    "AdamConfig",
    "BenchRecord",
    "Dataset",
    "ExperimentSpec",
    "GPModel",
    "KernelParams",
    "LagSpec",
    "MSDConfig",
    "PredictionResult",
    "RectTiledMatrix",
    "RuntimeConfig",
    "SineForcing",
    "TaskHandle",
    "TiledMatrix",
    "TiledVector",
    "assemble_covariance",
    "assemble_cross_covariance",
    "current_runtime",
    "emit_csv",
    "errors",
    "get_tile_backend",
    "kernel",
    "lag_embed",
    "load_csv",
    "load_records",
    "run_as_root",
    "run_experiment",
    "save_csv",
    "set_tile_backend",
    "simulate_msd",
    "simulate_msd_states",
    "start_runtime",
    "stop_runtime",
    "submit",
    "summarize",
    "tiled_cholesky",
    "__version__",
]
