"""Work-stealing task runtime.

A fixed pool of OS threads executes a dynamically constructed DAG of tasks.
Each worker owns a deque: it pops its own work LIFO and steals FIFO from
randomly chosen victims when idle. Task bodies become ready once every
dependency handle has completed; there are no barriers anywhere.

Lifecycle is explicit: :func:`start_runtime` brings the pool up,
:func:`stop_runtime` drains every submitted task (awaited or not) and only
then joins the workers. At most one runtime may be running per process.

External threads interact through :func:`run_as_root`, which schedules a
root computation inside the pool and blocks until it (and everything it
awaited) finishes. Worker threads that block on a handle do not idle: they
keep executing other ready tasks until the handle completes, so acyclic
graphs cannot deadlock.
"""

from __future__ import annotations

import atexit
import os
import random
import threading
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Generic, Sequence, TypeVar

from threadpoolctl import threadpool_limits

from .errors import AlreadyRunning, InvalidConfig, NotRunning

T = TypeVar("T")

WORKERS_ENV_VAR = "TASKGP_WORKERS"

# How long an idle worker parks before re-scanning the deques. Enqueues
# notify the condition variable, so this only bounds lost-wakeup latency.
_IDLE_WAIT = 0.01
_HELP_WAIT = 0.001


class RuntimeState(Enum):
    STOPPED = "stopped"
    RUNNING = "running"
    DRAINING = "draining"


@dataclass(frozen=True)
class RuntimeConfig:
    """Pool configuration, immutable once the runtime starts.

    ``worker_count`` of ``None`` falls back to the ``TASKGP_WORKERS``
    environment variable and then to ``os.cpu_count()``. ``extra_args``
    are accepted for interface parity with argv-style runtime launchers
    and are otherwise ignored.
    """

    worker_count: int | None = None
    extra_args: tuple[str, ...] = ()

    def resolved_worker_count(self) -> int:
        count = self.worker_count
        if count is None:
            env = os.environ.get(WORKERS_ENV_VAR)
            if env is not None:
                try:
                    count = int(env)
                except ValueError as exc:
                    raise InvalidConfig(
                        f"{WORKERS_ENV_VAR}={env!r} is not an integer"
                    ) from exc
            else:
                count = os.cpu_count() or 1
        if count < 1:
            raise InvalidConfig(f"worker_count must be >= 1, got {count}")
        return count


class TaskHandle(Generic[T]):
    """Completion handle for the value produced by a scheduled task.

    ``result()`` blocks until the producing task finished, returns its value,
    and is idempotent. If the task raised, the handle is poisoned and
    ``result()`` re-raises the original exception. Values are immutable once
    completed.
    """

    __slots__ = ("_runtime", "_done", "_value", "_error", "_dependents")

    def __init__(self, runtime: "Runtime | None"):
        self._runtime = runtime
        self._done = False
        self._value: T | None = None
        self._error: BaseException | None = None
        self._dependents: list[_Task] | tuple = []

    @classmethod
    def completed(cls, value: T) -> "TaskHandle[T]":
        """An already-completed handle wrapping ``value`` (no task, no runtime)."""
        handle: TaskHandle[T] = cls(None)
        handle._value = value
        handle._done = True
        handle._dependents = ()
        return handle

    def done(self) -> bool:
        return self._done

    def exception(self) -> BaseException | None:
        """The error that poisoned this handle, blocking until completion."""
        if not self._done:
            self._runtime._wait(self)  # type: ignore[union-attr]
        return self._error

    def result(self) -> T:
        if not self._done:
            self._runtime._wait(self)  # type: ignore[union-attr]
        if self._error is not None:
            raise self._error
        return self._value  # type: ignore[return-value]


class _Task:
    __slots__ = ("body", "handle", "pending", "poison")

    def __init__(self, body: Callable[[], Any], handle: TaskHandle, pending: int):
        self.body = body
        self.handle = handle
        self.pending = pending
        self.poison: BaseException | None = None


_tls = threading.local()


def _worker_index_in(runtime: "Runtime") -> int | None:
    if getattr(_tls, "runtime", None) is runtime:
        return _tls.index
    return None


class Runtime:
    """A work-stealing worker pool executing dataflow task graphs.

    Construct via :func:`start_runtime`; use the module-level
    :func:`submit` / :func:`run_as_root` helpers or the methods here.
    """

    def __init__(self, config: RuntimeConfig | None = None):
        self.config = config or RuntimeConfig()
        self.worker_count = self.config.resolved_worker_count()
        self._state = RuntimeState.STOPPED
        self._cv = threading.Condition()
        self._graph_lock = threading.Lock()
        self._deques: list[deque[_Task]] = [deque() for _ in range(self.worker_count)]
        self._threads: list[threading.Thread] = []
        self._outstanding = 0
        self._shutdown = False
        self._executed_counts = [0] * self.worker_count
        self._rr = 0
        self._blas_limiter = None

    # -- lifecycle ---------------------------------------------------------

    @property
    def state(self) -> RuntimeState:
        return self._state

    def worker_task_counts(self) -> list[int]:
        """Number of task bodies each worker has executed (for diagnostics)."""
        return list(self._executed_counts)

    def _start(self) -> None:
        global _current
        with _lifecycle_lock:
            if _current is not None and _current._state is not RuntimeState.STOPPED:
                raise AlreadyRunning("a runtime is already running in this process")
            # Tile tasks assume sequential BLAS; one BLAS thread per worker.
            self._blas_limiter = threadpool_limits(limits=1)
            self._shutdown = False
            self._state = RuntimeState.RUNNING
            for idx in range(self.worker_count):
                thread = threading.Thread(
                    target=self._worker_loop,
                    args=(idx,),
                    name=f"taskgp-worker-{idx}",
                    daemon=True,
                )
                self._threads.append(thread)
                thread.start()
            _current = self

    def stop(self) -> None:
        """Drain all submitted tasks, then shut the pool down (blocking)."""
        global _current
        with self._cv:
            if self._state is not RuntimeState.RUNNING:
                raise NotRunning("runtime is not running")
            self._state = RuntimeState.DRAINING
            while self._outstanding > 0:
                self._cv.wait()
            self._shutdown = True
            self._cv.notify_all()
        for thread in self._threads:
            thread.join()
        self._threads.clear()
        with _lifecycle_lock:
            self._state = RuntimeState.STOPPED
            if self._blas_limiter is not None:
                self._blas_limiter.restore_original_limits()
                self._blas_limiter = None
            if _current is self:
                _current = None

    # -- task submission ---------------------------------------------------

    def submit(
        self, dependencies: Sequence[TaskHandle], body: Callable[[], T]
    ) -> TaskHandle[T]:
        """Schedule ``body`` to run once every dependency handle completed.

        Returns immediately. ``body`` takes no arguments; it reads dependency
        values through their handles, which are guaranteed complete by the
        time it runs. If a dependency is poisoned the body is skipped and the
        poison propagates to the returned handle. Cycles are impossible by
        construction (dependencies exist before ``submit`` is called).
        """
        with self._cv:
            if self._state is RuntimeState.STOPPED or self._shutdown:
                raise NotRunning("runtime is not running")
            self._outstanding += 1
        handle: TaskHandle[T] = TaskHandle(self)
        task = _Task(body, handle, pending=len(dependencies) + 1)
        with self._graph_lock:
            for dep in dependencies:
                if dep._done:
                    task.pending -= 1
                    if dep._error is not None and task.poison is None:
                        task.poison = dep._error
                else:
                    dep._dependents.append(task)  # type: ignore[union-attr]
            task.pending -= 1  # release the registration guard
            ready = task.pending == 0
        if ready:
            self._enqueue(task)
        return handle

    def run_as_root(self, computation: Callable[[], T]) -> T:
        """Run ``computation`` inside the runtime and block until it finishes.

        Intended for external (non-pool) threads; the computation executes on
        a worker and may submit and await child tasks. The caller blocks until
        the computation and everything it awaited complete, then receives the
        value (or the re-raised error). Multiple external threads may each
        block in ``run_as_root`` concurrently.
        """
        with self._cv:
            if self._state is not RuntimeState.RUNNING:
                raise NotRunning("runtime is not running")
        return self.submit((), computation).result()

    # -- internals ---------------------------------------------------------

    def _enqueue(self, task: _Task) -> None:
        idx = _worker_index_in(self)
        if idx is None:
            idx = self._rr % self.worker_count
            self._rr += 1
        self._deques[idx].append(task)
        with self._cv:
            self._cv.notify_all()

    def _find_work(self, idx: int) -> _Task | None:
        try:
            return self._deques[idx].pop()  # LIFO on own deque
        except IndexError:
            pass
        n = self.worker_count
        if n > 1:
            start = random.randrange(n)
            for offset in range(n):
                victim = (start + offset) % n
                if victim == idx:
                    continue
                try:
                    return self._deques[victim].popleft()  # FIFO steal
                except IndexError:
                    continue
        return None

    def _any_queued(self) -> bool:
        return any(self._deques)

    def _execute(self, idx: int, task: _Task) -> None:
        if task.poison is not None:
            self._complete(task.handle, None, task.poison)
            return
        self._executed_counts[idx] += 1
        try:
            value = task.body()
        except BaseException as exc:  # noqa: BLE001 - poison carries anything
            self._complete(task.handle, None, exc)
        else:
            self._complete(task.handle, value, None)

    def _complete(self, handle: TaskHandle, value, error) -> None:
        with self._graph_lock:
            handle._value = value
            handle._error = error
            handle._done = True
            dependents = handle._dependents
            handle._dependents = ()
            ready = []
            for task in dependents:
                if error is not None and task.poison is None:
                    task.poison = error
                task.pending -= 1
                if task.pending == 0:
                    ready.append(task)
        for task in ready:
            self._enqueue(task)
        with self._cv:
            self._outstanding -= 1
            self._cv.notify_all()

    def _worker_loop(self, idx: int) -> None:
        _tls.runtime = self
        _tls.index = idx
        try:
            while True:
                task = self._find_work(idx)
                if task is not None:
                    self._execute(idx, task)
                    continue
                with self._cv:
                    if self._shutdown:
                        return
                    if not self._any_queued():
                        self._cv.wait(timeout=_IDLE_WAIT)
        finally:
            _tls.runtime = None
            _tls.index = None

    def _wait(self, handle: TaskHandle) -> None:
        idx = _worker_index_in(self)
        if idx is not None:
            # A worker blocking on a handle keeps the pool busy: it executes
            # other ready tasks until the handle completes.
            while not handle._done:
                task = self._find_work(idx)
                if task is not None:
                    self._execute(idx, task)
                    continue
                with self._cv:
                    if not handle._done and not self._any_queued():
                        self._cv.wait(timeout=_HELP_WAIT)
        else:
            with self._cv:
                while not handle._done:
                    self._cv.wait()


_lifecycle_lock = threading.Lock()
_current: Runtime | None = None


def current_runtime() -> Runtime | None:
    """The process-wide runtime, or ``None`` if none has been started."""
    return _current


def require_runtime() -> Runtime:
    runtime = _current
    if runtime is None or runtime._state is RuntimeState.STOPPED:
        raise NotRunning("no running runtime; call start_runtime() first")
    return runtime


def start_runtime(config: RuntimeConfig | None = None) -> Runtime:
    """Start the process-wide runtime and return it (state becomes RUNNING)."""
    runtime = Runtime(config)
    runtime._start()
    return runtime


def stop_runtime() -> None:
    """Drain and stop the process-wide runtime (blocking)."""
    runtime = _current
    if runtime is None:
        raise NotRunning("runtime is not running")
    runtime.stop()


def submit(dependencies: Sequence[TaskHandle], body: Callable[[], T]) -> TaskHandle[T]:
    """Submit a task to the current runtime; see :meth:`Runtime.submit`."""
    return require_runtime().submit(dependencies, body)


def run_as_root(computation: Callable[[], T]) -> T:
    """Run a computation inside the current runtime; see :meth:`Runtime.run_as_root`."""
    return require_runtime().run_as_root(computation)


def _drain_at_exit() -> None:
    runtime = _current
    if runtime is not None and runtime.state is RuntimeState.RUNNING:
        try:
            runtime.stop()
        except Exception:
            pass


atexit.register(_drain_at_exit)
