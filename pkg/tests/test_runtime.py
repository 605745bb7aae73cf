"""Behavior tests for the work-stealing runtime: lifecycle, dataflow, draining."""

import threading
import time

import pytest

import taskgp
from taskgp.errors import AlreadyRunning, InvalidConfig, NotRunning
from taskgp.runtime import RuntimeConfig, RuntimeState, TaskHandle


class TestLifecycle:
    """start/stop semantics and the single-runtime-per-process rule."""

    def test_start_stop_clean(self):
        """A started runtime stops without error and clears the process slot."""
        runtime = taskgp.start_runtime(RuntimeConfig(worker_count=2))
        assert runtime.state is RuntimeState.RUNNING
        assert taskgp.current_runtime() is runtime
        runtime.stop()
        assert runtime.state is RuntimeState.STOPPED
        assert taskgp.current_runtime() is None

    def test_start_twice_raises(self):
        """Only one runtime may run per process."""
        taskgp.start_runtime(RuntimeConfig(worker_count=1))
        with pytest.raises(AlreadyRunning):
            taskgp.start_runtime(RuntimeConfig(worker_count=1))
        taskgp.stop_runtime()

    def test_stop_without_start_raises(self):
        with pytest.raises(NotRunning):
            taskgp.stop_runtime()

    def test_stop_twice_raises(self):
        runtime = taskgp.start_runtime(RuntimeConfig(worker_count=1))
        runtime.stop()
        with pytest.raises(NotRunning):
            runtime.stop()

    def test_restart_after_stop(self):
        """Stopping releases the slot; a fresh runtime may start."""
        taskgp.start_runtime(RuntimeConfig(worker_count=1))
        taskgp.stop_runtime()
        runtime = taskgp.start_runtime(RuntimeConfig(worker_count=2))
        assert runtime.worker_count == 2
        taskgp.stop_runtime()

    def test_submit_after_stop_raises(self):
        runtime = taskgp.start_runtime(RuntimeConfig(worker_count=1))
        runtime.stop()
        with pytest.raises(NotRunning):
            runtime.submit((), lambda: 1)

    def test_submit_without_runtime_raises(self):
        with pytest.raises(NotRunning):
            taskgp.submit((), lambda: 1)

    def test_run_as_root_without_runtime_raises(self):
        with pytest.raises(NotRunning):
            taskgp.run_as_root(lambda: 1)


class TestWorkerCountResolution:
    """Explicit count beats the environment variable beats the core count."""

    def test_explicit_count(self):
        assert RuntimeConfig(worker_count=3).resolved_worker_count() == 3

    def test_env_fallback(self, monkeypatch):
        monkeypatch.setenv("TASKGP_WORKERS", "5")
        assert RuntimeConfig().resolved_worker_count() == 5

    def test_explicit_beats_env(self, monkeypatch):
        monkeypatch.setenv("TASKGP_WORKERS", "5")
        assert RuntimeConfig(worker_count=2).resolved_worker_count() == 2

    def test_env_must_be_integer(self, monkeypatch):
        monkeypatch.setenv("TASKGP_WORKERS", "lots")
        with pytest.raises(InvalidConfig):
            RuntimeConfig().resolved_worker_count()

    def test_nonpositive_count_rejected(self):
        with pytest.raises(InvalidConfig):
            RuntimeConfig(worker_count=0).resolved_worker_count()

    def test_env_used_at_start(self, monkeypatch):
        monkeypatch.setenv("TASKGP_WORKERS", "3")
        runtime = taskgp.start_runtime()
        assert runtime.worker_count == 3
        taskgp.stop_runtime()


class TestDataflow:
    """Dependency-ordered execution and value plumbing."""

    def test_single_task_value(self, pool):
        assert taskgp.submit((), lambda: 41 + 1).result() == 42

    def test_chain_runs_in_order(self, pool):
        a = taskgp.submit((), lambda: 10)
        b = taskgp.submit([a], lambda: a.result() * 2)
        c = taskgp.submit([b], lambda: b.result() + 1)
        assert c.result() == 21

    def test_diamond_dependencies(self, pool):
        top = taskgp.submit((), lambda: 3)
        left = taskgp.submit([top], lambda: top.result() + 1)
        right = taskgp.submit([top], lambda: top.result() * 2)
        bottom = taskgp.submit(
            [left, right], lambda: left.result() + right.result()
        )
        assert bottom.result() == 10

    def test_dependency_completes_before_body(self, pool):
        """Bodies only run after every dependency handle is done."""
        order = []
        slow = taskgp.submit((), lambda: (time.sleep(0.02), order.append("dep"))[0])
        after = taskgp.submit([slow], lambda: order.append("body"))
        after.result()
        assert order == ["dep", "body"]

    def test_completed_handle_as_dependency(self, pool):
        done = TaskHandle.completed(7)
        assert done.done()
        out = taskgp.submit([done], lambda: done.result() + 1)
        assert out.result() == 8

    def test_run_as_root_returns_value(self, pool):
        assert taskgp.run_as_root(lambda: "ok") == "ok"

    def test_run_as_root_can_submit_and_await(self, pool):
        def root():
            parts = [taskgp.submit((), lambda k=k: k * k) for k in range(10)]
            return sum(p.result() for p in parts)

        assert taskgp.run_as_root(root) == sum(k * k for k in range(10))

    def test_result_idempotent(self, pool):
        h = taskgp.submit((), lambda: [1, 2])
        assert h.result() is h.result()

    def test_many_external_waiters(self, pool):
        """Several external threads may block in run_as_root concurrently."""
        results = []

        def call(k):
            results.append(taskgp.run_as_root(lambda: k * 2))

        threads = [threading.Thread(target=call, args=(k,)) for k in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(results) == [2 * k for k in range(8)]


class TestBlockingInsideTasks:
    """Workers that block on a handle keep executing other ready tasks."""

    def test_nested_await_single_worker(self):
        """No deadlock even when the only worker blocks on a child task."""
        taskgp.start_runtime(RuntimeConfig(worker_count=1))

        def root():
            child = taskgp.submit((), lambda: 5)
            return child.result() + 1

        assert taskgp.run_as_root(root) == 6
        taskgp.stop_runtime()

    def test_deep_nesting(self, pool):
        def nest(depth):
            if depth == 0:
                return 0
            child = taskgp.submit((), lambda: nest(depth - 1))
            return child.result() + 1

        assert taskgp.run_as_root(lambda: nest(30)) == 30


class TestErrorPropagation:
    """Failures poison the handle and every transitive dependent."""

    def test_result_reraises_body_error(self, pool):
        def boom():
            raise ValueError("bad tile")

        h = taskgp.submit((), boom)
        with pytest.raises(ValueError, match="bad tile"):
            h.result()

    def test_exception_accessor(self, pool):
        h = taskgp.submit((), lambda: 1 / 0)
        assert isinstance(h.exception(), ZeroDivisionError)

    def test_poison_propagates_transitively(self, pool):
        def boom():
            raise ArithmeticError("root cause")

        a = taskgp.submit((), boom)
        b = taskgp.submit([a], lambda: a.result() + 1)
        c = taskgp.submit([b], lambda: b.result() + 1)
        with pytest.raises(ArithmeticError, match="root cause"):
            c.result()

    def test_poisoned_dependent_body_never_runs(self, pool):
        ran = []

        def boom():
            raise RuntimeError("no")

        a = taskgp.submit((), boom)
        b = taskgp.submit([a], lambda: ran.append(True))
        with pytest.raises(RuntimeError):
            b.result()
        assert ran == []

    def test_independent_tasks_unaffected(self, pool):
        bad = taskgp.submit((), lambda: 1 / 0)
        good = taskgp.submit((), lambda: "fine")
        assert good.result() == "fine"
        assert bad.exception() is not None

    def test_run_as_root_reraises(self, pool):
        with pytest.raises(KeyError):
            taskgp.run_as_root(lambda: {}["missing"])


class TestDrainBeforeStop:
    """stop() returns only after every submitted task has executed."""

    def test_thousand_task_drain(self):
        taskgp.start_runtime(RuntimeConfig(worker_count=4))
        counter = []
        lock = threading.Lock()

        def bump():
            with lock:
                counter.append(1)

        for _ in range(1000):
            taskgp.submit((), bump)
        taskgp.stop_runtime()
        assert len(counter) == 1000

    def test_drain_covers_tasks_spawned_while_draining(self):
        """Tasks submitted by in-flight bodies are drained too."""
        taskgp.start_runtime(RuntimeConfig(worker_count=2))
        seen = []

        def parent():
            time.sleep(0.02)
            taskgp.submit((), lambda: seen.append("child"))
            seen.append("parent")

        taskgp.submit((), parent)
        taskgp.stop_runtime()
        assert sorted(seen) == ["child", "parent"]

    def test_poisoned_tasks_still_drain(self):
        taskgp.start_runtime(RuntimeConfig(worker_count=2))
        bad = taskgp.submit((), lambda: 1 / 0)
        dependent = taskgp.submit([bad], lambda: "never")
        taskgp.stop_runtime()
        assert dependent.done()
        assert isinstance(dependent.exception(), ZeroDivisionError)


class TestWorkStealing:
    """Tasks enqueued on one busy worker end up executed by several."""

    def test_idle_workers_steal(self):
        runtime = taskgp.start_runtime(RuntimeConfig(worker_count=4))

        def root():
            # All children land on this worker's deque; the other three
            # workers only get work by stealing.
            children = [
                taskgp.submit((), lambda: time.sleep(0.005)) for _ in range(60)
            ]
            for child in children:
                child.result()

        taskgp.run_as_root(root)
        busy = [c for c in runtime.worker_task_counts() if c > 0]
        taskgp.stop_runtime()
        assert len(busy) >= 2

    def test_counts_sum_to_executed_bodies(self):
        runtime = taskgp.start_runtime(RuntimeConfig(worker_count=3))
        handles = [taskgp.submit((), lambda: None) for _ in range(50)]
        for h in handles:
            h.result()
        assert sum(runtime.worker_task_counts()) == 50
        taskgp.stop_runtime()
