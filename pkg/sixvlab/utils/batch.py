from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from .logger import get_logger


@dataclass
class GridTask:
    """One unit of work within a parameter grid."""

    task_id: str
    func: Callable[..., Any]
    kwargs: dict[str, Any] = field(default_factory=dict)


@dataclass
class GridResult:
    """Outcome of a GridTask."""

    task_id: str
    value: Any = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


class GridRunner:
    """
    Dispatches independent grid points (L, c, ζ values or Monte Carlo
    chains) to a thread pool.

    Results come back in submission order regardless of completion order, so
    output files written from them are deterministic.
    """

    def __init__(self, max_workers: int = 1, max_tasks: int = 10_000):
        """
        Initialize the runner.

        Args:
            max_workers: Number of worker threads (1 runs inline)
            max_tasks: Maximum number of queued tasks
        """
        self.logger = get_logger("sixvlab.batch")
        self.max_workers = max(1, int(max_workers))
        self.max_tasks = max_tasks
        self.tasks: list[GridTask] = []

        self.logger.debug(f"GridRunner initialized with {self.max_workers} workers")

    def add_task(self, task_id: str, func: Callable[..., Any], **kwargs: Any) -> None:
        """
        Queue a task.

        Args:
            task_id: Unique identifier, used to key the result
            func: Callable run as ``func(**kwargs)``
            **kwargs: Arguments for ``func``

        Raises:
            ValueError: If the queue is full or the id is already taken
        """
        if len(self.tasks) >= self.max_tasks:
            raise ValueError(f"Task queue is full ({self.max_tasks} tasks)")
        if any(t.task_id == task_id for t in self.tasks):
            raise ValueError(f"Duplicate task id: {task_id}")

        self.tasks.append(GridTask(task_id=task_id, func=func, kwargs=kwargs))
        self.logger.debug(f"Added task {task_id}")

    def _run_one(self, task: GridTask) -> GridResult:
        try:
            return GridResult(task_id=task.task_id, value=task.func(**task.kwargs))
        except Exception as e:
            self.logger.error(f"Task {task.task_id} failed: {e}")
            return GridResult(task_id=task.task_id, error=f"{type(e).__name__}: {e}")

    def execute(self, raise_on_error: bool = False) -> list[GridResult]:
        """
        Run all queued tasks and clear the queue.

        Args:
            raise_on_error: Re-raise the first failure instead of recording it

        Returns:
            Results in submission order
        """
        tasks, self.tasks = self.tasks, []
        self.logger.info(f"Executing {len(tasks)} tasks on {self.max_workers} workers")

        if raise_on_error:
            if self.max_workers == 1:
                values = [t.func(**t.kwargs) for t in tasks]
            else:
                with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                    values = list(pool.map(lambda t: t.func(**t.kwargs), tasks))
            return [GridResult(t.task_id, v) for t, v in zip(tasks, values, strict=True)]

        if self.max_workers == 1:
            return [self._run_one(t) for t in tasks]
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(self._run_one, tasks))

    def get_task_count(self) -> int:
        return len(self.tasks)

    def clear_tasks(self) -> None:
        self.tasks.clear()
