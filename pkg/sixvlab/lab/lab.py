import threading
from pathlib import Path

from ..spectral.spectral import SpectralMeasure, spectral_measure
from ..transfer.cache import EigenCache
from ..transfer.params import ModelParams
from ..transfer.transfer import EigenSystem, build_and_codiagonalize
from ..utils.batch import GridRunner
from ..utils.limits import Limits
from ..utils.logger import get_logger


class SixVertexLab:
    """
    Entry point to the exact cylinder computations.

    EigenSystems are built lazily per (L, c) and kept for the lifetime of the
    lab; with a cache directory they are also persisted through
    ``EigenCache`` and reused across runs.
    """

    def __init__(self, cache_dir: str | Path | None = None, workers: int = 1):
        """
        Initialize the lab.

        Args:
            cache_dir: Optional directory for on-disk EigenSystems
            workers: Worker threads for operator assembly and prefetching
        """
        self.logger = get_logger("sixvlab.lab")
        self.workers = max(1, int(workers))
        self.cache = EigenCache(cache_dir) if cache_dir is not None else None
        self.systems: dict[tuple[int, float], EigenSystem] = {}
        self.measures: dict[tuple[int, float], SpectralMeasure] = {}
        self._lock = threading.Lock()

        self.logger.info(
            f"SixVertexLab initialized (cache: {self.cache.directory if self.cache else 'memory only'})"
        )

    @staticmethod
    def _key(L: int, c: float) -> tuple[int, float]:
        return Limits.validate_L(L), float(c)

    def system(self, L: int, c: float) -> EigenSystem:
        """
        Get the EigenSystem of width L at weight c.

        Raises:
            ValueError: If L or c is invalid
            CapExceededError: If L is above ``Limits.MAX_L``
        """
        key = self._key(L, c)
        with self._lock:
            cached = self.systems.get(key)
        if cached is not None:
            return cached

        params = ModelParams(c=key[1])
        self.logger.debug(f"Building EigenSystem for L={key[0]}, {params}")
        try:
            if self.cache is not None:
                built = self.cache.get_or_build(key[0], params, workers=self.workers)
            else:
                built = build_and_codiagonalize(key[0], params, workers=self.workers)
        except Exception as e:
            self.logger.error(f"Failed to build EigenSystem L={key[0]}, c={key[1]}: {e}")
            raise

        with self._lock:
            return self.systems.setdefault(key, built)

    def measure(self, L: int, c: float) -> SpectralMeasure:
        """Get the two-point spectral measure μ_L at weight c."""
        key = self._key(L, c)
        with self._lock:
            cached = self.measures.get(key)
        if cached is not None:
            return cached
        built = spectral_measure(self.system(*key))
        with self._lock:
            return self.measures.setdefault(key, built)

    def prefetch(self, Ls, cs) -> list[str]:
        """
        Build the systems of a parameter grid on the worker pool.

        Returns:
            Task ids of grid points that failed
        """
        runner = GridRunner(max_workers=self.workers)
        for L in Ls:
            for c in cs:
                runner.add_task(f"L={L},c={c}", self.system, L=L, c=c)
        failed = [r.task_id for r in runner.execute() if not r.ok]
        for task_id in failed:
            self.logger.warning(f"Prefetch of {task_id} failed")
        return failed

    def get_available_systems(self) -> list[tuple[int, float]]:
        """
        Get the (L, c) pairs built so far.

        Returns:
            Sorted list of keys
        """
        with self._lock:
            return sorted(self.systems)

    def close(self) -> None:
        """Drop all in-memory systems and measures."""
        with self._lock:
            self.systems.clear()
            self.measures.clear()
        self.logger.info("SixVertexLab closed")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
