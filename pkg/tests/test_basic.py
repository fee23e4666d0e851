"""
Basic tests for the sixvlab utilities.
"""

import logging
import threading
from unittest.mock import patch

import pytest

import sixvlab
from sixvlab._version import get_version
from sixvlab.utils.batch import GridRunner
from sixvlab.utils.errors import CapExceededError, ConfigError, GammaPoleError, SixVertexLabError
from sixvlab.utils.limits import Limits
from sixvlab.utils.logger import get_logger, setup_logger
from sixvlab.utils.union_find import UnionFind


class TestLimits:
    """Test the size caps."""

    def test_validate_L_accepts_even(self):
        """Even circumferences up to the cap pass through."""
        assert Limits.validate_L(2) == 2
        assert Limits.validate_L(16) == 16
        assert Limits.validate_L(8.0) == 8

    def test_validate_L_rejects_odd_and_small(self):
        """Odd or too small circumferences are rejected."""
        with pytest.raises(ValueError):
            Limits.validate_L(5)
        with pytest.raises(ValueError):
            Limits.validate_L(0)

    def test_validate_L_cap(self):
        """L above the cap raises CapExceededError."""
        with pytest.raises(CapExceededError):
            Limits.validate_L(18)
        with pytest.raises(CapExceededError):
            Limits.validate_L(10, cap=8)

    def test_validate_torus(self):
        """Torus enumeration is capped by L and by the number of vertices."""
        assert Limits.validate_torus(3, 8) == (3, 8)
        with pytest.raises(CapExceededError):
            Limits.validate_torus(4, 8)
        with pytest.raises(CapExceededError):
            Limits.validate_torus(1, 10)
        with pytest.raises(ValueError):
            Limits.validate_torus(0, 4)

    def test_validate_slab_width(self):
        """Slab widths above three columns are capped."""
        assert Limits.validate_slab_width(3) == 3
        with pytest.raises(CapExceededError):
            Limits.validate_slab_width(4)


class TestErrors:
    """Test the exception hierarchy."""

    def test_value_error_subclasses(self):
        """Caps and config errors are also ValueErrors."""
        assert issubclass(CapExceededError, ValueError)
        assert issubclass(ConfigError, ValueError)
        assert issubclass(CapExceededError, SixVertexLabError)

    def test_gamma_pole_location(self):
        """GammaPoleError keeps the offending point."""
        err = GammaPoleError(-2)
        assert err.location == -2
        assert "-2" in str(err)


class TestUnionFind:
    """Test the disjoint-set forest."""

    def test_union_and_find(self):
        """Merged elements share a leader and sizes add up."""
        uf = UnionFind(range(6))
        uf.union(0, 1)
        uf.union(2, 3)
        uf.union(1, 3)
        assert uf.find(0) == uf.find(2)
        assert uf.size(3) == 4
        assert uf.n_clusters == 3

    def test_union_same_set_is_noop(self):
        """A second union of the same pair changes nothing."""
        uf = UnionFind("abc")
        uf.union("a", "b")
        uf.union("b", "a")
        assert uf.n_clusters == 2

    def test_components(self):
        """Components list every element exactly once."""
        uf = UnionFind(range(5))
        uf.union(0, 4)
        groups = uf.components()
        assert sorted(len(g) for g in groups.values()) == [1, 1, 1, 2]
        assert sorted(x for g in groups.values() for x in g) == list(range(5))

    def test_union_by_rank_and_path_compression(self):
        """The deeper tree keeps its leader even at equal sizes; find flattens paths."""
        uf = UnionFind(range(8))
        for k in (1, 2, 3):
            uf.union(0, k)
        uf.union(4, 5)
        uf.union(6, 7)
        uf.union(4, 6)
        uf.union(0, 4)
        assert uf.size(0) == 8
        assert uf.find(0) == 4
        assert uf._leader[7] == 6
        assert uf.find(7) == 4
        assert uf._leader[7] == 4

    def test_contains(self):
        uf = UnionFind([(0, 0), (1, 0)])
        assert (0, 0) in uf
        assert (2, 0) not in uf


class TestGridRunner:
    """Test the grid task runner."""

    def test_results_in_submission_order(self):
        """Results come back in the order tasks were added."""
        runner = GridRunner(max_workers=4)
        for i in range(10):
            runner.add_task(f"t{i}", lambda x: x * x, x=i)
        results = runner.execute()
        assert [r.task_id for r in results] == [f"t{i}" for i in range(10)]
        assert [r.value for r in results] == [i * i for i in range(10)]
        assert runner.get_task_count() == 0

    def test_failure_is_recorded(self):
        """A failing task is recorded instead of aborting the grid."""

        def boom():
            raise RuntimeError("no")

        runner = GridRunner()
        runner.add_task("ok", lambda: 1)
        runner.add_task("bad", boom)
        ok, bad = runner.execute()
        assert ok.ok and ok.value == 1
        assert not bad.ok
        assert "RuntimeError" in bad.error

    def test_raise_on_error(self):
        """raise_on_error re-raises the first failure."""
        runner = GridRunner()
        runner.add_task("bad", lambda: 1 / 0)
        with pytest.raises(ZeroDivisionError):
            runner.execute(raise_on_error=True)

    def test_duplicate_and_full_queue(self):
        """Duplicate ids and overfull queues are rejected."""
        runner = GridRunner(max_tasks=1)
        runner.add_task("a", lambda: None)
        with pytest.raises(ValueError):
            runner.add_task("a", lambda: None)
        runner.clear_tasks()
        runner.add_task("b", lambda: None)
        with pytest.raises(ValueError):
            runner.add_task("c", lambda: None)

    def test_parallel_tasks_use_threads(self):
        """With several workers tasks run off the main thread."""
        runner = GridRunner(max_workers=2)
        runner.add_task("t", threading.current_thread)
        (result,) = runner.execute()
        assert result.ok


class TestLogger:
    """Test the logging utilities."""

    def test_setup_logger(self):
        """Test logger setup."""
        logger = setup_logger("test_logger", level="DEBUG")
        assert logger.name == "test_logger"
        assert logger.level == logging.DEBUG

    def test_get_logger(self):
        """Test getting existing logger."""
        logger1 = setup_logger("test_logger2", level="INFO")
        logger2 = get_logger("test_logger2")
        assert logger1 is logger2

    def test_child_loggers_share_root(self):
        """Loggers inside the package hierarchy have no handlers of their own."""
        child = get_logger("sixvlab.test_child")
        assert child.name == "sixvlab.test_child"
        assert not child.handlers
        assert logging.getLogger("sixvlab").handlers

    def test_log_file(self, tmp_path):
        """A log file is created on request."""
        path = tmp_path / "logs" / "run.log"
        logger = setup_logger("test_file_logger", level="INFO", log_file=path, console_output=False)
        logger.info("hello")
        for handler in logger.handlers:
            handler.flush()
        assert "hello" in path.read_text()


class TestVersion:
    """Test version lookup."""

    def test_version_matches_pyproject(self):
        """The package reads its version from pyproject.toml."""
        assert get_version() == "0.1.0"
        assert sixvlab.__version__ == get_version()

    def test_version_fallback(self, tmp_path):
        """Without pyproject.toml the installed metadata or 0.0.0 is used."""
        with patch("sixvlab._version.PYPROJECT", tmp_path / "missing.toml"):
            with patch("sixvlab._version.metadata.version", return_value="9.9.9"):
                assert get_version() == "9.9.9"


if __name__ == "__main__":
    pytest.main([__file__])
