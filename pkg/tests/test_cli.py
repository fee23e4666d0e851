"""
Tests for the command line, its configuration layers, result files, the
acceptance suite and the lab facade.
"""

import csv
import json
import math
from pathlib import Path
from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from sixvlab import SixVertexLab
from sixvlab.cli import (
    AcceptanceSuite,
    CheckStatus,
    ResultWriter,
    RunConfig,
    Severity,
    SixVLabCLI,
    format_value,
    load_config_file,
    main,
    parse_value,
)
from sixvlab.cli.verify import CheckOutcome, check_concentration
from sixvlab.spectral import ConcentrationReport
from sixvlab.utils.errors import ConfigError, InvariantViolationError


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def run_main(argv: list[str]) -> int:
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return exc.value.code


class TestConfig:
    """Test configuration parsing and validation."""

    def test_parse_value(self):
        assert parse_value("L", "4, 6,8") == [4, 6, 8]
        assert parse_value("--burn-in", "10") == 10
        assert parse_value("checks", "torus-trace") == ["torus-trace"]
        assert parse_value("out", "results") == Path("results")

    def test_parse_value_errors(self):
        with pytest.raises(ConfigError):
            parse_value("L", "four")
        with pytest.raises(ConfigError):
            parse_value("c", " , ")
        with pytest.raises(ConfigError):
            parse_value("colour", "red")

    def test_load_config_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# cylinder sweep\nL = 4,6\nc = 1.5  # weight\n\nseed = 3\n")
        assert load_config_file(path) == {"L": [4, 6], "c": [1.5], "seed": 3}

    def test_config_file_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config_file(tmp_path / "missing.cfg")
        path = tmp_path / "bad.cfg"
        path.write_text("L 4\n")
        with pytest.raises(ConfigError, match="bad.cfg:1"):
            load_config_file(path)

    def test_flags_override_file(self, tmp_path):
        config = RunConfig.from_sources(
            "spectrum",
            {"L": [4], "seed": 3, "out": tmp_path},
            {"L": [6, 8], "seed": None},
        )
        assert config.L == [6, 8]
        assert config.seed == 3

    @pytest.mark.parametrize(
        "values",
        [
            {"L": [5]},
            {"L": [18]},
            {"c": [2.5]},
            {"zeta": [3.0]},
            {"size": 6.5},
            {"size": 2},
            {"chains": 0},
            {"sweeps": 0},
            {"tolerance": 0.0},
            {"geometry": "sphere"},
            {"grid_h": [-0.01]},
        ],
    )
    def test_validation(self, values, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.from_sources("spectrum", {"out": tmp_path}, values)

    def test_unknown_command(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.from_sources("plot", {"out": tmp_path})

    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SIXVLAB_OUTPUT_DIR", str(tmp_path / "env-out"))
        assert RunConfig(command="gff").out == tmp_path / "env-out"

    def test_wh_params(self, tmp_path):
        config = RunConfig.from_sources("wh", {"out": tmp_path}, {"grid_h": [0.02], "cutoff_X": [20.0]})
        params = config.wh_params(math.pi / 3)
        assert params.h == 0.02
        assert params.T_max == pytest.approx(math.pi / 0.02)
        with pytest.raises(ConfigError):
            config.wh_params(math.pi / 3, X=10.0)

    def test_to_dict_is_json_ready(self, tmp_path):
        data = RunConfig.from_sources("gff", {"out": tmp_path}).to_dict()
        assert data["out"] == str(tmp_path)
        json.dumps(data)


class TestOutput:
    """Test result files."""

    def test_format_value(self):
        assert format_value(None) == ""
        assert format_value(True) == "true"
        assert format_value(np.int64(3)) == "3"
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(np.float64(2.0)) == "2"
        assert format_value(float("nan")) == "nan"

    def test_write_csv_header_union(self, tmp_path):
        writer = ResultWriter(tmp_path / "out")
        path = writer.write_csv("rows.csv", [{"a": 1, "b": 0.5}, {"a": 2, "c": "x"}])
        assert path.read_text().splitlines() == ["a,b,c", "1,0.5,", "2,,x"]

    def test_write_json_and_manifest(self, tmp_path):
        writer = ResultWriter(tmp_path)
        writer.write_json("data.json", {"values": np.arange(3), "flag": np.bool_(True), "x": math.nan})
        manifest = json.loads(writer.write_manifest({"seed": 7}, 0).read_text())
        assert manifest["seed"] == 7
        assert manifest["exit_status"] == 0
        assert manifest["files"] == ["data.json"]
        assert set(manifest["versions"]) == {"sixvlab", "numpy", "scipy", "python"}
        data = json.loads((tmp_path / "data.json").read_text())
        assert data["values"] == [0, 1, 2]
        assert data["flag"] is True

    def test_module_documents_result_files(self):
        from sixvlab.cli import output

        assert "manifest.json" in output.__doc__


def passing(config, lab):
    return CheckOutcome(True, "fine", [{"value": 1.0}])


def failing(config, lab):
    return CheckOutcome(False, "off by a lot")


def exploding(config, lab):
    raise RuntimeError("boom")


class TestAcceptanceSuite:
    """Test the check registry."""

    @pytest.fixture
    def suite(self, tmp_path):
        return AcceptanceSuite(RunConfig(command="verify", out=tmp_path), SixVertexLab())

    def test_pass_and_fail(self, suite):
        suite.register_check("good", passing)
        suite.register_check("bad", failing)
        results = suite.run()
        assert [r.status for r in results] == [CheckStatus.PASS, CheckStatus.FAIL]
        assert results[0].rows == [{"value": 1.0}]
        assert AcceptanceSuite.exit_status(results) == 2
        assert AcceptanceSuite.exit_status(results[:1]) == 0

    def test_warn_does_not_fail(self, suite):
        suite.register_check("soft", failing, Severity.WARN)
        results = suite.run()
        assert results[0].status is CheckStatus.WARN
        assert AcceptanceSuite.exit_status(results) == 0

    def test_exception_is_a_failure(self, suite):
        suite.register_check("boom", exploding)
        (result,) = suite.run()
        assert result.status is CheckStatus.FAIL
        assert "RuntimeError: boom" in result.detail

    def test_selection(self, suite):
        suite.register_check("good", passing)
        suite.register_check("bad", failing)
        assert [r.name for r in suite.run(["good"])] == ["good"]
        with pytest.raises(ValueError):
            suite.run(["nope"])

    def test_default_registry(self, suite):
        suite.register_default_checks()
        assert {"torus-trace", "spectral-direct", "wiener-hopf", "mc-exactness", "gff-soft"} <= set(suite.checks)
        assert suite.checks["gff-soft"].severity is Severity.WARN
        (result,) = suite.run(["sigma-squared"])
        assert result.status is CheckStatus.PASS

    def test_tree_oracle_check(self, suite):
        suite.register_default_checks()
        with patch("sixvlab.cli.verify.TREE_SAMPLES", 5):
            (result,) = suite.run(["tree-oracle"])
        assert result.status is CheckStatus.PASS
        assert "0 covariance and 0 depth mismatches over 15 pairs" in result.detail

    @pytest.mark.parametrize(
        "fractions,rank,ok",
        [
            ([0.40, 0.45, 0.44, 0.50], 0.9, True),
            ([0.0007, 0.0011, 0.0011, 0.0006], -0.43, False),
            ([0.50, 0.45, 0.40, 0.35], 0.9, False),
        ],
    )
    def test_concentration_criterion(self, tmp_path, fractions, rank, ok):
        """Cone fractions may dip by 0.02 at most and the a-marginal must track σ²/(2πa)."""
        reports = [
            ConcentrationReport(L, 4 / L, 0.2, (0.0, 1.0), 1.0, frac, [], [], [], rank)
            for L, frac in zip((8, 10, 12, 14), fractions, strict=True)
        ]
        lab = MagicMock()
        with patch("sixvlab.cli.verify.rescale_and_concentrate", side_effect=reports):
            outcome = check_concentration(RunConfig(command="verify", out=tmp_path), lab)
        assert outcome.ok is ok
        assert [r["cone_fraction"] for r in outcome.rows] == fractions

    def test_format_table(self, suite):
        suite.register_check("good", passing)
        table = AcceptanceSuite.format_table(suite.run())
        assert table.splitlines()[0].startswith("check")
        assert "good" in table and "pass" in table


class TestMain:
    """Test the entry point and exit codes."""

    def test_no_command(self, capsys):
        assert run_main([]) == 1
        assert "Examples:" in capsys.readouterr().out

    def test_bad_flag_value(self, tmp_path, capsys):
        assert run_main(["spectrum", "--L", "5", "--out", str(tmp_path)]) == 1
        assert "Error" in capsys.readouterr().err
        assert run_main(["spectrum", "--c", "abc", "--out", str(tmp_path)]) == 1

    def test_missing_config_file(self, tmp_path):
        assert run_main(["gff", "--config", str(tmp_path / "none.cfg")]) == 1

    def test_gff(self, tmp_path):
        out = tmp_path / "gff"
        assert run_main(["gff", "--c", "2,1.7320508075688772", "--out", str(out)]) == 0
        sigma = read_csv(out / "gff_sigma.csv")
        assert float(sigma[0]["sigma2"]) == pytest.approx(2 / math.pi)
        assert len(read_csv(out / "gff.csv")) == 8
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["exit_status"] == 0
        assert manifest["files"] == ["gff_sigma.csv", "gff.csv"]

    def test_measure_L2(self, tmp_path):
        """The L=2 measure is a single atom of weight 1/4."""
        out = tmp_path / "measure"
        assert run_main(["measure", "--L", "2", "--c", "1.7321", "--out", str(out)]) == 0
        (atom,) = read_csv(out / "measure_atoms.csv")
        assert float(atom["weight"]) == pytest.approx(0.25)
        assert float(atom["b"]) == pytest.approx(math.pi)
        assert "L=2,c=1.7321" in json.loads((out / "class_m.json").read_text())

    def test_spectrum_from_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"L = 2,4\nc = 1.0\nout = {tmp_path / 'spec'}\n")
        assert run_main(["spectrum", "--config", str(cfg)]) == 0
        rows = read_csv(tmp_path / "spec" / "spectrum.csv")
        assert [int(r["L"]) for r in rows] == [2, 4]
        assert float(rows[0]["lam0"]) == pytest.approx(3.0)
        assert len(read_csv(tmp_path / "spec" / "eigenvalues.csv")) == 2 + 6

    def test_verify_with_registered_checks(self, tmp_path):
        def register(self):
            self.register_check("quick", passing)
            self.register_check("advisory", failing, Severity.WARN)

        with patch.object(AcceptanceSuite, "register_default_checks", register):
            assert run_main(["verify", "--out", str(tmp_path)]) == 0
        assert [r["status"] for r in read_csv(tmp_path / "verify.csv")] == ["pass", "warn"]
        assert (tmp_path / "verify_quick.csv").exists()

    def test_verify_failure_exit_code(self, tmp_path):
        def register(self):
            self.register_check("bad", failing)

        with patch.object(AcceptanceSuite, "register_default_checks", register):
            assert run_main(["verify", "--out", str(tmp_path)]) == 2

    def test_numerical_failure_exit_code(self, tmp_path):
        """A failed invariant gives status 2 and still writes the manifest."""
        config = RunConfig.from_sources("spectrum", {"out": tmp_path})
        with patch.object(SixVLabCLI, "spectrum", side_effect=InvariantViolationError("broken")):
            assert SixVLabCLI().run(config) == 2
        assert json.loads((tmp_path / "manifest.json").read_text())["exit_status"] == 2

    def test_value_error_exit_code(self, tmp_path):
        config = RunConfig.from_sources("gff", {"out": tmp_path})
        with patch.object(SixVLabCLI, "gff", side_effect=ValueError("bad input")):
            assert SixVLabCLI().run(config) == 1


class TestLab:
    """Test the lab facade."""

    def test_systems_are_reused(self):
        with SixVertexLab() as lab:
            first = lab.system(4, 1.5)
            assert lab.system(4, 1.5) is first
            assert lab.measure(4, 1.5) is lab.measure(4, 1.5)
            assert lab.get_available_systems() == [(4, 1.5)]
        assert lab.get_available_systems() == []

    def test_prefetch(self):
        lab = SixVertexLab(workers=2)
        assert lab.prefetch([2, 4], [1.0, 1.5]) == []
        assert len(lab.get_available_systems()) == 4
        assert lab.prefetch([5], [1.0]) == ["L=5,c=1.0"]

    def test_disk_cache(self, tmp_path):
        SixVertexLab(cache_dir=tmp_path).system(4, 1.2)
        assert list(tmp_path.iterdir())
        again = SixVertexLab(cache_dir=tmp_path).system(4, 1.2)
        assert again.L == 4

    def test_invalid_width(self):
        with pytest.raises(ValueError):
            SixVertexLab().system(3, 1.0)


if __name__ == "__main__":
    pytest.main([__file__])
