import os
from unittest import mock

import pytest

from heisencalc import cli, csvio
from heisencalc.errors import ConfigError, TruncationError
from heisencalc.reports import VerificationReport


@pytest.fixture(autouse=True)
def no_cache_env():
    with mock.patch.dict(os.environ, {}, clear=True):
        yield


def _report(passed):
    return VerificationReport.create("partition", {"smoothness": 0}, {"telescoped": 0.0}, tol=1e-12, passed=passed)


class TestVerify:
    @pytest.mark.parametrize("passed, code", [(True, 0), (False, cli.EXIT_FAILED)])
    def test_exit_code_follows_reports(self, tmp_path, capsys, passed, code):
        with mock.patch("heisencalc.cli.run_suites", return_value=[_report(passed)]) as run_suites:
            assert cli.main(["verify", "--suite", "partition", "--out", str(tmp_path)]) == code

        config = run_suites.call_args[0][0]
        assert config.suites == "partition"
        assert config.out_dir == str(tmp_path)
        doc = csvio.read_csv(tmp_path / "reports.csv")
        assert doc.kind == "reports"
        assert doc.rows[0][0] == "partition"
        assert capsys.readouterr().out.endswith(f"{int(passed)}/1 checks passed\n")

    def test_block_range_reaches_the_config(self, tmp_path):
        with mock.patch("heisencalc.cli.run_suites", return_value=[_report(True)]) as run_suites:
            cli.main(["verify", "--j", "1..3", "--quick", "--out", str(tmp_path)])

        config = run_suites.call_args[0][0]
        assert (config.j_min, config.j_max, config.quick) == (1, 3, True)

    @pytest.mark.parametrize("argv", [["--j", "one..two"], ["--suite", "bogus"], ["--threads", "0"]])
    def test_bad_input(self, tmp_path, argv):
        assert cli.main(["verify", "--out", str(tmp_path)] + argv) == cli.EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["verify", "--config", str(tmp_path / "absent.cfg")]) == cli.EXIT_CONFIG


class TestKernel:
    def test_writes_the_table(self, tmp_path, capsys):
        argv = ["kernel", "--t", "0.5", "--r-max", "1", "--s-max", "1", "--nr", "3", "--ns", "3"]
        assert cli.main(argv + ["--out", str(tmp_path)]) == 0

        path = tmp_path / "heatkernel-t0.5.csv"
        assert path.read_text().startswith("# heatkernel ")
        assert str(path) in capsys.readouterr().out

    def test_truncation_has_its_own_exit_code(self, tmp_path):
        with mock.patch("heisencalc.cli.cached_kernel_eval", side_effect=TruncationError("tail")):
            assert cli.main(["kernel", "--out", str(tmp_path)]) == cli.EXIT_TRUNCATION

    @pytest.mark.parametrize("argv", [["--t=0"], ["--nr", "1"]])
    def test_bad_input(self, tmp_path, argv):
        assert cli.main(["kernel", "--out", str(tmp_path)] + argv) == cli.EXIT_CONFIG


class TestNorms:
    def test_zero_family(self, capsys):
        assert cli.main(["norms", "--family", "zero", "--dilate", "0,1"]) == 0

        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("# norms ")
        assert lines[1:] == ["dilate,lp,besov,sobolev", "0,0,0,0", "1,0,0,0"]

    def test_unused_parameter(self):
        assert cli.main(["norms", "--family", "zero", "--j", "1"]) == cli.EXIT_CONFIG

    def test_unknown_family_is_rejected_by_the_parser(self):
        with pytest.raises(SystemExit):
            cli.main(["norms", "--family", "bessel"])


class TestCache:
    def test_needs_a_directory(self):
        assert cli.main(["cache", "list"]) == cli.EXIT_CONFIG

    def test_environment_names_the_directory(self, tmp_path, capsys):
        (tmp_path / "heatkernel-abc.csv").write_text("# heatkernel v2\n")
        with mock.patch.dict(os.environ, {"HEISENCALC_CACHE": str(tmp_path)}):
            assert cli.main(["cache", "clear"]) == 0
        assert capsys.readouterr().out == "removed 1 cached kernel tables\n"

    def test_list_empty(self, tmp_path, capsys):
        assert cli.main(["cache", "list", "--cache-dir", str(tmp_path)]) == 0
        assert capsys.readouterr().out == ""


class TestParsing:
    @pytest.mark.parametrize("text, expected", [("2", (2, 2)), ("-1..3", (-1, 3))])
    def test_block_range(self, text, expected):
        assert cli.parse_block_range(text) == expected

    @pytest.mark.parametrize("text, expected", [("a=2", ("a", 2)), ("b = 0.5", ("b", 0.5))])
    def test_param(self, text, expected):
        assert cli.parse_param(text) == expected

    @pytest.mark.parametrize("text", ["a", "=1", "a=x"])
    def test_bad_param(self, text):
        with pytest.raises(ConfigError):
            cli.parse_param(text)

    def test_dilations(self):
        assert cli.parse_dilations("-1,0,2") == [-1, 0, 2]
        with pytest.raises(ConfigError):
            cli.parse_dilations("1,x")
