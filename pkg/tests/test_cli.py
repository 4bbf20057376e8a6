import json

import pytest

from arsenal_sim.cli import main, parse_pattern_arg
from arsenal_sim.traces import parse_trace_file


def run_cli(*argv):
    return main(list(argv))


class TestGen:
    def test_writes_parseable_trace(self, tmp_path):
        out = tmp_path / "seq.trace"
        assert run_cli("gen", "--pattern", "sequential", "--length", "100",
                       "--seed", "3", "--out", str(out)) == 0
        events = parse_trace_file(str(out))
        assert len(events) == 100
        assert [e.addr for e in events[:3]] == [0, 64, 128]

    def test_gen_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a.trace", tmp_path / "b.trace"
        for path in (a, b):
            run_cli("gen", "--pattern", "random_working_set:working_set_lines=256",
                    "--length", "500", "--seed", "9", "--out", str(path))
        assert a.read_bytes() == b.read_bytes()


class TestRun:
    def test_pattern_run_to_json(self, tmp_path):
        out = tmp_path / "report.json"
        code = run_cli("run", "--pattern", "sequential", "--engine", "next-line",
                       "--length", "5000", "--seed", "2", "--out", str(out))
        assert code == 0
        report = json.loads(out.read_text())
        assert report["schema"] == "arsenal-sim-report-v1"
        assert report["experiment"]["engine"] == "next-line"
        assert report["demand"]["total"] == 5000

    def test_trace_file_run(self, tmp_path):
        trace = tmp_path / "t.trace"
        run_cli("gen", "--pattern", "stride:stride=128", "--length", "200",
                "--out", str(trace))
        out = tmp_path / "r.json"
        assert run_cli("run", "--trace", str(trace), "--engine", "none",
                       "--out", str(out)) == 0
        report = json.loads(out.read_text())
        assert report["demand"]["total"] == 200

    def test_config_file_run_with_flag_overrides(self, tmp_path):
        cfg = tmp_path / "exp.json"
        cfg.write_text(json.dumps({
            "engine": "none",
            "pattern": {"kind": "sequential", "seed": 1},
            "length": 1000,
            "cache": {"sets": 32},
        }))
        out = tmp_path / "r.json"
        assert run_cli("run", "--config", str(cfg), "--engine", "arsenal-tc2",
                       "--out", str(out)) == 0
        report = json.loads(out.read_text())
        assert report["experiment"]["engine"] == "arsenal-tc2"
        assert report["experiment"]["cache"]["sets"] == 32

    def test_csv_format(self, tmp_path):
        out = tmp_path / "r.csv"
        assert run_cli("run", "--pattern", "sequential", "--engine", "none",
                       "--length", "100", "--format", "csv",
                       "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("label,engine,trace,seed,total_accesses")
        assert len(lines) == 2

    def test_sinks_from_config_file(self, tmp_path):
        out = tmp_path / "from_config.csv"
        cfg = tmp_path / "exp.json"
        cfg.write_text(json.dumps({
            "engine": "none",
            "pattern": {"kind": "sequential", "seed": 1},
            "length": 50,
            "out": str(out),
            "format": "csv",
        }))
        assert run_cli("run", "--config", str(cfg)) == 0
        assert out.read_text().splitlines()[0].startswith("label,engine")

    def test_config_typo_fails_nonzero(self, tmp_path, capsys):
        cfg = tmp_path / "exp.json"
        cfg.write_text(json.dumps({
            "engine": "none",
            "pattern": {"kind": "sequential"},
            "legnth": 50,
        }))
        assert run_cli("run", "--config", str(cfg)) == 1
        assert "unknown experiment fields" in capsys.readouterr().err

    def test_malformed_trace_fails_nonzero(self, tmp_path, capsys):
        trace = tmp_path / "bad.trace"
        trace.write_text("0x400 nonsense R\n")
        assert run_cli("run", "--trace", str(trace), "--engine", "none") == 1
        assert "line 1" in capsys.readouterr().err

    def test_missing_trace_file_fails_nonzero(self):
        assert run_cli("run", "--trace", "/no/such/file", "--engine", "none") == 1

    def test_no_trace_source_fails_nonzero(self):
        assert run_cli("run", "--engine", "none") == 1


class TestCompare:
    @pytest.fixture
    def compare_config(self, tmp_path):
        cfg = tmp_path / "cmp.json"
        cfg.write_text(json.dumps({
            "policy": "tc2",
            "seed": 4,
            "traces": [
                {"label": "seq",
                 "pattern": {"kind": "sequential", "seed": 4}, "length": 3000},
                {"label": "ws",
                 "pattern": {"kind": "random_working_set",
                             "working_set_lines": 1024, "seed": 4},
                 "length": 3000},
            ],
        }))
        return cfg

    def test_compare_json(self, tmp_path, compare_config):
        out = tmp_path / "cmp_out.json"
        assert run_cli("compare", "--config", str(compare_config),
                       "--out", str(out)) == 0
        report = json.loads(out.read_text())
        assert report["schema"] == "arsenal-sim-compare-v1"
        assert [t["label"] for t in report["per_trace"]] == ["seq", "ws"]

    def test_compare_csv(self, tmp_path, compare_config):
        out = tmp_path / "cmp_out.csv"
        assert run_cli("compare", "--config", str(compare_config),
                       "--format", "csv", "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "trace,engine,amat,speedup_proxy,coverage,accuracy"
        assert len(lines) == 1 + 2 * 5

    def test_compare_missing_config_fails(self):
        assert run_cli("compare", "--config", "/no/such/cmp.json") == 1


class TestOverheadVerb:
    def test_test_case_report(self, tmp_path):
        out = tmp_path / "ovh.json"
        assert run_cli("overhead", "--test-case", "tc2", "--out", str(out)) == 0
        report = json.loads(out.read_text())
        assert abs(report["grand_total_kb"] - 20.2) < 0.1

    def test_component_count_report(self, capsys):
        assert run_cli("overhead", "--components", "2") == 0
        report = json.loads(capsys.readouterr().out)
        assert abs(report["framework_total_kb"] - 6.0) < 0.1


class TestPatternArg:
    def test_shorthand_with_params(self):
        spec = parse_pattern_arg("stride:stride=0x200,start=64")
        assert spec.kind == "stride"
        assert spec.stride == 0x200
        assert spec.start == 64

    def test_inline_json(self):
        spec = parse_pattern_arg(json.dumps(
            {"kind": "pc_delta",
             "streams": [{"pc": 4, "start": 0, "delta": 64}]}))
        assert spec.kind == "pc_delta"

    def test_bad_kind_fails_cli(self):
        assert run_cli("run", "--pattern", "zigzag", "--engine", "none") == 1

    def test_bad_param_syntax_fails_cli(self):
        assert run_cli("gen", "--pattern", "stride:stride", "--length", "5",
                       "--out", "/dev/null") == 1

    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run_cli()
        assert err.value.code == 2
