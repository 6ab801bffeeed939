"""Tests for the experiment harness, configuration grammar and reports."""

import math
import subprocess
import sys

import numpy as np
import pytest

from coreqkd.harness import (
    ConfigError,
    ExperimentSpec,
    ReportRow,
    SweepAxes,
    emit_report,
    paper_table,
    parse_experiment,
    parse_experiment_string,
    parse_report,
    run_experiment,
    session_to_config,
    trial_seed,
    write_report,
)
from coreqkd.protocol import SessionConfig
from coreqkd.rearrange import ControlKey, CoreOpSet

GOOD_SPEC = """
[experiment]
name = smoke
trials = 2
seed = 5

[session]
mode = keyed
n_blocks = 20
control_key = 0001
check_fraction = 0.5
error_threshold = 0.1
noise = 0.0
"""


def tiny_spec(**overrides) -> ExperimentSpec:
    session = SessionConfig(
        n_blocks=overrides.pop("n_blocks", 20),
        control_key=ControlKey.from_indices([0, 1]),
        seed=0,
        error_threshold=overrides.pop("error_threshold", 0.1),
        mode=overrides.pop("mode", "keyed"),
    )
    return ExperimentSpec(name="tiny", session=session, trials=2, seed=9, **overrides)


class TestConfigParsing:
    def test_round_trip_of_a_full_spec(self, tmp_path):
        text = GOOD_SPEC + "\n[sweep]\nnoise = 0.0 0.1\neve = none guess_core\n"
        path = tmp_path / "exp.ini"
        path.write_text(text)
        spec = parse_experiment(str(path))
        assert spec.name == "smoke"
        assert spec.trials == 2
        assert spec.sweep.noise == (0.0, 0.1)
        assert spec.sweep.eve == ("none", "guess_core")
        assert spec.session.control_key.op_indices == (0, 1)

    def test_missing_session_section(self):
        with pytest.raises(ConfigError, match=r"\[session\]"):
            parse_experiment_string("[experiment]\nname = x\n")

    def test_bad_value_reports_section_and_key(self):
        text = GOOD_SPEC.replace("check_fraction = 0.5", "check_fraction = lots")
        with pytest.raises(ConfigError, match=r"\[session\]"):
            parse_experiment_string(text)

    def test_bad_syntax_reports_line(self):
        with pytest.raises(ConfigError, match="line"):
            parse_experiment_string("[session\nmode = keyed\n")

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="no/such/file"):
            parse_experiment("no/such/file.ini")

    def test_eve_section(self):
        text = GOOD_SPEC + "\n[eve]\nkind = bell_probe\na = 0 0 2\nb = 1 0 0\nbudget = 2\n"
        spec = parse_experiment_string(text)
        assert spec.session.eve.kind == "bell_probe"
        assert spec.session.eve.a.z == 1.0  # normalised on parse
        assert spec.session.eve.budget == 2

    def test_custom_rearrangement_set(self):
        text = GOOD_SPEC + "\n[rearrangement]\nperms = 0123 1230 2301 3012\n"
        spec = parse_experiment_string(text)
        assert spec.session.op_set == CoreOpSet.cyclic()

    def test_device_section(self):
        text = GOOD_SPEC + "\n[device]\nloop_delay = 2\nmax_circuits = 3\n"
        spec = parse_experiment_string(text)
        assert spec.device.loop_delay == 2
        assert spec.device.max_circuits == 3

    def test_session_serialisation_round_trips(self):
        cfg = tiny_spec().session
        flat = session_to_config(cfg)
        text = "[experiment]\nname = rt\n[session]\n" + "\n".join(
            f"{k} = {v}" for k, v in flat.items()
        )
        parsed = parse_experiment_string(text).session
        assert parsed.mode == cfg.mode
        assert parsed.n_blocks == cfg.n_blocks
        assert parsed.control_key == cfg.control_key
        assert parsed.check_fraction == cfg.check_fraction
        assert parsed.noise == cfg.noise


class TestSeeding:
    def test_trial_seeds_are_deterministic_and_distinct(self):
        seeds = {trial_seed(42, p, t) for p in range(4) for t in range(4)}
        assert len(seeds) == 16
        assert trial_seed(42, 1, 2) == trial_seed(42, 1, 2)
        assert trial_seed(42, 1, 2) != trial_seed(43, 1, 2)


class TestRunExperiment:
    def test_grid_covers_the_sweep_product(self):
        spec = tiny_spec(sweep=SweepAxes(noise=(0.0, 0.1), eve=("none", "guess_core")))
        rows = run_experiment(spec)
        assert len(rows) == 4
        assert {(r.noise, r.eve) for r in rows} == {
            (0.0, "none"), (0.0, "guess_core"), (0.1, "none"), (0.1, "guess_core")
        }

    def test_single_trial_fixed_seed_is_reproducible(self):
        spec = tiny_spec()
        assert run_experiment(spec) == run_experiment(spec)

    def test_no_eve_row_is_error_free(self):
        rows = run_experiment(tiny_spec())
        assert rows[0].mean_error_rate == 0.0
        assert rows[0].key_bits > 0

    def test_key_length_sweep_draws_keys_per_point(self):
        spec = tiny_spec(sweep=SweepAxes(key_lengths=(1, 3)), error_threshold=1.0)
        rows = run_experiment(spec)
        assert [r.n_k for r in rows] == [1, 3]

    def test_bootstrap_sweep_sift_rate_within_binomial_se(self):
        """Oracle: |sift - 1/4| within 3 binomial standard errors per point."""
        spec = tiny_spec(
            mode="bootstrap",
            sweep=SweepAxes(n_blocks=(1_000, 10_000)),
            error_threshold=0.1,
        )
        rows = run_experiment(spec)
        for row in rows:
            se = math.sqrt(0.25 * 0.75 / row.n_blocks)
            assert abs(row.sift_rate - 0.25) <= 3 * se
        assert rows[1].n_blocks > rows[0].n_blocks

    def test_paper_table_reproduces_the_three_headline_numbers(self):
        rows = run_experiment(paper_table(seed=123))
        by_eve = {r.eve: r for r in rows}
        assert by_eve["none"].mean_error_rate == 0.0
        assert by_eve["guess_core"].mean_error_rate == pytest.approx(0.5625, abs=0.02)
        assert by_eve["guess_core"].wrong_guess_error_rate == pytest.approx(0.75, abs=0.02)
        assert by_eve["guess_core"].eve_accuracy == pytest.approx(0.625, abs=0.02)
        assert by_eve["bell_probe"].probe_mean == pytest.approx(0.0, abs=0.06)


class TestReports:
    def test_empty_rows_give_header_only_csv(self):
        text = emit_report([], "csv")
        assert text.count("\n") == 1
        assert text.startswith("experiment,noise,eve,")

    def test_three_rows_of_jsonl_parse_back(self):
        rows = run_experiment(tiny_spec(sweep=SweepAxes(noise=(0.0, 0.05, 0.1))))
        text = emit_report(rows, "jsonl")
        assert len(text.splitlines()) == 3
        assert parse_report(text, "jsonl") == rows

    def test_csv_round_trip_is_byte_identical(self):
        rows = run_experiment(tiny_spec(sweep=SweepAxes(eve=("none", "guess_core"))))
        text = emit_report(rows, "csv")
        again = emit_report(parse_report(text, "csv"), "csv")
        assert again == text

    def test_write_report_failure_names_the_path(self, tmp_path):
        rows = run_experiment(tiny_spec())
        bad = str(tmp_path / "missing_dir" / "report.csv")
        with pytest.raises(OSError, match="report.csv"):
            write_report(rows, bad, "csv")

    def test_empty_cells_round_trip_as_none(self):
        row = ReportRow(
            experiment="x", noise=0.0, eve="none", n_k=1, n_blocks=10, trials=1,
            mean_error_rate=0.0, error_rate_se=0.0,
            wrong_guess_error_rate=None, wrong_guess_error_se=None,
            sift_rate=None, sift_rate_se=None, key_bits=8.0, key_bits_se=0.0,
            eve_accuracy=None, eve_accuracy_se=None, probe_mean=None, probe_se=None,
        )
        assert parse_report(emit_report([row], "csv"), "csv") == [row]


class TestCli:
    def test_run_with_spec_file(self, tmp_path):
        from coreqkd.cli import main

        spec_path = tmp_path / "exp.ini"
        spec_path.write_text(GOOD_SPEC)
        out = tmp_path / "rows.csv"
        assert main(["run", str(spec_path), "--out", str(out)]) == 0
        assert out.read_text().startswith("experiment,")

    def test_run_rejects_bad_spec(self, tmp_path):
        from coreqkd.cli import main

        bad = tmp_path / "bad.ini"
        bad.write_text("[session]\ncheck_fraction = nope\n")
        assert main(["run", str(bad)]) == 2

    def test_demo_smoke(self, capsys):
        from coreqkd.cli import main

        assert main(["demo", "--blocks", "2", "--seed", "3"]) == 0
        captured = capsys.readouterr()
        assert "raw key" in captured.out

    def test_module_entry_point(self, tmp_path):
        spec_path = tmp_path / "exp.ini"
        spec_path.write_text(GOOD_SPEC)
        proc = subprocess.run(
            [sys.executable, "-m", "coreqkd", "run", str(spec_path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("experiment,")
