"""CLI and configuration: validation, determinism, echo round-trip."""

import json
import math
from pathlib import Path

import pytest
import yaml

from braggsim.cli import main
from braggsim.config import (
    ConfigError,
    ExperimentConfig,
    echo_config,
    load_config,
    parse_config,
    resolved_dict,
)
from braggsim.report import dumps_stable, format_float

FAST_FRINGE = """
seed: 11
gravity_m_s2: 9.81
sequence:
  order: 2
  interrogation_time_s: 2.0e-3
  pulse_sigma_s: 15.0e-6
ensemble:
  samples: 4
  sigma_q_hk: 0.42
noise:
  mirror_phase_rms_rad: 0.02
  detection_snr: 50.0
scan:
  target: phase
  start: 0.0
  stop: 12.566370614359172
  points: 16
"""


def write_config(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestShippedConfigs:
    def test_all_example_configs_parse(self):
        import pathlib
        configs = sorted((pathlib.Path(__file__).parent.parent / "configs"
                          ).glob("*.yaml"))
        assert len(configs) >= 5
        for path in configs:
            cfg = load_config(path)
            assert parse_config(yaml.safe_load(echo_config(cfg))) == cfg


class TestConfigParsing:
    def test_defaults_fill_in(self):
        cfg = parse_config({})
        assert cfg.sequence.order == 2
        assert cfg.noise.detection_snr == 50.0
        assert cfg.scan.target == "phase"

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="not_a_key"):
            parse_config({"not_a_key": 1})

    def test_unknown_block_key_rejected_with_path(self):
        with pytest.raises(ConfigError, match=r"noise\.snr"):
            parse_config({"noise": {"snr": 10}})

    def test_bad_scan_target(self):
        with pytest.raises(ConfigError, match=r"scan\.target"):
            parse_config({"scan": {"target": "banana"}})

    def test_comments_supported(self, tmp_path):
        path = write_config(tmp_path, "# a comment\nseed: 3  # inline\n")
        assert load_config(path).seed == 3

    def test_echo_round_trip(self):
        cfg = parse_config(yaml.safe_load(FAST_FRINGE))
        echoed = yaml.safe_load(echo_config(cfg))
        assert parse_config(echoed) == cfg

    def test_resolved_dict_is_complete(self):
        d = resolved_dict(ExperimentConfig())
        assert set(d) >= {"seed", "species", "sequence", "ensemble", "noise",
                          "tide", "scan", "bvs", "gradiometer", "gravity_run"}


class TestFloatSerialization:
    def test_17_digit_round_trip(self):
        for x in (math.pi, 1 / 3, 2.5e-9, 9.81):
            assert float(format_float(x)) == x

    def test_stable_json_sorted(self):
        s = dumps_stable({"b": 1.5, "a": {"z": 0.1, "y": 2}})
        assert s.index('"a"') < s.index('"b"')
        assert "0.10000000000000001" in s


class TestCliRuns:
    def test_fringe_run_and_outputs(self, tmp_path):
        cfg = write_config(tmp_path, FAST_FRINGE)
        out = tmp_path / "out"
        assert main(["fringe", cfg, "--out-dir", str(out)]) == 0
        assert (out / "fringe.csv").exists()
        assert (out / "summary.json").exists()
        assert (out / "resolved_config.yaml").exists()
        header = (out / "fringe.csv").read_text().splitlines()[0]
        assert header == "phase_rad,port0,port2,normalized"
        summary = json.loads((out / "summary.json").read_text())
        assert summary["subcommand"] == "fringe"
        assert len(summary["results"]["fit"]["amplitudes"]) == 3
        assert "braggsim" in summary["versions"]

    def test_byte_stable_outputs(self, tmp_path):
        cfg = write_config(tmp_path, FAST_FRINGE)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["fringe", cfg, "--out-dir", str(out1)]) == 0
        assert main(["fringe", cfg, "--out-dir", str(out2), "--threads", "4"]) == 0
        assert (out1 / "fringe.csv").read_bytes() == (out2 / "fringe.csv").read_bytes()
        assert (out1 / "summary.json").read_bytes() == \
            (out2 / "summary.json").read_bytes()

    def test_rerun_from_echoed_config(self, tmp_path):
        cfg = write_config(tmp_path, FAST_FRINGE)
        out1 = tmp_path / "o1"
        assert main(["fringe", cfg, "--out-dir", str(out1)]) == 0
        echoed = tmp_path / "echoed.yaml"
        echoed.write_text((out1 / "resolved_config.yaml").read_text())
        out2 = tmp_path / "o2"
        assert main(["fringe", str(echoed), "--out-dir", str(out2)]) == 0
        assert (out1 / "fringe.csv").read_bytes() == (out2 / "fringe.csv").read_bytes()

    def test_seed_override_changes_noise(self, tmp_path):
        cfg = write_config(tmp_path, FAST_FRINGE)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert main(["fringe", cfg, "--out-dir", str(out1)]) == 0
        assert main(["fringe", cfg, "--out-dir", str(out2), "--seed", "99"]) == 0
        assert (out1 / "fringe.csv").read_bytes() != (out2 / "fringe.csv").read_bytes()

    def test_config_error_exit_code(self, tmp_path):
        cfg = write_config(tmp_path, "nonsense_key: 1\n")
        assert main(["fringe", cfg]) == 1

    def test_empty_scan_grid_rejected(self, tmp_path):
        cfg = write_config(tmp_path, FAST_FRINGE + "\n")
        bad = yaml.safe_load(FAST_FRINGE)
        bad["scan"]["points"] = 0
        cfg = write_config(tmp_path, yaml.safe_dump(bad))
        out = tmp_path / "never"
        assert main(["fringe", cfg, "--out-dir", str(out)]) == 1
        assert not (out / "fringe.csv").exists()

    def test_wrong_scan_target_for_subcommand(self, tmp_path):
        bad = yaml.safe_load(FAST_FRINGE)
        bad["scan"]["target"] = "interrogation_time"
        cfg = write_config(tmp_path, yaml.safe_dump(bad))
        assert main(["fringe", cfg, "--out-dir", str(tmp_path / "x")]) == 1

    def test_numerical_error_exit_code(self, tmp_path):
        # unachievable calibration target under a tiny search ceiling is a
        # numerical failure, not a config failure
        bad = yaml.safe_load(FAST_FRINGE)
        bad["scan"] = {"target": "interrogation_time", "start": 1e-4,
                       "stop": 2e-4, "points": 3}
        cfg = write_config(tmp_path, yaml.safe_dump(bad))
        assert main(["revivals", cfg, "--out-dir", str(tmp_path / "x")]) == 2

    def test_calibrate_subcommand(self, tmp_path):
        text = """
pulse:
  order: 1
  sigma_s: 200.0e-6
  transfer_target: 1.0
"""
        cfg = write_config(tmp_path, text)
        out = tmp_path / "cal"
        assert main(["calibrate", cfg, "--out-dir", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        om = summary["results"]["omega0_rad_s"]
        assert om == pytest.approx(
            math.pi / (200e-6 * math.sqrt(2 * math.pi)), rel=0.05)

    def test_class_oracle_subcommand(self, tmp_path):
        cfg = write_config(tmp_path, "class_oracle:\n  time_points: 16\n")
        out = tmp_path / "co"
        assert main(["class-oracle", cfg, "--out-dir", str(out)]) == 0
        lines = (out / "class_oracle.csv").read_text().splitlines()
        assert lines[0] == "interrogation_time_s,contrast_proxy"
        assert len(lines) == 17

    def test_gravity_run_reports_recovered_tide(self, tmp_path):
        text = """
seed: 5
sequence: {order: 2, interrogation_time_s: 20.0e-3, pulse_sigma_s: 15.0e-6}
ensemble: {samples: 4, sigma_q_hk: 0.42}
noise: {mirror_phase_rms_rad: 0.01, detection_snr: 100.0}
tide:
  mean_gravity_m_s2: 9.81
  components:
    - {amplitude_m_s2: 2.0e-6, period_h: 0.05, phase_rad: 0.0}
gravity_run: {shots: 600, shot_period_s: 1.0, bin_size: 38}
"""
        cfg = write_config(tmp_path, text)
        out = tmp_path / "grun"
        assert main(["gravity-run", cfg, "--out-dir", str(out)]) == 0
        assert (out / "gravity_series.csv").exists()
        assert (out / "gravity_binned.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        comps = summary["results"]["components"]
        assert len(comps) == 1
        rec = comps[0]["amplitude_recovered"]
        se = comps[0]["amplitude_stderr"]
        assert rec == pytest.approx(2.0e-6, abs=max(3 * se, 2e-7))
