"""CLI and configuration tests.

The slow end-to-end policies are covered in test_allocation.py and the
acceptance suite; here the lifetime/sweep commands run with max_cycles
capped so every test stays fast.
"""

import pathlib
import subprocess
import sys

import pytest

from flashlife.cli import (
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    main,
)
from flashlife.config import (
    ConfigError,
    apply_overrides,
    device_params_from,
    format_config,
    parse_config_text,
    policy_config_from,
)


class TestConfigParsing:
    def test_basic(self):
        values = parse_config_text(
            "# comment\n"
            "sigma_p = 0.06\n"
            "max_cycles = 500  # trailing comment\n"
            "\n"
            "base_levels = 2.8, 5.2, 6.4, 7.86\n"
            "scale_erased = false\n"
        )
        assert values["sigma_p"] == 0.06
        assert values["max_cycles"] == 500
        assert values["base_levels"] == (2.8, 5.2, 6.4, 7.86)
        assert values["scale_erased"] is False

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            parse_config_text("bogus = 1\n")

    def test_bad_value_names_key(self):
        with pytest.raises(ConfigError, match="sigma_p"):
            parse_config_text("sigma_p = fast\n")

    def test_missing_equals_names_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config_text("sigma_p = 0.06\nnonsense\n")

    def test_overrides(self):
        values = apply_overrides({"sigma_p": 0.05}, ["sigma_p=0.07", "max_cycles=9"])
        assert values == {"sigma_p": 0.07, "max_cycles": 9}
        with pytest.raises(ConfigError):
            apply_overrides({}, ["no_equals_sign"])

    def test_device_and_policy_builders(self):
        params = device_params_from({"sigma_p": 0.06})
        assert params.sigma_p == 0.06
        assert params.sigma_e == 0.35  # default preserved
        policy = policy_config_from({"max_cycles": 42})
        assert policy.max_cycles == 42
        with pytest.raises(ConfigError):
            device_params_from({"sigma_p": 0.5})  # violates sigma_e > sigma_p
        with pytest.raises(ConfigError):
            policy_config_from({"mode": "warp"})

    def test_format_round_trip(self):
        params = device_params_from({"sigma_p": 0.06})
        policy = policy_config_from({"max_cycles": 7})
        values = parse_config_text(format_config(params, policy))
        assert device_params_from(values) == params
        assert policy_config_from(values) == policy

    def test_default_config_file_loads(self, tmp_path, monkeypatch):
        conf = (pathlib.Path(__file__).parent.parent / "params" / "default.conf")
        monkeypatch.chdir(tmp_path)
        rc = main(
            ["estimate", "--config", str(conf),
             "--simulate", "5000", "--v-acc", "0", "--t", "0",
             "--t-known", "0", "--seed", "1"]
        )
        assert rc == EXIT_OK


class TestLifetimeCommand:
    def test_both_modes_output(self, tmp_path, capsys):
        out = tmp_path / "traj"
        rc = main(
            ["lifetime", "--set", "max_cycles=200", "--out", str(out)]
        )
        assert rc == EXIT_OK
        line = capsys.readouterr().out.strip()
        assert line.startswith("lifetime_fixed=")
        assert "lifetime_dynamic=" in line and "improvement=" in line
        fixed_csv = (tmp_path / "traj_fixed.csv").read_text().splitlines()
        assert fixed_csv[0] == "cycle,alpha,capacity_bits,v_acc"
        assert len(fixed_csv) > 1
        manifest = (tmp_path / "traj.manifest").read_text()
        assert "command = lifetime" in manifest
        assert "max_cycles = 200" in manifest

    def test_single_mode(self, tmp_path, capsys):
        rc = main(
            ["lifetime", "--mode", "fixed", "--set", "max_cycles=200",
             "--out", str(tmp_path / "f.csv")]
        )
        assert rc == EXIT_OK
        assert capsys.readouterr().out.strip() == "lifetime_fixed=200"

    def test_config_error_exit_code(self, capsys):
        rc = main(["lifetime", "--set", "bogus=1"])
        assert rc == EXIT_USAGE
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file_is_data_error(self, capsys):
        rc = main(["lifetime", "--config", "/nonexistent/x.conf"])
        assert rc == EXIT_DATA

    def test_numerical_failure_exit_code(self, capsys, monkeypatch):
        from flashlife import cli
        from flashlife.infotheory import NumericalFailure

        def boom(*args, **kwargs):
            raise NumericalFailure("quadrature did not converge", 1e-3)

        monkeypatch.setattr(cli, "simulate_lifetime", boom)
        rc = main(["lifetime", "--mode", "fixed"])
        assert rc == EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err


class TestCapacitySweepCommand:
    def test_writes_csv_and_manifest(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main(["capacity-sweep", "--set", "max_cycles=300", "--out", str(out)])
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "cycle,capacity_fixed,capacity_dynamic,alpha_dynamic"
        assert len(lines) == 4  # cycles 100, 200, 300
        cycle, cf, cd, ad = lines[1].split(",")
        assert cycle == "100"
        assert 1.9 < float(cf) <= 2.0
        assert float(cd) == pytest.approx(1.92, abs=1e-3)
        assert 0 < float(ad) < 1
        assert (tmp_path / "sweep.csv.manifest").exists()

    def test_zero_cycles_header_only(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main(["capacity-sweep", "--set", "max_cycles=0", "--out", str(out)])
        assert rc == EXIT_OK
        assert out.read_text().splitlines() == [
            "cycle,capacity_fixed,capacity_dynamic,alpha_dynamic"
        ]


class TestEstimateCommand:
    def test_simulate_round_trip(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        llr = tmp_path / "llrs.csv"
        rc = main(
            ["estimate", "--simulate", "100000", "--v-acc", "8295",
             "--t", "8760", "--t-known", "8760", "--seed", "12",
             "--llr-out", str(llr)]
        )
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        v_hat = float(out.split("v_acc_hat=")[1].split(",")[0])
        cap_hat = float(out.split("capacity_hat=")[1].split(",")[0])
        assert abs(v_hat - 8295.0) / 8295.0 < 0.05
        assert cap_hat == pytest.approx(1.902, abs=0.01)
        llr_lines = llr.read_text().splitlines()
        assert llr_lines[0] == "bin_index,llr_bit0,llr_bit1"
        assert len(llr_lines) == 11  # 10 bins with per_gap=3
        assert (tmp_path / "llrs.manifest").exists()

    def test_simulate_requires_seed(self, capsys, monkeypatch, tmp_path):
        monkeypatch.chdir(tmp_path)
        rc = main(["estimate", "--simulate", "1000"])
        assert rc == EXIT_USAGE
        assert "--seed" in capsys.readouterr().err

    def test_histogram_file(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        from flashlife.channel import WearState, default_device_params
        from flashlife.estimation import (
            build_histogram,
            default_read_thresholds,
            simulate_population,
        )

        params = default_device_params()
        thr = default_read_thresholds(params.base_levels)
        pop = simulate_population(
            100_000, WearState(8295.0, 3000, 1.0), 8760.0, params, seed=8
        )
        hist = build_histogram(pop.reads, thr)
        hist_file = tmp_path / "reads.hist"
        hist_file.write_text(
            "# histogram dump\n"
            "thresholds: " + " ".join(str(v) for v in thr.thresholds) + "\n"
            "counts: " + " ".join(str(c) for c in hist.counts) + "\n"
        )
        rc = main(["estimate", "--hist", str(hist_file), "--t-known", "8760"])
        assert rc == EXIT_OK
        v_hat = float(capsys.readouterr().out.split("v_acc_hat=")[1].split(",")[0])
        assert abs(v_hat - 8295.0) / 8295.0 < 0.05

    def test_malformed_histogram_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.hist"
        bad.write_text("thresholds: 1 2 3\ncounts: a b c d\n")
        rc = main(["estimate", "--hist", str(bad)])
        assert rc == EXIT_DATA
        assert "line 2" in capsys.readouterr().err

    def test_missing_counts_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.hist"
        bad.write_text("thresholds: 1 2 3\n")
        rc = main(["estimate", "--hist", str(bad)])
        assert rc == EXIT_DATA

    def test_insufficient_counts_is_data_error(self, tmp_path, capsys):
        small = tmp_path / "small.hist"
        small.write_text("thresholds: 4 5.8 7.13\ncounts: 5 5 5 5\n")
        rc = main(["estimate", "--hist", str(small)])
        assert rc == EXIT_DATA

    def test_estimate_deterministic(self, capsys, monkeypatch, tmp_path):
        monkeypatch.chdir(tmp_path)
        argv = ["estimate", "--simulate", "20000", "--t-known", "8760",
                "--seed", "33"]
        assert main(argv) == EXIT_OK
        first = capsys.readouterr().out
        assert main(argv) == EXIT_OK
        assert capsys.readouterr().out == first


class TestEntryPoint:
    def test_console_script(self):
        proc = subprocess.run(
            [sys.executable, "-m", "flashlife.cli", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.strip()

    def test_usage_error_exit_code(self):
        proc = subprocess.run(
            [sys.executable, "-m", "flashlife.cli", "frobnicate"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 2
