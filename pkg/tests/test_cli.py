import json
import math

import pytest

from sdedensity.cli import main
from sdedensity.config import PRESETS, RunConfig, preset
from sdedensity.errors import ConfigError


def tiny_config(**overrides):
    cfg = {
        "model": {
            "mu": {"breakpoints": [], "pieces": [{"kind": "constant", "value": 0.0}]},
            "sigma": {"breakpoints": [], "pieces": [{"kind": "constant", "value": 1.0}]},
        },
        "window": {"xi": 0.0, "delta": 6.0, "delta0": 1.0, "l_sigma": 1.0},
        "cutoff": {"shoulder_fraction": 0.2},
        "simulation": {"x0": 0.0, "t": 0.25, "h": 2.0**-5, "n_paths": 2000, "seed": 99},
        "frequency_grid": {"y_max": 8.0, "spacing": 0.25},
        "inversion": {"n_points": 101, "margin": 0.05},
        "bounds": {"gamma": 0.5, "eps_rule": "matched", "y_lo": math.e, "y_hi": 8.0},
        "density": {"t_list": [0.125, 0.25]},
        "hoelder": {"gamma_list": [0.5], "t_list": [0.25]},
        "reference": {"kind": "brownian_drift", "mu0": 0.0, "sigma0": 1.0, "x0": 0.0},
        "certify": {"checks": ["cf_sanity", "mass_consistency", "density_vs_oracle"],
                    "density_tolerance": 0.1, "mass_slack": 5e-3},
    }
    for key, val in overrides.items():
        cfg[key] = {**cfg.get(key, {}), **val} if isinstance(val, dict) else val
    return cfg


@pytest.fixture()
def config_file(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(tiny_config()))
    return p


class TestConfigLoading:
    def test_presets_all_validate(self):
        for name in PRESETS:
            preset(name)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset("nope")

    def test_missing_section_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"model": tiny_config()["model"]})

    def test_lookback_precondition_checked(self):
        bad = tiny_config(simulation={"x0": 0.0, "t": 0.0625, "h": 2.0**-5,
                                      "n_paths": 100, "seed": 1},
                          density={"t_list": [0.0625]},
                          hoelder={"gamma_list": [0.5], "t_list": [0.0625]})
        with pytest.raises(ConfigError, match="lookback"):
            RunConfig.from_dict(bad)

    def test_off_grid_density_time_rejected(self):
        bad = tiny_config(density={"t_list": [0.2]})
        with pytest.raises(ConfigError, match="grid"):
            RunConfig.from_dict(bad)

    def test_hash_is_stable_and_seed_sensitive(self):
        c1 = RunConfig.from_dict(tiny_config())
        c2 = RunConfig.from_dict(tiny_config())
        assert c1.hash == c2.hash
        assert c1.with_seed(123).hash != c1.hash


class TestCommands:
    def test_simulate_writes_ensemble(self, config_file, tmp_path):
        out = tmp_path / "o"
        assert main(["simulate", "--config", str(config_file), "--out", str(out)]) == 0
        assert (out / "ensemble.bin").exists()
        info = json.loads((out / "run_info.json").read_text())
        assert info["command"] == "simulate"
        assert len(info["config_hash"]) == 64

    def test_cf_and_density_and_hoelder(self, config_file, tmp_path):
        out = tmp_path / "o"
        for cmd in ("cf", "density", "hoelder"):
            assert main([cmd, "--config", str(config_file), "--out", str(out)]) == 0
        assert (out / "cf.csv").exists()
        assert (out / "density_t0p125.csv").exists()
        assert (out / "density_t0p25.csv").exists()
        assert (out / "hoelder.csv").read_text().splitlines()[0] == "t,gamma,c_gamma_norm"

    def test_bound_outputs(self, config_file, tmp_path):
        out = tmp_path / "o"
        assert main(["bound", "--config", str(config_file), "--out", str(out)]) == 0
        summary = json.loads((out / "bound_summary.json").read_text())
        assert 0.0 <= summary["pass_fraction"] <= 1.0
        assert summary["config_hash"] == RunConfig.from_dict(tiny_config()).hash

    def test_invalid_config_exits_2(self, tmp_path):
        p = tmp_path / "bad.json"
        bad = tiny_config()
        bad["window"]["delta0"] = 10.0
        p.write_text(json.dumps(bad))
        assert main(["cf", "--config", str(p), "--out", str(tmp_path / "o")]) == 2

    def test_seed_override_changes_output(self, config_file, tmp_path):
        o1, o2 = tmp_path / "a", tmp_path / "b"
        main(["cf", "--config", str(config_file), "--out", str(o1)])
        main(["cf", "--config", str(config_file), "--out", str(o2),
              "--seed-override", "123"])
        assert (o1 / "cf.csv").read_bytes() != (o2 / "cf.csv").read_bytes()


class TestCertify:
    def test_passing_run_exits_zero(self, config_file, tmp_path):
        out = tmp_path / "o"
        assert main(["certify", "--config", str(config_file), "--out", str(out)]) == 0
        report = json.loads((out / "certify.json").read_text())
        assert report["all_pass"] is True
        for check in report["checks"].values():
            assert check["pass"] is True

    def test_exit_code_tracks_verdicts(self, tmp_path):
        rigged = tiny_config(certify={"checks": ["density_vs_oracle"],
                                      "density_tolerance": 1e-9})
        p = tmp_path / "rigged.json"
        p.write_text(json.dumps(rigged))
        out = tmp_path / "o"
        assert main(["certify", "--config", str(p), "--out", str(out)]) == 1
        report = json.loads((out / "certify.json").read_text())
        assert report["all_pass"] is False


class TestByteDeterminism:
    def test_cf_bytes_stable_across_threads(self, config_file, tmp_path):
        outs = []
        for tag, threads in (("a", 1), ("b", 8)):
            out = tmp_path / tag
            main(["cf", "--config", str(config_file), "--out", str(out),
                  "--threads", str(threads)])
            outs.append((out / "cf.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_density_bytes_stable_across_runs(self, config_file, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            main(["density", "--config", str(config_file), "--out", str(out)])
            outs.append((out / "density_t0p25.csv").read_bytes())
        assert outs[0] == outs[1]
