"""Config parsing, presets, run artifacts and exit codes."""
import json

import numpy as np
import pytest

from dynwave import cli, discretize, lyapunov
from dynwave.cli import (ConfigError, RunConfig, config_from_dict, load_config,
                         preset_config, presets, resolve_dt, residual_force,
                         run)


SMALL = {
    "N": 16, "T": 2.0, "q": 0.005, "q1": 0.005, "gamma1": 0.005,
    "kp": 10.0, "alpha2": 100.0, "v1_ref": 0.5, "sample_stride": 5,
}


class TestPresets:
    def test_table_values(self):
        c = preset_config("1a")
        assert (c.q, c.q1, c.gamma1) == (0.0, 0.0, 0.0)
        assert (c.kp, c.alpha2, c.v1_ref) == (0.0, 0.0, 0.0)
        assert c.T == 50.0 and c.N == 199 and c.beta1 == 20.0 and c.mu1 == 20.0

        c = preset_config("3b")
        assert (c.q, c.q1, c.gamma1) == (0.005, 0.005, 0.005)
        assert (c.kp, c.alpha2, c.v1_ref) == (10.0, 100.0, 0.5)
        assert c.T == 200.0

        c = preset_config("1c")
        assert (c.kp, c.alpha2, c.v1_ref) == (1000.0, 10.0, 0.5)
        assert c.q == 0.0

        c = preset_config("2a")
        assert c.q == 0.001 and c.kp == 0.0 and c.T == 50.0

    def test_nine_presets(self):
        names = [c.name for c in presets()]
        assert names == ["1a", "1b", "1c", "2a", "2b", "2c", "3a", "3b", "3c"]

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_config("4z")

    def test_initial_condition_is_boundary_kick(self):
        c = preset_config("1a")
        assert c.initial == {"u": 0.0, "udot": 0.0, "udot_at_1": 1.0}


class TestConfigFromDict:
    def test_overrides_on_top_of_preset(self):
        cfg = config_from_dict({"preset": "3b", "N": 50, "T": 10.0})
        assert cfg.q == 0.005 and cfg.N == 50 and cfg.T == 10.0

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown keys: qq"):
            config_from_dict({"qq": 1.0})

    def test_hypothesis_violations_reported(self):
        with pytest.raises(ConfigError, match="h2"):
            config_from_dict({"q": -1.0})
        with pytest.raises(ConfigError, match="h1"):
            config_from_dict({"a": 0.0})

    def test_type_errors_cite_field(self):
        with pytest.raises(ConfigError, match="N: expected int"):
            config_from_dict({"N": 19.5})
        with pytest.raises(ConfigError, match="dt"):
            config_from_dict({"dt": "fast"})
        with pytest.raises(ConfigError, match="T"):
            config_from_dict({"T": -3.0})

    def test_initial_subkeys_checked(self):
        with pytest.raises(ConfigError, match="initial"):
            config_from_dict({"initial": {"speed": 1.0}})

    def test_top_level_must_be_object(self):
        with pytest.raises(ConfigError):
            config_from_dict([1, 2, 3])


class TestLoadConfig:
    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "case.json"
        path.write_text(json.dumps(SMALL))
        cfg = load_config(path)
        assert cfg.name == "case"
        assert cfg.N == 16 and cfg.kp == 10.0

    def test_syntax_error_cites_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "N": 16,\n}\n')
        with pytest.raises(ConfigError, match="broken.json:3"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.json")


class TestResolveDt:
    def test_auto_is_cfl_default(self):
        cfg = config_from_dict(dict(SMALL))
        grid = discretize.build_grid(cfg.N)
        sysd = discretize.build_system(grid, cfg.physical(), cfg.boundary_variant())
        assert resolve_dt(cfg, sysd) == pytest.approx(0.1 / 16.0)

    def test_explicit_value_passes_through(self):
        cfg = config_from_dict({**SMALL, "dt": 1e-3})
        assert resolve_dt(cfg, None) == 1e-3


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = config_from_dict(dict(SMALL), name="small")
    report = run(cfg, out_dir=str(out))
    return out, report


class TestRun:
    def test_artifacts_written(self, small_run):
        out, _ = small_run
        assert (out / "trajectory.csv").exists()
        assert (out / "functionals.csv").exists()
        assert (out / "report.json").exists()

    def test_report_fields(self, small_run):
        _, report = small_run
        for key in ("config", "dt", "ell", "u_star", "final_y", "final_y_error",
                    "conservation_residual", "energy_drift", "energy_slope",
                    "decay_fit", "wall_seconds"):
            assert key in report
        assert report["conservation_residual"] < 1e-9
        assert report["ell"] == pytest.approx(0.00125)

    def test_csv_layout(self, small_run):
        out, _ = small_run
        lines = (out / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t," + ",".join(f"node_{i}" for i in range(17))
        flines = (out / "functionals.csv").read_text().splitlines()
        assert flines[0] == "t,E_u,F,W,V,Gamma,sup_dev,y,U,eta"
        assert len(lines) == len(flines)

    def test_reruns_are_bit_identical(self, tmp_path):
        cfg = config_from_dict(dict(SMALL), name="det")
        run(cfg, out_dir=str(tmp_path / "one"))
        run(cfg, out_dir=str(tmp_path / "two"))
        for fname in ("trajectory.csv", "functionals.csv"):
            assert (tmp_path / "one" / fname).read_bytes() == \
                (tmp_path / "two" / fname).read_bytes()

    def test_resolvent_check_block(self, tmp_path):
        cfg = config_from_dict({**SMALL, "T": 0.5})
        report = run(cfg, resolvent_check=True, out_dir=str(tmp_path))
        assert report["resolvent"]["fixed_point_residual"] < 1e-10
        assert report["resolvent"]["pairing"] >= -1e-10

    def test_dirichlet_variants_unsupported(self, tmp_path):
        cfg = config_from_dict({**SMALL, "variant": "w1d", "alpha2": 0.0})
        with pytest.raises(ConfigError):
            run(cfg, out_dir=str(tmp_path))


class TestResidualForce:
    def test_zero_without_setpoint_or_sources(self):
        cfg = config_from_dict({"N": 12, "q": 0.1, "q1": 0.1, "gamma1": 0.1, "kp": 1.0})
        grid = discretize.build_grid(cfg.N)
        params = cfg.physical()
        sysd = discretize.build_system(grid, params, cfg.boundary_variant())
        g = residual_force(cfg, grid, params, sysd)
        assert np.max(np.abs(g)) == 0.0

    def test_small_for_fine_grids(self):
        # the change of variables cancels the constant forcing up to the
        # spatial discretization error of K against the smooth shift profile
        cfg = config_from_dict(dict(SMALL))
        grid = discretize.build_grid(cfg.N)
        params = cfg.physical()
        sysd = discretize.build_system(grid, params, cfg.boundary_variant())
        g = residual_force(cfg, grid, params, sysd)
        assert np.max(np.abs(g)) < 1e-2


class TestMainExitCodes:
    def test_run_ok(self, tmp_path, capsys):
        path = tmp_path / "ok.json"
        path.write_text(json.dumps({**SMALL, "T": 1.0}))
        code = cli.main(["run", str(path), "--out", str(tmp_path / "out")])
        assert code == cli.EXIT_OK
        assert "final y" in capsys.readouterr().out

    def test_config_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({**SMALL, "q": -1.0}))
        assert cli.main(["run", str(path)]) == cli.EXIT_CONFIG
        assert "h2" in capsys.readouterr().err

    def test_divergence(self, tmp_path, capsys):
        path = tmp_path / "blow.json"
        path.write_text(json.dumps({**SMALL, "dt": 1.0, "T": 50.0}))
        code = cli.main(["run", str(path), "--out", str(tmp_path / "out")])
        assert code == cli.EXIT_DIVERGED
        assert "last valid t" in capsys.readouterr().err

    def test_certification_failure_via_sweep(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**SMALL, "N": 20}))
        code = cli.main(["sweep", str(path), "--ell", "5.0:6.0:2"])
        assert code == cli.EXIT_CERTIFICATION

    def test_sweep_finds_admissible_ell(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**SMALL, "N": 20}))
        code = cli.main(["sweep", str(path), "--ell", "0.0005:0.002:3"])
        assert code == cli.EXIT_OK
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "ell,c,C,rho_formal"

    def test_presets_listing(self, capsys):
        assert cli.main(["presets"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert len(out.splitlines()) == 9

    def test_spectrum_writes_csv(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**SMALL, "N": 12}))
        code = cli.main(["spectrum", str(path), "--out", str(tmp_path / "spec")])
        assert code == cli.EXIT_OK
        assert (tmp_path / "spec" / "spectrum.csv").exists()
