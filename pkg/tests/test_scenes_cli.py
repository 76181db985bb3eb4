import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from eqindex import cli
from eqindex.config import DEFAULT_T_GRID, SCENES, load_config, validate, with_overrides
from eqindex.errors import ConfigError
from eqindex.report import check_table, dumps, render, to_csv, to_json
from eqindex.scenes import Check, run_scene

SCENE_CONFIGS = [{"scene": s} for s in SCENES if s != "cp1-twisted"] + [{"scene": "cp1-twisted", "twist_k": 2}]


class TestConfig:
    def test_defaults(self):
        cfg = load_config('{"scene":"t2-reflection"}')
        assert cfg.group_angle == "reflection"
        assert cfg.t_grid == DEFAULT_T_GRID
        assert cfg.format == "json"

    def test_cp1_valid(self):
        cfg = load_config({"scene": "cp1-twisted", "twist_k": 2, "group_angle": 1.5707963267948966})
        assert cfg.twist_k == 2 and cfg.group_angle == math.pi / 2

    def test_unknown_scene_lists_known(self):
        with pytest.raises(ConfigError) as exc:
            load_config({"scene": "nope"})
        assert all(s in str(exc.value) for s in SCENES)

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="twist_k"):
            load_config({"scene": "cp1-twisted"})

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="colour"):
            validate({"scene": "s2-spin", "colour": 1})

    @pytest.mark.parametrize("grid", [[0.5, 1.0], [1.0, 1.0], [1.0, -0.5], [], "abc"])
    def test_bad_t_grid(self, grid):
        with pytest.raises(ConfigError):
            validate({"scene": "s2-spin", "t_grid": grid})

    @pytest.mark.parametrize("raw", [{"scene": "s2-spin", "twist_k": 1.5}, {"scene": "s2-spin", "lift_sign": 0},
                                     {"scene": "s2-spin", "format": "xml"}, {"scene": "s2-spin", "group_angle": "x"},
                                     {"scene": "t2-reflection", "group_angle": 1.0},
                                     {"scene": "s2-spin", "mesh_resolution": 1}])
    def test_bad_fields(self, raw):
        with pytest.raises(ConfigError):
            validate(raw)

    def test_file_and_errors(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"scene": "flat-heat"}), encoding="utf-8")
        assert load_config(str(p)).scene == "flat-heat"
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "missing.json"))
        with pytest.raises(ConfigError):
            load_config("{not json")
        with pytest.raises(ConfigError):
            load_config("[1, 2]")

    def test_overrides_revalidate(self):
        cfg = load_config({"scene": "b-circle-pv"})
        assert cfg.mesh_resolution == 256
        assert with_overrides(cfg, mesh_resolution=64, t_grid=None).mesh_resolution == 64
        with pytest.raises(ConfigError):
            with_overrides(cfg, t_grid=[0.1, 0.2])

    def test_canonical_drops_output(self):
        a = validate({"scene": "s2-spin", "output": "a.json"}).canonical()
        assert "output" not in a and a == validate({"scene": "s2-spin"}).canonical()


class TestScenes:
    @pytest.mark.parametrize("raw", SCENE_CONFIGS, ids=lambda r: r["scene"])
    def test_all_checks_pass(self, raw):
        rep = run_scene(validate(raw))
        assert rep.checks and rep.passed, check_table(rep)

    def test_s2_opposite_poles(self):
        rep = run_scene(validate({"scene": "s2-spin"}))
        n, s = rep.characters[0].per_component
        assert rep.characters[0].total == pytest.approx(0, abs=1e-12)
        assert n == pytest.approx(-s, abs=1e-15) and abs(n) > 0

    def test_cp1_k2_quarter_turn(self):
        rep = run_scene(validate({"scene": "cp1-twisted", "twist_k": 2}))
        assert rep.characters[0].total == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("k", range(5))
    def test_cp1_half_turn(self, k):
        rep = run_scene(validate({"scene": "cp1-twisted", "twist_k": k, "group_angle": math.pi}))
        assert rep.passed

    def test_t2_lift_sign(self):
        rep = run_scene(validate({"scene": "t2-reflection", "lift_sign": -1}))
        assert rep.passed and rep.characters[0].total == pytest.approx(2j, abs=1e-12)

    def test_flat_heat_reports_slopes(self):
        rep = run_scene(validate({"scene": "flat-heat"}))
        names = {c.name for c in rep.checks}
        assert {"residual_slope_N2", "residual_slope_N3", "residual_slope_N4"} <= names

    def test_failing_check_detected(self):
        rep = run_scene(validate({"scene": "s2-spin"}))
        rep.checks.append(Check("forced", 1.0, 0.5))
        assert not rep.passed
        assert "FAIL" in check_table(rep)

    def test_min_check_and_nan(self):
        assert Check("slope", 2.0, 1.5, "min").passed
        assert not Check("slope", 1.0, 1.5, "min").passed
        assert not Check("x", float("nan"), 1.0).passed


class TestReport:
    @pytest.mark.parametrize("raw", SCENE_CONFIGS, ids=lambda r: r["scene"])
    def test_deterministic_json(self, raw):
        a = to_json(run_scene(validate(raw)))
        b = to_json(run_scene(validate(raw)))
        assert a == b
        doc = json.loads(a)
        assert doc["scene"] == raw["scene"] and doc["passed"] is True
        assert "timings" not in doc

    def test_config_hash_tracks_config(self):
        a = run_scene(validate({"scene": "s2-spin"}))
        b = run_scene(validate({"scene": "s2-spin", "group_angle": 1.0}))
        assert a.config_hash != b.config_hash and len(a.config_hash) == 16

    def test_floats_seventeen_digits(self):
        assert dumps({"x": 0.1}) == '{\n  "x": 0.10000000000000001\n}'
        assert json.loads(dumps({"z": 1 + 2j, "n": float("nan")})) == {"z": {"re": 1.0, "im": 2.0}, "n": "nan"}

    def test_csv_rows(self):
        rep = run_scene(validate({"scene": "t2-reflection"}))
        rows = list(csv.reader(io.StringIO(to_csv(rep))))
        assert rows[0] == ["scene", "sweep", "key", "field", "re", "im"]
        assert len(rows) > 1 and all(r[0] == "t2-reflection" for r in rows[1:])
        keys = [float(r[2]) for r in rows[1:]]
        assert set(keys) == set(DEFAULT_T_GRID)

    def test_timings_opt_in(self):
        doc = json.loads(render(run_scene(validate({"scene": "s2-spin"}), timings=True), "json"))
        assert doc["timings"]["backend"] in ("numba", "numpy")


class TestCLI:
    def test_scene_stdout(self, capsys):
        assert cli.main(["--scene", "s2-spin"]) == 0
        assert json.loads(capsys.readouterr().out)["scene"] == "s2-spin"

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"scene": "t2-reflection", "t_grid": [1.0, 0.5]}), encoding="utf-8")
        out = tmp_path / "r.csv"
        code = cli.main(["--config", str(cfg), "--t-grid", "0.8,0.4,0.2", "--cutoff", "40",
                         "--out", str(out), "--format", "csv"])
        assert code == 0 and capsys.readouterr().out == ""
        rows = list(csv.reader(out.open(encoding="utf-8")))
        assert {float(r[2]) for r in rows[1:]} == {0.8, 0.4, 0.2}

    def test_byte_identical_files(self, tmp_path):
        paths = [tmp_path / f"r{i}.json" for i in range(2)]
        for p in paths:
            assert cli.main(["--scene", "cp1-twisted", "--config", '{"scene":"cp1-twisted","twist_k":3}',
                             "--out", str(p)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_mesh_flag(self, capsys):
        assert cli.main(["--scene", "b-circle-pv", "--mesh", "128"]) == 0
        assert json.loads(capsys.readouterr().out)["config"]["mesh_resolution"] == 128

    @pytest.mark.parametrize("argv", [["--scene", "nope"], ["--scene", "cp1-twisted"], [],
                                      ["--scene", "s2-spin", "--t-grid", "0.1,0.2"],
                                      ["--config", "/nonexistent/cfg.json"]])
    def test_config_errors_exit_2(self, argv, capsys):
        assert cli.main(argv) == 2
        assert "ConfigError" in capsys.readouterr().err

    def test_domain_error_exit_4(self, capsys):
        assert cli.main(["--scene", "s2-spin", "--config", '{"scene":"s2-spin","group_angle":4.0}']) == 4
        assert "scene s2-spin" in capsys.readouterr().err

    def test_odd_mesh_exit_4(self, capsys):
        assert cli.main(["--scene", "b-circle-pv", "--mesh", "65"]) == 4

    def test_tolerance_failure_exit_3(self, monkeypatch, capsys):
        import eqindex.scenes as scenes

        orig = scenes.RUNNERS["s2-spin"]

        def failing(cfg, rep):
            orig(cfg, rep)
            rep.checks.append(Check("forced_failure", 1.0, 0.0))

        monkeypatch.setitem(scenes.RUNNERS, "s2-spin", failing)
        assert cli.main(["--scene", "s2-spin"]) == 3
        err = capsys.readouterr().err
        assert "forced_failure" in err and "FAIL" in err

    def test_check_aggregates(self, monkeypatch, capsys):
        import eqindex.acceptance as acc

        monkeypatch.setattr(acc, "CRITERIA", {"A1": acc.CRITERIA["A1"], "AX": lambda: (False, "forced")})
        assert cli.main(["--check"]) == 3
        out = capsys.readouterr().out
        assert "A1 PASS" in out and "AX FAIL" in out and "1/2 criteria passed" in out

    def test_module_entry_point(self):
        env = dict(os.environ)
        r = subprocess.run([sys.executable, "-m", "eqindex.cli", "--scene", "nope"], capture_output=True,
                           text=True, env=env)
        assert r.returncode == 2
