import json
import os
import subprocess
import sys

import pytest

CHAOTIC_PARAMS = {"r_x": 2.9, "r_y": 2.755, "K_x": 0.95, "K_y": 1.0,
                  "a_yx": -0.1, "a_xy": 0.0}
STABLE_PARAMS = {"r_x": 0.5, "r_y": 0.475, "K_x": 0.95, "K_y": 1.0,
                 "a_yx": -0.1, "a_xy": 0.0}


def run_cli(*args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "chainlab", *args],
                          capture_output=True, text=True, env=env)


def write_config(path, cfg):
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


@pytest.fixture
def outdirs(tmp_path):
    def make(name):
        d = tmp_path / name
        return str(d)
    return make


class TestSimulateCommand:
    def test_row_count_and_header(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json",
                           {"params": CHAOTIC_PARAMS, "n_steps": 2000})
        out = outdirs("a")
        r = run_cli("simulate", cfg, "-o", out)
        assert r.returncode == 0
        lines = open(os.path.join(out, "trajectory.csv")).read().split("\n")
        assert lines[0] == "n,x,y"
        assert lines[-1] == ""  # trailing newline
        assert len(lines) == 2003  # header + 2001 rows + trailing

    def test_fixed_point_initial_constant_csv(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {
            "params": {"r_x": 0.5, "r_y": 0.5, "K_x": 1.0, "K_y": 1.0},
            "initial": {"x": 1.0, "y": 1.0},
            "n_steps": 50})
        out = outdirs("a")
        assert run_cli("simulate", cfg, "-o", out).returncode == 0
        rows = open(os.path.join(out, "trajectory.csv")).read().strip().split("\n")[1:]
        assert all(row.endswith(",1,1") for row in rows)

    def test_divergence_exit_code_and_iteration(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {
            "params": {"r_x": 200.0, "r_y": 0.5, "K_x": 10.0, "K_y": 1.0},
            "n_steps": 100})
        r = run_cli("simulate", cfg, "-o", outdirs("a"))
        assert r.returncode == 3
        assert "iteration=1" in r.stderr

    def test_unknown_key_rejected(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json",
                           {"params": CHAOTIC_PARAMS, "n_steps": 10,
                            "bogus": 1})
        r = run_cli("simulate", cfg, "-o", outdirs("a"))
        assert r.returncode == 2
        assert "bogus" in r.stderr

    def test_missing_required_key(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {"params": CHAOTIC_PARAMS})
        assert run_cli("simulate", cfg, "-o", outdirs("a")).returncode == 2

    def test_malformed_json(self, tmp_path, outdirs):
        p = tmp_path / "c.json"
        p.write_text("{not json", encoding="utf-8")
        assert run_cli("simulate", str(p), "-o", outdirs("a")).returncode == 2

    def test_echo_closure(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json",
                           {"params": CHAOTIC_PARAMS, "n_steps": 300})
        out1, out2 = outdirs("a"), outdirs("b")
        assert run_cli("simulate", cfg, "-o", out1).returncode == 0
        echo = os.path.join(out1, "config_echo.json")
        assert run_cli("simulate", echo, "-o", out2).returncode == 0
        a = open(os.path.join(out1, "trajectory.csv"), "rb").read()
        b = open(os.path.join(out2, "trajectory.csv"), "rb").read()
        assert a == b
        assert open(echo, "rb").read() == \
            open(os.path.join(out2, "config_echo.json"), "rb").read()


class TestBifurcateCommand:
    def test_csv_schema_and_sorting(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {"sweep": {
            "r_min": 1.6, "r_max": 2.4, "n_r": 20, "n_burn": 500,
            "n_keep": 100}})
        out = outdirs("a")
        assert run_cli("bifurcate", cfg, "-o", out).returncode == 0
        lines = open(os.path.join(out, "bifurcation.csv")).read().strip().split("\n")
        assert lines[0] == "r,chain,value"
        rows = [ln.split(",") for ln in lines[1:]]
        keys = [(float(r), c, float(v)) for r, c, v in rows]
        assert keys == sorted(keys)
        assert {c for _, c, _ in keys} == {"x", "y"}

    def test_default_config_echo_documents_standard_sweep(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {"sweep": {"n_r": 2}})
        out = outdirs("a")
        assert run_cli("bifurcate", cfg, "-o", out).returncode == 0
        echo = json.load(open(os.path.join(out, "config_echo.json")))
        sweep = echo["sweep"]
        assert sweep["r_min"] == 1.5
        assert sweep["r_max"] == 3.0
        assert sweep["epsilon"] == 1e-4
        assert sweep["param_rule"] == {"r_x_scale": 1.0, "r_y_scale": 0.95,
                                       "K_x": 0.95, "K_y": 1.0,
                                       "a_yx": -0.1, "a_xy": 0.0}

    def test_thread_count_does_not_change_bytes(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {"sweep": {
            "r_min": 1.6, "r_max": 2.9, "n_r": 15, "n_burn": 300,
            "n_keep": 80}})
        out1, out2 = outdirs("a"), outdirs("b")
        assert run_cli("bifurcate", cfg, "-o", out1,
                       env_extra={"CHAINLAB_THREADS": "1"}).returncode == 0
        assert run_cli("bifurcate", cfg, "-o", out2,
                       env_extra={"CHAINLAB_THREADS": "3"}).returncode == 0
        assert open(os.path.join(out1, "bifurcation.csv"), "rb").read() == \
            open(os.path.join(out2, "bifurcation.csv"), "rb").read()

    def test_bad_thread_env(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {"sweep": {"n_r": 2}})
        r = run_cli("bifurcate", cfg, "-o", outdirs("a"),
                    env_extra={"CHAINLAB_THREADS": "zero"})
        assert r.returncode == 2


class TestPerturbCommand:
    def config(self, tmp_path, seed=3):
        return write_config(tmp_path / "c.json", {
            "seed": seed,
            "params": STABLE_PARAMS,
            "n_steps": 2000,
            "perturbations": [
                {"target": "K_y", "rate": 0.02, "low": 0.9, "high": 1.1}]})

    def test_event_log_matches_applied_events(self, tmp_path, outdirs):
        out = outdirs("a")
        r = run_cli("perturb", self.config(tmp_path), "-o", out)
        assert r.returncode == 0
        lines = open(os.path.join(out, "events.csv")).read().strip().split("\n")
        assert lines[0] == "iteration,target,value"
        n_events = len(lines) - 1
        assert n_events > 10
        assert f"{n_events} events applied" in r.stderr

    def test_seed_flag_overrides_and_echoes(self, tmp_path, outdirs):
        out1, out2, out3 = outdirs("a"), outdirs("b"), outdirs("c")
        cfg = self.config(tmp_path)
        assert run_cli("perturb", cfg, "-o", out1).returncode == 0
        assert run_cli("perturb", cfg, "-o", out2, "--seed", "99").returncode == 0
        a = open(os.path.join(out1, "events.csv")).read()
        b = open(os.path.join(out2, "events.csv")).read()
        assert a != b
        echo = json.load(open(os.path.join(out2, "config_echo.json")))
        assert echo["seed"] == 99
        assert echo["perturbations"][0]["seed"] == 99
        # echo closure holds under the override too
        assert run_cli("perturb", os.path.join(out2, "config_echo.json"),
                       "-o", out3).returncode == 0
        assert b == open(os.path.join(out3, "events.csv")).read()

    def test_events_file_round_trip(self, tmp_path, outdirs):
        out1, out2 = outdirs("a"), outdirs("b")
        assert run_cli("perturb", self.config(tmp_path), "-o", out1).returncode == 0
        replay = write_config(tmp_path / "replay.json", {
            "params": STABLE_PARAMS,
            "n_steps": 2000,
            "perturbations": [
                {"target": "K_y",
                 "events_file": os.path.join(out1, "events.csv")}]})
        assert run_cli("perturb", replay, "-o", out2).returncode == 0
        assert open(os.path.join(out1, "trajectory.csv"), "rb").read() == \
            open(os.path.join(out2, "trajectory.csv"), "rb").read()

    def test_mandatory_bounds(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {
            "params": STABLE_PARAMS, "n_steps": 100,
            "perturbations": [{"target": "K_y", "rate": 0.1}]})
        assert run_cli("perturb", cfg, "-o", outdirs("a")).returncode == 2


class TestDetectCommand:
    def test_chaotic_default_verdict(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {
            "params": CHAOTIC_PARAMS,
            "n_steps": 1999,
            "intervention": {"clamp_x": [0.95], "clamp_y": [1.0],
                             "n_steps": 20000}})
        out = outdirs("a")
        assert run_cli("detect", cfg, "-o", out).returncode == 0
        report = json.load(open(os.path.join(out, "report.json")))
        assert report["verdict"]["ccm"] == "y->x"
        assert report["verdict"]["interventional"] == "y->x"
        assert report["verdict"]["overall"] == "y->x"
        assert set(report) == {"xcorr", "granger", "ccm", "interventional",
                               "verdict", "config"}
        assert report["config"]["thresholds"]["shift"] == 0.05

    def test_no_coupling_verdict_none(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {
            "params": {"r_x": 4.0, "r_y": 3.8, "K_x": 1.0, "K_y": 1.0},
            "initial": {"x": 0.45, "y": 0.52},
            "n_steps": 1999,
            "intervention": {"clamp_x": [1.0], "clamp_y": [1.0],
                             "n_steps": 20000}})
        out = outdirs("a")
        assert run_cli("detect", cfg, "-o", out).returncode == 0
        report = json.load(open(os.path.join(out, "report.json")))
        assert report["verdict"]["overall"] == "none"
        assert report["interventional"]["y_to_x"]["shift"] == 0.0

    def test_degenerate_series_exit_code(self, tmp_path, outdirs):
        # x starts at zero and is absorbed there: constant series
        cfg = write_config(tmp_path / "c.json", {
            "params": CHAOTIC_PARAMS,
            "initial": {"x": 0.0, "y": 0.5},
            "n_steps": 1999})
        assert run_cli("detect", cfg, "-o", outdirs("a")).returncode == 4

    def test_malformed_config_exit(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {
            "params": CHAOTIC_PARAMS, "n_steps": 1999,
            "detectors": {"nonsense": True}})
        assert run_cli("detect", cfg, "-o", outdirs("a")).returncode == 2


class TestInterveneCommand:
    def test_stable_clamp_converges_and_reports_shift(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {
            "params": STABLE_PARAMS,
            "intervention": {"chain": "y", "value": 1.0, "n_steps": 10000}})
        out = outdirs("a")
        assert run_cli("intervene", cfg, "-o", out).returncode == 0
        rows = open(os.path.join(out, "trajectory.csv")).read().strip().split("\n")
        last_x = float(rows[-1].split(",")[1])
        assert abs(last_x - 1.05) < 1e-6
        shift = json.load(open(os.path.join(out, "shift.json")))
        assert shift["probe_chain"] == "x"
        assert 0.0 <= shift["shift"] <= 1.0

    def test_zero_coupling_clamp_shift_exactly_zero(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {
            "params": CHAOTIC_PARAMS,
            "intervention": {"chain": "x", "value": 0.95, "n_steps": 12000}})
        out = outdirs("a")
        assert run_cli("intervene", cfg, "-o", out).returncode == 0
        shift = json.load(open(os.path.join(out, "shift.json")))
        assert shift["shift"] == 0.0
        assert shift["exceeds_threshold"] is False

    def test_divergent_clamp_exit_code(self, tmp_path, outdirs):
        cfg = write_config(tmp_path / "c.json", {
            "params": CHAOTIC_PARAMS,
            "intervention": {"chain": "y", "value": 1e5, "n_steps": 10000}})
        assert run_cli("intervene", cfg, "-o", outdirs("a")).returncode == 3


class TestDeterminism:
    def test_all_commands_byte_identical_on_rerun(self, tmp_path, outdirs):
        configs = {
            "simulate": {"params": CHAOTIC_PARAMS, "n_steps": 500},
            "bifurcate": {"sweep": {"r_min": 1.7, "r_max": 2.8, "n_r": 10,
                                    "n_burn": 300, "n_keep": 60}},
            "perturb": {"seed": 11, "params": STABLE_PARAMS, "n_steps": 1500,
                        "perturbations": [{"target": "r_x", "rate": 0.02,
                                           "low": 0.4, "high": 1.2}]},
            "detect": {"params": CHAOTIC_PARAMS, "n_steps": 1199,
                       "intervention": {"clamp_x": [0.95], "clamp_y": [1.0],
                                        "n_steps": 10000}},
            "intervene": {"params": CHAOTIC_PARAMS,
                          "intervention": {"chain": "y", "value": 1.0,
                                           "n_steps": 10000}},
        }
        for command, cfg in configs.items():
            path = write_config(tmp_path / f"{command}.json", cfg)
            out1, out2 = outdirs(f"{command}1"), outdirs(f"{command}2")
            assert run_cli(command, path, "-o", out1).returncode == 0
            assert run_cli(command, path, "-o", out2).returncode == 0
            names1 = sorted(os.listdir(out1))
            assert names1 == sorted(os.listdir(out2))
            for name in names1:
                a = open(os.path.join(out1, name), "rb").read()
                b = open(os.path.join(out2, name), "rb").read()
                assert a == b, (command, name)
