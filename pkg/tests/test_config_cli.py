import json
import math

import pytest

from ramansim import cli
from ramansim import config as C
from ramansim.errors import ConfigError
from ramansim.experiments import read_scan_csv

FAST = ["--no-plots", "--set", "sim.calibrate=false", "--set", "sim.pump_scale=1.477", "--alpha", "1"]


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr()


def test_defaults_resolve():
    cfg = C.resolve()
    assert cfg == {**C.defaults()}
    assert cfg["pulse.n_samples"] == 1024 and cfg["pulse.dt"] == 0.01
    assert cfg["scan.phi_points"] == 17 and cfg["sim.alpha"] == 0.0


def test_flag_overrides_change_only_those_keys():
    args = cli.build_parser().parse_args(["scan", "--alpha", "7", "--phi-points", "17", "--phi-points", "9"])
    cfg = C.resolve(overrides=cli.overrides_from_args(args))
    changed = {k for k, v in cfg.items() if v != C.defaults()[k]}
    assert changed == {"sim.alpha", "scan.phi_points"}
    assert cfg["sim.alpha"] == 7.0 and cfg["scan.phi_points"] == 9


def test_bad_sample_count_names_key():
    with pytest.raises(ConfigError) as exc:
        C.resolve(overrides={"pulse.n_samples": "1000"})
    assert exc.value.key == "pulse.n_samples"
    assert "pulse.n_samples" in str(exc.value)


@pytest.mark.parametrize(
    "key,raw",
    [("sim.alpha", "abc"), ("scan.phi_points", "0"), ("sim.noise_sigma", "-1"), ("sim.suppress_q3", "maybe")],
)
def test_invalid_values_rejected(key, raw):
    with pytest.raises(ConfigError) as exc:
        C.parse_value(key, raw)
    assert exc.value.key == key


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as exc:
        C.resolve(overrides={"sim.alhpa": "1"})
    assert exc.value.key == "sim.alhpa"


def test_cross_key_check():
    with pytest.raises(ConfigError) as exc:
        C.resolve(overrides={"ga.population_size": "4", "ga.elite_count": "4"})
    assert exc.value.key == "ga.elite_count"


def test_file_then_flags_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\nsim.alpha = 3\nscan.n_trials = 50  # inline\n")
    cfg = C.resolve(f, {"sim.alpha": "7"})
    assert cfg["sim.alpha"] == 7.0 and cfg["scan.n_trials"] == 50
    bad = tmp_path / "bad.cfg"
    bad.write_text("sim.alpha 3\n")
    with pytest.raises(ConfigError):
        C.resolve(bad)


def test_format_config_round_trip(tmp_path):
    cfg = C.resolve(overrides={"sim.alpha": "7", "pulse.phase_offset": "0.3"})
    f = tmp_path / "c.txt"
    f.write_text(C.format_config(cfg))
    assert C.resolve(f) == cfg


@pytest.mark.parametrize("cmd", [[], ["pulse"], ["trial"], ["scan"], ["optimize"], ["validate"], ["replay"]])
def test_help_exits_zero(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(cmd + ["--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_config_error_exit_code(tmp_path, capsys):
    code, cap = run(["scan", "--out", str(tmp_path), "--set", "pulse.n_samples=1000"], capsys)
    assert code == 2
    assert "pulse.n_samples" in cap.err


def test_scan_small_run_deterministic(tmp_path, capsys):
    argv = ["scan", *FAST, "--n-trials", "1", "--phi-points", "2"]
    code, cap = run(argv + ["--out", str(tmp_path / "a")], capsys)
    assert code == 0
    assert "mean_asym" in cap.out
    text = (tmp_path / "a" / "scan.csv").read_text()
    assert text.splitlines()[0] == "phi,mean_asym,stderr,n_effective"
    assert len(text.splitlines()) == 3
    phases, mean, _, n_eff = read_scan_csv(tmp_path / "a" / "scan.csv")
    assert list(phases) == [0.0, math.pi] and list(n_eff) == [1, 1]
    run(argv + ["--out", str(tmp_path / "b")], capsys)
    assert (tmp_path / "b" / "scan.csv").read_text() == text
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["command"] == "scan" and manifest["seed"] == C.defaults()["run.seed"]
    assert manifest["config"]["scan.n_trials"] == 1
    assert {o["path"] for o in manifest["outputs"]} == {"scan.csv"}


def test_out_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("RAMAN_SIM_OUT", str(tmp_path / "env"))
    code, _ = run(["trial", *FAST], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "env" / "trial.json").read_text())
    assert doc["trial_index"] == 0 and doc["pump_scale"] == 1.477


def test_trial_snapshots(tmp_path, capsys):
    code, _ = run(["trial", *FAST, "--out", str(tmp_path), "--set", "trial.snapshots=0,128,255"], capsys)
    assert code == 0
    head = (tmp_path / "snapshots.csv").read_text().splitlines()[0]
    assert head.startswith("x,tau,")
    code, cap = run(["trial", *FAST, "--out", str(tmp_path), "--set", "trial.snapshots=999"], capsys)
    assert code == 2 and "trial.snapshots" in cap.err


def _pulse_lines(out):
    rows = dict(line.split(",", 1) for line in out.splitlines() if "," in line)
    lobes = [float(rows[k].split(",")[0]) for k in ("husimi_lower", "husimi_upper")]
    return lobes, float(rows["wigner_at_origin"])


def test_pulse_phase_pi(tmp_path, capsys):
    code, cap0 = run(["pulse", "--no-plots", "--out", str(tmp_path / "a")], capsys)
    assert code == 0
    code, cap1 = run(["pulse", "--no-plots", "--out", str(tmp_path / "b"), "--set", f"pulse.phase_offset={math.pi}"], capsys)
    assert code == 0
    lobes0, w0 = _pulse_lines(cap0.out)
    lobes1, w1 = _pulse_lines(cap1.out)
    for lobes in (lobes0, lobes1):
        assert abs(lobes[0] - lobes[1]) <= 0.05 * max(lobes)
    assert w0 > 0 > w1
    assert w1 == pytest.approx(-w0, rel=1e-6)
    for name in ("pulse_time.csv", "pulse_freq.csv", "wigner.csv", "wigner.json", "husimi.csv", "husimi.json"):
        assert (tmp_path / "b" / name).is_file()


def test_validate_passes(tmp_path, capsys):
    code, cap = run(["validate", "--no-plots", "--out", str(tmp_path)], capsys)
    assert code == 0, cap.out
    doc = json.loads((tmp_path / "validate.json").read_text())
    assert all(c["passed"] for c in doc)


def test_replay_identical_with_plots(tmp_path, capsys):
    argv = ["optimize", "--out", str(tmp_path), "--alpha", "1", "--set", "sim.calibrate=false",
            "--set", "sim.pump_scale=1.477", "--set", "ga.population_size=4", "--set", "ga.n_generations=2",
            "--set", "ga.trials_per_eval=2", "--set", "ga.elite_count=1"]
    code, _ = run(argv, capsys)
    assert code == 0
    assert (tmp_path / "ga_history.png").is_file()
    code, cap = run(["replay", str(tmp_path / "manifest.json")], capsys)
    assert code == 0 and "identical" in cap.out


def test_replay_detects_tampering(tmp_path, capsys):
    run(["trial", *FAST, "--out", str(tmp_path)], capsys)
    m = tmp_path / "manifest.json"
    doc = json.loads(m.read_text())
    doc["outputs"][0]["sha256"] = "0" * 64
    m.write_text(json.dumps(doc))
    code, cap = run(["replay", str(m)], capsys)
    assert code == 1 and "MISMATCH,trial.json" in cap.out


def test_replay_missing_manifest(tmp_path, capsys):
    code, _ = run(["replay", str(tmp_path / "nope.json")], capsys)
    assert code == 2
