"""Tests for the config-driven command line runner."""

import json
import os

import numpy as np
import pytest

from cylreact import cli


def _write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _strip_clocks(obj):
    if isinstance(obj, dict):
        return {k: _strip_clocks(v) for k, v in obj.items()
                if k not in ("wall_clock", "wall_clock_total")}
    if isinstance(obj, list):
        return [_strip_clocks(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# config validation


def test_config_round_trip():
    raw = {"experiment": "Solve", "preset": "linear-y",
           "grid": {"nx": 17, "ny": 17}, "tolerances": {"newton": 1e-9},
           "output_dir": "out", "seed": 3}
    cfg = cli.ExperimentConfig.from_dict(raw)
    again = cli.ExperimentConfig.from_dict(cfg.to_dict())
    assert again == cfg
    d = cfg.to_dict()
    assert d["experiment"] == "Solve" and d["seed"] == 3
    assert d["grid"] == {"nx": 17, "ny": 17}


@pytest.mark.parametrize("raw", [
    [],                                              # not an object
    {"experiment": "Solve", "bogus": 1},             # unknown key
    {"experiment": "Frobnicate"},                    # unknown experiment
    {},                                              # missing experiment
    {"experiment": "Solve", "preset": "nope"},       # unknown preset
    {"experiment": "Solve", "domain": {"kind": "disk"}},
    {"experiment": "Solve",
     "domain": {"kind": "rectangle", "x_min": 0, "x_max": 1}},  # missing z
    {"experiment": "Solve", "grid": {"nx": 2}},      # nx too small
    {"experiment": "Solve", "grid": {"nx": 9.5}},    # nx not an int
    {"experiment": "Solve", "model": {"family": "nonsense"}},
    {"experiment": "Solve", "tolerances": {"newton": 0.0}},
    {"experiment": "Solve", "tolerances": {"newton": -1}},
    {"experiment": "Solve", "seed": -1},
    {"experiment": "Solve", "seed": "zero"},
    {"experiment": "Solve", "output_dir": ""},
])
def test_config_validation_rejects(raw):
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig.from_dict(raw)


def test_config_defaults():
    cfg = cli.ExperimentConfig.from_dict({"experiment": "VerifyAll"})
    assert cfg.preset is None
    assert cfg.output_dir == "cylreact-out"
    assert cfg.seed == 0
    assert cfg.domain == {} and cfg.grid == {}


# ---------------------------------------------------------------------------
# symbolic reactions


def test_lambdify_reaction_f_and_derivatives():
    cfg = cli.ExperimentConfig.from_dict(
        {"experiment": "Solve", "reaction": {"f": "-u - u**3"}})
    r = cli._lambdify_reaction(cfg)
    u = np.array([0.0, 1.0, 2.0])
    assert np.allclose(r.f(u), [0.0, -2.0, -10.0])
    assert np.allclose(r.f_prime(u), [-1.0, -4.0, -13.0])
    assert np.allclose(r.f_second(u), [0.0, -6.0, -12.0])
    assert r.g is None and r.g_u is None


def test_lambdify_reaction_constant_broadcasts():
    cfg = cli.ExperimentConfig.from_dict(
        {"experiment": "Solve", "reaction": {"f": "1"}})
    r = cli._lambdify_reaction(cfg)
    u = np.zeros((3, 4))
    out = r.f(u)
    assert out.shape == u.shape
    assert np.all(out == 1.0)
    assert r.f_prime(u).shape == u.shape


def test_lambdify_reaction_bulk_source_signature():
    cfg = cli.ExperimentConfig.from_dict(
        {"experiment": "Solve", "reaction": {"f": "-u", "g": "y*u"}})
    r = cli._lambdify_reaction(cfg)
    y = np.array([0.0, 1.0, 2.0])
    u = np.array([1.0, 1.0, 3.0])
    assert np.allclose(r.g(y, u), [0.0, 1.0, 6.0])
    assert np.allclose(r.g_u(y, u), y)


def test_lambdify_reaction_rejects_stray_symbols():
    for reaction in ({"f": "u + x"}, {"f": "-u", "g": "z*u"},
                     {"f": "spam("}):
        cfg = cli.ExperimentConfig.from_dict(
            {"experiment": "Solve", "reaction": reaction})
        with pytest.raises(cli.ConfigError):
            cli._lambdify_reaction(cfg)


def test_lambdify_reaction_preset_fallback():
    cfg = cli.ExperimentConfig.from_dict(
        {"experiment": "Solve", "preset": "linear-y"})
    r = cli._lambdify_reaction(cfg)
    assert float(r.f(np.array(0.0))) == -1.0


# ---------------------------------------------------------------------------
# exit codes through main()


def test_run_preset_solve_exits_zero(tmp_path, capsys):
    path = _write_config(tmp_path, "solve.json", {
        "experiment": "Solve", "preset": "linear-y",
        "grid": {"nx": 17, "ny": 17},
        "output_dir": str(tmp_path / "out")})
    assert cli.main(["run", path]) == 0
    out = capsys.readouterr().out
    assert "newton-solve" in out
    assert "overall pass" in out
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["overall"] == "pass"
    assert report["records"][0]["status"] == "pass"
    assert (tmp_path / "out" / "solution_field.csv").exists()


def test_run_incompatible_flux_exits_one(tmp_path, capsys):
    # constant inflow through the bottom with a zero-flux top has no
    # discrete solution on a truncation: the solve must report failure
    path = _write_config(tmp_path, "bad.json", {
        "experiment": "Solve",
        "domain": {"kind": "interval", "x_min": 0.0, "x_max": 3.14159},
        "grid": {"nx": 17, "ny": 17, "y_max": 4.0},
        "reaction": {"f": "1"},
        "output_dir": str(tmp_path / "out1")})
    assert cli.main(["run", path]) == 1
    report = json.loads((tmp_path / "out1" / "report.json").read_text())
    assert report["overall"] == "fail"


def test_run_missing_file_exits_two(tmp_path):
    assert cli.main(["run", str(tmp_path / "absent.json")]) == 2


def test_run_unparsable_json_exits_two(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert cli.main(["run", str(path)]) == 2


def test_run_invalid_config_exits_two(tmp_path):
    path = _write_config(tmp_path, "bad.json",
                         {"experiment": "Solve", "bogus": True})
    assert cli.main(["run", str(path)]) == 2


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# experiment runners through the CLI


def test_stability_runner_matches_expected_label(tmp_path):
    path = _write_config(tmp_path, "stab.json", {
        "experiment": "Stability", "preset": "decay-cos-unstable",
        "grid": {"nx": 33, "ny": 33},
        "output_dir": str(tmp_path / "out")})
    assert cli.main(["run", path]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    rec = report["records"][0]
    assert rec["details"]["classification"] == "Unstable"
    assert rec["measured"] < 0.0
    assert (tmp_path / "out" / "ground_state.csv").exists()


def test_poincare_runner_passes_for_stable_preset(tmp_path):
    path = _write_config(tmp_path, "poi.json", {
        "experiment": "Poincare", "preset": "linear-y",
        "grid": {"nx": 17, "ny": 17},
        "output_dir": str(tmp_path / "out")})
    assert cli.main(["run", path]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    rec = report["records"][0]
    assert rec["anchor"] == "Theorem TH:POI"
    assert len(rec["details"]["cases"]) == 4  # the full test-field battery


def test_spectral_runner_constancy(tmp_path):
    path = _write_config(tmp_path, "spec.json", {
        "experiment": "Spectral", "preset": "sneumann-constancy",
        "output_dir": str(tmp_path / "out")})
    assert cli.main(["run", path]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["overall"] == "pass"


def test_counterexample_runner_writes_profile(tmp_path):
    path = _write_config(tmp_path, "ce.json", {
        "experiment": "Counterexample",
        "output_dir": str(tmp_path / "out")})
    assert cli.main(["run", path]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    rec = report["records"][0]
    assert rec["anchor"] == "Example EXAMPLE"
    assert rec["details"]["delta1"] == pytest.approx(0.1225988, rel=1e-5)
    profile = np.loadtxt(tmp_path / "out" / "counterexample_profile.csv",
                         delimiter=",")
    assert profile.shape[1] == 2
    assert profile.shape[0] > 1000


# ---------------------------------------------------------------------------
# report invariants


def test_every_record_carries_an_anchor(tmp_path):
    path = _write_config(tmp_path, "solve.json", {
        "experiment": "Solve", "preset": "one-dim-family",
        "output_dir": str(tmp_path / "out")})
    assert cli.main(["run", path]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    for rec in report["records"]:
        assert rec["anchor"]  # nonempty anchor or the literal "plumbing"


def test_reports_reproducible_modulo_wall_clock(tmp_path, monkeypatch):
    payload = {"experiment": "Solve", "preset": "linear-y",
               "grid": {"nx": 17, "ny": 17}}
    path = _write_config(tmp_path, "solve.json", payload)
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        monkeypatch.setenv("CYLREACT_OUT", str(out))
        assert cli.main(["run", path]) == 0
        outs.append(out)
    ra = json.loads((outs[0] / "report.json").read_text())
    rb = json.loads((outs[1] / "report.json").read_text())
    assert _strip_clocks(ra) == _strip_clocks(rb)
    assert (outs[0] / "solution_field.csv").read_bytes() == \
        (outs[1] / "solution_field.csv").read_bytes()


def test_cylreact_out_env_override(tmp_path, monkeypatch):
    target = tmp_path / "redirected"
    monkeypatch.setenv("CYLREACT_OUT", str(target))
    path = _write_config(tmp_path, "solve.json", {
        "experiment": "Solve", "preset": "linear-y",
        "grid": {"nx": 17, "ny": 17},
        "output_dir": str(tmp_path / "ignored")})
    assert cli.main(["run", path]) == 0
    assert (target / "report.json").exists()
    assert not (tmp_path / "ignored").exists()


def test_report_json_sorted_and_newline_terminated(tmp_path):
    path = _write_config(tmp_path, "solve.json", {
        "experiment": "Solve", "preset": "linear-y",
        "grid": {"nx": 17, "ny": 17},
        "output_dir": str(tmp_path / "out")})
    assert cli.main(["run", path]) == 0
    text = (tmp_path / "out" / "report.json").read_text()
    assert text.endswith("\n")
    parsed = json.loads(text)
    assert list(parsed) == sorted(parsed)
    assert set(parsed) == {"experiment", "preset", "config", "records",
                           "overall", "wall_clock_total"}


# ---------------------------------------------------------------------------
# preset listing


def test_list_presets_output(capsys):
    assert cli.main(["list-presets"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().split("\n")
    assert len(lines) == 7
    assert lines[0].startswith("linear-y")
    assert "[§1.4]" in lines[0]
    assert any("one-dim-family" in ln and "[Eq. O76:98]" in ln
               for ln in lines)
    assert any("sneumann-constancy" in ln
               and "[Theorem thm: s-Neumann 1]" in ln for ln in lines)
    assert any("[plumbing]" in ln for ln in lines)
    # fixed-width name column
    for ln in lines:
        assert ln.index("[") == 21
