import json

import pytest
from hypothesis import given, settings, strategies as st

from qdiff import cli
from qdiff.errors import ConfigurationError
from qdiff.harness import (PRESETS, ExperimentConfig, ExperimentReport, apply_overrides,
                           emit_report, preset, resolve_out_dir, run_experiment, validate)


def test_presets_validate():
    for name in PRESETS:
        assert validate(preset(name)) == [], name


def test_round_trip_presets():
    for name in PRESETS:
        cfg = preset(name)
        again = ExperimentConfig.from_dict(json.loads(cfg.dumps()))
        assert again.to_dict() == cfg.to_dict()


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 31), T=st.floats(0.01, 10.0), name=st.text(max_size=12),
       steps=st.integers(0, 10 ** 7))
def test_round_trip_property(seed, T, name, steps):
    cfg = ExperimentConfig(kind="stationary-check", seed=seed, name=name,
                           thermal={"kind": "constant", "T": T}, sim={"steps": steps})
    assert ExperimentConfig.from_dict(json.loads(cfg.dumps())) == cfg


def test_overrides():
    d = apply_overrides({"sim": {"dt": 1e-3}}, ["sim.dt=0.01", "thermal.kind=logarithmic",
                                                "quantum.gamma0=[1,2]"])
    assert d["sim"]["dt"] == 0.01 and d["thermal"]["kind"] == "logarithmic"
    assert d["quantum"]["gamma0"] == [1, 2]
    with pytest.raises(ConfigurationError):
        apply_overrides({}, ["nonsense"])


def test_validation_lists_every_key():
    cfg = ExperimentConfig.from_dict({
        "kind": "zt-track", "potential": {"name": "nope"},
        "thermal": {"kind": "logarithmic", "T0": -1}, "quantum": {"kind": "sideways"},
        "sim": {"bogus": 1}, "tolerances": {"tv": "small"},
    })
    errs = "\n".join(validate(cfg))
    for key in ("potential", "thermal", "quantum", "sim.bogus", "tolerances.tv", "targets"):
        assert key in errs
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"kind": "gap-sweep", "extra": 1})
    with pytest.raises(ConfigurationError):
        run_experiment(cfg)


def test_unwritable_output(tmp_path, monkeypatch):
    monkeypatch.delenv("QDIFF_OUT", raising=False)
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = preset("aux-properties")
    cfg.output = {"dir": str(blocker / "sub")}
    assert any("output.dir" in e for e in validate(cfg))


def test_out_dir_precedence(monkeypatch, tmp_path):
    cfg = preset("aux-properties")
    monkeypatch.delenv("QDIFF_OUT", raising=False)
    assert str(resolve_out_dir(cfg)).endswith("aux-properties")
    monkeypatch.setenv("QDIFF_OUT", str(tmp_path / "env"))
    assert resolve_out_dir(cfg) == tmp_path / "env" / "aux-properties"
    assert resolve_out_dir(cfg, str(tmp_path / "cli")) == tmp_path / "cli"


def test_empty_report(tmp_path):
    rep = ExperimentReport(config={"kind": "gap-sweep"})
    (path,) = emit_report(rep, tmp_path, "json")
    data = json.loads(path.read_text())
    assert data["metrics"] == [] and data["passed"] is True


def test_reports_are_byte_identical(tmp_path):
    cfg = preset("anneal-quantum")
    cfg = ExperimentConfig.from_dict(apply_overrides(cfg.to_dict(), ["sim.steps=2000",
                                                                     "sim.n_traj=50"]))
    blobs = []
    for k in range(2):
        out = tmp_path / str(k)
        rep = run_experiment(cfg, out)
        emit_report(rep, out, "both")
        blobs.append([(out / f).read_bytes() for f in ("report.json", "summary.csv",
                                                       "ensemble.json")])
    assert blobs[0] == blobs[1]


def test_gap_sweep_csv(tmp_path):
    rep = run_experiment(preset("gap-sweep-double-well"), tmp_path)
    emit_report(rep, tmp_path, "csv-summary")
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert {"T", "gamma", "gap", "bound"} <= set(header)
    assert len(lines) == 1 + 8


def test_every_metric_has_named_tolerance(tmp_path):
    rep = run_experiment(preset("zt-track"), tmp_path)
    for m in rep.metrics:
        assert m["tolerance_key"] in rep.config["tolerances"]


def test_missing_tolerance_is_an_error(tmp_path):
    cfg = preset("aux-properties")
    del cfg.tolerances["sign_violations"]
    with pytest.raises(ConfigurationError):
        run_experiment(cfg, tmp_path)


def test_hopfield_preset(tmp_path):
    cfg = preset("hopfield-descent")
    rep = run_experiment(cfg, tmp_path)
    assert rep.passed and len(rep.tables["hopfield"]) == 5


def test_aux_benchmark_small(tmp_path):
    cfg = ExperimentConfig.from_dict(apply_overrides(preset("aux-benchmark").to_dict(),
                                                     ["sim.steps=2000", "sim.n_traj=10"]))
    rep = run_experiment(cfg, tmp_path)
    rows = rep.tables["aux_benchmark"]
    assert [r["aux"] for r in rows] == ["none", "homotopy", "contraction", "hessian_quadratic",
                                        "kinetic_1d", "kinetic_nd"]
    assert rep.passed


def test_stationary_check_small(tmp_path):
    cfg = ExperimentConfig.from_dict(apply_overrides(
        preset("stationary").to_dict(),
        ["sim.steps=20000", "sim.burn_in=1000", "tolerances.tv=1.0", "sim.cross_mode=\"x_space\"",
         "tolerances.tv_cross=1.0", "sim.write_trajectory=true"]))
    rep = run_experiment(cfg, tmp_path)
    names = [m["name"] for m in rep.metrics]
    assert names == ["tv_vs_gibbs", "tv_between_modes"]
    assert (tmp_path / "histogram.csv").exists() and (tmp_path / "trajectory_u_space.csv").exists()


def test_cli(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("QDIFF_OUT", raising=False)
    assert cli.main(["list-presets"]) == 0
    assert "stationary" in capsys.readouterr().out
    out = tmp_path / "o"
    assert cli.main(["preset", "aux-properties", "--out", str(out), "--format", "both"]) == 0
    assert (out / "report.json").exists() and (out / "summary.csv").exists()
    assert cli.main(["preset", "spectral-oracle", "--out", str(tmp_path / "s")]) == 1
    cfg = tmp_path / "c.json"
    cfg.write_text(preset("aux-properties").dumps())
    assert cli.main(["validate", str(cfg)]) == 0
    assert cli.main(["validate", str(cfg), "--set", "potential.name=bogus"]) == 1
    monkeypatch.setenv("QDIFF_OUT", str(tmp_path / "env"))
    assert cli.main(["run", str(cfg), "--set", "tolerances.min_contact_points=1000"]) == 1
    assert (tmp_path / "env" / "aux-properties" / "report.json").exists()
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2
