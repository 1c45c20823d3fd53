"""Experiment harness: spec validation, builtin catalog, config files,
artifact determinism, and the lyapunov report."""
import json
import math

import numpy as np
import pytest

import semiwkb as sw
from semiwkb.errors import BandwidthError
from semiwkb.experiments import (
    Case,
    ExperimentSpec,
    OUTDIR_ENV,
    builtin_specs,
    get_builtin_spec,
    load_spec_file,
    read_table,
    resolve_outdir,
    run_experiment,
)

BUILTIN_NAMES = ["free-exactness", "integrable-exactness", "barrier-transmission",
                 "kho-fig2", "kho-slopes", "kho-lyapunov"]


def small_free_spec(name="free-small"):
    return ExperimentSpec(
        name=name, kind="exactness", model="free", hbar=0.05,
        times=(0.5, 1.0), grid=sw.GridSpec(-8.0, 16.0, 2048),
        methods=("extwkb", "thawed", "exact"),
        cases=(Case("flat", 0.0, (1.0, 0.0)),
               Case("tilted", 0.5, (1.0, 0.0))))


def test_spec_validation_errors():
    ok = small_free_spec()
    ok.validate()
    import dataclasses
    bad = [
        dataclasses.replace(ok, kind="sideways"),
        dataclasses.replace(ok, model="pendulum"),
        dataclasses.replace(ok, methods=("extwkb", "variational")),
        dataclasses.replace(ok, times=()),
        dataclasses.replace(ok, times=(2.0, 1.0)),
        dataclasses.replace(ok, cases=()),
        dataclasses.replace(ok, cases=(Case("a", 0.0, (0.0, 0.0)),
                                       Case("a", 1.0, (0.0, 0.0)))),
    ]
    for spec in bad:
        with pytest.raises(ValueError):
            spec.validate()


def test_builtin_catalog():
    specs = builtin_specs()
    assert [s.name for s in specs] == BUILTIN_NAMES
    for spec in specs:
        spec.validate()
    fig2 = get_builtin_spec("kho-fig2")
    assert fig2.model == "kho"
    assert fig2.hbar == pytest.approx(8e-4)
    assert fig2.times == (1.0, 2.0, 3.0, 4.0)
    with pytest.raises(KeyError, match="kho-fig2"):
        get_builtin_spec("kho-fig3")


def test_load_spec_file_round_trip(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("""\
[experiment]
name = demo
kind = exactness
model = quartic
hbar = 0.01
times = 0.5, 1.0
grid = -10, 14, 4096
methods = extwkb, exact
exact_start_substeps = 64

[model]
epsilon = 0.25

[case flat]
p0 = 1.0
q0 = 0.0

[case tilted]
p0 = 1.0
q0 = 0.0
theta_over_halfpi = 0.5
""")
    spec = load_spec_file(cfg)
    assert spec.name == "demo"
    assert spec.model == "quartic"
    assert spec.model_params == (("epsilon", 0.25),)
    assert spec.hbar == 0.01
    assert spec.times == (0.5, 1.0)
    assert spec.grid == sw.GridSpec(-10.0, 14.0, 4096)
    assert spec.methods == ("extwkb", "exact")
    assert spec.exact_start_substeps == 64
    labels = {c.label: c for c in spec.cases}
    assert labels["flat"].slope == 0.0
    assert labels["flat"].center == (1.0, 0.0)
    assert labels["tilted"].slope == pytest.approx(1.0)


def test_load_spec_file_rejections(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_spec_file(tmp_path / "absent.ini")
    bare = tmp_path / "bare.ini"
    bare.write_text("[model]\nepsilon = 0.1\n")
    with pytest.raises(ValueError, match="experiment"):
        load_spec_file(bare)


def test_resolve_outdir_precedence(tmp_path, monkeypatch):
    import dataclasses
    spec = small_free_spec()
    monkeypatch.delenv(OUTDIR_ENV, raising=False)
    assert resolve_outdir(spec, tmp_path / "x") == tmp_path / "x"
    monkeypatch.setenv(OUTDIR_ENV, str(tmp_path / "env"))
    assert resolve_outdir(spec) == tmp_path / "env" / "free-small"
    pinned = dataclasses.replace(spec, outdir=str(tmp_path / "pin"))
    assert resolve_outdir(pinned) == tmp_path / "pin"
    monkeypatch.delenv(OUTDIR_ENV)
    assert resolve_outdir(spec).parts[-2:] == ("semiwkb-out", "free-small")


def test_reruns_are_byte_identical(tmp_path):
    spec = small_free_spec()
    ra = run_experiment(spec, tmp_path / "a")
    rb = run_experiment(spec, tmp_path / "b")
    for name in ra["artifacts"]:
        assert (tmp_path / "a" / name).read_bytes() == \
               (tmp_path / "b" / name).read_bytes()
    ja = json.loads((tmp_path / "a" / "report.json").read_text())
    jb = json.loads((tmp_path / "b" / "report.json").read_text())
    ja.pop("runtimes")
    jb.pop("runtimes")
    assert ja == jb


def test_free_exactness_report_content(tmp_path):
    spec = small_free_spec()
    report = run_experiment(spec, tmp_path)
    assert report["artifacts"] == ["fidelity_series.csv",
                                   "pairwise_final_fidelity.csv"]
    res = report["results"]
    # the method is exact for momentum-only models
    assert res["min_fidelity"] > 1.0 - 1e-9
    assert res["pairwise_final_fidelity_min"] > 1.0 - 1e-9
    assert res["reference"]["flat"]["method"] == "momentum-multiplier"
    header, cols = read_table(tmp_path / "fidelity_series.csv")
    assert header[0] == "label"
    assert cols["label"] == ["flat", "flat", "tilted", "tilted"]
    assert isinstance(cols["fidelity_extwkb"], np.ndarray)
    assert np.all(cols["fidelity_extwkb"] > 1.0 - 1e-9)
    # the free Hamiltonian is quadratic, so the single-Gaussian method is
    # exact here as well
    assert np.all(cols["fidelity_thawed"] > 1.0 - 1e-9)


def test_failures_carry_the_stage_name(tmp_path):
    # a grid too coarse for the profile sampler fails in the extwkb stage
    spec = ExperimentSpec(
        name="coarse", kind="exactness", model="free", hbar=0.05,
        times=(0.5,), grid=sw.GridSpec(-8.0, 8.0, 256),
        cases=(Case("flat", 0.0, (0.0, 0.0)),))
    with pytest.raises(BandwidthError, match=r"\[stage extwkb"):
        run_experiment(spec, tmp_path)


def test_lyapunov_experiment(tmp_path):
    report = run_experiment(get_builtin_spec("kho-lyapunov"), tmp_path)
    res = report["results"]
    base = sw.load_baselines()["kicked_harmonic"]
    assert res["lyapunov_exponent"] == pytest.approx(
        base["lyapunov_exponent"], abs=1e-12)
    assert res["matches_baseline"] is True
    assert res["ehrenfest_time"] == pytest.approx(
        sw.ehrenfest_time(res["lyapunov_exponent"], 8e-4), rel=1e-12)
    lo, hi = res["tangent_eigenvalues"]
    assert hi == pytest.approx(math.exp(res["lyapunov_exponent"]), rel=1e-12)
    assert lo == pytest.approx(1.0 / hi, rel=1e-12)
    header, cols = read_table(tmp_path / "lyapunov_convergence.csv")
    assert list(cols["n"]) == list(range(1, 26))
    assert abs(cols["lambda_n"][-1] - res["lyapunov_exponent"]) < 0.05
