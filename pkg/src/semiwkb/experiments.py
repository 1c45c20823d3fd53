"""Named batch experiments with deterministic CSV/JSON artifacts.

Each experiment is an ExperimentSpec naming a model, an initial family
(slope cases around a common Gaussian envelope), times, a grid, and the
propagation methods to compare.  run_experiment writes plot-ready CSV
files plus a report.json and returns the report as a dict.  Reruns of
the same spec are byte-identical except for the report's "runtimes"
entry, which records wall-clock seconds and is documented volatile.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from collections import namedtuple
from configparser import ConfigParser
from contextlib import contextmanager
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import ehrenfest_time, flow, lyapunov_exponent, period_tangent
from .grids import GridSpec, WaveFunction, band_mass
from .hamiltonians import (FreeParticle, IntegrableMomentum, KickedHarmonic,
                           ParabolicBarrier, PhasePoint, QuadraticPhase)
from .metaplectic import (backward_wkb_test, profile_for_slope,
                          propagate_extended_wkb, propagate_thawed_gaussian)
from .reference import exact_state, expectation_p, expectation_q, fidelity

__all__ = [
    "Case", "ExperimentSpec", "METHODS", "MODEL_NAMES",
    "build_model", "initial_coherent_state", "load_baselines",
    "write_table", "read_table",
    "run_experiment", "builtin_specs", "get_builtin_spec", "load_spec_file",
    "resolve_outdir", "OUTDIR_ENV",
]

OUTDIR_ENV = "SEMIWKB_OUTDIR"
METHODS = ("extwkb", "thawed", "exact")
MODEL_NAMES = ("free", "quartic", "barrier", "kho")

# label, manifold slope at the center, center as (p, q)
Case = namedtuple("Case", "label slope center")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    kind: str
    model: str
    model_params: tuple = ()
    hbar: float = 0.05
    times: tuple = ()
    grid: GridSpec = field(default_factory=lambda: GridSpec(-8.0, 8.0, 8192))
    methods: tuple = ("extwkb", "exact")
    cases: tuple = (Case("center", 0.0, (0.0, 0.0)),)
    outdir: str | None = None
    # starting rung for the reference ladder; None lets the ladder pick
    exact_start_substeps: int | None = None

    def validate(self) -> None:
        if self.kind not in _ANALYSES:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.model not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.model!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unimplemented methods {bad}")
        if not self.times:
            raise ValueError("spec needs at least one time")
        if list(self.times) != sorted(self.times):
            raise ValueError("times must be sorted ascending")
        if not self.cases:
            raise ValueError("spec needs at least one case")
        labels = [c.label for c in self.cases]
        if len(set(labels)) != len(labels):
            raise ValueError("case labels must be unique")

    def params(self) -> dict:
        return dict(self.model_params)


def build_model(spec: ExperimentSpec):
    p = spec.params()
    if spec.model == "free":
        return FreeParticle()
    if spec.model == "quartic":
        eps = p.get("epsilon", 0.1)
        return IntegrableMomentum(
            lambda xi: 0.5 * xi ** 2 + eps * xi ** 4,
            lambda xi: xi + 4.0 * eps * xi ** 3,
            lambda xi: 1.0 + 12.0 * eps * xi ** 2,
        )
    if spec.model == "barrier":
        return ParabolicBarrier(p.get("v0", 1.0))
    if spec.model == "kho":
        return KickedHarmonic(p.get("k", 2.0))
    raise ValueError(f"unknown model {spec.model!r}")


def initial_coherent_state(grid: GridSpec, hbar: float, center) -> WaveFunction:
    """Plain Gaussian wave packet at a phase-space point (p, q).

    This is the state every slope case represents: pairing the quadratic
    phase of slope alpha with profile_for_slope(alpha) cancels the chirp,
    so all methods start from this one function.
    """
    p0, q0 = center
    x = grid.x
    vals = (np.pi * hbar) ** -0.25 * np.exp(
        1j * p0 * (x - q0) / hbar - (x - q0) ** 2 / (2.0 * hbar))
    return WaveFunction(grid, vals, hbar)


def load_baselines() -> dict:
    """Checked-in regression values frozen from the first converged run."""
    text = resources.files("semiwkb").joinpath(
        "data/regression_baselines.json").read_text(encoding="utf-8")
    return json.loads(text)


def resolve_outdir(spec: ExperimentSpec, outdir=None) -> Path:
    if outdir is not None:
        return Path(outdir)
    if spec.outdir is not None:
        return Path(spec.outdir)
    env = os.environ.get(OUTDIR_ENV)
    root = Path(env) if env else Path("semiwkb-out")
    return root / spec.name


def write_table(path, header, rows) -> None:
    """CSV with \\n line endings and floats at full round-trip precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def read_table(path):
    """Inverse of write_table: (header, dict column -> float array or str list)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        raw = list(r)
    cols = {}
    for j, name in enumerate(header):
        vals = [row[j] for row in raw]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = vals
    return header, cols


def _cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


@contextmanager
def _stage(name):
    # failures surface with the experiment stage prepended, same type
    try:
        yield
    except Exception as exc:
        first = str(exc.args[0]) if exc.args else exc.__class__.__name__
        exc.args = (f"[stage {name}] {first}",) + tuple(exc.args[1:])
        raise


def _spec_dict(spec: ExperimentSpec) -> dict:
    return {
        "name": spec.name,
        "kind": spec.kind,
        "model": spec.model,
        "model_params": {k: v for k, v in spec.model_params},
        "hbar": spec.hbar,
        "times": list(spec.times),
        "grid": [spec.grid.x_min, spec.grid.x_max, spec.grid.n_points],
        "methods": list(spec.methods),
        "cases": [{"label": c.label, "slope": c.slope,
                   "center": list(c.center)} for c in spec.cases],
        "exact_start_substeps": spec.exact_start_substeps,
    }


def _ehrenfest_diagnostic(model, center, t: float, hbar: float) -> float:
    fr = flow(model, PhasePoint(*center), t)
    return math.sqrt(hbar) * float(np.linalg.norm(fr.tangent, 2))


def _phase_derivative(u, vals, floor: float = 0.1):
    """d(arg)/du where the amplitude clears floor*peak, NaN elsewhere.

    The phase is unwrapped across the contiguous span between the first
    and last point above the floor; outside it the phase is noise.
    """
    amp = np.abs(vals)
    out = np.full(u.shape, math.nan)
    mask = amp >= floor * float(amp.max())
    idx = np.nonzero(mask)[0]
    if idx.size < 3:
        return out
    i0, i1 = int(idx[0]), int(idx[-1])
    seg = np.unwrap(np.angle(vals[i0:i1 + 1]))
    out[i0:i1 + 1] = np.gradient(seg, u[i0:i1 + 1])
    out[~mask] = math.nan
    return out


def _exact_by_center(spec, model, record):
    """One reference ladder per distinct case center, sampled at spec.times."""
    states = {}
    for case in spec.cases:
        key = case.center
        if key in states:
            continue
        psi0 = initial_coherent_state(spec.grid, spec.hbar, key)
        t0 = time.perf_counter()
        kwargs = {}
        if spec.exact_start_substeps is not None:
            kwargs["substeps"] = spec.exact_start_substeps
        res = exact_state(model, psi0, spec.times[-1],
                          sample_times=spec.times, **kwargs)
        record[f"exact@{case.label}"] = time.perf_counter() - t0
        states[key] = res
    return states


# ---------------------------------------------------------------------------
# analysis routines, one per experiment kind

def _run_exactness(spec, model, outdir, record):
    with _stage("reference"):
        exact = _exact_by_center(spec, model, record)

    rows = []
    case_reports = []
    finals = {}
    for case in spec.cases:
        ref = exact[case.center]
        phase0 = QuadraticPhase(case.center[0], case.center[1], case.slope)
        profile = profile_for_slope(case.slope)
        per_time = []
        for t in spec.times:
            e = ref.samples[float(t)]
            with _stage(f"extwkb {case.label} t={t:g}"):
                r = propagate_extended_wkb(model, phase0, profile, spec.hbar,
                                           t, spec.grid)
            fid = fidelity(r.state, e)
            diff = r.state.values - e.values
            l2 = math.sqrt(float(np.sum(np.abs(diff) ** 2) * spec.grid.dx))
            fid_thawed = math.nan
            if "thawed" in spec.methods:
                with _stage(f"thawed {case.label} t={t:g}"):
                    tg = propagate_thawed_gaussian(
                        model, PhasePoint(*case.center), 1j, spec.hbar, t,
                        spec.grid)
                fid_thawed = fidelity(tg.state, e)
            diag = _ehrenfest_diagnostic(model, case.center, t, spec.hbar)
            md = r.metadata
            rows.append([case.label, case.slope, t, fid, fid_thawed, l2,
                         md["caustic_margin"], md["non_contraction_certificate"],
                         md["c_t"], diag])
            per_time.append({
                "t": t, "fidelity": fid,
                "thawed_fidelity": None if math.isnan(fid_thawed) else fid_thawed,
                "l2_distance": l2,
                "caustic_margin": md["caustic_margin"],
                "non_contraction_certificate": md["non_contraction_certificate"],
                "c_t": md["c_t"],
                "window": list(md["window"]),
                "remainder_indicator": md["remainder_indicator"],
                "ehrenfest_diagnostic": diag,
            })
            if t == spec.times[-1]:
                finals[case.label] = r.state
        case_reports.append({"label": case.label, "slope": case.slope,
                             "center": list(case.center),
                             "per_time": per_time})
    write_table(outdir / "fidelity_series.csv",
                ["label", "slope", "t", "fidelity_extwkb", "fidelity_thawed",
                 "l2_distance", "caustic_margin", "non_contraction_certificate",
                 "c_t", "ehrenfest_diagnostic"], rows)

    # manifold independence: the same physical state propagated over
    # different slope representations must land on the same final state
    pair_rows = []
    pair_min = 1.0
    labels = [c.label for c in spec.cases]
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            f = fidelity(finals[a], finals[b])
            pair_rows.append([a, b, f])
            pair_min = min(pair_min, f)
    if pair_rows:
        write_table(outdir / "pairwise_final_fidelity.csv",
                    ["label_a", "label_b", "fidelity"], pair_rows)

    min_fid = min(pt["fidelity"] for cr in case_reports for pt in cr["per_time"])
    return {
        "cases": case_reports,
        "min_fidelity": min_fid,
        "pairwise_final_fidelity_min": pair_min if pair_rows else None,
        "reference": {case.label: {
            "substeps": exact[case.center].substeps,
            "ladder_delta": exact[case.center].ladder_delta,
            "method": exact[case.center].diagnostics.get("method"),
        } for case in spec.cases},
    }


def _run_barrier_sweep(spec, model, outdir, record):
    lam = model.lam
    half_band = 3.0 * math.sqrt(spec.hbar)
    rows = []
    case_reports = []
    band_mass_critical = None
    for case in spec.cases:
        p0, q0 = case.center
        offset = p0 + lam * q0
        psi0 = initial_coherent_state(spec.grid, spec.hbar, case.center)
        t0 = time.perf_counter()
        with _stage(f"reference {case.label}"):
            kwargs = {}
            if spec.exact_start_substeps is not None:
                kwargs["substeps"] = spec.exact_start_substeps
            res = exact_state(model, psi0, spec.times[-1],
                              sample_times=spec.times[:-1], **kwargs)
        record[f"exact@{case.label}"] = time.perf_counter() - t0
        series = [(float(t), res.samples[float(t)]) for t in spec.times[:-1]]
        series.append((float(spec.times[-1]), res.state))
        q_series = []
        for t, state in series:
            q_series.append((t, expectation_q(state), expectation_p(state)))
            rows.append([case.label, t, q_series[-1][1], q_series[-1][2]])
        final_q = q_series[-1][1]
        entry = {
            "label": case.label, "center": list(case.center),
            "offset": offset,
            "q_series": [[t, q] for t, q, _ in q_series],
            "final_q": final_q, "final_p": q_series[-1][2],
            "substeps": res.substeps, "ladder_delta": res.ladder_delta,
            "ehrenfest_diagnostic": _ehrenfest_diagnostic(
                model, case.center, spec.times[-1], spec.hbar),
        }
        if offset != 0.0:
            entry["sign_match"] = bool(final_q * offset > 0.0)
        else:
            with _stage(f"band mass {case.label}"):
                band_mass_critical = band_mass(res.state, lam, half_band)
            entry["band_mass"] = band_mass_critical
        case_reports.append(entry)
    write_table(outdir / "expectation_series.csv",
                ["label", "t", "mean_q", "mean_p"], rows)
    return {
        "lambda": lam,
        "cases": case_reports,
        "band_halfwidth": half_band,
        "critical_band_mass": band_mass_critical,
        "caustic_margins": None,  # no transport leg in this experiment
        "non_contraction_certificate": None,
    }


def _run_backward_profiles(spec, model, outdir, record):
    base = load_baselines().get("kicked_harmonic", {})
    case = spec.cases[0]
    phase0 = QuadraticPhase(case.center[0], case.center[1], case.slope)
    profile = profile_for_slope(case.slope)
    psi0 = initial_coherent_state(spec.grid, spec.hbar, case.center)

    t0 = time.perf_counter()
    with _stage("reference"):
        kwargs = {}
        if spec.exact_start_substeps is not None:
            kwargs["substeps"] = spec.exact_start_substeps
        ref = exact_state(model, psi0, spec.times[-1], sample_times=spec.times,
                          **kwargs)
    record["exact"] = time.perf_counter() - t0

    fid_rows = []
    per_time = []
    for t in spec.times:
        e = ref.samples[float(t)]
        with _stage(f"backward t={t:g}"):
            back = backward_wkb_test(model, phase0, profile, spec.hbar, t,
                                     spec.grid, e)
        dphi_exact = _phase_derivative(back.u, back.exact_profile)
        dphi_meta = _phase_derivative(back.u, back.metaplectic_profile)
        write_table(outdir / f"backward_profile_t{t:g}.csv",
                    ["u", "exact_abs", "exact_phase_derivative",
                     "metaplectic_abs", "metaplectic_phase_derivative"],
                    zip(back.u, np.abs(back.exact_profile), dphi_exact,
                        np.abs(back.metaplectic_profile), dphi_meta))

        with _stage(f"extwkb t={t:g}"):
            fwd = propagate_extended_wkb(model, phase0, profile, spec.hbar,
                                         t, spec.grid)
        fid = fidelity(fwd.state, e)
        diff = fwd.state.values - e.values
        peak = float(np.abs(e.values).max())
        mask = np.abs(e.values) > 0.1 * peak
        pointwise = float(np.abs(diff[mask]).max() / peak) if mask.any() else 0.0
        fid_thawed = math.nan
        if "thawed" in spec.methods:
            with _stage(f"thawed t={t:g}"):
                tg = propagate_thawed_gaussian(model, PhasePoint(*case.center),
                                               1j, spec.hbar, t, spec.grid)
            fid_thawed = fidelity(tg.state, e)

        key = str(float(t))
        l2_bound = base.get("backward_l2_bound", {}).get(key)
        pw_bound = base.get("pointwise_peak_bound", {}).get(key)
        md = back.metadata
        fid_rows.append([t, fid, fid_thawed, back.l2_distance, pointwise,
                         md["c_t"], md["caustic_margin"]])
        per_time.append({
            "t": t,
            "fidelity": fid,
            "thawed_fidelity": None if math.isnan(fid_thawed) else fid_thawed,
            "backward_l2": back.l2_distance,
            "backward_l2_bound": l2_bound,
            "backward_l2_ok": None if l2_bound is None
            else bool(back.l2_distance <= l2_bound),
            "pointwise_peak": pointwise,
            "pointwise_peak_bound": pw_bound,
            "pointwise_peak_ok": None if pw_bound is None
            else bool(pointwise <= pw_bound),
            "c_t": md["c_t"],
            "window": list(md["window"]),
            "caustic_margin": md["caustic_margin"],
            "non_contraction_certificate": md["non_contraction_certificate"],
            "ehrenfest_diagnostic": _ehrenfest_diagnostic(
                model, case.center, t, spec.hbar),
        })
    write_table(outdir / "fidelity_series.csv",
                ["t", "fidelity_extwkb", "fidelity_thawed", "backward_l2",
                 "pointwise_peak", "c_t", "caustic_margin"], fid_rows)

    floor = base.get("forward_fidelity_floor")
    final = per_time[-1]
    return {
        "per_time": per_time,
        "fidelity_floor": floor,
        "final_fidelity_ok": None if floor is None
        else bool(final["fidelity"] >= floor),
        "final_beats_thawed": None if final["thawed_fidelity"] is None
        else bool(final["fidelity"] > final["thawed_fidelity"]),
        "reference": {"substeps": ref.substeps,
                      "ladder_delta": ref.ladder_delta},
    }


def _run_slope_sweep(spec, model, outdir, record):
    base = load_baselines().get("kicked_harmonic", {})
    t_final = spec.times[-1]
    reference_case = [c for c in spec.cases if c.slope == 0.0]
    if not reference_case:
        raise ValueError("slope sweep needs a slope-zero reference case")

    with _stage("reference"):
        exact = _exact_by_center(spec, model, record)

    fids = {}
    meta = {}
    for case in spec.cases:
        phase0 = QuadraticPhase(case.center[0], case.center[1], case.slope)
        with _stage(f"extwkb {case.label}"):
            r = propagate_extended_wkb(model, phase0,
                                       profile_for_slope(case.slope),
                                       spec.hbar, t_final, spec.grid)
        fids[case.label] = fidelity(r.state,
                                    exact[case.center].samples[float(t_final)])
        meta[case.label] = r.metadata

    fid0 = fids[reference_case[0].label]
    rows = []
    per_case = []
    for case in spec.cases:
        degradation = fid0 - fids[case.label]
        md = meta[case.label]
        rows.append([case.label, case.slope, fids[case.label], degradation,
                     md["window"][0], md["window"][1], md["caustic_margin"]])
        per_case.append({
            "label": case.label, "slope": case.slope,
            "fidelity": fids[case.label], "degradation": degradation,
            "window": list(md["window"]),
            "caustic_margin": md["caustic_margin"],
            "non_contraction_certificate": md["non_contraction_certificate"],
        })
    write_table(outdir / "slope_fidelity.csv",
                ["label", "slope", "fidelity", "degradation",
                 "window_lo", "window_hi", "caustic_margin"], rows)

    worst = max(p["degradation"] for p in per_case)
    floor = base.get("slope_fidelity_floor")
    reg_bound = base.get("slope_degradation_bound")
    return {
        "t": t_final,
        "per_case": per_case,
        "reference_fidelity": fid0,
        "worst_degradation": worst,
        "degradation_bound": 0.01,
        "degradation_ok": bool(worst < 0.01),
        "regression_degradation_bound": reg_bound,
        "regression_degradation_ok": None if reg_bound is None
        else bool(worst < reg_bound),
        "fidelity_floor": floor,
        "fidelity_floor_ok": None if floor is None
        else bool(min(fids.values()) >= floor),
    }


def _run_lyapunov(spec, model, outdir, record):
    base = load_baselines().get("kicked_harmonic", {})
    period = spec.times[-1]
    origin = PhasePoint(0.0, 0.0)
    with _stage("tangent map"):
        m = period_tangent(model, origin, period)
        lam = lyapunov_exponent(model, origin, period)
    te = ehrenfest_time(lam, spec.hbar)

    # convergence of the finite-n estimate; renormalize to avoid overflow
    v = np.array([1.0, 0.0])
    acc = 0.0
    rows = []
    for n in range(1, 26):
        v = m @ v
        growth = float(np.linalg.norm(v))
        acc += math.log(growth)
        v /= growth
        rows.append([n, acc / (n * period)])
    write_table(outdir / "lyapunov_convergence.csv", ["n", "lambda_n"], rows)

    base_lam = base.get("lyapunov_exponent")
    tol = base.get("lyapunov_tolerance", 1e-9)
    return {
        "lyapunov_exponent": lam,
        "ehrenfest_time": te,
        "hbar": spec.hbar,
        "period": period,
        "tangent_eigenvalues": sorted(
            float(abs(e)) for e in np.linalg.eigvals(m)),
        "matches_baseline": None if base_lam is None
        else bool(abs(lam - base_lam) < tol),
        "baseline_lyapunov": base_lam,
    }


_ANALYSES = {
    "exactness": _run_exactness,
    "barrier-sweep": _run_barrier_sweep,
    "backward-profiles": _run_backward_profiles,
    "slope-sweep": _run_slope_sweep,
    "lyapunov": _run_lyapunov,
}


def run_experiment(spec: ExperimentSpec, outdir=None) -> dict:
    """Run one named experiment; write CSV artifacts and report.json.

    Outputs are deterministic for a fixed spec (fixed evaluation order,
    no timestamps in data files); the report's "runtimes" values are
    wall-clock and vary between runs.
    """
    spec.validate()
    out = resolve_outdir(spec, outdir)
    out.mkdir(parents=True, exist_ok=True)
    runtimes: dict = {}
    started = time.perf_counter()
    with _stage("model"):
        model = build_model(spec)
    results = _ANALYSES[spec.kind](spec, model, out, runtimes)
    runtimes["total_s"] = time.perf_counter() - started
    artifacts = sorted(p.name for p in out.iterdir()
                       if p.suffix == ".csv")
    report = {
        "name": spec.name,
        "kind": spec.kind,
        "spec": _spec_dict(spec),
        "results": results,
        "artifacts": artifacts,
        "runtimes": runtimes,
        "runtimes_note": "wall-clock seconds; volatile, not covered by "
                         "the byte-identical rerun guarantee",
    }
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def builtin_specs() -> list:
    """The bundled experiments, in a fixed order."""
    te_free = 0.05 ** -0.5
    te_barrier = ehrenfest_time(1.0, 0.02)
    specs = [
        ExperimentSpec(
            name="free-exactness", kind="exactness", model="free",
            hbar=0.05, times=(0.5 * te_free, te_free, 2.0 * te_free),
            grid=GridSpec(-20.0, 40.0, 8192),
            methods=("extwkb", "thawed", "exact"),
            cases=(
                Case("slope0", 0.0, (1.0, 0.0)),
                Case("slope0.5", 0.5, (1.0, 0.0)),
                Case("slope1", 1.0, (1.0, 0.0)),
                Case("slope2", 2.0, (1.0, 0.0)),
            )),
        ExperimentSpec(
            name="integrable-exactness", kind="exactness", model="quartic",
            model_params=(("epsilon", 0.1),),
            hbar=0.005, times=(1.0, 2.0, 4.0),
            grid=GridSpec(-14.0, 22.0, 16384),
            methods=("extwkb", "thawed", "exact"),
            cases=(
                Case("slope0", 0.0, (1.0, 0.0)),
                Case("slope0.25", 0.25, (1.0, 0.0)),
            )),
        ExperimentSpec(
            name="barrier-transmission", kind="barrier-sweep", model="barrier",
            model_params=(("v0", 1.0),),
            hbar=0.02, times=(1.0, 2.0, te_barrier + 1.0),
            grid=GridSpec(-16.0, 16.0, 8192),
            methods=("exact",),
            exact_start_substeps=4096,
            cases=(
                Case("reflected", 1.0, (0.3, -0.5)),
                Case("critical", 1.0, (0.5, -0.5)),
                Case("transmitted", 1.0, (0.7, -0.5)),
            )),
        ExperimentSpec(
            name="kho-fig2", kind="backward-profiles", model="kho",
            model_params=(("k", 2.0),),
            hbar=0.0008, times=(1.0, 2.0, 3.0, 4.0),
            grid=GridSpec(-4.0, 4.0, 8192),
            methods=("extwkb", "thawed", "exact"),
            cases=(Case("theta0", 0.0, (0.0, 0.0)),)),
        ExperimentSpec(
            name="kho-slopes", kind="slope-sweep", model="kho",
            model_params=(("k", 2.0),),
            hbar=0.0008, times=(4.0,),
            grid=GridSpec(-4.0, 4.0, 8192),
            methods=("extwkb", "exact"),
            cases=(
                Case("-0.30", math.tan(-0.30 * math.pi / 2.0), (0.0, 0.0)),
                Case("0.00", 0.0, (0.0, 0.0)),
                Case("+0.35", math.tan(0.35 * math.pi / 2.0), (0.0, 0.0)),
                Case("+0.65", math.tan(0.65 * math.pi / 2.0), (0.0, 0.0)),
            )),
        ExperimentSpec(
            name="kho-lyapunov", kind="lyapunov", model="kho",
            model_params=(("k", 2.0),),
            hbar=0.0008, times=(1.0,),
            grid=GridSpec(-4.0, 4.0, 8192),
            methods=("exact",),
            cases=(Case("origin", 0.0, (0.0, 0.0)),)),
    ]
    return specs


def get_builtin_spec(name: str) -> ExperimentSpec:
    for spec in builtin_specs():
        if spec.name == name:
            return spec
    known = ", ".join(s.name for s in builtin_specs())
    raise KeyError(f"no builtin experiment {name!r} (known: {known})")


def load_spec_file(path) -> ExperimentSpec:
    """Read an ExperimentSpec from a key = value config file.

    Sections: [experiment] with name, kind, model, hbar, times, grid,
    methods and optional outdir / exact_start_substeps; optional [model]
    with numeric model parameters; one [case NAME] section per case with
    p0, q0 and either slope or theta_over_halfpi.
    """
    cp = ConfigParser()
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(f"cannot read config {path!r}")
    if "experiment" not in cp:
        raise ValueError("config needs an [experiment] section")
    exp = cp["experiment"]
    lo, hi, n = [s.strip() for s in exp["grid"].split(",")]
    cases = []
    for section in cp.sections():
        if not section.startswith("case "):
            continue
        sec = cp[section]
        label = section[len("case "):].strip()
        if "theta_over_halfpi" in sec:
            slope = math.tan(sec.getfloat("theta_over_halfpi") * math.pi / 2.0)
        else:
            slope = sec.getfloat("slope", 0.0)
        cases.append(Case(label, slope,
                          (sec.getfloat("p0", 0.0), sec.getfloat("q0", 0.0))))
    params = ()
    if "model" in cp:
        params = tuple(sorted((k, float(v)) for k, v in cp["model"].items()))
    spec = ExperimentSpec(
        name=exp["name"],
        kind=exp["kind"],
        model=exp["model"],
        model_params=params,
        hbar=exp.getfloat("hbar"),
        times=tuple(float(s) for s in exp["times"].split(",")),
        grid=GridSpec(float(lo), float(hi), int(n)),
        methods=tuple(s.strip() for s in exp.get("methods", "extwkb, exact").split(",")),
        cases=tuple(cases),
        outdir=exp.get("outdir", None),
        exact_start_substeps=exp.getint("exact_start_substeps", None),
    )
    spec.validate()
    return spec
