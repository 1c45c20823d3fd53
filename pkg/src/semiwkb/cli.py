"""Command-line entry point.

Subcommands: propagate (semiclassical methods), exact (grid reference,
same output formats for diffability), manifold (classical transport
table), lyapunov (tangent-map exponent and Ehrenfest times), run (batch
experiments), list-specs.  The output directory defaults to ./semiwkb-out
and can be overridden with --out or the SEMIWKB_OUTDIR variable.  Domain
invariant breaches (caustics, boundary mass, failed report bounds) exit
nonzero.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .dynamics import ehrenfest_time, flow_bundle, lyapunov_exponent
from .errors import SemiwkbError
from .experiments import (ExperimentSpec, OUTDIR_ENV, build_model,
                          builtin_specs, get_builtin_spec,
                          initial_coherent_state, load_spec_file,
                          resolve_outdir, run_experiment, write_table)
from .grids import GridSpec
from .hamiltonians import PhasePoint, QuadraticPhase
from .metaplectic import (profile_for_slope, propagate_extended_wkb,
                          propagate_thawed_gaussian)
from .reference import exact_state

_DESCRIPTIONS = {
    "free-exactness": "free flight: slope sweep, fidelity vs exact, manifold independence",
    "integrable-exactness": "quartic dispersion: slow degradation, slanted vs horizontal manifold",
    "barrier-transmission": "inverted parabola: reflected/critical/transmitted trichotomy",
    "kho-fig2": "kicked oscillator: backward profile comparison and fidelity series",
    "kho-slopes": "kicked oscillator: fidelity robustness across initial slopes",
    "kho-lyapunov": "kicked oscillator: stroboscopic exponent and Ehrenfest times",
}


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True,
                   choices=("free", "quartic", "barrier", "kho"))
    p.add_argument("--k", type=float, default=2.0,
                   help="kick strength (kho)")
    p.add_argument("--v0", type=float, default=1.0,
                   help="barrier curvature, rate is sqrt(v0)")
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="quartic dispersion coefficient")
    p.add_argument("--hbar", type=float, required=True)
    p.add_argument("--grid", required=True, metavar="LO,HI,N")
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--q0", type=float, default=0.0)
    slope = p.add_mutually_exclusive_group()
    slope.add_argument("--alpha", type=float, default=None,
                       help="initial manifold slope at the center")
    slope.add_argument("--theta-over-halfpi", type=float, default=None,
                       help="slope given as tan(theta), theta in units of pi/2")
    p.add_argument("--side", choices=("minus", "plus"), default="minus",
                   help="for kicked models: sample integer times before "
                        "or after that instant's kick")


def _parse_grid(text: str) -> GridSpec:
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 3:
        raise SemiwkbError(f"--grid wants LO,HI,N, got {text!r}")
    return GridSpec(float(parts[0]), float(parts[1]), int(parts[2]))


def _slope(args) -> float:
    if args.theta_over_halfpi is not None:
        return math.tan(args.theta_over_halfpi * math.pi / 2.0)
    return args.alpha if args.alpha is not None else 0.0


def _spec_for_args(args) -> ExperimentSpec:
    params = {"free": (), "quartic": (("epsilon", args.epsilon),),
              "barrier": (("v0", args.v0),), "kho": (("k", args.k),)}
    return ExperimentSpec(name="cli", kind="exactness", model=args.model,
                          model_params=params[args.model], hbar=args.hbar,
                          times=(args.t,), grid=_parse_grid(args.grid))


def _outdir(args) -> Path:
    if args.out is not None:
        out = Path(args.out)
    else:
        out = Path(os.environ.get(OUTDIR_ENV, "semiwkb-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_state(out: Path, prefix: str, state, meta: dict) -> None:
    state.to_csv(out / f"{prefix}_state.csv")
    with open(out / f"{prefix}_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_propagate(args) -> int:
    spec = _spec_for_args(args)
    model = build_model(spec)
    grid = spec.grid
    alpha = _slope(args)
    out = _outdir(args)
    if args.method == "extwkb":
        phase0 = QuadraticPhase(args.p0, args.q0, alpha)
        r = propagate_extended_wkb(model, phase0, profile_for_slope(alpha),
                                   args.hbar, args.t, grid, side=args.side)
    else:
        r = propagate_thawed_gaussian(model, PhasePoint(args.p0, args.q0),
                                      1j, args.hbar, args.t, grid,
                                      side=args.side)
    meta = {"method": args.method, "model": args.model, "t": args.t,
            "hbar": args.hbar, "center": [args.p0, args.q0], "slope": alpha,
            "metadata": _jsonable(r.metadata)}
    _emit_state(out, args.prefix, r.state, meta)
    extra = ""
    if args.method == "extwkb":
        extra = (f" caustic_margin={r.metadata['caustic_margin']:.3g}"
                 f" c_t={r.metadata['c_t']:.6g}")
    print(f"{args.method}: wrote {out / (args.prefix + '_state.csv')}"
          f" norm={r.state.norm:.9f}{extra}")
    return 0


def _cmd_exact(args) -> int:
    spec = _spec_for_args(args)
    model = build_model(spec)
    psi0 = initial_coherent_state(spec.grid, args.hbar, (args.p0, args.q0))
    res = exact_state(model, psi0, args.t, substeps=args.substeps,
                      tol=args.tol, side=args.side)
    out = _outdir(args)
    meta = {"method": "exact", "model": args.model, "t": args.t,
            "hbar": args.hbar, "center": [args.p0, args.q0],
            "substeps": res.substeps, "ladder_delta": res.ladder_delta,
            "diagnostics": _jsonable(res.diagnostics)}
    _emit_state(out, args.prefix, res.state, meta)
    print(f"exact: wrote {out / (args.prefix + '_state.csv')}"
          f" substeps={res.substeps} delta={res.ladder_delta:.3g}")
    return 0


def _cmd_manifold(args) -> int:
    spec = _spec_for_args(args)
    model = build_model(spec)
    alpha = _slope(args)
    lo, hi = (float(s) for s in args.window.split(","))
    seeds = np.linspace(lo, hi, args.n_seeds)
    phase0 = QuadraticPhase(args.p0, args.q0, alpha)
    p_seed = phase0.grad(seeds)
    fb = flow_bundle(model, p_seed, seeds, args.t, side=args.side)
    # position-map derivative along the manifold: row q of the tangent
    # contracted with the seed direction (alpha, 1)
    dphi = fb.tangent[:, 1, 0] * alpha + fb.tangent[:, 1, 1]
    out = _outdir(args)
    path = out / f"{args.prefix}_manifold.csv"
    write_table(path, ["q_seed", "p_seed", "q_t", "p_t", "dphi", "action"],
                zip(seeds, p_seed, fb.q, fb.p, dphi, fb.action))
    margin = float(np.min(np.abs(dphi)))
    sym = fb.symplectic_defect()
    print(f"manifold: wrote {path} caustic_margin={margin:.6g} "
          f"symplectic_defect={sym:.3g}")
    if np.any(dphi <= 0.0) or margin == 0.0:
        print("caustic inside the window (position map not increasing)",
              file=sys.stderr)
        return 1
    return 0


def _cmd_lyapunov(args) -> int:
    params = {"kho": (("k", args.k),), "barrier": (("v0", args.v0),)}
    spec = ExperimentSpec(name="cli", kind="lyapunov", model=args.model,
                          model_params=params.get(args.model, ()),
                          hbar=args.hbars[0], times=(args.period,),
                          grid=GridSpec(-4.0, 4.0, 64))
    model = build_model(spec)
    if args.model == "barrier":
        lam = math.sqrt(args.v0)
    else:
        lam = lyapunov_exponent(model, PhasePoint(0.0, 0.0), args.period)
    lines = [f"lambda = {lam:.9f}"]
    for hb in args.hbars:
        lines.append(f"T_E(hbar={hb:g}) = {ehrenfest_time(lam, hb):.9f}")
    print("\n".join(lines))
    if args.out is not None:
        out = _outdir(args)
        with open(out / "lyapunov.json", "w", encoding="utf-8") as fh:
            json.dump({"lambda": lam,
                       "ehrenfest_times": {str(hb): ehrenfest_time(lam, hb)
                                           for hb in args.hbars}},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _breaches(node, path="report"):
    # any recorded check that came out False is an invariant breach
    found = []
    if isinstance(node, dict):
        for key, val in node.items():
            here = f"{path}.{key}"
            if val is False and (key.endswith("_ok") or key in
                                 ("sign_match", "matches_baseline",
                                  "degradation_ok", "final_beats_thawed")):
                found.append(here)
            else:
                found.extend(_breaches(val, here))
    elif isinstance(node, list):
        for i, val in enumerate(node):
            found.extend(_breaches(val, f"{path}[{i}]"))
    return found


def _cmd_run(args) -> int:
    if args.config is not None:
        spec = load_spec_file(args.config)
    else:
        spec = get_builtin_spec(args.spec)
    report = run_experiment(spec, outdir=args.out)
    out = resolve_outdir(spec, args.out)
    breaches = _breaches(report["results"])
    print(f"{spec.name}: report at {out / 'report.json'} "
          f"({len(report['artifacts'])} csv artifacts)")
    for b in breaches:
        print(f"breach: {b}", file=sys.stderr)
    return 1 if breaches else 0


def _cmd_list_specs(_args) -> int:
    for spec in builtin_specs():
        desc = _DESCRIPTIONS.get(spec.name, spec.kind)
        print(f"{spec.name:24s} {spec.model:8s} {desc}")
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="semiwkb",
        description="semiclassical propagation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("propagate", help="semiclassical propagation")
    _model_args(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--method", choices=("extwkb", "thawed"), default="extwkb")
    p.add_argument("--out", default=None)
    p.add_argument("--prefix", default="propagate")
    p.set_defaults(fn=_cmd_propagate)

    p = sub.add_parser("exact", help="grid reference propagation")
    _model_args(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--substeps", type=int, default=None,
                   help="starting ladder rung per unit time")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default=None)
    p.add_argument("--prefix", default="exact")
    p.set_defaults(fn=_cmd_exact)

    p = sub.add_parser("manifold", help="classical transport table")
    _model_args(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--window", default="-1.0,1.0", metavar="LO,HI")
    p.add_argument("--n-seeds", type=int, default=129)
    p.add_argument("--out", default=None)
    p.add_argument("--prefix", default="manifold")
    p.set_defaults(fn=_cmd_manifold)

    p = sub.add_parser("lyapunov", help="stroboscopic exponent and T_E")
    p.add_argument("--model", choices=("kho", "barrier"), default="kho")
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--v0", type=float, default=1.0)
    p.add_argument("--period", type=float, default=1.0)
    p.add_argument("--hbars", type=float, nargs="+", default=[0.0008])
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_lyapunov)

    p = sub.add_parser("run", help="run a named or configured experiment")
    tgt = p.add_mutually_exclusive_group(required=True)
    tgt.add_argument("--spec", help="builtin experiment name")
    tgt.add_argument("--config", help="spec config file")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("list-specs", help="list builtin experiments")
    p.set_defaults(fn=_cmd_list_specs)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SemiwkbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
