"""Command-line entry points.

Subcommands:
  run        time-step a scenario config; writes diagnostics CSV, VTK
             snapshots and a JSON run manifest
  mms        manufactured-solution convergence study (spatial or temporal)
  sweep-c0   vanishing-storage sweep over a list of c0 values
  constants  sampling-based constitutive-constant report
  mesh-gen   write a mesh in the plain-text format

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 run-level check failure (only with --assert).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, meshing, scenarios, tensors
from .linsolve import SingularSystemError
from .timestepping import CompatibilityError, PicardDivergenceError
from .vtkio import state_point_data, write_vtk

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ASSERT = 4

# resolutions of ambiguities in the problem statement, echoed in manifests
AMBIGUITY_CHOICES = {
    "lagged_stress_pairing": "eps(v)",
    "initial_rigid_motion_component": "projected out and recorded",
}


def _say(args, *msg):
    if not args.quiet:
        print(*msg)


def _hash_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out: Path, cfg, args, extra=None):
    manifest = {
        "tool": "porefem",
        "version": __version__,
        "config": cfg.to_dict(),
        "config_sha256": _hash_file(args.config) if args.config else None,
        "seed": cfg.seed,
        "ambiguity_choices": AMBIGUITY_CHOICES,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_run(args) -> int:
    cfg = scenarios.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        stepper, result = scenarios.run_scenario(cfg, with_diagnostics=True)
    except (PicardDivergenceError, SingularSystemError, CompatibilityError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        if isinstance(exc, PicardDivergenceError) and exc.increments:
            tail = ", ".join(f"{v:.3e}" for v in exc.increments[-5:])
            print(f"last increments: {tail}", file=sys.stderr)
        return EXIT_SOLVER

    series = result.diagnostics
    (out / "diagnostics.csv").write_text(series.to_csv())
    mesh = stepper.mesh
    for k, state in enumerate(result.states):
        if k % cfg.output_every == 0 or k == len(result.states) - 1:
            disp, fields = state_point_data(mesh, state)
            write_vtk(out / f"state_{k:04d}.vtk", mesh, vectors={"displacement": disp},
                      scalars=fields, title=f"t = {state.t:.6g}")
    _write_manifest(out, cfg, args, extra={"complete": result.complete, "failure": result.failure})
    _say(args, f"wrote {len(result.states)} levels to {out} "
               f"(complete={result.complete}, levels in CSV: {len(series.energy)})")

    if not result.complete:
        print(f"run incomplete: {result.failure}", file=sys.stderr)
        return EXIT_SOLVER
    if args.assert_checks:
        bad = []
        for iv in series.invariants:
            if abs(iv.C_eta_defect) > 1e-10:
                bad.append(f"C_eta defect {iv.C_eta_defect:.3e} at t={iv.t:g}")
            if abs(iv.C_u_minus_C_q) > 1e-10:
                bad.append(f"C_u - C_q {iv.C_u_minus_C_q:.3e} at t={iv.t:g}")
            if max(abs(iv.C_q_link_defect), abs(iv.C_p_link_defect)) > 1e-12:
                bad.append(f"kappa-link defect at t={iv.t:g}")
        if series.blow_up:
            bad.append("monitor bundle flagged blow-up")
        if bad:
            for line in bad[:10]:
                print(f"check failed: {line}", file=sys.stderr)
            return EXIT_ASSERT
        _say(args, "all run-level checks passed")
    return EXIT_OK


def cmd_mms(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.temporal:
        rep = scenarios.temporal_convergence()
        (out / "mms_temporal.json").write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n")
        _say(args, f"temporal orders: u {rep['order_u']:.3f}, eta {rep['order_eta']:.3f}")
        if args.assert_checks and rep["order_u"] < 0.9:
            print(f"check failed: temporal order {rep['order_u']:.3f} < 0.9", file=sys.stderr)
            return EXIT_ASSERT
        return EXIT_OK
    if args.case not in scenarios.MMS_CASES:
        print(f"unknown case {args.case!r}; known: {scenarios.MMS_CASES}", file=sys.stderr)
        return EXIT_CONFIG
    table = scenarios.mms_convergence(
        args.case, refinements=args.refinements, amplitude=args.amplitude, n0=args.n0
    )
    (out / f"mms_{args.case}.csv").write_text(table.to_csv())
    _say(args, f"case {args.case}: orders u_H1 {table.order_u_h1:.3f}, "
               f"p_L2 {table.order_p_l2:.3f} (FD guard {table.residual_guard:.2e})")
    if not table.monotone:
        _say(args, "warning: error sequence is not monotone")
    if args.assert_checks and not table.case == "linear":
        if table.order_u_h1 < 1.8 or table.order_p_l2 < 1.8:
            print("check failed: observed order below 1.8", file=sys.stderr)
            return EXIT_ASSERT
    return EXIT_OK


def cmd_sweep_c0(args) -> int:
    base = scenarios.load_config(args.config)
    try:
        c0s = [float(v) for v in args.c0.split(",")]
    except ValueError:
        print(f"could not parse --c0 list {args.c0!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = scenarios.sweep_c0(base, c0s)
    except ValueError as exc:
        print(f"invalid sweep: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_c0.csv").write_text(report.to_csv())
    payload = {
        "rows": [vars(r) for r in report.rows],
        "cauchy_u_h1": report.cauchy_u_h1,
        "cauchy_eta_l2": report.cauchy_eta_l2,
    }
    (out / "sweep_c0.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    for r in report.rows:
        _say(args, f"c0={r.c0:g}: constraint residual {r.biot_constraint:.4e} "
                   f"complete={r.complete}")
    return EXIT_OK


def cmd_constants(args) -> int:
    mu, lam = args.mu, args.lam
    delta = args.delta if args.delta is not None else tensors.default_delta(mu, lam)
    regime = tensors.RegimeBounds(
        grad_lower=1e-12, grad_upper=delta, frob_lower=1e-12, frob_upper=delta, delta=delta
    )
    consts = tensors.estimate_constants(
        regime, mu, lam, n_samples=args.samples, seed=args.seed or 0, linear_only=args.linear_only
    )
    text = consts.to_json(regime) + "\n"
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "constants.json").write_text(text)
    _say(args, text.rstrip())
    return EXIT_OK


def cmd_mesh_gen(args) -> int:
    try:
        if args.kind == "unit-square":
            mesh = meshing.unit_square_mesh(args.n)
        elif args.kind == "centered-square":
            mesh = meshing.centered_square_mesh(args.n)
        else:
            print(f"unknown mesh kind {args.kind!r}", file=sys.stderr)
            return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid mesh request: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    meshing.write_mesh(mesh, out)
    _say(args, f"wrote {mesh.num_vertices} vertices / {mesh.num_cells} cells to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="porefem",
                                     description="nonlinear poroelasticity solver and studies")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config):
        p.add_argument("--config", required=needs_config, help="scenario TOML file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.add_argument("--assert", dest="assert_checks", action="store_true",
                       help="fail (exit 4) when run-level checks do not hold")

    p = sub.add_parser("run", help="time-step a scenario")
    common(p, needs_config=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("mms", help="manufactured-solution convergence study")
    common(p, needs_config=False)
    p.add_argument("--case", default="trig", help="manufactured case id")
    p.add_argument("--refinements", type=int, default=3)
    p.add_argument("--amplitude", type=float, default=1e-3)
    p.add_argument("--n0", type=int, default=4, help="coarsest mesh subdivisions")
    p.add_argument("--temporal", action="store_true", help="time-order study instead")
    p.set_defaults(func=cmd_mms)

    p = sub.add_parser("sweep-c0", help="vanishing-storage sweep")
    common(p, needs_config=True)
    p.add_argument("--c0", default="1e-1,1e-2,1e-3,1e-4",
                   help="comma-separated strictly decreasing c0 values")
    p.set_defaults(func=cmd_sweep_c0)

    p = sub.add_parser("constants", help="sampled constitutive constants")
    common(p, needs_config=False)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=None, help="gradient amplitude cap")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--linear-only", action="store_true")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("mesh-gen", help="write a mesh file")
    common(p, needs_config=False)
    p.add_argument("--kind", default="unit-square")
    p.add_argument("--n", type=int, default=8)
    p.set_defaults(func=cmd_mesh_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except scenarios.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except meshing.MeshFormatError as exc:
        print(f"mesh file error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PicardDivergenceError, SingularSystemError, CompatibilityError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
