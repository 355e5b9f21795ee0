"""Command-line entry point.

Subcommands: solve, verify, dual, oracle, convexity, sweep. Exit codes:
0 success / certified pass, 2 configuration error, 3 solver failure,
4 certification or check failure, 5 inconclusive verdict.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import characterization as ch
from . import io as lio
from . import oracle_1d, pde_solver
from .config import ConfigError, RunConfig, load_config
from .lp_energy import extract_duals
from .minimizer import ContinuationReport, SolverError, continuation_solve
from .supremand import certify_convexity

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_FAIL = 4
EXIT_INCONCLUSIVE = 5


def _report_payload(rc: RunConfig, rep: ContinuationReport) -> dict:
    return {
        "early_stopped": rep.early_stopped,
        "wall_clock": rep.wall_clock,
        "e_final": rep.stages[-1].e_p if rep.stages else None,
        "stages": [{
            "p": s.p, "e_p": s.e_p, "iterations": s.iterations,
            "grad_norm": s.grad_norm, "sup_F": s.sup_F,
            "converged": s.converged, "guard_passed": s.guard_passed,
            "message": s.message,
        } for s in rep.stages],
        "seed": rc.seed,
    }


def _certification_payload(rep) -> dict:
    return {
        "F_inf": rep.F_inf,
        "sign_residual": rep.sign_residual,
        "sign_violations": rep.sign_violations,
        "dual_weak_residual": rep.weak_residual,
        "constancy_osc": rep.constancy_osc,
        "constancy_grad": rep.constancy_grad,
        "nodal_points": rep.nodal_points,
        "nodal_measure": rep.nodal_measure,
        "theta_min": rep.theta_min,
        "probe_violations": len(rep.probe_violations),
        "verdict": rep.verdict,
    }


def _verdict_exit(verdict: str) -> int:
    return {"pass": EXIT_OK, "fail": EXIT_FAIL}.get(verdict, EXIT_INCONCLUSIVE)


def _load(args) -> RunConfig:
    ladder = ([float(p) for p in args.ladder.split(",")]
              if getattr(args, "ladder", None) else None)
    rc = load_config(args.config, out_override=args.out,
                     seed_override=args.seed, ladder_override=ladder)
    if getattr(args, "emit_fields", False):
        rc.emit_fields = True
    if getattr(args, "emit_figures", False):
        rc.emit_figures = True
    rc.out_dir.mkdir(parents=True, exist_ok=True)
    return rc


def cmd_solve(args) -> int:
    rc = _load(args)
    try:
        rep = continuation_solve(rc.energy_config(), rc.schedule)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    lio.write_json(rc.out_dir / "report.json", _report_payload(rc, rep))
    lio.write_field_csv(rc.out_dir / "u.csv", rep.u_final)
    have_dual = rep.duals is not None and rep.duals.f_p is not None
    if have_dual:
        lio.write_field_csv(rc.out_dir / "f.csv", rep.duals.f_p)
        cert = ch.certify(rep.u_final, rep.duals.f_p, rc.spec, rc.A, rc.data,
                          seed=rc.seed)
        lio.write_json(rc.out_dir / "certification.json", _certification_payload(cert))
        verdict = cert.verdict
    else:
        lio.write_json(rc.out_dir / "certification.json",
                       {"verdict": "pass", "F_inf": 0.0,
                        "note": "degenerate minimum; duals skipped"})
        verdict = "pass"
    if rc.emit_figures:
        from . import plots
        plots.plot_field(rc.out_dir / "u.png", rep.u_final, "solution")
        if have_dual:
            plots.plot_field(rc.out_dir / "f.png", rep.duals.f_p, "dual field")
        plots.plot_trace(rc.out_dir / "e_trace.png",
                         [s.p for s in rep.stages], [s.e_p for s in rep.stages])
    return _verdict_exit(verdict)


def cmd_verify(args) -> int:
    rc = _load(args)
    u = lio.read_field_csv(args.u, rc.grid)
    f = lio.read_field_csv(args.f, rc.grid)
    cert = ch.certify(u, f, rc.spec, rc.A, rc.data, seed=rc.seed)
    lio.write_json(rc.out_dir / "certification.json", _certification_payload(cert))
    return _verdict_exit(cert.verdict)


def cmd_dual(args) -> int:
    rc = _load(args)
    u = lio.read_field_csv(args.u, rc.grid)
    problem = pde_solver.dual_problem_from_state(u, rc.spec, rc.A, rc.data,
                                                 mode=args.mode)
    f, info = pde_solver.solve_dual(problem)
    lio.write_field_csv(rc.out_dir / "f.csv", f)
    pts, _ = ch.nodal_set(f)
    lio.write_json(rc.out_dir / "dual.json", {
        "mode": info["mode"], "normalization": "weighted-L1",
        "nodal_count": len(pts), **{k: v for k, v in info.items() if k != "mode"},
    })
    if rc.emit_figures:
        from . import plots
        plots.plot_field(rc.out_dir / "f.png", f, "dual field")
    return EXIT_OK


def cmd_oracle(args) -> int:
    pq = oracle_1d.solve_exact(args.a, args.b, args.ua, args.sa, args.ub, args.sb)
    payload = {"s": pq.s, "xbar": pq.xbar, "sign_pattern": pq.sign_pattern,
               "smooth": pq.smooth}
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        lio.write_json(Path(args.out) / "oracle.json", payload)
    import json
    print(json.dumps(lio.json_ready(payload), sort_keys=True))
    return EXIT_OK


def cmd_convexity(args) -> int:
    rc = _load(args)
    blk = rc.raw.get("convexity", {})
    eta_range = blk.get("eta", [-1.0, 1.0])
    xi_range = blk.get("xi", [-2.0, 2.0])
    grad_range = blk.get("grad", ([-1.0] * rc.grid.dim, [1.0] * rc.grid.dim))
    box = ((list(rc.grid.lower), list(rc.grid.upper)),
           eta_range, grad_range, xi_range)
    candidates = blk.get("pbar_candidates", [2.0, 4.0, 8.0, 16.0])
    cert = certify_convexity(rc.spec, box, candidates)
    lio.write_json(rc.out_dir / "convexity.json", {
        "certified": cert.certified, "pbar": cert.pbar,
        "worst_eigenvalue": cert.worst_eigenvalue,
        "sample_count": cert.sample_count,
    })
    return EXIT_OK if cert.certified else EXIT_FAIL


def cmd_sweep(args) -> int:
    rc = _load(args)
    try:
        rep = continuation_solve(rc.energy_config(), rc.schedule)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    rows = []
    cfg = rc.energy_config()
    for s, p in zip(rep.stages, rc.schedule.p_ladder):
        # characterization at the final field only has the dual available;
        # intermediate rows use the stage e_p and a per-stage dual extraction
        duals = extract_duals(rep.u_final, cfg.with_p(s.p))
        if duals.f_p is not None:
            _, sres, _, _ = ch.sign_law_residual(rep.u_final, duals.f_p, rc.spec,
                                            rc.A, rc.data)
            pts, _ = ch.nodal_set(duals.f_p)
            rows.append([s.p, s.e_p, sres, len(pts)])
        else:
            rows.append([s.p, s.e_p, 0.0, 0])
    with open(rc.out_dir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "e_p", "sign_residual", "nodal_count"])
        for r in rows:
            w.writerow([repr(float(r[0])), repr(float(r[1])),
                        repr(float(r[2])), r[3]])
    if rc.emit_figures:
        from . import plots
        plots.plot_trace(rc.out_dir / "e_trace.png",
                         [r[0] for r in rows], [r[1] for r in rows])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linfvar",
                                 description="sup-norm variational solver and verifier")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--ladder", default=None,
                       help="comma-separated p ladder override")
        p.add_argument("--emit-fields", action="store_true")
        p.add_argument("--emit-figures", action="store_true")

    p = sub.add_parser("solve", help="run the continuation solve + certification")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="certify given u.csv and f.csv")
    common(p)
    p.add_argument("--u", required=True)
    p.add_argument("--f", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("dual", help="solve the dual equation for a given u.csv")
    common(p)
    p.add_argument("--u", required=True)
    p.add_argument("--mode", choices=["unit-boundary", "null-vector"],
                   default="unit-boundary")
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("oracle", help="exact 1D reference solution")
    for name in ("a", "b", "ua", "sa", "ub", "sb"):
        p.add_argument(name, type=float)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("convexity", help="convexity certificate for the configured family")
    common(p)
    p.set_defaults(func=cmd_convexity)

    p = sub.add_parser("sweep", help="per-stage CSV of the continuation run")
    common(p)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
