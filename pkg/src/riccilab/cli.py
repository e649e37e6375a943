"""Command-line entry point.

Subcommands: catalog, verify, minimize-w, geodesic-lab, eigen, cubic-fuzz,
ode-demo.  JSON is the canonical report format (schema `riccilab-report/1`);
text output is a rendering of the same payload.  Reports carry no
timestamps, so identical argv + seed reproduce identical bytes.  Exit codes:
0 all requested checks pass, 1 check failure, 2 usage or configuration
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import catalog as cat
from . import eigen as eig
from . import geodesics as geo
from . import minimizer as mini
from .errors import RicciLabError
from .exprfile import grid_field_from_expression, load_expression_file
from .identities import ALL_TAGS, RunConfig, admissible_tags, check_identity, run_suite
from .osgood import OsgoodSpec, ode_counterexample_demo, osgood_certify

SCHEMA = "riccilab-report/1"


def _emit(report: dict, args) -> None:
    if getattr(args, "json", None):
        text = json.dumps(report, sort_keys=True, indent=2, allow_nan=True)
        with open(args.json, "w") as fh:
            fh.write(text + "\n")


def _parse_tols(specs) -> dict:
    out = {}
    for spec in specs or []:
        if "=" in spec:
            tag, val = spec.split("=", 1)
            if tag not in ALL_TAGS:
                raise ValueError(f"unknown identity tag '{tag}'")
            out[tag] = float(val)
        else:
            for tag in ALL_TAGS:
                out.setdefault(tag, float(spec))
    return out


def _coords(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.split(",")])


# ---------------------------------------------------------------------------
# subcommand handlers: return (exit_code, report_payload)


def _cmd_catalog(args):
    rows = []
    for s in cat.catalog_entries():
        rows.append({
            "name": s.name, "dim": s.dim, "class": s.soliton_class,
            "trivial": s.trivial, "mu": s.mu, "example": s.is_example,
        })
        print(f"{s.name:16s} n={s.dim}  {s.soliton_class:12s} "
              f"trivial={str(s.trivial):5s} mu={s.mu:g}"
              + ("" if s.is_example else "  [non-example]"))
    return 0, {"instances": rows}


def _cmd_verify(args):
    if args.metric_file:
        load_expression_file(args.metric_file)
    s = cat.catalog_get(args.instance, mu=args.mu)
    cfg = RunConfig(samples=args.samples, seed=args.seed, mode=args.mode,
                    tolerances=_parse_tols(args.tol))
    if args.identity:
        points = s.sample_points(cfg.samples, seed=cfg.seed)
        reports = [check_identity(args.identity, s, points, config=cfg)]
    elif args.threads > 1:
        points = s.sample_points(cfg.samples, seed=cfg.seed)
        from .identities import InstanceGeometry
        geo_cache = InstanceGeometry(s, points, mode=cfg.mode)
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            futs = [pool.submit(check_identity, tag, s, points, None, cfg.mode,
                                geo_cache, cfg) for tag in admissible_tags(s)]
            reports = [f.result() for f in futs]
    else:
        reports = run_suite(s, cfg)

    residual_rows = []
    ok = True
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        ok &= r.passed
        print(f"{r.identity:4s} max={r.max_residual:.3e} mean={r.mean_residual:.3e} "
              f"tol={r.tolerance:.1e} [{status}]" + (f" {r.note}" if r.note else ""))
        residual_rows.append(r.to_dict())

    res = cat.residual_norms(s, s.sample_points(cfg.samples, seed=cfg.seed), mode=cfg.mode)
    print(f"defining-equation residual: max={res.max():.3e} mean={res.mean():.3e}")
    payload = {
        "instance": s.name, "samples": cfg.samples, "mode": cfg.mode,
        "identities": residual_rows,
        "soliton_residual": {"max": float(res.max()), "mean": float(res.mean())},
    }
    return (0 if ok else 1), payload


def _cmd_minimize(args):
    lengths = tuple([args.side] * args.n)
    grid = mini.PeriodicGrid(args.n, args.m, lengths)
    coords = ["x", "y", "z", "w"][:args.n]
    rr = (grid_field_from_expression(args.R, coords, grid.nodes())
          if args.R else np.zeros(grid.shape))
    u0 = None
    if args.random_init:
        rng = np.random.default_rng(args.seed)
        u0 = 1.0 + 0.5 * rng.random(grid.shape)
    cfg = mini.MinimizeConfig(max_iter=args.max_iter)
    result = mini.minimize(grid, args.mu, rr, config=cfg, u0=u0)
    payload = {
        "n": args.n, "m": args.m, "side": args.side, "mu": args.mu,
        "R": args.R or "0", "sigma": result.sigma,
        "el_constant": result.el_constant, "el_residual": result.el_residual,
        "iterations": result.iterations, "converged": result.converged,
        "min_u": float(result.u.min()),
    }
    if result.converged:
        rec = mini.recover_f_check(grid, result, args.mu, rr)
        payload["recovered"] = {
            "expr_mean": rec.expr_mean, "expr_std": rec.expr_std,
            "minus_four_c": rec.minus_four_c, "constancy_gap": rec.constancy_gap,
        }
    print(f"sigma={result.sigma:.10f}  C={result.el_constant:.10f}  "
          f"el_residual={result.el_residual:.3e}  iters={result.iterations}  "
          f"converged={result.converged}  min_u={payload['min_u']:.4g}")
    if "recovered" in payload:
        r = payload["recovered"]
        print(f"E: mean={r['expr_mean']:.10f} std={r['expr_std']:.3e} "
              f"-4C={r['minus_four_c']:.10f} gap={r['constancy_gap']:.3e}")
    if args.dump_field:
        np.savetxt(args.dump_field, result.u.reshape(grid.m, -1), delimiter=",")
    return (0 if result.converged else 1), payload


def _cmd_geodesic(args):
    from .geometry import get_metric
    if args.metric_file:
        load_expression_file(args.metric_file)
    payload = {"report": args.report}
    code = 0
    if args.report == "geodiff":
        m = get_metric(args.metric)
        p = _coords(args.point) if args.point else m.domain.sample(1, seed=args.seed)[0]
        radii = [float(t) for t in args.radii.split(",")]
        dirs = geo.default_directions(m, p, args.directions)
        vals = geo.geodiff_check(m, p, radii, directions=dirs)
        payload.update({"metric": args.metric, "point": [float(v) for v in p],
                        "radii": radii, "values": vals})
        for r, v in zip(radii, vals):
            print(f"r={r:8.4f}  max|d/dr log(J/S)| = {v:.3e}")
    elif args.report == "indexform":
        m = get_metric(args.metric)
        p = _coords(args.point) if args.point else m.domain.sample(1, seed=args.seed)[0]
        theta = _coords(args.direction) if args.direction else np.eye(m.dim)[-1]
        h, hp = geo.sine_field(args.length, 0, m.dim - 1)
        val = geo.index_form(m, p, theta, args.length, h, hp)
        payload.update({"metric": args.metric, "length": args.length, "value": val})
        print(f"I(Y,Y) over L={args.length:g}: {val:.8f}")
    elif args.report == "diameter":
        s = cat.catalog_get(args.instance)
        bound = geo.diameter_bound(s, args.cf)
        payload.update({"instance": args.instance, "C": args.cf, "bound": bound})
        print(f"loop-length bound for {args.instance} (C={args.cf:g}): {bound:.10f}")
    return code, payload


def _cmd_eigen(args):
    s = cat.catalog_get(args.instance)
    pts = s.sample_points(args.samples, seed=args.seed)
    table = eig.eigen_table(s, pts)
    triv = eig.triviality_check(s, pts)
    sums = np.array([e.eigenvalues.sum() - e.scalar for e in table])
    payload = {
        "instance": s.name, "samples": args.samples,
        "eigen_min": float(min(e.eigenvalues[0] for e in table)),
        "eigen_max": float(max(e.eigenvalues[-1] for e in table)),
        "trace_consistency": float(np.abs(sums).max()),
        "triviality": triv,
    }
    print(f"{s.name}: lambda range [{payload['eigen_min']:.6g}, {payload['eigen_max']:.6g}] "
          f"trace-err={payload['trace_consistency']:.2e} einstein={triv['einstein']}")
    return 0, payload


def _cmd_cubic_fuzz(args):
    agree = eig.cubic_fuzz(args.count, seed=args.seed)
    sign = eig.cubic_fuzz(args.count, seed=args.seed + 1, nonnegative=True)
    ok = (agree["max_relative_deviation"] <= 1e-10
          and sign["max_factored"] <= 1e-12)
    payload = {"agreement": agree, "nonnegative_sign": sign, "pass": ok}
    print(f"max relative deviation: {agree['max_relative_deviation']:.3e}")
    print(f"max factored value on nonnegative draws: {sign['max_factored']:.3e}")
    return (0 if ok else 1), payload


def _cmd_ode_demo(args):
    demo = ode_counterexample_demo()
    lip = OsgoodSpec(phi=lambda t: 2.0 * t, delta=1.0)
    lip_ok = osgood_certify(lip)
    root = OsgoodSpec(phi=lambda t: 12.0 * np.sqrt(t), delta=1.0)
    root_ok = osgood_certify(root)
    ok = (abs(demo.quartic_branch_final - 1.0) <= 1e-4
          and abs(demo.zero_branch_final) <= 1e-10
          and lip_ok and not root_ok)
    payload = {"demo": demo.to_dict(),
               "certified": {"linear": lip_ok, "sqrt": root_ok}, "pass": ok}
    print("f'' = 12 sqrt(f) from (0,0):")
    print(f"  zero branch     f(1) = {demo.zero_branch_final:.3e}")
    print(f"  quartic branch  f(1) = {demo.quartic_branch_final:.10f} "
          f"(start perturbed by eps={demo.perturbation:g})")
    print(f"comparison ODE, linear phi:   h(1) = {demo.comparison_final:.3e}")
    print(f"comparison ODE, sqrt phi:     h(1) = {demo.escape_final:.4g} (escapes)")
    print(f"certified Osgood: linear={lip_ok} sqrt={root_ok}")
    return (0 if ok else 1), payload


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ricci-lab",
                                 description="Numerical Ricci-soliton workbench")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list registered soliton instances")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_catalog)

    p = sub.add_parser("verify", help="run identity residual suite on an instance")
    p.add_argument("instance")
    p.add_argument("--identity", choices=ALL_TAGS)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", action="append",
                   help="tolerance override: '1e-5' or 'I5=1e-4' (repeatable)")
    p.add_argument("--mode", choices=("dual", "fd"), default="dual")
    p.add_argument("--mu", type=float, default=None,
                   help="override mu for the Gaussian family")
    p.add_argument("--metric-file", help="expression file to load before lookup")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--json")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("minimize-w", help="entropy-functional minimization on a flat torus")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--side", type=float, default=2.0 * np.pi)
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--R", help="scalar-curvature expression over x,y,...")
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--random-init", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-field", help="write the minimizer as CSV")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_minimize)

    p = sub.add_parser("geodesic-lab", help="geodesic reports")
    p.add_argument("--report", choices=("geodiff", "indexform", "diameter"),
                   required=True)
    p.add_argument("--metric", default="sphere_2")
    p.add_argument("--instance", default="sphere_3")
    p.add_argument("--point", help="comma-separated chart coordinates")
    p.add_argument("--direction", help="comma-separated tangent components")
    p.add_argument("--radii", default="0.05,0.1,0.2,0.4")
    p.add_argument("--directions", type=int, default=32)
    p.add_argument("--length", type=float, default=np.pi)
    p.add_argument("--cf", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric-file")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_geodesic)

    p = sub.add_parser("eigen", help="Ricci eigenvalue table for an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json")
    p.set_defaults(func=_cmd_eigen)

    p = sub.add_parser("cubic-fuzz", help="eigenvalue-cubic agreement and sign fuzz")
    p.add_argument("--count", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json")
    p.set_defaults(func=_cmd_cubic_fuzz)

    p = sub.add_parser("ode-demo", help="sqrt-nonlinearity uniqueness counterexample")
    p.add_argument("--json")
    p.set_defaults(func=_cmd_ode_demo)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        code, payload = args.func(args)
    except (RicciLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "seed": getattr(args, "seed", None),
        "exit_code": code,
    }
    report.update(payload)
    _emit(report, args)
    return code


if __name__ == "__main__":
    sys.exit(main())
