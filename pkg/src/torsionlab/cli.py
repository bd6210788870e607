"""Command-line front end: ``torsionlab {body,torsion,verify,oracle} ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import ellipsoid as ell
from .config import (CampaignResult, Config, load_tolerances, parse_body_spec, parse_floats,
                     parse_ladder, parse_length, write_atomic)
from .errors import GridTooCoarse, NotConvex, ParseError, TorsionLabError
from .fields import TestFunction, parse_test_function, random_test_function
from .poisson import DirichletSolver
from .reports import EQUALITY, HOLDS, VIOLATED, VerificationReport
from .support import body_from_dict, diameter, random_body, volume
from .torsion import compute_bundle, convergence_study
from . import verify as V

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _tolerance(cfg, name):
    return cfg.tolerances[name]["violation"], cfg.tolerances[name]["equality"]


def _bundle(body, cfg):
    solver = DirichletSolver(body, cfg.delta, tol=cfg.solver_tol)
    return compute_bundle(body, cfg.delta, tol=cfg.cross_check_tol, solver=solver)


def reference_T(spec: str, body):
    """Closed-form T when the body is a disk (possibly translated) or a named ellipse."""
    if spec.startswith("ellipse:"):
        a, b = parse_floats(spec.split(":", 1)[1], 2)
        return math.pi * a**3 * b**3 / (a * a + b * b)
    if body.support.degree <= 1:
        return math.pi * body.c0**4 / 2
    return None


# ---------------------------------------------------------------------------
# body


def cmd_body(args, cfg):
    path = Path(args.file)
    try:
        spec = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    inputs = {"file": str(path), "action": args.action}
    try:
        body = body_from_dict(spec)
    except NotConvex as exc:
        th = np.atleast_1d(exc.theta) if exc.theta is not None else np.array([])
        wv = np.atleast_1d(exc.w) if exc.w is not None else np.array([])
        k = int(np.argmin(wv)) if wv.size else None
        diag = {"valid": False, "error": str(exc), "theta": th, "w": wv,
                "min_w": float(wv[k]) if k is not None else None,
                "theta_min_w": float(th[k]) if k is not None and th.size else None}
        lhs = diag["min_w"] if diag["min_w"] is not None else -1.0
        return [VerificationReport("body", inputs, lhs, 0.0, lhs, 0.0, 0.0, VIOLATED, diag)]
    min_w = float(body.w.min())
    diag = {"valid": True, "area": volume(body), "diameter": diameter(body), "min_w": min_w,
            "perimeter": body.perimeter(), "steiner_point": body.steiner_point,
            "degree": body.support.degree, "N": body.n_nodes}
    if args.action == "show":
        x0, x1, y0, y1 = body.bounds()
        diag.update({"bounds": [x0, x1, y0, y1], "widths": body.widths(),
                     "support": spec if spec.get("kind") == "trig" else None})
    return [VerificationReport("body", inputs, min_w, 0.0, min_w, 0.0, 0.0, HOLDS, diag)]


# ---------------------------------------------------------------------------
# torsion


def cmd_torsion(args, cfg):
    spec = args.body_spec
    body = parse_body_spec(spec, cfg.nodes)
    ref = reference_T(spec, body)
    rel = cfg.tolerances["torsion"]["violation"]
    t0 = time.perf_counter()
    if cfg.ladder:
        study = convergence_study(body, cfg.ladder, ref)
        T = study["T"][-1]
        diag = {"ladder": study}
    else:
        b = _bundle(body, cfg)
        T = b.T_mass
        diag = b.report()
        diag["T_spread"] = b.spread
    inputs = {"body": spec, "delta": cfg.delta, "ladder": cfg.ladder, "N": cfg.nodes}
    if ref is not None:
        rep = V._agreement("torsion", inputs, T, ref, abs(ref), rel, diag)
    else:
        routes = diag["ladder"]["routes"][-1] if cfg.ladder else diag
        vals = [routes["T_energy"], routes["T_mass"], routes["T_boundary"]]
        spread = max(vals) - min(vals)
        rep = VerificationReport("torsion", inputs, T, T, -spread,
                                 cfg.cross_check_tol * abs(T), cfg.cross_check_tol * abs(T),
                                 EQUALITY if spread <= cfg.cross_check_tol * abs(T) else VIOLATED,
                                 diag)
    rep.timing_ms = 1e3 * (time.perf_counter() - t0)
    return [rep]


# ---------------------------------------------------------------------------
# verify


def _random_pairs(cfg, count):
    rng = np.random.default_rng(cfg.seed)
    seeds = rng.integers(0, 2**31 - 1, size=(count, 2))
    return [(random_body(int(a), n_nodes=cfg.nodes), random_body(int(b), n_nodes=cfg.nodes),
             f"random:{a}", f"random:{b}") for a, b in seeds]


def verify_bm(args, cfg, out):
    if args.pair:
        pairs = [(parse_body_spec(args.pair[0], cfg.nodes), parse_body_spec(args.pair[1], cfg.nodes),
                  *args.pair)]
    else:
        pairs = _random_pairs(cfg, args.random_pairs)
    for A, B, na, nb in pairs:
        for rep in (V.verify_bm_volume(A, B, args.samples, cfg.tolerances),
                    V.verify_bm_torsion(A, B, args.samples, cfg.delta, cfg.tolerances)):
            rep.inputs.update({"A_spec": na, "B_spec": nb})
            out.append(rep)


def _psi_list(args, cfg):
    if args.psi:
        return [parse_test_function(s) for s in args.psi]
    rng = np.random.default_rng(cfg.seed)
    return [random_test_function(int(s), degree=5) for s in rng.integers(0, 2**31 - 1, args.random_psi)]


def verify_poincare(args, cfg, out):
    body = parse_body_spec(args.body, cfg.nodes)
    bundle = _bundle(body, cfg)
    fn = V.verify_poincare_spherical if args.form == "spherical" else V.verify_poincare_boundary
    for psi in _psi_list(args, cfg):
        rep = fn(body, psi, cfg.delta, bundle=bundle, tolerances=cfg.tolerances)
        rep.inputs["body_spec"] = args.body
        out.append(rep)


def verify_concavity(args, cfg, out):
    body = parse_body_spec(args.body, cfg.nodes)
    for s in args.phi:
        rep = V.concavity_check(body, parse_test_function(s), args.samples, cfg.delta,
                                args.t_max, cfg.tolerances)
        rep.inputs["body_spec"] = args.body
        out.append(rep)


def verify_variation(args, cfg, out):
    body = parse_body_spec(args.body, cfg.nodes)
    bundle = _bundle(body, cfg)
    for s in args.phi:
        phi = parse_test_function(s)
        if args.order == 1:
            rep = V.verify_first_variation(body, phi, cfg.delta, bundle, cfg.tolerances,
                                           eps=cfg.fd_first * body.c0)
        else:
            rep = V.verify_second_variation(body, phi, cfg.delta, bundle, cfg.tolerances,
                                            eps=cfg.fd_second * body.c0)
        rep.inputs["body_spec"] = args.body
        out.append(rep)


def verify_adjoint(args, cfg, out):
    body = parse_body_spec(args.body, cfg.nodes)
    bundle = _bundle(body, cfg)
    rep = V.verify_adjointness(body, parse_test_function(args.phi1), parse_test_function(args.phi2),
                               cfg.delta, bundle, cfg.tolerances)
    rep.inputs["body_spec"] = args.body
    out.append(rep)


def verify_hessian(args, cfg, out):
    body = parse_body_spec(args.body, cfg.nodes)
    rep = V.verify_hessian(body, args.stations, cfg.delta, _bundle(body, cfg), cfg.tolerances)
    rep.inputs["body_spec"] = args.body
    out.append(rep)


VERIFIERS = {"bm": verify_bm, "poincare": verify_poincare, "concavity": verify_concavity,
             "variation": verify_variation, "adjoint": verify_adjoint, "hessian": verify_hessian}


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args, cfg):
    e = ell.Ellipsoid(parse_floats(args.axes, (2, 3)))
    inputs = {"axes": list(e.axes)}
    t0 = time.perf_counter()
    quad = ell.S2Quadrature(args.polar, args.azimuthal)
    if args.check == "torsion":
        rel = cfg.tolerances["oracle_torsion"]["violation"]
        T = ell.ellipsoid_T(e)
        Tq = ell.mass_quadrature_T(e, quad)
        rep = V._agreement("oracle_torsion", inputs, T, Tq, abs(T), rel,
                           {"T_closed_form": T, "T_quadrature": Tq, "C": e.C})
    elif args.check == "theorem":
        xi0 = np.asarray(parse_floats(args.xi0, e.n) if args.xi0 else np.eye(e.n)[0])
        xi0 = xi0 / np.linalg.norm(xi0)
        rel, rel_eq = _tolerance(cfg, "theorem_3d")
        rep = ell.verify_theorem_3d(e, xi0, quad, rel_equality=rel_eq, rel_tol=rel)
    elif args.check == "homothety":
        rep = ell.homothety_path_3d(e, args.scale, args.samples,
                                    cfg.tolerances["homothety"]["violation"])
    else:
        if e.n == 3:
            dirs = quad.nodes
        else:
            th = 2 * np.pi * np.arange(cfg.nodes) / cfg.nodes
            dirs = np.column_stack([np.cos(th), np.sin(th)])
        res = ell.hessian_identity_residuals(e, dirs)
        worst = float(res.max())
        rep = V._agreement("oracle_hessian", inputs, worst, 0.0, 1.0,
                           cfg.tolerances["oracle_hessian"]["violation"],
                           {"max_per_identity": res.max(axis=0), "nodes": len(dirs)})
    rep.timing_ms = 1e3 * (time.perf_counter() - t0)
    return [rep]


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a nested subparser from resetting options given at an outer level
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--grid", type=parse_length,
                        help="grid spacing, e.g. 1/128 (default 1/128)")
    common.add_argument("--nodes", type=int, help="boundary nodes N (default 256)")
    common.add_argument("--ladder", type=parse_ladder,
                        help="decreasing grid spacings for a convergence study, e.g. 1/32,1/64,1/128")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol-file", help="JSON tolerance table overriding defaults")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"))

    ap = argparse.ArgumentParser(prog="torsionlab",
                                 description="Torsional rigidity of planar convex bodies and checks "
                                             "of its Brunn-Minkowski and Poincare-type inequalities.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("body", parents=[common], help="validate or describe a body file")
    p.add_argument("action", choices=("validate", "show"))
    p.add_argument("file")

    p = sub.add_parser("torsion", parents=[common], help="torsional rigidity by three routes")
    p.add_argument("body_spec", nargs="?", default=None, metavar="BODY")
    p.add_argument("--body", dest="body_opt", default=None)

    p = sub.add_parser("verify", parents=[common], help="run an inequality or identity check")
    vs = p.add_subparsers(dest="check", required=True)
    q = vs.add_parser("bm", parents=[common])
    q.add_argument("--random-pairs", type=int, default=5)
    q.add_argument("--pair", nargs=2, metavar=("A", "B"))
    q.add_argument("--samples", type=int, default=11)
    q = vs.add_parser("poincare", parents=[common])
    q.add_argument("--body", required=True)
    q.add_argument("--psi", action="append", help="test function, repeatable")
    q.add_argument("--random-psi", type=int, default=5)
    q.add_argument("--form", choices=("boundary", "spherical"), default="boundary")
    q = vs.add_parser("concavity", parents=[common])
    q.add_argument("--body", required=True)
    q.add_argument("--phi", action="append", required=True)
    q.add_argument("--samples", type=int, default=11)
    q.add_argument("--t-max", type=float, default=None)
    q = vs.add_parser("variation", parents=[common])
    q.add_argument("--body", required=True)
    q.add_argument("--phi", action="append", required=True)
    q.add_argument("--order", type=int, choices=(1, 2), default=2)
    q = vs.add_parser("adjoint", parents=[common])
    q.add_argument("--body", required=True)
    q.add_argument("--phi1", required=True)
    q.add_argument("--phi2", required=True)
    q = vs.add_parser("hessian", parents=[common])
    q.add_argument("--body", required=True)
    q.add_argument("--stations", type=int, default=16)

    p = sub.add_parser("oracle", parents=[common], help="closed-form ellipse/ellipsoid checks")
    p.add_argument("shape", choices=("ellipsoid",))
    p.add_argument("--axes", required=True, help="2 or 3 semi-axes, e.g. 1.5,1,0.75")
    p.add_argument("--check", choices=("torsion", "theorem", "homothety", "hessian"),
                   default="torsion")
    p.add_argument("--xi0", default=None, help="translation direction for --check theorem")
    p.add_argument("--scale", type=float, default=2.0, help="homothety factor")
    p.add_argument("--samples", type=int, default=11)
    p.add_argument("--polar", type=int, default=64)
    p.add_argument("--azimuthal", type=int, default=128)
    return ap


def make_config(args) -> Config:
    opts = vars(args)
    kw = {}
    if "grid" in opts:
        kw["delta"] = opts["grid"]
    for name in ("ladder", "nodes", "seed", "out", "format"):
        if name in opts:
            kw[name] = opts[name]
    if "tol_file" in opts:
        kw["tolerances"] = load_tolerances(opts["tol_file"])
    return Config(**kw)


def run(argv=None):
    """Parse, execute and return (CampaignResult, exit code, config)."""
    args = build_parser().parse_args(argv)
    cfg = make_config(args)
    result = CampaignResult({"argv": list(argv) if argv is not None else sys.argv[1:],
                             **cfg.echo()})
    if args.command == "body":
        result.reports.extend(cmd_body(args, cfg))
    elif args.command == "torsion":
        spec = args.body_opt or args.body_spec
        if spec is None:
            raise ParseError("torsion needs a body (positional or --body)")
        args.body_spec = spec
        result.reports.extend(cmd_torsion(args, cfg))
    elif args.command == "verify":
        try:
            VERIFIERS[args.check](args, cfg, result.reports)
        except (ParseError, NotConvex, GridTooCoarse, ValueError):
            raise
        except TorsionLabError as exc:
            result.errors.append({"check": args.check, "error": type(exc).__name__,
                                  "message": str(exc)})
    else:
        result.reports.extend(cmd_oracle(args, cfg))
    return result, result.exit_code(), cfg


def main(argv=None) -> int:
    try:
        result, code, cfg = run(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    except (ParseError, NotConvex, GridTooCoarse, ValueError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except TorsionLabError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_VIOLATION
    text = result.render(cfg.format)
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
