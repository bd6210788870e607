"""End-to-end checks of the Brunn-Minkowski, concavity and Poincare-type inequalities.

Every check returns a :class:`VerificationReport`.  Thresholds come from a
tolerance table (``DEFAULT_TOLERANCES``) so a campaign can override them from
a file instead of editing code.
"""

from __future__ import annotations

import copy
import functools
import time

import numpy as np

from .errors import ConstraintNotMet, CrossCheckFailed
from .fields import BoundaryField, TestFunction
from .reports import EQUALITY, HOLDS, VIOLATED, VerificationReport, make_report
from .support import ConvexBody2D, is_homothetic, minkowski_combine, volume
from .torsion import (DEFAULT_DELTA, TorsionBundle, compute_bundle, first_variation,
                      project_mean_zero, torsional_measure_density, torsional_rigidity)
from .variation import (admissible_range, fd_first_variation, fd_second_variation,
                        harmonic_normal_derivative, hessian_boundary_identities,
                        sample_path, second_variation, selfadjointness_check)

# relative thresholds; "violation" is the slack below zero, "equality" the band around zero
DEFAULT_TOLERANCES = {
    "bm_volume": {"violation": 1e-10, "equality": 1e-10},
    "bm_torsion": {"violation": 1e-3, "equality": 1e-5},
    "concavity": {"violation": 1e-4, "equality": 1e-4},
    "poincare": {"violation": 1e-2, "equality": 2e-2},
    "form_agreement": {"violation": 1e-6, "equality": 1e-6},
    "constraint": {"violation": 1e-8, "equality": 1e-8},
    "first_variation": {"violation": 1e-2, "equality": 1e-2},
    "second_variation": {"violation": 5e-2, "equality": 5e-2},
    "adjointness": {"violation": 1e-2, "equality": 1e-2},
    "hessian": {"violation": 5e-2, "equality": 5e-2},
    "torsion": {"violation": 5e-3, "equality": 5e-3},
    "oracle_torsion": {"violation": 1e-3, "equality": 1e-3},
    "oracle_hessian": {"violation": 1e-8, "equality": 1e-8},
    "theorem_3d": {"violation": 1e-2, "equality": 1e-2},
    "homothety": {"violation": 1e-10, "equality": 1e-10},
}


def merge_tolerances(override: dict | None = None) -> dict:
    tol = copy.deepcopy(DEFAULT_TOLERANCES)
    for name, vals in (override or {}).items():
        if name not in tol:
            raise KeyError(f"unknown tolerance entry {name!r}")
        for k, v in vals.items():
            if k not in ("violation", "equality") or not float(v) > 0:
                raise ValueError(f"tolerance {name}.{k} must be a positive number")
            tol[name][k] = float(v)
    return tol


def _tol(tolerances, name):
    t = (tolerances or DEFAULT_TOLERANCES)[name]
    return t["violation"], t["equality"]


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        rep = fn(*args, **kwargs)
        rep.timing_ms = 1e3 * (time.perf_counter() - t0)
        return rep
    return wrapper


def _agreement(check, inputs, value, reference, scale, rel, diagnostics):
    """Two-sided comparison: equality when |reference - value| <= rel * scale."""
    gap = float(reference - value)
    tol = rel * scale
    verdict = EQUALITY if abs(gap) <= tol else VIOLATED
    return VerificationReport(check, inputs, float(value), float(reference), gap, tol, tol,
                              verdict, diagnostics)


def _body_id(body: ConvexBody2D) -> dict:
    s = body.support
    return {"c0": s.c0, "cos": list(s.cos_coeffs), "sin": list(s.sin_coeffs), "N": body.n_nodes}


def _samples(m):
    if m < 3:
        raise ValueError("need at least 3 samples")
    return np.linspace(0.0, 1.0, m)


# ---------------------------------------------------------------------------
# Brunn-Minkowski along Minkowski combinations


@_timed
def verify_bm_volume(A: ConvexBody2D, B: ConvexBody2D, m: int = 11, tolerances=None):
    t = _samples(m)
    va, vb = volume(A), volume(B)
    vals = np.array([volume(minkowski_combine(A, B, 1 - ti, ti)) for ti in t]) ** 0.5
    chord = (1 - t) * va**0.5 + t * vb**0.5
    k = 1 + int(np.argmin((vals - chord)[1:-1]))  # endpoints agree by construction
    rel_tol, rel_eq = _tol(tolerances, "bm_volume")
    return make_report(
        "bm_volume", {"A": _body_id(A), "B": _body_id(B), "m": m}, chord[k], vals[k],
        scale=1.0, rel_tol=rel_tol, rel_equality=rel_eq,
        diagnostics={"t": t, "root_area": vals, "chord": chord,
                     "max_chord_deviation": float(np.max(np.abs(vals - chord)))})


def torsion_path(A: ConvexBody2D, B: ConvexBody2D, t, delta: float = DEFAULT_DELTA):
    return np.array([torsional_rigidity(minkowski_combine(A, B, 1 - ti, ti), delta) for ti in t])


@_timed
def verify_bm_torsion(A: ConvexBody2D, B: ConvexBody2D, m: int = 11,
                      delta: float = DEFAULT_DELTA, tolerances=None):
    """T^(1/4) along (1-t) A + t B against its chord."""
    t = _samples(m)
    T = torsion_path(A, B, t, delta)
    r = T**0.25
    chord = (1 - t) * r[0] + t * r[-1]
    dev = r - chord
    k = 1 + int(np.argmin(dev[1:-1]))
    d2 = r[2:] - 2 * r[1:-1] + r[:-2]
    rel_tol, rel_eq = _tol(tolerances, "bm_torsion")
    return make_report(
        "bm_torsion", {"A": _body_id(A), "B": _body_id(B), "m": m, "delta": delta},
        chord[k], r[k], scale=r[0], rel_tol=rel_tol, rel_equality=rel_eq,
        diagnostics={"t": t, "T": T, "max_chord_deviation": float(np.max(np.abs(dev))),
                     "relative_chord_deviation": float(np.max(np.abs(dev)) / r[0]),
                     "max_second_difference": float(d2.max()),
                     "homothetic": bool(is_homothetic(A, B)[0])})


def default_t_max(body: ConvexBody2D, phi: TestFunction) -> float:
    lo, hi = admissible_range(body, phi)
    amp = float(np.max(np.abs(phi.sample(body.n_nodes).values)))
    cap = 0.25 * body.c0 / amp if amp > 0 else np.inf
    return float(min(0.5 * min(-lo, hi), cap))


@_timed
def concavity_check(body: ConvexBody2D, phi: TestFunction, m: int = 11,
                    delta: float = DEFAULT_DELTA, t_max: float | None = None, tolerances=None):
    """Second differences of T(h + t phi)^(1/4) on a symmetric t grid."""
    t_max = default_t_max(body, phi) if t_max is None else t_max
    t = np.linspace(-t_max, t_max, m)
    path = sample_path(body, phi, t, delta, route="mass")
    r = path.values**0.25
    d2 = r[2:] - 2 * r[1:-1] + r[:-2]
    k = int(np.argmax(d2))
    mid = m // 2
    rel_tol, rel_eq = _tol(tolerances, "concavity")
    return make_report(
        "concavity", {"body": _body_id(body), "phi": phi.describe(), "m": m, "delta": delta,
                      "t_max": t_max},
        d2[k], 0.0, scale=r[mid], rel_tol=rel_tol, rel_equality=rel_eq,
        diagnostics={"t": t, "T": path.values, "second_differences": d2})


# ---------------------------------------------------------------------------
# Poincare-type inequality


def _psi_samples(psi, n):
    if isinstance(psi, TestFunction):
        return psi.sample(n).values, psi.sample(n, 1).values
    f = psi if isinstance(psi, BoundaryField) else BoundaryField(np.asarray(psi, dtype=float))
    if f.n != n:
        raise ValueError(f"psi sampled on {f.n} nodes, body has {n}")
    return f.values, f.derivative().values


def _describe(psi):
    return psi.describe() if isinstance(psi, TestFunction) else "sampled"


def _prepare(bundle: TorsionBundle, psi, project: bool):
    n = bundle.body.n_nodes
    vals, dvals = _psi_samples(psi, n)
    if project:
        vals = project_mean_zero(bundle, vals).values
    dens = torsional_measure_density(bundle).values
    mass = float(np.sum(np.abs(vals) * dens))
    resid = abs(float(np.sum(vals * dens))) / mass if mass > 0 else 0.0
    return vals, dvals, resid


def _quad(v):
    return float(np.sum(v)) * 2 * np.pi / len(v)


def _poincare_parts(bundle: TorsionBundle, vals, dvals, dn, form: str):
    g, w = bundle.gradmag.values, bundle.body.w
    if form == "boundary":
        kappa = 1.0 / w
        dpsi_s = dvals / w
        terms = {"curv": -_quad(kappa * vals**2 * g**2 * w),
                 "udot": -2 * _quad(vals * dn * g * w),
                 "four": 4 * _quad(vals**2 * g * w)}
        rhs = _quad(dpsi_s**2 * g**2 * w / kappa)
    else:
        terms = {"curv": -_quad(g**2 * vals**2),
                 "udot": -2 * _quad(vals * w * g * dn),
                 "four": 4 * _quad(vals**2 * w * g)}
        rhs = _quad(g**2 * dvals**2)
    return terms, rhs


def poincare_sides(bundle: TorsionBundle, psi, form: str = "boundary", project: bool = True):
    """lhs, rhs and diagnostics of the Poincare-type inequality for one psi."""
    if form not in ("boundary", "spherical"):
        raise ValueError(f"unknown form {form!r}")
    vals, dvals, resid = _prepare(bundle, psi, project)
    ctol = DEFAULT_TOLERANCES["constraint"]["violation"]
    if resid > ctol:
        raise ConstraintNotMet(f"psi has weighted mean residual {resid:.3g} > {ctol:.1g}")
    g, w = bundle.gradmag.values, bundle.body.w
    dn = harmonic_normal_derivative(bundle, BoundaryField(g * vals)).values
    terms, rhs = _poincare_parts(bundle, vals, dvals, dn, form)
    lhs = sum(terms.values())
    udot_sq = -2 * _quad(vals * w * g**2 * dn)
    lhs_sq = lhs - terms["udot"] + udot_sq
    return {"lhs": lhs, "rhs": rhs, "terms": terms, "constraint_residual": resid,
            "lhs_power2": lhs_sq, "gap_power2": rhs - lhs_sq, "vals": vals, "dvals": dvals,
            "dn": dn}


def _poincare_report(check, bundle, psi, sides, tolerances, extra=None):
    rel_tol, rel_eq = _tol(tolerances, "poincare")
    scale = abs(sides["lhs"]) + abs(sides["rhs"])
    diag = {"terms": sides["terms"], "constraint_residual": sides["constraint_residual"],
            "lhs_power2": sides["lhs_power2"], "gap_power2": sides["gap_power2"],
            "T": bundle.T, "T_spread": bundle.spread}
    diag.update(extra or {})
    return make_report(check, {"body": _body_id(bundle.body), "psi": _describe(psi),
                               "delta": bundle.delta},
                       sides["lhs"], sides["rhs"], scale=scale, rel_tol=rel_tol,
                       rel_equality=rel_eq, diagnostics=diag)


@_timed
def verify_poincare_boundary(body: ConvexBody2D, psi, delta: float = DEFAULT_DELTA,
                             bundle: TorsionBundle | None = None, project: bool = True,
                             tolerances=None):
    bundle = bundle or compute_bundle(body, delta)
    sides = poincare_sides(bundle, psi, "boundary", project)
    return _poincare_report("poincare_boundary", bundle, psi, sides, tolerances)


@_timed
def verify_poincare_spherical(body: ConvexBody2D, phi, delta: float = DEFAULT_DELTA,
                              bundle: TorsionBundle | None = None, project: bool = True,
                              tolerances=None):
    """Spherical form, cross-checked against the boundary form on the same fields."""
    bundle = bundle or compute_bundle(body, delta)
    sph = poincare_sides(bundle, phi, "spherical", project)
    bnd_terms, bnd_rhs = _poincare_parts(bundle, sph["vals"], sph["dvals"], sph["dn"], "boundary")
    bnd_lhs = sum(bnd_terms.values())
    scale = abs(sph["lhs"]) + abs(sph["rhs"])
    diff = max(abs(sph["lhs"] - bnd_lhs), abs(sph["rhs"] - bnd_rhs))
    lim = _tol(tolerances, "form_agreement")[0] * scale
    if diff > lim:
        raise CrossCheckFailed(f"spherical and boundary forms differ by {diff:.3g} (> {lim:.3g})")
    return _poincare_report("poincare_spherical", bundle, phi, sph, tolerances,
                            {"boundary_lhs": bnd_lhs, "boundary_rhs": bnd_rhs,
                             "form_difference": diff})


# ---------------------------------------------------------------------------
# equality cases


def equality_diagnostics(A: ConvexBody2D, B: ConvexBody2D, tol: float = 1e-9):
    """Homothety test: does h_B - beta h_A carry only degree <= 1 modes?"""
    flag, beta, resid = is_homothetic(A, B, tol)
    eq = tol * B.c0
    return VerificationReport(
        "equality_diagnostics", {"A": _body_id(A), "B": _body_id(B)}, resid, 0.0, -resid,
        eq, eq, EQUALITY if flag else HOLDS,
        {"homothetic": flag, "beta": beta, "residual": resid, "bm_equality_expected": flag})


# ---------------------------------------------------------------------------
# formula-vs-oracle checks for the variation engine


@_timed
def verify_first_variation(body: ConvexBody2D, phi: TestFunction, delta: float = DEFAULT_DELTA,
                           bundle: TorsionBundle | None = None, tolerances=None, eps=None):
    bundle = bundle or compute_bundle(body, delta)
    formula = first_variation(bundle, phi)
    fd = fd_first_variation(body, phi, delta, eps)
    scale = max(abs(formula), abs(fd), 1e-3 * bundle.T)
    return _agreement("first_variation", {"body": _body_id(body), "phi": phi.describe(),
                                          "delta": delta},
                      formula, fd, scale, _tol(tolerances, "first_variation")[0],
                      {"T": bundle.T})


@_timed
def verify_second_variation(body: ConvexBody2D, phi: TestFunction, delta: float = DEFAULT_DELTA,
                            bundle: TorsionBundle | None = None, tolerances=None, eps=None):
    bundle = bundle or compute_bundle(body, delta)
    br = second_variation(body, phi, delta, bundle)
    fd, f0 = fd_second_variation(body, phi, delta, eps)
    scale = max(abs(br.total), abs(fd), 1e-3 * f0)
    return _agreement("second_variation", {"body": _body_id(body), "phi": phi.describe(),
                                           "delta": delta},
                      br.total, fd, scale, _tol(tolerances, "second_variation")[0],
                      {"breakdown": br.as_dict(), "T": f0})


@_timed
def verify_adjointness(body: ConvexBody2D, phi1: TestFunction, phi2: TestFunction,
                       delta: float = DEFAULT_DELTA, bundle: TorsionBundle | None = None,
                       tolerances=None):
    chk = selfadjointness_check(body, phi1, phi2, delta, bundle)
    rel = _tol(tolerances, "adjointness")[0]
    den = max(abs(chk.A12), abs(chk.A21), chk.scale)
    return _agreement("adjointness", {"body": _body_id(body), "phi1": phi1.describe(),
                                      "phi2": phi2.describe(), "delta": delta},
                      chk.A12, chk.A21, den, rel,
                      {"A11": chk.A11, "A22": chk.A22, "relative_gap": chk.gap})


@_timed
def verify_hessian(body: ConvexBody2D, n_stations: int = 16, delta: float = DEFAULT_DELTA,
                   bundle: TorsionBundle | None = None, tolerances=None):
    theta = 2 * np.pi * (np.arange(n_stations) + 0.5) / n_stations
    res, scale = hessian_boundary_identities(body, theta, delta, bundle)
    scaled = np.abs(res) / scale[:, None]
    worst = float(scaled.max())
    return _agreement("hessian", {"body": _body_id(body), "stations": n_stations, "delta": delta},
                      worst, 0.0, 1.0, _tol(tolerances, "hessian")[0],
                      {"theta": theta, "scaled_residuals": scaled,
                       "max_per_identity": scaled.max(axis=0)})
