"""First and second variations of T along support-function perturbations.

In the plane the reverse Weingarten map is the scalar w = h'' + h, its
cofactor is 1 and kappa = 1/w.  Along h_t = h + t phi the second derivative
of f(t) = T(h_t) at t = 0 splits, after integrating the gradient term by
parts, into

    curv = -int |grad U|^2 phi^2
    udot = -2 int phi |grad U| w (grad Udot . nu)
    four = 4 int phi^2 |grad U| w
    grad = -int |grad U|^2 phi'^2

(all against d theta), where Udot is harmonic with boundary values
|grad U| phi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LeavesConvexCone
from .fields import BoundaryField, TestFunction
from .poisson import boundary_normal_gradient, interior_hessian
from .support import ConvexBody2D, validate_body
from .torsion import DEFAULT_DELTA, TorsionBundle, compute_bundle

FD_STEP_FIRST = 1e-3
FD_STEP_SECOND = 5e-3


def perturbed_body(body: ConvexBody2D, phi: TestFunction, t: float) -> ConvexBody2D:
    return validate_body(body.support.combine(phi.as_series(), 1.0, t), body.n_nodes)


def admissible_range(body: ConvexBody2D, phi: TestFunction, eps_rel: float = 1e-8):
    """Open interval of t for which w + t (phi'' + phi) stays positive."""
    th = 2 * np.pi * np.arange(4 * body.n_nodes) / (4 * body.n_nodes)
    s = phi.as_series()
    w = body.radius_of_curvature(th) - eps_rel * body.c0
    dw = s(th, 2) + s(th)
    with np.errstate(divide="ignore"):
        hi = np.min(np.where(dw < 0, -w / dw, np.inf))
        lo = np.max(np.where(dw > 0, -w / dw, -np.inf))
    return float(lo), float(hi)


@dataclass(frozen=True, eq=False)
class VariationPath:
    body: ConvexBody2D = field(repr=False)
    phi: TestFunction
    t_samples: np.ndarray
    bundles: tuple = field(repr=False)
    route: str = "mass"

    @property
    def values(self):
        attr = {"mass": "T_mass", "energy": "T_energy", "boundary": "T_boundary"}[self.route]
        return np.array([getattr(b, attr) for b in self.bundles])


def sample_path(body: ConvexBody2D, phi: TestFunction, t_list, delta: float = DEFAULT_DELTA,
                route: str = "mass") -> VariationPath:
    t = np.sort(np.asarray(t_list, dtype=float))
    lo, hi = admissible_range(body, phi)
    if t[0] <= lo or t[-1] >= hi:
        raise LeavesConvexCone(f"h + t phi leaves the convex cone outside t in ({lo:.4g}, {hi:.4g})")
    bundles = tuple(compute_bundle(perturbed_body(body, phi, ti), delta) for ti in t)
    return VariationPath(body, phi, t, bundles, route)


def fd_first_variation(body, phi, delta=DEFAULT_DELTA, eps=None, route="mass") -> float:
    eps = FD_STEP_FIRST * body.c0 if eps is None else eps
    f = sample_path(body, phi, [-eps, eps], delta, route).values
    return float((f[1] - f[0]) / (2 * eps))


def fd_second_variation(body, phi, delta=DEFAULT_DELTA, eps=None, route="mass"):
    """Central second difference; returns (f'', f(0))."""
    eps = FD_STEP_SECOND * body.c0 if eps is None else eps
    f = sample_path(body, phi, [-eps, 0.0, eps], delta, route).values
    return float((f[2] - 2 * f[1] + f[0]) / eps**2), float(f[1])


def harmonic_normal_derivative(bundle: TorsionBundle, data: BoundaryField) -> BoundaryField:
    """grad Udot . nu on the boundary nodes for Delta Udot = 0, Udot = data."""
    sol = bundle.solver.solve(0.0, data)
    body = bundle.body
    return BoundaryField(boundary_normal_gradient(sol, body, body.theta))


@dataclass(frozen=True)
class SecondVariationBreakdown:
    term_curv: float
    term_udot: float
    term_four: float
    term_grad: float
    term_udot_sq: float  # |grad U|^2 variant of the udot term, diagnostic only

    @property
    def total(self) -> float:
        return self.term_curv + self.term_udot + self.term_four + self.term_grad

    @property
    def total_sq_variant(self) -> float:
        return self.term_curv + self.term_udot_sq + self.term_four + self.term_grad

    def as_dict(self) -> dict:
        return {"term_curv": self.term_curv, "term_udot": self.term_udot,
                "term_four": self.term_four, "term_grad": self.term_grad,
                "total": self.total, "term_udot_sq": self.term_udot_sq,
                "total_sq_variant": self.total_sq_variant}


def _quad(v):
    return float(np.sum(v)) * 2 * np.pi / len(v)


def second_variation_terms(bundle: TorsionBundle, phi_vals, dphi_vals) -> SecondVariationBreakdown:
    """Assemble the four terms from sampled phi and phi' on the body nodes."""
    body = bundle.body
    g = bundle.gradmag.values
    phi_vals = np.asarray(phi_vals, dtype=float)
    dn = harmonic_normal_derivative(bundle, BoundaryField(g * phi_vals)).values
    w = body.w
    return SecondVariationBreakdown(
        term_curv=-_quad(g**2 * phi_vals**2),
        term_udot=-2 * _quad(phi_vals * g * w * dn),
        term_four=4 * _quad(phi_vals**2 * g * w),
        term_grad=-_quad(g**2 * np.asarray(dphi_vals) ** 2),
        term_udot_sq=-2 * _quad(phi_vals * g**2 * w * dn),
    )


def second_variation(body: ConvexBody2D, phi: TestFunction, delta: float = DEFAULT_DELTA,
                     bundle: TorsionBundle | None = None) -> SecondVariationBreakdown:
    bundle = bundle or compute_bundle(body, delta)
    n = body.n_nodes
    return second_variation_terms(bundle, phi.sample(n).values, phi.sample(n, 1).values)


@dataclass(frozen=True)
class AdjointnessCheck:
    A12: float
    A21: float
    A11: float
    A22: float

    @property
    def scale(self) -> float:
        return float(np.sqrt(abs(self.A11 * self.A22)))

    @property
    def gap(self) -> float:
        den = max(abs(self.A12), abs(self.A21), self.scale)
        return abs(self.A12 - self.A21) / den if den > 0 else 0.0


def selfadjointness_check(body: ConvexBody2D, phi1: TestFunction, phi2: TestFunction,
                          delta: float = DEFAULT_DELTA,
                          bundle: TorsionBundle | None = None) -> AdjointnessCheck:
    """Compare int |grad U| phi_1 (grad Udot_2 . nu) ds with its swap."""
    bundle = bundle or compute_bundle(body, delta)
    n = body.n_nodes
    g = bundle.gradmag.values
    p1, p2 = phi1.sample(n).values, phi2.sample(n).values
    dn1 = harmonic_normal_derivative(bundle, BoundaryField(g * p1)).values
    if phi2 is phi1:
        dn2 = dn1
    else:
        dn2 = harmonic_normal_derivative(bundle, BoundaryField(g * p2)).values
    w = body.w
    pair = lambda a, dn: _quad(g * a * dn * w)
    return AdjointnessCheck(pair(p1, dn2), pair(p2, dn1), pair(p1, dn1), pair(p2, dn2))


HESSIAN_OFFSETS = (3, 4, 5)


def _extrapolation_weights(offsets):
    """Lagrange weights that evaluate the interpolating polynomial at 0."""
    s = np.asarray(offsets, dtype=float)
    w = []
    for i, si in enumerate(s):
        others = np.delete(s, i)
        w.append(np.prod(-others) / np.prod(si - others))
    return np.array(w)


def hessian_boundary_identities(body: ConvexBody2D, theta, delta: float = DEFAULT_DELTA,
                                bundle: TorsionBundle | None = None):
    """Residuals (r1, r2, r3) of the boundary Hessian identities at F(theta).

    r1 = t.H.t + kappa |grad U|, r2 = nu.H.nu - kappa |grad U| + 2,
    r3 = t.H.nu + kappa d|grad U|/dtheta.  The Hessian is sampled at
    p - k delta nu for k in (3, 4, 5) and extrapolated to the boundary.
    Returns (residuals of shape (m, 3), scale of shape (m,)) with
    scale = 2 + kappa |grad U|.
    """
    bundle = bundle or compute_bundle(body, delta)
    sol = bundle.solution
    d = sol.delta
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p = body.boundary_point(theta)
    nu = np.column_stack([np.cos(theta), np.sin(theta)])
    tan = np.column_stack([-np.sin(theta), np.cos(theta)])
    wts = _extrapolation_weights(HESSIAN_OFFSETS)
    H = sum(wk * interior_hessian(sol, p - k * d * nu) for wk, k in zip(wts, HESSIAN_OFFSETS))
    g = bundle.gradmag.interpolate(theta)
    dg = bundle.gradmag.derivative().interpolate(theta)
    kappa = 1.0 / body.radius_of_curvature(theta)
    q = lambda a, b: np.einsum("pi,pij,pj->p", a, H, b)
    res = np.column_stack([q(tan, tan) + kappa * g,
                           q(nu, nu) - kappa * g + 2,
                           q(tan, nu) + kappa * dg])
    return res, 2 + kappa * g
