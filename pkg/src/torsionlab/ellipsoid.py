"""Closed-form torsion on ellipses and ellipsoids.

For semi-axes a_i the torsion function is U = C (1 - sum x_i^2 / a_i^2) with
C = 1 / sum(1 / a_i^2); its Hessian is the constant -2 C diag(1 / a_i^2).
With h(xi) = sqrt(sum a_i^2 xi_i^2) the boundary gradient is |grad U| = 2C/h.
Translations x -> x + t xi0 have the closed-form harmonic derivative
Udot = -grad U . xi0, which is what makes a three-dimensional check of the
boundary inequality possible without a 3D solver.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import QuadratureUnderResolved
from .reports import make_report

FD_STEP = 1e-4


@dataclass(frozen=True)
class Ellipsoid:
    axes: tuple

    def __post_init__(self):
        ax = tuple(float(a) for a in self.axes)
        if len(ax) not in (2, 3) or min(ax) <= 0:
            raise ValueError("need 2 or 3 positive semi-axes")
        object.__setattr__(self, "axes", ax)

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def a(self):
        return np.array(self.axes)

    @property
    def C(self) -> float:
        return 1.0 / float(np.sum(1.0 / self.a**2))

    @property
    def hessian(self):
        return -2 * self.C * np.diag(1.0 / self.a**2)

    @property
    def volume(self) -> float:
        return float(np.prod(self.a)) * (math.pi if self.n == 2 else 4 * math.pi / 3)

    def scaled(self, s: float) -> "Ellipsoid":
        return Ellipsoid(tuple(s * self.a))

    def U(self, x):
        x = np.atleast_2d(x)
        return self.C * (1 - np.sum(x**2 / self.a**2, axis=-1))

    def grad_U(self, x):
        return -2 * self.C * np.atleast_2d(x) / self.a**2

    def support(self, xi):
        return np.sqrt(np.sum((self.a * np.atleast_2d(xi)) ** 2, axis=-1))


def ellipsoid_T(e: Ellipsoid) -> float:
    a = e.a
    if e.n == 2:
        return math.pi * a[0] ** 3 * a[1] ** 3 / (a[0] ** 2 + a[1] ** 2)
    return 16 * math.pi / 15 * float(np.prod(a)) * e.C


def sphere_monomial_integral(p: int, q: int, r: int) -> float:
    """Exact integral of x^p y^q z^r over the unit sphere."""
    if p % 2 or q % 2 or r % 2:
        return 0.0
    b = [(k + 1) / 2 for k in (p, q, r)]
    return 2 * math.exp(sum(gammaln(x) for x in b) - gammaln(sum(b)))


@dataclass(frozen=True, eq=False)
class S2Quadrature:
    """Gauss-Legendre in cos(polar angle) times a uniform azimuthal rule."""

    P: int = 64
    Q: int = 128
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        z, wz = np.polynomial.legendre.leggauss(self.P)
        phi = 2 * np.pi * np.arange(self.Q) / self.Q
        s = np.sqrt(1 - z**2)
        nodes = np.stack([np.outer(s, np.cos(phi)), np.outer(s, np.sin(phi)),
                          np.outer(z, np.ones(self.Q))], -1).reshape(-1, 3)
        w = np.outer(wz, np.full(self.Q, 2 * np.pi / self.Q)).ravel()
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)

    @property
    def exact_degree(self) -> int:
        return min(2 * self.P - 1, self.Q - 1)

    def integrate(self, values) -> float:
        return float(np.sum(self.weights * values))

    def check(self, degree: int, tol: float = 1e-12) -> float:
        """Max error over all monomials of total degree <= ``degree``."""
        if degree > self.exact_degree:
            raise QuadratureUnderResolved(
                f"rule with P={self.P}, Q={self.Q} is exact only to degree {self.exact_degree}")
        powers = [np.vander(c, degree + 1, increasing=True).T for c in self.nodes.T]
        err = 0.0
        for p in range(degree + 1):
            wx = self.weights * powers[0][p]
            for q in range(degree + 1 - p):
                wxy = wx * powers[1][q]
                approx = powers[2][: degree + 1 - p - q] @ wxy
                exact = [sphere_monomial_integral(p, q, r) for r in range(degree + 1 - p - q)]
                err = max(err, float(np.max(np.abs(approx - exact))))
        if err > tol:
            raise QuadratureUnderResolved(f"monomial error {err:.3g} exceeds {tol:.1g}")
        return err


def local_frame(xi, reference=None):
    """Orthonormal tangent frame at each unit vector, shape (m, n-1, n)."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if xi.shape[1] == 2:
        return np.stack([-xi[:, 1], xi[:, 0]], -1)[:, None, :]
    ref = np.array([0.0, 0.0, 1.0]) if reference is None else np.asarray(reference, float)
    ref = np.broadcast_to(ref, xi.shape).copy()
    # rotate the reference away from the poles
    near = np.abs(np.sum(ref * xi, axis=1)) > 0.9 * np.linalg.norm(ref, axis=1)
    ref[near] = np.roll(ref[near], 1, axis=1)
    e1 = np.cross(ref, xi)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(xi, e1)
    return np.stack([e1, e2], axis=1)


def _support_hessian_exact(e: Ellipsoid, xi):
    a2 = e.a**2
    H = np.sqrt(np.sum(a2 * xi**2, axis=1))
    Ax = a2 * xi
    return (np.diag(a2)[None] / H[:, None, None]
            - np.einsum("pi,pj->pij", Ax, Ax) / H[:, None, None] ** 3)


def boundary_quantities(e: Ellipsoid, xi, method: str = "fd", frame=None) -> dict:
    """Boundary data at the points with outer normal ``xi``.

    W = h_ij + h delta_ij in the local frame is obtained by central differences
    of the 1-homogeneous support function (``method="fd"``) or from its exact
    Euclidean Hessian (``method="exact"``).
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    xi = xi / np.linalg.norm(xi, axis=1)[:, None]
    fr = local_frame(xi) if frame is None else frame
    h = e.support(xi)
    F = (e.a**2 * xi) / h[:, None]
    if method == "exact":
        D2 = _support_hessian_exact(e, xi)
        W = np.einsum("pia,pab,pjb->pij", fr, D2, fr)
    elif method == "fd":
        s = FD_STEP
        k = fr.shape[1]
        W = np.empty((len(xi), k, k))
        hs = lambda x: e.support(x)
        for i in range(k):
            W[:, i, i] = (hs(xi + s * fr[:, i]) - 2 * h + hs(xi - s * fr[:, i])) / s**2
            for j in range(i + 1, k):
                pp = hs(xi + s * (fr[:, i] + fr[:, j]))
                pm = hs(xi + s * (fr[:, i] - fr[:, j]))
                mp = hs(xi - s * (fr[:, i] - fr[:, j]))
                mm = hs(xi - s * (fr[:, i] + fr[:, j]))
                W[:, i, j] = W[:, j, i] = (pp - pm - mp + mm) / (4 * s * s)
    else:
        raise ValueError(f"unknown method {method!r}")
    II = np.linalg.inv(W)
    gradmag = 2 * e.C * np.linalg.norm(F / e.a**2, axis=1)
    return {"xi": xi, "frame": fr, "F": F, "h": h, "gradmag": gradmag, "nu": xi,
            "W": W, "II": II, "detW": np.linalg.det(W)}


def cofactor(W):
    if W.shape[-1] == 1:
        return np.ones_like(W)
    c = np.empty_like(W)
    c[:, 0, 0], c[:, 1, 1] = W[:, 1, 1], W[:, 0, 0]
    c[:, 0, 1], c[:, 1, 0] = -W[:, 1, 0], -W[:, 0, 1]
    return c


def hessian_identity_residuals(e: Ellipsoid, xi):
    """Residuals of the three boundary Hessian identities, shape (m, 3).

    Column 0: max_ij |(H e_i).e_j + kappa |grad U| c_ij|
    Column 1: |(H xi).xi - kappa |grad U| tr c + 2|
    Column 2: max_i |(H e_i).xi + kappa sum_j (|grad U|)_j c_ij|
    """
    q = boundary_quantities(e, xi, method="exact")
    fr, W, g = q["frame"], q["W"], q["gradmag"]
    c = cofactor(W)
    kappa = 1.0 / q["detW"]
    Hs = e.hessian
    xi = q["xi"]
    HT = np.einsum("pia,ab,pjb->pij", fr, Hs, fr)
    Hxx = np.einsum("pa,ab,pb->p", xi, Hs, xi)
    Hxt = np.einsum("pia,ab,pb->pi", fr, Hs, xi)
    # tangential derivative of 2C / h along e_j is -2C (F . e_j) / h^2
    dg = -2 * e.C * np.einsum("pja,pa->pj", fr, q["F"]) / q["h"][:, None] ** 2
    r1 = np.abs(HT + (kappa * g)[:, None, None] * c).reshape(len(xi), -1).max(axis=1)
    r2 = np.abs(Hxx - kappa * g * np.trace(c, axis1=1, axis2=2) + 2)
    r3 = np.abs(Hxt + kappa[:, None] * np.einsum("pij,pj->pi", c, dg)).max(axis=1)
    return np.column_stack([r1, r2, r3])


def mass_quadrature_T(e: Ellipsoid, quad: S2Quadrature | None = None, n_r: int = 16) -> float:
    """2 * int U by mapping the unit ball; independent of the closed form."""
    r, wr = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (r + 1)
    wr = 0.5 * wr
    if e.n == 2:
        ang = 2 * np.pi * np.arange(64) / 64
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
        wd = np.full(64, 2 * np.pi / 64)
    else:
        quad = quad or S2Quadrature()
        dirs, wd = quad.nodes, quad.weights
    pts = r[:, None, None] * dirs[None] * e.a
    jac = float(np.prod(e.a)) * r ** (e.n - 1)
    return 2 * float(np.sum((wr * jac)[:, None] * wd[None] * e.U(pts.reshape(-1, e.n)).reshape(len(r), -1)))


def surface_area(e: Ellipsoid, quad: S2Quadrature | None = None, method="fd") -> float:
    """int det W over the sphere (surface area measure)."""
    if e.n == 2:
        th = 2 * np.pi * np.arange(512) / 512
        q = boundary_quantities(e, np.column_stack([np.cos(th), np.sin(th)]), method)
        return float(np.sum(q["detW"])) * 2 * np.pi / 512
    quad = quad or S2Quadrature()
    q = boundary_quantities(e, quad.nodes, method)
    return quad.integrate(q["detW"])


def parametric_surface_area(e: Ellipsoid, n: int = 400) -> float:
    """Independent area/perimeter from the standard parameterisation."""
    a = e.a
    v = 2 * np.pi * np.arange(2 * n) / (2 * n)
    if e.n == 2:
        return float(np.sum(np.hypot(a[0] * np.sin(v), a[1] * np.cos(v)))) * np.pi / n
    u, wu = np.polynomial.legendre.leggauss(n)
    u = 0.5 * np.pi * (u + 1)
    wu = 0.5 * np.pi * wu
    U, V = np.meshgrid(u, v, indexing="ij")
    Xu = np.stack([a[0] * np.cos(U) * np.cos(V), a[1] * np.cos(U) * np.sin(V), -a[2] * np.sin(U)], -1)
    Xv = np.stack([-a[0] * np.sin(U) * np.sin(V), a[1] * np.sin(U) * np.cos(V), 0 * U], -1)
    dA = np.linalg.norm(np.cross(Xu, Xv), axis=-1)
    return float(np.sum(wu[:, None] * dA)) * np.pi / n


def theorem_sides(e: Ellipsoid, xi0, quad: S2Quadrature | None = None, method: str = "fd") -> dict:
    """Both sides of the boundary inequality for psi = nu . xi0."""
    xi0 = np.asarray(xi0, dtype=float)
    if abs(np.linalg.norm(xi0) - 1) > 1e-12:
        raise ValueError("xi0 must be a unit vector")
    if e.n == 2:
        th = 2 * np.pi * np.arange(512) / 512
        dirs = np.column_stack([np.cos(th), np.sin(th)])
        wq = np.full(512, 2 * np.pi / 512)
    else:
        quad = quad or S2Quadrature()
        dirs, wq = quad.nodes, quad.weights
    q = boundary_quantities(e, dirs, method)
    g, II, fr = q["gradmag"], q["II"], q["frame"]
    dH = wq * q["detW"]
    psi = dirs @ xi0
    dphi = fr @ xi0  # spherical gradient of xi . xi0 in the frame
    grad_surf = np.einsum("pij,pj->pi", II, dphi)
    quad_form = np.einsum("pi,pi->p", np.linalg.solve(II, grad_surf[..., None])[..., 0], grad_surf)
    dudot_n = np.einsum("pa,a->p", dirs, -e.hessian @ xi0)
    trII = np.trace(II, axis1=1, axis2=2)
    terms = {
        "curv": -np.sum(dH * trII * psi**2 * g**2),
        "udot": -2 * np.sum(dH * psi * dudot_n * g),
        "four": 4 * np.sum(dH * psi**2 * g),
    }
    return {"lhs": float(sum(terms.values())), "rhs": float(np.sum(dH * quad_form * g**2)),
            "terms": {k: float(v) for k, v in terms.items()},
            "constraint": float(np.sum(dH * psi * g**2)),
            "constraint_scale": float(np.sum(dH * np.abs(psi) * g**2))}


def verify_theorem_3d(e: Ellipsoid, xi0, quad: S2Quadrature | None = None,
                      rel_equality: float = 1e-6, rel_tol: float = 1e-6, check_degree: int = 16):
    t0 = time.perf_counter()
    quad = quad or S2Quadrature()
    if e.n == 3:
        quad.check(check_degree)
    s = theorem_sides(e, xi0, quad)
    scale = abs(s["lhs"]) + abs(s["rhs"])
    rep = make_report(
        "theorem_3d" if e.n == 3 else "theorem_2d_closed_form",
        {"axes": list(e.axes), "xi0": list(np.asarray(xi0, float)), "P": quad.P, "Q": quad.Q},
        s["lhs"], s["rhs"], scale=scale, rel_tol=rel_tol, rel_equality=rel_equality,
        diagnostics={"terms": s["terms"], "constraint": s["constraint"],
                     "constraint_rel": s["constraint"] / s["constraint_scale"]})
    rep.timing_ms = 1e3 * (time.perf_counter() - t0)
    return rep


def homothety_path_3d(e: Ellipsoid, a: float, m: int = 11, tol: float = 1e-10):
    """T^(1/(n+2)) along (1-t) E + t a E, compared with its chord."""
    if not a > 0:
        raise ValueError("scale factor must be positive")
    t = np.linspace(0, 1, m)
    p = 1.0 / (e.n + 2)
    vals = np.array([ellipsoid_T(e.scaled(1 - ti + ti * a)) ** p for ti in t])
    chord = (1 - t) * vals[0] + t * vals[-1]
    dev = float(np.max(np.abs(vals - chord)))
    return make_report("homothety_path", {"axes": list(e.axes), "a": a, "m": m},
                       float(np.min(chord - vals)), 0.0, gap=float(np.min(vals - chord)),
                       scale=vals[0], rel_tol=tol, rel_equality=tol,
                       diagnostics={"max_deviation": dev, "relative_deviation": dev / vals[0],
                                    "endpoints": [float(vals[0]), float(vals[-1])]})
