"""Torsional rigidity, the torsional measure and the first variation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CrossCheckFailed
from .fields import BoundaryField, TestFunction
from .poisson import (DirichletSolver, FieldSolution, boundary_normal_gradient,
                      domain_quadrature)
from .support import ConvexBody2D

DEFAULT_DELTA = 1 / 128
CROSS_CHECK_TOL = 0.01
N_RHO = 48


@dataclass(frozen=True, eq=False)
class TorsionBundle:
    """Torsion function of one body with its boundary gradient and three T values.

    ``T_energy`` integrates |grad U|^2 over the body, ``T_mass`` is 2 * int U
    (integration by parts), ``T_boundary`` is (1/4) int h |grad U|^2 w dtheta.
    """

    body: ConvexBody2D = field(repr=False)
    solution: FieldSolution = field(repr=False)
    gradmag: BoundaryField = field(repr=False)
    T_energy: float
    T_mass: float
    T_boundary: float
    solver: DirichletSolver = field(repr=False, default=None)

    @property
    def T(self) -> float:
        return self.T_energy

    @property
    def delta(self) -> float:
        return self.solution.delta

    @property
    def spread(self) -> float:
        t = np.array([self.T_energy, self.T_mass, self.T_boundary])
        return float((t.max() - t.min()) / np.abs(t).max())

    def rayleigh_quotient(self) -> float:
        """int |grad U|^2 / (int U)^2, which equals 4 / T."""
        return self.T_energy / (0.5 * self.T_mass) ** 2

    def report(self) -> dict:
        g = self.gradmag.values
        return {"T_energy": self.T_energy, "T_mass": self.T_mass,
                "T_boundary": self.T_boundary, "delta": self.delta,
                "N": self.body.n_nodes, "residual": self.solution.residual_norm,
                "gradmag_min": float(g.min()), "gradmag_max": float(g.max()),
                "interior_nodes": self.solution.grid.n_interior}


def gradient_magnitude(sol: FieldSolution, body: ConvexBody2D) -> BoundaryField:
    """|grad U| on the boundary nodes; equals -dU/dnu for the torsion problem."""
    return BoundaryField(-boundary_normal_gradient(sol, body, body.theta))


def torsion_mass(sol: FieldSolution, body: ConvexBody2D, n_rho: int = N_RHO) -> float:
    pts, wts = domain_quadrature(body, n_rho=n_rho)
    return 2.0 * float(np.sum(wts * sol.interpolate(pts)))


def torsion_energy(sol: FieldSolution, body: ConvexBody2D, n_rho: int = N_RHO) -> float:
    pts, wts = domain_quadrature(body, n_rho=n_rho)
    gx = sol.interpolate(pts, 1, 0)
    gy = sol.interpolate(pts, 0, 1)
    return float(np.sum(wts * (gx * gx + gy * gy)))


def torsion_boundary(body: ConvexBody2D, gradmag: BoundaryField) -> float:
    return BoundaryField(body.h * gradmag.values**2 * body.w).integrate() / 4.0


def compute_bundle(body: ConvexBody2D, delta: float = DEFAULT_DELTA,
                   tol: float = CROSS_CHECK_TOL, solver: DirichletSolver | None = None) -> TorsionBundle:
    solver = solver or DirichletSolver(body, delta)
    sol = solver.solve(-2.0)
    gm = gradient_magnitude(sol, body)
    bundle = TorsionBundle(body, sol, gm, torsion_energy(sol, body), torsion_mass(sol, body),
                           torsion_boundary(body, gm), solver)
    if bundle.spread > tol:
        raise CrossCheckFailed(
            f"T routes disagree by {bundle.spread:.3%}: energy={bundle.T_energy:.6g}, "
            f"mass={bundle.T_mass:.6g}, boundary={bundle.T_boundary:.6g}")
    return bundle


def torsional_rigidity(body: ConvexBody2D, delta: float = DEFAULT_DELTA) -> float:
    """T via 2 * int U only; the cheapest route, used along variation paths."""
    sol = DirichletSolver(body, delta).solve(-2.0)
    return torsion_mass(sol, body)


def torsional_measure_density(bundle: TorsionBundle) -> BoundaryField:
    """Density of the torsional measure against d theta: |grad U|^2 w."""
    return BoundaryField(bundle.gradmag.values**2 * bundle.body.w)


def first_variation(bundle: TorsionBundle, phi: TestFunction) -> float:
    dens = torsional_measure_density(bundle)
    return BoundaryField(phi.sample(bundle.body.n_nodes).values * dens.values).integrate()


def measure_centroid(bundle: TorsionBundle):
    dens = torsional_measure_density(bundle).values
    th = bundle.body.theta
    wq = 2 * np.pi / len(th)
    return np.array([np.sum(np.cos(th) * dens), np.sum(np.sin(th) * dens)]) * wq


def project_mean_zero(bundle: TorsionBundle, psi) -> BoundaryField:
    """psi minus its mean against the torsional measure."""
    vals = psi.sample(bundle.body.n_nodes).values if isinstance(psi, TestFunction) \
        else np.asarray(getattr(psi, "values", psi), dtype=float)
    dens = torsional_measure_density(bundle).values
    mean = np.sum(vals * dens) / np.sum(dens)
    return BoundaryField(vals - mean)


ROUNDOFF_FLOOR = 1e-10


def convergence_study(body: ConvexBody2D, ladder, reference: float | None = None,
                      route: str = "T_mass") -> dict:
    """T on a decreasing ladder of grid spacings with observed orders.

    With a reference value the orders come from the errors; otherwise from
    successive differences (three or more levels).  Errors already at the
    round-off floor carry no order information and are flagged instead.
    """
    ladder = [float(d) for d in ladder]
    bundles = [compute_bundle(body, d) for d in ladder]
    T = np.array([getattr(b, route) for b in bundles])
    out = {"delta": ladder, "T": T.tolist(),
           "routes": [{"T_energy": b.T_energy, "T_mass": b.T_mass, "T_boundary": b.T_boundary}
                      for b in bundles]}
    if reference is not None:
        err = np.abs(T - reference)
        pairs = [(err[i], err[i + 1], ladder[i] / ladder[i + 1]) for i in range(len(T) - 1)]
        out["reference"] = reference
        out["errors"] = err.tolist()
    else:
        d = np.abs(np.diff(T))
        pairs = [(d[i], d[i + 1], ladder[i + 1] / ladder[i + 2]) for i in range(len(d) - 1)]
    floor = ROUNDOFF_FLOOR * abs(T[-1])
    out["orders"] = [float(np.log(a / b) / np.log(r)) if min(a, b) > floor else None
                     for a, b, r in pairs]
    out["at_roundoff_floor"] = bool(all(max(a, b) <= floor for a, b, _ in pairs))
    return out
