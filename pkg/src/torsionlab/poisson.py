"""Shortley-Weller embedded-boundary Dirichlet solver on a convex body.

Nodes sit at (i*delta, j*delta) for integer i, j, so translating a body by a
multiple of delta shifts the classification pattern exactly.  Grid lines are
cut against the boundary through the support-function parameterisation: on
a row y = y0 the right crossing is F(theta) with theta in (-pi/2, pi/2),
where F_y is strictly increasing (dF_y/dtheta = w cos theta).  The same holds
for the other three half-circles, so every cut point comes with its normal
angle, which is where Dirichlet data is read.

After a solve the nodal field is extended to a band of exterior nodes by
local weighted cubic least squares (interior values plus boundary data), so
that tensor-product cubic interpolation is available everywhere in the body.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import binary_dilation
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree

from .errors import GridTooCoarse, NeedleBody, PointOutsideStencil, SolveFailed, TooCloseToBoundary
from .fields import BoundaryField
from .support import ConvexBody2D, diameter

log = logging.getLogger(__name__)

MARGIN_NODES = 6
BAND_WIDTH = 3.25  # in units of delta
FIT_RADIUS = 4.5  # in units of delta
MAX_ASPECT = 20.0
EXTERIOR, REGULAR, IRREGULAR = 0, 1, 2
ARMS = ("E", "W", "N", "S")


def _monotone_root(fn, lo, hi, target, iters=64):
    """Vectorised bisection for an increasing fn on [lo, hi]."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = fn(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _fx(body, th):
    return body.support(th) * np.cos(th) - body.support(th, 1) * np.sin(th)


def _fy(body, th):
    return body.support(th) * np.sin(th) + body.support(th, 1) * np.cos(th)


def row_crossings(body: ConvexBody2D, y):
    """Left/right boundary crossings of horizontal lines: (xL, xR, thL, thR)."""
    y = np.asarray(y, dtype=float)
    one = np.ones_like(y)
    th_r = _monotone_root(lambda t: _fy(body, t), -np.pi / 2 * one, np.pi / 2 * one, y)
    th_l = _monotone_root(lambda t: -_fy(body, t), np.pi / 2 * one, 1.5 * np.pi * one, -y)
    return _fx(body, th_l), _fx(body, th_r), np.mod(th_l, 2 * np.pi), np.mod(th_r, 2 * np.pi)


def column_crossings(body: ConvexBody2D, x):
    """Bottom/top crossings of vertical lines: (yB, yT, thB, thT)."""
    x = np.asarray(x, dtype=float)
    one = np.ones_like(x)
    th_t = _monotone_root(lambda t: -_fx(body, t), 0 * one, np.pi * one, -x)
    th_b = _monotone_root(lambda t: _fx(body, t), np.pi * one, 2 * np.pi * one, x)
    return _fy(body, th_b), _fy(body, th_t), np.mod(th_b, 2 * np.pi), np.mod(th_t, 2 * np.pi)


@dataclass(frozen=True, eq=False)
class CartesianGrid:
    """Node classification and cut geometry for one (body, delta) pair.

    ``frac[p, a]`` is the length of arm ``a`` (E, W, N, S) of interior node
    ``p`` in units of delta; arms ending on the boundary carry the normal
    angle of the cut point in ``cut_theta`` (NaN for uncut arms).
    """

    body: ConvexBody2D = field(repr=False)
    delta: float
    i0: int
    j0: int
    nx: int
    ny: int
    classification: np.ndarray = field(repr=False)
    index: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    frac: np.ndarray = field(repr=False)
    cut_theta: np.ndarray = field(repr=False)

    @property
    def n_interior(self) -> int:
        return len(self.nodes)

    @property
    def n_irregular(self) -> int:
        return int(np.sum(self.classification == IRREGULAR))

    @property
    def x(self):
        return (self.i0 + np.arange(self.nx)) * self.delta

    @property
    def y(self):
        return (self.j0 + np.arange(self.ny)) * self.delta

    def node_coords(self):
        return np.column_stack([(self.i0 + self.nodes[:, 0]) * self.delta,
                                (self.j0 + self.nodes[:, 1]) * self.delta])

    def summary(self) -> dict:
        return {"delta": self.delta, "interior": self.n_interior,
                "irregular": self.n_irregular, "shape": [self.ny, self.nx]}


def build_grid(body: ConvexBody2D, delta: float) -> CartesianGrid:
    diam = diameter(body)
    if not delta > 0 or delta > diam / 32 * (1 + 1e-12):
        raise GridTooCoarse(f"delta={delta:.4g} exceeds diameter/32={diam / 32:.4g}")
    aspect = diam / float(np.min(body.widths()))
    if aspect > MAX_ASPECT:
        raise NeedleBody(f"aspect ratio {aspect:.3g} > {MAX_ASPECT}")
    xmin, xmax, ymin, ymax = body.bounds()
    i0 = int(np.floor(xmin / delta)) - MARGIN_NODES
    j0 = int(np.floor(ymin / delta)) - MARGIN_NODES
    nx = int(np.ceil(xmax / delta)) + MARGIN_NODES - i0 + 1
    ny = int(np.ceil(ymax / delta)) + MARGIN_NODES - j0 + 1
    xs = (i0 + np.arange(nx)) * delta
    ys = (j0 + np.arange(ny)) * delta

    rows = (ys > ymin) & (ys < ymax)
    cols = (xs > xmin) & (xs < xmax)
    xl = np.full(ny, np.inf)
    xr = np.full(ny, -np.inf)
    thl = np.full(ny, np.nan)
    thr = np.full(ny, np.nan)
    xl[rows], xr[rows], thl[rows], thr[rows] = row_crossings(body, ys[rows])
    yb = np.full(nx, np.inf)
    yt = np.full(nx, -np.inf)
    thb = np.full(nx, np.nan)
    tht = np.full(nx, np.nan)
    yb[cols], yt[cols], thb[cols], tht[cols] = column_crossings(body, xs[cols])

    # nodes closer than 1e-9 delta to the boundary are treated as boundary
    m = 1e-9 * delta
    X, Y = np.meshgrid(xs, ys)
    inside = ((X > xl[:, None] + m) & (X < xr[:, None] - m)
              & (Y > yb[None, :] + m) & (Y < yt[None, :] - m))
    if inside[:2].any() or inside[-2:].any() or inside[:, :2].any() or inside[:, -2:].any():
        raise GridTooCoarse("interior nodes reach the grid margin")

    jj, ii = np.nonzero(inside)
    n = len(ii)
    index = np.full((ny, nx), -1, dtype=np.int64)
    index[jj, ii] = np.arange(n)
    frac = np.ones((n, 4))
    cut = np.full((n, 4), np.nan)
    x_i, y_j = xs[ii], ys[jj]
    arms = [
        (~inside[jj, ii + 1], (xr[jj] - x_i) / delta, thr[jj]),
        (~inside[jj, ii - 1], (x_i - xl[jj]) / delta, thl[jj]),
        (~inside[jj + 1, ii], (yt[ii] - y_j) / delta, tht[ii]),
        (~inside[jj - 1, ii], (y_j - yb[ii]) / delta, thb[ii]),
    ]
    for a, (is_cut, length, th) in enumerate(arms):
        frac[is_cut, a] = np.clip(length[is_cut], 1e-9, 1.0)
        cut[is_cut, a] = th[is_cut]
    irregular = np.isfinite(cut).any(axis=1)
    cls = np.zeros((ny, nx), dtype=np.int8)
    cls[jj, ii] = np.where(irregular, IRREGULAR, REGULAR)
    for a in range(4):
        c = np.isfinite(cut[:, a])
        if c.any() and not np.all(np.isfinite(arms[a][2][c])):
            raise GridTooCoarse("a cut arm has no boundary crossing")
    nodes = np.column_stack([ii, jj])
    for arr in (cls, index, nodes, frac, cut):
        arr.setflags(write=False)
    return CartesianGrid(body, float(delta), i0, j0, nx, ny, cls, index, nodes, frac, cut)


def _assemble(grid: CartesianGrid):
    """Shortley-Weller matrix scaled by delta^2, plus cut coefficients."""
    n = grid.n_interior
    fr = grid.frac
    sx = fr[:, 0] + fr[:, 1]
    sy = fr[:, 2] + fr[:, 3]
    coef = np.column_stack([2 / (fr[:, 0] * sx), 2 / (fr[:, 1] * sx),
                            2 / (fr[:, 2] * sy), 2 / (fr[:, 3] * sy)])
    diag = -coef.sum(axis=1)
    ii, jj = grid.nodes[:, 0], grid.nodes[:, 1]
    nbr = [grid.index[jj, ii + 1], grid.index[jj, ii - 1],
           grid.index[jj + 1, ii], grid.index[jj - 1, ii]]
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [diag]
    for a in range(4):
        ok = nbr[a] >= 0
        rows.append(np.nonzero(ok)[0])
        cols.append(nbr[a][ok])
        vals.append(coef[ok, a])
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    cutcoef = np.where(np.isfinite(grid.cut_theta), coef, 0.0)
    return A, cutcoef


@dataclass(frozen=True, eq=False)
class FieldSolution:
    """Discrete solution of Delta U = f, U = g on the boundary."""

    grid: CartesianGrid = field(repr=False)
    values: np.ndarray = field(repr=False)
    f: float
    g: BoundaryField = field(repr=False)
    residual_norm: float
    extended: np.ndarray = field(repr=False)

    @property
    def delta(self) -> float:
        return self.grid.delta

    def boundary_value(self, theta):
        return self.g.interpolate(theta)

    def interpolate(self, points, dx: int = 0, dy: int = 0):
        """Tensor-product cubic Lagrange interpolation (derivatives up to 2)."""
        return _interp(self.grid, self.extended, points, dx, dy)


_BASIS = (
    lambda t: np.stack([-t * (t - 1) * (t - 2) / 6, (t + 1) * (t - 1) * (t - 2) / 2,
                        -(t + 1) * t * (t - 2) / 2, (t + 1) * t * (t - 1) / 6], -1),
    lambda t: np.stack([-(3 * t**2 - 6 * t + 2) / 6, (3 * t**2 - 4 * t - 1) / 2,
                        -(3 * t**2 - 2 * t - 2) / 2, (3 * t**2 - 1) / 6], -1),
    lambda t: np.stack([1 - t, 3 * t - 2, 1 - 3 * t, t], -1),
)


def _interp(grid, ext, points, dx=0, dy=0):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = grid.delta
    u = pts[:, 0] / d - grid.i0
    v = pts[:, 1] / d - grid.j0
    cu = np.floor(u).astype(np.int64)
    cv = np.floor(v).astype(np.int64)
    tu, tv = u - cu, v - cv
    if (cu < 1).any() or (cv < 1).any() or (cu > grid.nx - 3).any() or (cv > grid.ny - 3).any():
        raise PointOutsideStencil("interpolation point outside the grid")
    wu = _BASIS[dx](tu) / d**dx
    wv = _BASIS[dy](tv) / d**dy
    off = np.arange(-1, 3)
    vals = ext[(cv[:, None] + off)[:, :, None], (cu[:, None] + off)[:, None, :]]
    if not np.isfinite(vals).all():
        raise PointOutsideStencil("interpolation stencil leaves the extension band")
    return np.einsum("pj,pji,pi->p", wv, vals, wu)


def _poly_basis(x, y):
    return np.stack([np.ones_like(x), x, y, x * x, x * y, y * y,
                     x**3, x * x * y, x * y * y, y**3], -1)


def _extend(grid: CartesianGrid, values, g: BoundaryField):
    """Fill exterior band nodes by weighted local cubic least squares."""
    body, d = grid.body, grid.delta
    ext = np.full((grid.ny, grid.nx), np.nan)
    ii, jj = grid.nodes[:, 0], grid.nodes[:, 1]
    ext[jj, ii] = values
    inside = grid.index >= 0
    reach = int(np.ceil(BAND_WIDTH)) + 1
    cand = binary_dilation(inside, np.ones((2 * reach + 1, 2 * reach + 1), bool)) & ~inside
    cj, ci = np.nonzero(cand)
    cpts = np.column_stack([grid.x[ci], grid.y[cj]])
    dist = np.empty(len(cpts))
    foot = np.empty(len(cpts))
    for s in range(0, len(cpts), 2048):
        dist[s:s + 2048], foot[s:s + 2048] = body.signed_distance(cpts[s:s + 2048])
    band = dist <= BAND_WIDTH * d
    ci, cj, cpts, foot = ci[band], cj[band], cpts[band], foot[band]
    if not len(ci):
        return ext
    p = body.boundary_point(foot)

    R = FIT_RADIUS * d
    # boundary samples spaced about delta/2 in arc length
    nb = int(2 ** np.ceil(np.log2(max(body.n_nodes, 2 * body.perimeter() / d))))
    thb = 2 * np.pi * np.arange(nb) / nb
    bpts = body.boundary_point(thb)
    bval = g.interpolate(thb)
    ipts = grid.node_coords()

    di, ki = cKDTree(ipts).query(p, k=48, distance_upper_bound=R)
    db, kb = cKDTree(bpts).query(p, k=24, distance_upper_bound=R)
    ki = np.where(np.isfinite(di), ki, 0)
    kb = np.where(np.isfinite(db), kb, 0)
    wi = np.where(np.isfinite(di), (1 - (np.minimum(di, R) / R) ** 2) ** 3, 0.0)
    wb = np.where(np.isfinite(db), 4 * (1 - (np.minimum(db, R) / R) ** 2) ** 3, 0.0)
    if ((wi > 0).sum(axis=1) < 6).any() or ((wi > 0).sum(axis=1) + (wb > 0).sum(axis=1) < 14).any():
        raise GridTooCoarse("too few samples to extend the solution near the boundary")
    xy = np.concatenate([ipts[ki], bpts[kb]], axis=1) - p[:, None, :]
    vv = np.concatenate([values[ki], bval[kb]], axis=1)
    ww = np.sqrt(np.concatenate([wi, wb], axis=1))
    A = _poly_basis(xy[..., 0] / d, xy[..., 1] / d) * ww[..., None]
    coef = np.linalg.pinv(A, rcond=1e-12) @ (vv * ww)[..., None]
    q = (cpts - p) / d
    ext[cj, ci] = np.einsum("pk,pk->p", _poly_basis(q[:, 0], q[:, 1]), coef[..., 0])
    return ext


class DirichletSolver:
    """Factorised Shortley-Weller operator for one (body, delta) pair.

    The factorisation is reused across right-hand sides, so the torsion
    problem and any number of harmonic extensions on the same body cost one
    LU decomposition.
    """

    def __init__(self, body: ConvexBody2D, delta: float, tol: float = 1e-10):
        self.body = body
        self.delta = float(delta)
        self.tol = tol
        self.grid = build_grid(body, delta)
        self._A, self._cutcoef = _assemble(self.grid)
        self._lu = splu(self._A, permc_spec="COLAMD")

    def solve(self, f: float = 0.0, g: BoundaryField | None = None) -> FieldSolution:
        grid = self.grid
        if g is None:
            g = BoundaryField(np.zeros(self.body.n_nodes))
        if g.n != self.body.n_nodes:
            raise ValueError("boundary data must be sampled at the body's theta nodes")
        has_cut = np.isfinite(grid.cut_theta)
        gcut = np.zeros_like(grid.cut_theta)
        gcut[has_cut] = g.interpolate(grid.cut_theta[has_cut])
        b = f * grid.delta**2 - np.sum(self._cutcoef * gcut, axis=1)
        u = self._lu.solve(b)
        r = self._A @ u - b
        bnorm = np.linalg.norm(b)
        rel = np.linalg.norm(r) / bnorm if bnorm > 0 else np.linalg.norm(r)
        if rel > self.tol:
            u = u - self._lu.solve(r)
            r = self._A @ u - b
            rel = np.linalg.norm(r) / bnorm if bnorm > 0 else np.linalg.norm(r)
        if not np.isfinite(u).all() or rel > self.tol:
            raise SolveFailed(f"relative residual {rel:.3g} above {self.tol:.1g}")
        u.setflags(write=False)
        ext = _extend(grid, u, g)
        ext.setflags(write=False)
        return FieldSolution(grid, u, float(f), g, float(rel), ext)


def solve_dirichlet(body: ConvexBody2D, grid_or_delta, f: float,
                    g: BoundaryField | None = None, tol: float = 1e-10) -> FieldSolution:
    delta = grid_or_delta.delta if isinstance(grid_or_delta, CartesianGrid) else grid_or_delta
    return DirichletSolver(body, delta, tol).solve(f, g)


def boundary_normal_gradient(sol: FieldSolution, body: ConvexBody2D, theta, offset: float = 2.0):
    """Outward normal derivative at F(theta) from a one-sided 3-point stencil.

    Samples U at p - d nu and p - 2 d nu (d = offset * delta) by cubic
    interpolation and combines them with the Dirichlet value at p.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = offset * sol.delta
    p = body.boundary_point(theta)
    nu = np.column_stack([np.cos(theta), np.sin(theta)])
    u1 = sol.interpolate(p - d * nu)
    u2 = sol.interpolate(p - 2 * d * nu)
    g = sol.boundary_value(theta)
    return -(-3 * g + 4 * u1 - u2) / (2 * d)


def _require_depth(sol, points, depth):
    dist, _ = sol.grid.body.signed_distance(points)
    if (-dist < depth * sol.delta * (1 - 1e-9)).any():
        raise TooCloseToBoundary(f"points must lie at least {depth} delta inside the body")


def interior_gradient(sol: FieldSolution, x, depth: float = 3.0):
    """Fourth-order central differences of interpolated values (step delta)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    _require_depth(sol, pts, depth)
    h = sol.delta
    out = []
    for e in (np.array([h, 0.0]), np.array([0.0, h])):
        f = [sol.interpolate(pts + k * e) for k in (-2, -1, 1, 2)]
        out.append((f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h))
    return np.column_stack(out)


def interior_hessian(sol: FieldSolution, x, depth: float = 3.0):
    """Fourth-order central-difference Hessian, shape (..., 2, 2).

    The mixed derivative uses a stencil symmetric in the two axes, so the
    result is symmetric by construction.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    _require_depth(sol, pts, depth)
    h = sol.delta
    U = lambda a, b: sol.interpolate(pts + np.array([a * h, b * h]))
    u0 = U(0, 0)
    uxx = (-U(2, 0) + 16 * U(1, 0) - 30 * u0 + 16 * U(-1, 0) - U(-2, 0)) / (12 * h * h)
    uyy = (-U(0, 2) + 16 * U(0, 1) - 30 * u0 + 16 * U(0, -1) - U(0, -2)) / (12 * h * h)
    d1 = U(1, 1) - U(1, -1) - U(-1, 1) + U(-1, -1)
    d2 = U(2, 2) - U(2, -2) - U(-2, 2) + U(-2, -2)
    uxy = (16 * d1 - d2) / (48 * h * h)
    H = np.empty((len(pts), 2, 2))
    H[:, 0, 0], H[:, 1, 1] = uxx, uyy
    H[:, 0, 1] = H[:, 1, 0] = uxy
    return H


def domain_quadrature(body: ConvexBody2D, n_theta: int | None = None, n_rho: int = 48):
    """Nodes and weights on the body via X = c + rho (F(theta) - c).

    c is the Steiner point; the Jacobian is rho * w * (h - c . xi).
    Gauss-Legendre in rho, trapezoid in theta.
    """
    n_theta = n_theta or body.n_nodes
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    r, wr = np.polynomial.legendre.leggauss(n_rho)
    r = 0.5 * (r + 1)
    wr = 0.5 * wr
    c = body.steiner_point
    F = body.boundary_point(th)
    jac = body.radius_of_curvature(th) * (body.support(th) - np.cos(th) * c[0] - np.sin(th) * c[1])
    pts = c + r[:, None, None] * (F - c)[None, :, :]
    wts = (wr * r)[:, None] * jac[None, :] * (2 * np.pi / n_theta)
    return pts.reshape(-1, 2), wts.ravel()
