"""Planar convex bodies described by trigonometric support functions.

A body is stored through its support function

    h(theta) = c0 + sum_k (a_k cos k theta + b_k sin k theta),

so every derivative needed downstream (h', h'', the radius of curvature
w = h'' + h) is exact given the coefficients.  The boundary point with outer
normal (cos theta, sin theta) is

    F(theta) = h (cos theta, sin theta) + h' (-sin theta, cos theta).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DegenerateSupport, GenerationFailed, NotConvex, ParseError

MAX_DEGREE = 96
DEFAULT_NODES = 256
W_EPS_REL = 1e-8


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TrigSupport:
    """Finite Fourier series on the unit circle."""

    c0: float
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()

    def __post_init__(self):
        a = [float(x) for x in self.cos_coeffs]
        b = [float(x) for x in self.sin_coeffs]
        k = max(len(a), len(b))
        a += [0.0] * (k - len(a))
        b += [0.0] * (k - len(b))
        # drop trailing zero modes so equal series compare equal
        while k and a[-1] == 0.0 and b[-1] == 0.0:
            a.pop()
            b.pop()
            k -= 1
        if k > MAX_DEGREE:
            raise ValueError(f"degree {k} exceeds maximum {MAX_DEGREE}")
        vals = [float(self.c0)] + a + b
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("support coefficients must be finite")
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "cos_coeffs", tuple(a))
        object.__setattr__(self, "sin_coeffs", tuple(b))

    @property
    def degree(self) -> int:
        return len(self.cos_coeffs)

    def coefficient_arrays(self, degree=None):
        k = self.degree if degree is None else degree
        a = np.zeros(k)
        b = np.zeros(k)
        m = min(k, self.degree)
        a[:m] = self.cos_coeffs[:m]
        b[:m] = self.sin_coeffs[:m]
        return a, b

    def __call__(self, theta, order: int = 0):
        return self.evaluate(theta, order)

    def evaluate(self, theta, order: int = 0):
        """Value of the ``order``-th theta-derivative at ``theta``."""
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, self.c0 if order == 0 else 0.0)
        if self.degree == 0:
            return out
        a, b = self.coefficient_arrays()
        k = np.arange(1, self.degree + 1, dtype=float)
        arg = np.multiply.outer(theta, k) + order * np.pi / 2
        scale = k**order
        out = out + np.cos(arg) @ (a * scale) + np.sin(arg) @ (b * scale)
        return out

    def combine(self, other: "TrigSupport", s: float, t: float) -> "TrigSupport":
        k = max(self.degree, other.degree)
        a1, b1 = self.coefficient_arrays(k)
        a2, b2 = other.coefficient_arrays(k)
        return TrigSupport(
            s * self.c0 + t * other.c0, tuple(s * a1 + t * a2), tuple(s * b1 + t * b2)
        )

    def scaled(self, a: float) -> "TrigSupport":
        return TrigSupport(
            a * self.c0,
            tuple(a * x for x in self.cos_coeffs),
            tuple(a * x for x in self.sin_coeffs),
        )

    def translated(self, v) -> "TrigSupport":
        a, b = self.coefficient_arrays(max(1, self.degree))
        a[0] += float(v[0])
        b[0] += float(v[1])
        return TrigSupport(self.c0, tuple(a), tuple(b))

    @classmethod
    def from_samples(cls, values, degree: int) -> "TrigSupport":
        """Discrete Fourier projection of samples on a uniform periodic grid."""
        values = np.asarray(values, dtype=float)
        m = values.size
        if degree >= m // 2:
            raise ValueError("degree must be below the Nyquist index")
        spec = np.fft.rfft(values) / m
        a = 2.0 * spec.real[1 : degree + 1]
        b = -2.0 * spec.imag[1 : degree + 1]
        return cls(spec.real[0], tuple(a), tuple(b))

    @classmethod
    def from_function(cls, fn, n_samples: int, degree: int) -> "TrigSupport":
        theta = 2 * np.pi * np.arange(n_samples) / n_samples
        return cls.from_samples(fn(theta), degree)


@dataclass(frozen=True, eq=False)
class ConvexBody2D:
    """A validated body with cached samples on theta_m = 2 pi m / N."""

    support: TrigSupport
    n_nodes: int
    theta: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    hp: np.ndarray = field(repr=False)
    hpp: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)

    @property
    def normals(self):
        return np.column_stack([np.cos(self.theta), np.sin(self.theta)])

    @property
    def tangents(self):
        return np.column_stack([-np.sin(self.theta), np.cos(self.theta)])

    @property
    def kappa(self):
        return 1.0 / self.w

    @property
    def c0(self) -> float:
        return self.support.c0

    @property
    def steiner_point(self):
        a, b = self.support.coefficient_arrays(1)
        return np.array([a[0], b[0]])

    def boundary_point(self, theta):
        theta = np.asarray(theta, dtype=float)
        h = self.support(theta)
        hp = self.support(theta, 1)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([h * c - hp * s, h * s + hp * c], axis=-1)

    def radius_of_curvature(self, theta):
        return self.support(theta, 2) + self.support(theta)

    def bounds(self):
        """(xmin, xmax, ymin, ymax) of the body."""
        h = self.support(np.array([np.pi, 0.0, 1.5 * np.pi, 0.5 * np.pi]))
        return -h[0], h[1], -h[2], h[3]

    def widths(self):
        """Width in each direction theta_m: h(theta) + h(theta + pi)."""
        return self.h + self.support(self.theta + np.pi)

    def perimeter(self) -> float:
        return 2 * np.pi * self.support.c0

    def signed_distance(self, points, refine: int = 6):
        """Signed distance to the boundary and the maximising normal angle.

        Uses max_theta (x . xi(theta) - h(theta)), which is the exact signed
        distance for convex bodies (negative inside).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        m = 4 * self.n_nodes
        th = 2 * np.pi * np.arange(m) / m
        hs = self.support(th)
        vals = pts[:, :1] * np.cos(th) + pts[:, 1:] * np.sin(th) - hs
        best = th[np.argmax(vals, axis=1)]
        step_cap = 2 * np.pi / m
        for _ in range(refine):
            c, s = np.cos(best), np.sin(best)
            g1 = -pts[:, 0] * s + pts[:, 1] * c - self.support(best, 1)
            g2 = -pts[:, 0] * c - pts[:, 1] * s - self.support(best, 2)
            ok = g2 < -1e-12
            step = np.where(ok, -g1 / np.where(ok, g2, -1.0), 0.0)
            best = best + np.clip(step, -step_cap, step_cap)
        d = pts[:, 0] * np.cos(best) + pts[:, 1] * np.sin(best) - self.support(best)
        return d, np.mod(best, 2 * np.pi)


def _grid(n):
    return 2 * np.pi * np.arange(n) / n


def validate_body(support: TrigSupport, n_nodes: int = DEFAULT_NODES,
                  eps_rel: float = W_EPS_REL) -> ConvexBody2D:
    """Check positivity of the curvature radius and cache boundary samples."""
    if n_nodes % 2 or n_nodes < 64:
        raise ValueError(f"node count must be even and >= 64, got {n_nodes}")
    if support.c0 <= 0:
        raise DegenerateSupport(f"mean support c0={support.c0} must be positive")
    theta = _grid(n_nodes)
    h = support(theta)
    hp = support(theta, 1)
    hpp = support(theta, 2)
    w = hpp + h
    eps_w = eps_rel * support.c0
    if np.min(w) <= eps_w:
        m = int(np.argmin(w))
        raise NotConvex(
            f"radius of curvature {w[m]:.6g} <= {eps_w:.3g} at theta={theta[m]:.6f}",
            theta=float(theta[m]), w=float(w[m]),
        )
    c, s = np.cos(theta), np.sin(theta)
    pts = np.column_stack([h * c - hp * s, h * s + hp * c])
    return ConvexBody2D(support, n_nodes, _frozen(theta), _frozen(h), _frozen(hp),
                        _frozen(hpp), _frozen(w), _frozen(pts))


def disk(radius: float = 1.0, center=(0.0, 0.0), n_nodes: int = DEFAULT_NODES) -> ConvexBody2D:
    sup = TrigSupport(radius).translated(center)
    return validate_body(sup, n_nodes)


def ellipse_support(a: float, b: float, degree: int = 32, n_nodes: int = DEFAULT_NODES) -> TrigSupport:
    """Trig projection of sqrt(a^2 cos^2 + b^2 sin^2), sampled at 4N points."""
    return TrigSupport.from_function(
        lambda t: np.sqrt((a * np.cos(t)) ** 2 + (b * np.sin(t)) ** 2), 4 * n_nodes, degree
    )


def ellipse(a: float, b: float, n_nodes: int = DEFAULT_NODES, degree: int = 32,
            center=(0.0, 0.0)) -> ConvexBody2D:
    sup = ellipse_support(a, b, degree, n_nodes).translated(center)
    return validate_body(sup, n_nodes)


def minkowski_combine(A: ConvexBody2D, B: ConvexBody2D, s: float, t: float) -> ConvexBody2D:
    """Body with support s*h_A + t*h_B."""
    if s < 0 or t < 0 or s + t <= 0:
        raise ValueError("need s, t >= 0 with s + t > 0")
    body = validate_body(A.support.combine(B.support, s, t), max(A.n_nodes, B.n_nodes))
    return body


def volume(body: ConvexBody2D) -> float:
    """Area, (1/2) * integral of h w over the circle (trapezoid rule)."""
    return 0.5 * float(np.sum(body.h * body.w)) * 2 * np.pi / body.n_nodes


def diameter(body: ConvexBody2D) -> float:
    return float(np.max(pdist(body.points)))


def translate(body: ConvexBody2D, v) -> ConvexBody2D:
    return validate_body(body.support.translated(v), body.n_nodes)


def scale(body: ConvexBody2D, a: float) -> ConvexBody2D:
    if not a > 0:
        raise ValueError(f"scale factor must be positive, got {a}")
    return validate_body(body.support.scaled(a), body.n_nodes)


def random_body(seed: int, degree: int = 6, amplitude: float = 0.5,
                n_nodes: int = DEFAULT_NODES, max_tries: int = 200,
                w_min: float = 0.05) -> ConvexBody2D:
    """h = 1 + sum_{k=2..K} random modes with |coef| <= amplitude / (K k^2)."""
    if degree < 2:
        raise ValueError("degree must be >= 2")
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    k = np.arange(2, degree + 1, dtype=float)
    bound = amplitude / (degree * k**2)
    for _ in range(max_tries):
        a = np.concatenate([[0.0], rng.uniform(-bound, bound)])
        b = np.concatenate([[0.0], rng.uniform(-bound, bound)])
        sup = TrigSupport(1.0, tuple(a), tuple(b))
        w = sup(_grid(n_nodes), 2) + sup(_grid(n_nodes))
        if w.min() >= w_min:
            return validate_body(sup, n_nodes)
    raise GenerationFailed(f"no admissible body after {max_tries} draws (seed={seed})")


def is_homothetic(A: ConvexBody2D, B: ConvexBody2D, tol: float = 1e-9):
    """Return (flag, beta, residual) testing h_B - beta h_A for degree <= 1."""
    beta = B.c0 / A.c0
    k = max(A.support.degree, B.support.degree, 1)
    a1, b1 = A.support.coefficient_arrays(k)
    a2, b2 = B.support.coefficient_arrays(k)
    resid = np.concatenate([a2[1:] - beta * a1[1:], b2[1:] - beta * b1[1:]])
    r = float(np.max(np.abs(resid))) if resid.size else 0.0
    return r <= tol * B.c0, beta, r


# ---------------------------------------------------------------------------
# body file format

BODY_KINDS = ("trig", "disk", "ellipse", "random")


def body_from_dict(spec: dict) -> ConvexBody2D:
    """Build a body from the JSON schema documented in the README."""
    if not isinstance(spec, dict):
        raise ParseError("body spec must be a JSON object")
    if spec.get("dimension", 2) != 2:
        raise ParseError(f"unsupported dimension {spec.get('dimension')!r}")
    kind = spec.get("kind")
    if kind not in BODY_KINDS:
        raise ParseError(f"unknown body kind {kind!r}")
    n = spec.get("nodes", DEFAULT_NODES)
    if not isinstance(n, int) or n % 2 or n < 64:
        raise ParseError(f"nodes must be an even integer >= 64, got {n!r}")
    try:
        if kind == "random":
            return random_body(int(spec.get("seed", 0)), int(spec.get("degree", 6)),
                               float(spec.get("amplitude", 0.5)), n_nodes=n)
        if kind == "ellipse":
            ax = spec.get("semi_axes")
            if not ax or len(ax) != 2:
                raise ParseError("ellipse needs semi_axes [a, b]")
            sup = ellipse_support(float(ax[0]), float(ax[1]), int(spec.get("degree", 32)), n)
            extra = TrigSupport(0.0, spec.get("cos", []), spec.get("sin", []))
            return validate_body(sup.combine(extra, 1.0, 1.0), n)
        c0 = float(spec.get("c0", 1.0))
        sup = TrigSupport(c0, spec.get("cos", []), spec.get("sin", []))
        if kind == "disk" and sup.degree > 1:
            raise ParseError("disk accepts only degree-1 (translation) coefficients")
        return validate_body(sup, n)
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from exc


def body_to_dict(body: ConvexBody2D) -> dict:
    s = body.support
    return {"dimension": 2, "kind": "trig", "c0": s.c0, "cos": list(s.cos_coeffs),
            "sin": list(s.sin_coeffs), "nodes": body.n_nodes}


def read_body_file(path) -> ConvexBody2D:
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return body_from_dict(spec)
