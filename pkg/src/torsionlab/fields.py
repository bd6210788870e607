"""Periodic boundary fields and test functions on the unit circle."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ParseError
from .support import TrigSupport


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """Samples of a periodic function at theta_m = 2 pi m / N."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size % 2:
            raise ValueError("boundary field needs an even number of samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def theta(self):
        return 2 * np.pi * np.arange(self.n) / self.n

    def integrate(self) -> float:
        """Trapezoid rule against d theta."""
        return float(np.sum(self.values)) * 2 * np.pi / self.n

    def integrate_arc(self, body) -> float:
        """Integral against arc length, ds = w d theta."""
        return float(np.sum(self.values * body.w)) * 2 * np.pi / self.n

    def derivative(self, order: int = 1) -> "BoundaryField":
        """Spectral derivative; the Nyquist mode is dropped for odd orders."""
        n = self.n
        k = np.fft.rfftfreq(n, 1.0 / n)
        spec = np.fft.rfft(self.values) * (1j * k) ** order
        if order % 2:
            spec[-1] = 0.0
        return BoundaryField(np.fft.irfft(spec, n))

    def interpolate(self, theta):
        """Periodic cubic spline interpolation."""
        t = np.append(self.theta, 2 * np.pi)
        v = np.append(self.values, self.values[0])
        spline = CubicSpline(t, v, bc_type="periodic")
        return spline(np.mod(np.asarray(theta, dtype=float), 2 * np.pi))

    def __mul__(self, other):
        other = other.values if isinstance(other, BoundaryField) else other
        return BoundaryField(self.values * other)

    __rmul__ = __mul__

    def __add__(self, other):
        other = other.values if isinstance(other, BoundaryField) else other
        return BoundaryField(self.values + other)

    def __sub__(self, other):
        other = other.values if isinstance(other, BoundaryField) else other
        return BoundaryField(self.values - other)


TEST_KINDS = ("translation", "dilation", "trig", "tabulated")


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A perturbation direction phi on the circle.

    ``translation`` evaluates to xi . direction, ``dilation`` to 1, ``trig``
    to a finite Fourier series, ``tabulated`` to a sampled BoundaryField.
    """

    __test__ = False  # keep pytest from collecting this class

    kind: str
    direction: tuple = (1.0, 0.0)
    series: TrigSupport | None = None
    table: BoundaryField | None = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        if self.kind not in TEST_KINDS:
            raise ValueError(f"unknown test function kind {self.kind!r}")
        if self.kind == "translation":
            d = np.asarray(self.direction, dtype=float)
            nrm = np.hypot(*d)
            if nrm == 0:
                raise ValueError("translation direction must be nonzero")
            object.__setattr__(self, "direction", tuple(d / nrm))
        if self.kind == "trig" and self.series is None:
            raise ValueError("trig test function needs a series")
        if self.kind == "tabulated" and self.table is None:
            raise ValueError("tabulated test function needs a table")

    @classmethod
    def translation(cls, direction=(1.0, 0.0)):
        return cls("translation", direction=tuple(direction))

    @classmethod
    def dilation(cls):
        return cls("dilation")

    @classmethod
    def trig(cls, c0=0.0, cos=(), sin=()):
        return cls("trig", series=TrigSupport(c0, cos, sin))

    @classmethod
    def from_support(cls, support: TrigSupport):
        return cls("trig", series=support, label="self")

    @classmethod
    def tabulated(cls, values):
        return cls("tabulated", table=values if isinstance(values, BoundaryField)
                   else BoundaryField(values))

    def as_series(self) -> TrigSupport:
        """Fourier series of phi; tabulated functions have none."""
        if self.kind == "translation":
            return TrigSupport(0.0, (self.direction[0],), (self.direction[1],))
        if self.kind == "dilation":
            return TrigSupport(1.0)
        if self.kind == "trig":
            return self.series
        raise ValueError("tabulated test functions cannot perturb a support function")

    def __call__(self, theta, order: int = 0):
        return self.evaluate(theta, order)

    def evaluate(self, theta, order: int = 0):
        if self.kind == "tabulated":
            tab = self.table
            for _ in range(order):
                tab = tab.derivative()
            return tab.interpolate(theta)
        return self.as_series().evaluate(theta, order)

    def sample(self, n: int, order: int = 0) -> BoundaryField:
        theta = 2 * np.pi * np.arange(n) / n
        if self.kind == "tabulated" and self.table.n == n:
            tab = self.table
            for _ in range(order):
                tab = tab.derivative()
            return tab
        return BoundaryField(self.evaluate(theta, order))

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.kind == "translation":
            return "translation:({:.6g},{:.6g})".format(*self.direction)
        if self.kind == "trig":
            s = self.series
            return f"trig:c0={s.c0:.6g},cos={list(np.round(s.cos_coeffs, 8))},sin={list(np.round(s.sin_coeffs, 8))}"
        return self.kind


def random_test_function(seed: int, degree: int = 5, include_mean: bool = True) -> TestFunction:
    """Seeded trig polynomial with coefficients decaying like 1/k."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, degree + 1, dtype=float)
    a = rng.uniform(-1, 1, degree) / k
    b = rng.uniform(-1, 1, degree) / k
    c0 = float(rng.uniform(-1, 1)) if include_mean else 0.0
    return TestFunction("trig", series=TrigSupport(c0, tuple(a), tuple(b)),
                        label=f"random:{seed}:{degree}")


_TERM = re.compile(r"^\s*k\s*=\s*(\d+)\s*((?:,\s*[ab]\s*=\s*[-+0-9.eE]+\s*)+)$")


def parse_test_function(text: str) -> TestFunction:
    """Parse ``translation:x|y``, ``dilation``, ``trig:k=2,a=0.1;k=3,b=0.05``
    or ``random:seed:degree``."""
    text = text.strip()
    head, _, rest = text.partition(":")
    if head == "dilation" and not rest:
        return TestFunction.dilation()
    if head == "translation":
        dirs = {"x": (1.0, 0.0), "y": (0.0, 1.0)}
        if rest in dirs:
            return TestFunction.translation(dirs[rest])
        try:
            vx, vy = (float(v) for v in rest.split(","))
        except ValueError:
            raise ParseError(f"bad translation direction {rest!r}") from None
        return TestFunction.translation((vx, vy))
    if head == "random":
        parts = rest.split(":")
        try:
            seed = int(parts[0])
            deg = int(parts[1]) if len(parts) > 1 and parts[1] else 5
        except (ValueError, IndexError):
            raise ParseError(f"bad random test function {text!r}") from None
        return random_test_function(seed, deg)
    if head == "trig":
        c0 = 0.0
        cos, sin = {}, {}
        for term in filter(None, rest.split(";")):
            if term.strip().startswith("c0="):
                try:
                    c0 = float(term.strip()[3:])
                except ValueError:
                    raise ParseError(f"bad mean term {term!r}") from None
                continue
            m = _TERM.match(term)
            if not m:
                raise ParseError(f"bad trig term {term!r}")
            k = int(m.group(1))
            for piece in m.group(2).split(","):
                if not piece.strip():
                    continue
                name, val = (p.strip() for p in piece.split("="))
                if k == 0:
                    c0 = float(val)
                else:
                    (cos if name == "a" else sin)[k] = float(val)
        kmax = max([0, *cos, *sin])
        a = [cos.get(k, 0.0) for k in range(1, kmax + 1)]
        b = [sin.get(k, 0.0) for k in range(1, kmax + 1)]
        return TestFunction.trig(c0, a, b)
    raise ParseError(f"unknown test function {text!r}")
