"""Run configuration, campaign results and report output."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ParseError
from .reports import EQUALITY, VIOLATED, reports_to_csv, reports_to_json, _plain
from .support import disk, ellipse, random_body, read_body_file
from .torsion import CROSS_CHECK_TOL, DEFAULT_DELTA
from .variation import FD_STEP_FIRST, FD_STEP_SECOND
from .verify import merge_tolerances


def parse_length(text: str) -> float:
    """Accept '0.0078125' or '1/128'."""
    try:
        v = float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"cannot read length {text!r}") from exc
    if not v > 0:
        raise ParseError(f"length must be positive, got {text!r}")
    return v


def parse_ladder(text: str):
    ladder = tuple(parse_length(s) for s in text.split(",") if s.strip())
    if len(ladder) < 2 or any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ParseError("ladder needs at least two strictly decreasing grid spacings")
    return ladder


def parse_floats(text: str, count=None):
    try:
        vals = tuple(float(s) for s in text.split(","))
    except ValueError as exc:
        raise ParseError(f"expected comma-separated numbers, got {text!r}") from exc
    if count is not None and len(vals) not in (count if isinstance(count, tuple) else (count,)):
        raise ParseError(f"expected {count} numbers, got {text!r}")
    return vals


def parse_body_spec(text: str, n_nodes: int = 256):
    """Resolve 'disk', 'disk:r', 'ellipse:a,b', 'random:seed[:degree[:amplitude]]' or a file."""
    head, _, rest = text.partition(":")
    try:
        if head == "disk":
            return disk(float(rest) if rest else 1.0, n_nodes=n_nodes)
        if head == "ellipse":
            a, b = parse_floats(rest, 2)
            return ellipse(a, b, n_nodes=n_nodes)
        if head == "random":
            parts = rest.split(":")
            kw = {}
            if len(parts) > 1:
                kw["degree"] = int(parts[1])
            if len(parts) > 2:
                kw["amplitude"] = float(parts[2])
            return random_body(int(parts[0]), n_nodes=n_nodes, **kw)
    except ValueError as exc:
        raise ParseError(f"bad body spec {text!r}: {exc}") from exc
    if not Path(text).is_file():
        raise ParseError(f"no such body file or spec: {text!r}")
    return read_body_file(text)


@dataclass
class Config:
    delta: float = DEFAULT_DELTA
    ladder: tuple | None = None
    nodes: int = 256
    solver_tol: float = 1e-10
    cross_check_tol: float = CROSS_CHECK_TOL
    fd_first: float = FD_STEP_FIRST
    fd_second: float = FD_STEP_SECOND
    tolerances: dict = field(default_factory=merge_tolerances)
    seed: int = 0
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        for name in ("delta", "solver_tol", "cross_check_tol", "fd_first", "fd_second"):
            if not getattr(self, name) > 0:
                raise ParseError(f"{name} must be positive")
        if self.nodes < 64 or self.nodes % 2:
            raise ParseError("nodes must be even and at least 64")
        if self.ladder is not None and any(b >= a for a, b in zip(self.ladder, self.ladder[1:])):
            raise ParseError("ladder must be strictly decreasing")
        if self.format not in ("json", "csv"):
            raise ParseError(f"unknown format {self.format!r}")

    def echo(self) -> dict:
        return _plain(asdict(self))


def load_tolerances(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
        return merge_tolerances(data)
    except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError, AttributeError) as exc:
        raise ParseError(f"bad tolerance file {path}: {exc}") from exc


@dataclass
class CampaignResult:
    config: dict
    reports: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def summary(self) -> dict:
        verdicts = [r.verdict for r in self.reports]
        return {"passed": sum(v != VIOLATED for v in verdicts),
                "equality": verdicts.count(EQUALITY),
                "violated": verdicts.count(VIOLATED),
                "errors": len(self.errors)}

    @property
    def timing(self) -> list:
        return [r.timing_ms for r in self.reports]

    def exit_code(self) -> int:
        s = self.summary
        return 1 if s["violated"] or s["errors"] else 0

    def render(self, fmt: str = "json") -> str:
        if fmt == "csv":
            return reports_to_csv(self.reports)
        return reports_to_json(self.reports, {"config": self.config, "summary": self.summary,
                                              "errors": self.errors,
                                              "timing_ms": self.timing}) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
