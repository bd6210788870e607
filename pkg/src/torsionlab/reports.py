"""Flat verification records shared by the verifiers, the oracle and the CLI."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

HOLDS, EQUALITY, VIOLATED = "holds", "equality", "violated"


def _plain(x):
    """Convert numpy scalars/arrays to JSON-friendly Python values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass
class VerificationReport:
    """One check: both sides, gap = rhs - lhs, thresholds and verdict.

    ``tol`` is the absolute slack allowed below zero before the check counts
    as violated; ``equality_tol`` is the absolute band around zero reported
    as equality.
    """

    check: str
    inputs: dict
    lhs: float
    rhs: float
    gap: float
    tol: float
    equality_tol: float
    verdict: str
    diagnostics: dict = field(default_factory=dict)
    timing_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.verdict != VIOLATED

    def to_dict(self) -> dict:
        return _plain(asdict(self))


def classify(gap: float, tol: float, equality_tol: float) -> str:
    if abs(gap) <= equality_tol:
        return EQUALITY
    return HOLDS if gap >= -tol else VIOLATED


def make_report(check, inputs, lhs, rhs, *, scale=1.0, rel_tol=0.01, rel_equality=0.02,
                gap=None, diagnostics=None) -> VerificationReport:
    gap = float(rhs - lhs) if gap is None else float(gap)
    tol = rel_tol * scale
    eq = rel_equality * scale
    return VerificationReport(check, dict(inputs), float(lhs), float(rhs), gap, float(tol),
                              float(eq), classify(gap, tol, eq), dict(diagnostics or {}))


def reports_to_json(reports, extra=None) -> str:
    payload = {"reports": [r.to_dict() for r in reports]}
    if extra:
        payload.update(_plain(extra))
    return json.dumps(payload, indent=2, sort_keys=True)


CSV_FIELDS = ("check", "lhs", "rhs", "gap", "tol", "equality_tol", "verdict", "timing_ms",
              "inputs", "diagnostics")


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=CSV_FIELDS)
    wr.writeheader()
    for r in reports:
        d = r.to_dict()
        d["inputs"] = json.dumps(d["inputs"], sort_keys=True)
        d["diagnostics"] = json.dumps(d["diagnostics"], sort_keys=True)
        wr.writerow({k: d[k] for k in CSV_FIELDS})
    return buf.getvalue()
