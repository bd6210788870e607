import json
import math

import numpy as np
import pytest

from torsionlab.errors import ConstraintNotMet
from torsionlab.fields import TestFunction, random_test_function
from torsionlab.reports import EQUALITY, HOLDS, VIOLATED, classify, reports_to_csv
from torsionlab.support import disk, random_body, scale, translate
from torsionlab.verify import (concavity_check, equality_diagnostics, merge_tolerances,
                               poincare_sides, verify_bm_torsion, verify_bm_volume,
                               verify_poincare_boundary, verify_poincare_spherical)

from conftest import bundle_for

D = 1 / 64


def test_verdict_depends_only_on_gap():
    assert classify(0.0, 1.0, 0.5) == EQUALITY
    assert classify(0.4, 1.0, 0.5) == EQUALITY
    assert classify(0.6, 1.0, 0.5) == HOLDS
    assert classify(-0.6, 1.0, 0.5) == HOLDS
    assert classify(-1.1, 1.0, 0.5) == VIOLATED


def test_bm_volume_examples():
    d = disk(1.0)
    assert verify_bm_volume(d, d).verdict == EQUALITY
    assert verify_bm_volume(d, scale(d, 2.0)).verdict == EQUALITY
    rep = verify_bm_volume(random_body(1, amplitude=0.9), random_body(2, amplitude=0.9))
    assert rep.gap >= -1e-10 and rep.verdict == HOLDS


def test_bm_torsion_homothets():
    d = disk(1.0)
    rep = verify_bm_torsion(d, scale(translate(d, (0.3, 0.0)), 1.7), 5, D)
    assert rep.verdict == EQUALITY
    assert rep.diagnostics["relative_chord_deviation"] <= 5e-3


def test_bm_torsion_identical_and_random():
    A = random_body(1)
    same = verify_bm_torsion(A, A, 3, D)
    assert same.verdict == EQUALITY and abs(same.gap) <= 1e-12
    rep = verify_bm_torsion(A, random_body(2, amplitude=0.9), 5, D)
    assert rep.gap >= -1e-3 * rep.diagnostics["T"][0] ** 0.25
    assert rep.verdict == HOLDS


def test_concavity_self_direction_and_translation():
    body = random_body(4)
    own = concavity_check(body, TestFunction.from_support(body.support), 5, D, t_max=0.3)
    assert own.verdict == EQUALITY
    tr = concavity_check(body, TestFunction.translation((1, 1)), 5, D, t_max=0.5)
    assert tr.verdict == EQUALITY
    assert np.abs(tr.diagnostics["second_differences"]).max() <= 1e-4 * own.rhs + 1e-4


def test_concavity_random_direction():
    rep = concavity_check(random_body(4, amplitude=0.9), random_test_function(8), 7, D)
    assert rep.verdict != VIOLATED


def test_poincare_disk_translation(disk_bundle):
    rep = verify_poincare_boundary(disk_bundle.body, TestFunction.translation(), bundle=disk_bundle)
    assert rep.verdict == EQUALITY
    assert rep.lhs == pytest.approx(math.pi, rel=2e-2)
    assert rep.rhs == pytest.approx(math.pi, rel=2e-2)
    t = rep.diagnostics["terms"]
    assert (t["curv"], t["udot"], t["four"]) == pytest.approx((-math.pi, -2 * math.pi, 4 * math.pi), rel=2e-2)


def test_poincare_zero_function(random_bundle):
    rep = verify_poincare_boundary(random_bundle.body, TestFunction.trig(), bundle=random_bundle)
    assert rep.lhs == 0.0 and rep.rhs == 0.0


def test_poincare_random(random_bundle):
    for seed in range(4):
        rep = verify_poincare_boundary(random_bundle.body, random_test_function(seed),
                                       bundle=random_bundle)
        assert rep.gap >= -1e-2 * (abs(rep.lhs) + abs(rep.rhs))


def test_spherical_disk_translation(disk_bundle):
    rep = verify_poincare_spherical(disk_bundle.body, TestFunction.translation((0, 1)),
                                    bundle=disk_bundle)
    assert rep.verdict == EQUALITY
    assert rep.lhs == pytest.approx(math.pi, rel=2e-2)


def test_spherical_ellipse_translation(ellipse_bundle):
    rep = verify_poincare_spherical(ellipse_bundle.body, TestFunction.translation((1, 0)),
                                    bundle=ellipse_bundle)
    assert rep.verdict == EQUALITY
    assert abs(rep.gap) <= 2e-2 * (abs(rep.lhs) + abs(rep.rhs))
    # gradmag varies on the ellipse, so the squared variant misses equality by far more
    # than the numerical error of the first-power form
    assert abs(rep.diagnostics["gap_power2"]) > 100 * abs(rep.gap)
    assert abs(rep.diagnostics["gap_power2"]) > 5e-3 * abs(rep.lhs)


def test_forms_agree(random_bundle):
    for seed in range(3):
        rep = verify_poincare_spherical(random_bundle.body, random_test_function(seed),
                                        bundle=random_bundle)
        scale_ = abs(rep.lhs) + abs(rep.rhs)
        assert rep.diagnostics["form_difference"] <= 1e-6 * scale_


def test_constraint_enforced(random_bundle):
    with pytest.raises(ConstraintNotMet):
        poincare_sides(random_bundle, TestFunction.dilation(), project=False)


def test_monotone_refinement_on_translation_equality():
    body = random_body(3, amplitude=0.9)
    gaps = [abs(verify_poincare_boundary(body, TestFunction.translation(), d).gap)
            for d in (1 / 32, 1 / 64, 1 / 128)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_disk_translation_equality_at_every_level():
    # the solver reproduces the disk fields exactly, so the gap sits at the interpolation floor
    for d in (1 / 32, 1 / 64):
        rep = verify_poincare_boundary(disk(1.0), TestFunction.translation(), d)
        assert abs(rep.gap) <= 1e-6 * (abs(rep.lhs) + abs(rep.rhs))


def test_scale_covariance_of_verdicts():
    body = random_body(9, amplitude=0.9)
    big = scale(body, 2.0)
    for psi in (TestFunction.translation(), random_test_function(1)):
        a = verify_poincare_boundary(body, psi, D)
        b = verify_poincare_boundary(big, psi, D)
        assert a.verdict == b.verdict


def test_equality_diagnostics():
    A = random_body(3)
    assert equality_diagnostics(A, scale(translate(A, (0.5, 0.1)), 2.5)).diagnostics["homothetic"]
    from torsionlab.support import ellipse
    assert not equality_diagnostics(disk(1.0), ellipse(2.0, 1.0)).diagnostics["homothetic"]
    rep = equality_diagnostics(A, A)
    assert rep.diagnostics["homothetic"] and rep.diagnostics["beta"] == 1.0


def test_tolerance_overrides():
    tol = merge_tolerances({"poincare": {"equality": 0.05}})
    assert tol["poincare"] == {"violation": 1e-2, "equality": 0.05}
    with pytest.raises(KeyError):
        merge_tolerances({"nope": {"violation": 1}})
    with pytest.raises(ValueError):
        merge_tolerances({"poincare": {"violation": -1}})


def test_report_schema(disk_bundle):
    rep = verify_poincare_boundary(disk_bundle.body, TestFunction.translation(), bundle=disk_bundle)
    d = json.loads(json.dumps(rep.to_dict()))
    for key in ("check", "inputs", "lhs", "rhs", "gap", "tol", "verdict", "diagnostics", "timing_ms"):
        assert key in d
    assert d["gap"] == pytest.approx(d["rhs"] - d["lhs"])
    assert reports_to_csv([rep]).splitlines()[0].startswith("check,lhs,rhs,gap,tol")
