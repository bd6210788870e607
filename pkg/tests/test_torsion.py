import math

import numpy as np
import pytest

from torsionlab.errors import CrossCheckFailed
from torsionlab.fields import BoundaryField, TestFunction, random_test_function
from torsionlab.support import disk, random_body, scale, translate
from torsionlab.torsion import (compute_bundle, convergence_study, first_variation,
                                measure_centroid, project_mean_zero, torsional_measure_density,
                                torsional_rigidity)
from torsionlab.variation import fd_first_variation

from conftest import bundle_for


def test_disk_three_routes(disk_bundle):
    for T in (disk_bundle.T_energy, disk_bundle.T_mass, disk_bundle.T_boundary):
        assert T == pytest.approx(math.pi / 2, rel=2e-3)


def test_ellipse_three_routes(ellipse_bundle):
    for T in (ellipse_bundle.T_energy, ellipse_bundle.T_mass, ellipse_bundle.T_boundary):
        assert T == pytest.approx(8 * math.pi / 5, rel=5e-3)


def test_disk_radius_two():
    assert compute_bundle(disk(2.0), 1 / 64).T == pytest.approx(8 * math.pi, rel=2e-3)


def test_cross_check_failure_is_an_error():
    with pytest.raises(CrossCheckFailed):
        compute_bundle(random_body(3), 1 / 64, tol=1e-12)


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_homogeneity(a):
    body = random_body(8, amplitude=0.9)
    T = torsional_rigidity(body, 1 / 64)
    assert torsional_rigidity(scale(body, a), 1 / 64) == pytest.approx(a**4 * T, rel=5e-3)


def test_translation_invariance_grid_aligned():
    body = random_body(8, amplitude=0.9)
    d = 1 / 64
    T = torsional_rigidity(body, d)
    assert torsional_rigidity(translate(body, (5 * d, -3 * d)), d) == pytest.approx(T, rel=1e-12)


def test_rayleigh_quotient(random_bundle):
    assert random_bundle.rayleigh_quotient() == pytest.approx(4 / random_bundle.T, rel=1e-2)


def test_disk_measure_density(disk_bundle):
    dens = torsional_measure_density(disk_bundle)
    np.testing.assert_allclose(dens.values, 1.0, atol=2e-2)
    assert dens.integrate() == pytest.approx(2 * math.pi, rel=1e-3)


def test_measure_density_scales_cubically():
    b1 = bundle_for("random", 5, 1 / 64)
    b2 = compute_bundle(scale(b1.body, 2.0), 1 / 64)
    d1, d2 = torsional_measure_density(b1).values, torsional_measure_density(b2).values
    np.testing.assert_allclose(d2, 8 * d1, rtol=1e-2)


def test_centroid_vanishes(random_bundle):
    c = measure_centroid(random_bundle)
    assert np.hypot(*c) <= 1e-3 * torsional_measure_density(random_bundle).integrate()


def test_first_variation_disk_dilation(disk_bundle):
    assert first_variation(disk_bundle, TestFunction.dilation()) == pytest.approx(2 * math.pi, rel=1e-2)


def test_first_variation_translation_vanishes(random_bundle):
    fv = first_variation(random_bundle, TestFunction.translation((0.3, -1.0)))
    assert abs(fv) <= 1e-3 * random_bundle.T


def test_first_variation_matches_finite_difference():
    b = bundle_for("random", 5, 1 / 64)
    phi = random_test_function(21)
    fd = fd_first_variation(b.body, phi, 1 / 64)
    assert first_variation(b, phi) == pytest.approx(fd, rel=1e-2)


def test_projection_examples(disk_bundle, random_bundle):
    n = random_bundle.body.n_nodes
    tr = TestFunction.translation((1.0, 2.0))
    np.testing.assert_allclose(project_mean_zero(random_bundle, tr).values,
                               tr.sample(n).values, atol=1e-3)
    np.testing.assert_allclose(project_mean_zero(random_bundle, TestFunction.dilation()).values,
                               0.0, atol=1e-14)
    c2 = BoundaryField(np.cos(2 * disk_bundle.body.theta))
    np.testing.assert_allclose(project_mean_zero(disk_bundle, c2).values, c2.values, atol=1e-10)


def test_projection_constraint(random_bundle):
    psi = project_mean_zero(random_bundle, random_test_function(4)).values
    dens = torsional_measure_density(random_bundle).values
    assert abs(np.sum(psi * dens)) <= 1e-12 * np.sum(np.abs(psi) * dens)


def test_convergence_study_random_body():
    study = convergence_study(random_body(3), [1 / 32, 1 / 64, 1 / 128])
    assert study["orders"][0] >= 1.8
    assert not study["at_roundoff_floor"]
