import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torsionlab.errors import DegenerateSupport, GenerationFailed, NotConvex, ParseError
from torsionlab.support import (TrigSupport, body_from_dict, body_to_dict, diameter, disk,
                                ellipse, ellipse_support, is_homothetic, minkowski_combine,
                                random_body, read_body_file, scale, translate, validate_body,
                                volume)

seeds = st.integers(0, 10_000)


def test_constant_support_is_unit_disk():
    body = validate_body(TrigSupport(1.0), 128)
    np.testing.assert_allclose(body.w, 1.0)
    np.testing.assert_allclose(np.hypot(*body.points.T), 1.0)


def test_strong_cos2_mode_is_not_convex():
    with pytest.raises(NotConvex) as info:
        validate_body(TrigSupport(1.0, (0.0, 0.9)), 256)
    w = np.atleast_1d(info.value.w)
    assert w.min() == pytest.approx(1 - 3 * 0.9, abs=1e-12)
    assert 0.0 in np.round(np.atleast_1d(info.value.theta), 12)


def test_nonpositive_mean_is_degenerate():
    with pytest.raises(DegenerateSupport):
        validate_body(TrigSupport(0.0, (0.1,)), 256)


@pytest.mark.parametrize("n", [63, 65, 32])
def test_bad_node_counts_rejected(n):
    with pytest.raises(ValueError):
        validate_body(TrigSupport(1.0), n)


def test_projected_ellipse_support():
    sup = ellipse_support(2.0, 1.0, degree=16)
    body = validate_body(sup, 256)
    th = body.theta
    np.testing.assert_allclose(body.h, np.sqrt(4 * np.cos(th) ** 2 + np.sin(th) ** 2), atol=2e-4)
    assert body.w.min() > 0
    assert body.w.min() == pytest.approx(0.5, abs=1e-2)  # b^2 / a
    assert body.w.max() == pytest.approx(4.0, abs=1e-2)  # a^2 / b


def test_minkowski_examples():
    d1, d2 = disk(1.0), disk(2.0)
    assert minkowski_combine(d1, d1, 0.5, 0.5).support == d1.support
    A = random_body(4)
    assert minkowski_combine(A, d2, 1.0, 0.0).support == A.support
    np.testing.assert_allclose(minkowski_combine(d1, d2, 0.5, 0.5).h, 1.5)


def test_volume_examples():
    assert volume(disk(1.0)) == pytest.approx(math.pi, rel=1e-14)
    assert volume(disk(2.0)) == pytest.approx(4 * math.pi, rel=1e-14)
    assert volume(ellipse(2.0, 1.0)) == pytest.approx(2 * math.pi, rel=1e-8)


def test_diameter_examples():
    assert diameter(disk(1.0)) == pytest.approx(2.0, abs=1e-12)
    assert diameter(ellipse(2.0, 1.0)) == pytest.approx(4.0, abs=1e-3)
    assert diameter(translate(disk(1.0), (1.0, 0.0))) == pytest.approx(2.0, abs=1e-12)


def test_translate_and_scale_examples():
    t = translate(disk(1.0), (1.0, 0.0))
    np.testing.assert_allclose(t.h, 1 + np.cos(t.theta), atol=1e-15)
    np.testing.assert_allclose(np.hypot(t.points[:, 0] - 1, t.points[:, 1]), 1.0, atol=1e-14)
    np.testing.assert_allclose(scale(disk(1.0), 2.0).h, 2.0)
    with pytest.raises(ValueError):
        scale(disk(1.0), 0.0)


@given(seeds, st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=25, deadline=None)
def test_translation_keeps_curvature_radius(seed, vx, vy):
    A = random_body(seed)
    np.testing.assert_allclose(translate(A, (vx, vy)).w, A.w, atol=1e-12)


def test_random_body_examples():
    assert random_body(5, amplitude=0.0).support == TrigSupport(1.0)
    assert random_body(9).support == random_body(9).support
    with pytest.raises(GenerationFailed):
        random_body(1, degree=2, amplitude=0.99, max_tries=3, w_min=0.999)


@given(seeds, st.integers(2, 8), st.floats(0.0, 0.95))
@settings(max_examples=30, deadline=None)
def test_random_bodies_are_valid(seed, degree, amp):
    body = random_body(seed, degree=degree, amplitude=amp)
    assert body.w.min() >= 0.05


@given(seeds, seeds, st.floats(0, 3), st.floats(0, 3))
@settings(max_examples=30, deadline=None)
def test_minkowski_additivity(s1, s2, s, t):
    if s + t == 0:
        return
    A, B = random_body(s1), random_body(s2)
    C = minkowski_combine(A, B, s, t)
    np.testing.assert_allclose(C.h, s * A.h + t * B.h, rtol=0, atol=1e-13 * (1 + s + t))


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_tangency_and_gauss_map(seed):
    body = random_body(seed, amplitude=0.9)
    n = body.n_nodes
    k = np.fft.rfftfreq(n, 1.0 / n)
    dF = np.fft.irfft(np.fft.rfft(body.points, axis=0) * (1j * k)[:, None], n, axis=0)
    tang = np.column_stack([-np.sin(body.theta), np.cos(body.theta)])
    np.testing.assert_allclose(dF, tang * body.w[:, None], rtol=0, atol=1e-6 * body.w.max())
    normal = np.column_stack([dF[:, 1], -dF[:, 0]])
    normal /= np.linalg.norm(normal, axis=1)[:, None]
    np.testing.assert_allclose(normal, body.normals, atol=1e-6)


def test_volume_brunn_minkowski_random_pairs():
    t = np.linspace(0, 1, 11)
    for s in range(20):
        A, B = random_body(100 + s, amplitude=0.9), random_body(200 + s, amplitude=0.9)
        lhs = np.array([volume(minkowski_combine(A, B, 1 - x, x)) for x in t]) ** 0.5
        assert np.all(lhs >= (1 - t) * volume(A) ** 0.5 + t * volume(B) ** 0.5 - 1e-10)


def test_homothety_detection():
    A = random_body(2)
    flag, beta, _ = is_homothetic(A, scale(translate(A, (0.3, -0.2)), 1.7))
    assert flag and beta == pytest.approx(1.7)
    assert not is_homothetic(disk(1.0), ellipse(2.0, 1.0))[0]
    assert is_homothetic(A, A) == (True, 1.0, 0.0)


def test_body_file_roundtrip(tmp_path):
    A = random_body(6)
    p = tmp_path / "a.json"
    p.write_text(json.dumps(body_to_dict(A)))
    assert read_body_file(p).support == A.support


@pytest.mark.parametrize("spec", [
    {"dimension": 2, "kind": "blob", "nodes": 256},
    {"dimension": 2, "kind": "disk", "c0": 1, "nodes": 255},
    {"dimension": 3, "kind": "disk", "c0": 1, "nodes": 256},
])
def test_body_file_rejects(spec):
    with pytest.raises(ParseError):
        body_from_dict(spec)


def test_body_file_kinds():
    e = body_from_dict({"dimension": 2, "kind": "ellipse", "semi_axes": [2, 1], "nodes": 256})
    assert volume(e) == pytest.approx(2 * math.pi, rel=1e-8)
    r = body_from_dict({"dimension": 2, "kind": "random", "seed": 3, "degree": 6,
                        "amplitude": 0.5, "nodes": 256})
    assert r.support == random_body(3).support
    d = body_from_dict({"dimension": 2, "kind": "disk", "c0": 2, "nodes": 128})
    assert volume(d) == pytest.approx(4 * math.pi)
