import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bverify.fields import (
    CATALOG,
    CatalogError,
    DecayClass,
    OriginError,
    beltrami_residuals,
    bump,
    catalog_listing,
    curl_fd,
    decompose,
    divergence_fd,
    evaluate,
    get_field,
    j1,
    sample_ball,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
vec = arrays(np.float64, 3, elements=finite)
nonzero_vec = vec.filter(lambda v: np.linalg.norm(v) > 1e-3)


@given(u=vec, x=nonzero_vec)
def test_decomposition_reassembles(u, x):
    d = decompose(u, x)
    np.testing.assert_allclose(d.normal + d.tangential, u, atol=1e-9 * (1 + np.linalg.norm(u)))


@given(u=vec, x=nonzero_vec)
def test_tangential_is_orthogonal_and_matches_cross_norm(u, x):
    d = decompose(u, x)
    scale = 1 + np.linalg.norm(u)
    assert abs(np.dot(d.tangential, x) / np.linalg.norm(x)) <= 1e-9 * scale
    assert np.linalg.norm(d.cross_tangential) == pytest.approx(np.linalg.norm(d.tangential), abs=1e-9 * scale)
    pyth = np.dot(d.normal, d.normal) + np.dot(d.tangential, d.tangential)
    assert pyth == pytest.approx(np.dot(u, u), rel=1e-9, abs=1e-12)


def test_decomposition_rejects_origin():
    with pytest.raises(OriginError):
        decompose(np.ones(3), np.zeros(3))


def test_rotation_is_purely_tangential():
    rot = get_field("rotation")
    x = sample_ball(50, 3.0, seed=1)
    u, _ = rot(x)
    np.testing.assert_allclose(decompose(u, x).normal, 0.0, atol=1e-14)


@pytest.mark.parametrize("fid", ["abc:1,1,1", "abc:0.5,2,1", "spheromak"])
def test_beltrami_fields_satisfy_curl_and_pressure(fid):
    f = get_field(fid)
    pts = sample_ball(100, 5.0, seed=3)
    curl_res, p_res = beltrami_residuals(f, pts)
    assert curl_res <= 1e-5
    assert p_res <= 1e-12
    assert np.max(np.abs(divergence_fd(f, pts))) <= 1e-5


def test_rotation_curl_is_constant_and_not_parallel():
    rot = get_field("rotation")
    pts = sample_ball(20, 2.0, seed=5)
    w = curl_fd(rot, pts)
    np.testing.assert_allclose(w, np.tile([0.0, 0.0, 2.0], (20, 1)), atol=1e-8)
    u, p = rot(pts)
    np.testing.assert_allclose(p, 0.5 * (pts[:, 0] ** 2 + pts[:, 1] ** 2))


def test_spheromak_at_origin_is_finite_and_smooth():
    s = get_field("spheromak")
    u0, p0 = evaluate(s, np.zeros(3))
    np.testing.assert_allclose(u0, [0.0, 0.0, 2.0 / 3.0], atol=1e-15)
    assert p0 == pytest.approx(-2.0 / 9.0)
    # continuity across the series / closed-form switch at r = 1
    e = np.array([0.3, -0.4, 0.866])
    e /= np.linalg.norm(e)
    lo, _ = s(np.array([e * (1 - 1e-9)]))
    hi, _ = s(np.array([e * (1 + 1e-9)]))
    np.testing.assert_allclose(lo, hi, atol=1e-8)


@given(st.floats(1e-6, 40.0))
@settings(max_examples=60)
def test_j1_matches_closed_form(r):
    ref = math.sin(r) / r**2 - math.cos(r) / r if r > 0.05 else r / 3 - r**3 / 30 + r**5 / 840
    assert float(j1(np.array(r))) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_spheromak_decays_like_inverse_radius():
    s = get_field("spheromak")
    e = np.array([[0.6, 0.0, 0.8]])
    sp = [np.linalg.norm(s(R * e)[0]) * R for R in (1e2, 1e3, 1e4)]
    assert max(sp) <= 2.0


def test_bump_support_and_peak():
    assert bump(np.zeros(3)) == pytest.approx(math.exp(-1))
    assert bump(np.array([1.0, 0.0, 0.0])) == 0.0
    assert bump(np.array([0.0, 2.0, 0.0])) == 0.0


def test_corrupt_pressure_shift_only_touches_pressure(abc):
    c = get_field("corrupt:abc:1,1,1:pressure_shift:0.1")
    x = np.array([[0.1, 0.2, 0.3], [2.0, 0.0, 0.0]])
    (u, p), (u0, p0) = c(x), abc(x)
    np.testing.assert_array_equal(u, u0)
    assert p[0] - p0[0] == pytest.approx(0.1 * bump(x[0]))
    assert p[1] == p0[1]
    assert not c.beltrami and not c.solution


def test_velocity_noise_is_seeded():
    a = get_field("corrupt:zero:velocity_noise:0.5:3")
    b = get_field("corrupt:zero:velocity_noise:0.5:3")
    c = get_field("corrupt:zero:velocity_noise:0.5:4")
    x = np.zeros((1, 3))
    np.testing.assert_array_equal(a(x)[0], b(x)[0])
    assert not np.allclose(a(x)[0], c(x)[0])
    assert np.linalg.norm(a(x)[0]) == pytest.approx(0.5 * math.exp(-1))


@pytest.mark.parametrize("bad", ["", "abc:1,2", "abc:x,y,z", "corrupt:abc:oops:0.1", "corrupt:abc:pressure_shift:zz", "torus"])
def test_bad_ids_raise_catalog_error(bad):
    with pytest.raises(CatalogError):
        get_field(bad)


def test_field_id_round_trip():
    for fid in ("zero", "rotation", "spheromak", "abc:1,1,1", "abc:0.5,2,1",
                "corrupt:abc:1,1,1:pressure_shift:0.1", "corrupt:spheromak:velocity_noise:0.25:9"):
        assert get_field(fid).id == fid


def test_catalog_listing_contents():
    rows = {r["id"]: r for r in catalog_listing()}
    assert rows["abc:A,B,C"]["beltrami"] is True and rows["abc:A,B,C"]["lambda"] == 1.0
    assert rows["rotation"]["beltrami"] is False
    assert "zero" in rows
    assert set(CATALOG) <= set(rows)
    assert get_field("spheromak").decay_class is DecayClass.ALGEBRAIC


def test_zero_field_is_identically_zero(zero):
    x = sample_ball(30, 10.0, seed=0)
    u, p = zero(x)
    assert not u.any() and not p.any()
    assert beltrami_residuals(zero, x) == (0.0, 0.0)


def test_sample_ball_is_seeded_and_inside():
    a = sample_ball(100, 5.0, seed=11)
    np.testing.assert_array_equal(a, sample_ball(100, 5.0, seed=11))
    assert np.all(np.linalg.norm(a, axis=1) <= 5.0)


def test_evaluate_shape_errors(abc):
    with pytest.raises(ValueError):
        evaluate(abc, np.zeros(2))
