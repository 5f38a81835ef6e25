import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bverify.fields import AnalyticField, get_field
from bverify.quadrature import ConvergenceError, QuadConfig
from bverify.weakform import (
    KERNEL_CONSTANT,
    CostError,
    Mollifier,
    TestFunction,
    check_l1_contraction,
    check_regularized_mvf,
    generate_test_functions,
    mollified_normal_form,
    mollify_value,
    weak_form_suite,
    weak_residual,
)

ONE = lambda y: np.ones(y.shape[:-1])


def smooth_f(y):
    return np.sin(y[..., 0]) * np.cos(y[..., 1]) + y[..., 2] ** 2


@pytest.mark.parametrize("eps", [0.01, 0.05, 0.1, 1.0])
def test_kernel_normalization(eps):
    assert mollify_value(ONE, eps, np.array([0.3, -1.0, 2.0])) == pytest.approx(1.0, abs=1e-8)


def test_kernel_constant_against_radial_integral():
    # 1 / (4 pi int_0^1 exp(-1/(1-r^2)) r^2 dr), integrated independently by a fine rule
    t, w = np.polynomial.legendre.leggauss(400)
    r = 0.5 * (t + 1)
    mass = 4 * math.pi * 0.5 * np.sum(w * np.exp(-1 / (1 - r * r)) * r * r)
    assert KERNEL_CONSTANT == pytest.approx(1 / mass, rel=1e-12)


def test_density_is_nonnegative_radial_and_supported():
    m = Mollifier(0.1)
    x = np.random.default_rng(0).uniform(-0.2, 0.2, (200, 3))
    d = m.density(x)
    assert np.all(d >= 0)
    assert np.all(d[np.linalg.norm(x, axis=1) >= 0.1] == 0)
    R = np.array([[0.05, 0, 0], [0, 0.05, 0], [0, 0, -0.05]])
    assert np.ptp(m.density(R)) == 0.0


@given(a=st.lists(st.floats(-5, 5), min_size=3, max_size=3), c=st.floats(-3, 3))
@settings(max_examples=25, deadline=None)
def test_affine_functions_are_reproduced(a, c):
    a = np.array(a)
    x = np.array([0.4, -0.7, 1.1])
    f = lambda y: y @ a + c
    assert mollify_value(f, 0.1, x) == pytest.approx(a @ x + c, abs=1e-8 * (1 + np.abs(a).sum() + abs(c)))


def test_second_order_consistency_ratio():
    x = np.array([0.3, 0.2, 0.1])
    exact = float(smooth_f(x))
    errs = [abs(mollify_value(smooth_f, e, x) - exact) for e in (0.1, 0.05, 0.025)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.5 <= coarse / fine <= 4.5


def test_abc_energy_at_origin_tends_to_three(abc):
    u2 = lambda y: np.sum(abc.func(y)[0] ** 2, axis=-1)
    vals = [mollify_value(u2, e, np.zeros(3)) for e in (0.1, 0.01)]
    assert abs(vals[1] - 3.0) < abs(vals[0] - 3.0) + 1e-12
    assert vals[1] == pytest.approx(3.0, abs=1e-3)


def test_mollifier_rejects_bad_eps():
    with pytest.raises(ValueError):
        Mollifier(0.0)
    with pytest.raises(ValueError):
        Mollifier(1.5)


def test_normal_form_cases(rotation, zero):
    e3 = AnalyticField("e3", lambda x: (np.broadcast_to([0.0, 0.0, 1.0], x.shape).copy(), np.zeros(x.shape[:-1])))
    assert mollified_normal_form(e3, 0.3, np.array([0.0, 0.0, 2.0])) == pytest.approx(1.0, abs=1e-8)
    assert mollified_normal_form(zero, 0.1, np.array([1.0, 0.0, 0.0])) == 0.0
    assert mollified_normal_form(rotation, 0.01, np.array([1.0, 0.5, 0.2])) < 1e-4
    with pytest.raises(ValueError):
        mollified_normal_form(rotation, 0.1, np.zeros(3))


def test_normal_form_converges_to_normal_part(spheromak):
    x = np.array([0.7, -0.2, 0.5])
    u, _ = spheromak(x)
    target = np.dot(u, x) ** 2 / np.dot(x, x)
    e1, e2 = (abs(mollified_normal_form(spheromak, e, x) - target) for e in (0.1, 0.05))
    assert 3.5 <= e1 / e2 <= 4.5


def test_l1_contraction_volumes():
    rep = check_l1_contraction(ONE, 0.1, 1.0)
    assert rep.lhs == pytest.approx(4 * math.pi / 3, rel=1e-5)
    assert rep.rhs == pytest.approx(4 * math.pi / 3 * 1.1**3, rel=1e-10)
    assert rep.passed


def test_l1_contraction_zero_and_args():
    z = lambda y: np.zeros(y.shape[:-1])
    rep = check_l1_contraction(z, 0.05, 1.0)
    assert rep.passed and rep.lhs == rep.rhs == 0.0
    with pytest.raises(ValueError):
        check_l1_contraction(z, 2.0, 1.0)


def test_regularized_mvf_zero_and_guards(zero, abc):
    rep = check_regularized_mvf(zero, 1.0, 0.05)
    assert rep.passed and rep.lhs == rep.rhs == 0.0
    with pytest.raises(ValueError):
        check_regularized_mvf(abc, 1.0, 0.5)
    with pytest.raises(CostError):
        check_regularized_mvf(abc, 1.0, 0.05, node_budget=10**6)


def test_test_function_support_and_gradient():
    tf = generate_test_functions(1, 3)[0]
    x = tf.center + tf.s * np.array([[1.01, 0, 0], [0, 0, -1.2]])
    assert not tf.value(x).any()
    rng = np.random.default_rng(1)
    pts = tf.center + 0.8 * tf.s * rng.uniform(-0.5, 0.5, (10, 3))
    h = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (tf.value(pts + e) - tf.value(pts - e)) / (2 * h)
        np.testing.assert_allclose(tf.gradient(pts)[..., j], fd, atol=1e-7)
    np.testing.assert_allclose(tf.divergence(pts), np.trace(tf.gradient(pts), axis1=-2, axis2=-1))
    with pytest.raises(ValueError):
        TestFunction(np.zeros(3), 0.0, np.ones(3))


def test_test_functions_are_seeded():
    a = generate_test_functions(5, 11)
    b = generate_test_functions(5, 11)
    assert [t.to_dict() for t in a] == [t.to_dict() for t in b]
    # prefix stable: the i-th function does not depend on n
    assert a[2].to_dict() == generate_test_functions(3, 11)[2].to_dict()
    for t in a:
        assert np.linalg.norm(t.center) <= 2.0 and 0.5 <= t.s <= 1.5
        assert np.linalg.norm(t.coeffs) == pytest.approx(1.0)


def test_weak_residual_zero_and_rotation(zero, rotation):
    tfs = generate_test_functions(3, 7)
    for tf in tfs:
        assert weak_residual(zero, tf) == (0.0, 0.0)
        r, s = weak_residual(rotation, tf)
        assert s > 0 and r / s <= 1e-10


def test_weak_residual_detects_pressure_defect():
    tf = TestFunction(np.array([0.4, 0.0, 0.0]), 1.0, np.array([1.0, 0.0, 0.0]))
    clean = get_field("abc:1,1,1")
    bad = get_field("corrupt:abc:1,1,1:pressure_shift:0.1")
    r0, s0 = weak_residual(clean, tf)
    r1, s1 = weak_residual(bad, tf)
    assert r0 / s0 <= 1e-8 and r1 / s1 >= 1e-3


def test_weak_residual_convergence_failure(abc):
    tf = generate_test_functions(1, 0)[0]
    with pytest.raises(ConvergenceError):
        weak_residual(abc, tf, QuadConfig(n_theta=2, max_refinements=1), radial_order=2, refine_tol=1e-14)


def test_suite_report_shape(rotation):
    rep = weak_form_suite(rotation, n=2, seed=7)
    d = rep.to_dict()
    assert d["n"] == 2 and d["seed"] == 7 and d["pass"]
    assert len(d["test_functions"]) == 2 and d["max_normalized"] == max(d["normalized"])
