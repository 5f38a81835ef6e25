"""Acceptance gate: twelve criteria, each at its stated tolerance.

Every criterion records one PASS/FAIL line; the lines are printed at the end
of the pytest session (see conftest.py) and immediately under ``-s``.
"""

import json
import math

import numpy as np
import pytest

from bverify.asymptotics import holder_chain_check, morrey_estimate, tail_dichotomy, liouville_scan
from bverify.cli import main
from bverify.fields import AnalyticField, beltrami_residuals, divergence_fd, get_field, sample_ball
from bverify.identities import (
    check_alpha_identity,
    check_beltrami_phi,
    check_derivative_identities,
    check_energy_chain,
    check_monotone,
    check_mvf,
    check_normal_bound,
    check_shell_identity,
    phi_derivative,
    phi_profile,
)
from bverify.weakform import check_l1_contraction, check_regularized_mvf, mollify_value, weak_form_suite

RESULTS = {}

ABC = "abc:1,1,1"


def record(number, title, ok, detail=""):
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}" + (f" -- {detail}" if detail else "")
    RESULTS[number] = line
    print(line)
    assert ok, line


def test_criterion_01_mean_value():
    worst_closed = 0.0
    for R in (1.0, 3.0):
        rep = check_mvf(get_field("rotation"), R)
        exact = 4 * math.pi / 3 * R**4
        worst_closed = max(worst_closed, abs(rep.lhs - exact) / exact, abs(rep.rhs - exact) / exact)
    worst = max(check_mvf(get_field(f), R).rel_residual
                for f in (ABC, "spheromak") for R in (0.5, 1.0, 2.0, 5.0))
    record(1, "mean value formula", worst_closed <= 1e-10 and worst <= 1e-6,
           f"rotation vs 4piR^4/3 {worst_closed:.2e}; ABC/spheromak max rel {worst:.2e}")


def test_criterion_02_alpha_family():
    worst, worst_tel = 0.0, 0.0
    for fid in (ABC, "spheromak", "rotation"):
        f = get_field(fid)
        for a in (-1.0, 0.0, 1.0, 2.0):
            whole = check_alpha_identity(f, 0.5, 2.0, a)
            left = check_alpha_identity(f, 0.5, 1.0, a)
            right = check_alpha_identity(f, 1.0, 2.0, a)
            worst = max(worst, whole.rel_residual)
            for side in ("lhs", "rhs"):
                w = getattr(whole, side)
                tel = abs(getattr(left, side) + getattr(right, side) - w) / max(abs(w), 1e-14)
                worst_tel = max(worst_tel, tel)
    record(2, "alpha family", worst <= 1e-6 and worst_tel <= 1e-6,
           f"max rel {worst:.2e}; telescoping over m=1 {worst_tel:.2e}")


def test_criterion_03_derivative_identities():
    d = phi_derivative(get_field("rotation"), 1.0)
    exact = -32 * math.pi / 3
    rot_err = abs(d - exact) / abs(exact)
    ok = rot_err <= 1e-8
    worst = 0.0
    for fid in (ABC, "spheromak"):
        for rep in check_derivative_identities(get_field(fid), 1.0):
            ok &= rep.passed and rep.tolerance == 1e-5
            worst = max(worst, rep.rel_residual)
    record(3, "derivative identities", ok, f"rotation phi'(1) rel err {rot_err:.2e}; ABC/spheromak max rel {worst:.2e}")


def test_criterion_04_beltrami_phi():
    worst = max(check_beltrami_phi(get_field(f), r).rel_residual for f in (ABC, "spheromak") for r in (0.5, 1.0, 2.0))
    radii = np.geomspace(0.1, 10.0, 32)
    mono = [check_monotone(phi_profile(get_field(f), radii), rel_slack=1e-9) for f in (ABC, "spheromak")]
    ok = worst <= 1e-6 and all(v.passed for v in mono)
    record(4, "Beltrami phi three ways + monotone", ok,
           f"three-way max rel {worst:.2e}; monotone {[v.passed for v in mono]}")


def test_criterion_05_bound_and_shell():
    ok, worst_shell, worst_slack = True, 0.0, -math.inf
    for fid in (ABC, "spheromak"):
        f = get_field(fid)
        for R in (0.5, 1.0, 2.0, 5.0):
            rep = check_normal_bound(f, R, tol=1e-8)
            ok &= rep.passed
            worst_slack = max(worst_slack, (rep.lhs - rep.rhs) / rep.rhs)
        for r, R in ((0.5, 1.0), (0.5, 2.0), (1.0, 5.0)):
            rep = check_shell_identity(f, r, R)
            ok &= rep.passed and rep.rel_residual <= 1e-6
            worst_shell = max(worst_shell, rep.rel_residual)
    record(5, "normal bound and shell identity", ok,
           f"shell max rel {worst_shell:.2e}; bound max (lhs-rhs)/rhs {worst_slack:.2e} (<= 1e-8)")


def test_criterion_06_energy_chain():
    reps = [check_energy_chain(get_field(f)) for f in (ABC, "spheromak", "zero")]
    record(6, "energy chain", all(r.passed for r in reps),
           "; ".join(f"{r.field}: gaps {[f'{g:.3g}' for g in r.values['gaps']]}" for r in reps))


def test_criterion_07_tail_dichotomy():
    tang, norm = tail_dichotomy(get_field("spheromak"), np.geomspace(10.0, 1000.0, 41))
    ok = tang.r_squared >= 0.99 and tang.slope > 0 and norm.last_decade_increment <= 0.01
    record(7, "tangential/normal tail dichotomy", ok,
           f"tangential slope {tang.slope:.4f} R^2 {tang.r_squared:.8f}; "
           f"normal last-decade increment {norm.last_decade_increment:.2e}")


def _azimuthal_unit():
    def func(x):
        rho = np.hypot(x[..., 0], x[..., 1])
        return np.stack([-x[..., 1] / rho, x[..., 0] / rho, 0 * rho], axis=-1), np.zeros(x.shape[:-1])

    return AnalyticField("azimuthal_unit", func, sphere_degree=0)


def test_criterion_08_holder_chain():
    reps = [holder_chain_check(get_field("spheromak"), R, 3.0) for R in (1.0, 10.0, 100.0)]
    eq = holder_chain_check(_azimuthal_unit(), 2.0, 3.0)
    ok = all(r.passed for r in reps) and eq.rel_residual <= 1e-10
    record(8, "Hoelder chain", ok,
           f"spheromak lhs/rhs {[round(r.lhs / r.rhs, 6) for r in reps]}; equality case rel {eq.rel_residual:.2e}")


def test_criterion_09_morrey():
    ests = [morrey_estimate(get_field(f), 1.0) for f in (ABC, "spheromak")]
    ok = all(m.sup <= m.phi1 * (1 + 1e-6) for m in ests)
    record(9, "Morrey bound on (0, 1]", ok,
           "; ".join(f"{m.field}: sup {m.sup:.10g} phi(1) {m.phi1:.10g}" for m in ests))


def test_criterion_10_weak_form():
    rot = weak_form_suite(get_field("rotation"), n=20, seed=7)
    abc = weak_form_suite(get_field(ABC), n=20, seed=7)
    bad = weak_form_suite(get_field("corrupt:abc:1,1,1:pressure_shift:0.1"), n=20, seed=7)
    clean = max(rot.max_normalized, abc.max_normalized)
    gap = bad.max_normalized / max(clean, 1e-300)
    ok = rot.passed and abc.passed and bad.max_normalized >= 1e-3 and gap >= 1e3
    record(10, "weak form residuals", ok,
           f"rotation {rot.max_normalized:.2e}, ABC {abc.max_normalized:.2e}, "
           f"corrupted max {bad.max_normalized:.2e} (gap {gap:.1e}x)")


def test_criterion_11_mollifier_suite():
    one = lambda y: np.ones(y.shape[:-1])
    x0 = np.array([0.3, -0.2, 0.4])
    norm_err = max(abs(mollify_value(one, e, x0) - 1.0) for e in (0.01, 0.05, 0.1))
    contraction = True
    for fid in (ABC, "spheromak", "rotation"):
        f = get_field(fid)
        u2 = lambda y, f=f: np.sum(f.func(y)[0] ** 2, axis=-1)
        for e in (0.01, 0.05, 0.1):
            contraction &= check_l1_contraction(u2, e, 1.0, name=fid).passed
    reg = [check_regularized_mvf(get_field(f), 1.0, 0.05) for f in ("rotation", ABC)]
    g = lambda y: np.sin(y[..., 0]) * np.cos(y[..., 1]) + y[..., 2] ** 2
    x = np.array([0.3, 0.2, 0.1])
    errs = [abs(mollify_value(g, e, x) - float(g(x))) for e in (0.1, 0.05)]
    ratio = errs[0] / errs[1]
    ok = norm_err <= 1e-8 and contraction and all(r.rel_residual <= 1e-3 for r in reg) and 3.5 <= ratio <= 4.5
    record(11, "mollifier suite", ok,
           f"normalization {norm_err:.1e}; contraction {contraction}; "
           f"regularized rel {[f'{r.rel_residual:.1e}' for r in reg]}; eps^2 ratio {ratio:.4f}")


def _strip(text):
    objs = [json.loads(l) for l in text.splitlines()]
    for o in objs:
        o["manifest"].pop("timestamp")
    return json.dumps(objs)


def test_criterion_12_field_self_validation(tmp_path):
    pts = sample_ball(100, 5.0, seed=2024)
    worst_curl = worst_div = 0.0
    for fid in (ABC, "spheromak"):
        f = get_field(fid)
        c, _ = beltrami_residuals(f, pts)
        worst_curl = max(worst_curl, c)
        worst_div = max(worst_div, float(np.max(np.abs(divergence_fd(f, pts)))))
    z = get_field("zero")
    zero_reps = [check_mvf(z, 1.0), check_alpha_identity(z, 0.5, 2.0, 1.0), *check_derivative_identities(z, 1.0),
                 check_beltrami_phi(z, 1.0), check_normal_bound(z, 1.0), check_shell_identity(z, 0.5, 2.0),
                 check_energy_chain(z), check_regularized_mvf(z, 1.0, 0.05)]
    zero_ok = all(r.passed and r.abs_residual == 0.0 for r in zero_reps)
    zero_ok &= weak_form_suite(z, n=5, seed=7).residuals == (0.0,) * 5
    zero_ok &= liouville_scan(z, 100.0, grid_size=8).classification == "trivial"
    zero_ok &= beltrami_residuals(z, pts) == (0.0, 0.0)
    argv = ["verify", "--field", "spheromak", "--identity", "mvf,alpha,shell", "--R", "1", "3",
            "--alpha", "-1", "2"]
    outs = []
    for k in range(2):
        p = tmp_path / f"run{k}.ndjson"
        main([*argv, "--out", str(p)])
        outs.append(_strip(p.read_text()))
    deterministic = outs[0] == outs[1]
    ok = worst_curl <= 1e-5 and worst_div <= 1e-5 and zero_ok and deterministic
    record(12, "field self-validation", ok,
           f"curl {worst_curl:.1e}, div {worst_div:.1e}; zero field exact {zero_ok}; byte-identical {deterministic}")
