"""Distributional residuals and mollified identities.

The weak form of the stationary Euler system is tested against vector bumps
with closed-form gradients,

    int (u.c)(u.grad b) dx + int p (c.grad b) dx = 0,

for test fields phi = c b((x - x0)/s). Mollification uses the normalized bump
kernel; convolutions are evaluated with a fixed set of kernel offsets, so the
discrete mollifier commutes with differentiation exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from bverify.fields import AnalyticField, bump
from bverify.identities import FLOOR, equality_report, inequality_report
from bverify.quadrature import (
    DEFAULT_CONFIG,
    ConvergenceError,
    QuadConfig,
    RadialRule,
    ball_integral,
    compensated_sum,
    sphere_integral,
    sphere_rule,
)

# 1 / int_{|y|<1} exp(-1/(1-|y|^2)) dy, from 40-digit adaptive quadrature
KERNEL_CONSTANT = 2.2671167396083264584

DEFAULT_NODE_BUDGET = 10**9


class CostError(RuntimeError):
    """Nested quadrature would exceed the configured node budget."""


# ---------------------------------------------------------------------------
# rules on the unit ball


def _graded_unit_breakpoints(levels: int = 8):
    # bump and its derivatives are below 1e-50 beyond 1 - 2^-8
    inner = 1.0 - 0.5 ** np.arange(1, levels)
    return np.concatenate([[0.0], inner, [1.0]])


@dataclass(frozen=True, eq=False)
class BallRule:
    """Nodes and weights on the closed unit ball (volume element included)."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.weights.size


@lru_cache(maxsize=32)
def ball_rule(radial_order: int, n_theta: int, n_phi: int, graded: bool = True) -> BallRule:
    b = _graded_unit_breakpoints() if graded else np.array([0.0, 1.0])
    rad = RadialRule.from_breakpoints(b, radial_order)
    sph = sphere_rule(n_theta, n_phi)
    nodes = (rad.nodes[:, None, None] * sph.nodes[None]).reshape(-1, 3)
    weights = ((rad.weights * rad.nodes**2)[:, None] * sph.weights[None]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return BallRule(nodes, weights)


@dataclass(frozen=True)
class Mollifier:
    """rho_eps(x) = eps^-3 rho(x/eps), rho = c exp(-1/(1-|x|^2)) on |x| < 1."""

    eps: float
    radial_order: int = 6
    n_theta: int = 6
    n_phi: int = 12
    graded: bool = True

    def __post_init__(self):
        if not (0 < self.eps <= 1):
            raise ValueError("eps must lie in (0, 1]")

    @property
    def rule(self):
        """Kernel offsets in the unit ball and weights rho(y) dy."""
        return _kernel_rule(self.radial_order, self.n_theta, self.n_phi, self.graded)

    @property
    def size(self) -> int:
        return self.rule[1].size

    def density(self, x):
        x = np.asarray(x, dtype=float) / self.eps
        return KERNEL_CONSTANT * bump(x) / self.eps**3

    def apply(self, f: Callable, x):
        """f_eps at the points ``x``; ``f`` maps (..., 3) points to (..., k) or (...)."""
        x = np.asarray(x, dtype=float)
        offsets, w = self.rule
        flat = x.reshape(-1, 3)
        out = []
        block = max(1, (1 << 20) // w.size)
        for i in range(0, flat.shape[0], block):
            pts = flat[i : i + block, None, :] - self.eps * offsets[None]
            v = np.asarray(f(pts), dtype=float)
            v = np.moveaxis(v, 1, -1) if v.ndim > 2 else v
            out.append(compensated_sum(v * w, axis=-1))
        res = np.concatenate(out, axis=0)
        return res.reshape(x.shape[:-1] + res.shape[1:])


@lru_cache(maxsize=32)
def _kernel_rule(radial_order, n_theta, n_phi, graded):
    br = ball_rule(radial_order, n_theta, n_phi, graded)
    w = br.weights * KERNEL_CONSTANT * bump(br.nodes)
    w.setflags(write=False)
    return br.nodes, w


def contraction_mollifier(eps: float) -> Mollifier:
    """Graded 4-point panels with a 4 x 8 angular rule; unit mass to ~1e-6."""
    return Mollifier(eps, radial_order=4, n_theta=4, n_phi=8)


def reduced_mollifier(eps: float) -> Mollifier:
    """8 radial x 8 x 8 angular kernel nodes, for nested quadrature."""
    return Mollifier(eps, radial_order=8, n_theta=8, n_phi=8, graded=False)


def mollify_value(f: Callable, eps: float, x, mollifier: Optional[Mollifier] = None):
    """f_eps(x) = int f(y) rho_eps(x - y) dy."""
    m = mollifier if mollifier is not None else Mollifier(eps)
    if m.eps != eps:
        m = replace(m, eps=eps)
    out = m.apply(f, np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def mollified_normal_form(field: AnalyticField, eps: float, x, mollifier: Optional[Mollifier] = None):
    """|x|^-2 int (u(y).x)^2 rho_eps(x - y) dy."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0):
        raise ValueError("mollified normal form is undefined at the origin")
    m = mollifier if mollifier is not None else Mollifier(eps)
    if m.eps != eps:
        m = replace(m, eps=eps)
    flat = x.reshape(-1, 3)
    out = np.empty(flat.shape[0])
    for i, xi in enumerate(flat):

        def f(pts, xi=xi):
            u, _ = field.func(pts)
            return np.sum(u * xi, axis=-1) ** 2

        out[i] = m.apply(f, xi) / np.dot(xi, xi)
    out = out.reshape(x.shape[:-1])
    return float(out) if out.ndim == 0 else out


class _ScalarField:
    """Duck-typed field whose "pressure" is a scalar function."""

    angular_scale = 1.0
    sphere_degree = None
    beltrami = False

    def __init__(self, f, fid):
        self._f = f
        self.id = fid

    def func(self, x):
        return np.zeros(x.shape[:-1] + (3,)), np.asarray(self._f(x), dtype=float)


NESTED_CONFIG = QuadConfig(n_theta=8, n_phi=16, refine_tol=1e-8, max_refinements=2)


def check_l1_contraction(
    f: Callable, eps: float, R: float, cfg: QuadConfig = NESTED_CONFIG,
    mollifier: Optional[Mollifier] = None, tol: float = 1e-8, name: str = "f",
):
    """int_{B_R} |f_eps| <= int_{B_{R+eps}} |f|."""
    if not (0 < eps <= 1) or not R > 0:
        raise ValueError("need eps in (0, 1] and R > 0")
    m = mollifier if mollifier is not None else contraction_mollifier(eps)
    if m.eps != eps:
        m = replace(m, eps=eps)
    inner = _ScalarField(lambda pts: m.apply(f, pts), f"mollified:{name}")
    outer = _ScalarField(f, name)
    absval = lambda u, p, x: np.abs(p)
    lhs = ball_integral(inner, absval, R, cfg)
    rhs = ball_integral(outer, absval, R + eps, cfg)
    return inequality_report(
        "l1_contraction", outer, lhs, rhs, tol, cfg, {"R": R, "eps": eps}
    )


class _MollifiedMoments:
    """Outer evaluator returning ((u u^T)_eps, p_eps) at each point."""

    sphere_degree = None
    beltrami = False

    def __init__(self, field, mollifier):
        self.field = field
        self.m = mollifier
        self.id = f"mollified:{field.id}"
        self.angular_scale = max(field.angular_scale, 1.0)
        self.evaluations = 0

    def func(self, x):
        def moments(pts):
            u, p = self.field.func(pts)
            uu = u[..., :, None] * u[..., None, :]
            return np.concatenate([uu.reshape(uu.shape[:-2] + (9,)), p[..., None]], axis=-1)

        self.evaluations += int(np.prod(x.shape[:-1])) * self.m.size
        out = self.m.apply(moments, x)
        return out[..., :9].reshape(x.shape[:-1] + (3, 3)), out[..., 9]


def _mvf_lhs(M, p, x):
    return p + np.einsum("...i,...ij,...j->...", x, M, x) / np.sum(x * x, axis=-1)


def _mvf_rhs(M, p, x):
    return 3.0 * p + np.trace(M, axis1=-2, axis2=-1)


def check_regularized_mvf(
    field: AnalyticField, R: float, eps: float, cfg: QuadConfig = NESTED_CONFIG,
    tol: float = 1e-3, node_budget: int = DEFAULT_NODE_BUDGET,
    mollifier: Optional[Mollifier] = None,
):
    """int_{|x|=R} (p_eps + v_N,eps) dS = (1/R) int_{B_R} (3 p_eps + (|u|^2)_eps) dx."""
    if not (0 < eps <= 0.1):
        raise ValueError("eps must lie in (0, 0.1]")
    m = mollifier if mollifier is not None else reduced_mollifier(eps)
    # worst case: every refinement level of the ball integral
    n_sph = (cfg.n_theta or cfg.min_n_theta) * (cfg.n_phi or 2 * cfg.min_n_theta)
    n_rad = cfg.panel_order * max(1, math.ceil(R / cfg.panel_width))
    outer = sum(n_sph * 4**k * n_rad * 2**k for k in range(cfg.max_refinements + 1))
    if outer * m.size > node_budget:
        raise CostError(f"nested quadrature needs ~{outer * m.size:.3g} nodes > budget {node_budget:.3g}")
    mf = _MollifiedMoments(field, m)
    lhs = sphere_integral(mf, _mvf_lhs, R, cfg)
    rhs = ball_integral(mf, _mvf_rhs, R, cfg) / R
    return equality_report(
        "regularized_mean_value", field, lhs, rhs, tol, cfg, {"R": R, "eps": eps},
        {"kernel_nodes": m.size, "evaluations": mf.evaluations},
    )


# ---------------------------------------------------------------------------
# weak form


@dataclass(frozen=True)
class TestFunction:
    """phi(x) = c b((x - center)/s) with b the unit bump."""

    __test__ = False  # not a pytest class

    center: np.ndarray
    s: float
    coeffs: np.ndarray
    seed: tuple = ()

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("support radius must be positive")

    def profile_grad(self, x):
        """(b, grad b) at ``x``, derivatives taken in x."""
        y = (np.asarray(x, dtype=float) - self.center) / self.s
        r2 = np.sum(y * y, axis=-1)
        b = np.zeros_like(r2)
        g = np.zeros_like(y)
        inside = r2 < 1.0
        d = 1.0 - r2[inside]
        bi = np.exp(-1.0 / d)
        b[inside] = bi
        g[inside] = (-2.0 * bi / (d * d))[:, None] * y[inside] / self.s
        return b, g

    def value(self, x):
        b, _ = self.profile_grad(x)
        return b[..., None] * self.coeffs

    def gradient(self, x):
        """grad phi with entry [..., i, j] = d phi_i / d x_j."""
        _, g = self.profile_grad(x)
        return self.coeffs[:, None] * g[..., None, :]

    def divergence(self, x):
        _, g = self.profile_grad(x)
        return g @ self.coeffs

    def to_dict(self) -> dict:
        return {
            "center": [float(v) for v in self.center],
            "s": self.s,
            "coeffs": [float(v) for v in self.coeffs],
            "seed": list(self.seed),
        }


def generate_test_functions(n: int, seed: int, center_radius: float = 2.0, s_range=(0.5, 1.5)):
    """``n`` reproducible test fields with supports inside B_{center_radius + s}."""
    out = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        d = rng.standard_normal(3)
        d /= np.linalg.norm(d)
        center = d * center_radius * rng.random() ** (1.0 / 3.0)
        s = float(rng.uniform(*s_range))
        c = rng.standard_normal(3)
        c /= np.linalg.norm(c)
        out.append(TestFunction(center, s, c, (seed, i)))
    return out


def weak_residual(
    field: AnalyticField, tf: TestFunction, cfg: QuadConfig = DEFAULT_CONFIG,
    radial_order: int = 16, refine_tol: float = 1e-8,
):
    """(|int u (x) u : grad phi + int p div phi|, int |u|^2 |grad phi|).

    Integrates over the support ball in spherical coordinates about its
    centre, doubling the rule until the residual settles to ``refine_tol``
    times the scale.
    """
    nt = cfg.n_theta or max(16, math.ceil(4.0 * max(field.angular_scale, 1.0) * tf.s) + 8)

    cnorm = float(np.linalg.norm(tf.coeffs))

    def compute(level):
        br = ball_rule(radial_order << level, nt << level, (2 * nt) << level)
        integrand = np.empty(br.size)
        mag = np.empty(br.size)
        for i in range(0, br.size, 1 << 19):
            x = tf.center + tf.s * br.nodes[i : i + (1 << 19)]
            u, p = field.func(x)
            _, g = tf.profile_grad(x)
            sl = slice(i, i + x.shape[0])
            integrand[sl] = (u @ tf.coeffs) * np.sum(u * g, axis=-1) + p * (g @ tf.coeffs)
            mag[sl] = np.sum(u * u, axis=-1) * cnorm * np.linalg.norm(g, axis=-1)
        w = br.weights * tf.s**3
        return compensated_sum(integrand * w), compensated_sum(mag * w)

    prev, _ = compute(0)
    for level in range(1, cfg.max_refinements + 1):
        cur, scale = compute(level)
        if abs(cur - prev) <= refine_tol * max(scale, FLOOR):
            return abs(cur), scale
        prev = cur
    raise ConvergenceError(f"weak residual did not settle for test function {tf.seed}", [prev, cur])


@dataclass(frozen=True)
class WeakFormReport:
    field: str
    seed: int
    residuals: tuple
    scales: tuple
    normalized: tuple
    tolerance: float
    test_functions: tuple = ()

    @property
    def max_normalized(self) -> float:
        return max(self.normalized) if self.normalized else 0.0

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.normalized)

    def to_dict(self) -> dict:
        return {
            "field": self.field,
            "seed": self.seed,
            "n": len(self.residuals),
            "residuals": list(self.residuals),
            "scales": list(self.scales),
            "normalized": list(self.normalized),
            "max_normalized": self.max_normalized,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "test_functions": [t.to_dict() for t in self.test_functions],
        }


def weak_form_suite(
    field: AnalyticField, n: int = 20, seed: int = 7, cfg: QuadConfig = DEFAULT_CONFIG,
    tol: float = 1e-6, **gen_kw,
) -> WeakFormReport:
    tfs = generate_test_functions(n, seed, **gen_kw)
    res, scl, nrm = [], [], []
    for tf in tfs:
        r, s = weak_residual(field, tf, cfg)
        res.append(r)
        scl.append(s)
        nrm.append(r / s if s > FLOOR else (0.0 if r <= FLOOR else math.inf))
    return WeakFormReport(field.id, seed, tuple(res), tuple(scl), tuple(nrm), tol, tuple(tfs))
