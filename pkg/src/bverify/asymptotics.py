"""Decay diagnostics at large radius and the small-ball Morrey estimate.

Everything here is a finite-range diagnostic: a log-spaced radius grid stands
in for an arbitrary sequence R_k, so a verdict only speaks for radii up to
the end of the grid.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from bverify.fields import AnalyticField, DecayClass
from bverify.identities import FLOOR, ContractError, inequality_report, phi
from bverify.quadrature import (
    DEFAULT_CONFIG,
    ConvergenceError,
    QuadConfig,
    cumulative_weighted_integral,
    sphere_integral,
    sphere_rule,
)

SEQUENCE_THRESHOLD = 1e-6


def _csv(header, xs, ys) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for a, b in zip(xs, ys):
        w.writerow([repr(float(a)), repr(float(b))])
    return buf.getvalue()


def tangential_profile(field, radii, cfg: QuadConfig = DEFAULT_CONFIG) -> np.ndarray:
    """t(R) = int_{|x|=R} |u_T|^2 dS at each radius."""
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and increasing")
    out = np.empty(radii.size)
    for i, R in enumerate(radii):
        try:
            out[i] = sphere_integral(field, "uT2", float(R), cfg)
        except ConvergenceError as exc:
            raise ConvergenceError(f"tangential profile failed at R={R}: {exc}", exc.estimates) from exc
    return out


def _ols(x, y):
    """Slope, intercept and coefficient of determination of y ~ a + b x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return math.nan, math.nan, math.nan
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - intercept - slope * x) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return slope, intercept, r2


def trend_exponent(radii, t) -> float:
    """Least-squares slope of ln t against ln R over the top two decades.

    ln t is first averaged over a one-decade window in ln R, shrunk
    symmetrically near the ends of the grid so that a pure power law keeps
    its exact slope.
    """
    radii = np.asarray(radii, dtype=float)
    t = np.asarray(t, dtype=float)
    ok = t > 0
    lr_all, lt_all = np.log(radii[ok]), np.log(t[ok])
    if lr_all.size < 2:
        return math.nan
    sel = lr_all >= lr_all[-1] - math.log(100.0)
    if np.count_nonzero(sel) < 2:
        return math.nan
    half = 0.5 * math.log(10.0)
    lo, hi = lr_all[0], lr_all[-1]
    centres = lr_all[sel]
    smooth = np.empty(centres.size)
    for k, c in enumerate(centres):
        w = min(half, c - lo, hi - c)
        smooth[k] = lt_all[np.abs(lr_all - c) <= w + 1e-12].mean()
    return _ols(centres, smooth)[0]


@dataclass(frozen=True)
class DecayVerdict:
    field: str
    radii: np.ndarray
    t_values: np.ndarray
    inf_t: float
    max_t: float
    trend_exponent: float
    classification: str
    contradiction: bool
    max_velocity_sample: float
    threshold: float = SEQUENCE_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "field": self.field,
            "classification": self.classification,
            "contradiction": self.contradiction,
            "inf_t": self.inf_t,
            "max_t": self.max_t,
            "trend_exponent": None if math.isnan(self.trend_exponent) else self.trend_exponent,
            "threshold": self.threshold,
            "max_velocity_sample": self.max_velocity_sample,
            "R": [float(r) for r in self.radii],
            "t": [float(v) for v in self.t_values],
        }


def _max_speed(field, r_lo, r_hi, n_shells=64):
    rule = sphere_rule(8, 16)
    radii = np.geomspace(r_lo, r_hi, n_shells)
    x = radii[:, None, None] * rule.nodes[None]
    u, _ = field.func(x)
    u0, _ = field.func(np.zeros(3))
    return float(max(np.max(np.linalg.norm(u, axis=-1)), np.linalg.norm(u0)))


def liouville_scan(
    field: AnalyticField,
    R_max: float,
    grid_size: int = 64,
    cfg: QuadConfig = DEFAULT_CONFIG,
    R_min: Optional[float] = None,
    threshold: float = SEQUENCE_THRESHOLD,
) -> DecayVerdict:
    """Look for radii along which the tangential energy on spheres vanishes.

    For a genuine Beltrami flow such radii force u = 0, so finding them on a
    field that is demonstrably nonzero sets the ``contradiction`` flag: the
    input cannot be a Beltrami flow.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    R_min = R_max / 1000.0 if R_min is None else R_min
    if not (0 < R_min < R_max):
        raise ValueError("need 0 < R_min < R_max")
    radii = np.geomspace(R_min, R_max, grid_size)
    t = tangential_profile(field, radii, cfg)
    max_t = float(np.max(t))
    inf_t = float(np.min(t))
    if max_t <= FLOOR:
        cls = "trivial"
    elif inf_t <= threshold * max_t:
        cls = "sequence_found"
    else:
        cls = "no_sequence_up_to_Rmax"
    speed = _max_speed(field, min(R_min, 1e-2), R_max)
    return DecayVerdict(
        field=field.id,
        radii=radii,
        t_values=t,
        inf_t=inf_t,
        max_t=max_t,
        trend_exponent=trend_exponent(radii, t),
        classification=cls,
        contradiction=cls == "sequence_found" and speed > FLOOR,
        max_velocity_sample=speed,
        threshold=threshold,
    )


def holder_chain_check(field, R: float, q: float, cfg: QuadConfig = DEFAULT_CONFIG, tol=1e-8):
    """int |u_T|^2 dS <= C (int |u_T|^q dS)^(2/q) R^(2(q-2)/q), C = (4 pi)^((q-2)/q)."""
    if not (2 < q <= 3):
        raise ValueError("q must lie in (2, 3]")
    # |u_T|^q has a branch point where u_T vanishes, so Gauss converges
    # algebraically there; allow more doublings at a looser tolerance.
    qcfg = cfg.with_(
        refine_tol=max(cfg.refine_tol, 1e-8), max_refinements=max(cfg.max_refinements, 6)
    )
    lhs = sphere_integral(field, "uT2", R, cfg)
    lq = sphere_integral(field, "uTq", R, qcfg, q=q)
    C = (4.0 * math.pi) ** ((q - 2.0) / q)
    rhs = C * max(lq, 0.0) ** (2.0 / q) * R ** (2.0 * (q - 2.0) / q)
    return inequality_report(
        "holder_chain", field, lhs, rhs, tol, cfg, {"R": R, "q": q}, {"int_uT_q": lq, "C": C}
    )


@dataclass(frozen=True)
class WeightedTail:
    functional: str
    alpha: float
    radii: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    last_decade_increment: float
    field: str = ""
    nondecreasing: bool = True

    def to_csv(self) -> str:
        return _csv(("R", "value"), self.radii, self.values)

    def summary(self) -> dict:
        return {
            "field": self.field,
            "functional": self.functional,
            "alpha": self.alpha,
            "total": float(self.values[-1]),
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "last_decade_increment": self.last_decade_increment,
            "nondecreasing": self.nondecreasing,
        }


def _tail(field, g, alpha, R_grid, cfg) -> WeightedTail:
    R_grid = np.asarray(R_grid, dtype=float)
    vals = cumulative_weighted_integral(field, g, R_grid, alpha=alpha, cfg=cfg)
    slope, intercept, r2 = _ols(np.log(R_grid), vals)
    total = float(vals[-1])
    start = np.searchsorted(R_grid, R_grid[-1] / 10.0 * (1 - 1e-12))
    inc = float(vals[-1] - vals[start])
    rel_inc = inc / total if abs(total) > FLOOR else 0.0
    slack = 1e-12 * max(float(np.max(np.abs(vals))), FLOOR)
    return WeightedTail(
        functional=g,
        alpha=float(alpha),
        radii=R_grid,
        values=vals,
        slope=slope,
        intercept=intercept,
        r_squared=r2,
        last_decade_increment=rel_inc,
        field=field.id,
        nondecreasing=bool(np.all(np.diff(vals) >= -slack)),
    )


def weighted_radial_tail(field, mu: float, R_grid, cfg: QuadConfig = DEFAULT_CONFIG) -> WeightedTail:
    """I(R) = int_0^R s^-mu t(s) ds on an increasing grid; mu <= 1."""
    if mu > 1:
        raise ValueError("mu must not exceed 1")
    return _tail(field, "uT2", mu, R_grid, cfg)


def tail_dichotomy(field, R_grid, cfg: QuadConfig = DEFAULT_CONFIG):
    """Cumulative |u_T|^2/|x| and |u_N|^2/|x| integrals over B_R.

    For a nontrivial flow with |u| <= K/|x| the first grows like ln R and the
    second converges.
    """
    if field.decay_class not in (DecayClass.ALGEBRAIC, DecayClass.ZERO):
        raise ContractError(f"{field.id} does not decay algebraically")
    R_grid = np.asarray(R_grid, dtype=float)
    if R_grid[-1] < 100.0 * R_grid[0]:
        raise ValueError("grid must span at least two decades")
    return _tail(field, "uT2", 1.0, R_grid, cfg), _tail(field, "uN2", 1.0, R_grid, cfg)


@dataclass(frozen=True)
class MorreyEstimate:
    rho: np.ndarray
    values: np.ndarray
    sup: float
    phi1: Optional[float]
    bounded: Optional[bool]
    phi_values: Optional[np.ndarray] = None
    field: str = ""
    tol: float = 1e-6

    def to_csv(self) -> str:
        return _csv(("rho", "value"), self.rho, self.values)

    def summary(self) -> dict:
        out = {
            "field": self.field,
            "sup": self.sup,
            "phi1": self.phi1,
            "bounded": self.bounded,
            "rho_min": float(self.rho[0]),
            "rho_max": float(self.rho[-1]),
            "n": int(self.rho.size),
        }
        if self.phi_values is not None:
            out["chain_holds"] = bool(
                np.all(self.values <= self.phi_values * (1 + self.tol) + FLOOR)
            )
        return out


def morrey_estimate(
    field,
    rho_max: float = 1.0,
    per_decade: int = 64,
    cfg: QuadConfig = DEFAULT_CONFIG,
    decades: int = 4,
    tol: float = 1e-6,
    with_phi: bool = False,
) -> MorreyEstimate:
    """rho^-1 int_{B_rho} |u|^2 on a log grid in (0, rho_max].

    The sup over the grid is a lower bound on the true sup. For a Beltrami
    field and rho_max <= 1 it is compared with phi(1).
    """
    if not rho_max > 0:
        raise ValueError("rho_max must be positive")
    rho = np.geomspace(rho_max * 10.0**-decades, rho_max, decades * per_decade + 1)
    vals = cumulative_weighted_integral(field, "u2", rho, cfg=cfg) / rho
    sup = float(np.max(vals))
    phi1 = bounded = None
    phis = None
    if field.beltrami:
        phi1 = phi(field, 1.0, cfg)
        if rho_max <= 1.0:
            bounded = sup <= phi1 * (1.0 + tol) + FLOOR
        if with_phi:
            phis = np.array([phi(field, float(r), cfg) for r in rho])
    return MorreyEstimate(rho, vals, sup, phi1, bounded, phis, field.id, tol)


def summary_json(obj) -> str:
    return json.dumps(obj.summary(), sort_keys=False)
