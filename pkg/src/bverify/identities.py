"""Both sides of the mean value identities for the radial diagnostic phi.

    phi(r) = -2 int_{|x|=r} (p + |u_N|^2) dS

For a smooth solution phi(r) also equals -(2/r) int_{B_r} (3p + |u|^2) dx,
and for a Beltrami flow it is nonnegative and nondecreasing. Each check
returns an :class:`IdentityReport` holding both sides and the residuals.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from bverify.fields import AnalyticField
from bverify.quadrature import (
    DEFAULT_CONFIG,
    QuadConfig,
    ball_integral,
    compensated_sum,
    self_converge,
    shell_weighted_integral,
    sphere_integral,
)

FLOOR = 1e-14
DEFAULT_TOL = 1e-6
DEFAULT_FD_TOL = 1e-5

IDENTITIES = (
    "mean_value",
    "alpha_family",
    "phi_derivative",
    "phi_derivative_tangential",
    "beltrami_phi",
    "normal_bound",
    "shell",
    "energy_chain",
    "regularized_mean_value",
)


class ContractError(ValueError):
    """An identity was requested for a field that does not meet its hypotheses."""


@dataclass(frozen=True)
class IdentityReport:
    identity: str
    field: str
    lhs: float
    rhs: float
    abs_residual: float
    rel_residual: float
    tolerance: float
    passed: bool
    params: dict = dc_field(default_factory=dict)
    quad: dict = dc_field(default_factory=dict)
    kind: str = "equality"
    values: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        params = {k: self.params.get(k) for k in ("R", "r", "alpha", "h")}
        params.update({k: v for k, v in self.params.items() if k not in params})
        out = {
            "field": self.field,
            "identity": self.identity,
            "kind": self.kind,
            "params": params,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "abs_residual": self.abs_residual,
            "rel_residual": self.rel_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "quad": dict(self.quad),
        }
        if self.values:
            out["values"] = dict(self.values)
        return out


def _residuals(lhs, rhs):
    abs_res = abs(lhs - rhs)
    return abs_res, abs_res / max(abs(lhs), abs(rhs), FLOOR)


def equality_report(identity, field, lhs, rhs, tol, cfg, params, values=None) -> IdentityReport:
    abs_res, rel_res = _residuals(lhs, rhs)
    if max(abs(lhs), abs(rhs)) < FLOOR:
        ok = abs_res <= tol
    else:
        ok = rel_res <= tol
    return IdentityReport(
        identity, field.id, float(lhs), float(rhs), float(abs_res), float(rel_res), tol,
        bool(ok), params, cfg.as_dict(), "equality", values or {},
    )


def inequality_report(identity, field, lhs, rhs, tol, cfg, params, values=None) -> IdentityReport:
    """Report for ``lhs <= rhs``, accepted up to ``rhs * tol`` of slack."""
    abs_res, rel_res = _residuals(lhs, rhs)
    ok = lhs <= rhs + tol * max(abs(rhs), FLOOR)
    return IdentityReport(
        identity, field.id, float(lhs), float(rhs), float(abs_res), float(rel_res), tol,
        bool(ok), params, cfg.as_dict(), "inequality", values or {},
    )


def _require_beltrami(field, what):
    if not field.beltrami:
        raise ContractError(f"{what} presupposes a Beltrami flow (p = -|u|^2/2); {field.id} is not")


# ---------------------------------------------------------------------------
# phi


def phi(field: AnalyticField, r: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    return -2.0 * sphere_integral(field, "p+uN2", r, cfg)


def phi_volume(field: AnalyticField, r: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    return -2.0 / r * ball_integral(field, "3p+u2", r, cfg)


@dataclass(frozen=True)
class PhiProfile:
    radii: np.ndarray
    phi: np.ndarray
    surf_p: np.ndarray
    surf_uN2: np.ndarray
    surf_uT2: np.ndarray
    surf_u2: np.ndarray
    field: str = ""

    COLUMNS = ("r", "phi", "surf_p", "surf_uN2", "surf_uT2", "surf_u2")

    def rows(self):
        cols = (self.radii, self.phi, self.surf_p, self.surf_uN2, self.surf_uT2, self.surf_u2)
        return [tuple(float(c[i]) for c in cols) for i in range(len(self.radii))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in self.rows():
            w.writerow([repr(v) for v in row])
        return buf.getvalue()


def phi_profile(field, radii, cfg: QuadConfig = DEFAULT_CONFIG) -> PhiProfile:
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be positive and strictly increasing")
    cols = {
        name: np.array([sphere_integral(field, name, float(r), cfg) for r in radii])
        for name in ("p", "uN2", "uT2", "u2")
    }
    return PhiProfile(
        radii=radii,
        phi=-2.0 * (cols["p"] + cols["uN2"]),
        surf_p=cols["p"],
        surf_uN2=cols["uN2"],
        surf_uT2=cols["uT2"],
        surf_u2=cols["u2"],
        field=field.id,
    )


@dataclass(frozen=True)
class MonotoneVerdict:
    nondecreasing: bool
    nonnegative: bool
    min_phi: float
    worst_drop: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.nondecreasing and self.nonnegative

    def to_dict(self) -> dict:
        return {
            "nondecreasing": self.nondecreasing,
            "nonnegative": self.nonnegative,
            "min_phi": self.min_phi,
            "worst_drop": self.worst_drop,
            "slack": self.slack,
            "pass": self.passed,
        }


def check_monotone(profile: PhiProfile, rel_slack: float = 1e-9) -> MonotoneVerdict:
    """Sampled phi must be nonnegative and nondecreasing up to the slack.

    ``min_phi`` stands in for the limit of phi at 0+; it is reported only.
    """
    v = np.asarray(profile.phi)
    slack = rel_slack * float(np.max(np.abs(v))) if v.size else 0.0
    drops = v[:-1] - v[1:]
    worst = float(np.max(drops)) if drops.size else 0.0
    return MonotoneVerdict(
        nondecreasing=bool(np.all(drops <= slack)),
        nonnegative=bool(np.all(v >= -slack)),
        min_phi=float(np.min(v)) if v.size else 0.0,
        worst_drop=worst,
        slack=slack,
    )


# ---------------------------------------------------------------------------
# checks


def check_mvf(field, R: float, cfg: QuadConfig = DEFAULT_CONFIG, tol: float = DEFAULT_TOL):
    """Sphere mean of p + |u_N|^2 against the ball integral of 3p + |u|^2."""
    lhs = sphere_integral(field, "p+uN2", R, cfg)
    rhs = ball_integral(field, "3p+u2", R, cfg) / R
    return equality_report("mean_value", field, lhs, rhs, tol, cfg, {"R": R})


def check_alpha_identity(
    field, r: float, R: float, alpha: float, cfg: QuadConfig = DEFAULT_CONFIG, tol=DEFAULT_TOL
):
    """R^(1-a) phi(R) - r^(1-a) phi(r) against the weighted shell integral."""
    if not (0 < r < R):
        raise ValueError("need 0 < r < R")
    a = float(alpha)
    phi_R, phi_r = phi(field, R, cfg), phi(field, r, cfg)
    lhs = R ** (1.0 - a) * phi_R - r ** (1.0 - a) * phi_r

    def g(u, p, x):
        u2 = np.sum(u * u, axis=-1)
        ux = np.sum(u * x, axis=-1)
        return (3.0 - a) * p + u2 - a * ux * ux / np.sum(x * x, axis=-1)

    rhs = -2.0 * shell_weighted_integral(field, g, r, R, a, cfg)
    return equality_report(
        "alpha_family", field, lhs, rhs, tol, cfg, {"R": R, "r": r, "alpha": a},
        {"phi_R": phi_R, "phi_r": phi_r},
    )


def default_fd_step(R: float) -> float:
    return max(1e-3, 1e-3 * R)


def phi_derivative(field, R: float, h: Optional[float] = None, cfg: QuadConfig = DEFAULT_CONFIG):
    """Central difference of phi with one Richardson step, O(h^4)."""
    h = default_fd_step(R) if h is None else h
    if not (R > h > 0):
        raise ValueError("need R > h > 0")

    def central(step):
        return (phi(field, R + step, cfg) - phi(field, R - step, cfg)) / (2.0 * step)

    d1, d2 = central(h), central(0.5 * h)
    return (4.0 * d2 - d1) / 3.0


def check_derivative_identities(
    field, R: float, h: Optional[float] = None, cfg: QuadConfig = DEFAULT_CONFIG,
    tol: float = DEFAULT_FD_TOL,
):
    """phi + R phi' and phi' against their sphere-integral expressions.

    Returns the pair of reports (full derivative form, tangential form).
    """
    h = default_fd_step(R) if h is None else h
    dphi = phi_derivative(field, R, h, cfg)
    phi_R = phi(field, R, cfg)
    params = {"R": R, "h": h}
    vals = {"phi": phi_R, "phi_prime": dphi}
    full = equality_report(
        "phi_derivative", field, phi_R + R * dphi,
        -2.0 * sphere_integral(field, "3p+u2", R, cfg), tol, cfg, params, vals,
    )
    tang = equality_report(
        "phi_derivative_tangential", field, dphi,
        -2.0 / R * sphere_integral(field, "2p+uT2", R, cfg), tol, cfg, params, vals,
    )
    return full, tang


def check_beltrami_phi(field, r: float, cfg: QuadConfig = DEFAULT_CONFIG, tol=DEFAULT_TOL):
    """Three expressions of phi for a Beltrami flow; residual is the worst pair."""
    _require_beltrami(field, "beltrami_phi")
    if not r > 0:
        raise ValueError("radius must be positive")
    from_def = phi(field, r, cfg)
    from_tangential = sphere_integral(field, "uT2-uN2", r, cfg)
    from_volume = ball_integral(field, "u2", r, cfg) / r
    vals = (from_def, from_tangential, from_volume)
    i, j = max(
        ((0, 1), (0, 2), (1, 2)), key=lambda ij: abs(vals[ij[0]] - vals[ij[1]])
    )
    return equality_report(
        "beltrami_phi", field, vals[i], vals[j], tol, cfg, {"r": r},
        {"phi": from_def, "tangential_minus_normal": from_tangential, "volume": from_volume},
    )


def check_normal_bound(field, R: float, cfg: QuadConfig = DEFAULT_CONFIG, tol: float = 1e-8):
    """int_{B_R} |u_N|^2/|x| <= (1/2R) int_{B_R} |u|^2."""
    _require_beltrami(field, "normal_bound")
    lhs = shell_weighted_integral(field, "uN2", 0.0, R, 1.0, cfg)
    rhs = ball_integral(field, "u2", R, cfg) / (2.0 * R)
    return inequality_report("normal_bound", field, lhs, rhs, tol, cfg, {"R": R, "r": 0.0, "alpha": 1.0})


def check_shell_identity(field, r: float, R: float, cfg: QuadConfig = DEFAULT_CONFIG, tol=DEFAULT_TOL):
    """2 int_{B_R minus B_r} |u_N|^2/|x| = phi(R) - phi(r)."""
    _require_beltrami(field, "shell")
    if not (0 < r < R):
        raise ValueError("need 0 < r < R")
    lhs = 2.0 * shell_weighted_integral(field, "uN2", r, R, 1.0, cfg)
    phi_R, phi_r = phi(field, R, cfg), phi(field, r, cfg)
    return equality_report(
        "shell", field, lhs, phi_R - phi_r, tol, cfg, {"R": R, "r": r, "alpha": 1.0},
        {"phi_R": phi_R, "phi_r": phi_r},
    )


def integrate_phi(field, a: float, b: float, cfg: QuadConfig = DEFAULT_CONFIG) -> float:
    """int_a^b phi(r) dr by Gauss-Legendre in r, doubled until settled."""

    def compute(level):
        t, w = np.polynomial.legendre.leggauss(cfg.panel_order << level)
        half = 0.5 * (b - a)
        vals = np.array([phi(field, float(a + half * (ti + 1.0)), cfg) for ti in t])
        return compensated_sum(half * w * vals), compensated_sum(half * w * np.abs(vals))

    return self_converge(compute, cfg, f"integrate_phi({a}, {b})")


def check_energy_chain(field, cfg: QuadConfig = DEFAULT_CONFIG, tol: float = 1e-8):
    """int_{B_2}|u|^2 >= int_{B_2}(|u_T|^2-|u_N|^2) >= int_1^2 phi >= phi(1)."""
    _require_beltrami(field, "energy_chain")
    energy = ball_integral(field, "u2", 2.0, cfg)
    split = ball_integral(field, "uT2-uN2", 2.0, cfg)
    phi_int = integrate_phi(field, 1.0, 2.0, cfg)
    phi_1 = phi(field, 1.0, cfg)
    chain = [energy, split, phi_int, phi_1]
    links = [
        chain[k + 1] <= chain[k] + tol * max(abs(chain[k]), FLOOR) for k in range(3)
    ]
    gaps = [chain[k] - chain[k + 1] for k in range(3)]
    abs_res, rel_res = _residuals(energy, phi_1)
    return IdentityReport(
        "energy_chain", field.id, energy, phi_1, abs_res, rel_res, tol, all(links),
        {}, cfg.as_dict(), "chain",
        {
            "energy": energy,
            "tangential_minus_normal": split,
            "phi_integral": phi_int,
            "phi_1": phi_1,
            "gaps": gaps,
            "links": links,
        },
    )
