"""Closed-form stationary Euler fields and pointwise vector calculus.

Every field maps an array of points with shape ``(..., 3)`` to a velocity of
the same shape and a pressure of shape ``(...)``. Evaluation is pure, so fields
can be shared freely between threads.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

EvalFn = Callable[[np.ndarray], "tuple[np.ndarray, np.ndarray]"]

DEFAULT_FD_STEP = 1e-4


class CatalogError(KeyError):
    """Unknown or malformed field id."""


class OriginError(ValueError):
    """Normal/tangential decomposition requested at x = 0."""


class DecayClass(enum.Enum):
    PERIODIC = "periodic"
    ALGEBRAIC = "algebraic"
    ZERO = "zero"


@dataclass(frozen=True)
class AnalyticField:
    """A velocity/pressure pair given in closed form.

    ``angular_scale`` is the angular wavenumber scale of the field per unit
    radius; quadrature uses ``angular_scale * R`` to size sphere rules.
    ``sphere_degree`` is set when the velocity restricted to every sphere is a
    polynomial of that degree in the unit normal, which allows small rules.
    """

    id: str
    func: EvalFn = dc_field(repr=False, compare=False)
    params: tuple = ()
    beltrami: bool = False
    lam: Optional[float] = None
    decay_class: DecayClass = DecayClass.PERIODIC
    decay_rate: Optional[float] = None
    angular_scale: float = 0.0
    sphere_degree: Optional[int] = None
    solution: bool = True

    def __call__(self, x):
        return evaluate(self, x)


def evaluate(field: AnalyticField, x):
    """Return ``(u, p)`` at the point(s) ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError(f"points must have trailing dimension 3, got {x.shape}")
    u, p = field.func(x)
    if x.ndim == 1:
        return u, float(p)
    return u, p


# ---------------------------------------------------------------------------
# catalog members


def _zero(x):
    return np.zeros_like(x), np.zeros(x.shape[:-1])


def _abc(A, B, C):
    def func(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        u = np.stack(
            [
                A * np.sin(x3) + C * np.cos(x2),
                B * np.sin(x1) + A * np.cos(x3),
                C * np.sin(x2) + B * np.cos(x1),
            ],
            axis=-1,
        )
        return u, -0.5 * np.sum(u * u, axis=-1)

    return func


def _rotation(x):
    x1, x2 = x[..., 0], x[..., 1]
    u = np.stack([-x2, x1, np.zeros_like(x1)], axis=-1)
    return u, 0.5 * (x1 * x1 + x2 * x2)


# Switch point between the Taylor series and the closed forms below. The
# series has 16 terms and is accurate to rounding for r < 1; the closed forms
# lose accuracy to cancellation well above 1e-3, hence the larger cutoff.
_SERIES_CUTOFF = 1.0
_NTERMS = 16


def _series_coeffs():
    # j1(r)/r = sum_k (-1)^(k+1) 2k r^(2k-2) / (2k+1)!,  k >= 1
    # j1'(r)  = sum_k (-1)^(k+1) 2k(2k-1) r^(2k-2) / (2k+1)!
    # (j1/r - j1')/r^2 = sum_{k>=2} (-1)^k 4k(k-1) r^(2k-4) / (2k+1)!
    a = [(-1) ** (k + 1) * 2 * k / math.factorial(2 * k + 1) for k in range(1, _NTERMS + 1)]
    b = [
        (-1) ** (k + 1) * 2 * k * (2 * k - 1) / math.factorial(2 * k + 1)
        for k in range(1, _NTERMS + 1)
    ]
    c = [(-1) ** k * 4 * k * (k - 1) / math.factorial(2 * k + 1) for k in range(2, _NTERMS + 2)]
    # polyval wants highest degree first, argument r^2
    return np.array(a[::-1]), np.array(b[::-1]), np.array(c[::-1])


_A_SER, _B_SER, _C_SER = _series_coeffs()


def j1(r):
    """Spherical Bessel function of the first kind, order one."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = np.abs(r) < _SERIES_CUTOFF
    rs = r[small]
    out[small] = rs * np.polyval(_A_SER, rs * rs)
    rl = r[~small]
    out[~small] = np.sin(rl) / rl**2 - np.cos(rl) / rl
    return out if out.ndim else float(out)


def _radial_profiles(r):
    """Return ``j1(r)/r``, ``j1'(r)`` and ``(j1(r)/r - j1'(r))/r**2``."""
    a = np.empty_like(r)
    b = np.empty_like(r)
    c = np.empty_like(r)
    small = r < _SERIES_CUTOFF
    r2 = r[small] ** 2
    a[small] = np.polyval(_A_SER, r2)
    b[small] = np.polyval(_B_SER, r2)
    c[small] = np.polyval(_C_SER, r2)
    rl = r[~small]
    sinr, cosr = np.sin(rl), np.cos(rl)
    al = (sinr - rl * cosr) / rl**3
    j0 = sinr / rl
    a[~small] = al
    b[~small] = j0 - 2.0 * al
    c[~small] = (3.0 * al - j0) / rl**2
    return a, b, c


def _spheromak(x):
    # u_r = 2 j1 cos(t)/r, u_t = -(j1/r + j1') sin(t), u_f = j1 sin(t), rewritten
    # through sin(t) e_t = cos(t) e_r - e_z and sin(t) e_f = (-y, x, 0)/r:
    #   u = (j1/r - j1') z x / r^2 + (j1/r + j1') e_z + (j1/r) (-y, x, 0)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    r = np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    a, b, c = _radial_profiles(r)
    zc = x3 * c
    u = np.stack([zc * x1 - a * x2, zc * x2 + a * x1, zc * x3 + a + b], axis=-1)
    return u, -0.5 * np.sum(u * u, axis=-1)


def bump(x):
    """exp(-1/(1-|x|^2)) inside the unit ball, zero outside."""
    x = np.asarray(x, dtype=float)
    s = np.sum(x * x, axis=-1)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside]))
    return out


def zero_field() -> AnalyticField:
    return AnalyticField(
        "zero", _zero, beltrami=True, lam=0.0, decay_class=DecayClass.ZERO, sphere_degree=0
    )


def abc_field(A: float = 1.0, B: float = 1.0, C: float = 1.0) -> AnalyticField:
    return AnalyticField(
        f"abc:{_fmt(A)},{_fmt(B)},{_fmt(C)}",
        _abc(A, B, C),
        params=(A, B, C),
        beltrami=True,
        lam=1.0,
        decay_class=DecayClass.PERIODIC,
        angular_scale=1.0,
    )


def rotation_field() -> AnalyticField:
    return AnalyticField(
        "rotation",
        _rotation,
        beltrami=False,
        lam=None,
        decay_class=DecayClass.PERIODIC,
        sphere_degree=1,
    )


def spheromak_field() -> AnalyticField:
    return AnalyticField(
        "spheromak",
        _spheromak,
        beltrami=True,
        lam=1.0,
        decay_class=DecayClass.ALGEBRAIC,
        decay_rate=1.0,
        sphere_degree=2,
    )


def corrupt(base: AnalyticField, mode: str, delta: float, seed: int = 0) -> AnalyticField:
    """Perturb ``base`` by ``delta`` times the unit bump centred at the origin.

    ``pressure_shift`` adds the bump to the pressure; ``velocity_noise`` adds
    the bump times a unit vector drawn from ``seed``. The result is flagged as
    a non-solution.
    """
    if not delta > 0:
        raise ValueError("corruption amplitude must be positive")
    if mode == "pressure_shift":

        def func(x):
            u, p = base.func(x)
            return u, p + delta * bump(x)

        tag = f"corrupt:{base.id}:pressure_shift:{_fmt(delta)}"
    elif mode == "velocity_noise":
        e = np.random.default_rng(seed).standard_normal(3)
        e /= np.linalg.norm(e)

        def func(x):
            u, p = base.func(x)
            return u + delta * bump(x)[..., None] * e, p

        tag = f"corrupt:{base.id}:velocity_noise:{_fmt(delta)}:{seed}"
    else:
        raise CatalogError(f"unknown corruption mode {mode!r}")
    return AnalyticField(
        tag,
        func,
        params=(delta, seed),
        beltrami=False,
        lam=None,
        decay_class=base.decay_class,
        decay_rate=base.decay_rate,
        angular_scale=base.angular_scale,
        sphere_degree=base.sphere_degree,
        solution=False,
    )


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


_CORRUPT_RE = re.compile(
    r"^corrupt:(?P<base>.+):(?P<mode>pressure_shift|velocity_noise):(?P<delta>[^:]+)(?::(?P<seed>-?\d+))?$"
)


def get_field(field_id: str) -> AnalyticField:
    """Look up a catalog field by its string id."""
    fid = field_id.strip()
    if fid == "zero":
        return zero_field()
    if fid == "rotation":
        return rotation_field()
    if fid == "spheromak":
        return spheromak_field()
    if fid == "abc":
        return abc_field()
    if fid.startswith("abc:"):
        try:
            A, B, C = (float(t) for t in fid[4:].split(","))
        except ValueError:
            raise CatalogError(f"malformed ABC id {field_id!r}, expected abc:A,B,C") from None
        return abc_field(A, B, C)
    m = _CORRUPT_RE.match(fid)
    if m:
        try:
            delta = float(m["delta"])
        except ValueError:
            raise CatalogError(f"bad corruption amplitude in {field_id!r}") from None
        seed = int(m["seed"]) if m["seed"] is not None else 0
        return corrupt(get_field(m["base"]), m["mode"], delta, seed)
    raise CatalogError(f"unknown field id {field_id!r}")


CATALOG = {
    "zero": zero_field,
    "abc:A,B,C": abc_field,
    "rotation": rotation_field,
    "spheromak": spheromak_field,
}


def catalog_listing() -> list[dict]:
    rows = []
    for key, make in CATALOG.items():
        f = make()
        rows.append(
            {
                "id": key,
                "beltrami": f.beltrami,
                "lambda": f.lam,
                "decay_class": f.decay_class.value,
                "decay_rate": f.decay_rate,
            }
        )
    rows.append(
        {
            "id": "corrupt:<base>:<mode>:<delta>[:<seed>]",
            "beltrami": False,
            "lambda": None,
            "decay_class": "inherited",
            "decay_rate": None,
        }
    )
    return rows


# ---------------------------------------------------------------------------
# pointwise operations


@dataclass(frozen=True)
class Decomposition:
    normal: np.ndarray
    tangential: np.ndarray
    cross_tangential: np.ndarray


def decompose(u, x) -> Decomposition:
    """Split ``u`` at ``x`` into its radial projection and the remainder.

    ``cross_tangential`` is ``u × x/|x|``, which has the same norm as the
    tangential part but is rotated by a right angle within the tangent plane.
    """
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise OriginError("normal/tangential split is undefined at the origin")
    coef = np.sum(u * x, axis=-1) / r2
    normal = coef[..., None] * x
    return Decomposition(
        normal=normal,
        tangential=u - normal,
        cross_tangential=np.cross(u, x / np.sqrt(r2)[..., None]),
    )


def _jacobian_fd(field, x, h):
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        up, _ = field.func(x + e)
        um, _ = field.func(x - e)
        cols.append((up - um) / (2.0 * h))
    # J[..., i, j] = d u_i / d x_j
    return np.stack(cols, axis=-1)


def curl_fd(field: AnalyticField, x, h: float = DEFAULT_FD_STEP):
    """Central-difference curl, O(h^2)."""
    if not h > 0:
        raise ValueError("step must be positive")
    J = _jacobian_fd(field, x, h)
    return np.stack(
        [
            J[..., 2, 1] - J[..., 1, 2],
            J[..., 0, 2] - J[..., 2, 0],
            J[..., 1, 0] - J[..., 0, 1],
        ],
        axis=-1,
    )


def divergence_fd(field: AnalyticField, x, h: float = DEFAULT_FD_STEP):
    if not h > 0:
        raise ValueError("step must be positive")
    J = _jacobian_fd(field, x, h)
    d = J[..., 0, 0] + J[..., 1, 1] + J[..., 2, 2]
    return float(d) if np.ndim(d) == 0 else d


def beltrami_residuals(field: AnalyticField, points, h: float = DEFAULT_FD_STEP):
    """Max of ``|curl u - lam u|`` and of ``|p + |u|^2/2|`` over ``points``.

    The curl residual is ``None`` when the field has no constant eigenvalue.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    u, p = field.func(points)
    pres = float(np.max(np.abs(p + 0.5 * np.sum(u * u, axis=-1))))
    if field.lam is None:
        return None, pres
    w = curl_fd(field, points, h)
    curl_res = float(np.max(np.linalg.norm(w - field.lam * u, axis=-1)))
    return curl_res, pres


def sample_ball(n: int, radius: float, seed: int = 0) -> np.ndarray:
    """``n`` seeded points uniformly distributed in the ball of given radius."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    r = radius * rng.random(n) ** (1.0 / 3.0)
    return d * r[:, None]
