"""Command-line entry point.

    bverify list
    bverify verify --field rotation --identity mvf --R 1
    bverify profile --field abc:1,1,1 --r-min 0.1 --r-max 10 --n 32
    bverify liouville --field spheromak --R-max 1000
    bverify morrey --field spheromak --rho-max 1
    bverify weakform --field rotation --n 20 --seed 7
    bverify tail --field spheromak --mu 1 --R 10 1000 --grid 41

JSON output is one object per line. Exit status: 0 when every check passes,
1 when any fails, 2 on usage errors, 3 when quadrature does not converge.
Defaults can be overridden through ``BVERIFY_<NAME>`` environment variables,
for example ``BVERIFY_TOL=1e-7`` or ``BVERIFY_WORKERS=4``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone

import numpy as np

from bverify import __version__
from bverify.asymptotics import (
    holder_chain_check,
    liouville_scan,
    morrey_estimate,
    tail_dichotomy,
    weighted_radial_tail,
)
from bverify.fields import CatalogError, catalog_listing, get_field
from bverify.identities import (
    ContractError,
    check_alpha_identity,
    check_beltrami_phi,
    check_derivative_identities,
    check_energy_chain,
    check_monotone,
    check_mvf,
    check_normal_bound,
    check_shell_identity,
    phi_profile,
)
from bverify.quadrature import ConvergenceError, QuadConfig
from bverify.weakform import CostError, check_regularized_mvf, weak_form_suite

ENV_PREFIX = "BVERIFY_"

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONVERGENCE = 0, 1, 2, 3


@dataclass
class Defaults:
    tol: float = 1e-6
    fd_tol: float = 1e-5
    bound_tol: float = 1e-8
    refine_tol: float = 1e-10
    max_refinements: int = 3
    panel_width: float = 1.0
    panel_order: int = 16
    ntheta: int = 0
    nphi: int = 0
    workers: int = 1
    seed: int = 7
    grid: int = 64
    eps: float = 0.05

    @classmethod
    def from_env(cls, environ=None) -> "Defaults":
        environ = os.environ if environ is None else environ
        d = cls()
        for f in fields(cls):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is not None:
                setattr(d, f.name, type(getattr(d, f.name))(raw))
        return d


class UsageError(Exception):
    pass


def _json_line(obj) -> str:
    return json.dumps(obj, default=_jsonable, allow_nan=True)


def _jsonable(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def quad_config(args, d: Defaults) -> QuadConfig:
    nt = args.ntheta if args.ntheta is not None else (d.ntheta or None)
    npf = args.nphi if args.nphi is not None else (d.nphi or None)
    return QuadConfig(
        n_theta=nt,
        n_phi=npf,
        panel_width=d.panel_width,
        panel_order=d.panel_order,
        refine_tol=d.refine_tol,
        max_refinements=d.max_refinements,
    )


def manifest(args, cfg: QuadConfig, grid: dict, seed=None, defaults: Defaults = None) -> dict:
    return {
        "command": args.command,
        "field": getattr(args, "field", None),
        "grid": grid,
        "quad": cfg.as_dict(),
        "defaults": None if defaults is None else asdict(defaults),
        "seed": seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _pmap(fn, items, workers):
    """Ordered map; independent items may run on a thread pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands


def cmd_list(args, d, out):
    for row in catalog_listing():
        out.write(_json_line(row) + "\n")
    return EXIT_PASS


VERIFY_IDS = ("mvf", "alpha", "deriv", "beltrami", "bound", "shell", "chain", "regmvf", "holder")
BELTRAMI_ONLY = {"beltrami", "bound", "shell", "chain"}


def _verify_tasks(field, ids, args, d):
    Rs = args.R or [1.0]
    alphas = args.alpha if args.alpha is not None else [0.0]
    tasks = []
    for ident in ids:
        if ident == "mvf":
            tasks += [("mvf", {"R": R}) for R in Rs]
        elif ident == "alpha":
            for R in Rs:
                for r in args.r or [0.25 * R]:
                    if not 0 < r < R:
                        raise UsageError(f"alpha identity needs 0 < r < R, got r={r}, R={R}")
                    tasks += [("alpha", {"r": r, "R": R, "alpha": a}) for a in alphas]
        elif ident == "deriv":
            tasks += [("deriv", {"R": R, "h": args.h}) for R in Rs]
        elif ident == "beltrami":
            tasks += [("beltrami", {"r": R}) for R in Rs]
        elif ident == "bound":
            tasks += [("bound", {"R": R}) for R in Rs]
        elif ident == "shell":
            for R in Rs:
                for r in args.r or [0.25 * R]:
                    if not 0 < r < R:
                        raise UsageError(f"shell identity needs 0 < r < R, got r={r}, R={R}")
                    tasks.append(("shell", {"r": r, "R": R}))
        elif ident == "chain":
            tasks.append(("chain", {}))
        elif ident == "regmvf":
            eps = args.eps if args.eps is not None else d.eps
            tasks += [("regmvf", {"R": R, "eps": eps}) for R in Rs]
        elif ident == "holder":
            qs = args.q or [3.0]
            tasks += [("holder", {"R": R, "q": q}) for R in Rs for q in qs]
    return tasks


def _run_verify_task(field, task, cfg, d):
    ident, p = task
    tol = d.tol
    if ident == "mvf":
        return [check_mvf(field, p["R"], cfg, tol)]
    if ident == "alpha":
        return [check_alpha_identity(field, p["r"], p["R"], p["alpha"], cfg, tol)]
    if ident == "deriv":
        return list(check_derivative_identities(field, p["R"], p["h"], cfg, d.fd_tol))
    if ident == "beltrami":
        return [check_beltrami_phi(field, p["r"], cfg, tol)]
    if ident == "bound":
        return [check_normal_bound(field, p["R"], cfg, d.bound_tol)]
    if ident == "shell":
        return [check_shell_identity(field, p["r"], p["R"], cfg, tol)]
    if ident == "chain":
        return [check_energy_chain(field, cfg, d.bound_tol)]
    if ident == "regmvf":
        return [check_regularized_mvf(field, p["R"], p["eps"])]
    if ident == "holder":
        return [holder_chain_check(field, p["R"], p["q"], cfg, d.bound_tol)]
    raise UsageError(f"unknown identity {ident!r}")


def _parse_identities(spec_list, field):
    ids = []
    for item in spec_list or ["mvf"]:
        for tok in item.split(","):
            tok = tok.strip()
            if tok == "all":
                ids += [i for i in VERIFY_IDS if field.beltrami or i not in BELTRAMI_ONLY]
            elif tok in VERIFY_IDS:
                if tok in BELTRAMI_ONLY and not field.beltrami:
                    raise UsageError(f"identity {tok!r} requires a Beltrami field; {field.id} is not")
                ids.append(tok)
            else:
                raise UsageError(f"unknown identity {tok!r}; choose from {', '.join(VERIFY_IDS)}, all")
    return list(dict.fromkeys(ids))


def cmd_verify(args, d, out):
    field = get_field(args.field)
    cfg = quad_config(args, d)
    ids = _parse_identities(args.identity, field)
    tasks = _verify_tasks(field, ids, args, d)
    man = manifest(args, cfg, {"identities": ids, "R": args.R, "r": args.r, "alpha": args.alpha,
                               "h": args.h, "q": args.q, "eps": args.eps}, defaults=d)
    results = _pmap(lambda t: _run_verify_task(field, t, cfg, d), tasks, args.workers or d.workers)
    ok = True
    for reports in results:
        for rep in reports:
            obj = rep.to_dict()
            obj["manifest"] = man
            out.write(_json_line(obj) + "\n")
            ok &= rep.passed
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_profile(args, d, out):
    field = get_field(args.field)
    cfg = quad_config(args, d)
    if not (0 < args.r_min < args.r_max) or args.n < 2:
        raise UsageError("need 0 < r_min < r_max and n >= 2")
    space = np.geomspace if args.scale == "log" else np.linspace
    radii = space(args.r_min, args.r_max, args.n)
    prof = phi_profile(field, radii, cfg)
    verdict = check_monotone(prof) if field.beltrami else None
    man = manifest(args, cfg, {"r_min": args.r_min, "r_max": args.r_max, "n": args.n, "scale": args.scale}, defaults=d)
    if args.format == "json":
        obj = {"field": field.id, "columns": list(prof.COLUMNS), "rows": prof.rows(), "manifest": man}
        if verdict is not None:
            obj["monotone"] = verdict.to_dict()
        out.write(_json_line(obj) + "\n")
    else:
        out.write(prof.to_csv())
        if verdict is not None:
            out.write("# " + _json_line({"monotone": verdict.to_dict()}) + "\n")
        out.write("# " + _json_line({"manifest": man}) + "\n")
    return EXIT_PASS if verdict is None or verdict.passed else EXIT_FAIL


def cmd_liouville(args, d, out):
    field = get_field(args.field)
    cfg = quad_config(args, d)
    grid = args.grid or d.grid
    v = liouville_scan(field, args.R_max, grid, cfg, R_min=args.R_min)
    obj = v.to_dict()
    obj["manifest"] = manifest(args, cfg, {"R_max": args.R_max, "R_min": float(v.radii[0]), "grid": grid}, defaults=d)
    out.write(_json_line(obj) + "\n")
    return EXIT_FAIL if v.contradiction else EXIT_PASS


def cmd_morrey(args, d, out):
    field = get_field(args.field)
    cfg = quad_config(args, d)
    per_decade = args.grid or d.grid
    m = morrey_estimate(field, args.rho_max, per_decade, cfg, tol=d.tol)
    man = manifest(args, cfg, {"rho_max": args.rho_max, "per_decade": per_decade, "decades": 4}, defaults=d)
    if args.format == "csv":
        out.write(m.to_csv())
        out.write("# " + _json_line({"summary": m.summary(), "manifest": man}) + "\n")
    else:
        obj = m.summary()
        obj["rho"] = m.rho
        obj["values"] = m.values
        obj["manifest"] = man
        out.write(_json_line(obj) + "\n")
    return EXIT_FAIL if m.bounded is False else EXIT_PASS


def cmd_weakform(args, d, out):
    field = get_field(args.field)
    cfg = quad_config(args, d)
    seed = args.seed if args.seed is not None else d.seed
    rep = weak_form_suite(field, args.n, seed, cfg, tol=d.tol)
    obj = rep.to_dict()
    obj["manifest"] = manifest(args, cfg, {"n": args.n}, seed=seed, defaults=d)
    out.write(_json_line(obj) + "\n")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_tail(args, d, out):
    field = get_field(args.field)
    cfg = quad_config(args, d)
    if not args.R or len(args.R) != 2:
        raise UsageError("tail needs --R R_lo R_hi")
    n = args.grid or 41
    grid = np.geomspace(args.R[0], args.R[1], n)
    if args.dichotomy:
        tails = tail_dichotomy(field, grid, cfg)
    else:
        tails = (weighted_radial_tail(field, args.mu if args.mu is not None else 1.0, grid, cfg),)
    man = manifest(args, cfg, {"R": args.R, "grid": n, "mu": args.mu, "dichotomy": args.dichotomy}, defaults=d)
    for t in tails:
        if args.format == "csv":
            out.write(t.to_csv())
            out.write("# " + _json_line({"summary": t.summary(), "manifest": man}) + "\n")
        else:
            obj = t.summary()
            obj["R"] = t.radii
            obj["values"] = t.values
            obj["manifest"] = man
            out.write(_json_line(obj) + "\n")
    return EXIT_PASS


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bverify", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"bverify {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, field=True):
        if field:
            sp.add_argument("--field", required=True, help="catalog id, e.g. abc:1,1,1")
        sp.add_argument("--ntheta", type=int, default=None, help="fixed Gauss-Legendre order in cos(theta)")
        sp.add_argument("--nphi", type=int, default=None, help="fixed azimuthal node count")
        sp.add_argument("--tol", type=float, default=None, help="identity tolerance (relative)")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        sp.add_argument("--out", default=None, help="write output to this path")

    common(sub.add_parser("list", help="show the field catalog"), field=False)

    v = sub.add_parser("verify", help="check identities on a field")
    common(v)
    v.add_argument("--identity", action="append", help=f"{', '.join(VERIFY_IDS)} or all; repeatable")
    v.add_argument("--R", type=float, nargs="+")
    v.add_argument("--r", type=float, nargs="+")
    v.add_argument("--alpha", type=float, nargs="+")
    v.add_argument("--h", type=float, default=None, help="finite-difference step for phi'")
    v.add_argument("--q", type=float, nargs="+")
    v.add_argument("--eps", type=float, default=None, help="mollifier scale")

    pr = sub.add_parser("profile", help="phi and its surface integrals on a radius grid")
    common(pr)
    pr.add_argument("--r-min", type=float, default=0.1)
    pr.add_argument("--r-max", type=float, default=10.0)
    pr.add_argument("--n", type=int, default=32)
    pr.add_argument("--scale", choices=("log", "lin"), default="log")

    lv = sub.add_parser("liouville", help="scan tangential energy on large spheres")
    common(lv)
    lv.add_argument("--R-max", type=float, default=1000.0)
    lv.add_argument("--R-min", type=float, default=None)
    lv.add_argument("--grid", type=int, default=None)

    mo = sub.add_parser("morrey", help="small-ball Morrey quotients")
    common(mo)
    mo.add_argument("--rho-max", type=float, default=1.0)
    mo.add_argument("--grid", type=int, default=None, help="points per decade")

    wf = sub.add_parser("weakform", help="weak-form residuals against seeded test fields")
    common(wf)
    wf.add_argument("--n", type=int, default=20)
    wf.add_argument("--seed", type=int, default=None)

    tl = sub.add_parser("tail", help="cumulative weighted tangential/normal integrals")
    common(tl)
    tl.add_argument("--R", type=float, nargs=2, default=[10.0, 1000.0])
    tl.add_argument("--mu", type=float, default=None)
    tl.add_argument("--grid", type=int, default=None)
    tl.add_argument("--dichotomy", action="store_true", help="tangential and normal tails with weight 1/|x|")
    return p


COMMANDS = {
    "list": cmd_list,
    "verify": cmd_verify,
    "profile": cmd_profile,
    "liouville": cmd_liouville,
    "morrey": cmd_morrey,
    "weakform": cmd_weakform,
    "tail": cmd_tail,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    d = Defaults.from_env()
    if args.tol is not None:
        d.tol = args.tol
    if args.format is None:
        args.format = "csv" if args.command == "profile" else "json"
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        return COMMANDS[args.command](args, d, out)
    except (UsageError, CatalogError, ContractError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, CatalogError) and exc.args else exc
        print(f"bverify: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, CostError) as exc:
        print(f"bverify: quadrature failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    finally:
        if args.out:
            out.close()
        else:
            out.flush()


if __name__ == "__main__":
    sys.exit(main())
