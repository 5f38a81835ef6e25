"""phi profiles for every catalog field, with monotonicity verdicts.

    python scripts/phi_profiles.py --r-min 0.1 --r-max 10 --n 32 --out results/profiles
"""

import argparse
import json
from pathlib import Path

import numpy as np

from bverify.fields import get_field
from bverify.identities import check_monotone, phi_profile

FIELDS = ("zero", "abc:1,1,1", "abc:0.5,2,1", "rotation", "spheromak")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--r-min", type=float, default=0.1)
    ap.add_argument("--r-max", type=float, default=10.0)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--fields", nargs="+", default=list(FIELDS))
    ap.add_argument("--out", type=Path, default=Path("results/profiles"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    radii = np.geomspace(args.r_min, args.r_max, args.n)
    verdicts = {}
    for fid in args.fields:
        field = get_field(fid)
        prof = phi_profile(field, radii)
        name = fid.replace(":", "_").replace(",", "-")
        (args.out / f"{name}.csv").write_text(prof.to_csv())
        v = check_monotone(prof)
        verdicts[fid] = {"beltrami": field.beltrami, **v.to_dict()}
        print(f"{fid:>14}: phi in [{v.min_phi:.6g}, {max(prof.phi):.6g}], monotone pass={v.passed}")
    (args.out / "monotone.json").write_text(json.dumps(verdicts, indent=2) + "\n")


if __name__ == "__main__":
    main()
