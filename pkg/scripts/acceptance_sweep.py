"""Run the CLI over a grid of fields and identities and tabulate the results.

Each (field, command) pair writes one NDJSON file; a pass/fail table goes to
sweep.csv. Exit status is nonzero if any clean field fails or any corrupted
field passes.

    python scripts/acceptance_sweep.py --out results/sweep --workers 4
"""

import argparse
import csv
import json
from pathlib import Path

from bverify.cli import main as cli

CLEAN = ("zero", "abc:1,1,1", "spheromak")
CORRUPTED = ("corrupt:abc:1,1,1:pressure_shift:0.1", "corrupt:spheromak:pressure_shift:0.1")


def jobs(workers):
    w = ["--workers", str(workers)]
    radii = ["--R", "0.5", "1", "2", "5"]
    for fid in CLEAN:
        yield fid, "verify", ["verify", "--field", fid, "--identity", "mvf,alpha,deriv,beltrami,bound,shell,chain",
                              *radii, "--alpha", "-1", "0", "1", "2", *w], True
    yield "rotation", "verify", ["verify", "--field", "rotation", "--identity", "mvf,alpha,deriv", *radii, *w], True
    for fid in ("rotation", "abc:1,1,1"):
        yield fid, "weakform", ["weakform", "--field", fid, "--n", "20", "--seed", "7"], True
    for fid in CORRUPTED:
        yield fid, "verify", ["verify", "--field", fid, "--identity", "mvf", "--R", "0.8", "2"], False
    yield "spheromak", "liouville", ["liouville", "--field", "spheromak", "--R-max", "1000"], True
    yield "spheromak", "morrey", ["morrey", "--field", "spheromak"], True


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", type=Path, default=Path("results/sweep"))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    rows, bad = [], 0
    for fid, cmd, argv, expect_pass in jobs(args.workers):
        path = args.out / f"{cmd}_{fid.replace(':', '_').replace(',', '-')}.ndjson"
        code = cli([*argv, "--out", str(path)])
        n = sum(1 for line in path.read_text().splitlines() if line.strip())
        ok = (code == 0) == expect_pass
        bad += not ok
        rows.append([fid, cmd, code, n, "expected" if ok else "UNEXPECTED"])
        print(f"{cmd:>9} {fid:<40} exit {code}  reports {n:3d}  {rows[-1][-1]}")
    with open(args.out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["field", "command", "exit_code", "reports", "verdict"])
        w.writerows(rows)
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
