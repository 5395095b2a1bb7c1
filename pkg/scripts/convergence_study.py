"""Sup errors against the closed form on the unit disk, with observed rates.

    python scripts/convergence_study.py specs/branched.json --n 8,16,32,64
"""

import argparse
import math

from cpapprox.pipeline import convergence_report, load_spec


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("spec")
    ap.add_argument("--n", default=None, help="comma separated mesh list")
    ap.add_argument("--probe-radius", type=float, default=None)
    args = ap.parse_args()

    spec = load_spec(args.spec)
    if args.n:
        spec = spec.with_meshes(int(t) for t in args.n.split(","))
    rep = convergence_report(spec, probe_radius=args.probe_radius)

    print(f"{'n':>4} {'status':>8} {'f err':>11} {'rate':>6} {'ratio err':>11} {'rate':>6} {'sweeps':>6}")
    prev = None
    for row in rep.rows:
        f, q = row.get("f_error"), row.get("ratio_error")
        rf = rq = ""
        if prev and f and prev[1] and f > 0 and prev[1] > 0:
            k = math.log(row["n"] / prev[0])
            rf = f"{math.log(prev[1] / f) / k:6.2f}"
            rq = f"{math.log(prev[2] / q) / k:6.2f}" if q and prev[2] else ""
        status = "ok" if row["status"] == "ok" else "failed"
        fs = f"{f:11.3e}" if f is not None else f"{'-':>11}"
        qs = f"{q:11.3e}" if q is not None else f"{'-':>11}"
        print(f"{row['n']:>4} {status:>8} {fs} {rf:>6} {qs} {rq:>6} {row.get('sweeps', ''):>6}")
        prev = (row["n"], f, q)


if __name__ == "__main__":
    main()
