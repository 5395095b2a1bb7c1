"""Branched packing with constant boundary modulus 1.4 and one simple branch point at 0.3.

Writes the regular source packing and the branched image side by side.

    python scripts/figure2.py --n 16 --out figure2.svg
"""

import argparse
from pathlib import Path

from cpapprox.pipeline import ProblemSpec, run_pipeline
from cpapprox.render import render_svg


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--x", type=float, default=0.3, help="branch point on the real axis")
    ap.add_argument("--out", default="figure2.svg")
    args = ap.parse_args()

    spec = ProblemSpec.from_dict(
        {
            "domain": {"kind": "disk", "center": [0, 0], "radius": 1},
            "lambda": 1.4,
            "crit": [[[args.x, 0], 1]],
            "xi": 0.7,
            "meshes": [args.n],
        }
    )
    (res,) = run_pipeline(spec)
    if not res.ok:
        raise SystemExit(res.error)
    Path(args.out).write_text(render_svg(res.cpmap))
    b = res.solution.branch.vertices[0]
    print(f"n={args.n}: branch vertex {res.complex.coords(b)}, {res.complex.num_vertices} circles -> {args.out}")


if __name__ == "__main__":
    main()
