"""Command line entry point.

    cpapprox run --spec problem.json --out results/
    cpapprox report --spec problem.json --n 8,16,32 --probe-radius 0.4
    cpapprox render --spec problem.json --out figures/ --pair
    cpapprox check-branch --spec problem.json

Exit status is 0 when every mesh succeeds, 2 when some mesh fails and 1
when the problem spec cannot be used.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from cpapprox.branch_check import verify_branch_structure
from cpapprox.complex import BranchAssignment, MeshTooCoarse, SnapFailed, build_subcomplex, snap_branch_points
from cpapprox.pipeline import SpecError, convergence_report, load_spec, radii_csv, run_pipeline
from cpapprox.render import OverlapDetected, render_svg

log = logging.getLogger("cpapprox")

EXIT_OK, EXIT_SPEC, EXIT_FAILED = 0, 1, 2


def _mesh_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpapprox", description="Branched circle packing approximation of analytic maps.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--spec", required=True, help="problem spec (JSON)")
        p.add_argument("--n", type=_mesh_list, help="override the mesh list, e.g. 8,16,32")
        if out:
            p.add_argument("--out", default=".", help="output directory")
        return p

    p = common(sub.add_parser("run", help="solve every mesh and write the requested artifacts"))
    p.add_argument("--probe-radius", type=float)
    p = common(sub.add_parser("report", help="write report.csv and print it"))
    p.add_argument("--probe-radius", type=float)
    p = common(sub.add_parser("render", help="write packing_<n>.svg"))
    p.add_argument("--pair", action="store_true", help="draw source and target side by side")
    p.add_argument("--edges", action="store_true", help="draw carrier edges")
    common(sub.add_parser("check-branch", help="snap critical points and test the branch structure"), out=False)
    return parser


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _render(results, out: Path, pair: bool, edges: bool) -> bool:
    ok = True
    for res in results:
        if not res.ok:
            continue
        try:
            _write(out, f"packing_{res.n}.svg", render_svg(res.cpmap if pair else res.solution, edges=edges))
        except OverlapDetected as exc:
            log.error("n=%d: %s", res.n, exc)
            ok = False
    return ok


def cmd_run(spec, args) -> int:
    out = Path(args.out)
    results = run_pipeline(spec)
    ok = all(r.ok for r in results)
    if "radii" in spec.outputs:
        for res in results:
            if res.ok:
                _write(out, f"radii_{res.n}.csv", radii_csv(res))
    if "report" in spec.outputs:
        _write(out, "report.csv", convergence_report(spec, results, args.probe_radius).to_csv())
    if "svg" in spec.outputs:
        ok &= _render(results, out, pair=False, edges=False)
    for res in results:
        if not res.ok:
            log.error("n=%d: %s", res.n, res.error)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_report(spec, args) -> int:
    results = run_pipeline(spec)
    text = convergence_report(spec, results, args.probe_radius).to_csv()
    _write(Path(args.out), "report.csv", text)
    sys.stdout.write(text)
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAILED


def cmd_render(spec, args) -> int:
    results = run_pipeline(spec)
    ok = _render(results, Path(args.out), args.pair, args.edges)
    return EXIT_OK if ok and all(r.ok for r in results) else EXIT_FAILED


def cmd_check_branch(spec, args) -> int:
    status = EXIT_OK
    for n in spec.meshes:
        entry = {"n": n}
        try:
            cx = build_subcomplex(spec.domain, n, spec.xi)
            br = snap_branch_points(cx, spec.crit) if spec.crit else BranchAssignment()
            w = verify_branch_structure(cx, br, ambient=True)
            entry["branch_vertices"] = [list(cx.coords(v)) for v in br.vertices]
            if w is None:
                entry["ok"] = True
            else:
                entry.update(ok=False, cycle=[list(c) for c in w.cycle], length=w.length, enclosed_weight=w.enclosed_weight)
                status = EXIT_FAILED
        except (MeshTooCoarse, SnapFailed) as exc:
            entry.update(ok=False, error=f"{type(exc).__name__}: {exc}")
            status = EXIT_FAILED
        print(json.dumps(entry, sort_keys=True))
    return status


COMMANDS = {"run": cmd_run, "report": cmd_report, "render": cmd_render, "check-branch": cmd_check_branch}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        spec = load_spec(args.spec)
        if args.n:
            spec = spec.with_meshes(args.n)
    except SpecError as exc:
        log.error("%s", exc)
        return EXIT_SPEC
    return COMMANDS[args.command](spec, args)


if __name__ == "__main__":
    sys.exit(main())
