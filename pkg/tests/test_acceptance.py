"""Acceptance criteria, one test per criterion.

Each criterion computes its metrics, records a one-line verdict (printed in
the pytest terminal summary, or directly when run as a script) and asserts.

    pytest tests/test_acceptance.py -v
    python tests/test_acceptance.py
"""

import cmath
import math
import time
from functools import cache

import numpy as np

from cpapprox.branch_check import assignments, brute_force_check, cycle_table, verify_branch_structure
from cpapprox.complex import OFFSETS, BranchAssignment, DomainSpec, build_subcomplex, hex_patch
from cpapprox.cpmap import (
    CpMap,
    evaluate_many,
    log_ratio_laplacian,
    max_principle_audit,
    ratio_many,
)
from cpapprox.oracle import DiskProblem, F_eval, derivative, derivative_modulus
from cpapprox.pipeline import ProblemSpec, probe_grid, run_pipeline
from cpapprox.render import render_svg
from cpapprox.solver import SolverConfig, pack, solve_radii

MESHES = (8, 16, 32)
VERDICTS: dict[int, str] = {}


def record(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS[num] = line
    print(line)


def fmt(xs) -> str:
    return "[" + ", ".join(f"{x:.3e}" for x in xs) + "]"


def strictly_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def disk_spec(lam=1.0, crit=(), xi=0.5, meshes=MESHES) -> ProblemSpec:
    return ProblemSpec.from_dict(
        {
            "domain": {"kind": "disk", "center": [0, 0], "radius": 1},
            "lambda": lam,
            "crit": [[[c.real, c.imag], k] for c, k in crit],
            "xi": xi,
            "meshes": list(meshes),
        }
    )


@cache
def convergence_run(branched: bool):
    """Pipeline results plus sup errors on the half-radius probe disk for the two reproduction cases."""
    t0 = time.perf_counter()
    crit = ((0j, 1),) if branched else ()
    spec = disk_spec(crit=crit)
    results = run_pipeline(spec)
    problem = DiskProblem.constant(1.0, crit, 0.5)
    probe = probe_grid(spec, 0.5)
    exact = np.array([F_eval(problem, z) for z in probe])
    exact_abs = derivative_modulus(problem, probe)
    annulus = np.abs(probe) >= 0.1 - 1e-12
    f_err, q_err, q_err_annulus = [], [], []
    for res in results:
        assert res.ok, res.error
        f = evaluate_many(res.cpmap, probe)
        q = ratio_many(res.cpmap, probe)
        f_err.append(float(np.max(np.abs(f - exact))))
        q_err.append(float(np.max(np.abs(q - exact_abs))))
        q_err_annulus.append(float(np.max(np.abs(q - exact_abs)[annulus])))
    return results, f_err, q_err, q_err_annulus, time.perf_counter() - t0


def solve_audit(sol, n) -> bool:
    return sol.residuals.angle < 1e-10 and sol.residuals.tangency < 1e-8 * (2 / n)


# --------------------------------------------------------------------------


def test_criterion_1_identity_reproduction():
    results, f_err, q_err, _, elapsed = convergence_run(False)
    ok = strictly_decreasing(f_err) and f_err[-1] <= 0.05 and q_err[-1] <= 0.05 and elapsed < 60
    record(
        1,
        ok,
        f"sup|f_n - z| over n={MESHES}: {fmt(f_err)} (strictly decreasing: {strictly_decreasing(f_err)}); "
        f"sup|f_n# - 1| at n=32: {q_err[-1]:.3e}; {elapsed:.1f} s",
    )
    assert ok


def test_criterion_2_branched_reproduction():
    _, f_err, _, q_err, _ = convergence_run(True)
    ok = f_err[-1] <= 0.05 and q_err[-1] <= 0.1 and strictly_decreasing(f_err) and strictly_decreasing(q_err)
    record(2, ok, f"sup|f_n - z^2/2|: {fmt(f_err)}; sup over 0.1<=|z|<=0.5 of |f_n# - |z||: {fmt(q_err)}")
    assert ok


def near_boundary_probe(cx, n):
    """Carrier points within ``0.1/n`` of the carrier boundary, on and just inside boundary edges."""
    count: dict = {}
    for f in cx.faces.tolist():
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            count.setdefault((min(a, b), max(a, b)), []).append((a, b))
    pts = []
    for pairs in count.values():
        if len(pairs) != 1:
            continue
        a, b = pairs[0]
        pa, pb = cx.pos[a], cx.pos[b]
        inward = 1j * (pb - pa) / abs(pb - pa)  # faces are positively oriented
        for t in np.linspace(0.1, 0.9, 5):
            for s in (0.0, 0.05 / n, 0.1 / n):
                pts.append((1 - t) * pa + t * pb + s * inward)
    return np.array(pts)


def test_criterion_3_figure_two_analogue(tmp_path):
    spec = disk_spec(lam=1.4, crit=((0.3 + 0j, 1),), xi=0.7)
    results = run_pipeline(spec)
    ok = all(r.ok for r in results)
    pin = max(float(np.max(np.abs(r.cpmap.vertex_ratio[r.complex.boundary_vertices] - 1.4))) for r in results)
    ok &= pin <= 1e-12
    last = results[-1]
    svg = render_svg(last.cpmap)
    (tmp_path / "packing_32.svg").write_text(svg)
    ok &= svg.count("<circle") == 2 * last.complex.num_vertices
    q = ratio_many(last.cpmap, near_boundary_probe(last.complex, 32))
    ok &= bool(np.all((q >= 1.3) & (q <= 1.5)))
    record(
        3,
        ok,
        f"all meshes solved: {all(r.ok for r in results)}; max |ratio - 1.4| on boundary vertices {pin:.1e}; "
        f"f_n# near the boundary at n=32 in [{q.min():.4f}, {q.max():.4f}]",
    )
    assert ok


def test_criterion_4_solver_correctness():
    accepted = [r for case in (False, True) for r in convergence_run(case)[0]]
    residuals_ok = all(solve_audit(r.solution, r.n) for r in accepted)

    cx = build_subcomplex(DomainSpec.disk(), 16)
    rng = np.random.default_rng(2024)
    theta = np.angle(cx.pos[cx.boundary_vertices])
    rho = np.exp(0.3 * np.cos(theta) + 0.2 * np.sin(2 * theta)) / 16
    br = BranchAssignment.simple([cx.vertex_at(1, 1)])
    runs = []
    for seed in (1, 2):
        init = rng.uniform(0.5, 1.5, cx.num_vertices) / 16
        runs.append(solve_radii(cx, rho, br, SolverConfig(method="gauss-seidel", seed=seed), init=init).r)
    agree = float(np.max(np.abs(runs[1] / runs[0] - 1)))
    base = solve_radii(cx, rho, br).r
    scale_err = max(float(np.max(np.abs(solve_radii(cx, c * rho, br).r / (c * base) - 1))) for c in (0.5, 2.0, 10.0))
    sol = pack(cx, rho, br)
    residuals_ok &= solve_audit(sol, 16)
    ok = residuals_ok and agree < 1e-6 and scale_err < 1e-9
    record(
        4,
        ok,
        f"residual and tangency audits: {residuals_ok}; random sweep orders agree to {agree:.1e}; "
        f"scale equivariance error {scale_err:.1e}",
    )
    assert ok


def test_criterion_5_maximum_principles():
    cx = build_subcomplex(DomainSpec.disk(), 8)
    nb = len(cx.boundary_vertices)
    violations, configs = 0, 0
    for seed in range(6):
        rng = np.random.default_rng(100 + seed)
        size = int(rng.integers(1, 3))
        br = BranchAssignment.simple(rng.choice(cx.interior_vertices, size, replace=False))
        if verify_branch_structure(cx, br, ambient=True) is not None:
            continue
        rho1 = rng.uniform(0.5, 2.0, nb) / 8
        rho2 = rng.uniform(0.5, 2.0, nb) / 8
        m0 = CpMap.from_target(pack(cx, rho1))
        m1 = CpMap.from_target(pack(cx, rho1, br))
        m2 = CpMap.from_target(pack(cx, rho2, br))
        configs += 1
        for a, b in ((m1, m2), (m0, m1)):
            try:
                max_principle_audit(a, b)
            except AssertionError:
                violations += 1
    ok = configs >= 5 and violations == 0
    record(5, ok, f"{configs} random configurations at n=8, {violations} interior extrema")
    assert ok


def test_criterion_6_branch_checker():
    mismatches, total = 0, 0
    for g in (1, 2, 3):
        cx = hex_patch(g)
        table = cycle_table(cx, 10)
        for br in assignments(cx, 4):
            fast = verify_branch_structure(cx, br)
            slow = brute_force_check(cx, br, 2 * br.total_order + 2, table=table)
            total += 1
            same = (fast is None) == (slow is None)
            if same and fast is not None:
                same = (fast.length, fast.enclosed_weight) == (slow.length, slow.enclosed_weight)
            mismatches += not same
    p3 = hex_patch(3)

    def at(*coords):
        return BranchAssignment.simple([p3.vertex_at(k, l) for k, l in coords])

    flower = verify_branch_structure(p3, at((0, 0), *OFFSETS))
    flower_ok = flower is not None and (flower.length, flower.enclosed_weight) == (12, 7)
    accepted = all(
        verify_branch_structure(p3, at(*c)) is None
        for c in ([(0, 0)], [(0, 0), (1, 0)], [(0, 0), (1, 0), (0, 1)])
    )
    ok = mismatches == 0 and flower_ok and accepted
    record(
        6,
        ok,
        f"{total} assignments on 1-3 generation patches, {mismatches} disagreements; "
        f"flower witness {(flower.length, flower.enclosed_weight) if flower else None}; "
        f"single/pair/face accepted: {accepted}",
    )
    assert ok


def test_criterion_7_oracle_self_consistency():
    def lam(t):
        return np.exp(0.5 * np.cos(t) + 0.2 * np.sin(2 * t))

    crit = ((0.4j, 1), (-0.3 + 0.1j, 2))
    problem = DiskProblem.from_function(lam, crit, xi=0.5)
    rng = np.random.default_rng(7)
    h = 1e-3
    worst, count = 0.0, 0
    while count < 200:
        z = 0.9 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
        if min(abs(z - x) for x, _ in crit) < 0.05:
            continue
        f = [F_eval(problem, z + k * h) for k in (-2, -1, 1, 2)]
        fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        worst = max(worst, abs(abs(fd) / derivative_modulus(problem, z) - 1))
        count += 1
    at_crit = max(abs(derivative(problem, x)) for x, _ in crit)
    theta = 2 * np.pi * np.arange(720) / 720
    ring = 0.999 * np.exp(1j * theta)
    smooth = DiskProblem.from_function(lam, (), xi=0.5)
    boundary = float(np.max(np.abs(derivative_modulus(smooth, ring) - lam(theta))))
    fig2 = DiskProblem.constant(1.4, ((0.3, 1),), xi=0.7)
    boundary_fig2 = float(np.max(np.abs(derivative_modulus(fig2, ring) - 1.4)))
    ok = worst < 1e-6 and at_crit < 1e-8 and boundary < 5e-3 and boundary_fig2 < 5e-3
    record(
        7,
        ok,
        f"max relative |F'| mismatch on 200 points {worst:.1e}; max |F'(x_i)| {at_crit:.1e}; "
        f"boundary gap at r=0.999 {boundary:.1e} (smooth), {boundary_fig2:.1e} (constant 1.4 with one branch point)",
    )
    assert ok


def test_criterion_8_harmonic_log_ratio():
    results = convergence_run(False)[0]
    lap = []
    for res in results:
        vals = log_ratio_laplacian(res.cpmap, res.solution.branch.vertices, generations=3)
        assert len(vals), f"no vertex three generations inside at n={res.n}"
        lap.append(float(np.max(np.abs(vals))))
    ok = lap[-1] < lap[0]
    record(8, ok, f"max |lattice Laplacian of log f_n#| over n={MESHES}: {fmt(lap)}")
    assert ok


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for fn in tests:
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
