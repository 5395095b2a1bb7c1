"""Problem specification, the per-mesh packing pipeline and convergence reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cpapprox.branch_check import CycleWitness, verify_branch_structure
from cpapprox.complex import (
    BranchAssignment,
    DomainSpec,
    MeshTooCoarse,
    SnapFailed,
    TriComplex,
    build_subcomplex,
    snap_branch_points,
)
from cpapprox.cpmap import (
    CpMap,
    OutsideCarrier,
    evaluate_many,
    fan_turning,
    log_ratio_laplacian,
    ratio_many,
)
from cpapprox.oracle import DiskProblem, F_eval, derivative_modulus
from cpapprox.solver import (
    LayoutInconsistent,
    NonConvergence,
    NormalizationDegenerate,
    PackingSolution,
    SolverConfig,
    normalize,
    pack,
)

log = logging.getLogger(__name__)

OUTPUTS = ("radii", "report", "svg")


class SpecError(ValueError):
    """The problem specification is malformed."""


@dataclass(frozen=True)
class BoundaryModulus:
    """Boundary modulus as a constant or periodic samples over the boundary.

    Samples are equispaced in ``param``: ``"angle"`` (polar angle about the
    disk center, or about the origin for polygons) or ``"arclength"``.
    Values between samples are interpolated linearly.
    """

    constant: float | None = None
    samples: tuple[float, ...] = ()
    param: str = "angle"

    def __post_init__(self):
        if self.constant is None and not self.samples:
            raise SpecError("lambda needs a constant or samples")
        vals = [self.constant] if self.constant is not None else list(self.samples)
        if not all(isinstance(v, (int, float)) and v > 0 and math.isfinite(v) for v in vals):
            raise SpecError("lambda values must be positive finite numbers")
        if self.param not in ("angle", "arclength"):
            raise SpecError(f"unknown lambda parameter {self.param!r}")

    def fraction(self, domain: DomainSpec, z: complex) -> float:
        """Position of boundary point ``z`` in ``[0, 1)`` along the sampling parameter."""
        if self.param == "arclength" and domain.kind == "polygon":
            return domain.closest(z)[1] / domain.period
        c = domain.center if domain.kind == "disk" else 0j
        d = complex(z) - c
        return (math.atan2(d.imag, d.real) / (2.0 * math.pi)) % 1.0

    def __call__(self, domain: DomainSpec, z: complex) -> float:
        if self.constant is not None:
            return float(self.constant)
        s = np.asarray(self.samples, dtype=float)
        t = self.fraction(domain, z) * len(s)
        return float(np.interp(t, np.arange(len(s) + 1), np.append(s, s[0])))

    def angle_samples(self, count: int) -> np.ndarray:
        if self.constant is not None:
            return np.full(count, float(self.constant))
        s = np.asarray(self.samples, dtype=float)
        t = np.arange(count) * len(s) / count
        return np.interp(t, np.arange(len(s) + 1), np.append(s, s[0]))


@dataclass(frozen=True)
class ProblemSpec:
    domain: DomainSpec
    lam: BoundaryModulus
    crit: tuple[tuple[complex, int], ...] = ()
    xi: float = 0.5
    meshes: tuple[int, ...] = (8, 16, 32)
    solver: SolverConfig = field(default_factory=SolverConfig)
    outputs: tuple[str, ...] = OUTPUTS

    def __post_init__(self):
        m = list(self.meshes)
        if not m or any(not isinstance(n, int) or n < 1 for n in m):
            raise SpecError("meshes must be positive integers")
        if any(b <= a for a, b in zip(m, m[1:])):
            raise SpecError("meshes must be strictly increasing")
        if unknown := set(self.outputs) - set(OUTPUTS):
            raise SpecError(f"unknown outputs {sorted(unknown)}")
        try:
            self.domain.validate_points(self.xi)
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
        for x, k in self.crit:
            if k < 1:
                raise SpecError("critical orders must be positive")
            if not self.domain.contains(x):
                raise SpecError(f"critical point {x} is not inside the domain")

    @property
    def is_unit_disk(self) -> bool:
        d = self.domain
        return d.kind == "disk" and d.center == 0 and d.radius == 1.0

    def with_meshes(self, meshes) -> "ProblemSpec":
        return ProblemSpec(self.domain, self.lam, self.crit, self.xi, tuple(meshes), self.solver, self.outputs)

    def disk_problem(self, samples: int = 256) -> DiskProblem | None:
        """Closed-form reference problem, available on the unit disk only."""
        if not self.is_unit_disk:
            return None
        return DiskProblem(self.lam.angle_samples(samples), self.crit, self.xi)

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        try:
            return cls._from_dict(d)
        except SpecError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"bad problem spec: {exc}") from exc

    @classmethod
    def _from_dict(cls, d: dict) -> "ProblemSpec":
        dom = d["domain"]
        if dom["kind"] == "disk":
            domain = DomainSpec.disk(_point(dom.get("center", [0, 0])), float(dom.get("radius", 1.0)))
        elif dom["kind"] == "polygon":
            domain = DomainSpec.polygon(_point(p) for p in dom["vertices"])
        else:
            raise SpecError(f"unknown domain kind {dom['kind']!r}")

        lam = d.get("lambda", 1.0)
        if isinstance(lam, (int, float)):
            lam = BoundaryModulus(constant=float(lam))
        elif "constant" in lam:
            lam = BoundaryModulus(constant=float(lam["constant"]))
        else:
            lam = BoundaryModulus(samples=tuple(float(s) for s in lam["samples"]), param=lam.get("param", "angle"))

        crit = []
        for c in d.get("crit", []):
            if isinstance(c, dict):
                crit.append((_point(c["point"]), int(c.get("order", 1))))
            else:
                crit.append((_point(c[0]), int(c[1])))
        solver = SolverConfig(**d.get("solver", {}))
        if solver.method not in ("newton", "gauss-seidel", "jacobi"):
            raise SpecError(f"unknown solver method {solver.method!r}")
        xi = d.get("xi", 0.5)
        if not isinstance(xi, (int, float)):
            raise SpecError("xi must be a positive real number")
        return cls(
            domain=domain,
            lam=lam,
            crit=tuple(crit),
            xi=float(xi),
            meshes=tuple(d.get("meshes", (8, 16, 32))),
            solver=solver,
            outputs=tuple(d.get("outputs", OUTPUTS)),
        )


def _point(p) -> complex:
    if isinstance(p, (int, float)):
        return complex(p)
    x, y = p
    return complex(float(x), float(y))


def load_spec(path) -> ProblemSpec:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SpecError("problem spec must be a JSON object")
    return ProblemSpec.from_dict(data)


# --------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True, eq=False)
class MeshResult:
    n: int
    complex: TriComplex | None = None
    solution: PackingSolution | None = None
    cpmap: CpMap | None = None
    boundary_points: np.ndarray | None = None
    boundary_lambda: np.ndarray | None = None
    witness: CycleWitness | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def solve_mesh(spec: ProblemSpec, n: int) -> MeshResult:
    """Run every stage for one mesh; failures come back in ``error``, not as exceptions."""
    cx = None
    try:
        cx = build_subcomplex(spec.domain, n, spec.xi)
        br = snap_branch_points(cx, spec.crit) if spec.crit else BranchAssignment()
        witness = verify_branch_structure(cx, br, ambient=True)
        if witness is not None:
            return MeshResult(n, cx, witness=witness, error=f"branch structure violated by a {witness.length}-cycle")
        bv = cx.boundary_vertices
        zb = np.array([spec.domain.closest(p)[0] for p in cx.pos[bv]])
        lam = np.array([spec.lam(spec.domain, z) for z in zb])
        sol = pack(cx, lam / n, br, spec.solver)
        sol = normalize(sol, spec.xi)
        return MeshResult(n, cx, sol, CpMap.from_target(sol), zb, lam)
    except (MeshTooCoarse, SnapFailed, NonConvergence, LayoutInconsistent, NormalizationDegenerate, OutsideCarrier) as exc:
        log.warning("n=%d failed: %s", n, exc)
        return MeshResult(n, cx, error=f"{type(exc).__name__}: {exc}")


def run_pipeline(spec: ProblemSpec) -> list[MeshResult]:
    return [solve_mesh(spec, n) for n in spec.meshes]


# --------------------------------------------------------------------------
# reports

REPORT_COLUMNS = (
    "n",
    "status",
    "vertices",
    "interior",
    "f_error",
    "ratio_error",
    "angle_residual",
    "tangency_defect",
    "sweeps",
    "boundary_pin",
    "ratio_over_max_lambda",
    "max_principle",
    "winding_error",
    "log_ratio_laplacian",
)


def probe_grid(spec: ProblemSpec, radius: float | None = None, size: int = 41) -> np.ndarray:
    """Points of a ``size x size`` grid in the closed disk of ``radius`` about 0.

    The default radius is half the distance from 0 to the boundary.
    """
    if radius is None:
        radius = 0.5 * spec.domain.boundary_distance(0j)
    g = np.linspace(-radius, radius, size)
    z = (g[None, :] + 1j * g[:, None]).ravel()
    return z[np.abs(z) <= radius * (1.0 + 1e-12)]


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer, str)):
        return str(x)
    return f"{float(x):.10e}"


@dataclass
class ConvergenceReport:
    rows: list[dict] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(row.get(c)) for c in REPORT_COLUMNS])
        return buf.getvalue()

    def column(self, name: str) -> list:
        return [row.get(name) for row in self.rows]


def _max_principle_ok(res: MeshResult) -> bool:
    # the ratio against the regular packing is bounded by its boundary values
    q = res.cpmap.vertex_ratio
    cx = res.complex
    iv = cx.interior_vertices
    return bool(not len(iv) or q[iv].max() < q[cx.boundary_vertices].max() + 1e-12)


def convergence_report(
    spec: ProblemSpec, results: list[MeshResult] | None = None, probe_radius: float | None = None
) -> ConvergenceReport:
    """Per-mesh errors against the closed form (unit disk only) plus property audits."""
    results = run_pipeline(spec) if results is None else results
    problem = spec.disk_problem()
    probe = probe_grid(spec, probe_radius)
    exact = exact_abs = None
    if problem is not None:
        exact = np.array([F_eval(problem, z) for z in probe])
        exact_abs = derivative_modulus(problem, probe)

    report = ConvergenceReport()
    for res in sorted(results, key=lambda r: r.n):
        row = {"n": res.n, "status": "ok" if res.ok else res.error}
        if res.complex is not None:
            row["vertices"] = res.complex.num_vertices
            row["interior"] = len(res.complex.interior_vertices)
        if res.ok:
            cx, sol, m = res.complex, res.solution, res.cpmap
            inside = np.array([cx.contains_point(z) for z in probe], dtype=bool)
            if exact is not None:
                row["f_error"] = float(np.max(np.abs(evaluate_many(m, probe[inside]) - exact[inside])))
                row["ratio_error"] = float(np.max(np.abs(ratio_many(m, probe[inside]) - exact_abs[inside])))
            row["angle_residual"] = sol.residuals.angle
            row["tangency_defect"] = sol.residuals.tangency
            row["sweeps"] = sol.residuals.sweeps
            bv = cx.boundary_vertices
            row["boundary_pin"] = float(np.max(np.abs(sol.radii[bv] * res.n - res.boundary_lambda)))
            row["ratio_over_max_lambda"] = float(m.vertex_ratio.max() - res.boundary_lambda.max())
            row["max_principle"] = "ok" if _max_principle_ok(res) else "violated"
            if sol.branch:
                row["winding_error"] = max(
                    abs(fan_turning(sol, v) - 2.0 * math.pi * (1 + k)) for v, k in sol.branch.entries
                )
            lap = log_ratio_laplacian(m, sol.branch.vertices)
            if len(lap):
                row["log_ratio_laplacian"] = float(np.max(np.abs(lap)))
        report.rows.append(row)
    return report


def radii_csv(res: MeshResult) -> str:
    cx, sol = res.complex, res.solution
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("vertex", "k", "l", "radius", "center_re", "center_im"))
    for v in range(cx.num_vertices):
        k, l = cx.coords(v)
        c = sol.centers[v]
        w.writerow((v, k, l, f"{sol.radii[v]:.15e}", f"{c.real:.15e}", f"{c.imag:.15e}"))
    return buf.getvalue()


__all__ = [
    "BoundaryModulus",
    "ConvergenceReport",
    "MeshResult",
    "ProblemSpec",
    "SpecError",
    "convergence_report",
    "load_spec",
    "probe_grid",
    "radii_csv",
    "run_pipeline",
    "solve_mesh",
]
