"""Approximation of analytic maps with prescribed boundary modulus by branched
hexagonal circle packings."""

from cpapprox.branch_check import (
    BudgetExceeded,
    CycleWitness,
    brute_force_check,
    is_branch_structure,
    verify_branch_structure,
)
from cpapprox.complex import (
    BranchAssignment,
    DomainSpec,
    MeshTooCoarse,
    SnapFailed,
    TriComplex,
    build_subcomplex,
    closest_boundary_point,
    hex_patch,
    snap_branch_points,
)
from cpapprox.cpmap import (
    AuditFailed,
    CpMap,
    OutsideCarrier,
    evaluate,
    locate,
    max_principle_audit,
    ratio,
    regular_packing,
)
from cpapprox.oracle import DiskProblem, F_eval, QuadratureFailure, analytic_completion, blaschke
from cpapprox.pipeline import ProblemSpec, SpecError, convergence_report, load_spec, run_pipeline
from cpapprox.render import render_svg
from cpapprox.solver import (
    LayoutInconsistent,
    NonConvergence,
    NormalizationDegenerate,
    PackingSolution,
    SolverConfig,
    angle_sum,
    layout,
    normalize,
    pack,
    solve_radii,
    tri_angle,
)

__all__ = [
    "AuditFailed",
    "BranchAssignment",
    "BudgetExceeded",
    "CpMap",
    "CycleWitness",
    "DiskProblem",
    "DomainSpec",
    "F_eval",
    "LayoutInconsistent",
    "MeshTooCoarse",
    "NonConvergence",
    "NormalizationDegenerate",
    "OutsideCarrier",
    "PackingSolution",
    "ProblemSpec",
    "QuadratureFailure",
    "SnapFailed",
    "SolverConfig",
    "SpecError",
    "TriComplex",
    "analytic_completion",
    "angle_sum",
    "blaschke",
    "brute_force_check",
    "build_subcomplex",
    "closest_boundary_point",
    "convergence_report",
    "evaluate",
    "hex_patch",
    "is_branch_structure",
    "layout",
    "load_spec",
    "locate",
    "max_principle_audit",
    "normalize",
    "pack",
    "ratio",
    "regular_packing",
    "render_svg",
    "run_pipeline",
    "snap_branch_points",
    "solve_radii",
    "tri_angle",
    "verify_branch_structure",
]
