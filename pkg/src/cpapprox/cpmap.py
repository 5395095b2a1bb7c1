"""Circle packing maps between a regular hexagonal packing and a solved packing.

The map sends each source face affinely onto the triangle of target centers;
the ratio function interpolates the per-vertex radius quotients over the same
faces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cpapprox.complex import BranchAssignment, TriComplex, faces_containing
from cpapprox.solver import PackingSolution, Residuals


class OutsideCarrier(ValueError):
    """The point lies in no face of the source carrier."""


class AuditFailed(AssertionError):
    """A maximum principle failed at an interior vertex."""

    def __init__(self, message: str, vertex: int):
        super().__init__(message)
        self.vertex = vertex


def regular_packing(cx: TriComplex) -> PackingSolution:
    """The univalent packing of ``cx`` by circles of radius ``1/n`` at lattice positions."""
    radii = np.full(cx.num_vertices, 1.0 / cx.n)
    return PackingSolution(cx, radii, cx.pos.copy(), BranchAssignment(), Residuals(0.0, 0.0, 1.0, 0))


def _complex_of(source) -> TriComplex:
    return source.complex if isinstance(source, PackingSolution) else source


def locate(source, z: complex) -> tuple[int, np.ndarray]:
    """Face index and barycentric weights of ``z`` in the regular source carrier.

    ``source`` may be a :class:`PackingSolution` over a lattice complex or the
    complex itself. Points on shared edges go to the lowest-index face.
    """
    cx = _complex_of(source)
    best = None
    for key, w in faces_containing(complex(z), cx.n):
        fi = cx.face_index.get(key)
        if fi is not None and (best is None or fi < best[0]):
            best = (fi, w)
    if best is None:
        raise OutsideCarrier(f"{z} is outside the carrier")
    return best[0], np.asarray(best[1])


def barycentric_eval(cx: TriComplex, values: np.ndarray, z: complex):
    fi, w = locate(cx, z)
    return np.dot(w, values[cx.faces[fi]])


@dataclass(frozen=True, eq=False)
class CpMap:
    source: PackingSolution
    target: PackingSolution

    def __post_init__(self):
        if self.source.complex is not self.target.complex:
            raise ValueError("source and target must share one complex")

    @property
    def complex(self) -> TriComplex:
        return self.source.complex

    @property
    def vertex_ratio(self) -> np.ndarray:
        return self.target.radii / self.source.radii

    @classmethod
    def from_target(cls, target: PackingSolution) -> "CpMap":
        return cls(regular_packing(target.complex), target)


def evaluate(cpmap: CpMap, z: complex) -> complex:
    """Image of ``z`` under the piecewise affine map of carriers."""
    return complex(barycentric_eval(cpmap.complex, cpmap.target.centers, z))


def ratio(cpmap: CpMap, z: complex) -> float:
    """Affine interpolation of the radius quotients target/source at ``z``."""
    return float(barycentric_eval(cpmap.complex, cpmap.vertex_ratio, z))


def evaluate_many(cpmap: CpMap, zs) -> np.ndarray:
    return np.array([evaluate(cpmap, z) for z in np.ravel(zs)]).reshape(np.shape(zs))


def ratio_many(cpmap: CpMap, zs) -> np.ndarray:
    return np.array([ratio(cpmap, z) for z in np.ravel(zs)]).reshape(np.shape(zs))


# --------------------------------------------------------------------------
# maximum principles


@dataclass(frozen=True)
class AuditReport:
    case: str  # "same-branch" or "unbranched-vs-branched"
    ratio_min: float
    ratio_max: float
    argmin: int
    argmax: int
    constant: bool


def max_principle_audit(map_a: CpMap, map_b: CpMap, const_tol: float = 1e-9) -> AuditReport:
    """Check where the quotient of target radii ``r_b / r_a`` takes its extrema.

    With equal branch sets both extrema must sit on boundary vertices unless
    the quotient is constant; with ``map_a`` unbranched and ``map_b``
    branched the supremum must sit on the boundary.
    """
    cx = map_a.complex
    if map_b.complex is not cx:
        raise ValueError("both maps must live on one complex")
    ba, bb = map_a.target.branch, map_b.target.branch
    same = sorted(ba.entries) == sorted(bb.entries)
    if same:
        case = "same-branch"
    elif not ba and bb:
        case = "unbranched-vs-branched"
    else:
        raise ValueError("no maximum principle applies to these branch sets")

    q = map_b.target.radii / map_a.target.radii
    bd, iv = cx.boundary_vertices, cx.interior_vertices
    argmin, argmax = int(np.argmin(q)), int(np.argmax(q))
    constant = bool(q.max() - q.min() <= const_tol * abs(q).max())
    report = AuditReport(case, float(q.min()), float(q.max()), argmin, argmax, constant)
    if constant or not len(iv):
        return report

    bmax, bmin = q[bd].max(), q[bd].min()
    imax_v, imin_v = iv[np.argmax(q[iv])], iv[np.argmin(q[iv])]
    if q[imax_v] >= bmax:
        raise AuditFailed(f"supremum {q[imax_v]:.12g} reached at interior vertex {imax_v}", int(imax_v))
    if case == "same-branch" and q[imin_v] <= bmin:
        raise AuditFailed(f"infimum {q[imin_v]:.12g} reached at interior vertex {imin_v}", int(imin_v))
    return report


# --------------------------------------------------------------------------
# geometric audits


def fan_turning(solution: PackingSolution, v: int) -> float:
    """Total turning of the image fan around interior vertex ``v``; ``2 pi (1 + k_v)`` when packed."""
    cx = solution.complex
    if cx.boundary[v]:
        raise ValueError("fan turning is defined at interior vertices only")
    c = solution.centers
    nb = list(cx.neighbors[v])
    d = c[nb] - c[v]
    return float(np.sum(np.angle(np.roll(d, -1) / d)))


def log_ratio_laplacian(cpmap: CpMap, avoid=(), generations: int = 3) -> np.ndarray:
    """Lattice Laplacian of ``log`` of the vertex ratios, scaled to approximate the continuum one.

    Evaluated at interior vertices at least ``generations`` lattice steps
    from every boundary vertex and every vertex in ``avoid``; returns the
    values at those vertices (possibly empty).
    """
    cx = cpmap.complex
    far_from = list(cx.boundary_vertices) + list(avoid)
    keep = [v for v in cx.interior_vertices.tolist() if cx.generation_distance(v, far_from) >= generations]
    if not keep:
        return np.zeros(0)
    logq = np.log(cpmap.vertex_ratio)
    nb = np.array([cx.neighbors[v] for v in keep])
    h = 2.0 / cx.n
    return (logq[nb].sum(axis=1) - 6.0 * logq[keep]) / (1.5 * h * h)
