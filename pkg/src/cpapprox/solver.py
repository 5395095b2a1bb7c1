"""Euclidean branched circle packings with prescribed boundary radii.

Interior radii are found so that every interior angle sum equals
``2 pi (1 + k_v)``, ``k_v`` the branch order at ``v``; boundary radii are held
fixed. Three iterations are available:

* ``gauss-seidel``: vertex sweeps, each vertex solved exactly with its
  neighbors frozen (safeguarded Newton inside a bisection bracket). This is
  the reference path.
* ``jacobi``: the same per-vertex solve, vectorized over all vertices at once.
* ``newton``: damped Newton on the log radii with the sparse angle-sum
  Jacobian. Much faster on large patches; falls back to Gauss-Seidel if the
  line search stalls.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from cpapprox.complex import BranchAssignment, TriComplex

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class NonConvergence(RuntimeError):
    """Angle-sum iteration did not reach the tolerance."""


class LayoutInconsistent(RuntimeError):
    """Laid-out circles are not tangent along some edge, or a face flipped."""


class NormalizationDegenerate(ValueError):
    """The map sends the normalization point onto the image of the origin."""


@dataclass
class SolverConfig:
    angle_tol: float = 1e-10
    layout_tol: float | None = None  # None means 1e-8 * (2/n)
    max_sweeps: int = 50_000
    method: str = "newton"
    seed: int | None = None  # shuffles the Gauss-Seidel sweep order
    max_newton: int = 200

    def layout_tolerance(self, n: int) -> float:
        return self.layout_tol if self.layout_tol is not None else 1e-8 * (2.0 / n)


@dataclass(frozen=True)
class RadiusFunction:
    """Solved radii (one per vertex) with the convergence record."""

    r: np.ndarray
    residual: float
    sweeps: int
    method: str


@dataclass(frozen=True)
class Residuals:
    angle: float
    tangency: float
    min_orientation: float
    sweeps: int


@dataclass(frozen=True, eq=False)
class PackingSolution:
    complex: TriComplex
    radii: np.ndarray
    centers: np.ndarray
    branch: BranchAssignment
    residuals: Residuals

    def with_centers(self, centers: np.ndarray) -> "PackingSolution":
        return replace(self, centers=np.asarray(centers, dtype=complex))


# --------------------------------------------------------------------------
# angles


def tri_angle(r_v, r_u, r_w):
    """Angle at the center of the ``r_v`` circle in a triple of tangent circles."""
    r_v, r_u, r_w = np.asarray(r_v, float), np.asarray(r_u, float), np.asarray(r_w, float)
    t = r_u * r_w / (r_v * (r_v + r_u + r_w))
    out = 2.0 * np.arctan(np.sqrt(t))
    return float(out) if out.ndim == 0 else out


def face_angles(cx: TriComplex, radii: np.ndarray) -> np.ndarray:
    """``(F, 3)`` array of corner angles, ordered like ``cx.faces``."""
    f = cx.faces
    r = radii[f]
    s = r.sum(axis=1, keepdims=True)
    other = np.stack([r[:, 1] * r[:, 2], r[:, 2] * r[:, 0], r[:, 0] * r[:, 1]], axis=1)
    return 2.0 * np.arctan(np.sqrt(other / (r * s)))


def angle_sums(cx: TriComplex, radii: np.ndarray) -> np.ndarray:
    """Angle sum at every vertex (boundary vertices get their partial fan sum)."""
    return np.bincount(cx.faces.ravel(), weights=face_angles(cx, radii).ravel(), minlength=cx.num_vertices)


def angle_sum(cx: TriComplex, radii: np.ndarray, v: int) -> float:
    """Angle sum at vertex ``v`` over the faces of its fan."""
    nb = cx.neighbors[v]
    pairs = zip(nb, nb[1:] + nb[:1]) if not cx.boundary[v] else zip(nb[:-1], nb[1:])
    return sum(tri_angle(radii[v], radii[a], radii[b]) for a, b in pairs)


def target_sums(cx: TriComplex, branch: BranchAssignment) -> np.ndarray:
    return TWO_PI * (1.0 + branch.orders(cx.num_vertices))


def angle_residual(cx: TriComplex, radii: np.ndarray, branch: BranchAssignment) -> float:
    iv = cx.interior_vertices
    if not len(iv):
        return 0.0
    return float(np.max(np.abs(angle_sums(cx, radii)[iv] - target_sums(cx, branch)[iv])))


def _angle_jacobian(cx: TriComplex, radii: np.ndarray, rows: np.ndarray) -> sp.csr_matrix:
    """Derivative of interior angle sums with respect to interior log radii.

    ``rows`` maps vertex index to interior position (-1 for boundary).
    """
    f = cx.faces
    r = radii[f]
    s = r.sum(axis=1)
    ang = face_angles(cx, radii)
    half_sin = 0.5 * np.sin(ang)
    data, ii, jj = [], [], []
    for c in range(3):
        v = f[:, c]
        for d in range(3):
            u = f[:, d]
            if d == c:
                val = -half_sin[:, c] * (1.0 + r[:, c] / s)
            else:
                val = half_sin[:, c] * (1.0 - r[:, d] / s)
            keep = (rows[v] >= 0) & (rows[u] >= 0)
            ii.append(rows[v][keep])
            jj.append(rows[u][keep])
            data.append(val[keep])
    n = int(rows.max()) + 1
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(ii), np.concatenate(jj))), shape=(n, n)
    )


# --------------------------------------------------------------------------
# per-vertex solve


def _fan_pairs(cx: TriComplex, v: int) -> tuple[list[int], list[int]]:
    nb = list(cx.neighbors[v])
    return nb, nb[1:] + nb[:1]


def _vertex_radius(r0: float, a: list[float], b: list[float], target: float, tol: float) -> float:
    """Radius at which a closed fan with petal radii ``a[j], b[j]`` has the target angle sum.

    The angle sum is strictly decreasing in the center radius, from
    ``len(a) * pi`` at 0 to 0 at infinity; the root is bracketed and refined by
    Newton steps in log radius, falling back to bisection.
    """
    atan, sqrt, sin = math.atan, math.sqrt, math.sin

    def theta(r):
        tot = dtot = 0.0
        for x, y in zip(a, b):
            s = r + x + y
            ang = 2.0 * atan(sqrt(x * y / (r * s)))
            tot += ang
            dtot -= 0.5 * sin(ang) * (1.0 + r / s)
        return tot, dtot

    r = r0
    th, dth = theta(r)
    lo, hi = 0.0, math.inf
    if th > target:
        while th > target:
            lo, r = r, 2.0 * r
            if r > 1e300:
                return r
            th, dth = theta(r)
    else:
        while th < target:
            hi, r = r, 0.5 * r
            if r < 1e-300:
                # target above what the fan can reach; the radius collapses
                return r
            th, dth = theta(r)
    for _ in range(200):
        if abs(th - target) < 0.01 * tol:
            break
        if th > target:
            lo = r
        else:
            hi = r
        step = (th - target) / dth if dth < 0 else 0.0
        cand = r * math.exp(-step) if abs(step) < 50 else -1.0
        if not lo < cand < hi:
            cand = math.sqrt(lo * hi) if lo > 0 and hi < math.inf else (2.0 * r if lo == r else 0.5 * r)
        if cand == r or (lo > 0 and hi / lo - 1.0 < 4e-16):
            break
        r = cand
        th, dth = theta(r)
    return r


def _gauss_seidel(cx, radii, target, config, start_sweeps=0):
    iv = cx.interior_vertices
    fans = {int(v): _fan_pairs(cx, int(v)) for v in iv}
    rng = np.random.default_rng(config.seed) if config.seed is not None else None
    order = iv.copy()
    sweeps = start_sweeps
    res = angle_residual_arr(cx, radii, target)
    while res >= config.angle_tol:
        if sweeps >= config.max_sweeps:
            raise NonConvergence(f"Gauss-Seidel stopped at residual {res:.3e} after {sweeps} sweeps")
        if rng is not None:
            rng.shuffle(order)
        for v in order.tolist():
            na, nb = fans[v]
            radii[v] = _vertex_radius(
                radii[v], [radii[u] for u in na], [radii[u] for u in nb], target[v], config.angle_tol
            )
        sweeps += 1
        res = angle_residual_arr(cx, radii, target)
    return radii, res, sweeps


def _jacobi(cx, radii, target, config):
    """All interior vertices solved simultaneously against the previous iterate."""
    iv = cx.interior_vertices
    nb = np.array([cx.neighbors[v] for v in iv])
    nb2 = np.roll(nb, -1, axis=1)
    tgt = target[iv]
    sweeps = 0
    res = angle_residual_arr(cx, radii, target)
    while res >= config.angle_tol:
        if sweeps >= config.max_sweeps:
            raise NonConvergence(f"Jacobi stopped at residual {res:.3e} after {sweeps} sweeps")
        a, b = radii[nb], radii[nb2]

        def theta(x):
            r = np.exp(x)[:, None]
            s = r + a + b
            ang = 2.0 * np.arctan(np.sqrt(a * b / (r * s)))
            return ang.sum(axis=1), -(0.5 * np.sin(ang) * (1.0 + r / s)).sum(axis=1)

        x = np.log(radii[iv])
        lo = np.full_like(x, -np.inf)
        hi = np.full_like(x, np.inf)
        for _ in range(200):
            th, dth = theta(x)
            err = th - tgt
            if np.max(np.abs(err)) < 0.01 * config.angle_tol:
                break
            lo = np.where(err > 0, x, lo)
            hi = np.where(err <= 0, x, hi)
            cand = x - err / dth
            mid = np.where(np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi),
                           np.where(np.isfinite(lo), lo + 1.0, hi - 1.0))
            x = np.where((cand > lo) & (cand < hi), cand, mid)
        radii[iv] = np.exp(x)
        sweeps += 1
        res = angle_residual_arr(cx, radii, target)
    return radii, res, sweeps


def angle_residual_arr(cx, radii, target) -> float:
    iv = cx.interior_vertices
    if not len(iv):
        return 0.0
    return float(np.max(np.abs(angle_sums(cx, radii)[iv] - target[iv])))


def _newton(cx, radii, target, config):
    iv = cx.interior_vertices
    rows = np.full(cx.num_vertices, -1, dtype=np.int64)
    rows[iv] = np.arange(len(iv))
    x = np.log(radii)

    def resid(x):
        return angle_sums(cx, np.exp(x))[iv] - target[iv]

    R = resid(x)
    it = 0
    while np.max(np.abs(R)) >= config.angle_tol:
        if it >= config.max_newton:
            return np.exp(x), float(np.max(np.abs(R))), it, False
        J = _angle_jacobian(cx, np.exp(x), rows)
        step = spla.spsolve(J.tocsc(), -R)
        big = np.max(np.abs(step))
        if big > 2.0:
            step *= 2.0 / big
        norm0 = np.linalg.norm(R)
        t = 1.0
        while True:
            xn = x.copy()
            xn[iv] += t * step
            Rn = resid(xn)
            if np.all(np.isfinite(Rn)) and np.linalg.norm(Rn) <= (1.0 - 1e-4 * t) * norm0:
                break
            t *= 0.5
            if t < 1e-10:
                return np.exp(x), float(np.max(np.abs(R))), it, False
        x, R = xn, Rn
        it += 1
    return np.exp(x), float(np.max(np.abs(R))), it, True


def solve_radii(
    cx: TriComplex,
    boundary_radii,
    branch: BranchAssignment = BranchAssignment(),
    config: SolverConfig | None = None,
    init: np.ndarray | None = None,
) -> RadiusFunction:
    """Radii with the given boundary values and interior angle sums ``2 pi (1 + k_v)``.

    ``boundary_radii`` is aligned with ``cx.boundary_vertices``. Interior
    radii start at the mean boundary radius unless ``init`` (a full radius
    vector) is given.
    """
    config = config or SolverConfig()
    branch.check_interior(cx)
    bv = cx.boundary_vertices
    rho = np.asarray(boundary_radii, dtype=float)
    if rho.shape != bv.shape:
        raise ValueError(f"expected {len(bv)} boundary radii, got {rho.shape}")
    if np.any(~(rho > 0)):
        raise ValueError("boundary radii must be positive")

    radii = np.full(cx.num_vertices, float(np.mean(rho)))
    if init is not None:
        radii[:] = np.asarray(init, dtype=float)
    radii[bv] = rho
    target = target_sums(cx, branch)

    if config.method == "gauss-seidel":
        radii, res, sweeps = _gauss_seidel(cx, radii, target, config)
    elif config.method == "jacobi":
        radii, res, sweeps = _jacobi(cx, radii, target, config)
    elif config.method == "newton":
        radii, res, sweeps, ok = _newton(cx, radii, target, config)
        if not ok:
            log.warning("Newton stalled at residual %.3e; continuing with Gauss-Seidel", res)
            radii, res, sweeps = _gauss_seidel(cx, radii, target, config, start_sweeps=sweeps)
    else:
        raise ValueError(f"unknown solver method {config.method!r}")
    radii[bv] = rho
    return RadiusFunction(radii, res, sweeps, config.method)


# --------------------------------------------------------------------------
# layout


def _root_edge(cx: TriComplex) -> tuple[int, int, int]:
    """Lowest boundary edge ``(u, v)``, oriented as in its face, with that face index."""
    count: dict[tuple[int, int], list] = {}
    for fi, (a, b, c) in enumerate(cx.faces.tolist()):
        for u, v in ((a, b), (b, c), (c, a)):
            count.setdefault((min(u, v), max(u, v)), []).append((u, v, fi))
    bd = sorted(key for key, val in count.items() if len(val) == 1)
    return count[bd[0]][0]


def tangency_defect(cx: TriComplex, radii: np.ndarray, centers: np.ndarray) -> float:
    e = cx.edges
    d = np.abs(centers[e[:, 0]] - centers[e[:, 1]])
    return float(np.max(np.abs(d - (radii[e[:, 0]] + radii[e[:, 1]]))))


def face_orientation(cx: TriComplex, centers: np.ndarray) -> np.ndarray:
    """Signed area of each laid-out face divided by its squared perimeter."""
    p = centers[cx.faces]
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    area = 0.5 * ((b - a).conjugate() * (c - a)).imag
    per = np.abs(b - a) + np.abs(c - b) + np.abs(a - c)
    return area / per**2


def layout(cx: TriComplex, radii: np.ndarray, layout_tol: float | None = None) -> np.ndarray:
    """Circle centers for ``radii``, placed face by face from the root edge.

    The root boundary edge starts at the origin and runs along the positive
    real axis. Raises :class:`LayoutInconsistent` when some edge is off
    tangency by more than ``layout_tol`` (default ``1e-8 * 2/n``) or a face
    comes out negatively oriented.
    """
    tol = layout_tol if layout_tol is not None else 1e-8 * (2.0 / cx.n)
    radii = np.asarray(radii, dtype=float)
    faces = cx.faces.tolist()
    centers = np.full(cx.num_vertices, np.nan + 0j)
    u, v, f0 = _root_edge(cx)
    centers[u] = 0.0
    centers[v] = radii[u] + radii[v]

    edge_faces: dict[tuple[int, int], list[int]] = {}
    for fi, (a, b, c) in enumerate(faces):
        for x, y in ((a, b), (b, c), (c, a)):
            edge_faces.setdefault((min(x, y), max(x, y)), []).append(fi)

    done = np.zeros(len(faces), dtype=bool)
    queue = deque([f0])
    done[f0] = True
    placed = ~np.isnan(centers.real)
    while queue:
        fi = queue.popleft()
        tri = faces[fi]
        missing = [i for i in range(3) if not placed[tri[i]]]
        if missing:
            i = missing[0]
            w, a, b = tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]
            alpha = tri_angle(radii[a], radii[b], radii[w])
            d = centers[b] - centers[a]
            centers[w] = centers[a] + (radii[a] + radii[w]) * np.exp(1j * alpha) * d / abs(d)
            placed[w] = True
        for x, y in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            for g in edge_faces[(min(x, y), max(x, y))]:
                if not done[g]:
                    done[g] = True
                    queue.append(g)

    defect = tangency_defect(cx, radii, centers)
    orient = float(np.min(face_orientation(cx, centers)))
    if not defect <= tol:
        raise LayoutInconsistent(f"tangency defect {defect:.3e} exceeds {tol:.3e}")
    if not orient > 0:
        raise LayoutInconsistent("a face is laid out with negative orientation")
    return centers


def pack(
    cx: TriComplex,
    boundary_radii,
    branch: BranchAssignment = BranchAssignment(),
    config: SolverConfig | None = None,
) -> PackingSolution:
    """Solve radii and lay out centers in one go."""
    config = config or SolverConfig()
    rf = solve_radii(cx, boundary_radii, branch, config)
    centers = layout(cx, rf.r, config.layout_tolerance(cx.n))
    res = Residuals(
        angle=angle_residual(cx, rf.r, branch),
        tangency=tangency_defect(cx, rf.r, centers),
        min_orientation=float(np.min(face_orientation(cx, centers))),
        sweeps=rf.sweeps,
    )
    return PackingSolution(cx, rf.r, centers, branch, res)


def normalize(solution: PackingSolution, xi: complex, origin: complex = 0j) -> PackingSolution:
    """Rigidly move the target so the cp-map sends ``origin`` to 0 and ``xi`` onto the positive reals."""
    from cpapprox.cpmap import barycentric_eval

    cx = solution.complex
    f0 = barycentric_eval(cx, solution.centers, origin)
    fx = barycentric_eval(cx, solution.centers, xi)
    d = fx - f0
    if abs(d) <= 1e-14 * max(1.0, abs(fx), abs(f0)):
        raise NormalizationDegenerate("xi and the origin have the same image")
    rot = abs(d) / d
    centers = (solution.centers - f0) * rot
    return solution.with_centers(centers)
