"""Hexagonal lattice complexes, domains and branch-point snapping.

The lattice is the regular triangular lattice with vertices
``(2k + l(1 + sqrt(3) i)) / n``; every edge has length ``2/n`` and the
regular packing of this lattice uses circles of radius ``1/n``.

Faces are keyed by ``(k, l, t)``: ``t = 0`` is the upward triangle
``(k, l), (k+1, l), (k, l+1)`` and ``t = 1`` the downward triangle
``(k+1, l), (k+1, l+1), (k, l+1)``. Both triples are counterclockwise.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import shapely

SQRT3 = math.sqrt(3.0)
GEOM_TOL = 1e-12

# neighbor offsets in counterclockwise order, starting along the positive real axis
OFFSETS: tuple[tuple[int, int], ...] = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


class MeshTooCoarse(ValueError):
    """The lattice subcomplex at this mesh does not give a usable patch."""


class SnapFailed(ValueError):
    """Critical points could not be assigned to distinct interior vertices."""


def lattice_pos(k, l, n: int):
    """Position of lattice vertex ``(k, l)`` of the mesh-``n`` lattice."""
    return (2.0 * np.asarray(k) + np.asarray(l)) / n + 1j * (SQRT3 * np.asarray(l) / n)


def hexdist(dk: int, dl: int) -> int:
    """Graph distance on the triangular lattice between vertices ``dk, dl`` apart."""
    return max(abs(dk), abs(dl), abs(dk + dl))


def face_vertices(key: tuple[int, int, int]) -> tuple[tuple[int, int], ...]:
    k, l, t = key
    if t == 0:
        return (k, l), (k + 1, l), (k, l + 1)
    return (k + 1, l), (k + 1, l + 1), (k, l + 1)


def lattice_coords(z: complex, n: int) -> tuple[float, float]:
    """Real lattice coordinates ``(x, y)`` with ``z = (2x + y(1 + sqrt(3) i)) / n``."""
    y = z.imag * n / SQRT3
    x = (z.real * n - y) / 2.0
    return x, y


def faces_containing(z: complex, n: int, tol: float = 1e-12) -> list[tuple[tuple[int, int, int], tuple[float, float, float]]]:
    """All lattice faces whose closed triangle contains ``z``, with barycentric weights.

    Weights are ordered like :func:`face_vertices`. A point on an edge or a
    vertex is reported in every face sharing it.
    """
    x, y = lattice_coords(z, n)
    k0, l0 = math.floor(x), math.floor(y)
    out = []
    for dk in (-1, 0, 1):
        for dl in (-1, 0, 1):
            k, l = k0 + dk, l0 + dl
            fx, fy = x - k, y - l
            up = (1.0 - fx - fy, fx, fy)
            down = (1.0 - fy, fx + fy - 1.0, 1.0 - fx)
            for t, w in ((0, up), (1, down)):
                if min(w) >= -tol:
                    out.append(((k, l, t), w))
    return out


# --------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class DomainSpec:
    """A Jordan domain given as an explicit disk or a simple polygon.

    Boundary parameters are the polar angle in ``[0, 2 pi)`` for disks and the
    arc length from the first polygon vertex for polygons.
    """

    kind: str
    center: complex = 0j
    radius: float = 1.0
    vertices: tuple[complex, ...] = ()

    @classmethod
    def disk(cls, center: complex = 0j, radius: float = 1.0) -> "DomainSpec":
        return cls(kind="disk", center=complex(center), radius=float(radius))

    @classmethod
    def polygon(cls, vertices: Iterable[complex]) -> "DomainSpec":
        vs = tuple(complex(v) for v in vertices)
        if len(vs) > 1 and abs(vs[0] - vs[-1]) < GEOM_TOL:
            vs = vs[:-1]
        return cls(kind="polygon", vertices=vs)

    def __post_init__(self):
        if self.kind == "disk":
            if not self.radius > 0:
                raise ValueError("disk radius must be positive")
        elif self.kind == "polygon":
            if len(self.vertices) < 3:
                raise ValueError("polygon needs at least three vertices")
            if not self._shape.is_valid or not self._shape.exterior.is_simple:
                raise ValueError("polygon must be simple")
            if self.signed_area() <= 0:
                raise ValueError("polygon must be positively oriented")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @cached_property
    def _shape(self):
        return shapely.Polygon([(v.real, v.imag) for v in self.vertices])

    def signed_area(self) -> float:
        if self.kind == "disk":
            return math.pi * self.radius**2
        v = np.asarray(self.vertices)
        w = np.roll(v, -1)
        return 0.5 * float(np.sum(v.real * w.imag - w.real * v.imag))

    @property
    def period(self) -> float:
        """Length of the boundary parameter range."""
        if self.kind == "disk":
            return 2.0 * math.pi
        return float(self._cumlen[-1])

    @cached_property
    def _cumlen(self) -> np.ndarray:
        v = np.asarray(self.vertices)
        seg = np.abs(np.roll(v, -1) - v)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def bounds(self) -> tuple[float, float, float, float]:
        if self.kind == "disk":
            c, r = self.center, self.radius
            return c.real - r, c.imag - r, c.real + r, c.imag + r
        return self._shape.bounds

    def boundary_distance(self, p: complex) -> float:
        return abs(self.closest(p)[0] - p)

    def contains(self, p: complex) -> bool:
        """Strict interior membership, at distance more than the tolerance from the boundary."""
        if self.kind == "disk":
            return abs(p - self.center) < self.radius - GEOM_TOL
        pt = shapely.Point(p.real, p.imag)
        return bool(self._shape.contains_properly(pt)) and self.boundary_distance(p) > GEOM_TOL

    def contains_triangles(self, tri: np.ndarray) -> np.ndarray:
        """Mask of closed triangles (rows of 3 complex points) lying inside the open domain."""
        if self.kind == "disk":
            d = np.abs(tri - self.center)
            return np.all(d < self.radius - GEOM_TOL, axis=1)
        coords = np.stack([tri.real, tri.imag], axis=-1)
        polys = shapely.polygons(coords)
        inside = shapely.contains_properly(self._shape, polys)
        far = shapely.distance(self._shape.exterior, polys) > GEOM_TOL
        return inside & far

    def closest(self, p: complex) -> tuple[complex, float]:
        """Closest boundary point to ``p`` and its boundary parameter.

        Ties within the geometric tolerance go to the smallest parameter.
        """
        p = complex(p)
        if self.kind == "disk":
            d = p - self.center
            if abs(d) < GEOM_TOL:
                return self.center + self.radius, 0.0
            theta = math.atan2(d.imag, d.real) % (2.0 * math.pi)
            return self.center + self.radius * d / abs(d), theta
        a = np.asarray(self.vertices)
        b = np.roll(a, -1)
        ab = b - a
        t = np.clip(((p - a) * np.conj(ab)).real / np.abs(ab) ** 2, 0.0, 1.0)
        q = a + t * ab
        dist = np.abs(p - q)
        params = self._cumlen[:-1] + t * np.abs(ab)
        cand = np.flatnonzero(dist <= dist.min() + GEOM_TOL)
        j = cand[np.argmin(params[cand])]
        return complex(q[j]), float(params[j] % self.period)

    def validate_points(self, xi: complex) -> None:
        if not self.contains(0j):
            raise ValueError("the origin must lie strictly inside the domain")
        if abs(complex(xi).imag) > 0 or not complex(xi).real > 0:
            raise ValueError("xi must be a positive real number")
        if not self.contains(complex(xi)):
            raise ValueError("xi must lie strictly inside the domain")


def closest_boundary_point(domain: DomainSpec, p: complex) -> complex:
    """A point of the domain boundary nearest to ``p``."""
    return domain.closest(p)[0]


# --------------------------------------------------------------------------
# complexes


@dataclass(frozen=True, eq=False)
class TriComplex:
    """Finite simply connected patch of the mesh-``n`` hexagonal lattice.

    ``neighbors[v]`` lists the neighbors of ``v`` counterclockwise; for interior
    vertices it is the closed six-cycle starting along the positive real
    direction, for boundary vertices the open chain of the fan.
    """

    n: int
    k: np.ndarray
    l: np.ndarray
    faces: np.ndarray
    face_keys: tuple[tuple[int, int, int], ...]
    neighbors: tuple[tuple[int, ...], ...]
    boundary: np.ndarray

    @classmethod
    def from_faces(cls, keys: Iterable[tuple[int, int, int]], n: int) -> "TriComplex":
        keys = sorted(set(keys))
        if not keys:
            raise MeshTooCoarse("empty complex")
        coords = sorted({v for key in keys for v in face_vertices(key)})
        index = {c: i for i, c in enumerate(coords)}
        faces = np.array([[index[v] for v in face_vertices(key)] for key in keys], dtype=np.int64)
        keyset = set(keys)

        tri_set = {frozenset(face_vertices(key)) for key in keyset}
        neighbors = []
        boundary = np.zeros(len(coords), dtype=bool)
        for i, (k, l) in enumerate(coords):
            ring = [(k + dk, l + dl) for dk, dl in OFFSETS]
            present = [frozenset(((k, l), ring[j], ring[(j + 1) % 6])) in tri_set for j in range(6)]
            if all(present):
                neighbors.append(tuple(index[c] for c in ring))
                continue
            starts = [j for j in range(6) if present[j] and not present[j - 1]]
            if len(starts) != 1:
                raise MeshTooCoarse(f"vertex {(k, l)} is a pinch point of the patch")
            j = starts[0]
            chain = [ring[j]]
            while present[j % 6]:
                chain.append(ring[(j + 1) % 6])
                j += 1
            neighbors.append(tuple(index[c] for c in chain))
            boundary[i] = True

        k_arr = np.array([c[0] for c in coords], dtype=np.int64)
        l_arr = np.array([c[1] for c in coords], dtype=np.int64)
        return cls(
            n=int(n),
            k=k_arr,
            l=l_arr,
            faces=faces,
            face_keys=tuple(keys),
            neighbors=tuple(neighbors),
            boundary=boundary,
        )

    @property
    def num_vertices(self) -> int:
        return len(self.k)

    @cached_property
    def pos(self) -> np.ndarray:
        return lattice_pos(self.k, self.l, self.n)

    @cached_property
    def index(self) -> dict[tuple[int, int], int]:
        return {(int(a), int(b)): i for i, (a, b) in enumerate(zip(self.k, self.l))}

    @cached_property
    def face_index(self) -> dict[tuple[int, int, int], int]:
        return {key: i for i, key in enumerate(self.face_keys)}

    @cached_property
    def edges(self) -> np.ndarray:
        """Sorted array of undirected edges ``(u, v)`` with ``u < v``."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    def euler_characteristic(self) -> int:
        return self.num_vertices - len(self.edges) + len(self.faces)

    def vertex_at(self, k: int, l: int) -> int | None:
        return self.index.get((k, l))

    def coords(self, v: int) -> tuple[int, int]:
        return int(self.k[v]), int(self.l[v])

    def face_area(self) -> float:
        return SQRT3 / self.n**2

    def carrier_area(self) -> float:
        return len(self.faces) * self.face_area()

    def contains_point(self, z: complex, tol: float = GEOM_TOL) -> bool:
        return any(key in self.face_index for key, _ in faces_containing(z, self.n, tol))

    def generation_distance(self, v: int, others: Sequence[int]) -> int:
        """Lattice distance from ``v`` to the nearest vertex in ``others``."""
        k, l = self.coords(v)
        return min(hexdist(k - int(self.k[u]), l - int(self.l[u])) for u in others)


def _face_components(keys: set[tuple[int, int, int]]) -> dict[tuple[int, int, int], int]:
    """Label faces by connected component under shared-edge adjacency."""
    edge_faces: dict[frozenset, list] = {}
    for key in keys:
        a, b, c = face_vertices(key)
        for e in (frozenset((a, b)), frozenset((b, c)), frozenset((c, a))):
            edge_faces.setdefault(e, []).append(key)
    adj: dict = {key: [] for key in keys}
    for fs in edge_faces.values():
        if len(fs) == 2:
            adj[fs[0]].append(fs[1])
            adj[fs[1]].append(fs[0])
    label: dict = {}
    count = 0
    for start in sorted(keys):
        if start in label:
            continue
        start_label = count
        count += 1
        label[start] = start_label
        queue = deque([start])
        while queue:
            f = queue.popleft()
            for g in adj[f]:
                if g not in label:
                    label[g] = start_label
                    queue.append(g)
    return label


def build_subcomplex(domain: DomainSpec, n: int, xi: complex | None = None) -> TriComplex:
    """Maximal complete subcomplex of the mesh-``n`` lattice inside ``domain``.

    Keeps the edge-connected component of faces around the origin and checks
    that it is simply connected and that its carrier contains ``xi`` (when
    given).
    """
    if n < 1:
        raise ValueError("mesh n must be a positive integer")
    xmin, ymin, xmax, ymax = domain.bounds()
    lmin = math.floor(ymin * n / SQRT3) - 1
    lmax = math.ceil(ymax * n / SQRT3) + 1
    kmin = math.floor((xmin * n - lmax) / 2.0) - 1
    kmax = math.ceil((xmax * n - lmin) / 2.0) + 1

    kk, ll, tt = np.meshgrid(
        np.arange(kmin, kmax + 1), np.arange(lmin, lmax + 1), np.array([0, 1]), indexing="ij"
    )
    kk, ll, tt = kk.ravel(), ll.ravel(), tt.ravel()
    # vertex coordinates of each candidate face, ordered as in face_vertices
    vk = np.stack([kk + tt, kk + 1, kk], axis=1)
    vl = np.stack([ll, ll + tt, ll + 1], axis=1)
    tri = lattice_pos(vk, vl, n)
    inside = domain.contains_triangles(tri)
    keys = {(int(a), int(b), int(c)) for a, b, c in zip(kk[inside], ll[inside], tt[inside])}

    origin_faces = [key for key, _ in faces_containing(0j, n) if key in keys]
    if not origin_faces:
        raise MeshTooCoarse(f"n={n}: no lattice face around the origin fits in the domain")
    label = _face_components(keys)
    comps = {label[f] for f in origin_faces}
    if len(comps) != 1:
        raise MeshTooCoarse(f"n={n}: the patch is pinched at the origin")
    comp = comps.pop()
    keys = {f for f in keys if label[f] == comp}

    cx = TriComplex.from_faces(keys, n)
    chi = cx.euler_characteristic()
    if chi != 1:
        raise MeshTooCoarse(f"n={n}: patch around the origin is not simply connected (V-E+F={chi})")
    if xi is not None and not cx.contains_point(complex(xi)):
        raise MeshTooCoarse(f"n={n}: xi={xi} is not in the carrier")
    return cx


def hex_patch(generations: int, n: int = 1) -> TriComplex:
    """Hexagonal patch: all lattice faces within ``generations`` steps of the origin."""
    g = generations
    keys = []
    for k in range(-g - 1, g + 1):
        for l in range(-g - 1, g + 1):
            for t in (0, 1):
                if all(hexdist(a, b) <= g for a, b in face_vertices((k, l, t))):
                    keys.append((k, l, t))
    return TriComplex.from_faces(keys, n)


# --------------------------------------------------------------------------
# branch assignments


@dataclass(frozen=True)
class BranchAssignment:
    """Candidate branch set: ``(vertex index, order)`` pairs with distinct vertices."""

    entries: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        entries = tuple((int(v), int(k)) for v, k in self.entries)
        object.__setattr__(self, "entries", entries)
        vs = [v for v, _ in entries]
        if len(set(vs)) != len(vs):
            raise ValueError("branch vertices must be distinct")
        if any(k < 1 for _, k in entries):
            raise ValueError("branch orders must be at least 1")

    @classmethod
    def simple(cls, vertices: Iterable[int]) -> "BranchAssignment":
        return cls(tuple((int(v), 1) for v in vertices))

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.entries)

    @property
    def total_order(self) -> int:
        return sum(k for _, k in self.entries)

    def order_of(self, v: int) -> int:
        for u, k in self.entries:
            if u == v:
                return k
        return 0

    def orders(self, num_vertices: int) -> np.ndarray:
        out = np.zeros(num_vertices, dtype=np.int64)
        for v, k in self.entries:
            out[v] = k
        return out

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def check_interior(self, cx: TriComplex) -> None:
        for v, _ in self.entries:
            if not 0 <= v < cx.num_vertices or cx.boundary[v]:
                raise ValueError(f"branch vertex {v} is not an interior vertex")


def snap_branch_points(cx: TriComplex, crit: Sequence[tuple[complex, int]]) -> BranchAssignment:
    """Assign each critical point of order ``k`` to its ``k`` nearest interior vertices.

    Distance ties are broken by lexicographic ``(k, l)``. Every entry of the
    result has order 1, multiplicity being carried by distinct vertices.
    """
    interior = cx.interior_vertices
    taken: dict[int, int] = {}
    chosen: list[int] = []
    spacing = 2.0 / cx.n
    for i, (x, order) in enumerate(crit):
        x, order = complex(x), int(order)
        if order < 1:
            raise ValueError("critical point orders must be at least 1")
        if len(interior) < order:
            raise SnapFailed(f"only {len(interior)} interior vertices for a point of order {order}")
        d = np.abs(cx.pos[interior] - x)
        ranked = sorted(
            zip(interior.tolist(), d.tolist()),
            key=lambda t: (round(t[1], 12), cx.coords(t[0])),
        )
        for v, dist in ranked[:order]:
            if dist > (order + 2) * spacing:
                raise SnapFailed(f"critical point {x} has no interior vertex within {(order + 2) * spacing:g}")
            if v in taken:
                raise SnapFailed(f"critical points {taken[v]} and {i} compete for vertex {cx.coords(v)}")
            taken[v] = i
            chosen.append(v)
    return BranchAssignment.simple(chosen)
