"""Branch-structure test for simple branch sets on hexagonal complexes.

A branch set is admissible when every simple closed edge-path with enclosed
order ``w`` has at least ``2w + 3`` edges. A path violating this has at most
``2W + 2`` edges, ``W`` the total order, so the search is finite.

``verify_branch_structure`` is the production check. It roots the search at
lattice vertices on horizontal rays from the branch vertices (every enclosing
cycle must cross such a ray at a vertex), tracks enclosure parity against
those rays exactly in integer lattice coordinates, and prunes with a shortest
closed-walk bound computed in the parity cover of the graph.

``brute_force_check`` enumerates every simple cycle with networkx and tests
enclosure by floating point ray casting. It exists to cross-check the above.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import networkx as nx
import numpy as np

from cpapprox.complex import OFFSETS, BranchAssignment, TriComplex, hexdist

Coord = tuple[int, int]


class BudgetExceeded(RuntimeError):
    """Cycle enumeration went past the configured budget."""


@dataclass(frozen=True)
class CycleWitness:
    """A simple closed edge-path that is too short for the weight it encloses.

    ``cycle`` holds lattice coordinates ``(k, l)`` in canonical rotation;
    ``enclosed`` the branch vertex indices strictly inside it.
    """

    cycle: tuple[Coord, ...]
    enclosed_weight: int
    length: int
    enclosed: tuple[int, ...] = ()

    @property
    def margin(self) -> int:
        """How many edges short of the ``2w + 3`` bound the cycle is."""
        return 2 * self.enclosed_weight + 3 - self.length

    def sort_key(self):
        return (-self.margin, self.length, self.cycle)


def canonical_cycle(cycle) -> tuple[Coord, ...]:
    """Rotate to start at the smallest vertex and orient so the second vertex is smaller."""
    cyc = [tuple(c) for c in cycle]
    i = cyc.index(min(cyc))
    cyc = cyc[i:] + cyc[:i]
    if len(cyc) > 2 and cyc[-1] < cyc[1]:
        cyc = [cyc[0]] + cyc[:0:-1]
    return tuple(cyc)


def _best(witnesses):
    return min(witnesses, key=CycleWitness.sort_key) if witnesses else None


# --------------------------------------------------------------------------
# exact pruned search


def _crosses(a: Coord, b: Coord, root: Coord) -> bool:
    """Does edge ``ab`` cross the horizontal ray from ``root``, lifted infinitesimally upward?"""
    kr, lr = root
    if {a[1], b[1]} != {lr, lr + 1}:
        return False
    low = a if a[1] == lr else b
    high = b if low is a else a
    if low[0] != kr:
        return low[0] > kr
    # edge leaves the ray origin itself: only the up-right edge meets the lifted ray
    return high[0] == kr


def verify_branch_structure(
    cx: TriComplex, br: BranchAssignment, ambient: bool = False
) -> CycleWitness | None:
    """Return ``None`` if ``br`` is a branch structure for ``cx``, else a witness.

    With ``ambient=True`` cycles are taken in the full lattice instead of the
    patch, which is the stricter reading used by the pipeline.

    The witness is the violating cycle with the largest deficit
    ``2w + 3 - length``, then the shortest, then the lexicographically
    smallest canonical vertex sequence.
    """
    br.check_interior(cx)
    if not br:
        return None
    m = len(br)
    if m > 16:
        raise ValueError("more than 16 branch vertices is not supported")

    bcoords = [cx.coords(v) for v in br.vertices]
    weights = [k for _, k in br.entries]
    total = sum(weights)
    max_len = 2 * total + 2
    radius = max_len // 2

    def near(c: Coord) -> bool:
        return any(hexdist(c[0] - b[0], c[1] - b[1]) <= radius for b in bcoords)

    # local working graph
    if ambient:
        verts = sorted(
            {
                (b[0] + dk, b[1] + dl)
                for b in bcoords
                for dk in range(-radius, radius + 1)
                for dl in range(-radius, radius + 1)
                if hexdist(dk, dl) <= radius
            }
        )
        local = {c: i for i, c in enumerate(verts)}
        adj = [
            [local[(c[0] + dk, c[1] + dl)] for dk, dl in OFFSETS if (c[0] + dk, c[1] + dl) in local]
            for c in verts
        ]
    else:
        keep = [v for v in range(cx.num_vertices) if near(cx.coords(v))]
        verts = [cx.coords(v) for v in keep]
        local = {c: i for i, c in enumerate(verts)}
        adj = []
        for v in keep:
            nb = set(cx.neighbors[v])
            adj.append([local[cx.coords(u)] for u in sorted(nb) if cx.coords(u) in local])

    nv = len(verts)
    nmask = 1 << m
    # branch vertex bits and the weight of each enclosure mask
    bit_of = {local[c]: j for j, c in enumerate(bcoords)}
    mask_weight = np.zeros(nmask, dtype=np.int64)
    for mask in range(1, nmask):
        mask_weight[mask] = sum(weights[j] for j in range(m) if mask >> j & 1)

    deg = max(len(a) for a in adj)
    nbr = np.full((nv, deg), nv, dtype=np.int64)  # index nv is an inert sentinel
    cross = np.zeros((nv, deg), dtype=np.int64)
    cross_of: list[dict[int, int]] = []
    for i, a in enumerate(adj):
        row = {}
        for s, u in enumerate(a):
            c = 0
            for j, b in enumerate(bcoords):
                if _crosses(verts[i], verts[u], b):
                    c |= 1 << j
            nbr[i, s] = u
            cross[i, s] = c
            row[u] = c
        cross_of.append(row)

    roots = []
    for b in bcoords:
        for j in range(1, radius + 1):
            r = local.get((b[0] + j, b[1]))
            if r is not None and r not in roots:
                roots.append(r)
    if not roots:
        return None

    # closing bound: bound[r, v, mask] = min over target masks T != 0 of
    # (shortest walk from (v, mask) to (r, T) in the parity cover) - 2 w(T)
    inf = 10**9
    nr = len(roots)
    bound = np.full((nr, nv + 1, nmask), inf, dtype=np.int64)
    for ri, r in enumerate(roots):
        bound[ri, r, 1:] = -2 * mask_weight[1:]
    masks = np.arange(nmask)
    for _ in range(2 * total + 2):
        best = bound[:, :nv, :].copy()
        for s in range(deg):
            cand = bound[:, nbr[:, s][:, None], masks[None, :] ^ cross[:, s][:, None]] + 1
            np.minimum(best, cand, out=best)
        if np.array_equal(best, bound[:, :nv, :]):
            break
        bound[:, :nv, :] = best

    branch_locals = set(bit_of)
    on_path = np.zeros(nv, dtype=bool)

    def search(floor: int) -> list[CycleWitness]:
        """All violating cycles whose deficit is at least ``floor`` and maximal."""
        found: list[CycleWitness] = []
        best_margin = floor
        for ri, r in enumerate(roots):
            if 3 - bound[ri, r, 0] < best_margin:
                continue
            path = [r]
            on_path[:] = False
            on_path[r] = True

            def close(mask: int):
                nonlocal best_margin
                for v in path:
                    if v in branch_locals:
                        mask &= ~(1 << bit_of[v])
                if mask == 0:
                    return
                w = int(mask_weight[mask])
                margin = 2 * w + 3 - len(path)
                if margin < best_margin:
                    return
                if margin > best_margin:
                    found.clear()
                    best_margin = margin
                enclosed = tuple(br.vertices[j] for j in range(m) if mask >> j & 1)
                found.append(
                    CycleWitness(canonical_cycle([verts[v] for v in path]), w, len(path), enclosed)
                )

            def dfs(v: int, mask: int):
                length = len(path)
                for u in adj[v]:
                    c = cross_of[v][u]
                    if u == r:
                        if length >= 3:
                            close(mask ^ c)
                        continue
                    if on_path[u]:
                        continue
                    nm = mask ^ c
                    if 3 - length - bound[ri, u, nm] < best_margin:
                        continue
                    on_path[u] = True
                    path.append(u)
                    dfs(u, nm)
                    path.pop()
                    on_path[u] = False

            dfs(r, 0)
        return found

    # try large deficits first; the walk bound caps what any cycle can reach
    top = max(3 - int(bound[ri, r, 0]) for ri, r in enumerate(roots))
    for floor in range(top, 0, -1):
        found = search(floor)
        if found:
            return _best(found)
    return None


def is_branch_structure(cx: TriComplex, br: BranchAssignment, ambient: bool = False) -> bool:
    return verify_branch_structure(cx, br, ambient=ambient) is None


# --------------------------------------------------------------------------
# exhaustive oracle


@dataclass(frozen=True)
class CycleTable:
    """Every simple cycle of a complex up to ``max_len`` with its enclosed vertices."""

    cycles: tuple[tuple[int, ...], ...]
    lengths: np.ndarray
    enclosed: np.ndarray  # (num_cycles, num_vertices) bool
    max_len: int


def _even_odd(px: np.ndarray, py: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    xi, yi = xs[:, None], ys[:, None]
    xj, yj = np.roll(xs, -1)[:, None], np.roll(ys, -1)[:, None]
    straddle = (yi > py) != (yj > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = (xj - xi) * (py - yi) / (yj - yi) + xi
    hits = straddle & (px < xcross)
    return (hits.sum(axis=0) % 2).astype(bool)


def cycle_table(cx: TriComplex, max_len: int, budget: int = 2_000_000) -> CycleTable:
    """Enumerate all simple cycles of length ``3..max_len`` in ``cx``."""
    g = nx.Graph()
    g.add_nodes_from(range(cx.num_vertices))
    g.add_edges_from(map(tuple, cx.edges.tolist()))
    px, py = cx.pos.real[None, :], cx.pos.imag[None, :]
    cycles, lengths, rows = [], [], []
    for count, cyc in enumerate(nx.simple_cycles(g, length_bound=max_len)):
        if count >= budget:
            raise BudgetExceeded(f"more than {budget} cycles of length <= {max_len}")
        if len(cyc) < 3:
            continue
        idx = np.asarray(cyc)
        inside = _even_odd(px, py, cx.pos.real[idx], cx.pos.imag[idx])
        inside[idx] = False
        cycles.append(tuple(cyc))
        lengths.append(len(cyc))
        rows.append(inside)
    enclosed = np.array(rows, dtype=bool).reshape(len(rows), cx.num_vertices)
    return CycleTable(tuple(cycles), np.asarray(lengths, dtype=np.int64), enclosed, max_len)


def brute_force_check(
    cx: TriComplex,
    br: BranchAssignment,
    max_len: int,
    budget: int = 2_000_000,
    table: CycleTable | None = None,
) -> CycleWitness | None:
    """Exhaustive version of :func:`verify_branch_structure` over cycles up to ``max_len``.

    A precomputed ``table`` (with at least ``max_len``) may be passed to reuse
    the enumeration across many assignments on one complex.
    """
    br.check_interior(cx)
    if table is None or table.max_len < max_len:
        table = cycle_table(cx, max_len, budget)
    if not br or not len(table.cycles):
        return None
    weight = br.orders(cx.num_vertices)
    sel = table.lengths <= max_len
    w = table.enclosed[:, br.vertices].astype(np.int64) @ weight[list(br.vertices)]
    margin = 2 * w + 3 - table.lengths
    bad = np.flatnonzero(sel & (w > 0) & (margin >= 1))
    if not len(bad):
        return None
    top = margin[bad].max()
    witnesses = []
    for c in bad[margin[bad] == top]:
        cyc = table.cycles[c]
        enclosed = tuple(v for v in br.vertices if table.enclosed[c, v])
        witnesses.append(
            CycleWitness(canonical_cycle([cx.coords(v) for v in cyc]), int(w[c]), len(cyc), enclosed)
        )
    return _best(witnesses)


def assignments(cx: TriComplex, max_size: int):
    """All simple branch assignments of 1..max_size interior vertices."""
    interior = cx.interior_vertices.tolist()
    for size in range(1, max_size + 1):
        for combo in itertools.combinations(interior, size):
            yield BranchAssignment.simple(combo)
