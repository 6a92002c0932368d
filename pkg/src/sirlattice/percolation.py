"""Graph representation of the epidemic: villages as cliques of particles.

Vertices are (site, particle) pairs on box x {1..N}.  In the undirected
graph, every pair of particles at the same or l1-adjacent sites carries an
edge, each open independently with the per-pair infection probability;
breadth-first layers from the initially infected set reproduce the SIR
process in distribution (level n = infected at time n, levels < n =
recovered).  The oriented variant keeps only up/right edges between
adjacent sites and its reachable set reproduces the frontier counts.

Edges are never materialized: each canonical edge id is hashed through the
Philox counter cipher keyed by the sample seed, so decisions are stable
across queries and independent of traversal order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .fields import GridField, Window
from .rng import uniform_from_counters

__all__ = [
    "PercolationSample",
    "OrientedPercolationSample",
    "bfs_levels",
    "sir_from_percolation",
    "oriented_frontier",
    "sources_from_counts",
    "enumerate_edges",
]

_COORD_OFF = 1 << 15
_ORIENTED_SALT = np.uint32(0x0D1E)


def _pack_site(x, y):
    return (
        (np.asarray(x, dtype=np.int64) + _COORD_OFF).astype(np.uint32) << np.uint32(16)
    ) | (np.asarray(y, dtype=np.int64) + _COORD_OFF).astype(np.uint32)


@dataclass(frozen=True)
class PercolationSample:
    """Undirected sample; ``forced`` overrides the hash oracle per canonical
    edge id (used by exhaustive enumeration)."""

    box: Window
    village_size: int
    open_prob: float
    seed: int = 0
    forced: dict | None = None

    oriented = False

    def __post_init__(self):
        if not (0.0 <= self.open_prob <= 1.0):
            raise ValueError(f"open probability must lie in [0, 1], got {self.open_prob}")
        if self.village_size < 1:
            raise ValueError("village size must be >= 1")

    def edge_key(self, a, b):
        """Canonical id of the undirected edge a - b (smaller endpoint first)."""
        return (a, b) if a <= b else (b, a)

    def edges_open(self, ax, ay, ai, bx, by, bi) -> np.ndarray:
        """Vectorized open/closed decision for undirected edges."""
        ax = np.asarray(ax, dtype=np.int64)
        ay = np.asarray(ay, dtype=np.int64)
        ai = np.asarray(ai, dtype=np.int64)
        bx = np.asarray(bx, dtype=np.int64)
        by = np.asarray(by, dtype=np.int64)
        bi = np.asarray(bi, dtype=np.int64)
        if self.forced is not None:
            out = np.zeros(np.broadcast(ax, bx).shape, dtype=bool)
            it = np.nditer([ax, ay, ai, bx, by, bi], flags=["multi_index"])
            for vax, vay, vai, vbx, vby, vbi in it:
                key = self.edge_key(
                    (int(vax), int(vay), int(vai)), (int(vbx), int(vby), int(vbi))
                )
                out[it.multi_index] = self.forced.get(key, False)
            return out
        # canonical order: smaller (x, y, particle) endpoint first
        a_tuple = np.stack(np.broadcast_arrays(ax, ay, ai))
        b_tuple = np.stack(np.broadcast_arrays(bx, by, bi))
        swap = _lex_greater(a_tuple, b_tuple)
        lo = np.where(swap, b_tuple, a_tuple)
        hi = np.where(swap, a_tuple, b_tuple)
        u = uniform_from_counters(
            _pack_site(lo[0], lo[1]),
            _pack_site(hi[0], hi[1]),
            (lo[2].astype(np.uint32) << np.uint32(16)) | hi[2].astype(np.uint32),
            np.uint32(0),
            self.seed,
        )
        return u < self.open_prob


def _lex_greater(a, b):
    """a > b lexicographically, componentwise over stacked coordinate rows."""
    gt = a[0] > b[0]
    eq = a[0] == b[0]
    for r in range(1, a.shape[0]):
        gt = gt | (eq & (a[r] > b[r]))
        eq = eq & (a[r] == b[r])
    return gt


@dataclass(frozen=True)
class OrientedPercolationSample:
    """Directed sample: edges point from each site to its up and right
    neighbors only; the id includes the direction."""

    box: Window
    village_size: int
    open_prob: float
    seed: int = 0
    forced: dict | None = None

    oriented = True

    def edge_key(self, tail, head):
        return (tail, head)

    def edges_open(self, ax, ay, ai, bx, by, bi) -> np.ndarray:
        ax = np.asarray(ax, dtype=np.int64)
        ay = np.asarray(ay, dtype=np.int64)
        ai = np.asarray(ai, dtype=np.int64)
        bx = np.asarray(bx, dtype=np.int64)
        by = np.asarray(by, dtype=np.int64)
        bi = np.asarray(bi, dtype=np.int64)
        if self.forced is not None:
            out = np.zeros(np.broadcast(ax, bx).shape, dtype=bool)
            it = np.nditer([ax, ay, ai, bx, by, bi], flags=["multi_index"])
            for vax, vay, vai, vbx, vby, vbi in it:
                key = ((int(vax), int(vay), int(vai)), (int(vbx), int(vby), int(vbi)))
                out[it.multi_index] = self.forced.get(key, False)
            return out
        a = np.broadcast_arrays(ax, ay, ai)
        b = np.broadcast_arrays(bx, by, bi)
        u = uniform_from_counters(
            _pack_site(a[0], a[1]),
            _pack_site(b[0], b[1]),
            (np.asarray(a[2], dtype=np.uint32) << np.uint32(16))
            | np.asarray(b[2], dtype=np.uint32),
            _ORIENTED_SALT,
            self.seed,
        )
        return u < self.open_prob


def sources_from_counts(counts: GridField) -> list:
    """Initial vertex set: the lowest-index particles at each site."""
    out = []
    w = counts.window
    for i in range(counts.data.shape[0]):
        for j in range(counts.data.shape[1]):
            k = int(counts.data[i, j])
            for p in range(k):
                out.append((w.x_lo + i, w.y_lo + j, p))
    return out


def enumerate_edges(sample) -> list:
    """All canonical edge ids of a sample's (finite) graph."""
    box, n = sample.box, sample.village_size
    edges = []
    sites = list(box.sites())
    if sample.oriented:
        for (x, y) in sites:
            for (dx, dy) in ((1, 0), (0, 1)):
                if box.contains(x + dx, y + dy):
                    for i in range(n):
                        for j in range(n):
                            edges.append(((x, y, i), (x + dx, y + dy, j)))
        return edges
    for (x, y) in sites:
        for i, j in itertools.combinations(range(n), 2):
            edges.append(((x, y, i), (x, y, j)))
        for (dx, dy) in ((1, 0), (0, 1)):  # each unordered site pair once
            if box.contains(x + dx, y + dy):
                for i in range(n):
                    for j in range(n):
                        edges.append(sample.edge_key((x, y, i), (x + dx, y + dy, j)))
    return edges


def bfs_levels(sample: PercolationSample, sources: list) -> list:
    """Breadth-first layering from the source vertices.

    Returns per-level infected-count fields: level n holds, at each site,
    the number of vertices at graph distance exactly n from the sources.
    """
    if not sources:
        raise ValueError("source set must not be empty")
    box, nvil = sample.box, sample.village_size
    w, h = box.shape
    n_sites = w * h

    def vid(x, y, i):
        return ((x - box.x_lo) * h + (y - box.y_lo)) * nvil + i

    dist = np.full(n_sites * nvil, -1, dtype=np.int64)
    fx = np.array([s[0] for s in sources], dtype=np.int64)
    fy = np.array([s[1] for s in sources], dtype=np.int64)
    fi = np.array([s[2] for s in sources], dtype=np.int64)
    for x, y, i in sources:
        if not box.contains(x, y) or not (0 <= i < nvil):
            raise ValueError(f"source {(x, y, i)} outside the vertex set")
        dist[vid(x, y, i)] = 0

    levels = [_level_field(box, nvil, dist, 0)]
    d = 0
    while len(fx) > 0:
        cand_x, cand_y, cand_i = [], [], []
        tail_x, tail_y, tail_i = [], [], []
        for dx, dy in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
            hx, hy = fx + dx, fy + dy
            ok = (
                (hx >= box.x_lo) & (hx <= box.x_hi) & (hy >= box.y_lo) & (hy <= box.y_hi)
            )
            if not ok.any():
                continue
            for j in range(nvil):
                cand_x.append(hx[ok])
                cand_y.append(hy[ok])
                cand_i.append(np.full(ok.sum(), j, dtype=np.int64))
                tail_x.append(fx[ok])
                tail_y.append(fy[ok])
                tail_i.append(fi[ok])
        hx = np.concatenate(cand_x)
        hy = np.concatenate(cand_y)
        hi = np.concatenate(cand_i)
        tx = np.concatenate(tail_x)
        ty = np.concatenate(tail_y)
        ti = np.concatenate(tail_i)
        not_self = ~((hx == tx) & (hy == ty) & (hi == ti))
        head_ids = ((hx - box.x_lo) * h + (hy - box.y_lo)) * nvil + hi
        fresh = dist[head_ids] < 0
        keep = not_self & fresh
        if keep.any():
            open_mask = sample.edges_open(
                tx[keep], ty[keep], ti[keep], hx[keep], hy[keep], hi[keep]
            )
        else:
            open_mask = np.zeros(0, dtype=bool)
        reached = head_ids[keep][open_mask]
        reached = np.unique(reached)
        d += 1
        if len(reached) == 0:
            break
        dist[reached] = d
        fi = reached % nvil
        rest = reached // nvil
        fy = rest % h + box.y_lo
        fx = rest // h + box.x_lo
        levels.append(_level_field(box, nvil, dist, d))
    return levels


def _level_field(box, nvil, dist, d):
    w, h = box.shape
    per_site = (dist.reshape(w * h, nvil) == d).sum(axis=1)
    return GridField(box, per_site.reshape(w, h).astype(np.int64))


def sir_from_percolation(sample: PercolationSample, initial_counts: GridField) -> list:
    """(I_n, R_n) trajectory read off the graph layers.

    I_n counts vertices at distance n from the initial set, R_n those at
    distance <= n - 1; equal in distribution to the stochastic process with
    the same initial counts.
    """
    for x in range(initial_counts.window.x_lo, initial_counts.window.x_hi + 1):
        for y in range(initial_counts.window.y_lo, initial_counts.window.y_hi + 1):
            if initial_counts.get(x, y) > sample.village_size:
                raise ValueError("initial counts exceed the village size")
    levels = bfs_levels(sample, sources_from_counts(initial_counts))
    out = []
    r = GridField(sample.box, dtype=np.int64)
    for n, i_field in enumerate(levels):
        out.append((i_field, GridField(sample.box, r.data.copy())))
        r = GridField(sample.box, r.data + i_field.data)
    return out


def oriented_frontier(sample: OrientedPercolationSample, line_counts: GridField) -> GridField:
    """Reachable-count field of the oriented sample from a source set on the
    antidiagonal x + y = 0.

    W(x) counts vertices at x reachable through open directed edges; it
    matches, in distribution, the infected count the first time the
    epidemic touches each site."""
    box, nvil = sample.box, sample.village_size
    w = line_counts.window
    for i in range(line_counts.data.shape[0]):
        for j in range(line_counts.data.shape[1]):
            if line_counts.data[i, j] > 0 and (w.x_lo + i) + (w.y_lo + j) != 0:
                raise ValueError("oriented sources must sit on x + y = 0")
    reached = {}
    for x, y, p in sources_from_counts(line_counts):
        mask = reached.setdefault((x, y), np.zeros(nvil, dtype=bool))
        mask[p] = True
    d_max = box.x_hi + box.y_hi
    for d in range(1, d_max + 1):
        for x in range(box.x_lo, box.x_hi + 1):
            y = d - x
            if not box.contains(x, y):
                continue
            mask = np.zeros(nvil, dtype=bool)
            for tail in ((x - 1, y), (x, y - 1)):
                tmask = reached.get(tail)
                if tmask is None or not tmask.any():
                    continue
                tis = np.nonzero(tmask)[0]
                ti, hj = np.meshgrid(tis, np.arange(nvil), indexing="ij")
                open_mask = sample.edges_open(
                    np.full(ti.shape, tail[0]),
                    np.full(ti.shape, tail[1]),
                    ti,
                    np.full(ti.shape, x),
                    np.full(ti.shape, y),
                    hj,
                )
                mask |= open_mask.any(axis=0)
            if mask.any():
                reached[(x, y)] = mask
    out = GridField(box, dtype=np.int64)
    for (x, y), mask in reached.items():
        out.set(x, y, int(mask.sum()))
    return out
