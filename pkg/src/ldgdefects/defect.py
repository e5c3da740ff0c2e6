"""Defect extraction and topological classification of discrete fields.

Defects are connected components of the region where the normalised
eigenvalue gap phi drops below a threshold. Line components are reduced to
a skeleton graph whose length and junctions are reported. Topology is read
off by lifting the leading eigenvector along closed loops (orientability) or
over triangulated disks and spheres (degree).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import pdist
from skimage.morphology import skeletonize

from . import io
from . import qtensor as qt
from .errors import LiftFailed, NonIntegerDegree, NotOrientableSampling
from .field import INTERIOR, QField
from .potential import MaterialParams

POINT, LINE, AMBIGUOUS = "Point", "Line", "Ambiguous"
TRIVIAL, NONTRIVIAL = "Trivial", "NonTrivial"

PHI_MIN_LOOP = 0.2
ALIGN_MIN = 0.7
DEGREE_TOL = 0.1
SPUR_CELLS = 3.0


@dataclass
class SkeletonGraph:
    nodes: np.ndarray                 # (K, d) positions
    edges: np.ndarray                 # (E, 2) node pairs of the spanning tree

    @property
    def length(self) -> float:
        if len(self.edges) == 0:
            return 0.0
        d = self.nodes[self.edges[:, 0]] - self.nodes[self.edges[:, 1]]
        return float(np.sum(np.linalg.norm(d, axis=1)))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(len(self.nodes), dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def neighbours(self) -> list[list[int]]:
        adj = [[] for _ in range(len(self.nodes))]
        for a, b in self.edges:
            adj[a].append(int(b))
            adj[b].append(int(a))
        return adj

    @classmethod
    def from_points(cls, pts: np.ndarray, spacing: float) -> "SkeletonGraph":
        """Spanning tree of points joined when they are lattice neighbours."""
        pts = np.asarray(pts, dtype=float)
        K = len(pts)
        if K < 2:
            return cls(pts, np.zeros((0, 2), dtype=int))
        lim = spacing * np.sqrt(pts.shape[1]) * (1 + 1e-9)
        rows, cols, w = [], [], []
        for i in range(K):
            d = np.linalg.norm(pts[i + 1:] - pts[i], axis=1)
            j = np.flatnonzero(d <= lim)
            rows.extend([i] * len(j))
            cols.extend((j + i + 1).tolist())
            w.extend(d[j].tolist())
        T = minimum_spanning_tree(coo_matrix((w, (rows, cols)), shape=(K, K)).tocsr()).tocoo()
        order = np.lexsort((T.col, T.row))
        return cls(pts, np.stack([T.row[order], T.col[order]], axis=1).astype(int))

    def pruned(self, min_length: float) -> "SkeletonGraph":
        """Drop terminal branches shorter than min_length, repeatedly.

        A terminal branch runs from a leaf to the first node of degree >= 3.
        Paths joining two leaves are never removed.
        """
        g = self
        while True:
            adj = g.neighbours()
            deg = g.degrees()
            drop = set()
            for leaf in np.flatnonzero(deg == 1):
                path, prev, cur, run = [int(leaf)], -1, int(leaf), 0.0
                while deg[cur] < 3:
                    nxt = [v for v in adj[cur] if v != prev]
                    if not nxt:
                        break
                    run += float(np.linalg.norm(g.nodes[nxt[0]] - g.nodes[cur]))
                    prev, cur = cur, nxt[0]
                    if deg[cur] < 3:
                        path.append(cur)
                if deg[cur] >= 3 and run < min_length:
                    drop.update(path)
            if not drop:
                return g
            keep = np.array([i for i in range(len(g.nodes)) if i not in drop], dtype=int)
            index = np.full(len(g.nodes), -1)
            index[keep] = np.arange(len(keep))
            e = index[g.edges]
            g = SkeletonGraph(g.nodes[keep], e[np.all(e >= 0, axis=1)].reshape(-1, 2))


@dataclass
class Component:
    label: int
    kind: str
    cells: np.ndarray                 # (m, d) integer cell indices
    points: np.ndarray                # (m, d) cell centres
    centroid: np.ndarray
    extent_cells: float               # principal-axis extent measured in cells
    diameter: float
    skeleton: SkeletonGraph
    topology: str = ""

    @property
    def length(self) -> float:
        return self.skeleton.length

    @property
    def branch_nodes(self) -> int:
        return int(np.sum(self.skeleton.degrees() >= 3))


@dataclass
class DefectSet:
    components: list
    threshold: float
    epsilon: float
    h: float
    meta: dict = dc_field(default_factory=dict)

    def of_kind(self, kind: str) -> list:
        return [c for c in self.components if c.kind == kind]

    def write_report(self, path, meta=None):
        cols = ("id", "kind", "cells", "centroid_x", "centroid_y", "centroid_z", "diameter",
                "length", "branch_nodes", "topology", "threshold", "eps", "h")
        rows = []
        for c in self.components:
            cen = list(c.centroid) + [0.0] * (3 - len(c.centroid))
            rows.append((c.label, c.kind, len(c.cells), *cen, c.diameter, c.length,
                         c.branch_nodes, c.topology or "none", self.threshold, self.epsilon, self.h))
        return io.write_csv(path, cols, rows, meta)


def _diameter(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    if len(pts) <= 3000:
        return float(np.max(pdist(pts)))
    # repeated farthest-point sweeps; exact for elongated sets
    i = 0
    best = 0.0
    for _ in range(4):
        d = np.linalg.norm(pts - pts[i], axis=1)
        j = int(np.argmax(d))
        best = max(best, float(d[j]))
        i = j
    return best


def _principal_extent(pts: np.ndarray, h: float) -> float:
    if len(pts) < 2:
        return 1.0
    c = pts - pts.mean(axis=0)
    _, _, Vt = np.linalg.svd(c, full_matrices=False)
    proj = c @ Vt[0]
    return float((proj.max() - proj.min()) / h + 1.0)


def _refine(mask: np.ndarray) -> np.ndarray:
    """Half-spacing copy of a mask: cell centres plus midpoints, a midpoint set
    only when both neighbours are. A run of w cells becomes 2w - 1 samples, so
    every width is odd; the thinning step erases even-width straight rods."""
    a = mask
    for ax in range(mask.ndim):
        a = np.moveaxis(a, ax, 0)
        out = np.zeros((2 * a.shape[0] - 1,) + a.shape[1:], dtype=bool)
        out[::2] = a
        out[1::2] = a[:-1] & a[1:]
        a = np.moveaxis(out, 0, ax)
    return a


def extract_defects(field: QField, params: MaterialParams, threshold: float = 0.3) -> DefectSet:
    """Components of {phi < threshold} among interior cells.

    Components use full (26- or 8-) connectivity. A component is a Point if
    its diameter is at most 3 eps, otherwise a Line if it extends over at
    least 4 cells along its principal axis and its skeleton has at least 3
    nodes, otherwise Ambiguous.
    """
    d = field.domain
    ph = field.phi(params.s_star)
    mask = (d.cell_class == INTERIOR) & (ph < threshold)
    labels, nlab = ndimage.label(mask, structure=np.ones((3,) * d.dim))
    X = d.centers()
    comps = []
    for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        sub = labels[sl] == lab
        cells = np.argwhere(sub) + np.array([s.start for s in sl])
        pts = X[tuple(cells.T)]
        diam = _diameter(pts)
        ext = _principal_extent(pts, d.h)
        start = np.array([s.start for s in sl])
        sk = np.argwhere(skeletonize(np.pad(_refine(sub), 1))) - 1
        if len(sk) == 0:
            sk = 2 * (cells[[int(np.argmin(np.linalg.norm(pts - pts.mean(axis=0), axis=1)))]] - start)
        graph = SkeletonGraph.from_points(d.origin + d.h * (start + 0.5 * sk), 0.5 * d.h).pruned(SPUR_CELLS * d.h)
        if diam <= 3.0 * field.epsilon:
            kind = POINT
        elif ext >= 4 and len(graph.nodes) >= 3:
            kind = LINE
        else:
            kind = AMBIGUOUS
        comps.append(Component(lab, kind, cells, pts, pts.mean(axis=0), ext, diam, graph))
    return DefectSet(comps, threshold, field.epsilon, d.h)


# -------------------------------------------------------------- junctions

@dataclass(frozen=True)
class Junction:
    position: np.ndarray
    branches: int
    even: bool
    direction_sum: float


def branch_parity(graph: SkeletonGraph, reach: int = 3) -> list[Junction]:
    """Branch count and balance of outgoing directions at every junction.

    For each node of degree >= 3, follow each incident branch for up to
    `reach` edges (stopping at other junctions) and sum the unit vectors
    pointing from the node to the branch end.
    """
    adj = graph.neighbours()
    deg = graph.degrees()
    out = []
    for v in np.flatnonzero(deg >= 3):
        total = np.zeros(graph.nodes.shape[1])
        for start in adj[v]:
            prev, cur = int(v), start
            for _ in range(reach - 1):
                nxt = [w for w in adj[cur] if w != prev]
                if len(nxt) != 1:
                    break
                prev, cur = cur, nxt[0]
            vec = graph.nodes[cur] - graph.nodes[v]
            total += vec / np.linalg.norm(vec)
        out.append(Junction(graph.nodes[v], int(deg[v]), deg[v] % 2 == 0, float(np.linalg.norm(total))))
    return out


# ------------------------------------------------------------------ loops

@dataclass
class Loop:
    points: np.ndarray               # (N, d) closed polyline, last joins first
    values: np.ndarray               # (N, 5)
    sampler: object = None           # optional callable points -> values


def circle_points(center, radius: float, n: int = 64, normal=None, turns: int = 1) -> np.ndarray:
    """Points on a circle (traversed `turns` times) in the plane orthogonal to normal."""
    center = np.asarray(center, dtype=float)
    t = 2 * np.pi * turns * np.arange(n * turns) / (n * turns)
    if center.size == 2:
        return center + radius * np.stack([np.cos(t), np.sin(t)], axis=1)
    nrm = np.array([0.0, 0.0, 1.0]) if normal is None else np.asarray(normal, dtype=float)
    nrm = nrm / np.linalg.norm(nrm)
    a = np.eye(3)[int(np.argmin(np.abs(nrm)))]
    u = np.cross(nrm, a)
    u /= np.linalg.norm(u)
    v = np.cross(nrm, u)
    return center + radius * (np.cos(t)[:, None] * u + np.sin(t)[:, None] * v)


def field_loop(field: QField, points) -> Loop:
    pts = np.asarray(points, dtype=float)
    return Loop(pts, field.sample(pts), field.sample)


def _loop_vectors(loop: Loop, s_star: float):
    ph = qt.phi(loop.values, s_star)
    if np.any(ph < PHI_MIN_LOOP):
        raise NotOrientableSampling(f"loop passes within phi < {PHI_MIN_LOOP} (min {ph.min():.3f})")
    n, _ = qt.leading_vector(loop.values)
    return n


def _aligned(n) -> bool:
    dots = np.abs(np.sum(n * np.roll(n, -1, axis=0), axis=1))
    return bool(np.all(dots >= ALIGN_MIN))


def loop_class(loop: Loop, s_star: float) -> str:
    """Trivial if the leading eigenvector lifts to a closed loop, else NonTrivial."""
    n = _loop_vectors(loop, s_star)
    if not _aligned(n):
        if loop.sampler is None:
            raise NotOrientableSampling("consecutive eigenvectors are not aligned")
        mids = 0.5 * (loop.points + np.roll(loop.points, -1, axis=0))
        pts = np.empty((2 * len(loop.points), loop.points.shape[1]))
        pts[0::2] = loop.points
        pts[1::2] = mids
        vals = np.empty((len(pts), 5))
        vals[0::2] = loop.values
        vals[1::2] = loop.sampler(mids)
        loop = Loop(pts, vals, None)
        n = _loop_vectors(loop, s_star)
        if not _aligned(n):
            raise NotOrientableSampling("eigenvectors still misaligned after refinement")
    m = n[0]
    for v in n[1:]:
        m = v if np.dot(m, v) >= 0 else -v
    return TRIVIAL if np.dot(m, n[0]) > 0 else NONTRIVIAL


# ---------------------------------------------------------------- surfaces

def sphere_mesh(center, radius: float, subdivisions: int = 3):
    """Icosphere with outward-oriented triangles: (points, triangles)."""
    t = (1 + np.sqrt(5)) / 2
    V = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
         (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    F = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4), (11, 10, 2),
         (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5),
         (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in V]
    faces = list(F)
    for _ in range(subdivisions):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    P = np.asarray(center, float) + radius * np.array(verts)
    return P, np.array(faces, dtype=int)


def disk_mesh(center, radius: float, normal=(0.0, 0.0, 1.0), n_r: int = 12, n_theta: int = 48):
    """Polar triangulation of a flat disk: (points, triangles, boundary indices)."""
    ring = circle_points(np.zeros(3), 1.0, n_theta, normal)
    pts = [np.asarray(center, float)]
    for i in range(1, n_r + 1):
        pts.extend(np.asarray(center, float) + radius * i / n_r * ring)
    pts = np.array(pts)
    tris = []
    for j in range(n_theta):
        tris.append((0, 1 + j, 1 + (j + 1) % n_theta))
    for i in range(1, n_r):
        a0, b0 = 1 + (i - 1) * n_theta, 1 + i * n_theta
        for j in range(n_theta):
            j1 = (j + 1) % n_theta
            tris.append((a0 + j, b0 + j, b0 + j1))
            tris.append((a0 + j, b0 + j1, a0 + j1))
    boundary = np.arange(1 + (n_r - 1) * n_theta, 1 + n_r * n_theta)
    return pts, np.array(tris, dtype=int), boundary


def lift_on_mesh(values: np.ndarray, triangles: np.ndarray, s_star: float) -> np.ndarray:
    """Consistent unit-vector lift of the leading eigenvector over a mesh."""
    ph = qt.phi(values, s_star)
    if np.any(ph < PHI_MIN_LOOP):
        raise LiftFailed(f"surface meets phi < {PHI_MIN_LOOP} (min {ph.min():.3f})")
    n, _ = qt.leading_vector(values)
    N = len(n)
    adj = [set() for _ in range(N)]
    for a, b, c in triangles:
        adj[a].update((b, c))
        adj[b].update((a, c))
        adj[c].update((a, b))
    sign = np.zeros(N)
    for root in range(N):
        if sign[root] != 0 or not adj[root]:
            continue
        sign[root] = 1.0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in sorted(adj[v]):
                if sign[w] == 0:
                    sign[w] = sign[v] * (1.0 if np.dot(n[v], n[w]) >= 0 else -1.0)
                    queue.append(w)
    m = n * sign[:, None]
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    if np.any(np.sum(m[e[:, 0]] * m[e[:, 1]], axis=1) <= 0):
        raise LiftFailed("sign propagation is inconsistent; refine the surface sampling")
    return m


def _solid_angles(m: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a, b, c = m[triangles[:, 0]], m[triangles[:, 1]], m[triangles[:, 2]]
    num = np.sum(a * np.cross(b, c), axis=1)
    den = 1 + np.sum(a * b, axis=1) + np.sum(b * c, axis=1) + np.sum(c * a, axis=1)
    return 2 * np.arctan2(num, den)


def _integer_degree(raw: float) -> int:
    k = int(round(raw))
    if abs(raw - k) > DEGREE_TOL:
        raise NonIntegerDegree(f"degree estimate {raw:.4f} is not close to an integer")
    return k


def surface_degree(values, triangles, s_star: float) -> tuple[int, float]:
    """Degree of the lifted director over a closed oriented surface."""
    m = lift_on_mesh(np.asarray(values, float), np.asarray(triangles), s_star)
    raw = float(np.sum(_solid_angles(m, triangles)) / (4 * np.pi))
    return _integer_degree(raw), raw


def disk_degree(values, triangles, boundary, s_star: float, tol: float = 1e-6) -> tuple[int, float]:
    """Degree of the lift over a disk whose boundary carries one constant tensor.

    Collapsing the boundary to a point turns the disk into a sphere, so the
    signed area of the lifted image is an integer multiple of 4 pi.
    """
    values = np.asarray(values, float)
    b = values[np.asarray(boundary)]
    if np.max(np.linalg.norm(b - b[0], axis=1)) > tol:
        raise LiftFailed("boundary values are not constant")
    return surface_degree(values, triangles, s_star)


def field_sphere_degree(field: QField, center, radius: float, s_star: float,
                        subdivisions: int = 4) -> tuple[int, float]:
    P, T = sphere_mesh(center, radius, subdivisions)
    return surface_degree(field.sample(P), T, s_star)


# ------------------------------------------------------------- annotation

def encircling_loop(field: QField, comp: Component, radius: float, n: int = 64) -> Loop:
    """A circle of the given radius around the middle of a line's skeleton."""
    g = comp.skeleton
    mid_idx = int(np.argmin(np.linalg.norm(g.nodes - np.median(g.nodes, axis=0), axis=1)))
    c = g.nodes[mid_idx]
    near = g.nodes[np.linalg.norm(g.nodes - c, axis=1) <= 4 * field.domain.h]
    if len(near) >= 2:
        _, _, Vt = np.linalg.svd(near - near.mean(axis=0), full_matrices=False)
        tangent = Vt[0]
    else:
        _, _, Vt = np.linalg.svd(comp.points - comp.points.mean(axis=0), full_matrices=False)
        tangent = Vt[0]
    return field_loop(field, circle_points(c, radius, n, tangent))


def annotate_topology(defects: DefectSet, field: QField, params: MaterialParams,
                      radius: float | None = None) -> DefectSet:
    """Attach a loop class (lines, planar points) or degree (3D points) to each component."""
    r = radius if radius is not None else 3.0 * field.epsilon
    for c in defects.components:
        try:
            if field.domain.dim == 2:
                cls = loop_class(field_loop(field, circle_points(c.centroid, r + 0.5 * c.diameter)), params.s_star)
                c.topology = cls
            elif c.kind == LINE:
                c.topology = loop_class(encircling_loop(field, c, r), params.s_star)
            else:
                deg, _ = field_sphere_degree(field, c.centroid, r + 0.5 * c.diameter, params.s_star)
                c.topology = f"degree={deg}"
        except (NotOrientableSampling, LiftFailed, NonIntegerDegree, ValueError) as exc:
            c.topology = f"undetermined({type(exc).__name__})"
    return defects
