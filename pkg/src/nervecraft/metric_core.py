"""Discretized manifolds: metrics, balls, volumes and the profile V(R).

A :class:`DiscreteManifold` is a finite weighted metric space.  Vertex weights
stand for the Riemannian volume of the vertex's cell; distances are either a
closed-form geodesic distance (synthetic instances) or shortest-path lengths
in the edge graph (loaded meshes).

All radius comparisons use the closed-ball convention ``d <= R`` with a
relative slack of :data:`RTOL` so that grid ties are decided consistently.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from .errors import InputError, MeshParseError

logger = logging.getLogger(__name__)

RTOL = 1e-12
RESOLUTION_WARN_FACTOR = 5.0
_CHUNK = 512

METRIC_MODES = ("graph_geodesic", "exact_closed_form")


def closed_le(d, r):
    """Closed-ball test ``d <= r`` with the package-wide slack."""
    return d <= r * (1.0 + RTOL)


# ---------------------------------------------------------------------------
# raw distance engines (unscaled lengths)


class _FlatTorusMetric:
    """Euclidean distance on the periodic box ``[0, sx) x [0, sy)``."""

    def __init__(self, coords, box):
        self.coords = np.asarray(coords, dtype=float)
        self.box = np.asarray(box, dtype=float)
        self._tree = None

    @property
    def diameter(self):
        return float(math.hypot(self.box[0] / 2, self.box[1] / 2))

    def pair(self, u, v):
        diff = np.abs(self.coords[u] - self.coords[v])
        diff = np.minimum(diff, self.box - diff)
        return np.hypot(diff[..., 0], diff[..., 1])

    def rows(self, sources):
        diff = np.abs(self.coords[sources][:, None, :] - self.coords[None, :, :])
        diff = np.minimum(diff, self.box - diff)
        return np.hypot(diff[..., 0], diff[..., 1])

    def candidates(self, sources, radius):
        if self._tree is None:
            self._tree = cKDTree(np.mod(self.coords, self.box), boxsize=self.box)
        r = radius * (1 + 1e-9) + 1e-300
        return self._tree.query_ball_point(np.mod(self.coords[sources], self.box), r)


class _SphereMetric:
    """Great-circle distance on a round sphere of the given radius."""

    def __init__(self, unit, radius):
        self.unit = np.asarray(unit, dtype=float)
        self.radius = float(radius)
        self._tree = None

    @property
    def diameter(self):
        return math.pi * self.radius

    def _angle(self, a, b):
        cross = np.linalg.norm(np.cross(a, b), axis=-1)
        dot = np.sum(a * b, axis=-1)
        return np.arctan2(cross, dot)

    def pair(self, u, v):
        return self.radius * self._angle(self.unit[u], self.unit[v])

    def rows(self, sources):
        return self.radius * self._angle(self.unit[sources][:, None, :], self.unit[None, :, :])

    def within(self, sources, radius):
        """Boolean ``dist <= radius`` rows; exact angles only near the threshold."""
        theta = radius / self.radius
        if theta >= math.pi:
            return np.ones((len(sources), len(self.unit)), dtype=bool)
        dots = self.unit[sources] @ self.unit.T
        c = math.cos(theta)
        out = dots > c + 1e-9
        amb = np.abs(dots - c) <= 1e-9
        if amb.any():
            rr, cc = np.nonzero(amb)
            ang = self._angle(self.unit[sources[rr]], self.unit[cc])
            out[rr, cc] = closed_le(ang, theta)
        out[np.arange(len(sources)), sources] = True
        return out

    def candidates(self, sources, radius):
        if self._tree is None:
            self._tree = cKDTree(self.unit)
        theta = min(radius / self.radius, math.pi)
        chord = 2 * math.sin(theta / 2) * (1 + 1e-9) + 1e-15
        return self._tree.query_ball_point(self.unit[sources], chord)


class _GraphMetric:
    """Shortest-path distance in a weighted, connected edge graph."""

    def __init__(self, n_vertices, edges, lengths):
        e = np.asarray(edges, dtype=np.int64)
        lengths = np.asarray(lengths, dtype=float)
        adj = sparse.coo_matrix((lengths, (e[:, 0], e[:, 1])), shape=(n_vertices, n_vertices))
        self.graph = (adj + adj.T).tocsr()
        self._diameter = None

    @property
    def diameter(self):
        # twice an eccentricity bounds the diameter from above
        if self._diameter is None:
            self._diameter = 2.0 * float(dijkstra(self.graph, indices=0).max())
        return self._diameter

    def pair(self, u, v):
        u = np.atleast_1d(u)
        v = np.atleast_1d(v)
        out = np.empty(len(u))
        for k, (a, b) in enumerate(zip(u, v)):
            out[k] = dijkstra(self.graph, indices=int(a))[int(b)]
        return out

    def rows(self, sources, limit=np.inf):
        return np.atleast_2d(dijkstra(self.graph, indices=np.asarray(sources), limit=limit))


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class DiscreteManifold:
    """Finite weighted metric space standing in for a closed Riemannian n-manifold.

    ``raw_weights`` and ``edge_lengths`` are in unscaled units; the public
    ``weights`` and distances are multiplied by ``scale**n`` and ``scale``.
    """

    n: int
    positions: np.ndarray
    raw_weights: np.ndarray
    edges: np.ndarray
    edge_lengths: np.ndarray
    metric_mode: str
    _engine: object = field(repr=False)
    scale: float = 1.0
    name: str = "manifold"

    def __post_init__(self):
        if self.n < 1:
            raise InputError("dimension n must be a positive integer")
        if self.metric_mode not in METRIC_MODES:
            raise InputError(f"unknown metric mode {self.metric_mode!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InputError("scale must be positive")
        if len(self.raw_weights) == 0 or np.any(self.raw_weights <= 0):
            raise InputError("vertex weights must be positive")
        if len(self.edge_lengths) and np.any(self.edge_lengths <= 0):
            raise InputError("edge lengths must be positive")

    @property
    def n_vertices(self):
        return len(self.raw_weights)

    @property
    def weights(self):
        return self.raw_weights * self.scale**self.n

    @property
    def total_volume(self):
        return float(np.sum(self.weights))

    @property
    def h(self):
        """Mesh resolution: the longest edge, in scaled units."""
        return float(self.edge_lengths.max()) * self.scale

    @property
    def diameter_bound(self):
        return self._engine.diameter * self.scale

    def with_scale(self, factor):
        """Multiply every length by ``factor`` (and volumes by ``factor**n``)."""
        return replace(self, scale=self.scale * factor)

    def rescaled(self, radius):
        """Return the instance measured in units of ``radius``."""
        return replace(self, scale=self.scale / radius)

    def check_vertex(self, v):
        if not (0 <= int(v) < self.n_vertices) or int(v) != v:
            raise InputError(f"invalid vertex id {v!r}")
        return int(v)


@dataclass(frozen=True)
class Ball:
    center: int
    radius: float
    members: np.ndarray
    volume: float
    resolution_flag: bool = False


@dataclass
class VolumeProfile:
    radii: list
    per_center: dict
    V_of_R: list
    resolution_flags: list = field(default_factory=list)

    def to_csv(self, path):
        """Write ``radius,center_id,volume`` rows plus one ``max`` row per radius."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["radius", "center_id", "volume"])
            for i, r in enumerate(self.radii):
                for c in sorted(self.per_center):
                    w.writerow([repr(r), c, repr(self.per_center[c][i])])
                w.writerow([repr(r), "max", repr(self.V_of_R[i])])


# ---------------------------------------------------------------------------
# queries


def distance(M, u, v):
    u = M.check_vertex(u)
    v = M.check_vertex(v)
    if u == v:
        return 0.0
    return float(M._engine.pair(np.array([u]), np.array([v]))[0]) * M.scale


def distances_from(M, sources):
    """Dense ``(len(sources), N)`` array of scaled distances."""
    sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    return M._engine.rows(sources) * M.scale


def ball_members(M, centers, radius):
    """CSR description of closed balls ``B(c, radius)`` for every center.

    Returns ``(indptr, indices, dists)``; each row is sorted by vertex id and
    ``dists`` are scaled distances to the row's center.
    """
    if radius < 0:
        raise InputError("negative radius")
    centers = np.atleast_1d(np.asarray(centers, dtype=np.int64))
    raw_r = radius / M.scale
    eng = M._engine
    rows_idx, rows_d = [], []
    if M.metric_mode == "exact_closed_form":
        for start in range(0, len(centers), 4 * _CHUNK):
            chunk = centers[start:start + 4 * _CHUNK]
            cand = eng.candidates(chunk, raw_r)
            for c, cl in zip(chunk, cand):
                cl = np.asarray(sorted(cl), dtype=np.int64)
                d = eng.pair(np.full(len(cl), c), cl) if len(cl) else np.empty(0)
                d[cl == c] = 0.0
                keep = closed_le(d, raw_r)
                rows_idx.append(cl[keep])
                rows_d.append(d[keep] * M.scale)
    else:
        for start in range(0, len(centers), _CHUNK):
            chunk = centers[start:start + _CHUNK]
            D = eng.rows(chunk, limit=raw_r * (1 + 1e-9))
            for k in range(len(chunk)):
                keep = np.flatnonzero(closed_le(D[k], raw_r))
                rows_idx.append(keep.astype(np.int64))
                rows_d.append(D[k, keep] * M.scale)
    indptr = np.zeros(len(centers) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows_idx])
    indices = np.concatenate(rows_idx) if rows_idx else np.empty(0, dtype=np.int64)
    dists = np.concatenate(rows_d) if rows_d else np.empty(0)
    return indptr, indices.astype(np.int64), dists


def _row_sums(indptr, values):
    out = np.zeros(len(indptr) - 1)
    nonempty = indptr[1:] > indptr[:-1]
    if values.size:
        sums = np.add.reduceat(values, indptr[:-1][nonempty])
        out[nonempty] = sums
    return out


def ball_volumes(M, centers, radius):
    """Volumes ``|B(c, radius)|`` for every center (vectorized)."""
    centers = np.atleast_1d(np.asarray(centers, dtype=np.int64))
    if radius < 0:
        raise InputError("negative radius")
    if closed_le(M.diameter_bound, radius):
        return np.full(len(centers), M.total_volume)
    w = M.weights
    if M.metric_mode == "exact_closed_form" and radius < 0.25 * M.diameter_bound:
        indptr, indices, _ = ball_members(M, centers, radius)
        return _row_sums(indptr, w[indices])
    out = np.empty(len(centers))
    raw_r = radius / M.scale
    for start in range(0, len(centers), _CHUNK):
        chunk = centers[start:start + _CHUNK]
        if hasattr(M._engine, "within"):
            out[start:start + len(chunk)] = M._engine.within(chunk, raw_r) @ w
            continue
        if M.metric_mode == "graph_geodesic":
            D = M._engine.rows(chunk, limit=raw_r * (1 + 1e-9))
        else:
            D = M._engine.rows(chunk)
        D[np.arange(len(chunk)), chunk] = 0.0
        out[start:start + len(chunk)] = closed_le(D, raw_r) @ w
    return out


def ball(M, p, R):
    p = M.check_vertex(p)
    if R < 0:
        raise InputError("negative radius")
    indptr, indices, _ = ball_members(M, [p], R)
    members = indices[indptr[0]:indptr[1]]
    vol = float(np.sum(M.weights[members]))
    return Ball(p, float(R), members, vol, bool(R < RESOLUTION_WARN_FACTOR * M.h))


def volume_profile(M, centers, radii):
    radii = [float(r) for r in radii]
    if not radii:
        raise InputError("empty radii list")
    if any(b < a for a, b in zip(radii, radii[1:])):
        raise InputError("radii must be sorted ascending")
    centers = [M.check_vertex(c) for c in centers]
    if not centers:
        raise InputError("centers must be nonempty")
    vols = np.stack([ball_volumes(M, centers, r) for r in radii], axis=1)
    # balls are nested in R; enforce bitwise monotonicity against summation order
    vols = np.maximum.accumulate(vols, axis=1)
    per_center = {c: [float(x) for x in vols[i]] for i, c in enumerate(centers)}
    V = [float(x) for x in vols.max(axis=0)]
    flags = [bool(r < RESOLUTION_WARN_FACTOR * M.h) for r in radii]
    return VolumeProfile(radii, per_center, V, flags)


def max_ball_volume(M, radius, centers=None):
    """V(radius) over vertex centers."""
    if centers is None:
        centers = np.arange(M.n_vertices)
    return float(ball_volumes(M, centers, radius).max())


def triangle_violations(M, n_samples=2000, seed=0, rtol=1e-9):
    """Sampled metric-axiom check; returns a list of offending triples."""
    rng = np.random.default_rng(seed)
    trip = rng.integers(0, M.n_vertices, size=(n_samples, 3))
    e = M._engine
    if M.metric_mode == "graph_geodesic":
        srcs = np.unique(trip[:, :2])
        D = {s: row for s, row in zip(srcs, e.rows(srcs))}
        dab = np.array([D[a][b] for a, b, _ in trip])
        dba = np.array([D[b][a] for a, b, _ in trip])
        dbc = np.array([D[b][c] for _, b, c in trip])
        dac = np.array([D[a][c] for a, _, c in trip])
    else:
        a, b, c = trip.T
        dab, dba, dbc, dac = e.pair(a, b), e.pair(b, a), e.pair(b, c), e.pair(a, c)
    bad = []
    scale = max(M._engine.diameter, 1e-300)
    for k, (a, b, c) in enumerate(trip):
        if abs(dab[k] - dba[k]) > rtol * scale:
            bad.append(("symmetry", int(a), int(b), int(c)))
        elif dac[k] > (dab[k] + dbc[k]) * (1 + rtol) + 1e-300:
            bad.append(("triangle", int(a), int(b), int(c)))
    return bad


# ---------------------------------------------------------------------------
# construction


def _edges_from_triangles(tris):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def _check_connected(n_vertices, edges):
    if n_vertices == 1:
        return
    if len(edges) == 0:
        raise InputError("mesh is disconnected")
    g = sparse.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])),
                          shape=(n_vertices, n_vertices))
    k, _ = connected_components(g, directed=False)
    if k != 1:
        raise InputError(f"mesh is disconnected ({k} components)")


def from_triangles(points, tris, n=2, name="mesh"):
    """Graph-geodesic manifold from a triangle mesh (barycentric vertex weights)."""
    points = np.asarray(points, dtype=float)
    tris = np.asarray(tris, dtype=np.int64)
    if points.shape[1] == 2:
        points = np.column_stack([points, np.zeros(len(points))])
    a, b, c = points[tris[:, 0]], points[tris[:, 1]], points[tris[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    if np.any(area <= 0):
        bad = int(np.flatnonzero(area <= 0)[0])
        raise InputError(f"zero-area cell {bad}")
    w = np.zeros(len(points))
    for j in range(3):
        np.add.at(w, tris[:, j], area / 3.0)
    edges = _edges_from_triangles(tris)
    _check_connected(len(points), edges)
    if np.any(w <= 0):
        raise InputError("mesh is disconnected (isolated vertex)")
    lengths = np.linalg.norm(points[edges[:, 0]] - points[edges[:, 1]], axis=1)
    eng = _GraphMetric(len(points), edges, lengths)
    return DiscreteManifold(n, points, w, edges, lengths, "graph_geodesic", eng, name=name)


def parse_off(text):
    """Parse ASCII OFF; returns ``(points, triangles)``."""
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or not tokens[0].endswith("OFF"):
        raise MeshParseError("missing OFF header")
    head = tokens[0]
    pos = 1
    try:
        nv, nf = int(tokens[pos]), int(tokens[pos + 1])
        pos += 3
        dim = 3 if head == "OFF" else None
        if dim is None:
            raise MeshParseError(f"unsupported OFF variant {head!r}")
        pts = np.array([float(t) for t in tokens[pos:pos + 3 * nv]]).reshape(nv, 3)
        pos += 3 * nv
        tris = []
        for _ in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise MeshParseError("only triangular faces are supported")
            tris.append([int(t) for t in tokens[pos + 1:pos + 4]])
            pos += 4
    except (IndexError, ValueError) as exc:
        raise MeshParseError(f"malformed OFF data: {exc}") from exc
    if len(pts) != nv or len(tris) != nf:
        raise MeshParseError("OFF counts do not match data")
    tris = np.array(tris, dtype=np.int64).reshape(-1, 3)
    if tris.size and (tris.min() < 0 or tris.max() >= nv):
        raise MeshParseError("face index out of range")
    return pts, tris


def load_mesh(path, n=2):
    if n != 2:
        raise InputError("OFF input supports triangle meshes (n=2) only")
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    pts, tris = parse_off(path.read_text())
    return from_triangles(pts, tris, n=2, name=path.stem)


def _positive(**params):
    for k, v in params.items():
        if not (v > 0):
            raise InputError(f"{k} must be positive")


def _min_resolution(resolution):
    if int(resolution) != resolution or resolution < 8:
        raise InputError("resolution must be an integer >= 8")


def _grid_edges(nx, ny):
    idx = np.arange(nx * ny).reshape(nx, ny)
    right = np.stack([idx.ravel(), np.roll(idx, -1, axis=0).ravel()], axis=1)
    up = np.stack([idx.ravel(), np.roll(idx, -1, axis=1).ravel()], axis=1)
    e = np.concatenate([right, up])
    e.sort(axis=1)
    return np.unique(e, axis=0)


def _periodic_grid(xs, ys, box, n, name):
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    coords = np.column_stack([X.ravel(), Y.ravel()])

    def dual(nodes, period):
        nxt = np.roll(nodes, -1) - nodes
        nxt[-1] += period
        prv = nodes - np.roll(nodes, 1)
        prv[0] += period
        return (nxt + prv) / 2

    w = np.outer(dual(xs, box[0]), dual(ys, box[1])).ravel()
    edges = _grid_edges(len(xs), len(ys))
    eng = _FlatTorusMetric(coords, box)
    lengths = eng.pair(edges[:, 0], edges[:, 1])
    return DiscreteManifold(n, coords, w, edges, lengths, "exact_closed_form", eng, name=name)


def flat_torus(side, resolution):
    _positive(side=side)
    _min_resolution(resolution)
    xs = np.arange(resolution) * (side / resolution)
    return _periodic_grid(xs, xs, (side, side), 2, f"flat_torus({side},{resolution})")


def thin_cylinder(circumference, length, resolution, around=8):
    """Product of a short circle and a long circle (a closed thin cylinder).

    ``resolution`` is the number of axial samples per unit length; the
    circle factor carries ``around`` samples.
    """
    _positive(circumference=circumference, length=length)
    _min_resolution(resolution)
    if around < 3:
        raise InputError("around must be >= 3")
    n_ax = max(8, int(math.ceil(resolution * length)))
    us = np.arange(around) * (circumference / around)
    zs = np.arange(n_ax) * (length / n_ax)
    return _periodic_grid(us, zs, (circumference, length), 2,
                          f"thin_cylinder({circumference},{length},{resolution})")


def _refined_nodes(side, resolution, refine, bands):
    nodes = []
    base = side / resolution
    fine = base / refine
    x = 0.0
    while x < side - 1e-12 * side:
        nodes.append(x)
        in_band = any(a * side <= x < b * side for a, b in bands)
        x += fine if in_band else base
    return np.array(nodes)


def bumpy_torus(side, resolution, refine=4, bands=((0.2, 0.3), (0.6, 0.7))):
    """Flat torus whose grid is refined ``refine``-fold inside two bands per axis."""
    _positive(side=side)
    _min_resolution(resolution)
    if refine < 1 or int(refine) != refine:
        raise InputError("refine must be a positive integer")
    xs = _refined_nodes(side, resolution, refine, bands)
    return _periodic_grid(xs, xs, (side, side), 2, f"bumpy_torus({side},{resolution})")


def round_sphere(radius, resolution):
    """Latitude/longitude sampling: ``resolution`` bands, ``2*resolution`` meridians."""
    _positive(radius=radius)
    _min_resolution(resolution)
    nb, nl = resolution, 2 * resolution
    col = np.arange(1, nb) * (math.pi / nb)
    lon = np.arange(nl) * (2 * math.pi / nl)
    C, L = np.meshgrid(col, lon, indexing="ij")
    ring = np.column_stack([np.sin(C).ravel() * np.cos(L).ravel(),
                            np.sin(C).ravel() * np.sin(L).ravel(),
                            np.cos(C).ravel()])
    unit = np.vstack([[0.0, 0.0, 1.0], ring, [0.0, 0.0, -1.0]])
    half = math.pi / (2 * nb)
    band = 2 * math.pi * radius**2 * (np.cos(col - half) - np.cos(col + half)) / nl
    cap = 2 * math.pi * radius**2 * (1 - math.cos(half))
    w = np.concatenate([[cap], np.repeat(band, nl), [cap]])
    idx = 1 + np.arange((nb - 1) * nl).reshape(nb - 1, nl)
    edges = [np.stack([idx.ravel(), np.roll(idx, -1, axis=1).ravel()], axis=1),
             np.stack([idx[:-1].ravel(), idx[1:].ravel()], axis=1),
             np.stack([np.zeros(nl, dtype=np.int64), idx[0]], axis=1),
             np.stack([np.full(nl, len(unit) - 1), idx[-1]], axis=1)]
    edges = np.concatenate(edges)
    edges.sort(axis=1)
    edges = np.unique(edges, axis=0)
    eng = _SphereMetric(unit, radius)
    lengths = eng.pair(edges[:, 0], edges[:, 1])
    return DiscreteManifold(2, unit * radius, w, edges, lengths, "exact_closed_form", eng,
                            name=f"round_sphere({radius},{resolution})")


def dumbbell_profile(neck_width):
    """Meridian ``(rho(u), z(u))`` for u in [0, pi] of the dumbbell surface."""

    def rho(u):
        s = np.cos(u)
        return np.sin(u) * (neck_width + (1 - neck_width) * s * s)

    def z(u):
        return 2.0 * np.cos(u)

    return rho, z


def dumbbell(neck_width, resolution):
    """Surface of revolution: two bulbs joined by a neck of radius ``neck_width``."""
    _positive(neck_width=neck_width)
    _min_resolution(resolution)
    if neck_width >= 1:
        raise InputError("neck_width must be < 1")
    rho, z = dumbbell_profile(neck_width)
    nu, nt = 4 * resolution, 4 * resolution
    u = np.arange(1, nu) * (math.pi / nu)
    t = np.arange(nt) * (2 * math.pi / nt)
    U, T = np.meshgrid(u, t, indexing="ij")
    ring = np.column_stack([(rho(U) * np.cos(T)).ravel(), (rho(U) * np.sin(T)).ravel(),
                            z(U).ravel()])
    pts = np.vstack([[0.0, 0.0, z(0.0)], ring, [0.0, 0.0, z(math.pi)]])
    idx = 1 + np.arange((nu - 1) * nt).reshape(nu - 1, nt)
    nxt = np.roll(idx, -1, axis=1)
    tris = [np.stack([idx[:-1].ravel(), idx[1:].ravel(), nxt[1:].ravel()], axis=1),
            np.stack([idx[:-1].ravel(), nxt[1:].ravel(), nxt[:-1].ravel()], axis=1),
            np.stack([np.zeros(nt, dtype=np.int64), idx[0], nxt[0]], axis=1),
            np.stack([np.full(nt, len(pts) - 1), nxt[-1], idx[-1]], axis=1)]
    M = from_triangles(pts, np.concatenate(tris), n=2,
                       name=f"dumbbell({neck_width},{resolution})")
    return M


def circle(length, resolution):
    """Closed curve of the given length sampled at ``resolution`` equally spaced vertices."""
    _positive(length=length)
    if int(resolution) != resolution or resolution < 3:
        raise InputError("a circle needs at least 3 vertices")
    k = int(resolution)
    step = length / k
    edges = np.column_stack([np.arange(k), (np.arange(k) + 1) % k]).astype(np.int64)
    lengths = np.full(k, step)
    eng = _GraphMetric(k, edges, lengths)
    pos = np.arange(k, dtype=float)[:, None] * step
    return DiscreteManifold(1, pos, np.full(k, step), edges, lengths, "graph_geodesic", eng,
                            name=f"circle({length},{resolution})")


_SHAPES = {
    "circle": (circle, ("length", "resolution")),
    "flat_torus": (flat_torus, ("side", "resolution")),
    "round_sphere": (round_sphere, ("radius", "resolution")),
    "thin_cylinder": (thin_cylinder, ("circumference", "length", "resolution")),
    "dumbbell": (dumbbell, ("neck_width", "resolution")),
    "bumpy_torus": (bumpy_torus, ("side", "resolution")),
}


def generate_synthetic(spec):
    """Build a synthetic instance from ``{"shape": ..., **params}``."""
    if not isinstance(spec, dict) or "shape" not in spec:
        raise InputError('synthetic spec must be an object with a "shape" key')
    shape = spec["shape"]
    if shape not in _SHAPES:
        raise InputError(f"unknown shape {shape!r}")
    fn, required = _SHAPES[shape]
    params = {k: v for k, v in spec.items() if k != "shape"}
    missing = [k for k in required if k not in params]
    if missing:
        raise InputError(f"{shape} needs parameters {missing}")
    try:
        return fn(**params)
    except TypeError as exc:
        raise InputError(str(exc)) from exc
