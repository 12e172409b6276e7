"""Good balls, the radius ladder and the Vitali good cover.

Lengths are taken in the units of the manifold as given; the pipeline rescales
the instance by its target radius first, so the thresholds below (radius
``1/100``, growth ``10**(4(n+3))``, volume ``10**(2n+6) V(1) R**(n+3)``) are
applied in scaled units.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InputError, InvariantViolation, ResolutionExhausted
from .metric_core import RTOL, RESOLUTION_WARN_FACTOR, ball_members, ball_volumes, closed_le, max_ball_volume

SMALL_RADIUS = 1.0 / 100
# a ladder rung may sit at most this far below the mesh spacing h
MIN_RUNG_OVER_H = 0.1


def growth_factor(n):
    return 10.0 ** (4 * (n + 3))


def volume_factor(n):
    return 10.0 ** (2 * n + 6)


def rung_radius(s):
    return 10.0 ** (-4 * s - 2)


@dataclass(frozen=True)
class GoodBallVerdict:
    condition_A: bool
    growth_ratio: float
    condition_B: bool
    volume: float
    volume_bound: float
    condition_C: bool
    resolution_flag: bool

    @property
    def good(self):
        return self.condition_A and self.condition_B and self.condition_C


def _verdict_arrays(M, centers, radii, V1):
    """Vectorized condition checks for balls ``B(centers[i], radii[i])``."""
    centers = np.asarray(centers, dtype=np.int64)
    radii = np.asarray(radii, dtype=float)
    n = M.n
    big = np.empty(len(centers))
    mid = np.empty(len(centers))
    small = np.empty(len(centers))
    for r in np.unique(radii):
        sel = radii == r
        big[sel] = ball_volumes(M, centers[sel], 100 * r)
        mid[sel] = ball_volumes(M, centers[sel], r)
        small[sel] = ball_volumes(M, centers[sel], r / 100)
    cond_a = closed_le(big, growth_factor(n) * small)
    bound_b = volume_factor(n) * V1 * radii ** (n + 3)
    cond_b = closed_le(mid, bound_b)
    cond_c = closed_le(radii, SMALL_RADIUS)
    flag = radii < RESOLUTION_WARN_FACTOR * M.h
    return dict(A=cond_a, ratio=big / small, B=cond_b, vol=mid, bound=bound_b, C=cond_c,
                flag=flag, big=big, small=small)


def is_good_ball(M, p, R, V1):
    p = M.check_vertex(p)
    if not R > 0:
        raise InputError("radius must be positive")
    if not V1 > 0:
        raise InputError("V1 must be positive")
    a = _verdict_arrays(M, [p], [R], V1)
    return GoodBallVerdict(bool(a["A"][0]), float(a["ratio"][0]), bool(a["B"][0]),
                           float(a["vol"][0]), float(a["bound"][0]), bool(a["C"][0]),
                           bool(a["flag"][0]))


def density(volume, radius, n):
    return volume / radius**n


@dataclass
class LadderResult:
    """Radii chosen by the ladder plus, per rung, the densities that were tested."""

    radii: np.ndarray
    rungs: np.ndarray
    trace: list  # one dict of arrays per rung

    def trace_for(self, p):
        out = []
        for rec in self.trace:
            hit = np.flatnonzero(rec["vertices"] == p)
            if len(hit):
                k = hit[0]
                out.append({key: (val[k].item() if isinstance(val, np.ndarray) else val)
                            for key, val in rec.items()})
        return out


def ladder(M, V1, vertices=None, min_rung_over_h=MIN_RUNG_OVER_H):
    """Run the radius ladder ``10^-2, 10^-6, ...`` at every requested vertex."""
    if not V1 > 0:
        raise InputError("V1 must be positive")
    if vertices is None:
        vertices = np.arange(M.n_vertices)
    vertices = np.asarray(vertices, dtype=np.int64)
    radii = np.full(len(vertices), np.nan)
    rungs = np.full(len(vertices), -1, dtype=np.int64)
    pending = np.arange(len(vertices))
    trace = []
    s = 0
    while len(pending):
        R = rung_radius(s)
        if R < min_rung_over_h * M.h:
            raise ResolutionExhausted(int(vertices[pending[0]]), R, M.h)
        vs = vertices[pending]
        big = ball_volumes(M, vs, 100 * R)
        small = ball_volumes(M, vs, R / 100)
        ok = closed_le(big, growth_factor(M.n) * small)
        trace.append(dict(rung=s, radius=R, vertices=vs, vol_big=big, vol_small=small,
                          density_big=density(big, 100 * R, M.n),
                          density_small=density(small, R / 100, M.n),
                          reasonable_growth=ok))
        radii[pending[ok]] = R
        rungs[pending[ok]] = s
        pending = pending[~ok]
        s += 1
    return LadderResult(radii, rungs, trace)


def find_good_ball(M, p, V1, min_rung_over_h=MIN_RUNG_OVER_H):
    p = M.check_vertex(p)
    res = ladder(M, V1, [p], min_rung_over_h)
    return float(res.radii[0]), res.trace_for(p)


def cascade_holds(density_small, density_big):
    """Failed reasonable growth forces ``Density[R/100] < 1e-12 Density[100R]``."""
    return density_small < 1e-12 * density_big * (1 + 1e-12)


# ---------------------------------------------------------------------------
# covers


@dataclass(eq=False)
class GoodCover:
    centers: np.ndarray
    radii: np.ndarray
    half_cover_ok: bool
    sixth_disjoint_ok: bool
    V1: float
    _members: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.int64)
        self.radii = np.asarray(self.radii, dtype=float)

    @property
    def balls(self):
        return [(int(c), float(r)) for c, r in zip(self.centers, self.radii)]

    def __len__(self):
        return len(self.centers)

    def to_json(self):
        return [{"center_id": c, "radius": r} for c, r in self.balls]

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)


def load_cover(path_or_obj, V1):
    data = path_or_obj
    if not isinstance(data, list):
        with open(path_or_obj) as fh:
            data = json.load(fh)
    try:
        centers = [int(b["center_id"]) for b in data]
        radii = [float(b["radius"]) for b in data]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed cover: {exc}") from exc
    return GoodCover(centers, radii, False, False, V1)


def members_varradius(M, centers, radii):
    """CSR of closed balls with per-row radii (rows in input order)."""
    centers = np.asarray(centers, dtype=np.int64)
    radii = np.asarray(radii, dtype=float)
    rows = [None] * len(centers)
    dists = [None] * len(centers)
    for r in np.unique(radii):
        sel = np.flatnonzero(radii == r)
        ip, ix, dd = ball_members(M, centers[sel], float(r))
        for k, i in enumerate(sel):
            rows[i] = ix[ip[k]:ip[k + 1]]
            dists[i] = dd[ip[k]:ip[k + 1]]
    indptr = np.zeros(len(centers) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    if len(centers):
        indices = np.concatenate(rows).astype(np.int64)
        dist = np.concatenate(dists)
    else:
        indices, dist = np.empty(0, dtype=np.int64), np.empty(0)
    return indptr, indices, dist


def cover_members(M, cover, factor=1.0):
    """Cached CSR of the concentric balls ``factor * B_i``."""
    key = float(factor)
    if key not in cover._members:
        cover._members[key] = members_varradius(M, cover.centers, cover.radii * factor)
    return cover._members[key]


def build_good_cover(M, V1=None, ladder_result=None, min_rung_over_h=MIN_RUNG_OVER_H):
    """Greedy Vitali selection over the sixth-balls of a good ball at every vertex."""
    if V1 is None:
        V1 = max_ball_volume(M, 1.0)
    if ladder_result is None:
        ladder_result = ladder(M, V1, min_rung_over_h=min_rung_over_h)
    radii = ladder_result.radii
    ids = np.arange(M.n_vertices)
    indptr, indices, _ = members_varradius(M, ids, radii / 6)
    order = np.lexsort((ids, -radii))
    chosen = kernels.greedy_disjoint(indptr, indices, order, M.n_vertices)
    sel = order[chosen[order]]
    cover = GoodCover(ids[sel], radii[sel], False, False, V1)
    report = validate_cover(M, cover)
    cover.half_cover_ok = report.conditions[2]["ok"]
    cover.sixth_disjoint_ok = report.conditions[3]["ok"]
    if not report.passed:
        raise InvariantViolation("Vitali postcondition failed", report.first_violation)
    return cover


@dataclass
class CoverReport:
    passed: bool
    conditions: dict
    first_violation: dict | None

    def to_json(self):
        return {"passed": self.passed, "conditions": self.conditions,
                "first_violation": self.first_violation}


def validate_cover(M, cover):
    """Re-check the three good-cover conditions from scratch."""
    cond = {}
    v = _verdict_arrays(M, cover.centers, cover.radii, cover.V1)
    good = v["A"] & v["B"] & v["C"]
    if good.all():
        cond[1] = {"ok": True}
    else:
        i = int(np.flatnonzero(~good)[0])
        cond[1] = {"ok": False, "ball": i, "center_id": int(cover.centers[i]),
                   "radius": float(cover.radii[i]), "A": bool(v["A"][i]),
                   "B": bool(v["B"][i]), "C": bool(v["C"][i])}

    ip, ix, _ = members_varradius(M, cover.centers, cover.radii / 2)
    hit = np.zeros(M.n_vertices, dtype=bool)
    hit[ix] = True
    if hit.all():
        cond[2] = {"ok": True}
    else:
        cond[2] = {"ok": False, "vertex": int(np.flatnonzero(~hit)[0])}

    ip, ix, _ = members_varradius(M, cover.centers, cover.radii / 6)
    counts = np.bincount(ix, minlength=M.n_vertices)
    if counts.max(initial=0) <= 1:
        cond[3] = {"ok": True}
    else:
        x = int(np.flatnonzero(counts > 1)[0])
        owner = np.repeat(np.arange(len(cover)), np.diff(ip))
        balls = sorted(int(b) for b in owner[ix == x])
        cond[3] = {"ok": False, "vertex": x, "balls": balls}

    first = next(({"condition": k, **c} for k, c in sorted(cond.items()) if not c["ok"]), None)
    return CoverReport(first is None, cond, first)


def count_scale_neighbors(M, cover, B_s):
    """Cover balls with ``s/2 <= r_i <= 2s`` meeting the probe ball (vertex sets)."""
    s = B_s.radius
    eligible = (cover.radii >= 0.5 * s * (1 - RTOL)) & closed_le(cover.radii, 2 * s)
    if not eligible.any():
        return 0
    ip, ix, _ = cover_members(M, cover)
    probe = np.zeros(M.n_vertices, dtype=bool)
    probe[B_s.members] = True
    count = 0
    for i in np.flatnonzero(eligible):
        if probe[ix[ip[i]:ip[i + 1]]].any():
            count += 1
    return count


def scale_neighbor_counts(M, cover):
    """``count_scale_neighbors`` with every cover ball as the probe, via one sparse product."""
    from scipy import sparse

    ip, ix, _ = cover_members(M, cover)
    inc = sparse.csr_matrix((np.ones(len(ix)), ix, ip), shape=(len(cover), M.n_vertices))
    meets = (inc @ inc.T).tocoo()
    r = cover.radii
    s, rj = r[meets.row], r[meets.col]
    ok = (rj >= 0.5 * s * (1 - RTOL)) & closed_le(rj, 2 * s)
    return np.bincount(meets.row[ok], minlength=len(cover))
