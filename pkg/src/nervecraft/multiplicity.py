"""Multiplicity of a good cover, its layer decomposition and the tail estimate."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import kernels
from .constants import ConstantsTable, derive_multiplicity_constants  # noqa: F401  (re-export)
from .errors import InputError, InvariantViolation
from .good_cover import cover_members, growth_factor, members_varradius

__all__ = [
    "MultiplicityProfile", "LayerDecomposition", "multiplicity_function", "build_layers",
    "compute_order_and_cores", "high_multiplicity_tail", "layer_invariants",
    "derive_multiplicity_constants", "incidence",
]


def incidence(M, indptr, indices):
    """Sparse (balls x vertices) membership matrix."""
    data = np.ones(len(indices), dtype=np.int64)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(indptr) - 1, M.n_vertices))


@dataclass
class MultiplicityProfile:
    m: np.ndarray
    weights: np.ndarray
    tail: dict = field(default_factory=dict)
    Lmu: dict = field(default_factory=dict)
    F: dict = field(default_factory=dict)
    fitted_alpha: float | None = None
    tail_slope: float | None = None
    region_U: np.ndarray | None = None
    w: float | None = None
    neighborhood_volume: float | None = None
    tail_checks: list = field(default_factory=list)
    decay_checks: list = field(default_factory=list)
    vacuous: bool = False

    def volume_at_least(self, lam, region=None):
        sel = self.m >= lam
        if region is not None:
            sel &= region
        return float(self.weights[sel].sum())

    def histogram(self):
        return np.bincount(self.m)

    @property
    def tail_bound_holds(self):
        return all(rec["holds"] for rec in self.tail_checks)

    def to_csv(self, path):
        lams = sorted(set(self.tail) | set(self.F))
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["lambda", "volume_MU", "volume_L1", "F"])
            for lam in lams:
                wr.writerow([lam, repr(self.tail.get(lam, 0.0)),
                             repr(self.Lmu.get((1, lam), 0.0)), repr(self.F.get(lam, 0.0))])


def multiplicity_function(M, cover):
    ip, ix, _ = cover_members(M, cover)
    m = np.bincount(ix, minlength=M.n_vertices).astype(np.int64)
    return MultiplicityProfile(m=m, weights=M.weights)


def _region_mask(M, U):
    if U is None:
        return np.ones(M.n_vertices, dtype=bool)
    U = np.asarray(U)
    if U.dtype == bool:
        if U.shape != (M.n_vertices,):
            raise InputError("boolean region must have one entry per vertex")
        mask = U.copy()
    else:
        mask = np.zeros(M.n_vertices, dtype=bool)
        mask[U.astype(np.int64)] = True
    if not mask.any():
        raise InputError("region U must be nonempty")
    return mask


@dataclass
class LayerDecomposition:
    """Layers are 1-based; ``layer_of[i] == 0`` marks a ball that does not meet U."""

    layer_of: np.ndarray
    participating: np.ndarray
    layers: list
    max_of_layer: list = field(default_factory=list)
    core_of_layer: list = field(default_factory=list)
    order_edges: list = field(default_factory=list)

    @property
    def depth(self):
        return len(self.layers)

    def layer(self, d):
        return self.layers[d - 1]


def build_layers(M, cover, U=None):
    """Repeated greedy largest-first disjoint selection among balls meeting ``U``."""
    mask = _region_mask(M, U)
    ip, ix, _ = cover_members(M, cover)
    inc = incidence(M, ip, ix)
    participating = np.flatnonzero(np.asarray(inc[:, mask].sum(axis=1)).ravel() > 0)
    ids = participating
    order = ids[np.lexsort((ids, -cover.radii[ids]))]
    layer_of = kernels.greedy_layers(ip, ix, order, M.n_vertices)
    depth = int(layer_of.max(initial=0))
    layers = [np.flatnonzero(layer_of == d) for d in range(1, depth + 1)]
    return LayerDecomposition(layer_of=layer_of, participating=participating, layers=layers)


def compute_order_and_cores(M, cover, dec):
    """Generating relation, maximal balls per layer and their tenth-ball cores."""
    ip, ix, _ = cover_members(M, cover)
    inc = incidence(M, ip, ix)
    meets = (inc @ inc.T).tocsr()
    r = cover.radii
    lay = dec.layer_of
    edges = {}
    for k in dec.participating:
        nb = meets.indices[meets.indptr[k]:meets.indptr[k + 1]]
        nb = nb[(lay[nb] > 0) & (lay[nb] < lay[k])]
        if len(nb) < 2:
            continue
        small = nb[2 * r[nb] <= r[k]]
        large = nb[r[nb] >= r[k]]
        if not len(small) or not len(large):
            continue
        for i in small:
            for j in large[lay[large] == lay[i]]:
                if i != j and (int(i), int(j)) not in edges:
                    edges[(int(i), int(j))] = int(k)
    dec.order_edges = sorted((i, j, k) for (i, j), k in edges.items())
    succ = {}
    for i, j, _k in dec.order_edges:
        succ.setdefault(i, []).append(j)
    _check_acyclic(succ, len(cover))

    has_up = np.zeros(len(cover), dtype=bool)
    for i in succ:
        has_up[i] = True
    tip, tix, _ = cover_members(M, cover, 0.1)
    dec.max_of_layer = []
    dec.core_of_layer = []
    for members in dec.layers:
        mx = members[~has_up[members]]
        dec.max_of_layer.append(mx)
        core = np.zeros(M.n_vertices, dtype=bool)
        for b in mx:
            core[tix[tip[b]:tip[b + 1]]] = True
        dec.core_of_layer.append(core)
    return dec


def _check_acyclic(succ, n_balls):
    state = {}
    for start in succ:
        if state.get(start):
            continue
        stack = [(start, iter(succ.get(start, ())))]
        state[start] = 1
        depth = 0
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                depth -= 1
                continue
            s = state.get(nxt, 0)
            if s == 1:
                raise InvariantViolation("cycle in the ball order", {"ball": int(nxt)})
            if s == 0:
                depth += 1
                if depth > n_balls:
                    raise InvariantViolation("order chain longer than the cover", {"ball": int(nxt)})
                state[nxt] = 1
                stack.append((nxt, iter(succ.get(nxt, ()))))


def _layer_counts(M, cover, dec, lam):
    """Per vertex: number of participating balls containing it whose layer is >= lam."""
    ip, ix, _ = cover_members(M, cover)
    owner = np.repeat(np.arange(len(cover)), np.diff(ip))
    keep = dec.layer_of[owner] >= lam
    return np.bincount(ix[keep], minlength=M.n_vertices)


def _neighborhood(M, mask, w):
    """Vertices at distance < w from the region (open neighbourhood)."""
    from .metric_core import ball_members

    centers = np.flatnonzero(mask)
    ip, ix, dd = ball_members(M, centers, w)
    out = mask.copy()
    out[ix[dd < w]] = True
    return out


def high_multiplicity_tail(M, cover, U=None, w=1.0 / 100, constants=None, lambdas=None,
                           dec=None):
    if not (0 < w < 1.0 / 100 * (1 + 1e-12)):
        raise InputError("w must lie in (0, 1/100]")
    if constants is None:
        constants = derive_multiplicity_constants(M.n)
    mask = _region_mask(M, U)
    prof = multiplicity_function(M, cover)
    prof.region_U = mask
    prof.w = w
    if dec is None:
        dec = compute_order_and_cores(M, cover, build_layers(M, cover, mask))
    wts = M.weights
    m_max = int(prof.m[mask].max(initial=0))
    for lam in range(1, m_max + 2):
        prof.tail[lam] = prof.volume_at_least(lam, mask)
    for lam in range(1, dec.depth + 2):
        cnt = _layer_counts(M, cover, dec, lam)
        for mu in range(1, int(cnt.max(initial=0)) + 1):
            prof.Lmu[(mu, lam)] = float(wts[cnt >= mu].sum())
        prof.Lmu.setdefault((1, lam), 0.0)
        prof.F[lam] = float((wts * np.minimum(cnt, constants.eta)).sum()) / constants.eta
    for lam in range(1, dec.depth + 1):
        a, b = prof.F[lam], prof.F[lam + 1]
        prof.decay_checks.append({"lambda": lam, "F": a, "F_next": b,
                                  "holds": bool(a - b >= constants.c_prime * a)})

    prof.neighborhood_volume = float(wts[_neighborhood(M, mask, w)].sum())
    offset = constants.gamma * math.log(1.0 / w)
    if lambdas is None:
        lambdas = list(range(0, m_max + 2))
    for lam in lambdas:
        lhs = prof.volume_at_least(offset + lam, mask)
        rhs = math.exp(-constants.alpha * lam) * prof.neighborhood_volume
        prof.tail_checks.append({"lambda": lam, "threshold": offset + lam, "lhs": lhs, "rhs": rhs,
                            "holds": bool(lhs <= rhs)})

    first = math.ceil(offset) + 1
    fit = [lam for lam, v in prof.tail.items() if lam >= first and v > 0]
    if len(fit) >= 3:
        y = np.log([prof.tail[lam] for lam in fit])
        prof.fitted_alpha = float(-np.polyfit(fit, y, 1)[0])
    else:
        prof.vacuous = True
    meas = [lam for lam, v in prof.tail.items() if v > 0]
    if len(meas) >= 3:
        y = np.log([prof.tail[lam] for lam in meas])
        prof.tail_slope = float(np.polyfit(meas, y, 1)[0])
    return prof, dec


def layer_invariants(M, cover, dec, constants=None):
    """Set-exact checks of the layer lemmas; returns ``{name: (ok, witness)}``."""
    if constants is None:
        constants = derive_multiplicity_constants(M.n)
    K = growth_factor(M.n)
    ip, ix, _ = cover_members(M, cover)
    owner = np.repeat(np.arange(len(cover)), np.diff(ip))
    wts = M.weights
    r = cover.radii
    out = {}

    placed = dec.layer_of[dec.participating]
    out["layer_exhaustive"] = (bool((placed > 0).all()), None)

    witness = None
    for d, members in enumerate(dec.layers, 1):
        cnt = np.bincount(ix[np.isin(owner, members)], minlength=M.n_vertices)
        if cnt.max(initial=0) > 1:
            witness = {"layer": d, "vertex": int(np.argmax(cnt))}
            break
    out["layer_disjoint"] = (witness is None, witness)

    def union(ptr, idx, balls):
        u = np.zeros(M.n_vertices, dtype=bool)
        for b in balls:
            u[idx[ptr[b]:ptr[b + 1]]] = True
        return u

    p3, i3, _ = members_varradius(M, cover.centers, 3 * r)
    p10, i10, _ = members_varradius(M, cover.centers, 10 * r)
    tip, tix, _ = cover_members(M, cover, 0.1)
    by_vertex = incidence(M, ip, ix).tocsc()
    w_env = w_max = w_pinch = w_count = w_sand = None
    for d, members in enumerate(dec.layers, 1):
        L_d = union(ip, ix, members)
        lower = dec.layer_of >= d
        L1 = union(ip, ix, np.flatnonzero(lower))
        env = union(p3, i3, members)
        if w_env is None and (L1 & ~env).any():
            w_env = {"layer": d, "vertex": int(np.flatnonzero(L1 & ~env)[0])}
        env10 = union(p10, i10, dec.max_of_layer[d - 1])
        if w_max is None and (L_d & ~env10).any():
            w_max = {"layer": d, "vertex": int(np.flatnonzero(L_d & ~env10)[0])}
        core = dec.core_of_layer[d - 1]
        core_vol = float(wts[core].sum())
        if w_sand is None and not float(wts[L_d].sum()) <= K * core_vol:
            w_sand = {"layer": d, "L": float(wts[L_d].sum()), "core": core_vol}
        cnt = np.bincount(ix[lower[owner]], minlength=M.n_vertices)
        if w_count is None and (cnt[core] > constants.eta).any():
            w_count = {"layer": d, "vertex": int(np.flatnonzero(core & (cnt > constants.eta))[0])}
        if w_pinch is None:
            for b in dec.max_of_layer[d - 1]:
                ks = np.unique(np.concatenate(
                    [by_vertex.indices[by_vertex.indptr[v]:by_vertex.indptr[v + 1]]
                     for v in tix[tip[b]:tip[b + 1]]]))
                for k in ks[dec.layer_of[ks] > d]:
                    if not (r[b] / 15 * (1 - 1e-12) <= r[k] <= 2 * r[b] * (1 + 1e-12)):
                        w_pinch = {"layer": d, "max_ball": int(b), "lower_ball": int(k)}
                        break
                if w_pinch is not None:
                    break
    m = np.bincount(ix, minlength=M.n_vertices)
    w_cont = None
    for lam in range(1, dec.depth + 1):
        cnt = _layer_counts(M, cover, dec, lam)
        bad = (m >= lam + constants.eta) & ~(cnt >= constants.eta)
        if bad.any():
            w_cont = {"lambda": lam, "vertex": int(np.flatnonzero(bad)[0])}
            break
    out["containment_MU_shift_eta"] = (w_cont is None, w_cont)
    out["envelope_3B"] = (w_env is None, w_env)
    out["envelope_10B_max"] = (w_max is None, w_max)
    out["core_pinching"] = (w_pinch is None, w_pinch)
    out["core_count_le_eta"] = (w_count is None, w_count)
    out["sandwich_L_le_C_core"] = (w_sand is None, w_sand)
    return out
