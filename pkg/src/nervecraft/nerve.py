"""Rectangular nerve of a good cover and the map phi into it.

Cover ball ``i`` contributes the coordinate ``[0, r_i]``.  A face is keyed by
``(I_1, I_01)``: coordinates pinned at ``r_i`` and free coordinates; the rest
are pinned at 0.  ``F'`` lies in ``Star(F)`` exactly when ``F`` is in the
closure of ``F'``, i.e. ``I_1(F') <= I_1(F)``, ``I_01(F) <= I_01(F')`` and
``I_+(F) <= I_+(F')``.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from .constants import derive_multiplicity_constants
from .errors import BudgetExceeded, InputError, InvariantViolation
from .good_cover import cover_members
from .metric_core import RTOL

FACE_BUDGET = 2_000_000


@dataclass(frozen=True)
class RectFace:
    I_1: tuple
    I_01: tuple
    r_sorted: tuple
    r_pinned_min: float

    @property
    def key(self):
        return (self.I_1, self.I_01)

    @property
    def d(self):
        return len(self.I_01)

    @property
    def I_plus(self):
        return tuple(sorted(self.I_1 + self.I_01))

    @property
    def r1(self):
        # 0-faces use the smallest pinned radius
        return self.r_sorted[0] if self.r_sorted else self.r_pinned_min

    @property
    def volume(self):
        return float(math.prod(self.r_sorted))

    def key_str(self):
        return "1:" + ",".join(map(str, self.I_1)) + "|01:" + ",".join(map(str, self.I_01))


def make_face(radii, I_1, I_01):
    I_1 = tuple(sorted(int(i) for i in I_1))
    I_01 = tuple(sorted(int(i) for i in I_01))
    if not I_1:
        raise InputError("a nerve face needs a pinned coordinate")
    if set(I_1) & set(I_01):
        raise InputError("I_1 and I_01 must be disjoint")
    return RectFace(I_1, I_01, tuple(sorted(float(radii[i]) for i in I_01)),
                    float(min(radii[i] for i in I_1)))


def in_star(F, G):
    """True iff ``G`` lies in ``Star(F)``."""
    s1, s01 = set(G.I_1), set(G.I_01)
    return (s1 <= set(F.I_1) and set(F.I_01) <= s01 and set(F.I_1) <= s1 | s01)


# ---------------------------------------------------------------------------
# the map phi


def phi_value(r, d):
    """Coordinate rule for one ball: ``r`` on the half-ball, 0 off the ball, ``2(r-d)`` between."""
    if d <= 0.5 * r * (1 + RTOL):
        return float(r)
    if d >= r * (1 - RTOL):
        return 0.0
    return 2.0 * (r - d)


def phi_coordinate(M, cover, i, x):
    if not (0 <= i < len(cover)):
        raise InputError(f"invalid ball index {i}")
    x = M.check_vertex(x)
    ip, ix, dd = cover_members(M, cover)
    row = ix[ip[i]:ip[i + 1]]
    hit = np.searchsorted(row, x)
    if hit < len(row) and row[hit] == x:
        return phi_value(cover.radii[i], dd[ip[i] + hit])
    return 0.0


def _phi_states(M, cover):
    """Per CSR entry: phi value and a state code (1 pinned at r, 2 free, 0 zero)."""
    ip, ix, dd = cover_members(M, cover)
    r = np.repeat(cover.radii, np.diff(ip))
    val = np.where(dd <= 0.5 * r * (1 + RTOL), r, np.where(dd >= r * (1 - RTOL), 0.0, 2 * (r - dd)))
    state = np.where(val == r, 1, np.where(val > 0, 2, 0))
    return ip, ix, val, state


def phi_matrix(M, cover):
    """Sparse (balls x vertices) matrix of phi coordinates."""
    ip, ix, val, _ = _phi_states(M, cover)
    return sparse.csr_matrix((val, ix, ip), shape=(len(cover), M.n_vertices))


def point_faces(M, cover):
    """``face key`` of every vertex, as a list indexed by vertex id."""
    ip, ix, _, state = _phi_states(M, cover)
    owner = np.repeat(np.arange(len(cover)), np.diff(ip))
    keep = state > 0
    order = np.lexsort((owner[keep], ix[keep]))
    vx, ball, st = ix[keep][order], owner[keep][order], state[keep][order]
    bounds = np.searchsorted(vx, np.arange(M.n_vertices + 1))
    keys = []
    for x in range(M.n_vertices):
        s = slice(bounds[x], bounds[x + 1])
        b, t = ball[s], st[s]
        I_1 = tuple(int(i) for i in b[t == 1])
        if not I_1:
            raise InvariantViolation("vertex has no pinned coordinate; half-balls do not cover",
                                     {"vertex": x})
        keys.append((I_1, tuple(int(i) for i in b[t == 2])))
    return keys


def face_of_point(M, cover, x):
    x = M.check_vertex(x)
    ip, ix, dd = cover_members(M, cover)
    I_1, I_01 = [], []
    for i in range(len(cover)):
        row = ix[ip[i]:ip[i + 1]]
        k = np.searchsorted(row, x)
        if k < len(row) and row[k] == x:
            v = phi_value(cover.radii[i], dd[ip[i] + k])
            if v == cover.radii[i]:
                I_1.append(i)
            elif v > 0:
                I_01.append(i)
    if not I_1:
        raise InvariantViolation("vertex has no pinned coordinate", {"vertex": x})
    return make_face(cover.radii, I_1, I_01)


# ---------------------------------------------------------------------------
# construction


@dataclass(eq=False)
class RectangularNerve:
    faces: dict
    D: int
    point_face_of: list
    point_face_keys: set
    radii: np.ndarray
    _by_ball: dict = field(default_factory=dict, repr=False)

    @property
    def dim_max(self):
        return max((F.d for F in self.faces.values()), default=-1)

    def __len__(self):
        return len(self.faces)

    def __contains__(self, key):
        return key in self.faces

    def face(self, I_1, I_01):
        return self.faces[(tuple(sorted(I_1)), tuple(sorted(I_01)))]

    def faces_of_dim(self, d):
        return [F for F in self.sorted_faces() if F.d == d]

    def sorted_faces(self):
        return [self.faces[k] for k in sorted(self.faces, key=lambda k: (len(k[1]), k))]

    def star(self, F):
        if not self._by_ball:
            for key, G in self.faces.items():
                for i in G.I_plus:
                    self._by_ball.setdefault(i, []).append(G)
        pivot = min(F.I_plus, key=lambda i: len(self._by_ball.get(i, ())))
        return [G for G in self._by_ball.get(pivot, ()) if in_star(F, G)]

    def to_json(self):
        return [{"I_1": list(F.I_1), "I_01": list(F.I_01), "r_sorted": list(F.r_sorted)}
                for F in self.sorted_faces()]

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


def closure_keys(I_1, I_01):
    """Every face key in the closure of ``(I_1, I_01)``."""
    for labels in itertools.product((0, 1, 2), repeat=len(I_01)):
        pinned = I_1 + tuple(i for i, t in zip(I_01, labels) if t == 1)
        free = tuple(i for i, t in zip(I_01, labels) if t == 2)
        yield tuple(sorted(pinned)), free


def _common_vertex(incidence_rows, balls):
    common = None
    for b in balls:
        s = incidence_rows[b]
        common = s if common is None else common & s
        if not common:
            return False
    return True


def build_nerve(M, cover, star_closure=False, budget=FACE_BUDGET):
    """Faces realized by vertices, closed under taking faces (and optionally stars)."""
    keys = point_faces(M, cover)
    realized = set(keys)
    faces = {}
    for I_1, I_01 in sorted(realized):
        for k in closure_keys(I_1, I_01):
            if k not in faces:
                faces[k] = make_face(cover.radii, *k)
                if len(faces) > budget:
                    raise BudgetExceeded(f"nerve exceeds {budget} faces")
    if star_closure:
        ip, ix, _ = cover_members(M, cover)
        rows = [frozenset(ix[ip[i]:ip[i + 1]].tolist()) for i in range(len(cover))]
        meets = defaultdict(set)
        for i in range(len(cover)):
            for v in rows[i]:
                meets[v].add(i)
        for I_1, I_01 in list(faces):
            plus = set(I_1) | set(I_01)
            # other balls sharing a vertex with every ball of I_+
            cand = set.intersection(*[set().union(*(meets[v] for v in rows[b])) for b in plus])
            extra = sorted(cand - plus)
            for r in range(len(extra) + 1):
                for add in itertools.combinations(extra, r):
                    if r and not _common_vertex(rows, tuple(plus) + add):
                        continue
                    for sub in itertools.product((False, True), repeat=len(I_1)):
                        new1 = tuple(i for i, keep in zip(I_1, sub) if keep)
                        moved = tuple(i for i, keep in zip(I_1, sub) if not keep)
                        if not new1:
                            continue
                        k = (new1, tuple(sorted(I_01 + moved + add)))
                        if k not in faces:
                            faces[k] = make_face(cover.radii, *k)
                            if len(faces) > budget:
                                raise BudgetExceeded(f"nerve exceeds {budget} faces")
    return RectangularNerve(faces=faces, D=len(cover), point_face_of=keys,
                            point_face_keys=realized, radii=cover.radii)


def nerve_audit(M, cover, nerve):
    """Nerve conditions, point-face membership and the dimension bound."""
    ip, ix, _ = cover_members(M, cover)
    rows = [frozenset(ix[ip[i]:ip[i + 1]].tolist()) for i in range(len(cover))]
    bad = None
    for F in nerve.sorted_faces():
        if not F.I_1 or not _common_vertex(rows, F.I_plus):
            bad = F.key
            break
    missing = [x for x, k in enumerate(nerve.point_face_of) if k not in nerve.faces]
    m_max = int(np.bincount(ix, minlength=M.n_vertices).max(initial=0))
    return {
        "nerve_conditions": (bad is None, None if bad is None else {"face": _jsonable(bad)}),
        "phi_into_nerve": (not missing, {"vertex": missing[0]} if missing else None),
        "dim_le_multiplicity_minus_1": (nerve.dim_max <= m_max - 1,
                                        {"dim_max": nerve.dim_max, "max_multiplicity": m_max}),
    }


def _jsonable(key):
    return {"I_1": list(key[0]), "I_01": list(key[1])}


# ---------------------------------------------------------------------------
# image estimates


def jacobian_mass(M, m):
    """Per-vertex ``weight * (2 sqrt(m))**n``."""
    return M.weights * (2.0 * np.sqrt(m)) ** M.n


@dataclass
class PhiImageEstimate:
    per_face: dict
    total: float
    method_tag: str = "pointwise Lipschitz Jacobian (2 sqrt m)^n summed over Star predicate sets"


def phi_image_estimates(M, cover, nerve, m):
    """Star volume bounds for every face, accumulated over point faces."""
    mass = jacobian_mass(M, m)
    by_key = defaultdict(float)
    for x, k in enumerate(nerve.point_face_of):
        by_key[k] += mass[x]
    per = {k: 0.0 for k in nerve.faces}
    for k, mu in sorted(by_key.items()):
        for c in closure_keys(*k):
            if c in per:
                per[c] += mu
    return PhiImageEstimate(per_face=per, total=float(mass.sum()))


def star_preimage_volume(M, cover, nerve, F, m):
    """Direct evaluation over the smallest ball of ``I_+(F)``.

    Returns ``(bound, vertices)``.  The predicate set is checked to lie in every
    ball of ``I_+(F)``.
    """
    ip, ix, _ = cover_members(M, cover)
    plus = F.I_plus
    smallest = min(plus, key=lambda i: (cover.radii[i], i))
    cand = ix[ip[smallest]:ip[smallest + 1]]
    s1, s01 = set(F.I_1), set(F.I_01)
    hits = []
    for x in cand:
        I_1, I_01 = nerve.point_face_of[x]
        a, b = set(I_1), set(I_01)
        if a <= s1 and s01 <= b and s1 <= a | b:
            hits.append(int(x))
    for i in plus:
        row = set(ix[ip[i]:ip[i + 1]].tolist())
        if not set(hits) <= row:
            raise InvariantViolation("Star predicate set leaves a ball of I_+",
                                     {"face": _jsonable(F.key), "ball": int(i)})
    hits = np.asarray(hits, dtype=np.int64)
    return float(jacobian_mass(M, m)[hits].sum()), hits


def lemma5_rhs(F, V1, constants):
    return constants.C_lemma5 * V1 * F.r1 ** (constants.n + 1) * math.exp(-constants.beta * F.d)


def estimates_table(nerve, est, V1, constants):
    rows = []
    for F in nerve.sorted_faces():
        rhs = lemma5_rhs(F, V1, constants)
        bound = est.per_face[F.key]
        rows.append({"face_key": F.key_str(), "d": F.d, "r1": F.r1, "star_volume_bound": bound,
                     "lemma5_rhs": rhs, "margin": rhs - bound})
    return rows


def write_estimates_csv(rows, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["face_key", "d", "r1", "star_volume_bound", "lemma5_rhs", "margin"])
        for r in rows:
            wr.writerow([r["face_key"], r["d"], repr(r["r1"]), repr(r["star_volume_bound"]),
                         repr(r["lemma5_rhs"]), repr(r["margin"])])


def face_radius_audit(nerve, constants=None, n=None):
    """Check ``r_1(F) <= C_radius exp(-beta d)`` on every face; also the raw octave form."""
    if constants is None:
        constants = derive_multiplicity_constants(n)
    worst = math.inf
    worst_face = None
    violations = []
    octave_violations = []
    for F in nerve.sorted_faces():
        bound = constants.C_radius * math.exp(-constants.beta * F.d)
        margin = bound - F.r1
        if margin < worst:
            worst, worst_face = margin, F.key
        if F.r1 > bound * (1 + RTOL):
            violations.append(_jsonable(F.key))
        octave = (1.0 / 100) * 2.0 ** (-F.d / constants.eta)
        if F.r1 > octave * (1 + RTOL):
            octave_violations.append(_jsonable(F.key))
    return {"passed": not violations, "worst_margin": worst if worst_face else None,
            "worst_face": _jsonable(worst_face) if worst_face else None,
            "violations": violations, "octave_form_violations": octave_violations}


def lipschitz_audit(M, cover, slack=1e-9):
    """``|phi_i(u) - phi_i(v)| <= 2 dist(u, v)`` for every ball and every edge."""
    e = np.asarray(M.edges, dtype=np.int64)
    if not len(e):
        return {"passed": True, "worst_ratio": 0.0, "edges": 0}
    dist = edge_distances(M)
    P = phi_matrix(M, cover).tocsc()
    n_e = len(e)
    E = sparse.csr_matrix((np.r_[np.ones(n_e), -np.ones(n_e)],
                           (np.r_[e[:, 0], e[:, 1]], np.r_[np.arange(n_e), np.arange(n_e)])),
                          shape=(M.n_vertices, n_e))
    diff = abs(P @ E).max(axis=0).toarray().ravel()
    ratio = diff / (2 * dist)
    k = int(np.argmax(ratio))
    return {"passed": bool((diff <= 2 * dist * (1 + slack)).all()),
            "worst_ratio": float(ratio[k]), "worst_edge": [int(e[k, 0]), int(e[k, 1])],
            "edges": n_e}


def edge_distances(M):
    """Metric distance between the endpoints of every edge (scaled)."""
    e = np.asarray(M.edges, dtype=np.int64)
    eng = M._engine
    if M.metric_mode == "exact_closed_form":
        return eng.pair(e[:, 0], e[:, 1]) * M.scale
    lim = float(M.edge_lengths.max()) * (1 + 1e-9)
    out = np.empty(len(e))
    src = np.unique(e[:, 0])
    for start in range(0, len(src), 256):
        chunk = src[start:start + 256]
        D = dijkstra(eng.graph, indices=chunk, limit=lim)
        pos = {int(s): k for k, s in enumerate(chunk)}
        sel = np.flatnonzero(np.isin(e[:, 0], chunk))
        rows = np.array([pos[int(u)] for u in e[sel, 0]])
        out[sel] = D[rows, e[sel, 1]]
    return out * M.scale


def nerve_from_keys(radii, keys, close=True):
    """Hand-built nerve from face keys (and, by default, their closures)."""
    radii = np.asarray(radii, dtype=float)
    faces = {}
    for I_1, I_01 in keys:
        I_1, I_01 = tuple(sorted(I_1)), tuple(sorted(I_01))
        for k in (closure_keys(I_1, I_01) if close else [(I_1, I_01)]):
            if k not in faces:
                faces[k] = make_face(radii, *k)
    return RectangularNerve(faces=faces, D=len(radii), point_face_of=[],
                            point_face_keys=set(), radii=radii)
