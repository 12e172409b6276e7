"""Mass-ledger deformation of the nerve image down to the n-skeleton.

The cycle is never represented geometrically.  A :class:`ChainLedger` keeps,
per nerve face ``F``, an upper bound ``u(F)`` on the mass of the current cycle
inside ``Star(F)``.  Each skeleton step applies the two bounds the argument
uses: minimal-filling surgery does not increase mass, and the clamp-and-stretch
retraction ``R_delta`` inflates it by at most ``(1 - 2 delta)**-n``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import omega
from .errors import InputError, InvariantViolation, ScheduleError

_LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# schedule arithmetic


def basic_interval_map(r, delta, t):
    """Clamp ``[0, delta r]`` to 0 and ``[r - delta r, r]`` to r; stretch linearly between."""
    if not (0 <= delta < 0.5):
        raise InputError("delta must lie in [0, 1/2)")
    if not (0 <= t <= r):
        raise InputError("t must lie in [0, r]")
    lo = delta * r
    if t <= lo:
        return 0.0
    if t >= r - lo:
        return float(r)
    return (t - lo) / (1 - 2 * delta)


def delta_value(n, beta, epsilon, k):
    """``[2 eps e^(-beta k) / omega_n]^(1/n)`` without range checks."""
    if epsilon == 0:
        return 0.0
    return (2.0 * epsilon * math.exp(-beta * k) / omega(n)) ** (1.0 / n)


def delta_schedule(n, beta, epsilon, k):
    if k < n + 1:
        raise ScheduleError(f"schedule starts at k = n+1 = {n + 1}, got {k}")
    d = delta_value(n, beta, epsilon, k)
    if d >= 0.5:
        raise ScheduleError(f"delta({k}) = {d:g} >= 1/2; epsilon too large")
    return d


def log_product(n, beta, epsilon):
    """``ln prod_{l>n} (1 - 2 delta(l))**-n``, summed exactly in closed form.

    With ``x = 2 delta(n+1)`` and ``q = e^(-beta/n)``, expanding ``-ln(1-y)``
    and summing each geometric series in ``l`` gives
    ``n * sum_j x^j / (j (1 - q^j))``.
    """
    if epsilon < 0:
        raise InputError("epsilon must be nonnegative")
    if epsilon == 0:
        return 0.0
    x = 2.0 * delta_value(n, beta, epsilon, n + 1)
    if x >= 1.0:
        return math.inf
    total = 0.0
    xj = 1.0
    for j in range(1, 10_000_000):
        xj *= x
        term = xj / (j * -math.expm1(-j * beta / n))
        total += term
        if term < 1e-18 * total:
            break
    return n * total


def product_bound(n, beta, epsilon):
    return math.exp(log_product(n, beta, epsilon))


def epsilon_threshold(n, beta, rel_tol=1e-9):
    """Largest admissible epsilon (within ``rel_tol``) with product < 2 and epsilon < 1/2."""
    if n < 1 or beta <= 0:
        raise InputError("need n >= 1 and beta > 0")
    target = _LN2
    hi = min(0.5, 0.5 * omega(n) * 0.5**n * math.exp(beta * (n + 1)))
    if log_product(n, beta, hi) < target:
        return hi * (1 - rel_tol)
    lo = hi
    while log_product(n, beta, lo) >= target:
        lo *= 1e-8
    while hi / lo - 1 > rel_tol * 0.1:
        mid = math.sqrt(lo * hi) if hi / lo > 2 else 0.5 * (lo + hi)
        if log_product(n, beta, mid) < target:
            lo = mid
        else:
            hi = mid
    return lo * (1 - rel_tol)


@dataclass
class DeformationSchedule:
    n: int
    beta: float
    epsilon: float
    omega_n: float
    product_bound: float
    delta_of_k: dict = field(default_factory=dict)
    V0: float | None = None
    C1: float | None = None
    C_radius: float | None = None
    thick_dim_bound: int | None = None
    G: float | None = None

    def delta(self, k):
        if k not in self.delta_of_k:
            self.delta_of_k[k] = delta_schedule(self.n, self.beta, self.epsilon, k)
        return self.delta_of_k[k]


def federer_fleming_stretch(d):
    """Engineering choice ``2 d 3^d`` for pushing a chain out of a d-face (at least 1)."""
    return max(1.0, 2.0 * d * 3.0**d)


def make_schedule(n, beta, epsilon=None, V0=None, C1=None, C_radius=None, dim_max=None):
    if epsilon is None:
        epsilon = epsilon_threshold(n, beta)
    sched = DeformationSchedule(n=n, beta=beta, epsilon=epsilon, omega_n=omega(n),
                                product_bound=product_bound(n, beta, epsilon))
    if V0 is not None:
        if not V0 > 0:
            raise InputError("V0 must be positive")
        if C1 is None or C_radius is None:
            raise InputError("thick/thin schedule needs C1 and C_radius")
        sched.V0, sched.C1, sched.C_radius = V0, C1, C_radius
        # thick faces have r_1 >= eps/(C1 V0); faces obey r_1 <= C_radius e^(-beta d)
        ratio = C_radius * C1 * V0 / epsilon
        sched.thick_dim_bound = max(0, int(math.floor(math.log(ratio) / beta))) if ratio > 1 else 0
        d_eff = sched.thick_dim_bound if dim_max is None else min(sched.thick_dim_bound, dim_max)
        sched.G = federer_fleming_stretch(d_eff)
    return sched


# ---------------------------------------------------------------------------
# ledger


@dataclass
class ChainLedger:
    """Per-face upper bounds ``u(F)`` on the mass of the current cycle in ``Star(F)``."""

    u: dict
    faces: dict
    k_current: int
    mode: str = "thin_only"
    history: list = field(default_factory=list)

    def copy(self):
        return ChainLedger(dict(self.u), self.faces, self.k_current, self.mode, list(self.history))

    def keys(self):
        return sorted(self.u, key=lambda k: (len(k[1]), k))


@dataclass
class Certificate:
    kind: str
    witness: dict

    def to_json(self):
        return {"kind": self.kind, "witness": self.witness}

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)


@dataclass
class DeformationTrace:
    records: list = field(default_factory=list)
    ledger: ChainLedger | None = None
    cumulative_factor: float = 1.0

    def add(self, **rec):
        self.records.append(rec)

    def to_jsonl(self, path):
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _face_json(key):
    return {"I_1": list(key[0]), "I_01": list(key[1])}


def init_ledger(nerve, estimates, mode="thin_only"):
    if mode not in ("thin_only", "thick_thin"):
        raise InputError(f"unknown ledger mode {mode!r}")
    per = getattr(estimates, "per_face", estimates)
    u = {}
    for key in nerve.faces:
        if key not in per:
            raise InputError(f"no estimate for face {key}")
        val = float(per[key])
        if not (val >= 0 and math.isfinite(val)):
            raise InputError(f"estimate for face {key} must be finite and nonnegative")
        u[key] = val
    return ChainLedger(u=u, faces=nerve.faces, k_current=nerve.dim_max, mode=mode)


def _threshold(F, sched, factor=1.0):
    return factor * sched.epsilon * F.r1**sched.n * math.exp(-sched.beta * F.d)


def _worst(ledger, sched, factor):
    """Face with the smallest relative slack ``1 - u / (factor eps r1^n e^-beta d)``."""
    best_key, best = None, math.inf
    for key in ledger.keys():
        slack = 1.0 - ledger.u[key] / _threshold(ledger.faces[key], sched, factor)
        if slack < best:
            best_key, best = key, slack
    return best_key, best


def run_thin_deformation(nerve, ledger, schedule):
    """Push the cycle down to the n-skeleton, tracking the mass bounds only."""
    n = schedule.n
    led = ledger.copy()
    trace = DeformationTrace(ledger=led)
    for key in led.keys():
        F = led.faces[key]
        thr = _threshold(F, schedule)
        if not led.u[key] < thr:
            trace.add(k=led.k_current, step="entry", factor=1.0, ok=False, face=_face_json(key))
            return Certificate("hypothesis_failed", {"face": _face_json(key), "u": led.u[key],
                                                     "threshold": thr}), trace
    wk, wm = _worst(led, schedule, 1.0)
    trace.add(k=led.k_current, step="entry", factor=1.0, ok=True,
              worst_face=_face_json(wk) if wk else None, worst_margin=wm if wk else None)

    for k in range(nerve.dim_max, n, -1):
        delta = schedule.delta(k)
        pruning = {}
        for F in nerve.faces_of_dim(k):
            s = F.r1 * delta_value(n, schedule.beta, schedule.epsilon, k)
            if abs(s / F.r1 - delta) > 1e-12 * max(delta, 1e-300):
                raise InvariantViolation("pruning radius does not match delta(k)",
                                         {"face": _face_json(F.key), "k": k})
            pruning[F.key] = s
        trace.add(k=k, step="surgery", factor=1.0, faces=len(pruning),
                  min_pruning_radius=min(pruning.values()) if pruning else None)
        factor = (1.0 - 2.0 * delta) ** (-n)
        for key in led.u:
            led.u[key] *= factor
        trace.cumulative_factor *= factor
        led.k_current = k - 1
        led.history.append({"k": k, "delta": delta, "factor": factor})
        wk, wm = _worst(led, schedule, 2.0)
        trace.add(k=k, step="retraction", factor=factor, delta=delta,
                  cumulative=trace.cumulative_factor,
                  worst_face=_face_json(wk) if wk else None, worst_margin=wm if wk else None)
        if wk is not None and not wm > 0:
            raise InvariantViolation("ledger bound 2 eps r1^n e^(-beta d) exceeded",
                                     {"face": _face_json(wk), "k": k})
    led.k_current = min(led.k_current, n)

    table = []
    for F in nerve.faces_of_dim(n):
        u, vol = led.u[F.key], F.volume
        if not u < vol:
            raise InvariantViolation("n-face mass not below face volume",
                                     {"face": _face_json(F.key), "u": u, "volume": vol})
        table.append({"face": _face_json(F.key), "u": u, "volume": vol, "coefficient": 0})
    trace.add(k=n, step="final", factor=1.0, n_faces=len(table), cumulative=trace.cumulative_factor)
    return Certificate("nerve_null", {"n_faces": table, "cumulative_factor": trace.cumulative_factor,
                                      "product_bound": schedule.product_bound}), trace


def is_thin(F, schedule):
    return schedule.C1 * schedule.V0 * F.r1 < schedule.epsilon


def run_thick_thin_deformation(nerve, ledger, schedule, V0=None, total_initial=None):
    """Thin faces follow the thin update; thick faces are pushed at a stretch cost ``G``."""
    if V0 is not None and V0 != schedule.V0:
        raise InputError("V0 disagrees with the schedule")
    if schedule.V0 is None or schedule.G is None:
        raise InputError("schedule lacks thick/thin constants; build it with V0")
    n = schedule.n
    led = ledger.copy()
    led.mode = "thick_thin"
    trace = DeformationTrace(ledger=led)
    thick = {key for key, F in led.faces.items() if not is_thin(F, schedule)}
    for key in sorted(thick, key=lambda k: (len(k[1]), k)):
        if led.faces[key].d > schedule.thick_dim_bound:
            raise InvariantViolation("thick face above d(V0, n)",
                                     {"face": _face_json(key), "bound": schedule.thick_dim_bound})
    for key in led.keys():
        if key in thick:
            continue
        if not led.u[key] < _threshold(led.faces[key], schedule):
            trace.add(k=led.k_current, step="entry", factor=1.0, ok=False, face=_face_json(key))
            return Certificate("hypothesis_failed", {"face": _face_json(key), "u": led.u[key],
                                                     "threshold": _threshold(led.faces[key], schedule)}), trace
    if total_initial is None:
        total_initial = float(sum(led.u.values()))
    total = total_initial
    max_thick_dim = max((led.faces[k].d for k in thick), default=-1)
    trace.add(k=led.k_current, step="entry", factor=1.0, ok=True, thick_faces=len(thick),
              max_thick_dim=max_thick_dim, thick_dim_bound=schedule.thick_dim_bound,
              total=total)
    G = schedule.G
    for k in range(nerve.dim_max, n, -1):
        delta = schedule.delta(k)
        pushed = [F.key for F in nerve.faces_of_dim(k) if F.key in thick]
        step_factor = G if pushed else 1.0
        for key in pushed:
            led.u[key] *= G
        total *= step_factor
        trace.add(k=k, step="surgery", factor=step_factor, thick_faces=len(pushed), total=total)
        factor = (1.0 - 2.0 * delta) ** (-n)
        for key in led.u:
            led.u[key] *= factor
        total *= factor
        trace.cumulative_factor *= factor
        led.k_current = k - 1
        led.history.append({"k": k, "delta": delta, "factor": factor, "G_applied": step_factor})
        trace.add(k=k, step="retraction", factor=factor, delta=delta, total=total)
    led.k_current = min(led.k_current, n)

    coeffs = []
    for F in nerve.faces_of_dim(n):
        u, vol = led.u[F.key], F.volume
        if F.key in thick:
            bound = u / vol
            coeffs.append({"face": _face_json(F.key), "thick": True, "c_bound": bound,
                           "c_int_bound": math.floor(bound)})
        else:
            if not u < vol:
                raise InvariantViolation("thin n-face mass not below face volume",
                                         {"face": _face_json(F.key), "u": u, "volume": vol})
            coeffs.append({"face": _face_json(F.key), "thick": False, "c_bound": 0.0,
                           "c_int_bound": 0})
    d_eff = max(0, min(schedule.thick_dim_bound, max(nerve.dim_max, 0)))
    global_bound = 4.0 * G**d_eff * total_initial
    audit_ok = total <= global_bound
    trace.add(k=n, step="final", factor=1.0, total=total, global_bound=global_bound,
              audit_ok=audit_ok)
    if not audit_ok:
        raise InvariantViolation("|z_n| exceeds 4 G^d |z_D|", {"total": total, "bound": global_bound})
    return Certificate("norm_bound", {
        "sum_abs_c": float(sum(c["c_bound"] for c in coeffs)),
        "sum_abs_c_int": int(sum(c["c_int_bound"] for c in coeffs)),
        "coefficients": coeffs,
        "total_initial": total_initial, "total_final": total, "global_bound": global_bound,
        "thick_faces": len(thick), "max_thick_dim": max_thick_dim,
        "thick_dim_bound": schedule.thick_dim_bound, "G": G,
        "constants": {"epsilon": schedule.epsilon, "beta": schedule.beta, "C1": schedule.C1,
                      "V0": schedule.V0, "C_radius": schedule.C_radius,
                      "G_rule": "2 d 3^d"},
    }), trace
