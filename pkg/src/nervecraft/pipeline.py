"""End-to-end runs: cover, multiplicity, nerve, deformation and the reports."""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import deformation as dfm
from . import good_cover as gc
from . import multiplicity as mult
from . import nerve as nv
from .constants import derive_multiplicity_constants
from .errors import InputError
from .metric_core import generate_synthetic, load_mesh, max_ball_volume

MODES = ("verify_lemmas", "theorem1", "norm_bound")


@dataclass
class ExperimentConfig:
    input: dict
    target_radius: float = 1.0
    mode: str = "verify_lemmas"
    beta: float | None = None
    epsilon: float | None = None
    seed: int = 0
    output_dir: str | None = None
    metric_scale: float = 1.0
    V0: float | None = None
    n: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def overrides(self):
        return {k: v for k, v in (("beta", self.beta), ("epsilon", self.epsilon)) if v is not None}


def load_config(source):
    """Parse a config from a path, JSON text or dict; validates the schema."""
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"config is not valid JSON: {exc}") from exc
    elif isinstance(source, dict):
        data = dict(source)
    else:
        raise InputError(f"config not found: {source!r}")
    if not data:
        raise InputError("empty config; expected at least an 'input' entry")
    known = {f for f in ExperimentConfig.__dataclass_fields__ if f != "extra"}
    extra = {k: data.pop(k) for k in list(data) if k not in known}
    if "input" not in data and "n" not in data:
        raise InputError("config needs an 'input' (mesh path or synthetic spec)")
    data.setdefault("input", {})
    cfg = ExperimentConfig(**data, extra=extra)
    if not (isinstance(cfg.target_radius, (int, float)) and cfg.target_radius > 0):
        raise InputError("target_radius must be positive")
    if cfg.mode not in MODES:
        raise InputError(f"mode must be one of {MODES}")
    if not cfg.metric_scale > 0:
        raise InputError("metric_scale must be positive")
    if cfg.V0 is not None and not cfg.V0 > 0:
        raise InputError("V0 must be positive")
    return cfg


def build_instance(cfg):
    """Load the instance, apply the metric scale, then measure in units of R."""
    src = cfg.input
    if isinstance(src, str):
        M = load_mesh(src)
    elif isinstance(src, dict) and "mesh" in src:
        M = load_mesh(src["mesh"], n=src.get("n", 2))
    elif isinstance(src, dict) and "synthetic" in src:
        M = generate_synthetic(src["synthetic"])
    elif isinstance(src, dict) and "shape" in src:
        M = generate_synthetic(src)
    else:
        raise InputError("input must be a mesh path, {'mesh': path} or {'synthetic': {...}}")
    if cfg.metric_scale != 1.0:
        M = M.with_scale(cfg.metric_scale)
    return M.rescaled(cfg.target_radius)


# ---------------------------------------------------------------------------
# constants


def cmd_constants(n, beta=None):
    """Constant chain plus epsilon and the hypothesis threshold delta(n)."""
    table = derive_multiplicity_constants(n, beta)
    eps = dfm.epsilon_threshold(n, table.beta)
    with mpmath.workdps(40):
        delta_mp = 100 * mpmath.mpf(eps) / mpmath.mpf(table.exact["C_lemma5"])
        delta = float(delta_mp) * (1 - 1e-12)
        consistent = mpmath.mpf(table.exact["C_lemma5"]) * mpmath.mpf(delta) / 100 <= eps
        delta_exact = mpmath.nstr(delta_mp, 17)
    return {
        "constants": table.to_json(),
        "epsilon": eps,
        "product_bound": dfm.product_bound(n, table.beta, eps),
        "delta_n": delta,
        "delta_n_exact": delta_exact,
        "consistency_C5_delta_over_100_le_eps": bool(consistent),
        "beta_override": beta is not None,
    }


# ---------------------------------------------------------------------------
# stages


@dataclass
class Stages:
    M: object
    V1: float
    constants: object
    ladder: object = None
    cover: object = None
    profile: object = None
    layers: object = None
    nerve: object = None
    estimates: object = None
    timing: dict = field(default_factory=dict)


def _timed(st, name, fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    st.timing[name] = time.perf_counter() - t
    return out


def run_stages(M, constants, upto="nerve", star_closure=False):
    st = Stages(M=M, V1=0.0, constants=constants)
    st.V1 = _timed(st, "V1", max_ball_volume, M, 1.0)
    st.ladder = _timed(st, "ladder", gc.ladder, M, st.V1)
    st.cover = _timed(st, "cover", gc.build_good_cover, M, st.V1, st.ladder)
    if upto == "cover":
        return st
    st.profile = _timed(st, "multiplicity", mult.multiplicity_function, M, st.cover)
    st.nerve = _timed(st, "nerve", nv.build_nerve, M, st.cover, star_closure)
    st.estimates = _timed(st, "estimates", nv.phi_image_estimates, M, st.cover, st.nerve,
                          st.profile.m)
    return st


def _stats(M, st):
    out = {"name": M.name, "n": M.n, "vertices": M.n_vertices, "total_volume": M.total_volume,
           "h": M.h, "V1_scaled": st.V1}
    if st.cover is not None:
        out["cover_size"] = len(st.cover)
        out["radii"] = sorted({float(r) for r in st.cover.radii})
    if st.profile is not None:
        out["max_multiplicity"] = int(st.profile.m.max())
    if st.nerve is not None:
        out["nerve_faces"] = len(st.nerve)
        out["nerve_dim_max"] = st.nerve.dim_max
    return out


def _write_json(out_dir, name, obj):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, tuple)):
        return list(o)
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------------------
# commands


def cmd_cover(cfg):
    M = build_instance(cfg)
    constants = derive_multiplicity_constants(M.n, cfg.beta)
    st = run_stages(M, constants, upto="cover")
    report = gc.validate_cover(M, st.cover)
    out = {"instance": _stats(M, st), "validation": report.to_json(),
           "target_radius": cfg.target_radius}
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        st.cover.dump(os.path.join(cfg.output_dir, "cover.json"))
    _write_json(cfg.output_dir, "cover_report.json", out)
    _write_json(cfg.output_dir, "timing.json", st.timing)
    return out, 0 if report.passed else 2


def _suite(entries):
    return {name: {"passed": bool(ok), "witness": wit} for name, (ok, wit) in entries.items()}


def ladder_cascade_check(st):
    """Every failed rung must satisfy the density cascade inequality."""
    worst = None
    checked = 0
    for rec in st.ladder.trace:
        fail = ~rec["reasonable_growth"]
        if not fail.any():
            continue
        ds, db = rec["density_small"][fail], rec["density_big"][fail]
        ok = gc.cascade_holds(ds, db)
        checked += int(fail.sum())
        if not ok.all():
            k = int(np.flatnonzero(~ok)[0])
            worst = {"vertex": int(rec["vertices"][fail][k]), "rung": rec["rung"]}
            break
    return worst is None, {"failed_rungs_checked": checked, "violation": worst}


def verify_instance(M, constants, st=None):
    """Every named invariant of every module on one instance."""
    if st is None:
        st = run_stages(M, constants)
    cover, n = st.cover, M.n
    suites = {}

    rep = gc.validate_cover(M, cover)
    verdicts = gc._verdict_arrays(M, cover.centers, cover.radii, st.V1)
    counts = gc.scale_neighbor_counts(M, cover)
    suites["good_cover"] = _suite({
        "condition_1_good_balls": (rep.conditions[1]["ok"], rep.conditions[1]),
        "condition_2_half_balls_cover": (rep.conditions[2]["ok"], rep.conditions[2]),
        "condition_3_sixth_balls_disjoint": (rep.conditions[3]["ok"], rep.conditions[3]),
        "ladder_every_vertex": (bool(np.isfinite(st.ladder.radii).all()), None),
        "ladder_cascade": ladder_cascade_check(st),
        "scale_neighbors_le_eta": (bool(counts.max() <= constants.eta),
                                   {"max_count": int(counts.max()), "eta": constants.eta}),
        "resolution_flags": (True, {"flagged_balls": int(verdicts["flag"].sum())}),
    })

    prof, dec = mult.high_multiplicity_tail(M, cover, None, 1.0 / 100, constants)
    st.layers = dec
    inv = mult.layer_invariants(M, cover, dec, constants)
    inv.update({
        "m_ge_1_everywhere": (bool(prof.m.min() >= 1), {"min_m": int(prof.m.min())}),
        "tail_non_increasing": (bool(np.all(np.diff([prof.tail[k] for k in sorted(prof.tail)]) <= 0)),
                                None),
        "F_non_increasing": (bool(np.all(np.diff([prof.F[k] for k in sorted(prof.F)]) <= 0)), None),
        "F_decay_c_prime": (all(r["holds"] for r in prof.decay_checks), None),
        "tail_bound": (prof.tail_bound_holds, {"vacuous_fit": prof.vacuous,
                                            "tail_slope": prof.tail_slope}),
    })
    suites["multiplicity"] = _suite(inv)

    nerve = st.nerve
    audit = nv.nerve_audit(M, cover, nerve)
    lip = nv.lipschitz_audit(M, cover)
    rad = nv.face_radius_audit(nerve, constants)
    rows = nv.estimates_table(nerve, st.estimates, st.V1, constants)
    worst = min(rows, key=lambda r: r["margin"]) if rows else None
    total_bound = constants.C_total * M.total_volume
    audit.update({
        "lipschitz_phi": (lip["passed"], lip),
        "face_radius": (rad["passed"], {"worst_margin": rad["worst_margin"],
                                        "octave_form_violations": len(rad["octave_form_violations"])}),
        "star_volume_bound": (all(r["margin"] > 0 for r in rows),
                              {"worst_face": worst["face_key"], "worst_margin": worst["margin"]}
                              if worst else None),
        "total_image_bound": (st.estimates.total <= total_bound,
                              {"total": st.estimates.total, "bound": total_bound}),
    })
    suites["nerve"] = _suite(audit)

    eps = dfm.epsilon_threshold(n, constants.beta)
    k0 = n + 1
    ratio = dfm.delta_value(n, constants.beta, eps, k0 + 1) / dfm.delta_value(n, constants.beta, eps, k0)
    suites["deformation"] = _suite({
        "product_below_2": (dfm.product_bound(n, constants.beta, eps) < 2, {"epsilon": eps}),
        "delta_ratio": (abs(ratio - math.exp(-constants.beta / n)) <= 1e-12, {"ratio": ratio}),
    })
    passed = all(v["passed"] for s in suites.values() for v in s.values())
    return {"passed": passed, "suites": suites, "instance": _stats(M, st)}, st


def cmd_verify(cfg):
    M = build_instance(cfg)
    constants = derive_multiplicity_constants(M.n, cfg.beta)
    report, st = verify_instance(M, constants)
    report["overrides"] = cfg.overrides
    _write_json(cfg.output_dir, "verify_report.json", report)
    _write_json(cfg.output_dir, "timing.json", st.timing)
    return report, 0 if report["passed"] else 2


def cmd_theorem1(cfg):
    M = build_instance(cfg)
    cons = cmd_constants(M.n, cfg.beta)
    constants = derive_multiplicity_constants(M.n, cfg.beta)
    delta_n = cons["delta_n"]
    eps = cfg.epsilon if cfg.epsilon is not None else cons["epsilon"]
    t0 = time.perf_counter()
    V1 = max_ball_volume(M, 1.0)
    report = {"V1_scaled": V1, "delta_n": delta_n, "epsilon": eps, "beta": constants.beta,
              "hypothesis_met": bool(V1 < delta_n), "overrides": cfg.overrides,
              "target_radius": cfg.target_radius, "metric_scale": cfg.metric_scale}
    timing = {"V1": time.perf_counter() - t0}
    if not report["hypothesis_met"]:
        report["certificate"] = None
        report["conclusion"] = "hypothesis_not_met: V(1) >= delta(n); the theorem asserts nothing"
        report["instance"] = {"name": M.name, "vertices": M.n_vertices, "V1_scaled": V1}
        _write_json(cfg.output_dir, "theorem1_report.json", report)
        _write_json(cfg.output_dir, "timing.json", timing)
        return report, 1
    st = run_stages(M, constants)
    timing.update(st.timing)
    sched = dfm.make_schedule(M.n, constants.beta, eps)
    ledger = dfm.init_ledger(st.nerve, st.estimates)
    t = time.perf_counter()
    cert, trace = dfm.run_thin_deformation(st.nerve, ledger, sched)
    timing["deformation"] = time.perf_counter() - t
    report["certificate"] = cert.to_json()
    report["cumulative_factor"] = trace.cumulative_factor
    report["instance"] = _stats(M, st)
    if cert.kind == "nerve_null":
        report["conclusion"] = ("nerve_null: phi(M) bounds in the nerve, the combinatorial "
                                "mechanism behind filling radius <= R; no L-infinity filling is built")
        code = 0
    else:
        report["conclusion"] = "hypothesis_failed at the ledger entry check"
        code = 1
    _write_json(cfg.output_dir, "theorem1_report.json", report)
    _write_json(cfg.output_dir, "timing.json", timing)
    if cfg.output_dir:
        trace.to_jsonl(os.path.join(cfg.output_dir, "trace.jsonl"))
        cert.dump(os.path.join(cfg.output_dir, "certificate.json"))
    return report, code


def cmd_norm_bound(cfg):
    M = build_instance(cfg)
    constants = derive_multiplicity_constants(M.n, cfg.beta)
    eps = cfg.epsilon if cfg.epsilon is not None else dfm.epsilon_threshold(M.n, constants.beta)
    st = run_stages(M, constants)
    V0 = cfg.V0 if cfg.V0 is not None else st.V1
    if not V0 > 0:
        raise InputError("V0 must be positive")
    sched = dfm.make_schedule(M.n, constants.beta, eps, V0=V0, C1=constants.C_lemma5,
                              C_radius=constants.C_radius, dim_max=max(st.nerve.dim_max, 0))
    ledger = dfm.init_ledger(st.nerve, st.estimates, mode="thick_thin")
    t = time.perf_counter()
    cert, trace = dfm.run_thick_thin_deformation(st.nerve, ledger, sched,
                                                 total_initial=st.estimates.total)
    st.timing["deformation"] = time.perf_counter() - t
    w = cert.witness
    d_eff = max(0, min(sched.thick_dim_bound, max(st.nerve.dim_max, 0)))
    # |c| <= 4 G^d C_total |M| / (min thick n-face volume), thick faces have r1 >= eps / (C1 V0)
    log10_C = (math.log10(4) + d_eff * math.log10(sched.G) + math.log10(constants.C_total)
               - M.n * (math.log10(eps) - math.log10(constants.C_lemma5 * V0)))
    log10_rhs = log10_C + math.log10(M.total_volume)
    sum_c = w["sum_abs_c"]
    report = {
        "sum_abs_c": sum_c, "sum_abs_c_int": w["sum_abs_c_int"], "V0": V0,
        "thick_faces": w["thick_faces"], "max_thick_dim": w["max_thick_dim"],
        "thick_dim_bound": sched.thick_dim_bound, "G": sched.G, "epsilon": eps,
        "beta": constants.beta, "global_audit": {"total_initial": w["total_initial"],
                                                 "total_final": w["total_final"],
                                                 "bound": w["global_bound"], "passed": True},
        "log10_C_V0_n": log10_C, "log10_C_V0_n_times_volume": log10_rhs,
        "norm_bound_holds": bool(sum_c == 0 or math.log10(sum_c) <= log10_rhs),
        "constants_used": w["constants"], "overrides": cfg.overrides,
        "instance": _stats(M, st),
    }
    _write_json(cfg.output_dir, "norm_report.json", report)
    _write_json(cfg.output_dir, "timing.json", st.timing)
    if cfg.output_dir:
        trace.to_jsonl(os.path.join(cfg.output_dir, "trace.jsonl"))
        cert.dump(os.path.join(cfg.output_dir, "certificate.json"))
    return report, 0
