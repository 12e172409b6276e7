"""Explicit dimensional constants for the covering and nerve estimates.

Every constant is produced by running the volume-comparison arithmetic with the
good-ball thresholds, in mpmath so that exponents far outside double range stay
exact.  Each step is appended to ``derivation_log``.

Notation used in the log:

* ``K``: the reasonable-growth factor ``10**(4(n+3))``: ``|100B| <= K |B/100|``.
* ``eta``: bound on cover balls with radius in ``[s/15, 2s]`` meeting a probe
  ball of radius ``s``.
* ``gamma``: layers per unit of ``log(1/r)``.
* ``c'`` and ``alpha``: per-layer decay of the averaged layer volume.
* ``beta``, ``C_radius``: ``r_1(F) <= C_radius * exp(-beta d(F))``.
* ``C_lemma5``: prefactor of ``|phi(M) ∩ Star(F)| <= C V(1) r_1^(n+1) e^(-beta d)``.
* ``C_total``: prefactor of ``|phi(M)| <= C |M|``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import mpmath

_DPS = 60


def omega(n):
    """Volume of the Euclidean unit n-ball."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass
class ConstantsTable:
    n: int
    growth: float
    eta: float
    gamma: float
    alpha: float
    c_prime: float
    beta: float
    C_radius: float
    C_lemma5: float
    C_total: float
    derivation_log: list = field(default_factory=list)
    exact: dict = field(default_factory=dict, repr=False)

    def to_json(self):
        d = asdict(self)
        for k, v in list(d.items()):
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = self.exact[k]
        return d

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)


def _sup_r_log_power(k, r_max):
    """``sup_{0 < r <= r_max} r * log(1/r)**k``."""
    if k == 0:
        return mpmath.mpf(r_max)
    peak = mpmath.exp(-k)
    if peak <= r_max:
        return (k / mpmath.e) ** k
    return r_max * mpmath.log(1 / r_max) ** k


def derive_multiplicity_constants(n, beta=None):
    """Run the constant chain for dimension ``n``.

    ``beta`` overrides only the nerve decay exponent (sensitivity runs); the
    radius prefactor is then re-fitted so that the radius bound stays valid.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    log = []
    with mpmath.workdps(_DPS):
        mpf = mpmath.mpf
        K = mpf(10) ** (4 * (n + 3))
        log.append(f"growth K = 10^(4(n+3)) = {mpmath.nstr(K, 6)}")

        # probe ball B(s), cover balls of radius in [s/15, 2s] meeting it:
        # all lie in B(p_s, 5s) subset B(p_1, (6*15+1) r_1) subset 100 B_1
        ratio = 6 * 15 + 1
        log.append(f"containment: B(5s) within {ratio} B_1 <= 100 B_1 for radii in [s/15, 2s]")
        eta = K * K
        log.append("sum|B_i| <= K sum|B_i/6| <= K |100 B_1| <= K^2 |B_1|  =>  "
                   f"eta = K^2 = {mpmath.nstr(eta, 6)}")

        gamma = eta / mpmath.log(2)
        log.append("layer depth: d <= 1 + eta*(log2(1/(100 r)) + 1) <= (eta/ln 2) ln(1/r) "
                   f"for r <= 1/100  =>  gamma = {mpmath.nstr(gamma, 6)}")

        c_core = K
        log.append("|L(d)| <= sum |10B_j| <= K sum |B_j/10| = K |Core(d)|")
        c_env = K
        log.append("|L1(l)| <= sum |3B_i| <= K sum |B_i| = K |L(l)|")
        c_prime = 1 / (eta * c_core * c_env)
        log.append("F(l)-F(l+1) >= |Core(l)|/eta >= |L(l)|/(eta K) >= |L1(l)|/(eta K^2) >= c' F(l)"
                   f"  =>  c' = {mpmath.nstr(c_prime, 6)}")
        alpha = -mpmath.log1p(-c_prime)
        log.append(f"alpha = -ln(1-c') = {mpmath.nstr(alpha, 12)}")

        c_radius = mpf(2) / 100
        if beta is None:
            beta_mp = mpmath.log(2) / eta
            log.append("d balls through one point, <= eta per octave below 1/100: "
                       "r_1 <= (1/100) 2^-(ceil(d/eta)-1) <= (2/100) 2^(-d/eta)  =>  "
                       f"beta = ln2/eta = {mpmath.nstr(beta_mp, 6)}, C_radius = 2/100")
        else:
            beta_mp = mpf(beta)
            log.append(f"beta override = {mpmath.nstr(beta_mp, 6)} (sensitivity run; "
                       "radius bound no longer implied by the octave count)")

        k = mpf(n) / 2
        ck = max(mpf(1), mpf(2) ** (k - 1))
        S0 = 1 / (-mpmath.expm1(-alpha))
        Sk = (k / (mpmath.e * alpha)) ** k + mpmath.gamma(k + 1) / alpha ** (k + 1)
        log.append(f"tail sums: S0 = 1/(1-e^-alpha) = {mpmath.nstr(S0, 6)}, "
                   f"S_k = (k/(e alpha))^k + Gamma(k+1)/alpha^(k+1) = {mpmath.nstr(Sk, 6)}, k = n/2")
        g = _sup_r_log_power(k, mpf(1) / 100)
        theta = ((1 + K * ck * S0) * ck * (gamma ** k * g + (eta + 2) ** k / 100)
                 + K * ck * Sk / 100)
        log.append("sum_{x in B} w m^(n/2) <= |B| [(m0+2)^k (1 + K c_k S0) + K c_k S_k], "
                   "m0 = gamma ln(1/r) + eta; sup_r r*T(r) = "
                   f"{mpmath.nstr(theta, 6)}")
        c5 = mpf(2) ** n * mpf(10) ** (2 * n + 6) * c_radius * theta
        log.append("u(F) <= 2^n |B_1| T(r_1) <= 2^n 10^(2n+6) V(1) r_1^(n+3) T(r_1) "
                   f"<= C V(1) r_1^(n+1) e^(-beta d)  =>  C_lemma5 = {mpmath.nstr(c5, 6)}")
        mM = gamma * mpmath.log(100) + eta
        c_total = mpf(2) ** n * ((mM + 1) ** k + ck * ((mM + 2) ** k * S0 + Sk))
        log.append(f"total image: m0 = gamma ln 100 + eta, C_total = {mpmath.nstr(c_total, 6)}")

        exact = {name: mpmath.nstr(val, 17) for name, val in [
            ("growth", K), ("eta", eta), ("gamma", gamma), ("alpha", alpha),
            ("c_prime", c_prime), ("beta", beta_mp), ("C_radius", c_radius),
            ("C_lemma5", c5), ("C_total", c_total)]}
        return ConstantsTable(
            n=n, growth=float(K), eta=float(eta), gamma=float(gamma), alpha=float(alpha),
            c_prime=float(c_prime), beta=float(beta_mp), C_radius=float(c_radius),
            C_lemma5=float(c5), C_total=float(c_total), derivation_log=log, exact=exact)
