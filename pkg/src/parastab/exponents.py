"""Exact exponent bookkeeping for Lebesgue-space admissibility of reaction terms.

All quantities are ``fractions.Fraction`` or the sentinel ``INF``.  Every
formula is evaluated through reciprocals 1/p*, 1/p, 1/r so that infinite
exponents (and p* = inf in dimension one) need no special cases.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace
from fractions import Fraction

HALF = Fraction(1, 2)


@functools.total_ordering
class _Infinity:
    """+infinity, comparable with Fractions; 1/INF = 0 via :func:`recip`."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("parastab-inf")

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self

    def __float__(self):
        return float("inf")

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def rational(x) -> Fraction | _Infinity:
    """Parse ints, Fractions, "num/den" strings, and "inf"."""
    if x is INF:
        return INF
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "+inf", "infinity", "∞"):
            return INF
        return Fraction(s)
    if isinstance(x, float):
        if x == float("inf"):
            return INF
        raise TypeError("floats are not accepted; pass an exact rational such as '3/2'")
    return Fraction(x)


def recip(x) -> Fraction | _Infinity:
    if x is INF:
        return Fraction(0)
    if x == 0:
        return INF
    return 1 / Fraction(x)


def fmt(x) -> str:
    """Canonical "num/den" string (integers as "n/1"), or "inf"."""
    if x is None:
        return ""
    if x is INF:
        return "inf"
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def default_p_star(d: int):
    """2d/(d - 2) for d >= 3, inf for d = 1; d = 2 has no canonical value."""
    if d >= 3:
        return Fraction(2 * d, d - 2)
    if d == 1:
        return INF
    return None


@dataclass(frozen=True)
class ExponentQuery:
    d: int
    p_star: Fraction | _Infinity | None = None
    p: Fraction | _Infinity | None = None
    r: Fraction | _Infinity | None = None
    sigma: Fraction | None = None
    gamma: Fraction | None = None
    alpha: Fraction = Fraction(0)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")
        object.__setattr__(self, "d", int(self.d))
        for name in ("p_star", "p", "r", "sigma", "gamma", "alpha"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, rational(v))
        if self.p_star is None:
            ps = default_p_star(self.d)
            if ps is None:
                raise ValueError("d = 2 needs an explicit p_star > 2")
            object.__setattr__(self, "p_star", ps)
        if not self.p_star > 2:
            raise ValueError("p_star must exceed 2")
        if self.sigma is not None and (self.sigma is INF or self.sigma <= 0):
            raise ValueError("sigma must be a positive rational")
        if self.r is not None and self.r < 1:
            raise ValueError("r must be >= 1")
        if self.alpha not in (0, HALF):
            raise ValueError("alpha must be 0 or 1/2")

    @property
    def s(self) -> Fraction:
        """1/p*."""
        return recip(self.p_star)

    def need(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ValueError(f"query needs {', '.join(missing)}")


def _gamma(q: ExponentQuery, lo, hi):
    q.need("gamma")
    g = q.gamma
    if g is INF or not lo <= g <= hi:
        raise ValueError(f"gamma = {fmt(g)} outside [{fmt(lo)}, {fmt(hi)}]")
    return g


# -- embedding exponents -----------------------------------------------------

def q_gamma_low(q: ExponentQuery) -> Fraction:
    """(1/2 + gamma - 2 gamma/p*)^-1 for gamma in [0, 1/2]."""
    g = _gamma(q, 0, HALF)
    return recip(HALF + g - 2 * g * q.s)


def q_gamma_high(q: ExponentQuery) -> Fraction:
    """(1 - (2 gamma - 1)/p - (2 - 2 gamma)/p*)^-1 for gamma in [1/2, 1], p finite."""
    g = _gamma(q, HALF, 1)
    q.need("p")
    if q.p is INF:
        raise ValueError("p must be finite")
    return recip(1 - (2 * g - 1) * recip(q.p) - (2 - 2 * g) * q.s)


def p_gamma_low(q: ExponentQuery):
    """(2 gamma/p* + (1 - 2 gamma)/p)^-1 for gamma in [0, 1/2]."""
    g = _gamma(q, 0, HALF)
    q.need("p")
    return recip(2 * g * q.s + (1 - 2 * g) * recip(q.p))


def p_gamma_high(q: ExponentQuery):
    """(gamma - 1/2 + (2 - 2 gamma)/p*)^-1 for gamma in [1/2, 1]."""
    g = _gamma(q, HALF, 1)
    return recip(g - HALF + (2 - 2 * g) * q.s)


def q_gamma(q: ExponentQuery, gamma=None):
    """q_gamma on either branch; the two agree (= p*') at gamma = 1/2."""
    if gamma is not None:
        q = replace(q, gamma=rational(gamma))
    q.need("gamma")
    return q_gamma_low(q) if q.gamma <= HALF else q_gamma_high(q)


# -- case analysis -------------------------------------------------------------

CASES = ("L2", "L2p", "W1")


@dataclass(frozen=True)
class Violation:
    name: str
    inequality: str
    detail: str = ""

    def __str__(self):
        return f"{self.name}: requires {self.inequality}" + (f" ({self.detail})" if self.detail else "")


@dataclass(frozen=True)
class GammaBounds:
    case: str
    gamma0: Fraction | None
    gamma1: Fraction | None
    lower: Fraction | None
    upper: Fraction
    violations: tuple = field(default_factory=tuple)

    @property
    def nonempty(self) -> bool:
        return self.lower is not None and self.lower < self.upper

    @property
    def feasible(self) -> bool:
        return self.nonempty and not self.violations

    def contains(self, gamma) -> bool:
        g = rational(gamma)
        return self.feasible and self.lower <= g < self.upper


def _l2_conditions(q: ExponentQuery) -> list[Violation]:
    q.need("r", "sigma")
    ir, s, sigma = recip(q.r), q.s, q.sigma
    v = []
    if q.d == 1:
        if not ir <= HALF:
            v.append(Violation("r-L2", "r >= 2"))
        if not sigma <= 2:
            v.append(Violation("sigma-L2", "sigma <= 2"))
    elif q.d == 2:
        if not ir < HALF:
            v.append(Violation("r-L2", "r > 2"))
        if not sigma < 2:
            v.append(Violation("sigma-L2", "sigma < 2"))
    else:
        if not ir <= (1 - 2 * s) / 2:
            v.append(Violation("r-L2", "r >= 2 p*/(p* - 2)", f"= {fmt(recip((1 - 2 * s) / 2))}"))
        if not sigma <= 2 - 2 * s:
            v.append(Violation("sigma-L2", "sigma <= 2 - 2/p*", f"= {fmt(2 - 2 * s)}"))
    return v


def _l2p_gammas(q: ExponentQuery):
    s, ip, ir = q.s, recip(q.p), recip(q.r)
    den = 4 * (s - ip)
    g0 = ((q.sigma - 2) - 2 * ip + 4 * s) / den
    g1 = (2 * ir - (1 + 2 * ip - 4 * s)) / den
    return g0, g1


def _w1_gammas(q: ExponentQuery):
    s, ir = q.s, recip(q.r)
    g0 = (2 * q.sigma * s - 1) / (2 - 4 * s)
    g1 = ir / (1 - 2 * s) - HALF
    return g0, g1


def gamma_bounds(q: ExponentQuery, case: str) -> GammaBounds:
    """Lower exponents and the admissible gamma interval for one case.

    L2: gamma in [1/2, 1), both thresholds sit at 1/2.
    L2p: gamma in [max(gamma0, gamma1, 1/2), 1), needs a finite p > p*.
    W1: gamma in [max(0, gamma0, gamma1), 1/2).
    Violated hypotheses are listed; gamma0 and gamma1 are still reported.
    """
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}")
    q.need("r", "sigma")
    if case == "L2":
        v = _l2_conditions(q)
        return GammaBounds(case, HALF, HALF, HALF, Fraction(1), tuple(v))
    if case == "L2p":
        q.need("p")
        v = []
        if q.p is INF or not recip(q.p) < q.s:
            v.append(Violation("p-range", "p* < p < inf"))
            return GammaBounds(case, None, None, None, Fraction(1), tuple(v))
        ip, ir = recip(q.p), recip(q.r)
        if not ir < HALF - ip:
            v.append(Violation("r-L2p", "r > 2p/(p - 2)", f"= {fmt(recip(HALF - ip))}"))
        if not q.sigma < 2 - 2 * ip:
            v.append(Violation("sigma-L2p", "sigma < 2 - 2/p", f"= {fmt(2 - 2 * ip)}"))
        g0, g1 = _l2p_gammas(q)
        return GammaBounds(case, g0, g1, max(g0, g1, HALF), Fraction(1), tuple(v))
    v = []
    s, ir = q.s, recip(q.r)
    if not ir < 1 - 2 * s:
        v.append(Violation("r-W1", "r > p*/(p* - 2)", f"= {fmt(recip(1 - 2 * s))}"))
    if not q.sigma * s < 1 - s:
        v.append(Violation("sigma-W1", "sigma < p* - 1", f"= {fmt(recip(s) - 1) if s else 'inf'}"))
    g0, g1 = _w1_gammas(q)
    return GammaBounds(case, g0, g1, max(Fraction(0), g0, g1), HALF, tuple(v))


# -- weak eigenvalue thresholds -------------------------------------------------

def gamma_tilde_p(q: ExponentQuery):
    """1/2 (1/2 - 1/r - 1/p) / (1/p* - 1/p); requires 2 < r < 2p*/(p* - 2) and p >= 2r/(r - 2)."""
    q.need("r", "p")
    s, ir, ip = q.s, recip(q.r), recip(q.p)
    if not (1 - 2 * s) / 2 < ir < HALF:
        raise ValueError(f"r = {fmt(q.r)} outside (2, 2p*/(p* - 2))")
    if not ip <= HALF - ir:
        raise ValueError(f"p = {fmt(q.p)} below 2r/(r - 2) = {fmt(recip(HALF - ir))}")
    return HALF * (HALF - ir - ip) / (s - ip)


@dataclass(frozen=True)
class WeakEvThresholds:
    gamma_tilde_0: Fraction | None
    gamma_tilde_p: Fraction | None
    gamma_tilde_inf: Fraction | _Infinity | None


def weakev_thresholds(q: ExponentQuery) -> WeakEvThresholds:
    """Upper gamma limits under which weak eigenvalues are eigenvalues.

    gamma_tilde_0 = 1 - p*/((p* - 2) r) (1 when r = inf); gamma_tilde_p and
    gamma_tilde_inf = (r - 2) p*/(4r) are None outside 2 < r < 2p*/(p* - 2)
    (gamma_tilde_p also when p is absent or below 2r/(r - 2)).
    """
    q.need("r")
    s, ir = q.s, recip(q.r)
    g0 = 1 - ir / (1 - 2 * s)
    in_range = (1 - 2 * s) / 2 < ir < HALF
    gp = None
    if q.p is not None and in_range and recip(q.p) <= HALF - ir:
        gp = gamma_tilde_p(q)
    ginf = None
    if in_range:
        ginf = INF if s == 0 else HALF * (HALF - ir) / s
    return WeakEvThresholds(g0, gp, ginf)


@dataclass(frozen=True)
class OverlapResult:
    holds: bool
    witness: Fraction | None
    ceiling: Fraction | None
    reason: str = ""


def overlap_check(q: ExponentQuery) -> OverlapResult:
    """Whether the V-scale reaction estimate and the weak-eigenvalue reduction share a gamma.

    Uses the default p* and the integrability of D(A) in L_p with p = 2d/(d-4)
    (d >= 5) or every finite p (d = 3, 4).  The witness is the smallest
    admissible gamma of the W1 case.
    """
    if q.d < 3:
        raise ValueError("overlap check needs d >= 3")
    q.need("r", "sigma")
    d, r, sigma = q.d, q.r, q.sigma
    q = replace(q, p_star=Fraction(2 * d, d - 2))
    if r is INF:
        return OverlapResult(False, None, None, "r must be finite")
    if d >= 5:
        if not Fraction(2 * d, 3) <= r < d:
            return OverlapResult(False, None, None, f"r outside [2d/3, d) = [{fmt(Fraction(2 * d, 3))}, {d})")
        bound = ((d + 4) * r - 2 * d) / ((d - 2) * r)
        if not sigma <= bound:
            return OverlapResult(False, None, None, f"sigma > {fmt(bound)}")
        ceiling = 1 - Fraction(d) / (2 * r)
    else:
        lo = Fraction(d * d, 2 * d - 2)
        if not lo < r < d:
            return OverlapResult(False, None, None, f"r outside ({fmt(lo)}, {d})")
        bound = (d * d * r - 4 * d) / ((d - 2) ** 2 * r)
        if not sigma < bound:
            return OverlapResult(False, None, None, f"sigma >= {fmt(bound)}")
        ceiling = (r - 2) * q.p_star / (4 * r)
    gb = gamma_bounds(q, "W1")
    witness = gb.lower
    ok = gb.feasible and (witness <= ceiling if d >= 5 else witness < ceiling)
    return OverlapResult(ok, witness if ok else None, ceiling, "" if ok else "W1 interval misses the ceiling")


# -- Lipschitz variant -------------------------------------------------------------

LIP_CASES = ("LL2", "LL2p", "LW1")


@dataclass(frozen=True)
class LipReport:
    case: str
    p_tilde: Fraction | _Infinity
    q_gamma: Fraction | None
    sigma_bound: Fraction | _Infinity
    sigma_strict: bool
    gamma: Fraction | None
    gamma_interval: tuple
    admissible: bool
    violations: tuple = ()

    @property
    def holder_limit(self):
        """p_tilde / q_gamma, the largest sigma the Hoelder step allows."""
        if self.q_gamma is None:
            return None
        return INF if self.p_tilde is INF else self.p_tilde / self.q_gamma


def _lip_setup(q: ExponentQuery, case: str):
    """(p_tilde, sigma bound, strict, lower gamma or None, upper gamma)."""
    s = q.s
    if case == "LL2":
        if q.d == 2:
            return Fraction(2), Fraction(2), True, HALF, Fraction(1)
        return Fraction(2), 2 - 2 * s, False, HALF, Fraction(1)
    if case == "LL2p":
        q.need("p")
        if q.p is INF or not recip(q.p) < s:
            raise ValueError("LL2p needs a finite p > p*")
        ip = recip(q.p)
        lo = None
        if q.sigma is not None:
            lo = max(Fraction(0), ((q.sigma - 2) - 2 * ip + 4 * s) / (4 * (s - ip)))
        return Fraction(2), 2 - 2 * ip, True, lo, Fraction(1)
    lo = None
    if q.sigma is not None:
        lo = max(Fraction(0), (2 * q.sigma * s - 1) / (2 - 4 * s))
    return q.p_star, (recip(s) - 1 if s else INF), True, lo, HALF


def lip_admissible(q: ExponentQuery, case: str) -> LipReport:
    """Exponents for the local Hoelder-Lipschitz transfer of a growth condition.

    LL2 is evaluated at gamma = 1/2, the binding end of [1/2, 1), where
    p_tilde/q_gamma equals the sigma bound.  The other cases use the query's
    gamma, or the lower end of their interval when none is given.
    """
    if case not in LIP_CASES:
        raise ValueError(f"case must be one of {LIP_CASES}")
    p_tilde, bound, strict, lo, hi = _lip_setup(q, case)
    viol = []
    if case == "LL2":
        gamma = HALF
    else:
        gamma = q.gamma if q.gamma is not None else lo
        if gamma is not None and lo is not None and not lo <= gamma < hi:
            viol.append(Violation("gamma-range", f"{fmt(lo)} <= gamma < {fmt(hi)}"))
    qg = None
    if gamma is not None and 0 <= gamma <= 1:
        try:
            qg = q_gamma(q, gamma)
        except ValueError:
            qg = None
    if q.sigma is None:
        viol.append(Violation("sigma", "sigma given"))
    else:
        if not (q.sigma < bound if strict else q.sigma <= bound):
            viol.append(Violation("sigma-bound", f"sigma {'<' if strict else '<='} {fmt(bound)}"))
    report = LipReport(case, p_tilde, qg, bound, strict, gamma, (lo, hi), False)
    limit = report.holder_limit
    if q.sigma is not None and limit is not None and not q.sigma <= limit:
        viol.append(Violation("holder-gate", f"sigma <= p_tilde/q_gamma = {fmt(limit)}"))
    return replace(report, admissible=not viol, violations=tuple(viol))


# -- tables ------------------------------------------------------------------------

TABLE_COLUMNS = ("case", "d", "p_star", "p", "r", "sigma", "gamma", "q_gamma", "p_gamma",
                 "gamma0", "gamma1", "gamma_lower", "gamma_upper", "feasible", "violations")


def exponent_table(q: ExponentQuery, cases=CASES) -> list[dict]:
    """One row per case with every exponent as a "num/den" string."""
    rows = []
    for case in cases:
        row = dict.fromkeys(TABLE_COLUMNS, "")
        row.update(case=case, d=str(q.d), p_star=fmt(q.p_star), p=fmt(q.p), r=fmt(q.r),
                   sigma=fmt(q.sigma), gamma=fmt(q.gamma))
        if q.gamma is not None:
            g = q.gamma
            try:
                row["q_gamma"] = fmt(q_gamma(q))
            except ValueError:
                pass
            try:
                row["p_gamma"] = fmt(p_gamma_low(q) if g < HALF or (g == HALF and q.p is not None)
                                     else p_gamma_high(q))
            except ValueError:
                pass
        if q.r is not None and q.sigma is not None:
            gb = gamma_bounds(q, case) if case != "L2p" or q.p is not None else None
            if gb is not None:
                row.update(gamma0=fmt(gb.gamma0), gamma1=fmt(gb.gamma1), gamma_lower=fmt(gb.lower),
                           gamma_upper=fmt(gb.upper), feasible=str(gb.feasible).lower(),
                           violations="; ".join(str(v) for v in gb.violations))
        rows.append(row)
    return rows
