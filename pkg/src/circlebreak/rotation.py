"""Rotation numbers: estimation, certification, and translation tuning.

The Farey/Stern-Brocot machinery rests on one classical fact: for the q-th
iterate of a degree-one lift, f^q(0) >= p implies rho >= p/q and
f^q(0) <= p implies rho <= p/q (the displacement of a monotone commuting
map at a single point bounds its translation number against integers).  So
the sign of f^q(0) - p drives an exact interval bisection over rationals,
with all fraction arithmetic in exact integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NotBracketed, PrecisionBudgetExceeded, TolUnreachable
from .maps import CircleMap, evaluate, step_with_winding
from .numerics import DEFAULT_ORBIT_CAP, eps_of, floor, to_circle

# |f^q(0) - p| at or below this many epsilons-times-q is treated as an exact
# hit, i.e. the rotation number is declared rational.
RATIONAL_CUTOFF = 4.0


@dataclass(frozen=True)
class ContinuedFraction:
    """Partial quotients k_1, k_2, ... of a number in (0, 1), with the
    convergents p_n/q_n built by the standard recursion

        q_{n+1} = k_{n+1} q_n + q_{n-1},   q_0 = 1, q_1 = k_1,

    stored from n = 0, so ``convergents[n] == (p_n, q_n)``.
    """

    quotients: tuple
    convergents: tuple

    @classmethod
    def from_quotients(cls, ks) -> "ContinuedFraction":
        ks = tuple(int(k) for k in ks)
        if any(k < 1 for k in ks):
            raise ValueError("partial quotients must be >= 1")
        p_prev, q_prev = 1, 0  # (p_{-1}, q_{-1})
        p, q = 0, 1  # (p_0, q_0)
        convs = [(p, q)]
        for k in ks:
            p, p_prev = k * p + p_prev, p
            q, q_prev = k * q + q_prev, q
            convs.append((p, q))
        return cls(quotients=ks, convergents=tuple(convs))

    @property
    def depth(self) -> int:
        return len(self.quotients)

    def q(self, n: int) -> int:
        return self.convergents[n][1]

    def p(self, n: int) -> int:
        return self.convergents[n][0]

    def fraction(self, n: int | None = None) -> Fraction:
        n = self.depth if n is None else n
        pn, qn = self.convergents[n]
        return Fraction(pn, qn)

    @property
    def value(self) -> float:
        return float(self.fraction())


def cf_quotients_of_fraction(fr: Fraction):
    """Finite continued fraction of a rational in (0, 1), exact."""
    if not 0 < fr < 1:
        raise ValueError("expected a fraction strictly between 0 and 1")
    ks = []
    a, b = fr.numerator, fr.denominator
    # 1/(a/b) = b/a; Euclid on (b, a).
    num, den = b, a
    while den:
        ks.append(num // den)
        num, den = den, num % den
    return ks


def cf_expand_convergents(rho, n_max: int = 40, residual_floor: float | None = None) -> ContinuedFraction:
    """Continued fraction of a number in (0, 1) by the Gauss map.

    Truncates when the fractional residual drops below ``residual_floor``
    (default 1e3 machine epsilons of the input type): past that point the
    floating representation carries no more quotients.
    """
    if not 0 < rho < 1:
        raise ValueError("rho must lie strictly between 0 and 1")
    if residual_floor is None:
        residual_floor = 1e3 * eps_of(rho)
    ks = []
    x = rho
    for _ in range(n_max):
        if x < residual_floor:
            break
        inv = 1 / x
        k = floor(inv)
        if k < 1:
            break
        ks.append(int(k))
        x = inv - k
    if not ks:
        raise ValueError("no partial quotients resolvable at this precision")
    return ContinuedFraction.from_quotients(ks)


@dataclass(frozen=True)
class RotationEstimate:
    """An estimate with a certified enclosure: lower <= rho <= upper, where
    ``value`` in [0, 1) is the reported representative.  ``rational`` holds
    (p, q) when the bisection certified an exact rational hit."""

    value: float
    lower: float
    upper: float
    method: str
    rational: tuple | None = None

    @property
    def width(self) -> float:
        return self.upper - self.lower


class OrbitTracker:
    """Lazily extended forward orbit of 0 with exact winding bookkeeping.

    ``sign(p, q)`` reports the certified sign of f^q(0) - p, with 0 meaning
    "within the rational cutoff of an exact hit".
    """

    def __init__(self, m: CircleMap, cap: int | None = None):
        self.m = m
        self.cap = DEFAULT_ORBIT_CAP if cap is None else cap
        self.points = [to_circle(0.0 * m.translation)]
        self.winds = [0]

    def extend_to(self, q: int):
        if q > self.cap:
            raise PrecisionBudgetExceeded(
                f"orbit length {q} exceeds cap {self.cap}"
            )
        x = self.points[-1]
        w = self.winds[-1]
        m = self.m
        while len(self.points) <= q:
            x, w = step_with_winding(m, x, w)
            self.points.append(x)
            self.winds.append(w)

    def lift_minus(self, p: int, q: int):
        """f^q(0) - p, with the integer part subtracted exactly."""
        self.extend_to(q)
        return self.points[q] + (self.winds[q] - p)

    def sign(self, p: int, q: int) -> int:
        s = self.lift_minus(p, q)
        if abs(s) <= RATIONAL_CUTOFF * eps_of(s) * q:
            return 0
        return 1 if s > 0 else -1


def rho_iterate_estimate(m: CircleMap, n: int, cap: int | None = None) -> RotationEstimate:
    """Plain Birkhoff estimate f^n(0)/n with the certified +-1/n enclosure."""
    if n < 1:
        raise ValueError("n must be >= 1")
    tr = OrbitTracker(m, cap)
    tr.extend_to(n)
    raw = (tr.points[n] + tr.winds[n]) / n
    shift = floor(raw)
    return RotationEstimate(
        value=float(to_circle(raw)),
        lower=float(raw - 1.0 / n - shift),
        upper=float(raw + 1.0 / n - shift),
        method="iterate",
    )


def _quotients_from_moves(moves) -> list:
    """Partial quotients read off a Stern-Brocot descent path.

    The path toward x in (0,1) spells L^{k1-1} R^{k2} L^{k3} R^{k4} ...; only
    finished runs are reported (the last run may still be growing).
    """
    if not moves:
        return []
    runs = []
    cur, cnt = moves[0], 1
    for mv in moves[1:]:
        if mv == cur:
            cnt += 1
        else:
            runs.append((cur, cnt))
            cur, cnt = mv, 1
    # the final (cur, cnt) run is unfinished and is dropped
    complete = runs
    ks = []
    if not complete:
        return ks
    if complete[0][0] == "L":
        # path L^{k1-1} R^{k2} L^{k3} ...
        ks.append(complete[0][1] + 1)
        rest = complete[1:]
    else:
        # an immediate R means k1 = 1 and the R-run is k2 in full
        ks.append(1)
        rest = complete
    ks.extend(cnt for _, cnt in rest)
    return ks


def rho_farey(m: CircleMap, depth: int = 60, cap: int | None = None):
    """Certified rotation-number enclosure by Farey mediant bisection.

    Returns (RotationEstimate, ContinuedFraction).  Each refinement replaces
    one end of a Farey pair by the mediant according to the sign of
    f^q(0) - p; an exact hit (within the rational cutoff) certifies a
    rational rotation number and stops.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    tr = OrbitTracker(m, cap)
    # integer part: f(0) in [m0, m0+1]
    tr.extend_to(1)
    f0 = tr.points[1] + tr.winds[1]
    m0 = floor(f0)
    if tr.sign(m0, 1) == 0:
        cfr = ContinuedFraction.from_quotients([1])  # placeholder; rho integer
        est = RotationEstimate(0.0, 0.0, 0.0, "farey", rational=(m0, 1))
        return est, cfr
    pl, ql = m0, 1
    ph, qh = m0 + 1, 1
    moves = []
    rational = None
    for _ in range(depth):
        pm, qm = pl + ph, ql + qh
        s = tr.sign(pm, qm)
        if s == 0:
            rational = (pm, qm)
            break
        if s > 0:
            pl, ql = pm, qm
            moves.append("R")
        else:
            ph, qh = pm, qm
            moves.append("L")
    if rational is not None:
        p, q = rational
        fr = Fraction(p - m0 * q, q)
        if fr == 0:
            cfr = ContinuedFraction.from_quotients([1])
            est = RotationEstimate(0.0, 0.0, 0.0, "farey", rational=rational)
            return est, cfr
        ks = cf_quotients_of_fraction(fr)
        cfr = ContinuedFraction.from_quotients(ks)
        v = float(fr)
        return RotationEstimate(v, v, v, "farey", rational=rational), cfr
    lo = Fraction(pl - m0 * ql, ql)
    hi = Fraction(ph - m0 * qh, qh)
    mid = (lo + hi) / 2
    ks = _quotients_from_moves(moves)
    cfr = ContinuedFraction.from_quotients(ks) if ks else ContinuedFraction((), ((0, 1),))
    est = RotationEstimate(
        value=float(mid), lower=float(lo), upper=float(hi), method="farey"
    )
    return est, cfr


@dataclass(frozen=True)
class TuneResult:
    translation: float
    rho: RotationEstimate
    bisections: int
    certified_tol: float


def _compare_to_target(m, target_cf: ContinuedFraction, tol, cap):
    """Certified comparison of rho(m) against an irrational target.

    Returns ("low" | "high" | "within" | "cap", achieved enclosure width).
    Uses the target's convergent pairs as Farey test rationals: consecutive
    convergents bracket the target, and one-point sign tests place rho(m)
    relative to the bracket.
    """
    tr = OrbitTracker(m, cap)
    convs = target_cf.convergents
    width = 1.0
    for n in range(1, len(convs)):
        (pa, qa), (pb, qb) = convs[n - 1], convs[n]
        fa = Fraction(pa, qa)
        fb = Fraction(pb, qb)
        lo_f, hi_f = (fa, fb) if fa < fb else (fb, fa)
        q_lo, q_hi = (qa, qb) if fa < fb else (qb, qa)
        p_lo, p_hi = (lo_f.numerator, hi_f.numerator)
        if max(q_lo, q_hi) > tr.cap:
            return "cap", width
        if tr.sign(p_lo, q_lo) <= 0:
            return "low", width
        if tr.sign(p_hi, q_hi) >= 0:
            return "high", width
        width = float(hi_f - lo_f)
        if width <= tol:
            return "within", width
    return "cap", width


def tune_translation(
    m: CircleMap,
    target_rho,
    tol: float = 1e-10,
    cap: int | None = None,
    max_bisections: int = 200,
    cf_depth: int = 60,
) -> TuneResult:
    """Find t with |rho(f + t) - target| <= tol by certified bisection.

    ``target_rho`` must behave irrationally at working precision (continued
    fraction depth at least 8); each candidate t is compared to the target
    through exact Farey tests, so the returned tolerance is certified, not
    just observed.
    """
    target = float(target_rho)
    if not 0 < target < 1:
        raise ValueError("target rotation number must lie in (0, 1)")
    if tol < 1e-12:
        raise ValueError("tolerances below 1e-12 are not certifiable in binary64")
    tcf = cf_expand_convergents(target, cf_depth)
    if tcf.depth < 8:
        raise ValueError(
            "target looks rational at working precision (CF depth "
            f"{tcf.depth} < 8); tuning needs an irrational-like target"
        )
    base = m.with_translation(0.0)
    # Displacement range of the base lift bounds rho(f_t) - t.
    grid = [i / 512 for i in range(512)] + [b.location for b in base.breaks]
    disps = [evaluate(base, x) - x for x in grid]
    dmin, dmax = min(disps), max(disps)
    t_lo = target - dmax - 1e-9
    t_hi = target - dmin + 1e-9

    def oracle(t):
        return _compare_to_target(m.with_translation(t), tcf, tol, cap)

    r_lo, _ = oracle(t_lo)
    r_hi, _ = oracle(t_hi)
    for _ in range(4):
        if r_lo in ("low", "within"):
            break
        t_lo -= 0.5
        r_lo, _ = oracle(t_lo)
    for _ in range(4):
        if r_hi in ("high", "within"):
            break
        t_hi += 0.5
        r_hi, _ = oracle(t_hi)
    if r_lo == "within":
        est = _estimate_from_target(tcf, tol)
        return TuneResult(t_lo, est, 0, tol)
    if r_hi == "within":
        est = _estimate_from_target(tcf, tol)
        return TuneResult(t_hi, est, 0, tol)
    if r_lo != "low" or r_hi != "high":
        raise NotBracketed(
            f"could not bracket target {target!r} within [{t_lo}, {t_hi}]"
        )
    best_width = 1.0
    for it in range(1, max_bisections + 1):
        t_mid = 0.5 * (t_lo + t_hi)
        res, width = oracle(t_mid)
        best_width = min(best_width, width)
        if res == "within":
            est = _estimate_from_target(tcf, tol)
            return TuneResult(t_mid, est, it, tol)
        if res == "low":
            t_lo = t_mid
        elif res == "high":
            t_hi = t_mid
        else:  # cap
            raise TolUnreachable(
                f"evaluation budget exhausted at enclosure width {width:g}",
                achieved=width,
            )
    raise TolUnreachable(
        f"no certification after {max_bisections} bisections "
        f"(best enclosure width {best_width:g})",
        achieved=best_width,
    )


def _estimate_from_target(tcf: ContinuedFraction, tol) -> RotationEstimate:
    """Enclosure of the tuned rotation number from the deepest certified
    convergent bracket of the target."""
    for n in range(1, len(tcf.convergents)):
        fa = tcf.fraction(n - 1)
        fb = tcf.fraction(n)
        lo, hi = (fa, fb) if fa < fb else (fb, fa)
        if float(hi - lo) <= tol:
            return RotationEstimate(
                value=float((lo + hi) / 2),
                lower=float(lo),
                upper=float(hi),
                method="tuned",
            )
    lo = tcf.fraction(tcf.depth - 1)
    hi = tcf.fraction(tcf.depth)
    lo, hi = (lo, hi) if lo < hi else (hi, lo)
    return RotationEstimate(float((lo + hi) / 2), float(lo), float(hi), "tuned")


def norm_q_rho(q: int, rho) -> float:
    """Distance of q*rho to the nearest integer."""
    x = q * rho
    f = x - floor(x)
    return float(min(f, 1 - f))


def convergent_error(cf: ContinuedFraction, rho, n: int) -> float:
    """beta_n = |q_n rho - p_n| against the n-th convergent.

    Coincides with the nearest-integer distance for n >= 1; at n = 0
    the convergent is 0/1, so beta_0 = rho itself, which is what the
    rank-0 partition masses are.
    """
    pn, qn = cf.p(n), cf.q(n)
    return abs(qn * rho - pn)
