"""Circle homeomorphisms with at most two break points.

A map is handled through a degree-one lift f: R -> R, f(x+1) = f(x) + 1,
strictly increasing, with one-sided derivatives everywhere.  Three families
are provided:

* ``make_rotation``       rigid rotation, f(x) = x + t;
* ``make_pl_two_break``   piecewise-linear lift, two slopes meeting at break
                          points a and c, so the jump ratios satisfy
                          sigma(a) * sigma(c) = 1;
* ``make_pq_two_break``   piecewise-quadratic lift whose derivative is
                          piecewise linear, realising any prescribed jump
                          ratios sigma_a, sigma_c > 0, including
                          sigma_a * sigma_c != 1.

Both two-break families share a two-segment representation: the derivative
profile is affine on each of the arcs (a, c) and (c, a), so the lift is a
quadratic polynomial per segment and inverts in closed form.  The profile is
normalised so the derivative integrates to exactly 1 over a period, which is
what makes the lift degree one.  The translation parameter t only shifts
values; break locations and derivatives do not depend on it.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from .errors import (
    BreakCollision,
    InfeasibleDerivatives,
    InvalidGeometry,
    NotClassP,
    NotHomeomorphism,
    PrecisionBudgetExceeded,
)
from .numerics import (
    BREAK_CLEARANCE_EPS,
    DEFAULT_ORBIT_CAP,
    arc_length,
    eps_of,
    exp,
    floor,
    log,
    sqrt,
    to_circle,
    wraps_to_zero,
)

ROTATION = "rotation"
PL_TWO_BREAK = "pl_two_break"
PQ_TWO_BREAK = "pq_two_break"


@dataclass(frozen=True)
class BreakPoint:
    """A point where the one-sided derivatives of the lift differ.

    ``sigma`` is the jump ratio Df_-(x) / Df_+(x).
    """

    location: float  # circle coordinate in [0, 1)
    d_minus: float
    d_plus: float

    def __post_init__(self):
        if not (0 <= self.location < 1):
            raise InvalidGeometry(f"break location {self.location!r} not in [0, 1)")
        if self.d_minus <= 0 or self.d_plus <= 0:
            raise InvalidGeometry("one-sided derivatives must be positive")
        if self.d_minus == self.d_plus:
            raise InvalidGeometry("equal one-sided derivatives: not a break")

    @property
    def sigma(self):
        return self.d_minus / self.d_plus


@dataclass(frozen=True)
class MapStats:
    """Summary invariants of a class-P homeomorphism.

    v             total variation of log Df over the circle
    lam           the contraction base (1 + e^-v)^(-1/2) controlling how fast
                  dynamical-partition elements shrink
    sigma_product product of the jump ratios over all breaks
    """

    v: float
    lam: float
    sigma_product: float


@dataclass(frozen=True)
class CircleMap:
    """Immutable two-segment piecewise-polynomial lift (or a rotation).

    Segment s covers [seg_pos[s], seg_pos[s+1]] of the fundamental domain,
    which starts at the smaller break location.  ``seg_val`` holds base lift
    values (translation excluded) at the three boundary positions;
    ``seg_d0``/``seg_d1`` are the derivative at segment start/end and
    ``seg_curv`` the constant second derivative on the segment.
    """

    kind: str
    translation: float
    breaks: tuple = ()
    seg_pos: tuple = ()
    seg_val: tuple = ()
    seg_d0: tuple = ()
    seg_d1: tuple = ()
    seg_curv: tuple = ()

    def with_translation(self, t) -> "CircleMap":
        import dataclasses

        return dataclasses.replace(self, translation=t)


def make_rotation(translation) -> CircleMap:
    return CircleMap(kind=ROTATION, translation=translation)


def _build_two_segment(kind, a, c, da_plus, dc_minus, dc_plus, da_minus, translation):
    """Assemble a two-break map from its one-sided derivative values.

    Segment data lives on [p0, p0+1) with p0 = min(a, c).  The base lift is
    anchored at f(a) = a; the translation family then shifts values only.
    """
    for d in (da_plus, dc_minus, dc_plus, da_minus):
        if d <= 0:
            raise InfeasibleDerivatives(
                "closure forced a non-positive one-sided derivative"
            )
    len_ac = arc_length(a, c)
    len_ca = 1 - len_ac
    # Derivative is affine on each arc: from Df_+(start) to Df_-(end).
    if a < c:
        p0, p1 = a, c
        segs = ((da_plus, dc_minus, len_ac), (dc_plus, da_minus, len_ca))
        anchor_seg = 0  # value anchored at p0 == a
    else:
        p0, p1 = c, a
        segs = ((dc_plus, da_minus, len_ca), (da_plus, dc_minus, len_ac))
        anchor_seg = 1  # value anchored at p1 == a
    incr = tuple(L * (d0 + d1) / 2 for d0, d1, L in ((s[0], s[1], s[2]) for s in segs))
    closure = incr[0] + incr[1]
    if abs(closure - 1) > 64 * eps_of(closure):
        raise InfeasibleDerivatives(f"derivative profile integrates to {closure!r}")
    if anchor_seg == 0:
        v0 = p0
        v1 = v0 + incr[0]
    else:
        v1 = p1
        v0 = v1 - incr[0]
    curv = tuple((d1 - d0) / L for d0, d1, L in segs)
    brk_a = BreakPoint(location=a, d_minus=da_minus, d_plus=da_plus)
    brk_c = BreakPoint(location=c, d_minus=dc_minus, d_plus=dc_plus)
    return CircleMap(
        kind=kind,
        translation=translation,
        breaks=(brk_a, brk_c),
        seg_pos=(p0, p1, p0 + 1),
        seg_val=(v0, v1, v0 + 1),
        seg_d0=(segs[0][0], segs[1][0]),
        seg_d1=(segs[0][1], segs[1][1]),
        seg_curv=curv,
    )


def make_pl_two_break(a, c, slope_ratio, translation=0.0) -> CircleMap:
    """Piecewise-linear lift with slope s1 on arc (a, c) and s2 on (c, a),
    s1/s2 = slope_ratio.  The jump ratios multiply to 1 by construction."""
    a = to_circle(a)
    c = to_circle(c)
    if a == c:
        raise InvalidGeometry("break points coincide")
    if slope_ratio <= 0:
        raise InvalidGeometry("slope ratio must be positive")
    if slope_ratio == 1:
        raise InvalidGeometry("slope ratio 1 gives no break")
    len_ac = arc_length(a, c)
    len_ca = 1 - len_ac
    s2 = 1 / (slope_ratio * len_ac + len_ca)
    s1 = slope_ratio * s2
    # At a the left arc is (c, a) with slope s2, the right arc (a, c) with s1.
    return _build_two_segment(
        PL_TWO_BREAK,
        a,
        c,
        da_plus=s1,
        dc_minus=s1,
        dc_plus=s2,
        da_minus=s2,
        translation=translation,
    )


def make_pq_two_break(a, c, sigma_a, sigma_c, translation=0.0) -> CircleMap:
    """Piecewise-quadratic lift with prescribed jump ratios at a and c.

    The derivative runs affinely from Df_+(a) to Df_-(c) on arc (a, c) and
    from Df_+(c) to Df_-(a) on arc (c, a).  With the symmetric profile choice
    Df_+(a) = Df_+(c), the two jump conditions leave one overall scale, fixed
    by the closure condition that Df integrates to 1 over a period.
    """
    a = to_circle(a)
    c = to_circle(c)
    if a == c:
        raise InvalidGeometry("break points coincide")
    if sigma_a <= 0 or sigma_c <= 0:
        raise InvalidGeometry("jump ratios must be positive")
    if sigma_a == 1 and sigma_c == 1:
        raise InvalidGeometry("both jump ratios are 1: no break points")
    if sigma_a == 1 or sigma_c == 1:
        raise InvalidGeometry("a two-break map needs both jump ratios != 1")
    len_ac = arc_length(a, c)
    len_ca = 1 - len_ac
    area = len_ac * (1 + sigma_c) / 2 + len_ca * (1 + sigma_a) / 2
    s = 1 / area
    return _build_two_segment(
        PQ_TWO_BREAK,
        a,
        c,
        da_plus=s,
        dc_minus=sigma_c * s,
        dc_plus=s,
        da_minus=sigma_a * s,
        translation=translation,
    )


def evaluate(m: CircleMap, x):
    """Lift value f(x) for any real lift coordinate x."""
    if m.kind == ROTATION:
        return x + m.translation
    p0 = m.seg_pos[0]
    k = floor(x - p0)
    u = x - k
    # Guard against boundary rounding in the reduction.
    if u < p0:
        u += 1
        k -= 1
    elif u >= p0 + 1:
        u -= 1
        k += 1
    s = 0 if u < m.seg_pos[1] else 1
    du = u - m.seg_pos[s]
    val = m.seg_val[s] + du * (m.seg_d0[s] + 0.5 * m.seg_curv[s] * du)
    return val + k + m.translation


def invert(m: CircleMap, y):
    """Preimage of the lift value y; exact per-segment quadratic solve."""
    if m.kind == ROTATION:
        return y - m.translation
    yb = y - m.translation
    v0 = m.seg_val[0]
    k = floor(yb - v0)
    w = yb - k
    if w < v0:
        w += 1
        k -= 1
    elif w >= v0 + 1:
        w -= 1
        k += 1
    s = 0 if w < m.seg_val[1] else 1
    dv = w - m.seg_val[s]
    d0 = m.seg_d0[s]
    cv = m.seg_curv[s]
    if cv == 0:
        du = dv / d0
    else:
        # Stable root of (cv/2) du^2 + d0 du = dv; discriminant equals the
        # squared derivative at the preimage, hence non-negative.
        disc = d0 * d0 + 2 * cv * dv
        if disc < 0:
            disc = disc * 0
        du = 2 * dv / (d0 + sqrt(disc))
    return m.seg_pos[s] + du + k


def one_sided_derivatives(m: CircleMap, x):
    """(Df_-(x), Df_+(x)) at the circle point underlying x."""
    if m.kind == ROTATION:
        return (1.0, 1.0)
    p0 = m.seg_pos[0]
    u = x - floor(x - p0)
    if u < p0:
        u += 1
    elif u >= p0 + 1:
        u -= 1
    p1 = m.seg_pos[1]
    if u == p0:
        return (m.seg_d1[1], m.seg_d0[0])
    if u == p1:
        return (m.seg_d1[0], m.seg_d0[1])
    s = 0 if u < p1 else 1
    d = m.seg_d0[s] + m.seg_curv[s] * (u - m.seg_pos[s])
    return (d, d)


def df(m: CircleMap, x):
    """Derivative at a non-break point (returns the right-hand value)."""
    return one_sided_derivatives(m, x)[1]


def step_with_winding(m: CircleMap, x, w: int):
    """One forward step on the circle with exact winding bookkeeping.

    x is a circle point in [0, 1), w an integer; the pair represents the lift
    value x + w.  Returns the next pair, so f^n(x0) can be reassembled exactly
    as ``x_n + w_n`` without the lift coordinate growing (and losing ulps).
    """
    y = evaluate(m, x)
    k = floor(y)
    xr = y - k
    if xr < 0:
        xr += 1
        k -= 1
    if wraps_to_zero(xr):
        xr = xr - xr
        k += 1
    return xr, w + k


def iterate(m: CircleMap, x0, n: int, direction: str = "forward", cap: int | None = None):
    """Orbit of circle points [x0, T x0, ..., T^n x0] (or backward)."""
    cap = DEFAULT_ORBIT_CAP if cap is None else cap
    if n > cap:
        raise PrecisionBudgetExceeded(f"orbit length {n} exceeds cap {cap}")
    if n < 0:
        raise ValueError("n must be non-negative")
    x = to_circle(x0)
    pts = [x]
    if direction == "forward":
        for _ in range(n):
            x = to_circle(evaluate(m, x))
            pts.append(x)
    elif direction == "backward":
        for _ in range(n):
            x = to_circle(invert(m, x))
            pts.append(x)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return pts


def orbit_with_winding(m: CircleMap, x0, n: int, cap: int | None = None):
    """Forward orbit as (circle points, integer windings), both length n+1."""
    cap = DEFAULT_ORBIT_CAP if cap is None else cap
    if n > cap:
        raise PrecisionBudgetExceeded(f"orbit length {n} exceeds cap {cap}")
    x = to_circle(x0)
    w = 0
    pts = [x]
    wind = [0]
    for _ in range(n):
        x, w = step_with_winding(m, x, w)
        pts.append(x)
        wind.append(w)
    return pts, wind


def min_break_distance(m: CircleMap, x):
    """Smallest circle distance from x to a break location (inf if none)."""
    best = None
    for b in m.breaks:
        d = arc_length(b.location, x)
        d = min(d, 1 - d)
        best = d if best is None or d < best else best
    return float("inf") if best is None else best


def orbit_avoiding_breaks(m: CircleMap, x0, n: int, cap=None, nudge=1e-9, retries=10):
    """Forward orbit whose points all keep clear of the break locations.

    If a point lands within the clearance threshold of a break, the base
    point is nudged by ``nudge`` and the orbit rebuilt, up to ``retries``
    times.  Returns (points, base point actually used, number of nudges).
    """
    x = to_circle(x0)
    clearance = BREAK_CLEARANCE_EPS * eps_of(x)
    for attempt in range(retries + 1):
        pts = iterate(m, x, n, cap=cap)
        if not m.breaks:
            return pts, x, attempt
        ok = all(min_break_distance(m, p) > clearance for p in pts)
        if ok:
            return pts, x, attempt
        x = to_circle(x + nudge)
    raise BreakCollision(
        f"orbit of {x0!r} keeps hitting a break after {retries} nudges"
    )


@functools.lru_cache(maxsize=64)
def map_stats(m: CircleMap) -> MapStats:
    """Cached ``validate_p_homeo`` (maps are immutable and hashable)."""
    return validate_p_homeo(m)


def validate_p_homeo(m: CircleMap, grid: int = 10_000) -> MapStats:
    """Check the class-P contract and return the map's summary stats.

    Verifies strict monotonicity of the lift on a grid plus the break
    locations, positivity and boundedness of the one-sided derivatives, and
    computes v = Var(log Df) in closed form (the derivative is monotone on
    each segment, so its log-variation is the endpoint difference, plus the
    jumps at the breaks).
    """
    if m.kind == ROTATION:
        return MapStats(v=0.0, lam=(1 + 1.0) ** -0.5, sigma_product=1.0)
    xs = sorted(
        {i / grid for i in range(grid)} | {b.location for b in m.breaks}
    )
    prev = None
    for x in xs:
        val = evaluate(m, x)
        if prev is not None and not val > prev:
            raise NotHomeomorphism(f"lift not strictly increasing near x={x!r}")
        prev = val
    tail = evaluate(m, xs[0] + 1)
    if not tail > prev:
        raise NotHomeomorphism("lift not strictly increasing at the period seam")
    d_all = list(m.seg_d0) + list(m.seg_d1)
    c1, c2 = min(d_all), max(d_all)
    if c1 <= 0:
        raise NotClassP("one-sided derivative not bounded below by a positive c1")
    v = 0.0
    for b in m.breaks:
        v += abs(log(b.sigma))
    for s in range(2):
        v += abs(log(m.seg_d1[s]) - log(m.seg_d0[s]))
    lam = (1 + exp(-v)) ** -0.5
    sig = 1.0
    for b in m.breaks:
        sig *= b.sigma
    return MapStats(v=float(v), lam=float(lam), sigma_product=float(sig))


def _segment_walk(m: CircleMap, lo, hi):
    """Yield (segment id, x1, x2, segment start) covering the lift interval
    [lo, hi] piece by piece; hi - lo may cross several boundaries."""
    p0, p1 = m.seg_pos[0], m.seg_pos[1]
    cur = lo
    while cur < hi:
        j = floor(cur - p0)
        us = cur - j  # in [p0, p0+1)
        if us < p0:
            us += 1
            j -= 1
        elif us >= p0 + 1:
            us -= 1
            j += 1
        if us < p1:
            s = 0
            nxt = p1 + j
        else:
            s = 1
            nxt = p0 + 1 + j
        x2 = hi if hi < nxt else nxt
        yield s, cur, x2, m.seg_pos[s] + j
        cur = x2


def gap_image(m: CircleMap, lo, hi):
    """f(hi) - f(lo) computed as a sum of positive per-segment increments.

    Exact per segment because the derivative is affine there; summing
    positive terms keeps the relative error at a few epsilons even when
    hi - lo is many orders of magnitude below 1.  Requires lo <= hi.
    """
    if m.kind == ROTATION:
        return hi - lo
    total = 0.0 * lo
    for s, x1, x2, start in _segment_walk(m, lo, hi):
        mid = (x1 + x2) / 2 - start
        total += (x2 - x1) * (m.seg_d0[s] + m.seg_curv[s] * mid)
    return total


def abs_d2f_integral(m: CircleMap, lo, hi):
    """Integral of |D2 f| over the lift interval [lo, hi] (exact quadrature:
    the second derivative is constant per segment)."""
    if m.kind == ROTATION:
        return 0.0
    total = 0.0 * lo
    for s, x1, x2, _ in _segment_walk(m, lo, hi):
        total += abs(m.seg_curv[s]) * (x2 - x1)
    return total


def d2f_range(m: CircleMap, lo, hi):
    """(min, max) of the piecewise-constant second derivative over [lo, hi]."""
    if m.kind == ROTATION:
        return (0.0, 0.0)
    vals = [m.seg_curv[s] for s, _, _, _ in _segment_walk(m, lo, hi)]
    return (min(vals), max(vals))
