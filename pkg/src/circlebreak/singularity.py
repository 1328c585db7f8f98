"""Regular break covers and the measure-concentration experiments.

Turns a tuned two-break map into quantitative evidence about its
invariant measure: cover triples centered on a break preimage, the G*F
product gap that keeps Dist(.; f^{q_n}) away from 1, enclosures for the
conjugacy distortion, and Lorenz-style mass-versus-length curves whose
collapse is the numerical signature of singularity.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from functools import lru_cache

from .numerics import (
    DEFAULT_ORBIT_CAP,
    MACHINE_EPS,
    arc_length,
    in_arc,
    to_circle,
    wrap_signed,
)
from .errors import (
    BracketingTooCoarse,
    ConfigError,
    HypothesisNotCertified,
    InvalidGeometry,
    InvariantFailure,
    PrecisionBudgetExceeded,
    RankTooShallow,
    TolUnreachable,
)
from .maps import (
    CircleMap,
    abs_d2f_integral,
    iterate,
    make_pl_two_break,
    make_pq_two_break,
    make_rotation,
    map_stats,
)
from .rotation import ContinuedFraction, rho_farey, tune_translation
from .partition import CircleInterval, DynamicalPartition, build_partition, is_qn_small
from .crossratio import (
    Quadruple,
    calibrate_k1,
    chain_points,
    cross_ratio,
    distortion_chain,
    f_func,
    g_func,
    lift_into,
    normalized_coords,
)
from .measure import OrbitMeasure, conjugacy_values, measure_interval, partition_masses

CASE_TAGS = ("c_outside_U", "c_in_U_left", "c_in_U_right", "a_only")

# Relative slack for certification checks on quantities that are exact
# by construction up to rounding.
CERT_SLACK = 1e-9


@lru_cache(maxsize=32)
def estimate_r6(sigma_a, sigma_c, xi_min: float = 10.0):
    """Empirical constant bounding the tail factor Phi2.

    Phi2(xi_l, xi_p, z) -> 1 as both ratios grow, with error dominated by
    R6*(1/xi_l + 1/xi_p).  The bound's constant is only claimed to exist,
    so it is estimated as the worst observed ratio on a log grid with
    xi >= xi_min, then doubled.  Floor at 1 since the downstream constant
    assumes R6 > 1.
    """
    if sigma_a <= 0 or sigma_c <= 0:
        raise InvalidGeometry("jump ratios must be positive")
    xis = [xi_min * (10.0 ** (k / 6.0)) for k in range(31)]
    zs = [j / 8.0 for j in range(9)]
    worst = 0.0
    for xl in xis:
        left = (1.0 + xl) / (sigma_a + xl)
        for xp in xis:
            budget = 1.0 / xl + 1.0 / xp
            for z in zs:
                den = sigma_c + (1.0 - sigma_c) * z + xp
                phi2 = left * (1.0 + xp) / den
                worst = max(worst, abs(phi2 - 1.0) / budget)
    return max(2.0 * worst, 1.0)


@dataclass(frozen=True)
class RegularCoverParams:
    """Geometry constants for regular cover triples.

    c0 scales the long side of the triple, zeta0 caps the normalized
    offset of the second break, v is the log-derivative variation of the
    map the constants were derived for.  degenerate marks the
    sigma_a*sigma_c = 1 family, where the gap machinery has no lower
    bound to enforce and the constants collapse to neutral values.
    """

    c0: float
    zeta0: float
    v: float
    sigma_a: float
    sigma_c: float
    r6_hat: float
    degenerate: bool = False

    def __post_init__(self):
        if self.c0 < 1.0:
            raise InvalidGeometry(f"C0 must be >= 1, got {self.c0!r}")
        if not 0.0 < self.zeta0 <= 1.0:
            raise InvalidGeometry(f"zeta0 must lie in (0, 1], got {self.zeta0!r}")
        if not self.degenerate:
            ss = self.sigma_a * self.sigma_c
            want = min(
                abs(ss - 1.0) / (2.0 * math.exp(self.v) * abs(ss - self.sigma_a)),
                1.0,
            )
            if abs(self.zeta0 - want) > 1e-12:
                raise InvariantFailure(
                    f"zeta0 {self.zeta0!r} does not match its defining "
                    f"formula {want!r}"
                )

    @property
    def sigma_product(self):
        return self.sigma_a * self.sigma_c

    @property
    def gap_floor(self):
        """Lower bound on |G*F - 1| for certified coordinates."""
        return abs(self.sigma_product - 1.0) / 4.0


def make_cover_params(sigma_a, sigma_c, v, r6_hat=None) -> RegularCoverParams:
    """Constants C0 and zeta0 for the cover construction.

    zeta0 comes from the closed form; C0 needs the Phi2 tail constant,
    estimated by estimate_r6 unless the caller pins one.  The sup of
    Phi1(z) = ss + (1 - sigma_c) sigma_a z over z in [0,1] is
    max(ss, sigma_a): Phi1 is linear with endpoint values ss and sigma_a.
    """
    if sigma_a <= 0 or sigma_c <= 0:
        raise InvalidGeometry("jump ratios must be positive")
    if v <= 0:
        raise InvalidGeometry("log-derivative variation must be positive")
    ss = sigma_a * sigma_c
    r6 = float(r6_hat) if r6_hat is not None else estimate_r6(sigma_a, sigma_c)
    if abs(ss - 1.0) <= 1e-12:
        return RegularCoverParams(
            c0=1.0,
            zeta0=1.0,
            v=v,
            sigma_a=sigma_a,
            sigma_c=sigma_c,
            r6_hat=r6,
            degenerate=True,
        )
    if abs(ss - sigma_a) <= 1e-15:
        raise InvalidGeometry("sigma_c = 1 leaves only one genuine break")
    ev = math.exp(v)
    zeta0 = min(abs(ss - 1.0) / (2.0 * ev * abs(ss - sigma_a)), 1.0)
    m_sigma = max(ss, sigma_a)
    c0 = max(4.0 * r6 * ev * m_sigma / abs(ss - 1.0), 1.0)
    return RegularCoverParams(
        c0=c0, zeta0=zeta0, v=v, sigma_a=sigma_a, sigma_c=sigma_c, r6_hat=r6
    )


def mirror_params(params: RegularCoverParams) -> RegularCoverParams:
    """Constants for the reflected construction.

    Reflecting the circle swaps left and right one-sided derivatives, so
    the triple anchored on its third point sees the inverted jump ratios.
    The gap floor shrinks accordingly: the mirrored product tends to
    1/(sigma_a*sigma_c) instead of sigma_a*sigma_c.
    """
    return make_cover_params(
        1.0 / params.sigma_a,
        1.0 / params.sigma_c,
        params.v,
        r6_hat=estimate_r6(1.0 / params.sigma_a, 1.0 / params.sigma_c),
    )


@dataclass(frozen=True)
class CoverTriple:
    """Three adjacent intervals straddling a break preimage.

    Lift coordinates z1 < z2 < z3 < z4 on the chart of abar; the break
    preimage sits at z2 (left cases) or z3 (c_in_U_right).  l_index and
    p_index are the forward times at which the hull covers each break;
    p_index is meaningful only when case_tag says the second break is
    covered.  d_n is half the clearance to the q_{n-1}-neighbors, the
    scale every width is derived from.
    """

    n: int
    q_n: int
    z1: float
    z2: float
    z3: float
    z4: float
    case_tag: str
    l_index: int
    p_index: int
    d_n: float
    abar: float
    cbar: float
    xi0: float
    coord0: float
    r1: float

    def __post_init__(self):
        if self.case_tag not in CASE_TAGS:
            raise InvalidGeometry(f"unknown case tag {self.case_tag!r}")
        if not self.z1 < self.z2 < self.z3 < self.z4:
            raise InvalidGeometry("cover coordinates must be strictly increasing")
        if not self.z4 - self.z1 < 1.0:
            raise InvalidGeometry("cover hull must fit on one chart")

    @property
    def quadruple(self) -> Quadruple:
        return Quadruple(self.z1, self.z2, self.z3, self.z4)

    @property
    def hull(self):
        return self.z4 - self.z1

    @property
    def covers_second_break(self) -> bool:
        return self.case_tag in ("c_in_U_left", "c_in_U_right")


def _circle_gap(u, w):
    return min(arc_length(u, w), arc_length(w, u))


def _preimage_in_window(m: CircleMap, part: DynamicalPartition, loc):
    """Backward time l < q_n putting the break into the window around x0.

    The partition element containing the break is unique, and pulling the
    break back by the element's orbit index lands it in one of the two
    generators, i.e. in [T^{q_n}x0, T^{q_{n-1}}x0].
    """
    el = part.locate(loc)
    l = el.index
    pre = iterate(m, loc, l, direction="backward")[-1] if l else loc
    # parity: x_{q_k} lies right of x0 iff k is even
    if part.n % 2 == 0:
        w_left, w_right = part.orbit[part.q_nm1], part.orbit[part.q_n]
    else:
        w_left, w_right = part.orbit[part.q_n], part.orbit[part.q_nm1]
    if not in_arc(pre, w_left, w_right):
        raise InvariantFailure(
            f"preimage {pre!r} of break {loc!r} (l={l}) escaped the window "
            f"[{w_left!r}, {w_right!r}]"
        )
    back = iterate(m, pre, l)[-1] if l else pre
    if _circle_gap(back, loc) > 1e-8:
        raise InvariantFailure(
            f"roundtrip through {l} backward steps moved the break by "
            f"{_circle_gap(back, loc):.3e}"
        )
    return l, pre


def regular_cover_triple(
    m: CircleMap,
    cf: ContinuedFraction,
    part: DynamicalPartition,
    params: RegularCoverParams | None = None,
    cap: int = DEFAULT_ORBIT_CAP,
) -> CoverTriple:
    """Cover triple around the first break's preimage at rank part.n.

    Sizes come from d_n (clearance to the q_{n-1} neighbors of abar)
    through V_n and its zeta0-core U_n; the position of the second
    break's preimage relative to U_n selects between the one-sided cover
    and the two asymmetric two-break covers.  Everything the downstream
    lemmas assume is audited here: q_n-smallness of the hull, each break
    covered exactly once, the normalized coordinates matching C0/zeta0.
    """
    if len(m.breaks) != 2:
        raise InvalidGeometry("cover triples need a map with exactly two breaks")
    if params is None:
        stats = map_stats(m)
        params = make_cover_params(
            m.breaks[0].sigma, m.breaks[1].sigma, stats.v
        )
    a_loc = m.breaks[0].location
    c_loc = m.breaks[1].location
    l, abar = _preimage_in_window(m, part, a_loc)
    p, cbar = _preimage_in_window(m, part, c_loc)

    fwd = iterate(m, abar, part.q_nm1)[-1]
    bwd = iterate(m, abar, part.q_nm1, direction="backward")[-1]
    d_n = 0.5 * min(_circle_gap(abar, fwd), _circle_gap(abar, bwd))
    h_v = 0.5 * math.exp(-params.v) * d_n / params.c0
    h_u = params.zeta0 * h_v
    if h_u / 2.0 <= 1e3 * MACHINE_EPS:
        raise RankTooShallow(
            f"rank {part.n} clearance d_n={d_n:.3e} leaves cover widths at "
            "the rounding floor"
        )

    delta = wrap_signed(cbar - abar)
    if abs(delta) > h_u:
        tag = "a_only" if params.degenerate else "c_outside_U"
        zs = (abar - h_u / 2.0, abar, abar + h_u / 2.0, abar + h_u)
    elif delta <= 0.0:
        if p == l:
            raise InvariantFailure(
                "both breaks pull back to the same time step; the one-step "
                "factors cannot be separated"
            )
        tag = "c_in_U_left"
        zs = (
            abar - h_v,
            abar,
            abar + params.c0 * h_v,
            abar + 2.0 * params.c0 * h_v,
        )
    else:
        if p == l:
            raise InvariantFailure(
                "both breaks pull back to the same time step; the one-step "
                "factors cannot be separated"
            )
        tag = "c_in_U_right"
        zs = (
            abar - 2.0 * params.c0 * h_v,
            abar - params.c0 * h_v,
            abar,
            abar + h_v,
        )

    gaps = tuple(w - u for u, w in zip(zs, zs[1:]))
    if tag in ("c_outside_U", "a_only"):
        xi0 = gaps[1] / gaps[0]
        coord0 = 0.0
    elif tag == "c_in_U_left":
        xi0 = gaps[1] / gaps[0]
        coord0 = -delta / h_v
    else:
        xi0 = gaps[1] / gaps[2]
        coord0 = delta / h_v
    r1 = max(gaps) / min(gaps)

    hull_iv = CircleInterval(left=to_circle(zs[0]), length=zs[3] - zs[0])
    if not is_qn_small(m, cf, hull_iv, part.n, cap=cap):
        raise InvariantFailure(
            f"cover hull of length {zs[3] - zs[0]:.3e} is not q_{part.n}-small"
        )

    track = chain_points(m, zs, part.q_n)
    a_hits, c_hits = [], []
    for j in range(part.q_n):
        lo, hi = to_circle(track[j][0]), to_circle(track[j][3])
        if in_arc(a_loc, lo, hi):
            a_hits.append(j)
        if in_arc(c_loc, lo, hi):
            c_hits.append(j)
    want_c = [p] if tag in ("c_in_U_left", "c_in_U_right") else []
    if a_hits != [l]:
        raise InvariantFailure(
            f"first break covered at steps {a_hits}, expected [{l}]"
        )
    if c_hits != want_c:
        raise InvariantFailure(
            f"second break covered at steps {c_hits}, expected {want_c}"
        )

    if tag in ("c_in_U_left", "c_in_U_right"):
        if abs(xi0 - params.c0) > CERT_SLACK * params.c0:
            raise InvariantFailure(
                f"constructed ratio {xi0!r} drifted from C0 {params.c0!r}"
            )
        if coord0 > params.zeta0 * (1.0 + CERT_SLACK):
            raise InvariantFailure(
                f"normalized break offset {coord0!r} exceeds zeta0 "
                f"{params.zeta0!r}"
            )

    return CoverTriple(
        n=part.n,
        q_n=part.q_n,
        z1=zs[0],
        z2=zs[1],
        z3=zs[2],
        z4=zs[3],
        case_tag=tag,
        l_index=l,
        p_index=p,
        d_n=d_n,
        abar=abar,
        cbar=cbar,
        xi0=xi0,
        coord0=coord0,
        r1=r1,
    )


def gf_gap(params: RegularCoverParams, xi_l, xi_p, z_p):
    """|G(xi_l) * F(xi_p, z_p) - 1| under certified hypotheses.

    The construction guarantees xi(0) >= C0 and z(0) <= zeta0; pushing
    the triple forward distorts ratios by at most e^{+-v}, so the
    evaluated coordinates must clear C0 e^{-v} and stay under
    zeta0 e^{v}.  Outside those ranges the lower bound is not claimed
    and the call is refused.  For non-degenerate parameters the result
    is asserted against the |sigma_a sigma_c - 1|/4 floor.
    """
    ev = math.exp(params.v)
    slack = 1.0 + CERT_SLACK
    if xi_l <= 0 or xi_p <= 0:
        raise HypothesisNotCertified("gap ratios must be positive")
    floor_xi = params.c0 / ev / slack
    if xi_l < floor_xi or xi_p < floor_xi:
        raise HypothesisNotCertified(
            f"ratios ({xi_l!r}, {xi_p!r}) fall below the certified floor "
            f"C0 e^-v = {floor_xi!r}"
        )
    cap_z = min(params.zeta0 * ev * slack, 1.0 + CERT_SLACK)
    if not -CERT_SLACK <= z_p <= cap_z:
        raise HypothesisNotCertified(
            f"normalized offset {z_p!r} exceeds the certified range "
            f"[0, {cap_z!r}]"
        )
    z = min(max(z_p, 0.0), 1.0)
    value = g_func(xi_l, params.sigma_a) * f_func(xi_p, z, params.sigma_c)
    gap = abs(value - 1.0)
    if not params.degenerate and gap < params.gap_floor:
        raise InvariantFailure(
            f"certified product gap {gap!r} undercuts the floor "
            f"{params.gap_floor!r}"
        )
    return gap


@dataclass(frozen=True)
class QnDistortionRow:
    """One rank of the distortion experiment.

    gap is |Dist(z; f^{q_n}) - 1| on the cover triple; gf is the
    Lemma-level product gap when the triple covers both breaks, else
    None.  off_band records how far the product of the non-break factors
    strays from 1, and image_len_sum the total length of the q_n hull
    iterates (disjointness puts it under 1).
    """

    n: int
    q_n: int
    gap: float
    case_tag: str
    l_index: int
    p_index: int
    gf: float | None
    off_band: float
    hull_len: float
    image_len_sum: float


def _generator_quadruple(part: DynamicalPartition) -> Quadruple:
    # thirds of the rank-(n-1) generator [x0, x_{q_{n-1}}]
    if (part.n - 1) % 2 == 0:
        lo = part.x0
        length = arc_length(part.x0, part.orbit[part.q_nm1])
    else:
        lo = part.orbit[part.q_nm1]
        length = arc_length(part.orbit[part.q_nm1], part.x0)
    return Quadruple(
        lo, lo + length / 3.0, lo + 2.0 * length / 3.0, lo + length
    )


def _qn_row(
    m: CircleMap,
    cf: ContinuedFraction,
    part: DynamicalPartition,
    params: RegularCoverParams | None,
    mirror: RegularCoverParams | None,
    cap: int,
) -> QnDistortionRow:
    two_break = len(m.breaks) == 2
    if two_break:
        triple = regular_cover_triple(m, cf, part, params=params, cap=cap)
        quad = triple.quadruple
    else:
        triple = None
        quad = _generator_quadruple(part)
    res = distortion_chain(quad, m, part.q_n)
    gap = abs(res.total - 1.0)
    image_len_sum = sum(q.hull for q in res.quadruples[: part.q_n])
    if image_len_sum > 1.0 + 1e-9:
        raise InvariantFailure(
            f"hull iterates overlap: total image length {image_len_sum!r}"
        )

    if triple is None:
        return QnDistortionRow(
            n=part.n,
            q_n=part.q_n,
            gap=gap,
            case_tag="break_free",
            l_index=-1,
            p_index=-1,
            gf=None,
            off_band=gap,
            hull_len=quad.hull,
            image_len_sum=image_len_sum,
        )

    l = triple.l_index
    k1 = calibrate_k1(m)
    a_sig = m.breaks[0].sigma
    c_sig = m.breaks[1].sigma
    gf = None
    hit_steps = [l]

    ql = res.quadruples[l]
    if triple.case_tag == "c_in_U_right":
        coords_l = normalized_coords(ql).eta
        predicted_l = g_func(coords_l, 1.0 / a_sig)
    else:
        coords_l = normalized_coords(ql).xi
        predicted_l = g_func(coords_l, a_sig)
    budget_l = k1 * abs_d2f_integral(m, to_circle(ql.z1), to_circle(ql.z4)) + 1e-9
    if abs(res.factors[l] - predicted_l) > budget_l:
        raise InvariantFailure(
            f"one-step factor {res.factors[l]!r} at the first break differs "
            f"from its closed form {predicted_l!r} beyond {budget_l!r}"
        )

    if triple.covers_second_break:
        p = triple.p_index
        hit_steps.append(p)
        qp = res.quadruples[p]
        c_lift = lift_into(m.breaks[1].location, qp.z1)
        nc = normalized_coords(qp, cbar=c_lift)
        if triple.case_tag == "c_in_U_left":
            if nc.z is None:
                raise InvariantFailure(
                    "second break left its stated interval along the chain"
                )
            predicted_p = f_func(nc.xi, nc.z, c_sig)
            gf_params = params
            gf = gf_gap(gf_params, coords_l, nc.xi, nc.z)
        else:
            if nc.theta is None:
                raise InvariantFailure(
                    "second break left its stated interval along the chain"
                )
            predicted_p = f_func(nc.eta, nc.theta, 1.0 / c_sig)
            gf = gf_gap(mirror, coords_l, nc.eta, nc.theta)
        budget_p = (
            k1 * abs_d2f_integral(m, to_circle(qp.z1), to_circle(qp.z4)) + 1e-9
        )
        if abs(res.factors[p] - predicted_p) > budget_p:
            raise InvariantFailure(
                f"one-step factor {res.factors[p]!r} at the second break "
                f"differs from its closed form {predicted_p!r} beyond "
                f"{budget_p!r}"
            )

    off = 1.0
    for j, fct in enumerate(res.factors):
        if j not in hit_steps:
            off *= fct
    return QnDistortionRow(
        n=part.n,
        q_n=part.q_n,
        gap=gap,
        case_tag=triple.case_tag,
        l_index=l,
        p_index=triple.p_index,
        gf=gf,
        off_band=abs(off - 1.0),
        hull_len=quad.hull,
        image_len_sum=image_len_sum,
    )


def qn_distortion_experiment(
    m: CircleMap,
    cf: ContinuedFraction,
    x0,
    n_range,
    params: RegularCoverParams | None = None,
    cap: int = DEFAULT_ORBIT_CAP,
):
    """Per-rank distortion gaps |Dist(z; f^{q_n}) - 1| on cover triples.

    Two-break maps get the full cover construction with the one-step
    factors audited against their closed forms; break-free maps fall
    back to generator-scale quadruples, where the gap must vanish for a
    rigid rotation.  Returns QnDistortionRow per rank, ascending.
    """
    ns = sorted(set(int(n) for n in n_range))
    if not ns:
        raise ValueError("empty rank range")
    two_break = len(m.breaks) == 2
    if two_break and params is None:
        stats = map_stats(m)
        params = make_cover_params(m.breaks[0].sigma, m.breaks[1].sigma, stats.v)
    mirror = mirror_params(params) if two_break else None
    rows = []
    for n in ns:
        part = build_partition(m, cf, x0, n, cap=cap)
        rows.append(_qn_row(m, cf, part, params, mirror, cap))
    return rows


@dataclass(frozen=True)
class Enclosure:
    """A closed interval certain to contain the reported quantity."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise InvariantFailure(
                f"enclosure [{self.lower!r}, {self.upper!r}] is empty"
            )

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def midpoint(self):
        return 0.5 * (self.lower + self.upper)

    def contains(self, x) -> bool:
        return self.lower <= x <= self.upper


@dataclass(frozen=True)
class ProbeResult:
    dist_phi: Enclosure
    dist_phi_qn: Enclosure
    ratio: Enclosure
    identity_residual: float
    q_n: int


def _gap_mass_bounds(om: OrbitMeasure, pts):
    out = []
    for u, w in zip(pts, pts[1:]):
        arc = arc_length(u, w)
        if arc <= 0:
            raise BracketingTooCoarse("quadruple points collapsed on the circle")
        mb = measure_interval(om, CircleInterval(left=u, length=arc))
        if mb.lower <= 0:
            raise BracketingTooCoarse(
                f"orbit of {om.n_points} points cannot separate the gap "
                f"[{u!r}, {w!r}]; its measure lower bound is 0"
            )
        out.append(mb)
    return out


def _cross_ratio_bounds(gaps) -> Enclosure:
    a, b, c = gaps
    lo = (a.lower * c.lower) / ((a.lower + b.upper) * (b.upper + c.lower))
    hi = (a.upper * c.upper) / ((a.upper + b.lower) * (b.lower + c.upper))
    return Enclosure(lower=lo, upper=hi)


def conjugacy_distortion_probe(om: OrbitMeasure, subject, q_n=None) -> ProbeResult:
    """Enclosures for the conjugacy's cross-ratio distortion on a quadruple.

    subject is a CoverTriple (q_n implied) or a plain Quadruple plus q_n.
    Gap masses are bracketed by the orbit, giving rigorous enclosures for
    Dist(z; T_phi) and Dist(T^{q_n}z; T_phi); their ratio must contain
    Dist(z; f^{q_n}) because phi conjugates the map to the rotation.  The
    translation-invariance identity Cr(phi z + q_n rho) = Cr(phi z) is
    recomputed literally as a sanity residual.
    """
    if isinstance(subject, CoverTriple):
        zs = (subject.z1, subject.z2, subject.z3, subject.z4)
        q_n = subject.q_n
    elif isinstance(subject, Quadruple):
        if q_n is None:
            raise ValueError("plain quadruples need an explicit q_n")
        zs = subject.points
    else:
        raise TypeError("subject must be a CoverTriple or a Quadruple")

    pts = [to_circle(z) for z in zs]
    cr_z = cross_ratio(Quadruple(*zs))
    gaps = _gap_mass_bounds(om, pts)
    cr_phi = _cross_ratio_bounds(gaps)
    dist_phi = Enclosure(cr_phi.lower / cr_z, cr_phi.upper / cr_z)

    imgs = [iterate(om.m, x, q_n)[-1] for x in pts]
    lift = [imgs[0]]
    for u, w in zip(imgs, imgs[1:]):
        lift.append(lift[-1] + arc_length(u, w))
    cr_w = cross_ratio(Quadruple(*lift))
    gaps_img = _gap_mass_bounds(om, imgs)
    cr_phi_img = _cross_ratio_bounds(gaps_img)
    dist_phi_qn = Enclosure(cr_phi_img.lower / cr_w, cr_phi_img.upper / cr_w)

    if dist_phi_qn.lower <= 0:
        raise BracketingTooCoarse("image distortion enclosure touches zero")
    ratio = Enclosure(
        dist_phi.lower / dist_phi_qn.upper, dist_phi.upper / dist_phi_qn.lower
    )

    mids = [0.5 * (g.lower + g.upper) for g in gaps]
    base = [0.0, mids[0], mids[0] + mids[1], mids[0] + mids[1] + mids[2]]
    shift = to_circle(q_n * om.rho.value)
    shifted = [v + shift for v in base]
    cr_base = _plain_cross_ratio(base)
    cr_shift = _plain_cross_ratio(shifted)
    identity_residual = abs(cr_shift - cr_base)
    if identity_residual > 1e-12:
        raise InvariantFailure(
            f"translation moved a cross-ratio by {identity_residual!r}"
        )
    return ProbeResult(
        dist_phi=dist_phi,
        dist_phi_qn=dist_phi_qn,
        ratio=ratio,
        identity_residual=identity_residual,
        q_n=q_n,
    )


def _plain_cross_ratio(pts):
    a = pts[1] - pts[0]
    b = pts[2] - pts[1]
    c = pts[3] - pts[2]
    return (a * c) / ((a + b) * (b + c))


@dataclass(frozen=True)
class LorenzCurve:
    """Cumulative (length, mass) after sorting elements by density.

    lorenz_90_length is the least total Lebesgue length of partition
    elements that together carry at least `threshold` of the invariant
    measure; its decay across ranks is the concentration signature.
    """

    n: int
    points: tuple
    lorenz_90_length: float
    threshold: float = 0.90


def mass_length_curve(om: OrbitMeasure, part: DynamicalPartition, threshold=0.90):
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    rows = partition_masses(om, part)
    order = sorted(rows, key=lambda r: (-r.density, r.rank_tag, r.index))
    pts = [(0.0, 0.0)]
    cum_len = 0.0
    cum_mass = 0.0
    hit = None
    for r in order:
        cum_len += r.length
        cum_mass += r.mass
        pts.append((cum_len, cum_mass))
        if hit is None and cum_mass >= threshold - 1e-12:
            hit = cum_len
    if hit is None:
        hit = cum_len
    return LorenzCurve(
        n=part.n, points=tuple(pts), lorenz_90_length=hit, threshold=threshold
    )


def solve_same_orbit(
    kind: str,
    a,
    quotients,
    sigma_a=None,
    sigma_c=None,
    slope_ratio=None,
    m_steps: int = 1,
    tol: float = 1e-9,
    tune_tol: float = 1e-10,
    rounds: int = 40,
    cap: int = DEFAULT_ORBIT_CAP,
):
    """Two-break map with the second break on the first break's orbit.

    Alternates tuning the translation to the target rotation number with
    re-placing c at f^{m_steps}(a) until both are consistent; each round
    rebuilds the map because moving c changes it.  Returns the tuned map
    and its TuneResult.
    """
    if m_steps < 1:
        raise ValueError("m_steps must be >= 1")
    if kind not in ("pq", "pl"):
        raise ValueError("same-orbit construction supports pq and pl maps")
    target = ContinuedFraction.from_quotients(quotients)
    c = to_circle(a + 0.61 * m_steps)

    def build(c_pos, translation=0.0):
        if kind == "pq":
            return make_pq_two_break(a, c_pos, sigma_a, sigma_c, translation)
        return make_pl_two_break(a, c_pos, slope_ratio, translation)

    tr = None
    for _ in range(rounds):
        base = build(c)
        tr = tune_translation(base, target.value, tol=tune_tol, cap=cap)
        tuned = base.with_translation(tr.translation)
        c_new = iterate(tuned, a, m_steps)[-1]
        if _circle_gap(c_new, c) <= tol:
            tr = tune_translation(build(c_new), target.value, tol=tune_tol, cap=cap)
            final = build(c_new, tr.translation)
            resid = _circle_gap(iterate(final, a, m_steps)[-1], c_new)
            if resid > 10.0 * tol:
                raise TolUnreachable(
                    f"same-orbit residual {resid:.3e} after final retune"
                )
            return final, tr
        c = c_new
    raise TolUnreachable(
        f"same-orbit placement did not converge in {rounds} rounds"
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one singularity experiment."""

    kind: str
    label: str = "experiment"
    a: float = 0.2
    c: float = 0.6
    sigma_a: float = 2.0
    sigma_c: float = 0.8
    slope_ratio: float = 2.0
    rho_quotients: tuple = tuple([1] * 30)
    x0: float = 0.05
    n_min: int = 5
    n_max: int = 12
    same_orbit_steps: int | None = None
    tune_tol: float = 1e-10
    measure_points: int = 1200
    drift_tol: float = 1e-6
    gap_floor_ratio: float = 0.5
    gap_abs_floor: float = 1e-6
    lorenz_violation_limit: float = 0.05
    threshold: float = 0.90
    cap: int = DEFAULT_ORBIT_CAP

    def __post_init__(self):
        if self.kind not in ("pq", "pl", "rotation"):
            raise ConfigError(f"unknown map kind {self.kind!r}")
        if not 1 <= self.n_min <= self.n_max:
            raise ConfigError("need 1 <= n_min <= n_max")
        qs = tuple(int(k) for k in self.rho_quotients)
        if len(qs) < self.n_max + 1 or any(k < 1 for k in qs):
            raise ConfigError(
                "rho_quotients must reach past n_max with entries >= 1"
            )
        object.__setattr__(self, "rho_quotients", qs)
        if self.measure_points < 2:
            raise ConfigError("measure_points must be at least 2")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.same_orbit_steps is not None and self.same_orbit_steps < 1:
            raise ConfigError("same_orbit_steps must be >= 1 when set")


@dataclass(frozen=True)
class ReportRow:
    n: int
    q_n: int
    gf: float | None
    dist_gap: float
    lorenz_90_length: float
    case_tag: str


VERDICT_SINGULAR = "SINGULAR_EVIDENCE"
VERDICT_BASELINE = "AC_BASELINE"
VERDICT_OPEN = "INCONCLUSIVE"


@dataclass(frozen=True)
class SingularityReport:
    label: str
    kind: str
    map_params: tuple
    rho_quotients: tuple
    translation: float
    v: float
    rows: tuple
    verdict: str
    gap_floor_ok: bool
    lorenz_trend_ok: bool
    min_upper_gap: float
    median_gap: float
    notes: tuple
    # Full mass-length curves, one per row; carried for tabular emission
    # but kept out of the JSON document.
    curves: tuple = ()

    def __post_init__(self):
        ns = [r.n for r in self.rows]
        if ns != sorted(set(ns)):
            raise InvariantFailure("report rows must be strictly increasing in n")
        for r in self.rows:
            if r.dist_gap < 0 or (r.gf is not None and r.gf < 0):
                raise InvariantFailure("gaps cannot be negative")

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "kind": self.kind,
            "map_params": dict(self.map_params),
            "rho_quotients": list(self.rho_quotients),
            "translation": self.translation,
            "v": self.v,
            "rows": [
                {
                    "n": r.n,
                    "q_n": r.q_n,
                    "gf_gap": r.gf,
                    "dist_qn_gap": r.dist_gap,
                    "lorenz_90_length": r.lorenz_90_length,
                    "case_tag": r.case_tag,
                }
                for r in self.rows
            ],
            "verdict": self.verdict,
            "gap_floor_ok": self.gap_floor_ok,
            "lorenz_trend_ok": self.lorenz_trend_ok,
            "min_upper_gap": self.min_upper_gap,
            "median_gap": self.median_gap,
            "notes": list(self.notes),
        }


def build_experiment_map(config: ExperimentConfig):
    """Map described by the config, tuned to the target rotation number."""
    target = ContinuedFraction.from_quotients(config.rho_quotients)
    notes = []
    if config.kind == "rotation":
        m = make_rotation(target.value)
        return m, target.value, notes
    if config.same_orbit_steps is not None:
        m, tr = solve_same_orbit(
            config.kind,
            config.a,
            config.rho_quotients,
            sigma_a=config.sigma_a,
            sigma_c=config.sigma_c,
            slope_ratio=config.slope_ratio,
            m_steps=config.same_orbit_steps,
            tune_tol=config.tune_tol,
            cap=config.cap,
        )
        notes.append(
            f"second break placed on the first break's orbit after "
            f"{config.same_orbit_steps} steps"
        )
        return m, tr.translation, notes
    if config.kind == "pq":
        base = make_pq_two_break(config.a, config.c, config.sigma_a, config.sigma_c)
    else:
        base = make_pl_two_break(config.a, config.c, config.slope_ratio)
    tr = tune_translation(base, target.value, tol=config.tune_tol, cap=config.cap)
    return base.with_translation(tr.translation), tr.translation, notes


def _rho_enclosure(m: CircleMap, cap: int):
    """Deepest affordable certified rotation-number enclosure.

    Farey bisection raises once a test denominator overruns the orbit
    cap, and how deep that happens depends on the quotients, so back off
    by steps of six until a depth fits.
    """
    depth = 40
    while True:
        try:
            est, _ = rho_farey(m, depth=depth, cap=cap)
            return est
        except PrecisionBudgetExceeded:
            if depth <= 10:
                raise
            depth -= 6


def _lorenz_trend_ok(values, limit):
    violations = 0
    for prev, nxt in zip(values, values[1:]):
        if nxt >= prev:
            violations += 1
            if prev <= 0 or (nxt - prev) / prev > limit:
                return False
    return violations <= 1


def singularity_report(config: ExperimentConfig) -> SingularityReport:
    """Full experiment: tune, partition, measure, cover, gap, curve.

    The verdict is SINGULAR_EVIDENCE when the distortion gaps stay
    bounded away from zero on the deep ranks and the length carrying 90%
    of the mass keeps shrinking; AC_BASELINE when both statistics sit at
    their rigid-rotation values; INCONCLUSIVE otherwise.
    """
    m, translation, notes = build_experiment_map(config)
    cf = ContinuedFraction.from_quotients(config.rho_quotients)
    stats = map_stats(m)
    rho_est = _rho_enclosure(m, config.cap)
    om = conjugacy_values(
        m,
        rho_est,
        config.x0,
        config.measure_points,
        drift_tol=config.drift_tol,
        cap=config.cap,
    )

    two_break = len(m.breaks) == 2
    params = None
    mirror = None
    if two_break:
        params = make_cover_params(m.breaks[0].sigma, m.breaks[1].sigma, stats.v)
        mirror = mirror_params(params)
        notes.append(
            f"cover constants: C0={params.c0:.6g}, zeta0={params.zeta0:.6g}, "
            f"R6={params.r6_hat:.6g}"
        )

    rows = []
    curves = []
    for n in range(config.n_min, config.n_max + 1):
        part = build_partition(m, cf, config.x0, n, cap=config.cap)
        qrow = _qn_row(m, cf, part, params, mirror, config.cap)
        curve = mass_length_curve(om, part, threshold=config.threshold)
        curves.append(curve)
        rows.append(
            ReportRow(
                n=n,
                q_n=part.q_n,
                gf=qrow.gf,
                dist_gap=qrow.gap,
                lorenz_90_length=curve.lorenz_90_length,
                case_tag=qrow.case_tag,
            )
        )

    gaps = [r.dist_gap for r in rows]
    upper = gaps[len(gaps) // 2 :]
    min_upper = min(upper)
    med = statistics.median(gaps)
    lorenz = [r.lorenz_90_length for r in rows]

    if two_break:
        # the ratio test alone would accept a sequence of numerical zeros
        gap_floor_ok = (
            min_upper >= config.gap_abs_floor
            and min_upper >= config.gap_floor_ratio * med
        )
        lorenz_trend_ok = _lorenz_trend_ok(lorenz, config.lorenz_violation_limit)
        if gap_floor_ok and lorenz_trend_ok:
            verdict = VERDICT_SINGULAR
        else:
            verdict = VERDICT_OPEN
    else:
        flat = all(
            abs(l - config.threshold) <= 2.0 / r.q_n for l, r in zip(lorenz, rows)
        )
        gap_floor_ok = False
        lorenz_trend_ok = False
        verdict = (
            VERDICT_BASELINE if max(gaps) < 1e-8 and flat else VERDICT_OPEN
        )

    if config.kind == "pq":
        map_params = (
            ("a", config.a),
            ("c", config.c),
            ("sigma_a", config.sigma_a),
            ("sigma_c", config.sigma_c),
        )
    elif config.kind == "pl":
        map_params = (
            ("a", config.a),
            ("c", config.c),
            ("slope_ratio", config.slope_ratio),
        )
    else:
        map_params = (("translation", translation),)

    return SingularityReport(
        label=config.label,
        kind=config.kind,
        map_params=map_params,
        rho_quotients=config.rho_quotients,
        translation=translation,
        v=stats.v,
        rows=tuple(rows),
        verdict=verdict,
        gap_floor_ok=gap_floor_ok,
        lorenz_trend_ok=lorenz_trend_ok,
        min_upper_gap=min_upper,
        median_gap=med,
        notes=tuple(notes),
        curves=tuple(curves),
    )
