import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from circlebreak.errors import (
    InfeasibleDerivatives,
    InvalidGeometry,
    PrecisionBudgetExceeded,
)
from circlebreak.maps import (
    evaluate,
    invert,
    iterate,
    make_pl_two_break,
    make_pq_two_break,
    make_rotation,
    map_stats,
    one_sided_derivatives,
    validate_p_homeo,
)
from circlebreak.numerics import to_circle

from conftest import GOLDEN


def test_rotation_evaluate():
    m = make_rotation(0.25)
    assert evaluate(m, 0.9) == pytest.approx(1.15, abs=0)
    assert to_circle(evaluate(m, 0.9)) == pytest.approx(0.15, abs=1e-16)


def test_pl_lift_continuous_at_breaks():
    m = make_pl_two_break(0.3, 0.7, 2.0)
    for b in m.breaks:
        lo = evaluate(m, b.location - 1e-12)
        hi = evaluate(m, b.location + 1e-12)
        assert abs(hi - lo) < 1e-11


def test_pq_degree_one_at_origin():
    m = make_pq_two_break(0.2, 0.6, 2.0, 0.8)
    assert evaluate(m, 1.0) - evaluate(m, 0.0) == 1.0


@given(st.floats(min_value=-3.0, max_value=3.0, allow_nan=False))
def test_degree_one_everywhere(x):
    m = make_pq_two_break(0.2, 0.6, 2.0, 0.8, translation=0.37)
    assert abs(evaluate(m, x + 1.0) - evaluate(m, x) - 1.0) < 1e-13


def test_one_sided_derivatives():
    rot = make_rotation(0.3)
    assert one_sided_derivatives(rot, 0.5) == (1.0, 1.0)

    pq = make_pq_two_break(0.2, 0.6, 2.0, 0.8)
    dm, dp = one_sided_derivatives(pq, 0.2)
    assert dm / dp == pytest.approx(2.0, abs=1e-14)
    dm, dp = one_sided_derivatives(pq, 0.6)
    assert dm / dp == pytest.approx(0.8, abs=1e-14)

    pl = make_pl_two_break(0.3, 0.7, 2.0)
    dm, dp = one_sided_derivatives(pl, 0.5)
    assert dm == dp  # interior of the (a, c) arc: one active slope


def test_iterate_rotation_exact():
    rho = 0.3819660112501051
    m = make_rotation(rho)
    orb = iterate(m, 0.0, 3)
    assert orb == [0.0, to_circle(rho), to_circle(2 * rho), to_circle(3 * rho)]


def test_iterate_roundtrip():
    m = make_pq_two_break(0.2, 0.6, 2.0, 0.8, translation=0.61)
    fwd = iterate(m, 0.123, 1000)
    back = iterate(m, fwd[-1], 1000, direction="backward")
    assert abs(back[-1] - 0.123) < 1e-10


def test_orbit_order_matches_rotation(pq_map, gcf):
    # Conjugacy preserves circular order only, so compare the cyclic
    # sequences anchored at the base point.
    def cyclic_order(points):
        perm = sorted(range(len(points)), key=points.__getitem__)
        i = perm.index(0)
        return perm[i:] + perm[:i]

    orb = iterate(pq_map, 0.05, 12)
    ref = [to_circle(0.05 + i * gcf.value) for i in range(13)]
    assert cyclic_order(orb) == cyclic_order(ref)


def test_iterate_cap():
    m = make_rotation(GOLDEN)
    with pytest.raises(PrecisionBudgetExceeded):
        iterate(m, 0.0, 100, cap=50)


def test_pl_slopes_closed_form():
    m = make_pl_two_break(0.0, 0.5, 2.0)
    dm, dp = one_sided_derivatives(m, 0.25)
    assert dm == pytest.approx(4.0 / 3.0, abs=1e-15)
    dm, dp = one_sided_derivatives(m, 0.75)
    assert dm == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_pl_rejects_slope_ratio_one():
    with pytest.raises(InvalidGeometry):
        make_pl_two_break(0.3, 0.7, 1.0)


def test_pl_jump_product_cancels():
    rng = random.Random(11)
    for _ in range(20):
        a, c = rng.random(), rng.random()
        if abs(a - c) < 1e-3:
            continue
        r = math.exp(rng.uniform(-1.5, 1.5))
        if abs(r - 1) < 1e-3:
            continue
        m = make_pl_two_break(a, c, r)
        prod = m.breaks[0].sigma * m.breaks[1].sigma
        assert prod == pytest.approx(1.0, abs=1e-14)


def test_pq_rejects_degenerate():
    with pytest.raises(InvalidGeometry):
        make_pq_two_break(0.2, 0.6, 1.0, 1.0)
    with pytest.raises(InvalidGeometry):
        make_pq_two_break(0.2, 0.2, 2.0, 0.8)
    with pytest.raises((InvalidGeometry, InfeasibleDerivatives)):
        make_pq_two_break(0.2, 0.6, -2.0, 0.8)


def test_pq_stats():
    m = make_pq_two_break(0.2, 0.6, 2.0, 0.8)
    stats = validate_p_homeo(m)
    assert stats.sigma_product == pytest.approx(1.6, abs=1e-14)
    # Df is monotone on each arc, so the smooth variation equals the jump
    # sizes again and v doubles them.
    v_expected = 2 * (abs(math.log(2.0)) + abs(math.log(0.8)))
    assert stats.v == pytest.approx(v_expected, abs=1e-12)
    assert stats.lam == pytest.approx((1 + math.exp(-stats.v)) ** -0.5, abs=1e-14)


def test_rotation_stats():
    stats = validate_p_homeo(make_rotation(GOLDEN))
    assert stats.v == 0.0
    assert stats.lam == pytest.approx(0.7071067811865476, abs=1e-15)
    assert stats.sigma_product == 1.0


def test_pl_stats():
    stats = map_stats(make_pl_two_break(0.3, 0.7, 2.0))
    assert stats.v == pytest.approx(2 * math.log(2.0), abs=1e-12)
    assert stats.sigma_product == pytest.approx(1.0, abs=1e-14)


def test_translation_family():
    base = make_pq_two_break(0.2, 0.6, 2.0, 0.8)
    shifted = base.with_translation(0.7)
    for x in (0.0, 0.15, 0.2, 0.61, 0.93):
        assert evaluate(shifted, x) == evaluate(base, x) + 0.7
    assert shifted.breaks == base.breaks


def test_invert_roundtrip():
    m = make_pq_two_break(0.2, 0.6, 2.0, 0.8, translation=0.3)
    rng = random.Random(5)
    for _ in range(50):
        x = rng.uniform(-2, 2)
        assert invert(m, evaluate(m, x)) == pytest.approx(x, abs=1e-12)


def test_monotone_lift():
    m = make_pq_two_break(0.2, 0.6, 2.0, 0.8)
    rng = random.Random(2)
    xs = sorted(rng.uniform(0, 1) for _ in range(500))
    ys = [evaluate(m, x) for x in xs]
    assert all(b > a for a, b in zip(ys, ys[1:]))
