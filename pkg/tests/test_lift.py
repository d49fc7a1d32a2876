import random
from fractions import Fraction
from math import gcd

import pytest

from windtree.billiard import (Outcome, classify_trajectory, make_state,
                               midpoint_state, regular_start)
from windtree.errors import DomainError
from windtree.exact import Params, PointQ, Slope, classify_params
from windtree.lift import (LiftKind, abc_strip_check, fold_cell_point,
                           fold_to_table, inverse_word, lift_direction,
                           transport_point, wpoint_orbit_partition)
from windtree.origami import build_origami, sl2z_act

HALF = classify_params(1, 2, 1, 2)
TWO_THIRDS = classify_params(2, 3, 2, 3)


def reduced_slopes(limit):
    return [Slope(u, v) for u in range(1, limit + 1) for v in range(1, limit + 1)
            if gcd(u, v) == 1]


def _is_int(x):
    return x.denominator == 1


def _is_half_int(x):
    return x.denominator == 2


def test_fold_special_points_to_table():
    for params in (HALF, TWO_THIRDS, classify_params(1, 4, 1, 2)):
        og = build_origami(params)
        marked = og.marked_by_label()
        folded = {lab: fold_cell_point(params, mp.cell, mp.x, mp.y)
                  for lab, mp in marked.items()}
        a2, b2 = params.a / 2, params.b / 2
        # E is the midpoint of a horizontal obstacle side, F of a vertical one
        assert _is_int(folded["E"].x) and abs(folded["E"].y) % 1 in (b2, 1 - b2)
        assert _is_int(folded["F"].y) and abs(folded["F"].x) % 1 in (a2, 1 - a2)
        # D is an obstacle corner
        assert abs(folded["D"].x) % 1 in (a2, 1 - a2)
        assert abs(folded["D"].y) % 1 in (b2, 1 - b2)
        # A, B, C are the three centers of symmetry between obstacles
        assert _is_half_int(folded["A"].x) and _is_half_int(folded["A"].y)
        assert _is_int(folded["B"].x) and _is_half_int(folded["B"].y)
        assert _is_half_int(folded["C"].x) and _is_int(folded["C"].y)
    # frozen half-size representatives (fold lands in [-1/2, 1/2)^2)
    og = build_origami(HALF)
    marked = og.marked_by_label()
    folded = {lab: fold_cell_point(HALF, mp.cell, mp.x, mp.y)
              for lab, mp in marked.items()}
    assert folded["E"] == PointQ(Fraction(0), Fraction(1, 4))
    assert folded["F"] == PointQ(Fraction(1, 4), Fraction(0))
    assert folded["D"] == PointQ(Fraction(1, 4), Fraction(1, 4))
    assert folded["A"] == PointQ(Fraction(-1, 2), Fraction(-1, 2))


def test_transport_point_roundtrip():
    og = build_origami(TWO_THIRDS)
    rng = random.Random(3)
    for _ in range(20):
        word = "".join(rng.choice("TtSs") for _ in range(rng.randint(0, 8)))
        cell = rng.randrange(og.n)
        x, y = Fraction(rng.randrange(1, 7), 7), Fraction(rng.randrange(1, 5), 5)
        moved = transport_point(og, word, cell, x, y)
        ren = sl2z_act(og, word)
        back = transport_point(ren, inverse_word(word), *moved)
        assert back == (cell, x, y)


def test_good_directions_are_strongly_parabolic_with_factor_two():
    for slope in (Slope(1, 1), Slope(1, 3), Slope(3, 1), Slope(5, 3), Slope(3, 7)):
        report = lift_direction(HALF, slope)
        assert report.strongly_parabolic
        assert len(report.x_behavior) == 1
        assert report.x_behavior[0].kind is LiftKind.CLOSES
        assert report.x_behavior[0].factor == 2


def test_doubling_law_on_rectangular_tables():
    # the factor-2 law is not special to square obstacles; note the good
    # directions need not be odd/odd away from a = b = 1/2
    from windtree.origami import enumerate_good_directions
    expected = {
        (1, 2, 1, 4): ["1/2", "3/2"],
        (3, 4, 1, 2): ["2/5", "2/3", "2/1"],
        (1, 4, 3, 4): ["1/5", "1/3", "3/5", "1/1", "5/3", "3/1", "5/1"],
        (1, 2, 3, 4): ["1/2", "3/2", "5/2"],
    }
    for pqrs, dirs in expected.items():
        params = classify_params(*pqrs)
        good = enumerate_good_directions(params, 5)
        assert [str(s) for s in good] == dirs
        for slope in good:
            report = lift_direction(params, slope)
            assert report.strongly_parabolic
            assert report.x_behavior[0].factor == 2


def test_two_cylinder_directions_on_half_table_are_all_strips():
    # even-parity slopes: both cylinders stretch to infinite strips
    for slope in (Slope(1, 2), Slope(2, 1), Slope(3, 4)):
        report = lift_direction(HALF, slope)
        assert len(report.y_decomposition.cylinders) == 2
        assert not report.strongly_parabolic
        assert all(b.kind is LiftKind.STRIP for b in report.x_behavior)


def test_horizontal_direction_mixes_strip_and_double_cover():
    report = lift_direction(HALF, Slope(0, 1))
    kinds = sorted(b.kind.value for b in report.x_behavior)
    assert kinds == ["ClosesWithFactor", "Strip"]
    assert not report.strongly_parabolic
    for cyl, b in zip(report.y_decomposition.cylinders, report.x_behavior):
        if b.kind is LiftKind.CLOSES:
            assert b.factor == 2
            assert set(cyl.waist_marked_points) == {"C", "F"}
        else:
            assert set(cyl.waist_marked_points) == {"A", "B"}


def test_even_odd_class_has_no_completely_periodic_direction():
    for slope in reduced_slopes(7):
        report = lift_direction(TWO_THIRDS, slope)
        assert any(b.kind is LiftKind.STRIP for b in report.x_behavior), str(slope)


def test_no_completely_periodic_direction_on_more_even_odd_tables():
    for pqrs in ((2, 5, 2, 3), (2, 3, 2, 5), (4, 5, 2, 3)):
        params = classify_params(*pqrs)
        for slope in reduced_slopes(5):
            report = lift_direction(params, slope)
            assert any(b.kind is LiftKind.STRIP for b in report.x_behavior), \
                (str(params), str(slope))


def test_even_odd_one_cylinder_directions_kill_all_periodic_orbits():
    one_cyl = [sl for sl in reduced_slopes(5)
               if len(lift_direction(TWO_THIRDS, sl).y_decomposition.cylinders) == 1]
    assert one_cyl, "expected some one-cylinder directions"
    for slope in one_cyl:
        checked = 0
        for k in range(3, 40):
            if checked >= 10:
                break
            for side in ("top", "left"):
                length = TWO_THIRDS.a if side == "top" else TWO_THIRDS.b
                try:
                    state = make_state(TWO_THIRDS, (0, 0), side,
                                       Fraction(1, k) * length, slope,
                                       (1, 1) if side == "top" else (-1, 1))
                except DomainError:
                    continue
                out = classify_trajectory(state, TWO_THIRDS)
                if out.kind is Outcome.SINGULAR:
                    continue
                assert out.kind is Outcome.ESCAPING, (str(slope), side, k)
                checked += 1
        assert checked >= 10


def test_strongly_parabolic_implies_periodic_from_random_starts():
    rng = random.Random(11)
    report = lift_direction(HALF, Slope(3, 7))
    assert report.strongly_parabolic
    found = 0
    while found < 20:
        side = rng.choice(("top", "bottom", "left", "right"))
        length = HALF.a if side in ("top", "bottom") else HALF.b
        off = Fraction(rng.randrange(1, 64), 64) * length
        orient = (rng.choice((1, -1)), rng.choice((1, -1)))
        try:
            state = make_state(HALF, (0, 0), side, off, Slope(3, 7), orient)
        except DomainError:
            continue
        out = classify_trajectory(state, HALF)
        if out.kind is Outcome.SINGULAR:
            continue
        assert out.kind is Outcome.PERIODIC
        found += 1


def test_abc_strip_check_on_two_cylinder_directions():
    assert abc_strip_check(HALF, Slope(1, 2))
    assert abc_strip_check(HALF, Slope(2, 1))
    assert abc_strip_check(HALF, Slope(0, 1))
    with pytest.raises(DomainError):
        abc_strip_check(HALF, Slope(1, 1))  # one cylinder: waist holds E, F


def test_abc_strip_check_near_one_for_two_thirds():
    for slope in (Slope(16, 17), Slope(17, 16), Slope(9, 8)):
        try:
            assert abc_strip_check(TWO_THIRDS, slope)
        except DomainError:
            # some directions put only one block center on each waist
            report = lift_direction(TWO_THIRDS, slope)
            assert any(b.kind is LiftKind.STRIP for b in report.x_behavior)


def test_wpoint_orbit_partition():
    part = wpoint_orbit_partition(HALF)
    assert part == frozenset({frozenset({"A", "B", "C"}),
                              frozenset({"D"}),
                              frozenset({"E", "F"})})
    with pytest.raises(DomainError):
        wpoint_orbit_partition(TWO_THIRDS)


def test_wpoint_partition_invariant_under_random_words():
    rng = random.Random(5)
    base = wpoint_orbit_partition(HALF)
    for _ in range(10):
        extra = []
        for _ in range(rng.randint(1, 3)):
            # words in the two affine generators only
            extra.append("".join(rng.choice(("TT", "S"))
                                 for _ in range(rng.randint(1, 5))))
        part = wpoint_orbit_partition(HALF, words=("TT", "S", *extra))
        assert part == base
