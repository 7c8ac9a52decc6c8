import random

import pytest

from divzeta.cli import builtin_fan, builtin_grading
from divzeta.intlinalg import IntMatrix
from divzeta.toric import (
    Fan,
    FanValidationError,
    ModelError,
    RationalPolytope,
    TorusDivisor,
    UnboundedPolytopeError,
    count_lattice_points,
    divisor_class_group,
    effective_generators,
    enumerate_effective_classes,
    make_model,
    polytope_of_divisor,
    sections_dim,
    validate_fan,
)


def _brute_count(poly: RationalPolytope, box: int = 40) -> int:
    """Independent oracle: scan a box that safely contains the polytope."""
    dim = poly.ineq_matrix.cols
    count = 0

    def feasible(pt):
        for row, b in zip(poly.ineq_matrix.entries, poly.rhs):
            if sum(a * x for a, x in zip(row, pt)) < -b:
                return False
        return True

    def rec(prefix):
        if len(prefix) == dim:
            if feasible(prefix):
                nonlocal count
                count += 1
            return
        for v in range(-box, box + 1):
            rec(prefix + (v,))

    rec(())
    return count


# --- fan validation -----------------------------------------------------------


def test_p2_fan_valid():
    fan = validate_fan(builtin_fan("p2"))
    assert fan.completeness_verified


def test_non_primitive_ray_rejected():
    fan = Fan(2, ((2, 0), (0, 1), (-1, -1)), ((0, 1),), True)
    with pytest.raises(FanValidationError, match="primitive"):
        validate_fan(fan)


def test_duplicate_ray_rejected():
    fan = Fan(2, ((1, 0), (1, 0), (0, 1)), ((0, 1),), True)
    with pytest.raises(FanValidationError, match="duplicate"):
        validate_fan(fan)


def test_incomplete_fan_rejected():
    fan = Fan(2, ((1, 0), (0, 1)), ((0, 1),), True)
    with pytest.raises(FanValidationError, match="gap"):
        validate_fan(fan)


def test_dim1_completeness():
    with pytest.raises(FanValidationError):
        validate_fan(Fan(1, ((1,),), ((0,),), True))
    assert validate_fan(builtin_fan("p1")).completeness_verified


def test_dim3_completeness_unverified():
    # P^1 x P^1 x P^1 rays; asserted complete but not checked in dim 3
    rays = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))
    fan = validate_fan(Fan(3, rays, ((0, 2, 4),), True))
    assert not fan.completeness_verified


# --- polytopes and counting ----------------------------------------------------


def test_polytope_of_divisor_p2():
    fan = validate_fan(builtin_fan("p2"))
    poly = polytope_of_divisor(fan, TorusDivisor((0, 0, 2)))
    # {x >= 0, y >= 0, x + y <= 2}
    assert poly.rhs == (0, 0, 2)
    assert count_lattice_points(poly) == 6


def test_zero_divisor_polytope_is_origin():
    for name in ["p1", "p2", "p1xp1", "wp112"]:
        fan = validate_fan(builtin_fan(name))
        zero = TorusDivisor((0,) * len(fan.rays))
        assert count_lattice_points(polytope_of_divisor(fan, zero)) == 1


def test_count_simple_triangle():
    poly = RationalPolytope(
        IntMatrix.from_rows([[1, 0], [0, 1], [-1, -1]]), (0, 0, 2)
    )
    assert count_lattice_points(poly) == 6
    assert _brute_count(poly, box=5) == 6


def test_count_empty_system():
    poly = RationalPolytope(IntMatrix.from_rows([[1], [-1]]), (-1, 0))
    # x >= 1 and -x >= 0: contradiction
    assert count_lattice_points(poly) == 0


def test_count_weighted_triangle():
    poly = RationalPolytope(
        IntMatrix.from_rows([[1, 0], [0, 1], [-1, -2]]), (0, 0, 5)
    )
    # rows: 6 + 4 + 2
    assert count_lattice_points(poly) == 12


def test_unbounded_detected():
    poly = RationalPolytope(IntMatrix.from_rows([[1, 0], [0, 1]]), (0, 0))
    with pytest.raises(UnboundedPolytopeError):
        count_lattice_points(poly)


def test_count_random_against_brute_force():
    rng = random.Random(777)
    fan = validate_fan(builtin_fan("p2"))
    for _ in range(15):
        coeffs = tuple(rng.randint(0, 4) for _ in range(3))
        poly = polytope_of_divisor(fan, TorusDivisor(coeffs))
        assert count_lattice_points(poly) == _brute_count(poly, box=14)


# --- sections and class groups --------------------------------------------------


def test_sections_closed_forms():
    p2 = validate_fan(builtin_fan("p2"))
    assert sections_dim(p2, TorusDivisor((0, 0, 3))) == 10
    quadric = validate_fan(builtin_fan("p1xp1"))
    assert sections_dim(quadric, TorusDivisor((0, 0, 1, 2))) == 6
    wp = validate_fan(builtin_fan("wp112"))
    assert sections_dim(wp, TorusDivisor((5, 0, 0))) == 12


@pytest.mark.parametrize(
    "name,rank",
    [("p2", 1), ("p1xp1", 2), ("hirzebruch:1", 2), ("wp112", 1)],
)
def test_class_group_ranks(name, rank):
    group = divisor_class_group(validate_fan(builtin_fan(name)))
    assert group.rank == rank
    assert group.torsion_order == 1


def test_linear_equivalence_invariance():
    rng = random.Random(31415)
    for name in ["p2", "p1xp1", "wp112"]:
        fan = validate_fan(builtin_fan(name))
        for _ in range(8):
            base = TorusDivisor(tuple(rng.randint(0, 3) for _ in fan.rays))
            m = [rng.randint(-3, 3) for _ in range(fan.dim)]
            principal = tuple(
                sum(mi * vi for mi, vi in zip(m, ray)) for ray in fan.rays
            )
            shifted = TorusDivisor(
                tuple(b + p for b, p in zip(base.coeffs, principal))
            )
            assert sections_dim(fan, base) == sections_dim(fan, shifted)


def test_monotonicity_in_each_ray():
    fan = validate_fan(builtin_fan("p1xp1"))
    rng = random.Random(555)
    for _ in range(10):
        base = TorusDivisor(tuple(rng.randint(0, 3) for _ in fan.rays))
        l0 = sections_dim(fan, base)
        for i in range(len(fan.rays)):
            bumped = TorusDivisor(
                tuple(c + (1 if j == i else 0) for j, c in enumerate(base.coeffs))
            )
            assert sections_dim(fan, bumped) >= l0


def test_section_count_closed_forms_to_20():
    p1 = validate_fan(builtin_fan("p1"))
    p2 = validate_fan(builtin_fan("p2"))
    quadric = validate_fan(builtin_fan("p1xp1"))
    wp = validate_fan(builtin_fan("wp112"))
    for d in range(21):
        assert sections_dim(p1, TorusDivisor((d, 0))) == d + 1
        assert sections_dim(p2, TorusDivisor((0, 0, d))) == (d + 1) * (d + 2) // 2
        assert sections_dim(quadric, TorusDivisor((0, 0, d, d))) == (d + 1) ** 2
        expected = (d // 2 + 1) * (d - d // 2 + 1)
        assert sections_dim(wp, TorusDivisor((d, 0, 0))) == expected


# --- effective classes -----------------------------------------------------------


def test_effective_generators_p2_single_class():
    model = make_model(builtin_fan("p2"), (1,))
    gens = effective_generators(model)
    assert len(gens) == 1 and gens[0].degree == 1


def test_effective_generators_p1xp1():
    model = make_model(builtin_fan("p1xp1"), (1, 1))
    gens = effective_generators(model)
    assert sorted(g.class_coords for g in gens) == [(0, 1), (1, 0)]
    assert all(g.degree == 1 for g in gens)


def test_effective_generators_f1():
    model = make_model(builtin_fan("hirzebruch:1"), (1, 1))
    gens = effective_generators(model)
    assert len(gens) <= 4
    assert sorted(g.class_coords for g in gens) == [(0, 1), (1, 0), (1, 1)]


def test_enumerate_classes_counts():
    p2 = make_model(builtin_fan("p2"), (1,))
    quadric = make_model(builtin_fan("p1xp1"), (1, 1))
    for d in range(21):
        assert len(enumerate_effective_classes(p2, d)) == 1
        assert len(enumerate_effective_classes(quadric, d)) == d + 1
    assert enumerate_effective_classes(p2, 0)[0].class_coords == (0,)


def test_enumerate_classes_representatives_are_consistent():
    model = make_model(builtin_fan("p1xp1"), (1, 1))
    for cls in enumerate_effective_classes(model, 3):
        assert all(c >= 0 for c in cls.representative.coeffs)
        assert (
            model.class_group.class_coords(cls.representative.coeffs)
            == cls.class_coords
        )
        assert model.degree_of_divisor(cls.representative) == 3


def test_bad_grading_rejected():
    with pytest.raises(ModelError):
        make_model(builtin_fan("p1xp1"), (1, -1))


def test_fan_json_round_trip():
    fan = builtin_fan("hirzebruch:2")
    import json

    reparsed = Fan.from_dict(json.loads(fan.to_json()))
    assert reparsed == fan
