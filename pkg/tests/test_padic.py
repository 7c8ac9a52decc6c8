import random
from fractions import Fraction

import pytest

from divzeta.padic import (
    CertifiedSeries,
    InsufficientTruncationError,
    NewtonBoundError,
    PadicScalar,
    PoleEvaluationError,
    PrecisionError,
    check_quadratic_bound,
    eval_entire,
    newton_polygon,
    ord_p,
    prime_power_exponent,
)


# --- scalars -------------------------------------------------------------------


def test_prime_power_validation():
    assert prime_power_exponent(8, 2) == 3
    assert prime_power_exponent(3, 3) == 1
    with pytest.raises(ValueError):
        prime_power_exponent(6, 2)
    with pytest.raises(ValueError):
        prime_power_exponent(4, 4)


def test_scalar_construction_normalizes():
    x = PadicScalar.from_int(12, 2, 6)
    assert x.val == 2 and x.residue == 3
    z = PadicScalar.from_int(0, 2, 6)
    assert z.is_zero and z.abs_precision == 6


def test_scalar_display_format():
    x = PadicScalar.from_int(12, 2, 6)
    assert str(x) == "val=2, residue=3 mod 2^6"


def test_scalar_rational_negative_valuation():
    half = PadicScalar.from_rational(Fraction(1, 2), 2, 5)
    assert half.val == -1 and half.residue == 1
    third = PadicScalar.from_rational(Fraction(-1, 3), 2, 4)
    assert third.val == 0
    # -1/3 = 5 mod 16 since 3*5 = 15 = -1 mod 16
    assert third.residue == 5


def test_addition_min_precision_rule():
    a = PadicScalar.from_int(1, 2, 4)   # abs precision 4
    b = PadicScalar.from_int(8, 2, 8)   # abs precision 11
    s = a + b
    assert s.abs_precision == 4
    assert s.residue_mod(4) == 9


def test_addition_cancellation():
    a = PadicScalar.from_int(5, 2, 6)
    b = PadicScalar.from_int(-5, 2, 6)
    s = a + b
    assert s.is_zero and s.abs_precision == 6


def test_multiplication_valuation_shift():
    a = PadicScalar.from_int(6, 2, 5)
    b = PadicScalar.from_int(20, 2, 5)
    prod = a * b
    assert prod.val == 3  # ord(120) = 3
    assert prod.residue_mod(8) == 120 % 8 == 0 or prod.residue_mod(5 + 3) == 120 % 2**8


def test_division_by_unit():
    a = PadicScalar.from_int(10, 2, 6)
    b = PadicScalar.from_int(5, 2, 6)
    q = a / b
    assert q.val == 1 and q.residue == 1


def test_division_by_nonunit_is_error():
    a = PadicScalar.from_int(1, 2, 6)
    with pytest.raises(PoleEvaluationError):
        a / PadicScalar.from_int(2, 2, 6)
    with pytest.raises(PoleEvaluationError):
        a / PadicScalar.zero(2, 6)


def test_division_by_negative_valuation_allowed():
    a = PadicScalar.from_int(3, 2, 6)
    b = PadicScalar.from_rational(Fraction(1, 2), 2, 6)
    q = a / b
    assert q.val == 1
    assert q.residue == 3


def test_power():
    t = PadicScalar.from_int(3, 5, 4)
    assert t.pow(3).residue_mod(4) == 27


def test_precision_exhaustion_raises():
    a = PadicScalar(2, 0, 1, 2)  # 1 mod 4
    b = PadicScalar(2, 0, 3, 2)  # 3 mod 4 = -1 mod 4
    s = a + b  # certified zero mod 4
    assert s.is_zero
    with pytest.raises(PrecisionError):
        s.residue_mod(6)


# --- series and Newton polygons ------------------------------------------------


def test_newton_polygon_linear_factor():
    s = CertifiedSeries(2, (1, -2))
    np_ = newton_polygon(s)
    assert np_.vertices == ((0, 0), (1, 1))


def test_newton_polygon_three_factor_product():
    # (1 - T)(1 - pT)(1 - p^2 T) for p = 2
    p = 2
    coeffs = [1, -(1 + p + p * p), p + p**2 + p**3, -(p**3)]
    np_ = newton_polygon(CertifiedSeries(p, tuple(coeffs)))
    assert (2, 1) in np_.vertices
    assert np_.value_at(2) == 1


def test_newton_polygon_quadratic_growth_slopes():
    p = 3
    coeffs = tuple(p ** (r * (r - 1) // 2) for r in range(5))
    np_ = newton_polygon(CertifiedSeries(p, coeffs))
    assert np_.slopes() == (0, 1, 2, 3)


def test_newton_polygon_zero_series_rejected():
    with pytest.raises(ValueError):
        newton_polygon(CertifiedSeries(2, (0, 0, 0)))


def test_hull_dominates_all_points():
    rng = random.Random(2024)
    for _ in range(20):
        coeffs = tuple(rng.randint(-40, 40) for _ in range(8))
        if all(c == 0 for c in coeffs):
            continue
        series = CertifiedSeries(2, coeffs)
        hull = newton_polygon(series)
        for r, v in enumerate(series.valuations()):
            if v is None:
                continue
            h = hull.value_at(r)
            assert h is not None and Fraction(v) >= h


def test_check_quadratic_bound_triangular_valuations():
    p = 2
    # prod_{k=0..5} (1 - p^k T): coefficient r has valuation >= r(r-1)/2
    coeffs = [1]
    for k in range(6):
        step = p**k
        nxt = coeffs + [0]
        for i, c in enumerate(coeffs):
            nxt[i + 1] -= step * c
        coeffs = nxt
    series = CertifiedSeries(p, tuple(coeffs))
    vals = series.valuations()
    assert all(v == r * (r - 1) // 2 for r, v in enumerate(vals))
    # r(r-1)/2 >= r^2/4 - 1/4 is (r-1)^2 >= 0: holds for every r
    ok, witness = check_quadratic_bound(series, Fraction(1, 4), Fraction(-1, 4))
    assert ok and witness is None
    ok, witness = check_quadratic_bound(series, Fraction(1), Fraction(0))
    assert not ok and witness == 1


def test_zero_bound_constant_rejected():
    series = CertifiedSeries(2, (1, 2, 16))
    with pytest.raises(NewtonBoundError):
        check_quadratic_bound(series, Fraction(0), Fraction(0))


def test_bound_verified_at_construction():
    with pytest.raises(NewtonBoundError):
        CertifiedSeries(2, (1, 1, 1), (Fraction(1), Fraction(0)))


# --- entire evaluation ----------------------------------------------------------


def _gauss_series(p: int, upto: int) -> CertifiedSeries:
    # sum q^{x^2} T^x with q = p
    return CertifiedSeries(
        p, tuple(p ** (x * x) for x in range(upto + 1)), (Fraction(1), Fraction(0))
    )


def test_eval_entire_at_one():
    s = _gauss_series(2, 12)
    t = PadicScalar.from_int(1, 2, 12)
    assert eval_entire(s, t, 4).residue_mod(4) == 3  # 1 + 2 mod 16


def test_eval_entire_outside_unit_disk():
    s = _gauss_series(2, 12)
    t = PadicScalar.from_rational(Fraction(1, 2), 2, 16)
    value = eval_entire(s, t, 3)
    # exponents x^2 - x: 0, 0, 2, 6, ... -> 1 + 1 + 4 = 6 mod 8
    assert value.residue_mod(3) == 6


def test_eval_entire_constant_series():
    s = CertifiedSeries(2, (1,), (Fraction(1), Fraction(0)), polynomial=True)
    t = PadicScalar.from_int(3, 2, 10)
    assert eval_entire(s, t, 6).residue_mod(6) == 1


def test_eval_entire_requires_bound():
    s = CertifiedSeries(2, (1, 2, 16))
    with pytest.raises(NewtonBoundError):
        eval_entire(s, PadicScalar.from_int(1, 2, 8), 4)


def test_eval_entire_truncation_error():
    s = _gauss_series(2, 2)
    with pytest.raises(InsufficientTruncationError):
        eval_entire(s, PadicScalar.from_rational(Fraction(1, 4), 2, 30), 20)


def test_eval_entire_truncation_independence():
    t = PadicScalar.from_int(2, 2, 20)
    for target in (4, 6, 9):
        short = eval_entire(_gauss_series(2, 10), t, target)
        longer = eval_entire(_gauss_series(2, 15), t, target)
        assert short.equals_mod(longer, target)


def test_product_bound_on_random_series():
    rng = random.Random(31337)
    p = 2
    for _ in range(10):
        a = CertifiedSeries(
            p,
            tuple(p ** (r * r) * rng.randint(1, 5) for r in range(8)),
            (Fraction(1), Fraction(0)),
        )
        b = CertifiedSeries(
            p,
            tuple(p ** (2 * r * r) * rng.randint(1, 5) for r in range(8)),
            (Fraction(2), Fraction(0)),
        )
        prod = a.multiply(b)
        assert prod.np_bound == (Fraction(1, 2), Fraction(0))
        # exact split bound: ord(c_r) >= min over i+j=r of (i^2 + 2 j^2)
        for r, v in enumerate(prod.valuations()):
            if v is None:
                continue
            best = min(i * i + 2 * (r - i) * (r - i) for i in range(r + 1))
            assert v >= best


def test_series_csv_rows():
    s = CertifiedSeries(2, (1, 2, 0, 8))
    rows = s.to_csv_rows()
    assert rows[0] == (0, 1, "0")
    assert rows[2] == (2, 0, "inf")
    assert rows[3] == (3, 8, "3")
