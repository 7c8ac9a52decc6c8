from fractions import Fraction

import pytest

from divzeta.cli import builtin_fan
from divzeta.ehrhart import (
    HeldOutValidationError,
    InconsistentSamplesError,
    InsufficientSamplesError,
    QuasiPolynomial,
    fit_multivariate_qp,
    fit_multivariate_qp_auto,
    fit_quasi_polynomial,
    fit_with_period_search,
    qp_from_json,
    qp_to_json,
    validate_qp,
)
from divzeta.toric import TorusDivisor, sections_dim, validate_fan


def _p2_sections(n: int) -> int:
    return (n + 1) * (n + 2) // 2


def test_fit_p2_hyperplane_family():
    samples = {n: _p2_sections(n) for n in range(4)}
    qp = fit_quasi_polynomial(samples, period=1, degree_bound=2)
    assert qp.period == 1
    assert qp.components[0] == (Fraction(1), Fraction(3, 2), Fraction(1, 2))
    for n in range(30):
        assert qp.evaluate(n) == _p2_sections(n)


def test_fit_wp112_generator_period_two():
    fan = validate_fan(builtin_fan("wp112"))
    div = TorusDivisor((1, 0, 0))
    samples = {n: sections_dim(fan, div.scale(n)) for n in range(10)}
    qp = fit_quasi_polynomial(samples, period=2, degree_bound=2)
    # even part (n/2 + 1)^2, odd part ((n+1)/2)((n+3)/2)
    assert qp.components[0] == (Fraction(1), Fraction(1), Fraction(1, 4))
    assert qp.components[1] == (Fraction(3, 4), Fraction(1), Fraction(1, 4))


def test_fit_constant_samples():
    qp = fit_quasi_polynomial({0: 5, 1: 5, 2: 5}, period=1, degree_bound=2)
    assert qp.degree == 0
    assert qp.components[0] == (Fraction(5),)


def test_insufficient_samples():
    with pytest.raises(InsufficientSamplesError):
        fit_quasi_polynomial({0: 1, 1: 2}, period=1, degree_bound=2)


def test_inconsistent_samples():
    with pytest.raises(InconsistentSamplesError):
        fit_quasi_polynomial({0: 1, 1: 2, 2: 4, 3: 9}, period=1, degree_bound=1)


def test_period_search_finds_smallest():
    fan = validate_fan(builtin_fan("wp112"))
    div = TorusDivisor((1, 0, 0))
    qp = fit_with_period_search(lambda n: sections_dim(fan, div.scale(n)), 2)
    assert qp.period == 2
    linear = fit_with_period_search(lambda n: 3 * n + 1, 2)
    assert linear.period == 1 and linear.degree == 1


def test_training_samples_reproduced_exactly():
    samples = {n: n**3 - 2 * n + 7 for n in range(8)}
    qp = fit_quasi_polynomial(samples, period=2, degree_bound=3)
    for n, v in samples.items():
        assert qp.evaluate(n) == v


def test_validate_qp_reports_witness():
    qp = QuasiPolynomial(1, ((Fraction(1), Fraction(1)),))  # n + 1
    assert validate_qp(qp, lambda n: n + 1, range(51)) == []
    corrupted = QuasiPolynomial(1, ((Fraction(2), Fraction(1)),))
    report = validate_qp(corrupted, lambda n: n + 1, range(5))
    assert report == [0, 1, 2, 3, 4][: len(report)] and 0 in report
    assert validate_qp(qp, lambda n: n + 1, []) == []


def test_serialization_round_trip():
    qp = QuasiPolynomial(
        2,
        ((Fraction(1), Fraction(1), Fraction(1, 4)), (Fraction(3, 4), Fraction(1))),
    )
    again = qp_from_json(qp_to_json(qp))
    assert again == qp


# --- multivariate ------------------------------------------------------------


def test_multivariate_p1xp1():
    fan = validate_fan(builtin_fan("p1xp1"))

    def sampler(a: int, b: int) -> int:
        return sections_dim(fan, TorusDivisor((0, 0, a + 1, b + 1)))

    mqp = fit_multivariate_qp(sampler, 2, (1, 1), (2, 2), threshold=0)
    assert mqp.periods == (1, 1)
    for a in range(0, 51, 10):
        for b in range(0, 51, 10):
            assert mqp.evaluate((a, b)) == (a + 2) * (b + 2)


def test_multivariate_single_variable_matches_univariate():
    samples = {n: 2 * n * n + 3 for n in range(6)}
    qp = fit_quasi_polynomial(samples, 1, 2)
    mqp = fit_multivariate_qp(lambda n: 2 * n * n + 3, 1, (1,), (2,), threshold=0)
    for n in range(12):
        assert mqp.evaluate((n,)) == qp.evaluate(n)


def test_multivariate_p2_shifted_family():
    fan = validate_fan(builtin_fan("p2"))

    def sampler(n: int) -> int:
        return sections_dim(fan, TorusDivisor((0, 0, n + 1)))

    mqp = fit_multivariate_qp(sampler, 1, (1,), (2,), threshold=0)
    for n in range(0, 51, 7):
        assert mqp.evaluate((n,)) == (n + 2) * (n + 3) // 2


def test_multivariate_validation_failure():
    # not a quasi-polynomial of the claimed degree: validation must catch it
    with pytest.raises(HeldOutValidationError):
        fit_multivariate_qp(lambda n: 2**n, 1, (1,), (2,), threshold=0)


def test_threshold_doubling_discovery():
    # quasi-polynomial only beyond n = 2
    def sampler(n: int) -> int:
        return n * n if n >= 2 else 17

    mqp = fit_multivariate_qp_auto(sampler, 1, (2,))
    assert mqp.threshold >= 1
    for n in range(mqp.threshold + 2, mqp.threshold + 20):
        assert mqp.evaluate((n,)) == n * n


def test_toric_fit_degree_bounds():
    # fitted degree stays within [1, dim] for toric data
    fan = validate_fan(builtin_fan("p2"))
    qp = fit_with_period_search(
        lambda n: sections_dim(fan, TorusDivisor((0, 0, n))), 2
    )
    assert 1 <= qp.degree <= 2
