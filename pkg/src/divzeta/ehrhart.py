"""Quasi-polynomials: representation, exact interpolation from sample values,
period discovery, multivariate fitting by induction on the variables, and
held-out validation.

All interpolation is exact: linear systems are solved by fraction-free
(Bareiss) elimination on integer-scaled rows, so a fit either reproduces its
samples exactly or raises.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from .polynomial import Poly


class FitError(ValueError):
    pass


class InsufficientSamplesError(FitError):
    pass


class InconsistentSamplesError(FitError):
    pass


class HeldOutValidationError(FitError):
    pass


# --- exact linear solving ----------------------------------------------------


def solve_exact(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]):
    """Solve M x = rhs exactly; None if inconsistent.

    The system may be overdetermined; extra rows are checked against the
    solution.  Underdetermined systems raise (they do not occur for the
    Vandermonde systems built here).
    """
    nrows = len(matrix)
    if nrows == 0:
        return []
    ncols = len(matrix[0])
    # scale rows to integers
    rows = []
    for r, b in zip(matrix, rhs):
        denoms = [Fraction(x).denominator for x in r] + [Fraction(b).denominator]
        lcm = 1
        for d in denoms:
            lcm = lcm * d // _gcd(lcm, d)
        rows.append([int(Fraction(x) * lcm) for x in r] + [int(Fraction(b) * lcm)])

    # fraction-free Gaussian elimination (Bareiss)
    piv_rows: list[list[int]] = []
    piv_cols: list[int] = []
    prev = 1
    work = [row[:] for row in rows]
    col = 0
    while col < ncols and len(piv_rows) < len(work):
        k = len(piv_rows)
        pivot_idx = next((i for i in range(k, len(work)) if work[i][col] != 0), None)
        if pivot_idx is None:
            col += 1
            continue
        work[k], work[pivot_idx] = work[pivot_idx], work[k]
        for i in range(k + 1, len(work)):
            if work[i][col] == 0 and prev == 1:
                pass
            row_i = work[i]
            row_k = work[k]
            work[i] = [
                (row_i[j] * row_k[col] - row_k[j] * row_i[col]) // prev
                for j in range(ncols + 1)
            ]
        prev = work[k][col]
        piv_rows.append(work[k])
        piv_cols.append(col)
        col += 1
    # rows beyond the pivots must now be all zero (consistency)
    for i in range(len(piv_rows), len(work)):
        if any(work[i][j] != 0 for j in range(ncols + 1)):
            if all(work[i][j] == 0 for j in range(ncols)):
                return None
            return None
    if len(piv_cols) < ncols:
        raise FitError("underdetermined interpolation system")
    # back substitution over fractions
    x: list[Fraction] = [Fraction(0)] * ncols
    for k in range(len(piv_rows) - 1, -1, -1):
        row = piv_rows[k]
        c = piv_cols[k]
        acc = Fraction(row[ncols])
        for j in range(c + 1, ncols):
            acc -= Fraction(row[j]) * x[j]
        x[c] = acc / row[c]
    return x


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a if a else 1


# --- univariate quasi-polynomials -------------------------------------------


@dataclass(frozen=True)
class QuasiPolynomial:
    """period component polynomials with exact rational coefficients
    (ascending); evaluation at n uses component n mod period."""

    period: int
    components: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if self.period < 1 or len(self.components) != self.period:
            raise ValueError("component count must equal the period")

    @property
    def degree(self) -> int:
        return max(len(c) - 1 for c in self.components)

    def evaluate(self, n: int) -> Fraction:
        comp = self.components[n % self.period]
        total = Fraction(0)
        for k, c in enumerate(comp):
            total += c * Fraction(n) ** k
        return total

    def component_poly(self, residue: int) -> Poly:
        return Poly.from_terms(1, {(k,): c for k, c in enumerate(self.components[residue])})


def _trim(coeffs: list[Fraction]) -> tuple[Fraction, ...]:
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


def fit_quasi_polynomial(
    samples: Mapping[int, Fraction | int], period: int, degree_bound: int
) -> QuasiPolynomial:
    """Exact interpolation per residue class.  Needs at least degree_bound+1
    samples in every class; extra samples must be consistent."""
    if period < 1:
        raise ValueError("period must be positive")
    if degree_bound < 0:
        raise ValueError("degree bound must be nonnegative")
    components = []
    for residue in range(period):
        nodes = sorted(n for n in samples if n % period == residue)
        if len(nodes) < degree_bound + 1:
            raise InsufficientSamplesError(
                f"residue class {residue} mod {period} has {len(nodes)} samples; "
                f"need {degree_bound + 1}"
            )
        matrix = [[Fraction(n) ** k for k in range(degree_bound + 1)] for n in nodes]
        rhs = [Fraction(samples[n]) for n in nodes]
        sol = solve_exact(matrix, rhs)
        if sol is None:
            raise InconsistentSamplesError(
                f"samples in residue class {residue} mod {period} are not "
                f"polynomial of degree <= {degree_bound}"
            )
        components.append(_trim(list(sol)))
    return QuasiPolynomial(period, tuple(components))


def fit_with_period_search(
    sampler: Callable[[int], int],
    degree_bound: int,
    max_period: int = 12,
    validate_to: int = 40,
    start: int = 0,
) -> QuasiPolynomial:
    """Smallest period in 1..max_period whose exact fit also matches held-out
    values on [start, start + validate_to]."""
    span = max(validate_to, max_period * (degree_bound + 2))
    values = {n: sampler(n) for n in range(start, start + span + 1)}
    for period in range(1, max_period + 1):
        training = {
            n: values[n] for n in range(start, start + period * (degree_bound + 1))
        }
        try:
            qp = fit_quasi_polynomial(training, period, degree_bound)
        except FitError:
            continue
        if all(qp.evaluate(n) == values[n] for n in values):
            return qp
    raise FitError(f"no period up to {max_period} fits the samples")


def validate_qp(qp, sampler: Callable, grid) -> list:
    """All grid points where qp and the sampler disagree; empty means pass."""
    mismatches = []
    for point in grid:
        if isinstance(point, int):
            got, want = qp.evaluate(point), sampler(point)
        else:
            got, want = qp.evaluate(point), sampler(point)
        if got != Fraction(want):
            mismatches.append(point)
    return mismatches


# --- serialization ------------------------------------------------------------


def qp_to_json(qp: QuasiPolynomial) -> str:
    return json.dumps(
        {
            "period": qp.period,
            "components": [
                [f"{c.numerator}/{c.denominator}" for c in comp] for comp in qp.components
            ],
        }
    )


def qp_from_json(text: str) -> QuasiPolynomial:
    data = json.loads(text)
    comps = tuple(
        tuple(Fraction(entry) for entry in comp) for comp in data["components"]
    )
    return QuasiPolynomial(int(data["period"]), comps)


# --- multivariate quasi-polynomials ------------------------------------------


@dataclass(frozen=True)
class MultivariateQuasiPolynomial:
    """Per-variable periods; component polynomials indexed by residue tuples;
    equality with the target is only claimed for all arguments >= threshold."""

    periods: tuple[int, ...]
    components: tuple[tuple[tuple[int, ...], Poly], ...]  # sorted (residues, poly)
    threshold: int

    @property
    def variable_count(self) -> int:
        return len(self.periods)

    def component(self, residues: tuple[int, ...]) -> Poly:
        for key, poly in self.components:
            if key == residues:
                return poly
        raise KeyError(residues)

    def evaluate(self, point: Sequence[int]) -> Fraction:
        if len(point) != len(self.periods):
            raise ValueError("point length mismatch")
        if any(x < 0 for x in point):
            raise ValueError("evaluation requires nonnegative arguments")
        residues = tuple(x % p for x, p in zip(point, self.periods))
        return self.component(residues).eval(point)


def _fit_recursive(
    value_fn: Callable[[tuple[int, ...]], Fraction],
    r: int,
    periods: Sequence[int],
    degree_bounds: Sequence[int],
    threshold: int,
) -> MultivariateQuasiPolynomial:
    if r == 1:
        period, bound = periods[0], degree_bounds[0]
        samples = {
            n: value_fn((n,)) for n in range(threshold, threshold + period * (bound + 1))
        }
        qp = fit_quasi_polynomial(samples, period, bound)
        comps = tuple(((res,), qp.component_poly(res)) for res in range(period))
        return MultivariateQuasiPolynomial((period,), comps, threshold)

    p_last, d_last = periods[-1], degree_bounds[-1]
    fit_cache: dict[tuple[int, ...], QuasiPolynomial] = {}

    def last_var_fit(prefix: tuple[int, ...]) -> QuasiPolynomial:
        if prefix not in fit_cache:
            samples = {
                n: value_fn(prefix + (n,))
                for n in range(threshold, threshold + p_last * (d_last + 1))
            }
            fit_cache[prefix] = fit_quasi_polynomial(samples, p_last, d_last)
        return fit_cache[prefix]

    def coeff_fn(res_last: int, j: int) -> Callable[[tuple[int, ...]], Fraction]:
        def fn(prefix: tuple[int, ...]) -> Fraction:
            comp = last_var_fit(prefix).components[res_last]
            return comp[j] if j < len(comp) else Fraction(0)

        return fn

    sub_components: dict[tuple[int, ...], Poly] = {}
    for res_last in range(p_last):
        coeff_mqps = [
            _fit_recursive(coeff_fn(res_last, j), r - 1, periods[:-1], degree_bounds[:-1], threshold)
            for j in range(d_last + 1)
        ]
        prefix_residues = {key for mqp in coeff_mqps for key, _ in mqp.components}
        for pref in sorted(prefix_residues):
            total = Poly.zero(r)
            x_last = Poly.var(r - 1, r)
            for j, mqp in enumerate(coeff_mqps):
                alpha = mqp.component(pref)
                embedded = alpha.substitute([Poly.var(i, r) for i in range(r - 1)])
                total = total + embedded * x_last.pow(j)
            sub_components[pref + (res_last,)] = total
    comps = tuple(sorted(sub_components.items()))
    return MultivariateQuasiPolynomial(tuple(periods), comps, threshold)


def fit_multivariate_qp(
    sampler: Callable[..., int],
    r: int,
    periods: Sequence[int],
    degree_bounds: Sequence[int],
    threshold: int = 0,
    holdout_points: int = 3,
) -> MultivariateQuasiPolynomial:
    """Fit l-style data as a quasi-polynomial in r variables by induction on
    the variables (fix the leading ones, fit the last, then fit each
    coefficient recursively).  Validates on a held-out grid shifted past the
    training range and raises HeldOutValidationError on any mismatch."""
    if r < 1:
        raise ValueError("need at least one variable")
    if len(periods) != r or len(degree_bounds) != r:
        raise ValueError("periods and degree bounds must have one entry per variable")

    def value_fn(point: tuple[int, ...]) -> Fraction:
        return Fraction(sampler(*point))

    mqp = _fit_recursive(value_fn, r, tuple(periods), tuple(degree_bounds), threshold)
    span = max(p * (d + 1) for p, d in zip(periods, degree_bounds))
    base = threshold + span
    grid = _grid(
        [range(base, base + holdout_points) for _ in range(r)]
    )
    for point in grid:
        if mqp.evaluate(point) != Fraction(sampler(*point)):
            raise HeldOutValidationError(
                f"held-out validation failed at {point}: "
                f"fit {mqp.evaluate(point)} != sample {sampler(*point)}"
            )
    return mqp


def fit_multivariate_qp_auto(
    sampler: Callable[..., int],
    r: int,
    degree_bounds: Sequence[int],
    max_period: int = 12,
    threshold_cap: int = 16,
) -> MultivariateQuasiPolynomial:
    """Discover per-variable periods (smallest that fit, probed coordinate-wise
    past the threshold) and the threshold itself (doubling search from 0)."""
    threshold = 0
    while True:
        try:
            periods = []
            for i in range(r):
                def axis_sampler(n: int, i=i) -> int:
                    point = [max(1, threshold)] * r
                    point[i] = n
                    return sampler(*point)

                qp = fit_with_period_search(
                    axis_sampler, degree_bounds[i], max_period, start=threshold
                )
                periods.append(qp.period)
            return fit_multivariate_qp(sampler, r, periods, degree_bounds, threshold)
        except FitError:
            threshold = 1 if threshold == 0 else threshold * 2
            if threshold > threshold_cap:
                raise


def _grid(ranges) -> list[tuple[int, ...]]:
    out = [()]
    for rng in ranges:
        out = [pt + (v,) for pt in out for v in rng]
    return out
