"""Certified p-adic arithmetic: scalars with explicit precision tracking,
truncated power series with Newton-polygon lower bounds, and evaluation of
entire series with certified error, inside and outside the unit disk.

A scalar represents p^val * (residue + O(p^prec)) with residue a unit
(or the certified zero 0 + O(p^prec)).  Precision propagates explicitly:
minimum absolute precision on addition, valuation shift on multiplication.
There is no silent precision loss; running out of certified digits raises.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence


class PrecisionError(ArithmeticError):
    pass


class PoleEvaluationError(ZeroDivisionError):
    pass


class NewtonBoundError(ValueError):
    pass


class InsufficientTruncationError(ValueError):
    pass


def _check_prime(p: int) -> None:
    if p < 2 or any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
        raise ValueError(f"{p} is not prime")


def prime_power_exponent(q: int, p: int) -> int:
    """e with q == p^e, e >= 1; raises otherwise."""
    _check_prime(p)
    if q < p:
        raise ValueError(f"q={q} is not a power of p={p}")
    e = 0
    while q % p == 0:
        q //= p
        e += 1
    if q != 1 or e < 1:
        raise ValueError("q must be a positive power of p")
    return e


def ord_p(n: int, p: int) -> Optional[int]:
    """p-adic valuation of an integer; None for 0 (infinite)."""
    if n == 0:
        return None
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class PadicScalar:
    """p^val * unit known mod p^prec; val=None encodes a certified zero known
    to absolute precision prec."""

    p: int
    val: Optional[int]
    residue: int
    prec: int

    def __post_init__(self):
        if self.prec < 1:
            raise PrecisionError("scalar with no certified digits")
        if self.val is None:
            if self.residue != 0:
                raise ValueError("certified zero must have residue 0")
        else:
            if not (0 < self.residue < self.p**self.prec):
                raise ValueError("residue out of range")
            if self.residue % self.p == 0:
                raise ValueError("residue must be a unit (normalize on construction)")

    # -- constructors -------------------------------------------------------
    @staticmethod
    def zero(p: int, abs_prec: int) -> "PadicScalar":
        return PadicScalar(p, None, 0, abs_prec)

    @staticmethod
    def from_int(n: int, p: int, prec: int) -> "PadicScalar":
        _check_prime(p)
        if n == 0:
            return PadicScalar.zero(p, prec)
        v = 0
        while n % p == 0:
            n //= p
            v += 1
        return PadicScalar(p, v, n % p**prec, prec)

    @staticmethod
    def from_rational(x: Fraction, p: int, prec: int) -> "PadicScalar":
        _check_prime(p)
        x = Fraction(x)
        if x == 0:
            return PadicScalar.zero(p, prec)
        num, den = x.numerator, x.denominator
        v = 0
        while num % p == 0:
            num //= p
            v += 1
        while den % p == 0:
            den //= p
            v -= 1
        modulus = p**prec
        unit = num * pow(den, -1, modulus) % modulus
        return PadicScalar(p, v, unit, prec)

    # -- structure ----------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.val is None

    @property
    def abs_precision(self) -> int:
        return self.prec if self.val is None else self.val + self.prec

    def known_valuation(self) -> Optional[int]:
        """Exact valuation when finite; None means 'zero to precision'."""
        return self.val

    def residue_mod(self, n: int) -> int:
        """Integer representative of the value mod p^n (requires val >= 0)."""
        if self.abs_precision < n:
            raise PrecisionError(f"only {self.abs_precision} certified digits, need {n}")
        if self.val is None:
            return 0
        if self.val < 0:
            raise ValueError("value has negative valuation; no integer residue")
        return self.residue * self.p**self.val % self.p**n

    def reduce_abs(self, n: int) -> "PadicScalar":
        """Truncate to absolute precision n."""
        if self.abs_precision < n:
            raise PrecisionError(f"only {self.abs_precision} certified digits, need {n}")
        if self.val is None:
            return PadicScalar.zero(self.p, n)
        rel = n - self.val
        if rel <= 0:
            return PadicScalar.zero(self.p, n)
        return PadicScalar(self.p, self.val, self.residue % self.p**rel, rel)

    def __str__(self) -> str:
        if self.val is None:
            return f"val=+inf, residue=0 mod {self.p}^{self.prec}"
        return f"val={self.val}, residue={self.residue} mod {self.p}^{self.prec}"

    # -- arithmetic -----------------------------------------------------------
    def _require_same(self, other: "PadicScalar") -> None:
        if self.p != other.p:
            raise ValueError("mixed primes")

    def __add__(self, other: "PadicScalar") -> "PadicScalar":
        self._require_same(other)
        target = min(self.abs_precision, other.abs_precision)
        if self.val is None and other.val is None:
            return PadicScalar.zero(self.p, target)
        if self.val is None:
            return other.reduce_abs(target)
        if other.val is None:
            return self.reduce_abs(target)
        m = min(self.val, other.val)
        rel = target - m
        if rel <= 0:
            raise PrecisionError("addition cancels all certified digits")
        modulus = self.p**rel
        s = (
            self.residue * self.p ** (self.val - m)
            + other.residue * self.p ** (other.val - m)
        ) % modulus
        if s == 0:
            return PadicScalar.zero(self.p, target)
        v = 0
        while s % self.p == 0:
            s //= self.p
            v += 1
        return PadicScalar(self.p, m + v, s % self.p ** (rel - v), rel - v)

    def __neg__(self) -> "PadicScalar":
        if self.val is None:
            return self
        return PadicScalar(self.p, self.val, (-self.residue) % self.p**self.prec, self.prec)

    def __sub__(self, other: "PadicScalar") -> "PadicScalar":
        return self + (-other)

    def __mul__(self, other: "PadicScalar") -> "PadicScalar":
        self._require_same(other)
        if self.val is None or other.val is None:
            # ord(xy) >= certified zero precision plus the other valuation
            if self.val is None and other.val is None:
                return PadicScalar.zero(self.p, self.prec + other.prec)
            zero, nz = (self, other) if self.val is None else (other, self)
            return PadicScalar.zero(self.p, max(1, zero.prec + nz.val))
        prec = min(self.prec, other.prec)
        residue = self.residue * other.residue % self.p**prec
        return PadicScalar(self.p, self.val + other.val, residue, prec)

    def __truediv__(self, other: "PadicScalar") -> "PadicScalar":
        self._require_same(other)
        if other.val is None:
            raise PoleEvaluationError("division by a certified zero")
        if other.val > 0:
            raise PoleEvaluationError(
                f"division by a non-unit of valuation {other.val} (pole proximity)"
            )
        if self.val is None:
            return PadicScalar.zero(self.p, max(1, self.prec - other.val))
        prec = min(self.prec, other.prec)
        modulus = self.p**prec
        residue = self.residue * pow(other.residue, -1, modulus) % modulus
        return PadicScalar(self.p, self.val - other.val, residue, prec)

    def pow(self, k: int) -> "PadicScalar":
        if k < 0:
            raise ValueError("negative scalar powers are not supported")
        result = PadicScalar.from_int(1, self.p, self.prec)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def equals_mod(self, other: "PadicScalar", n: int) -> bool:
        diff = self - other
        return diff.val is None and diff.prec >= n or (diff.val is not None and diff.val >= n)


# --- certified series ---------------------------------------------------------


@dataclass(frozen=True)
class CertifiedSeries:
    """Truncated power series with exact integer coefficients and an optional
    proven Newton-polygon lower bound ord_p(c_r) >= c_np*r^2 + d_np valid for
    every index r, including the untruncated tail.

    ``polynomial`` marks series whose tail is exactly zero (finite products,
    constants); evaluation then never needs coefficients past the storage."""

    p: int
    coeffs: tuple[int, ...]
    np_bound: Optional[tuple[Fraction, Fraction]] = None
    polynomial: bool = False

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("series needs at least one stored coefficient")
        if self.np_bound is not None:
            c, d = self.np_bound
            if c <= 0:
                raise NewtonBoundError("quadratic bound constant must be > 0")
            ok, witness = check_quadratic_bound(self, c, d, _skip_input_check=True)
            if not ok:
                raise NewtonBoundError(
                    f"stored coefficient at index {witness} violates the bound"
                )

    @property
    def truncation(self) -> int:
        return len(self.coeffs) - 1

    def valuations(self) -> tuple[Optional[int], ...]:
        return tuple(ord_p(c, self.p) for c in self.coeffs)

    def multiply(self, other: "CertifiedSeries") -> "CertifiedSeries":
        """Truncated product; the combined bound uses
        min split bound >= min(c1,c2)/2 * r^2 + (d1+d2)."""
        if self.p != other.p:
            raise ValueError("mixed primes")
        n = min(len(self.coeffs), len(other.coeffs))
        out = [0] * n
        for i, a in enumerate(self.coeffs[:n]):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs[: n - i]):
                out[i + j] += a * b
        bound = None
        if self.np_bound and other.np_bound:
            c1, d1 = self.np_bound
            c2, d2 = other.np_bound
            bound = (min(c1, c2) / 2, d1 + d2)
        return CertifiedSeries(self.p, tuple(out), bound)

    def to_csv_rows(self) -> list[tuple[int, int, str]]:
        rows = []
        for r, c in enumerate(self.coeffs):
            v = ord_p(c, self.p)
            rows.append((r, c, "inf" if v is None else str(v)))
        return rows


@dataclass(frozen=True)
class NewtonPolygon:
    """Lower convex hull of (index, valuation) over the stored coefficients."""

    vertices: tuple[tuple[int, int], ...]

    def slopes(self) -> tuple[Fraction, ...]:
        return tuple(
            Fraction(v2 - v1, r2 - r1)
            for (r1, v1), (r2, v2) in zip(self.vertices, self.vertices[1:])
        )

    def value_at(self, r: int) -> Optional[Fraction]:
        """Height of the hull at r (None beyond the last vertex)."""
        if r < self.vertices[0][0] or r > self.vertices[-1][0]:
            return None
        for (r1, v1), (r2, v2) in zip(self.vertices, self.vertices[1:]):
            if r1 <= r <= r2:
                return Fraction(v1) + Fraction(v2 - v1, r2 - r1) * (r - r1)
        return Fraction(self.vertices[-1][1])


def newton_polygon(series: CertifiedSeries) -> NewtonPolygon:
    points = [
        (r, v) for r, v in enumerate(series.valuations()) if v is not None
    ]
    if not points:
        raise ValueError("Newton polygon of the zero series")
    hull: list[tuple[int, int]] = []
    for pt in points:
        while len(hull) >= 2:
            (r1, v1), (r2, v2) = hull[-2], hull[-1]
            # keep the hull lower-convex: drop the middle point when it lies
            # on or above the segment
            if (v2 - v1) * (pt[0] - r1) >= (pt[1] - v1) * (r2 - r1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return NewtonPolygon(tuple(hull))


def check_quadratic_bound(
    series: CertifiedSeries,
    c_np: Fraction,
    d_np: Fraction,
    _skip_input_check: bool = False,
):
    """Verify ord_p(c_r) >= c_np*r^2 + d_np on every stored coefficient.

    Returns (True, None) or (False, first violating index)."""
    if not _skip_input_check and Fraction(c_np) <= 0:
        raise NewtonBoundError("quadratic bound constant must be > 0")
    c_np, d_np = Fraction(c_np), Fraction(d_np)
    for r, v in enumerate(series.valuations()):
        if v is None:
            continue
        if Fraction(v) < c_np * r * r + d_np:
            return False, r
    return True, None


def tail_start(c_np: Fraction, d_np: Fraction, t_val: int, target: int) -> int:
    """Smallest R such that c*r^2 + d + r*t_val >= target for every r > R."""
    c, d = Fraction(c_np), Fraction(d_np)
    vertex = -Fraction(t_val) / (2 * c)
    r = max(0, int(vertex) - 1)
    while True:
        nxt = r + 1
        if c * nxt * nxt + d + nxt * t_val >= target and nxt >= vertex:
            return r
        r += 1
        if r > 10**7:
            raise InsufficientTruncationError("tail index search diverged")


def eval_entire(series: CertifiedSeries, t: PadicScalar, target_prec: int) -> PadicScalar:
    """Sum the series at t, certified mod p^target_prec.

    Requires the Newton bound; the tail beyond the computed index R* is
    certified to vanish mod p^target_prec because
    ord(c_r t^r) >= c_np r^2 + d_np + r ord(t)."""
    if series.np_bound is None:
        raise NewtonBoundError("evaluation requires a Newton-polygon bound")
    if series.p != t.p:
        raise ValueError("mixed primes")
    if t.is_zero:
        return PadicScalar.from_int(series.coeffs[0], series.p, target_prec).reduce_abs(
            target_prec
        )
    c_np, d_np = series.np_bound
    r_star = tail_start(c_np, d_np, t.val, target_prec)
    if series.polynomial:
        r_star = min(r_star, series.truncation)
    if r_star > series.truncation:
        raise InsufficientTruncationError(
            f"need coefficients up to index {r_star}, stored only {series.truncation}"
        )
    total = PadicScalar.zero(series.p, target_prec + max(0, -t.val) * (r_star + 1) + 1)
    power = PadicScalar.from_int(1, series.p, target_prec + max(0, -t.val) * (r_star + 1) + 1)
    for r in range(r_star + 1):
        if series.coeffs[r] != 0:
            coeff = PadicScalar.from_int(series.coeffs[r], series.p, power.prec)
            total = total + coeff * power
        power = power * t
    return total.reduce_abs(target_prec)
