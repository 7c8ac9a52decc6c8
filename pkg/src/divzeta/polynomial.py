"""Exact multivariate polynomials over Q, used for quasi-polynomial components
and the lattice-sum reduction.  Coefficients are fractions.Fraction; terms are
kept in a canonical sorted tuple so polynomials hash and compare by value.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


def _canonical(nvars: int, terms: Mapping[tuple[int, ...], Fraction]):
    out = []
    for expo, coeff in terms.items():
        if len(expo) != nvars:
            raise ValueError("exponent tuple length does not match variable count")
        if any(e < 0 for e in expo):
            raise ValueError("negative exponent")
        if coeff != 0:
            out.append((tuple(int(e) for e in expo), Fraction(coeff)))
    out.sort(key=lambda t: t[0])
    return tuple(out)


@dataclass(frozen=True)
class Poly:
    nvars: int
    terms: tuple[tuple[tuple[int, ...], Fraction], ...]

    # -- construction -----------------------------------------------------
    @staticmethod
    def from_terms(nvars: int, terms: Mapping[tuple[int, ...], Fraction | int]) -> "Poly":
        return Poly(nvars, _canonical(nvars, {k: Fraction(v) for k, v in terms.items()}))

    @staticmethod
    def zero(nvars: int) -> "Poly":
        return Poly(nvars, ())

    @staticmethod
    def const(nvars: int, value) -> "Poly":
        return Poly.from_terms(nvars, {(0,) * nvars: Fraction(value)})

    @staticmethod
    def var(i: int, nvars: int) -> "Poly":
        expo = tuple(1 if j == i else 0 for j in range(nvars))
        return Poly.from_terms(nvars, {expo: 1})

    # -- ring operations ---------------------------------------------------
    def _acc(self) -> dict:
        return {e: c for e, c in self.terms}

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        acc = self._acc()
        for e, c in other.terms:
            acc[e] = acc.get(e, Fraction(0)) + c
        return Poly(self.nvars, _canonical(self.nvars, acc))

    def __sub__(self, other) -> "Poly":
        return self + (self._coerce(other) * -1)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return Poly.zero(self.nvars)
            return Poly(self.nvars, tuple((e, c * other) for e, c in self.terms))
        acc: dict = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                acc[e] = acc.get(e, Fraction(0)) + c1 * c2
        return Poly(self.nvars, _canonical(self.nvars, acc))

    __rmul__ = __mul__

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return Poly.const(self.nvars, other)

    def pow(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power")
        result = Poly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # -- structure ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(all(e == 0 for e in expo) for expo, _ in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms[0][1] if self.terms else Fraction(0)

    def degree_in(self, i: int) -> int:
        return max((expo[i] for expo, _ in self.terms), default=0)

    def total_degree(self) -> int:
        return max((sum(expo) for expo, _ in self.terms), default=0)

    def leading_in(self, i: int) -> "Poly":
        """Coefficient of the highest power of variable i, with that variable
        zeroed out of the exponent (same variable count)."""
        d = self.degree_in(i)
        acc = {}
        for expo, coeff in self.terms:
            if expo[i] == d:
                e = list(expo)
                e[i] = 0
                key = tuple(e)
                acc[key] = acc.get(key, Fraction(0)) + coeff
        return Poly(self.nvars, _canonical(self.nvars, acc))

    def coeff_of_power(self, i: int, k: int) -> "Poly":
        acc = {}
        for expo, coeff in self.terms:
            if expo[i] == k:
                e = list(expo)
                e[i] = 0
                key = tuple(e)
                acc[key] = acc.get(key, Fraction(0)) + coeff
        return Poly(self.nvars, _canonical(self.nvars, acc))

    def depends_on(self, i: int) -> bool:
        return any(expo[i] > 0 for expo, _ in self.terms)

    # -- evaluation and substitution ----------------------------------------
    def eval(self, point: Sequence) -> Fraction:
        if len(point) != self.nvars:
            raise ValueError("point length mismatch")
        total = Fraction(0)
        for expo, coeff in self.terms:
            v = coeff
            for x, e in zip(point, expo):
                if e:
                    v *= Fraction(x) ** e
            total += v
        return total

    def substitute(self, images: Sequence["Poly"]) -> "Poly":
        """Compose: variable i is replaced by images[i] (all in the same
        target variable count)."""
        if len(images) != self.nvars:
            raise ValueError("need one image per variable")
        target = images[0].nvars if images else 0
        result = Poly.zero(target)
        powers: dict[tuple[int, int], Poly] = {}

        def power(i: int, e: int) -> Poly:
            key = (i, e)
            if key not in powers:
                powers[key] = images[i].pow(e)
            return powers[key]

        for expo, coeff in self.terms:
            term = Poly.const(target, coeff)
            for i, e in enumerate(expo):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    def shift(self, offsets: Sequence[int]) -> "Poly":
        """x_i -> x_i + offsets[i]."""
        if all(o == 0 for o in offsets):
            return self
        images = [
            Poly.var(i, self.nvars) + Poly.const(self.nvars, offsets[i])
            for i in range(self.nvars)
        ]
        return self.substitute(images)

    def specialize(self, i: int, value) -> "Poly":
        """Fix variable i to an integer value; remaining variables reindex down."""
        acc: dict = {}
        val = Fraction(value)
        for expo, coeff in self.terms:
            c = coeff * (val ** expo[i]) if expo[i] else coeff
            e = expo[:i] + expo[i + 1 :]
            acc[e] = acc.get(e, Fraction(0)) + c
        return Poly(self.nvars - 1, _canonical(self.nvars - 1, acc))

    def drop_var(self, i: int) -> "Poly":
        if self.depends_on(i):
            raise ValueError("cannot drop a variable the polynomial depends on")
        return self.specialize(i, 0)

    def forward_diff(self, i: int) -> "Poly":
        shifted = self.shift(tuple(1 if j == i else 0 for j in range(self.nvars)))
        return shifted - self

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for expo, coeff in self.terms:
            mono = "*".join(
                f"x{i + 1}" + (f"^{e}" if e > 1 else "")
                for i, e in enumerate(expo)
                if e
            )
            if mono:
                parts.append(f"{coeff}*{mono}" if coeff != 1 else mono)
            else:
                parts.append(str(coeff))
        return " + ".join(parts)
