"""The zeta-of-divisors engine.

Builds exact truncations of Z(T) = sum_d M_d T^d from effective-class data,
carries the class-count rational function that owns the pole at T=1,
decomposes lattice sums sum q^{f(x)} T^{d.x} into rational factors plus
certified entire numerator/denominator series, evaluates the result p-adically
inside and outside the unit disk, and certifies pole order and special value
at T=1 on a finite window.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .ehrhart import (
    MultivariateQuasiPolynomial,
    fit_multivariate_qp,
    fit_with_period_search,
)
from .padic import (
    CertifiedSeries,
    PadicScalar,
    eval_entire,
    ord_p,
    prime_power_exponent,
)
from .polynomial import Poly
from .toric import (
    EffectiveClass,
    TorusDivisor,
    ToricVarietyModel,
    effective_generators,
    enumerate_effective_classes,
    sections_dim,
)


class DecompositionError(ValueError):
    pass


class ThresholdSearchError(DecompositionError):
    def __init__(self, variable: int, poly: str):
        super().__init__(
            f"threshold search exceeded its cap for variable {variable + 1} of {poly}"
        )
        self.variable = variable
        self.poly = poly


class NotIncreasingError(ValueError):
    pass


class StabilizationError(ValueError):
    pass


class CertificationError(ValueError):
    pass


# =============================================================================
# zeta coefficient truncations
# =============================================================================


@dataclass(frozen=True)
class ZetaTruncation:
    """Exact coefficients M_0..M_Dmax of the zeta function of divisors."""

    q: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if not self.coeffs or self.coeffs[0] != 1:
            raise ValueError("zeta truncation must start with M_0 = 1")
        if any(c < 0 for c in self.coeffs):
            raise ValueError("zeta coefficients must be nonnegative")

    @property
    def dmax(self) -> int:
        return len(self.coeffs) - 1

    def to_csv_rows(self, p: int) -> list[tuple[int, int, str]]:
        rows = []
        for d, m in enumerate(self.coeffs):
            v = ord_p(m, p)
            rows.append((d, m, "inf" if v is None else str(v)))
        return rows


def _sections_by_degree(model: ToricVarietyModel, dmax: int) -> list[list[int]]:
    """l(c) for every effective class c, grouped by degree 0..dmax."""
    out = []
    for d in range(dmax + 1):
        classes = enumerate_effective_classes(model, d)
        out.append([sections_dim(model.fan, cls.representative) for cls in classes])
    return out


def zeta_coefficients(model: ToricVarietyModel, q: int, dmax: int) -> ZetaTruncation:
    """M_d = sum over degree-d effective classes of (q^l - 1)/(q - 1):
    the number of effective divisors of degree d."""
    if dmax < 0:
        raise ValueError("dmax must be nonnegative")
    sections = _sections_by_degree(model, dmax)
    coeffs = []
    for d, ls in enumerate(sections):
        total = 0
        for l in ls:
            num = q**l - 1
            if num % (q - 1) != 0:
                raise ArithmeticError("complete linear system count is not integral")
            total += num // (q - 1)
        coeffs.append(total)
    return ZetaTruncation(q, tuple(coeffs))


def section_sum_series(model: ToricVarietyModel, q: int, dmax: int) -> tuple[int, ...]:
    """Coefficients of sum over classes of q^{l(c)} T^{deg c}, the entire part
    of (q-1) Z(T) + class count."""
    sections = _sections_by_degree(model, dmax)
    return tuple(sum(q**l for l in ls) for ls in sections)


# =============================================================================
# class-count rational function (carries the pole of order rho at T=1)
# =============================================================================


@dataclass(frozen=True)
class ClassCountSeries:
    """sum_d #classes(d) T^d written as numerator / prod_i (1 - T^{deg g_i})."""

    numerator: tuple[int, ...]
    generator_degrees: tuple[int, ...]
    dmax: int

    def expand(self, upto: Optional[int] = None) -> tuple[int, ...]:
        upto = self.dmax if upto is None else upto
        out = list(self.numerator) + [0] * max(0, upto + 1 - len(self.numerator))
        out = out[: upto + 1]
        for deg in self.generator_degrees:
            for i in range(deg, upto + 1):
                out[i] += out[i - deg]
        return tuple(out)

    def special_limit(self, rho: int) -> Fraction:
        """lim_{T->1} (1-T)^rho * numerator/prod(1 - T^{e_i}), exact."""
        r = len(self.generator_degrees)
        if rho > r:
            raise ValueError("pole order exceeds generator count")
        num = list(self.numerator)
        for _ in range(r - rho):
            num = _divide_by_one_minus_t(num)
        q1 = sum(num)
        denom = 1
        for e in self.generator_degrees:
            denom *= e
        return Fraction(q1, denom)


def _divide_by_one_minus_t(coeffs: list[int]) -> list[int]:
    acc = 0
    out = []
    for c in coeffs:
        acc += c
        out.append(acc)
    if out and out[-1] != 0:
        raise StabilizationError("polynomial is not divisible by (1 - T)")
    return out[:-1] if out else out


def class_count_series(model: ToricVarietyModel, dmax: int) -> ClassCountSeries:
    counts = [len(enumerate_effective_classes(model, d)) for d in range(dmax + 1)]
    gen_degrees = tuple(g.degree for g in effective_generators(model))
    num = counts[:]
    for deg in gen_degrees:
        nxt = num[:]
        for i in range(deg, dmax + 1):
            nxt[i] -= num[i - deg]
        num = nxt
    last_nonzero = max((i for i, c in enumerate(num) if c != 0), default=0)
    if last_nonzero > dmax // 2:
        raise StabilizationError(
            f"class-count numerator has a nonzero coefficient at degree {last_nonzero}; "
            f"increase Dmax beyond {dmax}"
        )
    trimmed = tuple(num[: last_nonzero + 1])
    return ClassCountSeries(trimmed, gen_degrees, dmax)


# =============================================================================
# increasing-polynomial certificates
# =============================================================================


@dataclass(frozen=True)
class IncreasingPolynomial:
    """A polynomial whose forward differences were verified nonnegative on
    [0, grid_bound]^n and whose per-variable leading coefficients passed the
    eventual-monotonicity sign check."""

    poly: Poly
    variable_count: int
    grid_bound: int


def _grid_points(n: int, bound: int):
    return itertools.product(range(bound + 1), repeat=n)


def _increasing_witness(poly: Poly, bound: int) -> Optional[tuple]:
    """A grid point and direction where a forward difference is negative."""
    n = poly.nvars
    for i in range(n):
        delta = poly.forward_diff(i)
        for pt in _grid_points(n, bound):
            if delta.eval(pt) < 0:
                return (i, pt)
    return None


def check_increasing(poly: Poly, n: int, grid_bound: int = 10) -> IncreasingPolynomial:
    """Certify monotonicity: every forward difference nonnegative on
    [0, grid_bound]^n, and every forward difference has nonnegative leading
    coefficient in each variable (necessary for eventual monotonicity)."""
    if poly.nvars != n:
        raise ValueError("variable count mismatch")
    witness = _increasing_witness(poly, grid_bound)
    if witness is not None:
        i, pt = witness
        raise NotIncreasingError(
            f"forward difference in variable {i + 1} is negative at {pt}"
        )
    for i in range(n):
        delta = poly.forward_diff(i)
        for j in range(n):
            if delta.degree_in(j) == 0:
                continue
            lead = delta.leading_in(j)
            if lead.is_constant():
                if lead.constant_value() < 0:
                    raise NotIncreasingError(
                        f"leading coefficient of variable {j + 1} in a forward "
                        f"difference is negative"
                    )
            else:
                for pt in _grid_points(n, grid_bound):
                    if lead.eval(pt) < 0:
                        raise NotIncreasingError(
                            f"leading coefficient of variable {j + 1} in the "
                            f"difference along {i + 1} is negative at {pt}"
                        )
    return IncreasingPolynomial(poly, n, grid_bound)


# =============================================================================
# cone decomposition of the positive orthant
# =============================================================================


@dataclass(frozen=True)
class ConeSector:
    """Points whose coordinates are constant on each block and weakly decrease
    from block to block: x on blocks[j] equals k_j + k_{j+1} + ... + k_{r-1}."""

    blocks: tuple[tuple[int, ...], ...]
    coefficient: int

    @property
    def free_count(self) -> int:
        return len(self.blocks)

    def contains(self, point: Sequence[int]) -> bool:
        values = []
        for block in self.blocks:
            vals = {point[i] for i in block}
            if len(vals) != 1:
                return False
            values.append(vals.pop())
        return all(a >= b for a, b in zip(values, values[1:])) and values[-1] >= 0

    def parameters_of(self, point: Sequence[int]) -> Optional[tuple[int, ...]]:
        if not self.contains(point):
            return None
        values = [point[block[0]] for block in self.blocks]
        ks = []
        for j, v in enumerate(values):
            nxt = values[j + 1] if j + 1 < len(values) else 0
            ks.append(v - nxt)
        return tuple(ks)


@dataclass(frozen=True)
class ConeDecomposition:
    n: int
    sectors: tuple[ConeSector, ...]
    verified_bound: int


def _ordered_set_partitions(items: tuple[int, ...]):
    if not items:
        yield ()
        return
    first = items[0]
    rest = items[1:]
    # choose the block containing `first`
    for mask in range(1 << len(rest)):
        block = [first] + [rest[i] for i in range(len(rest)) if mask >> i & 1]
        remaining = tuple(rest[i] for i in range(len(rest)) if not (mask >> i & 1))
        for tail in _ordered_set_partitions_all(remaining):
            yield (tuple(sorted(block)),) + tail


def _ordered_set_partitions_all(items: tuple[int, ...]):
    if not items:
        yield ()
        return
    for size_mask in range(1, 1 << len(items)):
        block = tuple(items[i] for i in range(len(items)) if size_mask >> i & 1)
        remaining = tuple(items[i] for i in range(len(items)) if not (size_mask >> i & 1))
        for tail in _ordered_set_partitions_all(remaining):
            yield (tuple(sorted(block)),) + tail


def cone_decomposition(n: int, verify_bound: int = 4) -> ConeDecomposition:
    """Inclusion-exclusion sectors covering Z_{>=0}^n exactly once: ordered set
    partitions with coefficient (-1)^(n - #blocks); verified pointwise on
    [0, verify_bound]^n."""
    if n < 1:
        raise ValueError("need at least one variable")
    sectors = tuple(
        ConeSector(blocks, (-1) ** (n - len(blocks)))
        for blocks in _ordered_set_partitions_all(tuple(range(n)))
    )
    for pt in _grid_points(n, verify_bound):
        total = sum(s.coefficient for s in sectors if s.contains(pt))
        if total != 1:
            raise DecompositionError(
                f"inclusion-exclusion identity failed at {pt}: sum {total}"
            )
    return ConeDecomposition(n, sectors, verify_bound)


def triangular_substitute(f: Poly, sector: ConeSector) -> Poly:
    """Compose f with x_i = k_j + ... + k_{r-1} for i in blocks[j]: the exact
    polynomial on the sector in its free parameters."""
    r = sector.free_count
    images = [None] * f.nvars
    for j, block in enumerate(sector.blocks):
        image = Poly.zero(r)
        for jp in range(j, r):
            image = image + Poly.var(jp, r)
        for i in block:
            images[i] = image
    if any(img is None for img in images):
        raise ValueError("sector blocks do not cover all variables")
    return f.substitute(images)


def sector_degrees(sector: ConeSector, degrees: Sequence[int]) -> tuple[int, ...]:
    """T-degree of each free parameter: cumulative sums of the block degrees."""
    out = []
    acc = 0
    for block in sector.blocks:
        acc += sum(degrees[i] for i in block)
        out.append(acc)
    return tuple(out)


# =============================================================================
# meromorphic parts
# =============================================================================


@dataclass(frozen=True)
class MeroPiece:
    """One summand: weight * q^q_shift * T^t_shift * numerator / (atoms * denom).

    Atoms are (c, w) pairs for factors (1 - q^c T^w).  The numerator is either
    an exact polynomial or an entire certified series; the optional entire
    denominator is the distinct-value product with constant term 1."""

    weight: int
    q_shift: int
    t_shift: int
    atoms: tuple[tuple[int, int], ...]
    numer_poly: Optional[tuple[int, ...]] = None
    numer_series: Optional[CertifiedSeries] = None
    denom_series: Optional[CertifiedSeries] = None

    def __post_init__(self):
        if (self.numer_poly is None) == (self.numer_series is None):
            raise ValueError("exactly one numerator form required")
        if self.denom_series is not None and self.denom_series.coeffs[0] != 1:
            raise ValueError("entire denominator must have constant term 1")
        if self.q_shift < 0:
            raise ValueError("negative q exponent in multiplier")


@dataclass(frozen=True)
class MeromorphicPart:
    q: int
    p: int
    precision: int
    truncation: int
    degrees: tuple[int, ...]
    pieces: tuple[MeroPiece, ...]

    def expand(self, upto: int) -> tuple[int, ...]:
        """Exact T-series coefficients of the sum of all pieces through T^upto."""
        if upto > self.truncation:
            raise ValueError(
                f"requested degree {upto} beyond stored truncation {self.truncation}"
            )
        total = [0] * (upto + 1)
        for piece in self.pieces:
            for i, c in enumerate(_expand_piece(piece, self.q, upto)):
                total[i] += c
        return tuple(total)

    def evaluate(self, t: PadicScalar, target_prec: int) -> PadicScalar:
        return evaluate_meromorphic(self, t, target_prec)

    def entire_series(self) -> list[CertifiedSeries]:
        out = []
        for piece in self.pieces:
            if piece.numer_series is not None:
                out.append(piece.numer_series)
            if piece.denom_series is not None:
                out.append(piece.denom_series)
        return out


def _expand_piece(piece: MeroPiece, q: int, upto: int) -> list[int]:
    if piece.t_shift > upto:
        return [0] * (upto + 1)
    inner = upto - piece.t_shift
    if piece.numer_poly is not None:
        base = list(piece.numer_poly[: inner + 1])
    else:
        if piece.numer_series.truncation < inner:
            raise ValueError("stored numerator series too short for expansion")
        base = list(piece.numer_series.coeffs[: inner + 1])
    base += [0] * (inner + 1 - len(base))
    for c, w in piece.atoms:
        step = q**c
        for i in range(w, inner + 1):
            base[i] += step * base[i - w]
    if piece.denom_series is not None:
        den = piece.denom_series.coeffs
        for i in range(inner + 1):
            acc = base[i]
            for j in range(1, min(i, len(den) - 1) + 1):
                acc -= den[j] * base[i - j]
            base[i] = acc
    scale = piece.weight * q**piece.q_shift
    out = [0] * piece.t_shift + [scale * c for c in base]
    return out[: upto + 1]


# =============================================================================
# the reduction: lattice sum -> rational factors + entire series
# =============================================================================


@dataclass
class _SymPiece:
    weight: int = 1
    q_shift: int = 0
    t_shift: int = 0
    atoms: tuple[tuple[int, int], ...] = ()
    kind: str = "poly"  # poly | entire | mero
    poly_coeffs: tuple[int, ...] = (1,)
    u: Optional[Poly] = None
    v: Optional[Poly] = None
    w: int = 0
    degs: tuple[int, ...] = ()


def _scaled(pieces: list[_SymPiece], weight: int = 1, t_shift: int = 0,
            atoms: tuple[tuple[int, int], ...] = ()) -> list[_SymPiece]:
    out = []
    for pc in pieces:
        out.append(
            replace_sym(
                pc,
                weight=pc.weight * weight,
                t_shift=pc.t_shift + t_shift,
                atoms=pc.atoms + atoms,
            )
        )
    return out


def replace_sym(pc: _SymPiece, **kw) -> _SymPiece:
    data = dict(
        weight=pc.weight,
        q_shift=pc.q_shift,
        t_shift=pc.t_shift,
        atoms=pc.atoms,
        kind=pc.kind,
        poly_coeffs=pc.poly_coeffs,
        u=pc.u,
        v=pc.v,
        w=pc.w,
        degs=pc.degs,
    )
    data.update(kw)
    return _SymPiece(**data)


def _as_nonneg_int(x: Fraction, what: str) -> int:
    x = Fraction(x)
    if x.denominator != 1:
        raise DecompositionError(f"{what} is not an integer: {x}")
    if x < 0:
        raise DecompositionError(f"{what} is negative: {x}")
    return int(x)


def _full(f: Poly, degs: tuple[int, ...]) -> list[_SymPiece]:
    """Decompose sum over the positive orthant of q^f T^{degs.k}."""
    # separate variables the exponent does not use: pure geometric factors
    atoms: list[tuple[int, int]] = []
    for i in range(f.nvars - 1, -1, -1):
        if not f.depends_on(i):
            atoms.append((0, degs[i]))
            f = f.specialize(i, 0)
            degs = degs[:i] + degs[i + 1 :]
    atoms_t = tuple(atoms)

    n = f.nvars
    if n == 0:
        c0 = _as_nonneg_int(f.constant_value(), "exponent constant")
        return [_SymPiece(kind="poly", poly_coeffs=(1,), q_shift=c0, atoms=atoms_t)]
    if n == 1:
        if f.degree_in(0) <= 1:
            c1 = _as_nonneg_int(f.coeff_of_power(0, 1).constant_value(), "linear slope")
            c0 = _as_nonneg_int(f.eval((0,)), "exponent at origin")
            return [
                _SymPiece(
                    kind="poly",
                    poly_coeffs=(1,),
                    q_shift=c0,
                    atoms=atoms_t + ((c1, degs[0]),),
                )
            ]
        return [_SymPiece(kind="entire", u=f, degs=degs, atoms=atoms_t)]

    pieces: list[_SymPiece] = []
    for sector in cone_decomposition(n).sectors:
        g = triangular_substitute(f, sector)
        dg = sector_degrees(sector, degs)
        if sector.free_count < n:
            sub = _full(g, dg)
        else:
            sub = _triangular(g, dg)
        pieces.extend(_scaled(sub, weight=sector.coefficient, atoms=atoms_t))
    return pieces


def _triangular(g: Poly, degs: tuple[int, ...]) -> list[_SymPiece]:
    """Handle a sorted-chamber sum (n >= 2 free parameters)."""
    if g.degree_in(0) <= 1:
        g1 = g.coeff_of_power(0, 1).specialize(0, 0)
        g0 = g.specialize(0, 0)
        return _ldsum(g1, g0, degs[0], degs[1:], resorted=False)
    shifts = _positivize(g)
    pieces: list[_SymPiece] = []
    n = g.nvars
    for i in range(n - 1, -1, -1):
        if shifts[i] == 0:
            continue
        mask = [shifts[j] if j > i else 0 for j in range(n)]
        tail_shift = sum(degs[j] * shifts[j] for j in range(i + 1, n))
        base = g.shift(mask)
        for v in range(shifts[i]):
            g_box = base.specialize(i, v)
            sub = _full(g_box, degs[:i] + degs[i + 1 :])
            pieces.extend(_scaled(sub, t_shift=degs[i] * v + tail_shift))
    core = g.shift(shifts)
    pieces.append(
        _SymPiece(
            kind="entire",
            u=core,
            degs=degs,
            t_shift=sum(d * s for d, s in zip(degs, shifts)),
        )
    )
    return pieces


def _ldsum(
    g1: Poly,
    g0: Poly,
    w: int,
    degs: tuple[int, ...],
    resorted: bool,
) -> list[_SymPiece]:
    """sum over k >= 0 of q^{g0(k)} T^{degs.k} / (1 - q^{g1(k)} T^w)."""
    m = g0.nvars
    if m == 0:
        c1 = _as_nonneg_int(g1.constant_value(), "denominator exponent")
        c0 = _as_nonneg_int(g0.constant_value(), "numerator exponent")
        return [_SymPiece(kind="poly", poly_coeffs=(1,), q_shift=c0, atoms=((c1, w),))]
    if g1.is_constant():
        c1 = _as_nonneg_int(g1.constant_value(), "denominator exponent")
        return _scaled(_full(g0, degs), atoms=((c1, w),))

    # split off variables that separate as plain geometric factors
    for i in range(m - 1, -1, -1):
        if g1.depends_on(i):
            continue
        di = g0.degree_in(i)
        if di == 0:
            sub = _ldsum(
                g1.specialize(i, 0), g0.specialize(i, 0), w,
                degs[:i] + degs[i + 1 :], resorted,
            )
            return _scaled(sub, atoms=((0, degs[i]),))
        if di == 1:
            lam = g0.coeff_of_power(i, 1)
            if lam.is_constant():
                lam_v = _as_nonneg_int(lam.constant_value(), "linear slope")
                sub = _ldsum(
                    g1.specialize(i, 0), g0.specialize(i, 0), w,
                    degs[:i] + degs[i + 1 :], resorted,
                )
                return _scaled(sub, atoms=((lam_v, degs[i]),))

    if all(g0.degree_in(i) >= 2 for i in range(m)) and _sorted_form_ok(g0):
        shifts = _positivize(g0)
        pieces: list[_SymPiece] = []
        for i in range(m - 1, -1, -1):
            if shifts[i] == 0:
                continue
            mask = [shifts[j] if j > i else 0 for j in range(m)]
            tail_shift = sum(degs[j] * shifts[j] for j in range(i + 1, m))
            base0 = g0.shift(mask)
            base1 = g1.shift(mask)
            for v in range(shifts[i]):
                sub = _ldsum(
                    base1.specialize(i, v), base0.specialize(i, v), w,
                    degs[:i] + degs[i + 1 :], resorted,
                )
                pieces.extend(_scaled(sub, t_shift=degs[i] * v + tail_shift))
        pieces.append(
            _SymPiece(
                kind="mero",
                u=g0.shift(shifts),
                v=g1.shift(shifts),
                w=w,
                degs=degs,
                t_shift=sum(d * s for d, s in zip(degs, shifts)),
            )
        )
        return pieces

    if not resorted:
        pieces = []
        for sector in cone_decomposition(m).sectors:
            sub = _ldsum(
                triangular_substitute(g1, sector),
                triangular_substitute(g0, sector),
                w,
                sector_degrees(sector, degs),
                resorted=True,
            )
            pieces.extend(_scaled(sub, weight=sector.coefficient))
        return pieces
    raise DecompositionError(
        f"unsupported structure after resort: numerator exponent {g0}, "
        f"denominator exponent {g1}"
    )


def _sorted_form_ok(u: Poly) -> bool:
    m = u.nvars
    last = u.leading_in(m - 1)
    return last.is_constant() and last.constant_value() > 0


def _positivize(u: Poly, cap: int = 4096) -> list[int]:
    """Shift vector s such that every per-variable leading coefficient of
    u(k + s) is positive on the whole orthant (thresholds from the proof's
    doubling search)."""
    m = u.nvars
    last = u.leading_in(m - 1)
    if not last.is_constant() or last.constant_value() <= 0:
        raise DecompositionError(
            f"leading coefficient of the last variable is not a positive constant in {u}"
        )
    shifts = [0] * m
    for i in range(m - 2, -1, -1):
        trial = 0
        while True:
            s_trial = shifts[:]
            for j in range(i + 1, m):
                s_trial[j] = shifts[j] + trial
            lead = u.shift(s_trial).leading_in(i)
            if any(lead.depends_on(j) for j in range(i + 1)):
                raise DecompositionError(
                    f"leading coefficient of variable {i + 1} involves earlier variables in {u}"
                )
            if lead.eval((0,) * m) > 0:
                witness = _increasing_witness(lead, 3)
                if witness is not None:
                    raise DecompositionError(
                        f"leading coefficient of variable {i + 1} is not increasing in {u}"
                    )
                shifts = s_trial
                break
            trial = 1 if trial == 0 else trial * 2
            if trial > cap:
                raise ThresholdSearchError(i, str(u))
    final = u.shift(shifts)
    for i in range(m):
        if final.leading_in(i).eval((0,) * m) <= 0:
            raise DecompositionError("positivization postcondition failed")
    return shifts


# --- quadratic minorants for Newton bounds -----------------------------------


def _univariate_min(poly: Poly) -> Fraction:
    """Exact minimum of a one-variable polynomial over the nonnegative
    integers; requires the polynomial to be bounded below there."""
    deg = poly.degree_in(0)
    if deg == 0:
        return poly.constant_value()
    lead = poly.leading_in(0).constant_value()
    if deg == 1:
        if lead < 0:
            raise DecompositionError("linear minorant decreases without bound")
        return poly.eval((0,))
    if lead <= 0:
        raise DecompositionError("minorant is unbounded below")
    # stationary points lie below the Cauchy bound of the derivative's roots
    deriv = {(k - 1,): c * k for (k,), c in poly.terms if k >= 1}
    dlead = deriv[max(deriv)]
    bound = 1 + max(abs(c / dlead) for c in deriv.values())
    stop = int(bound) + 2
    return min(poly.eval((x,)) for x in range(stop + 1))


def _univariate_quadratic_minorant(poly: Poly) -> tuple[Fraction, Fraction]:
    """(a, b) with poly(x) >= a x^2 + b on Z_{>=0}, a > 0; needs degree >= 2
    and a positive leading coefficient."""
    deg = poly.degree_in(0)
    lead = poly.leading_in(0).constant_value()
    if deg < 2 or lead <= 0:
        raise DecompositionError("quadratic minorant needs degree >= 2, positive lead")
    x2 = Poly.from_terms(1, {(2,): 1})
    for a in (lead, lead / 2, lead / 4):
        delta = poly - x2 * a
        try:
            b = _univariate_min(delta)
        except DecompositionError:
            continue
        return Fraction(a), Fraction(b)
    raise DecompositionError("no quadratic minorant found")


def _entire_np_constants(
    u: Poly, degs: tuple[int, ...], e: int
) -> tuple[Fraction, Fraction]:
    """Constants (c, d) with ord_p of the T^s coefficient of
    sum q^{u(k)} T^{degs.k} at least c s^2 + d for every s."""
    m = u.nvars
    if m == 1:
        d1 = degs[0]
        lead = u.leading_in(0).constant_value()
        deg = u.degree_in(0)
        candidates = [lead, lead / 2, lead / 4] if deg == 2 else [lead, lead / 2]
        x2 = Poly.from_terms(1, {(2,): Fraction(d1 * d1)})
        for a in candidates:
            c = Fraction(e) * a / (d1 * d1)
            delta = u * e - x2 * c
            try:
                d = _univariate_min(delta)
            except DecompositionError:
                continue
            return c, Fraction(d)
        raise DecompositionError("no one-variable Newton constants found")
    mins = []
    for i in range(m):
        restricted = u
        for j in range(m - 1, -1, -1):
            if j != i:
                restricted = restricted.specialize(j, 0)
        mins.append(_univariate_quadratic_minorant(restricted))
    a = min(x for x, _ in mins)
    b = min(x for _, x in mins)
    dprime = max(degs)
    return Fraction(e) * a / (dprime * m) ** 2, Fraction(e) * b


def _points_up_to(degs: tuple[int, ...], limit: int):
    """All k >= 0 with degs.k <= limit, in graded-then-lex order."""
    pts = []

    def rec(i, prefix, s):
        if i == len(degs):
            pts.append((tuple(prefix), s))
            return
        v = 0
        while s + v * degs[i] <= limit:
            rec(i + 1, prefix + [v], s + v * degs[i])
            v += 1

    rec(0, [], 0)
    pts.sort(key=lambda kv: (kv[1], kv[0]))
    return pts


def _eval_exponent(u: Poly, point: tuple[int, ...]) -> int:
    return _as_nonneg_int(u.eval(point), f"exponent value at {point}")


def _materialize(
    sym: _SymPiece, q: int, p: int, e: int, trunc: int, prec: int
) -> MeroPiece:
    if sym.kind == "poly":
        return MeroPiece(
            weight=sym.weight,
            q_shift=sym.q_shift,
            t_shift=sym.t_shift,
            atoms=sym.atoms,
            numer_poly=sym.poly_coeffs,
        )
    if sym.kind == "entire":
        coeffs = [0] * (trunc + 1)
        for k, s in _points_up_to(sym.degs, trunc):
            coeffs[s] += q ** _eval_exponent(sym.u, k)
        bound = _entire_np_constants(sym.u, sym.degs, e)
        series = CertifiedSeries(p, tuple(coeffs), bound)
        return MeroPiece(
            weight=sym.weight,
            q_shift=sym.q_shift,
            t_shift=sym.t_shift,
            atoms=sym.atoms,
            numer_series=series,
        )
    return _materialize_mero(sym, q, p, e, trunc, prec)


def _materialize_mero(
    sym: _SymPiece, q: int, p: int, e: int, trunc: int, prec: int
) -> MeroPiece:
    u, v, w, degs = sym.u, sym.v, sym.w, sym.degs
    m = u.nvars
    # Every distinct value of v below prec/e is attained at some point with
    # |k|_1 <= prec/e (v is integer valued and increasing), and every point
    # with degs.k <= trunc has coordinates <= trunc; a box scan suffices.
    box = max(trunc, -(-prec // e))
    first_dk: dict[int, int] = {}
    for k in itertools.product(range(box + 1), repeat=m):
        val = _eval_exponent(v, k)
        dk = sum(d * x for d, x in zip(degs, k))
        if val not in first_dk or dk < first_dk[val]:
            first_dk[val] = dk
    kept = sorted(
        val for val, dk in first_dk.items() if e * val < prec or dk <= trunc
    )
    # denominator: the finite distinct-value product; exact through T^trunc and
    # congruent to the full product mod p^prec beyond
    g_fin = [1]
    for val in kept:
        step = q**val
        nxt = g_fin + [0] * w
        for i in range(len(g_fin)):
            nxt[i + w] -= step * g_fin[i]
        g_fin = nxt
    c_g, d_g = _denominator_constants(kept, w, e, prec)
    denom = CertifiedSeries(p, tuple(g_fin), (c_g, d_g), polynomial=True)

    removed: dict[int, list[int]] = {}
    for val in kept:
        removed[val] = _remove_factor(g_fin, q**val, w)
    ncoeffs = [0] * (trunc + 1)
    for k, dk in _points_up_to(degs, trunc):
        val = _eval_exponent(v, k)
        gk = removed.get(val, g_fin)
        base = q ** _eval_exponent(u, k)
        for j, gc in enumerate(gk):
            if dk + j > trunc:
                break
            ncoeffs[dk + j] += base * gc
    a, b = _quadratic_minorant_all_vars(u)
    dprime = max(degs)
    alpha = Fraction(e) * a / (dprime * m) ** 2
    c_num = min(alpha, c_g) / 2
    d_num = Fraction(e) * b + d_g
    numer = CertifiedSeries(p, tuple(ncoeffs), (c_num, d_num))
    return MeroPiece(
        weight=sym.weight,
        q_shift=sym.q_shift,
        t_shift=sym.t_shift,
        atoms=sym.atoms,
        numer_series=numer,
        denom_series=denom,
    )


def _quadratic_minorant_all_vars(u: Poly) -> tuple[Fraction, Fraction]:
    m = u.nvars
    mins = []
    for i in range(m):
        restricted = u
        for j in range(m - 1, -1, -1):
            if j != i:
                restricted = restricted.specialize(j, 0)
        mins.append(_univariate_quadratic_minorant(restricted))
    return min(x for x, _ in mins), min(x for _, x in mins)


def _remove_factor(product: list[int], step: int, w: int) -> list[int]:
    # product = (1 - step*T^w) * quotient, solved coefficient by coefficient
    out = [0] * (len(product) - w)
    for i in range(len(out)):
        out[i] = product[i] + (step * out[i - w] if i >= w else 0)
    return out


def _denominator_constants(
    kept: list[int], w: int, e: int, prec: int
) -> tuple[Fraction, Fraction]:
    """Quadratic lower bound for the distinct-value product: the T^{rw}
    coefficient has valuation at least e * (sum of the r smallest values)."""
    sums = [0]
    for val in kept:
        sums.append(sums[-1] + val)
    points = [(r * w, e * s) for r, s in enumerate(sums)]
    for j in range(15):
        c = Fraction(e, 2**j)
        d = min(Fraction(s) - c * r * r for r, s in points)
        if d >= -2 * prec:
            return c, d
    c = Fraction(e, 2**14)
    d = min(Fraction(s) - c * r * r for r, s in points)
    return c, d


def reduce_to_mero_parts(
    f: IncreasingPolynomial,
    degrees: Sequence[int],
    q: int,
    p: int,
    truncation: int = 24,
    precision: int = 8,
) -> MeromorphicPart:
    """Structured decomposition of F(T) = sum_{k >= 0} q^{f(k)} T^{degrees.k}:
    cone decomposition, triangular substitution, geometric series in the
    linear directions, residual entire numerator/denominator series with
    Newton bounds.

    The expansion of the result is exact through T^truncation and congruent to
    F mod p^precision in every degree."""
    degrees = tuple(int(d) for d in degrees)
    if len(degrees) != f.variable_count or any(d <= 0 for d in degrees):
        raise ValueError("need one positive T-degree per variable")
    e = prime_power_exponent(q, p)
    _require_integer_valued(f.poly)
    if f.poly.eval((0,) * f.variable_count) < 0:
        raise DecompositionError("exponent must be nonnegative at the origin")
    sym_pieces = _full(f.poly, degrees)
    pieces = tuple(
        _materialize(sym, q, p, e, truncation, precision) for sym in sym_pieces
    )
    return MeromorphicPart(q, p, precision, truncation, degrees, pieces)


def _require_integer_valued(f: Poly) -> None:
    """Integer-valued on the lattice iff all iterated forward differences at
    the origin are integers (Newton binomial-basis coefficients)."""
    n = f.nvars
    degs = [f.degree_in(i) for i in range(n)]
    values = {}
    for pt in itertools.product(*[range(d + 1) for d in degs]):
        values[pt] = f.eval(pt)
    for alpha in itertools.product(*[range(d + 1) for d in degs]):
        total = Fraction(0)
        for beta in itertools.product(*[range(a + 1) for a in alpha]):
            sign = (-1) ** (sum(alpha) - sum(beta))
            mult = 1
            for a, b in zip(alpha, beta):
                mult *= math.comb(a, b)
            total += sign * mult * values[beta]
        if total.denominator != 1:
            raise DecompositionError(
                f"exponent polynomial is not integer valued (difference at {alpha} = {total})"
            )


def evaluate_meromorphic(
    part: MeromorphicPart, t: PadicScalar, target_prec: int
) -> PadicScalar:
    """Value of the decomposed sum at t, certified mod p^target_prec.

    Raises PoleEvaluationError when a denominator is a non-unit at t, and
    InsufficientTruncationError when the stored series are too short for the
    requested precision."""
    p, q = part.p, part.q
    guard = target_prec + 16 + 8 * max(0, -(t.val or 0))
    total = PadicScalar.zero(p, guard)
    for piece in part.pieces:
        if piece.numer_poly is not None:
            num = PadicScalar.zero(p, guard)
            power = PadicScalar.from_int(1, p, guard)
            for c in piece.numer_poly:
                if c:
                    num = num + PadicScalar.from_int(c, p, guard) * power
                power = power * t
        else:
            num = eval_entire(piece.numer_series, t, guard)
        value = num
        for c, w in piece.atoms:
            atom = PadicScalar.from_int(1, p, guard) - (
                PadicScalar.from_int(q**c, p, guard) * t.pow(w)
            )
            value = value / atom
        if piece.denom_series is not None:
            value = value / eval_entire(piece.denom_series, t, guard)
        scale = piece.weight * q**piece.q_shift
        value = value * PadicScalar.from_int(scale, p, guard)
        if piece.t_shift:
            value = value * t.pow(piece.t_shift)
        total = total + value
    return total.reduce_abs(target_prec)


def direct_lattice_sum(
    f: Poly, degrees: Sequence[int], q: int, upto: int
) -> tuple[int, ...]:
    """Oracle: exact coefficients of sum q^{f(k)} T^{degrees.k} through
    T^upto by direct enumeration."""
    out = [0] * (upto + 1)
    for k, s in _points_up_to(tuple(degrees), upto):
        out[s] += q ** _as_nonneg_int(f.eval(k), "exponent")
    return tuple(out)


# =============================================================================
# Wan reduction for toric models
# =============================================================================


@dataclass(frozen=True)
class ZESeriesTerm:
    """One coset's series sum q^{l(E + n.B)} T^{deg E + n.degrees}: a base
    class, a free generator system, and the fitted exponent quasi-polynomial."""

    base: EffectiveClass
    generators: tuple[EffectiveClass, ...]
    exponent: MultivariateQuasiPolynomial

    def __post_init__(self):
        if any(g.degree <= 0 for g in self.generators):
            raise ValueError("generator degrees must be positive")


def _rational_rank(vectors: list[tuple[int, ...]]) -> int:
    rows = [list(map(Fraction, v)) for v in vectors]
    rank = 0
    cols = len(rows[0]) if rows else 0
    lead = 0
    for col in range(cols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pivot = rows[rank][col]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                factor = rows[i][col] / pivot
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def _solve_nonneg_integer(
    basis: list[EffectiveClass], target_free: tuple[int, ...]
) -> Optional[tuple[int, ...]]:
    """Nonnegative integer coordinates of target_free in the free parts of the
    basis (which are linearly independent), or None."""
    cols = [b.class_coords[: len(target_free)] for b in basis]
    rows = [[Fraction(cols[j][i]) for j in range(len(cols))] + [Fraction(target_free[i])]
            for i in range(len(target_free))]
    ncols = len(cols)
    rank = 0
    piv_cols = []
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pivot = rows[rank][col]
        rows[rank] = [x / pivot for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                factor = rows[i][col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[rank])]
        piv_cols.append(col)
        rank += 1
    for i in range(rank, len(rows)):
        if rows[i][ncols] != 0:
            return None
    sol = [Fraction(0)] * ncols
    for r, col in enumerate(piv_cols):
        sol[col] = rows[r][ncols]
    if any(x.denominator != 1 or x < 0 for x in sol):
        return None
    return tuple(int(x) for x in sol)


def _coset_covers(
    model: ToricVarietyModel,
    rep: EffectiveClass,
    basis: list[EffectiveClass],
    cls: EffectiveClass,
) -> bool:
    rank = model.class_group.rank
    diff_free = tuple(
        c - r for c, r in zip(cls.class_coords[:rank], rep.class_coords[:rank])
    )
    coeffs = _solve_nonneg_integer(basis, diff_free)
    if coeffs is None:
        return False
    tors = list(rep.class_coords[rank:])
    for c, b in zip(coeffs, basis):
        tors = [t + c * bt for t, bt in zip(tors, b.class_coords[rank:])]
    reduced = tuple(
        t % f for t, f in zip(tors, model.class_group.invariant_factors)
    )
    return reduced == cls.class_coords[rank:]


def wan_reduction(model: ToricVarietyModel, fit_grid_bound: int = 6) -> list[ZESeriesTerm]:
    """Decompose the effective monoid into cosets base + free-span(basis) and
    fit the section-count exponent of each coset as a quasi-polynomial.

    The decomposition is verified: coset degree counts must reproduce the
    class counts degree by degree over the scanned range."""
    gens = effective_generators(model)
    rank = model.class_group.rank
    basis: list[EffectiveClass] = []
    chosen: list[tuple[int, ...]] = []
    for g in gens:
        cand = chosen + [g.class_coords[:rank]]
        if _rational_rank(cand) > len(chosen):
            basis.append(g)
            chosen = cand
    maxdeg = max(g.degree for g in gens)
    reps: list[EffectiveClass] = []
    last_added = 0
    scan_limit = 16 * maxdeg
    d = 0
    while d <= scan_limit:
        for cls in enumerate_effective_classes(model, d):
            if not any(_coset_covers(model, rep, basis, cls) for rep in reps):
                reps.append(cls)
                last_added = d
        if d - last_added >= 2 * maxdeg and d >= 2 * maxdeg:
            break
        d += 1
    else:
        raise CertificationError("coset representative search did not stabilize")
    check_to = d
    for deg in range(check_to + 1):
        expected = len(enumerate_effective_classes(model, deg))
        got = 0
        for rep in reps:
            got += _count_free_combinations(
                [b.degree for b in basis], deg - rep.degree
            )
        if got != expected:
            raise CertificationError(
                f"coset decomposition does not reproduce class counts at degree {deg}: "
                f"{got} != {expected}"
            )

    dim = model.fan.dim
    terms = []
    for rep in reps:
        r = len(basis)

        def sampler(*n: int, rep=rep) -> int:
            div = rep.representative
            for ni, b in zip(n, basis):
                div = div + b.representative.scale(ni)
            return sections_dim(model.fan, div)

        periods = []
        for i in range(r):
            def axis(nv: int, i=i) -> int:
                point = [1] * r
                point[i] = nv
                return sampler(*point)

            qp = fit_with_period_search(axis, dim, max_period=12, validate_to=24)
            periods.append(qp.period)
        mqp = fit_multivariate_qp(sampler, r, periods, [dim] * r, threshold=0)
        for _, comp in mqp.components:
            deg = comp.total_degree()
            if not (1 <= deg <= dim):
                raise CertificationError(
                    f"fitted exponent degree {deg} outside [1, {dim}]"
                )
        terms.append(ZESeriesTerm(rep, tuple(basis), mqp))
    return terms


def _count_free_combinations(degrees: list[int], target: int) -> int:
    if target < 0:
        return 0
    counts = [0] * (target + 1)
    counts[0] = 1
    for deg in degrees:
        for s in range(deg, target + 1):
            counts[s] += counts[s - deg]
    return counts[target]


def ze_terms_to_mero(
    terms: Sequence[ZESeriesTerm],
    q: int,
    p: int,
    truncation: int = 24,
    precision: int = 8,
    grid_bound: int = 6,
) -> MeromorphicPart:
    """Assemble the full section-weighted series sum_c q^{l(c)} T^{deg c} as a
    meromorphic part, splitting each coset series by exponent residue class."""
    e = prime_power_exponent(q, p)
    all_pieces: list[MeroPiece] = []
    degrees_used: tuple[int, ...] = ()
    for term in terms:
        r = len(term.generators)
        gen_degs = tuple(g.degree for g in term.generators)
        periods = term.exponent.periods
        for residues, comp in term.exponent.components:
            images = [
                Poly.var(i, r) * periods[i] + Poly.const(r, residues[i])
                for i in range(r)
            ]
            f_combo = comp.substitute(images)
            combo_degs = tuple(d * pe for d, pe in zip(gen_degs, periods))
            t_shift = term.base.degree + sum(
                d * res for d, res in zip(gen_degs, residues)
            )
            cert = check_increasing(f_combo, r, grid_bound)
            part = reduce_to_mero_parts(cert, combo_degs, q, p, truncation, precision)
            degrees_used = part.degrees
            for piece in part.pieces:
                all_pieces.append(
                    MeroPiece(
                        weight=piece.weight,
                        q_shift=piece.q_shift,
                        t_shift=piece.t_shift + t_shift,
                        atoms=piece.atoms,
                        numer_poly=piece.numer_poly,
                        numer_series=piece.numer_series,
                        denom_series=piece.denom_series,
                    )
                )
    return MeromorphicPart(q, p, precision, truncation, degrees_used, tuple(all_pieces))


# =============================================================================
# pole order and special value at T = 1
# =============================================================================


@dataclass(frozen=True)
class PoleReport:
    order: int
    special_value: Fraction
    special_residue: int
    precision: int
    certified_from: int  # d_0: all later (1-T)^rho coefficients have ord >= precision
    window: tuple[int, int]
    profile_at_order: tuple[tuple[int, Optional[int]], ...]
    profile_below_order: tuple[tuple[int, Optional[int]], ...]
    entire_at_one: int
    entire_tail_valuation: int


def binomial_difference(coeffs: Sequence[int], j: int) -> list[int]:
    """Coefficients of (1 - T)^j times the series, within the truncation."""
    out = list(coeffs)
    for _ in range(j):
        out = [out[d] - (out[d - 1] if d else 0) for d in range(len(out))]
    return out


def entire_class_sum_at_one(
    model: ToricVarietyModel, q: int, p: int, precision: int, degree_cap: int = 512
) -> tuple[int, int]:
    """sum over all effective classes of q^{l(c)}, mod p^precision.

    Classes with e*l >= precision contribute 0 mod p^precision; monotonicity
    of l along generators certifies that beyond the scanned degree window no
    small-l classes remain.  Returns (residue, scanned degree)."""
    e = prime_power_exponent(q, p)
    gens = effective_generators(model)
    maxdeg = max(g.degree for g in gens)
    total = 0
    d = 0
    window: list[int] = []
    while d <= degree_cap:
        ls = [sections_dim(model.fan, c.representative) for c in enumerate_effective_classes(model, d)]
        min_l = min(ls) if ls else None
        for l in ls:
            if e * l < precision:
                total += q**l
        window.append(min_l if min_l is not None else 10**9)
        if len(window) >= maxdeg and all(e * m >= precision for m in window[-maxdeg:]):
            return total % p**precision, d
        d += 1
    raise CertificationError(
        f"could not certify the class sum at T=1 within degree {degree_cap}"
    )


def pole_analysis(
    model: ToricVarietyModel, q: int, p: int, dmax: int, precision: int
) -> PoleReport:
    """Certify the pole order rho at T=1 on the computed window and report the
    special value of (1-T)^rho Z there, mod p^precision."""
    e = prime_power_exponent(q, p)
    rho = model.class_group.rank
    sections = _sections_by_degree(model, dmax)
    s_series = [sum(q**l for l in ls) for ls in sections]
    counts = [len(ls) for ls in sections]
    m_series = []
    for s, c in zip(s_series, counts):
        if (s - c) % (q - 1) != 0:
            raise ArithmeticError("section sum inconsistent with class count")
        m_series.append((s - c) // (q - 1))
    if m_series[0] != 1:
        raise ArithmeticError("M_0 must be 1")

    b_rho = binomial_difference(m_series, rho)
    b_below = binomial_difference(m_series, rho - 1) if rho >= 1 else m_series
    ords_rho = [ord_p(c, p) for c in b_rho]
    ords_below = [ord_p(c, p) for c in b_below]

    bad = [d for d, v in enumerate(ords_rho) if v is not None and v < precision]
    d0 = (max(bad) if bad else 0)
    if d0 >= dmax:
        raise CertificationError(
            f"(1-T)^{rho} coefficients do not reach valuation {precision} within "
            f"Dmax={dmax}; increase Dmax"
        )

    w_lo = max(0, dmax - 7)
    window_ords = [v for v in ords_below[w_lo:]]
    if not any(v == 0 for v in window_ords):
        raise CertificationError(
            f"(1-T)^{rho - 1} coefficients have no valuation-0 entry in the tail "
            f"window [{w_lo}, {dmax}]; pole order {rho} not certified"
        )

    bs_rho = binomial_difference(list(s_series), rho)
    partial = sum(bs_rho)
    tail_val = ord_p(partial, p)
    if tail_val is not None and tail_val < precision:
        raise CertificationError(
            f"partial sums of the entire part times (1-T)^{rho} only reach "
            f"valuation {tail_val} < {precision} at Dmax={dmax}"
        )

    ccs = class_count_series(model, dmax)
    special = -ccs.special_limit(rho) / (q - 1)
    scalar = PadicScalar.from_rational(special, p, precision + 2)
    residue = scalar.residue_mod(precision)
    entire_residue, scanned = entire_class_sum_at_one(model, q, p, precision)

    return PoleReport(
        order=rho,
        special_value=special,
        special_residue=residue,
        precision=precision,
        certified_from=d0,
        window=(w_lo, dmax),
        profile_at_order=tuple((d, v) for d, v in enumerate(ords_rho)),
        profile_below_order=tuple((d, v) for d, v in enumerate(ords_below)),
        entire_at_one=entire_residue,
        entire_tail_valuation=precision if tail_val is None else tail_val,
    )
