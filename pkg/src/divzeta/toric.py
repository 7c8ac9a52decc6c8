"""Complete fans, T-invariant divisors, divisor polytopes, section counts,
class groups, and degree-graded enumeration of effective classes.

A variety is modelled combinatorially: the fan supplies the rays, the class
group is the cokernel of the ray matrix, and l(D) is an exact lattice-point
count of the divisor polytope {m : <m, v_ray> >= -b_ray}.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .intlinalg import FinAbGroupPresentation, IntMatrix, cokernel, solve_preimage


class FanValidationError(ValueError):
    pass


class UnboundedPolytopeError(ValueError):
    pass


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Fan:
    """Rays and maximal cones of a (claimed) complete fan in Z^dim."""

    dim: int
    rays: tuple[tuple[int, ...], ...]
    max_cones: tuple[tuple[int, ...], ...]
    complete: bool
    completeness_verified: bool = False

    def ray_matrix(self) -> IntMatrix:
        return IntMatrix.from_rows(self.rays)

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.dim,
                "rays": [list(r) for r in self.rays],
                "max_cones": [list(c) for c in self.max_cones],
                "complete": self.complete,
            }
        )

    @staticmethod
    def from_dict(data: dict) -> "Fan":
        try:
            dim = int(data["dim"])
            rays = tuple(tuple(int(x) for x in ray) for ray in data["rays"])
            cones = tuple(tuple(int(i) for i in cone) for cone in data["max_cones"])
            complete = bool(data["complete"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FanValidationError(f"malformed fan field: {exc}") from exc
        return Fan(dim, rays, cones, complete)


@dataclass(frozen=True)
class TorusDivisor:
    """Integer coefficients b_ray indexed by the fan's rays."""

    coeffs: tuple[int, ...]

    @staticmethod
    def of(coeffs: Sequence[int]) -> "TorusDivisor":
        return TorusDivisor(tuple(int(c) for c in coeffs))

    def __add__(self, other: "TorusDivisor") -> "TorusDivisor":
        return TorusDivisor(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def scale(self, n: int) -> "TorusDivisor":
        return TorusDivisor(tuple(n * c for c in self.coeffs))


@dataclass(frozen=True)
class RationalPolytope:
    """The set {m in R^d : ineq_matrix @ m >= -rhs}."""

    ineq_matrix: IntMatrix
    rhs: tuple[int, ...]

    def __post_init__(self):
        if len(self.rhs) != self.ineq_matrix.rows:
            raise ValueError("rhs length must match inequality count")


def _angle_key(v: tuple[int, int]):
    # Exact counterclockwise order starting at the positive x-axis.
    x, y = v
    half = 0 if (y > 0 or (y == 0 and x > 0)) else 1
    return half


def _cross(a: tuple[int, int], b: tuple[int, int]) -> int:
    return a[0] * b[1] - a[1] * b[0]


def _sort_rays_ccw(rays: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    import functools as _ft

    def cmp(a, b):
        ha, hb = _angle_key(a), _angle_key(b)
        if ha != hb:
            return -1 if ha < hb else 1
        c = _cross(a, b)
        if c > 0:
            return -1
        if c < 0:
            return 1
        return 0

    return sorted(rays, key=_ft.cmp_to_key(cmp))


def validate_fan(fan: Fan) -> Fan:
    """Check primitivity and distinctness of rays; verify completeness
    geometrically in dimension <= 2.  In higher dimension the completeness
    flag is accepted as asserted and recorded as unverified."""
    for idx, ray in enumerate(fan.rays):
        if len(ray) != fan.dim:
            raise FanValidationError(f"ray {idx} has wrong dimension")
        g = 0
        for x in ray:
            g = math.gcd(g, abs(x))
        if g != 1:
            raise FanValidationError(f"ray {idx} {ray} is not primitive")
    if len(set(fan.rays)) != len(fan.rays):
        seen: dict = {}
        for idx, ray in enumerate(fan.rays):
            if ray in seen:
                raise FanValidationError(f"ray {idx} duplicates ray {seen[ray]}")
            seen[ray] = idx

    verified = False
    if fan.complete:
        if fan.dim == 1:
            dirs = {r[0] for r in fan.rays}
            if dirs != {1, -1}:
                raise FanValidationError("incomplete fan: both directions of Z required")
            verified = True
        elif fan.dim == 2:
            ordered = _sort_rays_ccw(list(fan.rays))
            for a, b in zip(ordered, ordered[1:] + ordered[:1]):
                if _cross(a, b) <= 0:
                    raise FanValidationError(
                        f"incomplete fan: angular gap of at least pi between rays {a} and {b}"
                    )
            verified = True
    return replace(fan, completeness_verified=verified)


def polytope_of_divisor(fan: Fan, divisor: TorusDivisor) -> RationalPolytope:
    if len(divisor.coeffs) != len(fan.rays):
        raise ValueError("divisor coefficient count must match ray count")
    return RationalPolytope(fan.ray_matrix(), tuple(divisor.coeffs))


# --- exact lattice point counting -------------------------------------------

Row = tuple[tuple[int, ...], int]  # (coefficients, c) meaning sum coeffs*m >= c


def _eliminate(rows: list[Row], j: int) -> list[Row]:
    kept, pos, neg = [], [], []
    for coeffs, c in rows:
        if coeffs[j] > 0:
            pos.append((coeffs, c))
        elif coeffs[j] < 0:
            neg.append((coeffs, c))
        else:
            kept.append((coeffs[:j] + coeffs[j + 1 :], c))
    for cp, dp in pos:
        for cn, dn in neg:
            a, b = cp[j], cn[j]  # a > 0, b < 0
            comb = tuple(a * y - b * x for x, y in zip(cp, cn))
            comb = comb[:j] + comb[j + 1 :]
            kept.append((comb, a * dn - b * dp))
    return list(dict.fromkeys(kept))


def _fm_bounds_coord(rows: list[Row], dim: int, i: int):
    """Exact bounds of coordinate i over the real polyhedron.

    Returns (feasible, lo, hi) with lo/hi Fractions or None for unbounded.
    """
    work = rows
    for j in range(dim - 1, -1, -1):
        if j == i:
            continue
        work = _eliminate(work, j)
    lo = None
    hi = None
    for coeffs, c in work:
        a = coeffs[0]
        if a == 0:
            if c > 0:
                return False, None, None
        elif a > 0:
            cand = Fraction(c, a)
            lo = cand if lo is None or cand > lo else lo
        else:
            cand = Fraction(c, a)
            hi = cand if hi is None or cand < hi else hi
    if lo is not None and hi is not None and lo > hi:
        return False, lo, hi
    return True, lo, hi


def _count_rec(rows: list[Row], boxes: list[tuple[int, int]]) -> int:
    if not boxes:
        return 1 if all(c <= 0 for _, c in rows) else 0
    lo, hi = boxes[0]
    single_lo, single_hi = lo, hi
    for coeffs, c in rows:
        if coeffs[0] != 0 and all(x == 0 for x in coeffs[1:]):
            a = coeffs[0]
            if a > 0:
                bound = -(-c // a)  # ceil(c/a)
                single_lo = max(single_lo, bound)
            else:
                bound = c // a  # floor(c/a) with a < 0
                single_hi = min(single_hi, bound)
        elif all(x == 0 for x in coeffs) and c > 0:
            return 0
    total = 0
    for v in range(single_lo, single_hi + 1):
        nxt = [(coeffs[1:], c - coeffs[0] * v) for coeffs, c in rows if any(coeffs[1:]) or c - coeffs[0] * v > 0]
        total += _count_rec(nxt, boxes[1:])
    return total


@functools.lru_cache(maxsize=None)
def _count_cached(matrix_entries: tuple, rhs: tuple) -> int:
    dim = len(matrix_entries[0])
    rows: list[Row] = [(coeffs, -b) for coeffs, b in zip(matrix_entries, rhs)]
    boxes = []
    for i in range(dim):
        feasible, lo, hi = _fm_bounds_coord(rows, dim, i)
        if not feasible:
            return 0
        if lo is None or hi is None:
            raise UnboundedPolytopeError(
                f"polytope is unbounded in coordinate {i}; fan incomplete or divisor invalid"
            )
        boxes.append((math.ceil(lo), math.floor(hi)))
    return _count_rec(rows, boxes)


def count_lattice_points(polytope: RationalPolytope) -> int:
    """Exact number of integer points, with boundedness proven by exact
    Fourier-Motzkin coordinate bounds."""
    return _count_cached(polytope.ineq_matrix.entries, polytope.rhs)


def sections_dim(fan: Fan, divisor: TorusDivisor) -> int:
    """l(D): the lattice-point count of the divisor polytope."""
    return count_lattice_points(polytope_of_divisor(fan, divisor))


# --- class group and effective classes --------------------------------------


def _normalize_presentation(
    pres: FinAbGroupPresentation, ray_count: int
) -> FinAbGroupPresentation:
    """Rebase the free part so ray classes land in the nonnegative orthant
    when a unimodular rebase exists (rank 1: sign fix; rank 2: extreme ray
    classes become the standard basis).  Keeps the presentation valid and
    deterministic; needed so conventional gradings like (1,...,1) are
    positive on the generators."""
    unit_classes = []
    for i in range(ray_count):
        vec = [0] * ray_count
        vec[i] = 1
        unit_classes.append(pres.free_part(vec))
    distinct = [c for c in dict.fromkeys(unit_classes) if any(x != 0 for x in c)]

    free_rows = [list(r) for r in pres.projection.entries[: pres.rank]]
    if pres.rank == 1 and distinct:
        negatives = sum(1 for c in distinct if c[0] < 0)
        if negatives == len(distinct):
            free_rows[0] = [-x for x in free_rows[0]]
        elif 0 < negatives < len(distinct):
            return pres  # not pointed along a single direction; leave as-is
    elif pres.rank == 2 and len(distinct) >= 2:
        ordered = _sort_rays_ccw([tuple(c) for c in distinct])
        # classes must fit in an open half plane for a positive grading to exist
        u, w = ordered[0], ordered[-1]
        if _cross(u, w) <= 0:
            return pres
        det = _cross(u, w)
        if abs(det) != 1:
            return pres
        # W = [u w] as columns; new coords = W^{-1} * old
        inv = [[w[1], -w[0]], [-u[1], u[0]]]  # adjugate, det = +1
        old = free_rows
        free_rows = [
            [inv[0][0] * old[0][j] + inv[0][1] * old[1][j] for j in range(ray_count)],
            [inv[1][0] * old[0][j] + inv[1][1] * old[1][j] for j in range(ray_count)],
        ]
    else:
        return pres
    torsion_rows = [list(r) for r in pres.projection.entries[pres.rank :]]
    projection = IntMatrix.from_rows(free_rows + torsion_rows)
    return FinAbGroupPresentation(
        pres.rank, pres.invariant_factors, pres.ambient_dim, projection
    )


def divisor_class_group(fan: Fan) -> FinAbGroupPresentation:
    """Cokernel of the ray matrix: the divisor class group with an explicit
    projection from ray coefficients to canonical class coordinates."""
    pres = cokernel(fan.ray_matrix())
    return _normalize_presentation(pres, len(fan.rays))


@dataclass(frozen=True)
class ToricVarietyModel:
    fan: Fan
    class_group: FinAbGroupPresentation
    grading: tuple[int, ...]

    def degree_of_coords(self, coords: Sequence[int]) -> int:
        free = coords[: self.class_group.rank]
        return sum(g * x for g, x in zip(self.grading, free))

    def degree_of_divisor(self, divisor: TorusDivisor) -> int:
        return self.degree_of_coords(self.class_group.class_coords(divisor.coeffs))


@dataclass(frozen=True)
class EffectiveClass:
    class_coords: tuple[int, ...]
    representative: TorusDivisor
    degree: int


def make_model(fan: Fan, grading: Sequence[int]) -> ToricVarietyModel:
    fan = validate_fan(fan)
    if not fan.complete:
        raise ModelError("model requires a complete fan")
    group = divisor_class_group(fan)
    if len(grading) != group.rank:
        raise ModelError(
            f"grading length {len(grading)} does not match class group rank {group.rank}"
        )
    model = ToricVarietyModel(fan, group, tuple(int(g) for g in grading))
    effective_generators(model)  # validates positivity of the grading
    return model


def effective_generators(model: ToricVarietyModel) -> list[EffectiveClass]:
    """Classes of the ray divisors D_ray, deduplicated, each of positive degree."""
    out: list[EffectiveClass] = []
    seen = set()
    n = len(model.fan.rays)
    for i in range(n):
        coeffs = tuple(1 if j == i else 0 for j in range(n))
        coords = model.class_group.class_coords(coeffs)
        if coords in seen:
            continue
        seen.add(coords)
        degree = model.degree_of_coords(coords)
        if degree <= 0:
            raise ModelError(
                f"grading is nonpositive (degree {degree}) on the class of ray {i}"
            )
        out.append(EffectiveClass(coords, TorusDivisor(coeffs), degree))
    return out


def enumerate_effective_classes(model: ToricVarietyModel, degree: int) -> list[EffectiveClass]:
    """All distinct effective classes of the given degree, each with a
    nonnegative representative divisor built from the ray generators."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    gens = effective_generators(model)
    group = model.class_group
    found: dict[tuple[int, ...], EffectiveClass] = {}

    def rec(idx: int, remaining: int, coords: tuple[int, ...], rep: tuple[int, ...]):
        if remaining == 0:
            key = group.reduce_coords(coords)
            if key not in found:
                found[key] = EffectiveClass(key, TorusDivisor(rep), degree)
            return
        if idx == len(gens):
            return
        g = gens[idx]
        max_mult = remaining // g.degree
        for mult in range(max_mult + 1):
            new_coords = tuple(
                c + mult * gc for c, gc in zip(coords, g.class_coords)
            )
            new_rep = tuple(r + mult * gr for r, gr in zip(rep, g.representative.coeffs))
            rec(idx + 1, remaining - mult * g.degree, new_coords, new_rep)

    zero_coords = (0,) * (group.rank + len(group.invariant_factors))
    zero_rep = (0,) * len(model.fan.rays)
    rec(0, degree, zero_coords, zero_rep)
    return [found[k] for k in sorted(found)]


def nonnegative_lift(model: ToricVarietyModel, coords: Sequence[int]) -> Optional[TorusDivisor]:
    """A nonnegative ray-coefficient divisor in the class with the given
    canonical coordinates, or None if the class is not effective at its degree."""
    degree = model.degree_of_coords(coords)
    if degree < 0:
        return None
    target = model.class_group.reduce_coords(coords)
    for cls in enumerate_effective_classes(model, degree):
        if cls.class_coords == target:
            return cls.representative
    return None
