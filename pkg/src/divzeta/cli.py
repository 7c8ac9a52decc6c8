"""Batch command-line front end: fan ingestion, built-in variety families,
command dispatch, and machine-readable reports.

Commands: class-group, sections, ehrhart, zeta-coeffs, pole, mero-eval.
Errors are emitted as a JSON object on stdout with a nonzero exit status.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .ehrhart import fit_with_period_search, qp_to_json, validate_qp
from .padic import PadicScalar, prime_power_exponent
from .polynomial import Poly
from .toric import (
    Fan,
    FanValidationError,
    TorusDivisor,
    ToricVarietyModel,
    make_model,
    sections_dim,
    validate_fan,
)
from .zeta import (
    check_increasing,
    evaluate_meromorphic,
    pole_analysis,
    reduce_to_mero_parts,
    zeta_coefficients,
)


BUILTIN_GRADINGS = {
    "p1": (1,),
    "p2": (1,),
    "p1xp1": (1, 1),
    "hirzebruch": (1, 1),
    "wp112": (1,),
}


def builtin_fan(name: str) -> Fan:
    if name == "p1":
        return Fan(1, ((1,), (-1,)), ((0,), (1,)), True)
    if name == "p2":
        return Fan(2, ((1, 0), (0, 1), (-1, -1)), ((0, 1), (1, 2), (2, 0)), True)
    if name == "p1xp1":
        return Fan(
            2,
            ((1, 0), (0, 1), (-1, 0), (0, -1)),
            ((0, 1), (1, 2), (2, 3), (3, 0)),
            True,
        )
    if name.startswith("hirzebruch:"):
        try:
            a = int(name.split(":", 1)[1])
        except ValueError as exc:
            raise FanValidationError(f"bad hirzebruch parameter in {name!r}") from exc
        if a < 0:
            raise FanValidationError("hirzebruch parameter must be nonnegative")
        return Fan(
            2,
            ((1, 0), (0, 1), (-1, a), (0, -1)),
            ((0, 1), (1, 2), (2, 3), (3, 0)),
            True,
        )
    if name == "wp112":
        return Fan(2, ((1, 0), (0, 1), (-1, -2)), ((0, 1), (1, 2), (2, 0)), True)
    raise FanValidationError(f"unknown builtin variety {name!r}")


def builtin_grading(name: str) -> tuple[int, ...]:
    key = "hirzebruch" if name.startswith("hirzebruch:") else name
    if key not in BUILTIN_GRADINGS:
        raise FanValidationError(f"unknown builtin variety {name!r}")
    return BUILTIN_GRADINGS[key]


def parse_fan_file(path: str) -> Fan:
    """Validated Fan from a JSON file with fields dim, rays, max_cones,
    complete; errors carry line/field context."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FanValidationError(f"cannot read fan file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FanValidationError(
            f"fan file {path} is not valid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return validate_fan(Fan.from_dict(data))


@dataclass(frozen=True)
class JobConfig:
    variety: Optional[str]
    fan_file: Optional[str]
    grading: Optional[tuple[int, ...]]
    q: int
    p: int
    dmax: int
    precision: int
    out: str

    def __post_init__(self):
        if self.dmax < 1:
            raise ValueError("dmax must be at least 1")
        if self.precision < 1:
            raise ValueError("precision must be at least 1")
        prime_power_exponent(self.q, self.p)


def _model_from_config(cfg: JobConfig) -> ToricVarietyModel:
    if cfg.fan_file:
        fan = parse_fan_file(cfg.fan_file)
        if cfg.grading is None:
            raise ValueError("--grading is required with --fan-file")
        return make_model(fan, cfg.grading)
    if not cfg.variety:
        raise ValueError("one of --variety or --fan-file is required")
    fan = builtin_fan(cfg.variety)
    grading = cfg.grading if cfg.grading is not None else builtin_grading(cfg.variety)
    return make_model(fan, grading)


def _parse_int_vector(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip() != "")


def _parse_poly(text: str) -> Poly:
    """Tiny polynomial parser: terms like 3/2*x1^2*x2 joined with + or -."""
    cleaned = text.replace(" ", "").replace("-", "+-")
    chunks = [c for c in cleaned.split("+") if c]
    max_var = 0
    parsed = []
    for chunk in chunks:
        sign = 1
        if chunk.startswith("-"):
            sign = -1
            chunk = chunk[1:]
        coeff = Fraction(1)
        expos: dict[int, int] = {}
        for factor in chunk.split("*"):
            if factor.startswith("x"):
                body = factor[1:]
                if "^" in body:
                    idx, power = body.split("^")
                else:
                    idx, power = body, "1"
                i = int(idx) - 1
                expos[i] = expos.get(i, 0) + int(power)
                max_var = max(max_var, i + 1)
            else:
                coeff *= Fraction(factor)
        parsed.append((sign * coeff, expos))
    terms: dict[tuple[int, ...], Fraction] = {}
    for coeff, expos in parsed:
        key = tuple(expos.get(i, 0) for i in range(max_var))
        terms[key] = terms.get(key, Fraction(0)) + coeff
    return Poly.from_terms(max_var, terms)


def _emit(payload: dict, out: str) -> None:
    if out == "csv":
        rows = payload.get("rows")
        if rows:
            print(",".join(str(h) for h in payload["header"]))
            for row in rows:
                print(",".join(str(x) for x in row))
        else:
            for key, value in payload.items():
                print(f"{key},{value}")
    else:
        print(json.dumps(payload, indent=2, default=str))


def _cmd_class_group(cfg: JobConfig, args) -> dict:
    model = _model_from_config(cfg)
    group = model.class_group
    return {
        "command": "class-group",
        "rank": group.rank,
        "invariant_factors": list(group.invariant_factors),
        "torsion_order": group.torsion_order,
        "ambient_rays": group.ambient_dim,
    }


def _cmd_sections(cfg: JobConfig, args) -> dict:
    model = _model_from_config(cfg)
    if args.divisor is None:
        raise ValueError("--divisor is required for sections")
    coeffs = _parse_int_vector(args.divisor)
    if len(coeffs) != len(model.fan.rays):
        raise ValueError(
            f"divisor needs {len(model.fan.rays)} coefficients, got {len(coeffs)}"
        )
    divisor = TorusDivisor(coeffs)
    return {
        "command": "sections",
        "divisor": list(coeffs),
        "sections_dim": sections_dim(model.fan, divisor),
        "degree": model.degree_of_divisor(divisor),
    }


def _cmd_ehrhart(cfg: JobConfig, args) -> dict:
    from .toric import effective_generators

    model = _model_from_config(cfg)
    if args.divisor is not None:
        coeffs = _parse_int_vector(args.divisor)
        divisor = TorusDivisor(coeffs)
    else:
        divisor = effective_generators(model)[0].representative

    def sampler(n: int) -> int:
        return sections_dim(model.fan, divisor.scale(n))

    qp = fit_with_period_search(sampler, model.fan.dim, validate_to=max(40, cfg.dmax))
    if not (1 <= qp.degree <= model.fan.dim):
        raise ValueError(f"fitted degree {qp.degree} outside [1, {model.fan.dim}]")
    grid = range(0, max(40, cfg.dmax) + 1)
    mismatches = validate_qp(qp, sampler, grid)
    return {
        "command": "ehrhart",
        "divisor": list(divisor.coeffs),
        "period": qp.period,
        "degree": qp.degree,
        "components": json.loads(qp_to_json(qp))["components"],
        "validated_to": max(40, cfg.dmax),
        "mismatches": mismatches,
    }


def _cmd_zeta_coeffs(cfg: JobConfig, args) -> dict:
    model = _model_from_config(cfg)
    zt = zeta_coefficients(model, cfg.q, cfg.dmax)
    rows = zt.to_csv_rows(cfg.p)
    return {
        "command": "zeta-coeffs",
        "q": cfg.q,
        "header": ["d", "M_d", f"ord_{cfg.p}"],
        "rows": [list(r) for r in rows],
    }


def _cmd_pole(cfg: JobConfig, args) -> dict:
    model = _model_from_config(cfg)
    report = pole_analysis(model, cfg.q, cfg.p, cfg.dmax, cfg.precision)
    return {
        "command": "pole",
        "order": report.order,
        "special_value": str(report.special_value),
        "special_value_residue": report.special_residue,
        "precision": report.precision,
        "certified_from": report.certified_from,
        "window": list(report.window),
        "entire_at_one": report.entire_at_one,
        "profile_at_order": [[d, v] for d, v in report.profile_at_order],
        "profile_below_order": [[d, v] for d, v in report.profile_below_order],
    }


def _cmd_mero_eval(cfg: JobConfig, args) -> dict:
    if args.poly is None:
        raise ValueError("--poly is required for mero-eval")
    poly = _parse_poly(args.poly)
    n = poly.nvars
    if args.degrees is not None:
        degrees = _parse_int_vector(args.degrees)
    else:
        degrees = (1,) * n
    cert = check_increasing(poly, n)
    part = reduce_to_mero_parts(
        cert, degrees, cfg.q, cfg.p, truncation=args.trunc, precision=cfg.precision
    )
    result: dict = {
        "command": "mero-eval",
        "poly": str(poly),
        "degrees": list(degrees),
        "pieces": len(part.pieces),
        "expansion": list(part.expand(min(args.trunc, 16))),
    }
    if args.t is not None:
        t = PadicScalar.from_rational(Fraction(args.t), cfg.p, cfg.precision + 24)
        value = evaluate_meromorphic(part, t, cfg.precision)
        result["t"] = args.t
        result["value"] = str(value)
    return result


COMMANDS = {
    "class-group": _cmd_class_group,
    "sections": _cmd_sections,
    "ehrhart": _cmd_ehrhart,
    "zeta-coeffs": _cmd_zeta_coeffs,
    "pole": _cmd_pole,
    "mero-eval": _cmd_mero_eval,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divzeta",
        description="Exact zeta functions of divisors on projective toric varieties.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--variety", help="builtin: p1, p2, p1xp1, hirzebruch:a, wp112")
    parser.add_argument("--fan-file", help="path to a JSON fan description")
    parser.add_argument("--grading", help="comma-separated grading vector")
    parser.add_argument("--q", type=int, default=2, help="finite field size, a power of p")
    parser.add_argument("--p", type=int, default=2, help="the prime")
    parser.add_argument("--dmax", type=int, default=12, help="truncation degree")
    parser.add_argument("--prec", type=int, default=8, help="p-adic precision")
    parser.add_argument("--out", choices=["text", "csv"], default="text")
    parser.add_argument("--divisor", help="comma-separated ray coefficients")
    parser.add_argument("--poly", help="exponent polynomial in x1, x2, ... (mero-eval)")
    parser.add_argument("--degrees", help="comma-separated T-degrees (mero-eval)")
    parser.add_argument("--t", help="rational evaluation point, e.g. 1 or 1/2 (mero-eval)")
    parser.add_argument("--trunc", type=int, default=24, help="series truncation (mero-eval)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = JobConfig(
            variety=args.variety,
            fan_file=args.fan_file,
            grading=_parse_int_vector(args.grading) if args.grading else None,
            q=args.q,
            p=args.p,
            dmax=args.dmax,
            precision=args.prec,
            out=args.out,
        )
        payload = COMMANDS[args.command](cfg, args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 1
    _emit(payload, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
