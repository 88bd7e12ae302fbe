"""Command-line front end.

Subcommands: ``analyze``, ``verify-example``, ``solve-profile``,
``linearity-check``.  Exit codes are a stable contract: 0 success, 1 file or
parse errors, 2 mathematical errors (singular metric, domain violations),
3 consistency findings beyond tolerance.  Errors are mirrored as a JSON
object on stderr for machine consumption.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import analyze_point, render_table
from .errors import ModelError, NsmetricError
from .example import DEFAULT_S, example_model
from .matter import solve_antisym_profile
from .model import CoeffSet, SpacetimeModel, load_model_file
from .verify import run_verification

BUILTIN_MODELS = ("example",)


def _parse_point(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise ModelError(f"--point needs 4 comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise ModelError(f"--point has a non-numeric component: {text!r}") from None


def _parse_coeffs(text: str | None) -> CoeffSet | None:
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 5:
        raise ModelError(f"--coeffs needs u,u1,v,v1,w (5 numbers), got {text!r}")
    try:
        u, u1, v, v1, w = (float(p) for p in parts)
    except ValueError:
        raise ModelError(f"--coeffs has a non-numeric component: {text!r}") from None
    return CoeffSet(u, u1, v, v1, w)


def _parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ModelError(f"--grid needs start:stop:steps, got {text!r}")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ModelError(f"--grid has a bad component: {text!r}") from None
    if steps < 2:
        raise ModelError("--grid needs at least 2 steps")
    return start, stop, steps


def _load_model_arg(spec: str) -> SpacetimeModel:
    if spec == "example":
        return example_model()
    path = Path(spec)
    if not path.exists():
        raise ModelError(f"model file {spec!r} does not exist (and it is not a "
                         f"built-in name; built-ins: {', '.join(BUILTIN_MODELS)})")
    return load_model_file(path)


def _emit(data: dict, fmt: str, title: str):
    if fmt == "json":
        print(json.dumps(data, indent=2))
    else:
        print(render_table(data, title))


def cmd_analyze(args) -> int:
    model = _load_model_arg(args.model)
    point = _parse_point(args.point) if args.point else model.reference_point
    frame = None
    if args.frame == "comoving":
        frame = "comoving"
    elif args.frame_u:
        frame = tuple(args.frame_u)
    report = analyze_point(model, point,
                           coeffs=_parse_coeffs(args.coeffs),
                           lam=args.lam, frame=frame, tol=args.tol,
                           raise_on_violation=False)
    _emit(report, args.format, f"analysis of {model.name}")
    if report["diagnostics"]["status"] != "ok":
        _error_json("ConsistencyError",
                    f"two-route residual {report['diagnostics']['worst_unattributed']:.3e} "
                    f"exceeds tolerance {args.tol:.1e}", 3)
        return 3
    return 0


def cmd_verify_example(args) -> int:
    s = tuple(args.profile) if args.profile else DEFAULT_S
    result = run_verification(grid=_parse_grid(args.grid), s=s,
                              coeffs=_parse_coeffs(args.coeffs) or CoeffSet(v1=1.0))
    if args.format == "json":
        print(json.dumps(result.as_dict(), indent=2))
    else:
        print("== example verification ==")
        for c in result.checks:
            mark = "PASS" if c.passed else "FAIL"
            print(f"  [{mark}] {c.name:32s} err={c.error:.3e} tol={c.tolerance:.1e}  {c.detail}")
        print("-- ledger (printed closed forms vs direct computation) --")
        for r in result.ledger:
            ratio = "n/a" if r.ratio is None else f"{r.ratio:.9g}"
            print(f"  [{r.status:11s}] {r.quantity:34s} direct={r.direct:.9g} "
                  f"printed={r.printed:.9g} ratio={ratio}")
            print(f"                note: {r.note}")
        for skip in result.skipped:
            print(f"  [skipped] t={skip['t']}: {skip['reason']}")
        print(f"overall: {'ok' if result.ok else 'MISMATCH'}"
              + (" (strict: ledger rows fail)" if args.strict and result.ledger else ""))
    code = result.exit_code(args.strict)
    if code != 0:
        _error_json("ConsistencyError",
                    "verification mismatches" if not result.ok
                    else "strict mode: documented ledger rows present", code)
    return code


def cmd_solve_profile(args) -> int:
    start, stop, steps = _parse_grid(args.grid)
    try:
        alphas = tuple(float(a) for a in args.alphas.split(","))
    except ValueError:
        raise ModelError(f"--alphas has a non-numeric component: {args.alphas!r}") from None
    sol = solve_antisym_profile(
        [args.s0, args.s1, args.s2, args.s3], alphas, args.target,
        _parse_coeffs(args.coeffs) or CoeffSet(v1=1.0),
        (start, stop), steps, quad_tol=args.tol)
    worst = float(np.max(np.abs(sol.roundtrip_residuals))) if len(sol.roundtrip_residuals) else 0.0
    if args.format == "json":
        print(json.dumps({
            "t": [float(v) for v in sol.ts],
            "branch0": [[float(x) for x in row] for row in sol.primary],
            "branch1": [[float(x) for x in row] for row in sol.mirrored],
            "roundtrip_residual_max": worst,
        }, indent=2))
    else:
        print("== antisymmetric profile solution ==")
        print(f"{'t':>14s} {'n3':>14s} {'n4':>14s} {'n5':>14s}   (branch 0; branch 1 is the negation)")
        for t, row in zip(sol.ts, sol.primary):
            print(f"{t:14.8g} {row[0]:14.8g} {row[1]:14.8g} {row[2]:14.8g}")
        print(f"round-trip residual max: {worst:.3e}")
    return 0


def cmd_linearity_check(args) -> int:
    from .connection import generalized_christoffel
    from .curvature import riemann_at
    from .matter import MatterFieldTerm, combine_matter_fields, comoving_frame
    from .model import metric_at
    from .tensors import Tensor

    model = _load_model_arg(args.model)
    point = _parse_point(args.point) if args.point else model.reference_point
    m = metric_at(model, point)
    c = generalized_christoffel(m)
    cur = riemann_at(c)
    frame = comoving_frame(m)
    rng = np.random.default_rng(args.seed)

    worst = 0.0
    for _ in range(args.rounds):
        terms = []
        for k in range(args.terms):
            v = rng.normal(size=(4, 4))
            v = 0.5 * (v + v.T)
            terms.append(MatterFieldTerm(f"r{k}", float(rng.normal()),
                                         float(rng.normal()), Tensor(v, ("l", "l"))))
        combined = combine_matter_fields(terms, m, cur, frame, args.lam)
        parts = [combine_matter_fields(
            [MatterFieldTerm(t.label, 1.0, t.l_value, t.v_low)], m, cur, frame, args.lam)
            for t in terms]
        t_sum = sum(t.alpha * p.t_low.data for t, p in zip(terms, parts))
        worst = max(worst, float(np.max(np.abs(combined.t_low.data - t_sum))))
        for attr in ("trace", "p", "rho"):
            lin = sum(t.alpha * getattr(p, attr) for t, p in zip(terms, parts))
            worst = max(worst, abs(getattr(combined, attr) - lin))
    ok = worst <= args.tol
    data = {"rounds": args.rounds, "terms": args.terms, "max_deviation": worst,
            "tolerance": args.tol, "ok": ok}
    if args.format == "json":
        print(json.dumps(data, indent=2))
    else:
        print(f"linearity over {args.rounds} rounds x {args.terms} terms: "
              f"max deviation {worst:.3e} (tol {args.tol:.1e}) -> "
              f"{'ok' if ok else 'FAIL'}")
    if not ok:
        _error_json("ConsistencyError", f"linearity deviation {worst:.3e}", 3)
        return 3
    return 0


def _error_json(kind: str, message: str, code: int):
    print(json.dumps({"error": {"kind": kind, "message": message,
                                "exit_code": code}}), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsmetric",
        description="Tensor calculus for 4-dimensional spaces with "
                    "non-symmetric metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="full per-point report for a model")
    pa.add_argument("--model", default="example",
                    help="model file path or built-in name (default: example)")
    pa.add_argument("--point", help="evaluation point t,x,y,z "
                                    "(default: the model's reference point)")
    pa.add_argument("--coeffs", help="curvature-family coefficients u,u1,v,v1,w")
    pa.add_argument("--lambda", dest="lam", type=float, default=0.0,
                    help="cosmological constant")
    pa.add_argument("--frame", choices=["model", "comoving"], default=None,
                    help="frame override")
    pa.add_argument("--frame-u", nargs=4, metavar="EXPR", default=None,
                    help="explicit frame vector components")
    pa.add_argument("--format", choices=["table", "json"], default="table")
    pa.add_argument("--tol", type=float, default=1e-8,
                    help="unattributed two-route residual tolerance")
    pa.set_defaults(func=cmd_analyze)

    pv = sub.add_parser("verify-example",
                        help="sweep the built-in example against its closed forms")
    pv.add_argument("--grid", default="0.5:2.0:25", help="t grid start:stop:steps")
    pv.add_argument("--coeffs", help="family coefficients u,u1,v,v1,w")
    pv.add_argument("--profile", nargs=4, metavar="EXPR", default=None,
                    help="override the four diagonal profiles s0..s3")
    pv.add_argument("--strict", action="store_true",
                    help="documented ledger rows become failures")
    pv.add_argument("--format", choices=["table", "json"], default="table")
    pv.set_defaults(func=cmd_verify_example)

    ps = sub.add_parser("solve-profile",
                        help="recover antisymmetric profiles from a matter scalar")
    ps.add_argument("--s0", default="1")
    ps.add_argument("--s1", default="1")
    ps.add_argument("--s2", default="1")
    ps.add_argument("--s3", default="1")
    ps.add_argument("--alphas", default="1,0,0", help="proportionality a3,a4,a5")
    ps.add_argument("--target", required=True, help="matter-scalar expression in t")
    ps.add_argument("--coeffs", help="family coefficients u,u1,v,v1,w")
    ps.add_argument("--grid", default="0:2:101", help="t grid start:stop:steps")
    ps.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance")
    ps.add_argument("--format", choices=["table", "json"], default="table")
    ps.set_defaults(func=cmd_solve_profile)

    pl = sub.add_parser("linearity-check",
                        help="verify linearity of combined matter terms")
    pl.add_argument("--model", default="example")
    pl.add_argument("--point", help="evaluation point t,x,y,z")
    pl.add_argument("--terms", type=int, default=3)
    pl.add_argument("--rounds", type=int, default=25)
    pl.add_argument("--seed", type=int, default=7)
    pl.add_argument("--lambda", dest="lam", type=float, default=0.0)
    pl.add_argument("--tol", type=float, default=1e-12)
    pl.add_argument("--format", choices=["table", "json"], default="table")
    pl.set_defaults(func=cmd_linearity_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NsmetricError as exc:
        _error_json(type(exc).__name__, str(exc), exc.exit_code)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
