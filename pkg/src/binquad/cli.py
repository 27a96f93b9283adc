"""Command line front end.

Exit status: 0 success, 2 usage error (bad flags, alpha outside (0, 1)),
3 domain error (rule not defined at this alpha), 4 expression syntax error,
5 evaluation error (integrand fault), 1 anything else.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import expr as ex
from .composite import MAX_LEVEL, StopConfig, convergence_history, run_composite
from .measure import MAX_REFERENCE_ORDER, Alpha, MomentCache, density_at, polynomial_integral, reference_integral
from .rules import FAMILIES, W1_DOMAIN, DomainError, EvaluationError, apply_rule, build_rule

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_PARSE = 4
EXIT_EVAL = 5

MAX_MOMENT_ORDER = 60
TABLE_RULES = ("NC0", "NC1", "NC2", "NC3", "G0", "G1", "W1")
REFERENCE_LEVEL = 22


class UsageError(ValueError):
    pass


def _num(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _pretty_num(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return str(x)
    return format(x, ".14f") if abs(x) < 1e3 else format(x, ".14g")


def _json_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    if isinstance(v, float) and not math.isfinite(v):
        return "null"
    return _num(v)


def render(header: Sequence[str], rows: Sequence[Sequence], fmt: str, meta: dict | None = None) -> str:
    """Render a table as csv, json (list of records) or a fixed-width table."""
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for row in rows:
            buf.write(",".join(v if isinstance(v, str) else _num(v) for v in row) + "\n")
        return buf.getvalue()
    if fmt == "json":
        records = [dict(zip(header, row)) for row in rows]
        doc = {"meta": meta, "rows": records} if meta else records
        return _json_value(doc) + "\n"
    cells = [list(header)] + [[v if isinstance(v, str) else _pretty_num(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _alpha(text: str) -> float:
    try:
        return Alpha(float(text)).value
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _rule_list(text: str) -> list[str]:
    names = [t.strip().upper() for t in text.split(",") if t.strip()]
    unknown = [n for n in names if n not in FAMILIES]
    if unknown or not names:
        raise argparse.ArgumentTypeError(f"unknown rule(s) {unknown}; expected names from {', '.join(FAMILIES)}")
    return names


def _rule_name(text: str) -> str:
    names = _rule_list(text)
    if len(names) != 1:
        raise argparse.ArgumentTypeError(f"expected a single rule name, got {text!r}")
    return names[0]


def _integrand(args) -> tuple[ex.Integrand, list[float] | None]:
    if args.builtin:
        e = ex.builtin(args.builtin)
        integrand = ex.Integrand(e, args.builtin)
    else:
        integrand = ex.Integrand(ex.parse(args.expr), args.expr)
    return integrand, integrand.polynomial()


def _exact(alpha: float, integrand, poly, ref_level: int) -> tuple[float, str]:
    if poly is not None:
        return polynomial_integral(MomentCache(alpha), poly), "moments"
    return reference_integral(alpha, integrand, ref_level), f"reference_integral(k={ref_level})"


def cmd_moments(args) -> str:
    if not (0 <= args.max_order <= MAX_MOMENT_ORDER):
        raise UsageError(f"--max-order must be in [0, {MAX_MOMENT_ORDER}]")
    m = MomentCache(args.alpha).moments(args.max_order)
    return render(["s", "moment"], [(s, v) for s, v in enumerate(m)], args.format)


def cmd_table(args) -> str:
    rules = args.rules or [r for r in TABLE_RULES if r != "W1" or W1_DOMAIN[0] <= args.alpha <= W1_DOMAIN[1]]
    if args.max_order < 1 or args.max_order > MAX_MOMENT_ORDER:
        raise UsageError(f"--max-order must be in [1, {MAX_MOMENT_ORDER}]")
    built = [build_rule(name, args.alpha) for name in rules]
    orders = range(1, args.max_order + 1)
    cache = MomentCache(args.alpha)
    rows = [["moment"] + [cache.moment(s) for s in orders]]
    for rule in built:
        rows.append([rule.family] + [apply_rule(rule, lambda x, s=s: x**s) for s in orders])
    header = ["row"] + [f"s={s}" for s in orders]
    return render(header, rows, args.format, {"alpha": args.alpha})


def _stop_config(args) -> StopConfig:
    try:
        return StopConfig(tol=args.tol, k_min=args.k_min, k_max=args.k_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_integrate(args) -> str:
    integrand, _ = _integrand(args)
    rule = build_rule(args.rule, args.alpha)
    out = run_composite(rule, args.alpha, integrand, _stop_config(args))
    if out.warning:
        print(f"warning: {out.warning}", file=sys.stderr)
    header = ["result", "final_level", "est_error", "stopped_by"]
    row = [out.result, out.final_level, out.est_error, out.stopped_by]
    return render(header, [row], args.format, {"alpha": args.alpha, "rule": rule.family, "integrand": integrand.label})


def cmd_converge(args) -> str:
    if not (0 <= args.max_level <= MAX_LEVEL):
        raise UsageError(f"--max-level must be in [0, {MAX_LEVEL}]")
    integrand, poly = _integrand(args)
    rules = [build_rule(name, args.alpha) for name in args.rules]
    ref_level = min(max(REFERENCE_LEVEL, args.max_level + 4), MAX_REFERENCE_ORDER)
    exact, source = _exact(args.alpha, integrand, poly, ref_level)
    levels = range(args.min_level, args.max_level + 1)
    histories = [convergence_history(rule, args.alpha, integrand, levels, exact) for rule in rules]
    rows = [[k] + [h.errors[i] for h in histories] for i, k in enumerate(levels)]
    meta = {"alpha": args.alpha, "integrand": integrand.label, "exact": exact, "exact_source": source,
            "fitted_order": {r.family: h.fitted_order for r, h in zip(rules, histories)}}
    _note(args, meta)
    return render(["level"] + [r.family for r in rules], rows, args.format, meta)


def cmd_sweep_alpha(args) -> str:
    lo, hi = args.alpha_from, args.alpha_to
    if not (0 < lo < hi < 1) or args.steps < 2:
        raise UsageError("need 0 < --from < --to < 1 and --steps >= 2")
    integrand, poly = _integrand(args)
    rows = []
    sources = set()
    for a in np.linspace(lo, hi, args.steps):
        a = float(a)
        rule = build_rule(args.rule, a)
        exact, source = _exact(a, integrand, poly, args.ref_level)
        sources.add(source)
        rows.append([a, exact - apply_rule(rule, integrand)])
    meta = {"rule": args.rule, "integrand": integrand.label, "exact_source": ",".join(sorted(sources))}
    _note(args, meta)
    return render(["alpha", "error"], rows, args.format, meta)


def cmd_rule(args) -> str:
    rule = build_rule(args.name, args.alpha)
    if rule.has_duplicate_nodes:
        print(f"warning: {rule.family} has a duplicate node at alpha = {rule.alpha}; "
              "use QuadratureRule.merged() to combine it", file=sys.stderr)
    if args.format == "json":
        return rule.dumps() + "\n"
    rows = [[i, z, b] for i, (z, b) in enumerate(zip(rule.nodes, rule.weights))]
    meta = f"# {rule.family} alpha={_num(rule.alpha)} degree={rule.degree}\n"
    text = render(["index", "node", "weight"], rows, args.format)
    return text if args.format == "csv" else meta + text


def cmd_density(args) -> str:
    n = 1 << args.order
    rows = [[j / n, density_at(args.alpha, args.order, j / n)] for j in range(n)]
    return render(["x", "density"], rows, args.format)


def _note(args, meta) -> None:
    if args.format != "json":
        print("# " + ", ".join(f"{k}={v}" for k, v in meta.items() if k != "fitted_order"), file=sys.stderr)


def _add_integrand(p) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--expr", help='integrand text in x, e.g. "(5*x^4+6*x^3-x)/10"')
    group.add_argument("--builtin", choices=["f1", "f2"], help="f1 = (5x^4+6x^3-x)/10, f2 = x^20")


def _add_common(p, alpha_required: bool = True) -> None:
    p.add_argument("--alpha", type=_alpha, required=alpha_required, help="measure parameter in (0, 1)")
    p.add_argument("--format", choices=["csv", "json", "pretty"], default="csv")
    p.add_argument("--out", default="-", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binquad",
        description="Quadrature with respect to binomial measures on [0, 1].",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""examples:
  binquad moments --alpha 0.05 --max-order 5
  binquad table --alpha 0.3 --rules NC0,NC1,NC2,NC3,G0,G1,W1 --format pretty
  binquad integrate --alpha 0.3 --rule GL2 --builtin f1 --tol 1e-8
  binquad converge --alpha 0.3 --rules NC2,NC3,GL2,G1 --builtin f2 --max-level 12
  binquad sweep-alpha --rule NC2 --builtin f1 --from 0.01 --to 0.5 --steps 50
  binquad rule GL2 --alpha 0.3 --format json""",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="exact moments m_0..m_n")
    _add_common(p)
    p.add_argument("--max-order", type=int, default=5)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("table", help="rule values on x^s next to the exact moments")
    _add_common(p)
    p.add_argument("--rules", type=_rule_list, help="comma separated, default NC0..NC3,G0,G1 and W1 where defined")
    p.add_argument("--max-order", type=int, default=5)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("integrate", help="composite integration with the stopping criterion")
    _add_common(p)
    p.add_argument("--rule", type=_rule_name, required=True)
    _add_integrand(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=20)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("converge", help="composite error per level, one column per rule")
    _add_common(p)
    p.add_argument("--rules", type=_rule_list, required=True)
    _add_integrand(p)
    p.add_argument("--max-level", type=int, default=12)
    p.add_argument("--min-level", type=int, default=0)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("sweep-alpha", help="single-application error of one rule across alpha")
    _add_common(p, alpha_required=False)
    p.add_argument("--rule", type=_rule_name, required=True)
    _add_integrand(p)
    p.add_argument("--from", dest="alpha_from", type=float, default=0.01)
    p.add_argument("--to", dest="alpha_to", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--ref-level", type=int, default=REFERENCE_LEVEL,
                   help="reference order for non-polynomial integrands")
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("rule", help="nodes, weights and degree of one rule")
    p.add_argument("name", type=_rule_name)
    _add_common(p)
    p.set_defaults(func=cmd_rule)

    p = sub.add_parser("density", help="order-k approximating density (one row per cell)")
    _add_common(p)
    p.add_argument("--order", type=int, default=6)
    p.set_defaults(func=cmd_density)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"binquad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"binquad: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ex.ExprSyntaxError as exc:
        print(f"binquad: syntax error: {exc}", file=sys.stderr)
        if exc.text:
            print(f"  {exc.text}\n  {' ' * exc.offset}^", file=sys.stderr)
        return EXIT_PARSE
    except (ex.ExprDomainError, EvaluationError) as exc:
        print(f"binquad: evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
