"""Command-line surface: reproducible experiment drivers over the toolkit.

Every subcommand emits a single JSON document on stdout with sorted keys
(so a rerun with a warm cache is byte-identical apart from timing
fields); ``--pretty`` renders the same payload as an indented
human-readable table instead.  Exit codes: 0 success or check passed,
1 a verification ran to completion and failed, 2 inconclusive or a
budget was exhausted, 3 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from fractions import Fraction

from .arith import QuadElem, factor
from .config import load_config
from .density import (
    CyclicFieldRule,
    build_W,
    cyclic_degree_one_density,
    cyclic_density_report,
    format_ratio,
    quadratic_split_density,
    smallest_cyclic_rule,
    split_density_report,
    v_density,
)
from .divmodel import (
    RingRule,
    RingSpec,
    SubsetBudget,
    SubsetSystemConfig,
    model_divides,
    subset_check,
    subset_construct,
)
from .eds import (
    build_V,
    compute_kappa,
    eds_record,
    estimate_C,
    growth_rate,
    verify_bigger_support,
    verify_m1,
    verify_order_change,
    verify_square_denominators,
    verify_strong_divisibility,
    verify_subgroup,
)
from .errors import (
    BudgetExhaustedError,
    FormulaError,
    IncompleteFactorizationError,
    PreconditionError,
    ShapeError,
)
from .logic import (
    CLAIM,
    FALSE,
    FINITE,
    MULT_FREE_ORDER,
    TRUE,
    IntDomain,
    QuadDomain,
    RingDomain,
    eval_bounded,
    free_vars,
    mult_formula,
    mult_oracle,
    parse,
    print_formula,
    profile,
    rankonedown_check,
    reduce_quantifiers,
    subfield_check,
    validate_defining_formula,
)

SCHEMA = "definability-lab/1"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3


# ---------------------------------------------------------------------------
# output


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, QuadElem):
        return str(obj)
    if dataclasses.is_dataclass(obj) and hasattr(obj, "to_dict"):
        return obj.to_dict()
    return str(obj)


def _is_scalar(v) -> bool:
    return not isinstance(v, (dict, list, tuple))


def _render(obj, indent: int = 0) -> str:
    """Plain-text table rendering of a JSON-shaped payload."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return pad + "(empty)"
        width = max(len(str(k)) for k in obj)
        lines = []
        for k in sorted(obj, key=str):
            v = obj[k]
            if _is_scalar(v):
                lines.append(f"{pad}{str(k):<{width}}  {v}")
            else:
                lines.append(f"{pad}{k}:")
                lines.append(_render(v, indent + 1))
        return "\n".join(lines)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return pad + "(none)"
        if all(isinstance(r, dict) for r in obj):
            cols = sorted({k for r in obj for k in r})
            table = [[str(r.get(c, "")) for c in cols] for r in obj]
            widths = [
                max(len(c), max(len(row[i]) for row in table))
                for i, c in enumerate(cols)
            ]
            lines = [pad + "  ".join(c.ljust(w) for c, w in zip(cols, widths))]
            for row in table:
                lines.append(pad + "  ".join(v.ljust(w) for v, w in zip(row, widths)))
            return "\n".join(lines)
        if all(_is_scalar(v) for v in obj):
            return pad + ", ".join(str(v) for v in obj)
        return "\n".join(_render(v, indent) for v in obj)
    return pad + str(obj)


def _emit(payload, pretty: bool) -> None:
    if isinstance(payload, str):  # raw CSV
        sys.stdout.write(payload)
        return
    payload = {"schema": SCHEMA, **payload}
    if pretty:
        print(_render(json.loads(json.dumps(payload, default=_json_default))))
    else:
        print(json.dumps(payload, sort_keys=True, default=_json_default))


# ---------------------------------------------------------------------------
# shared plumbing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _setup(args):
    cfg = load_config(args.config)
    if args.cache_path:
        cfg = dataclasses.replace(cfg, cache_path=args.cache_path)
    return cfg, cfg.context(), cfg.budget(), cfg.cache()


def _w_spec(cfg, ctx, budget, cache, v_bound: int = 11):
    """The standard inverted set: bad primes in, denominator-support
    primes out, inert primes of the auxiliary quadratic field by rule."""
    vt = build_V(ctx, bound=v_bound, budget=budget, cache=cache)
    spec = RingSpec(
        include=frozenset(ctx.bad_primes),
        exclude=vt.primes(),
        rule=RingRule(kind="quadratic-inert", D=cfg.d_l),
        bad_included=True,
    )
    return vt, spec


def _parse_grid(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise ValueError(f"bad grid {text!r}; expected comma-separated integers")


def _parse_element(text: str, d: int):
    """A rational 'p/q', or 'a,b' meaning a + b*sqrt(d)."""
    s = text.strip()
    if "," in s:
        a_str, b_str = s.split(",", 1)
        return QuadElem(d, Fraction(a_str), Fraction(b_str))
    return Fraction(s)


def _report_code(passed: bool, complete: bool) -> int:
    if not passed:
        return EXIT_FAIL
    return EXIT_OK if complete else EXIT_INCONCLUSIVE


def _big(n) -> dict | str:
    """Exact decimal for small integers, digit summary for huge ones."""
    s = str(n)
    if len(s) <= 64:
        return s
    return {"digits": len(s), "leading": s[:12]}


# ---------------------------------------------------------------------------
# eds


def _cmd_eds_compute(args):
    _, ctx, budget, cache = _setup(args)
    rec = eds_record(ctx, args.n, budget, cache)
    return rec.to_dict(), EXIT_OK if rec.complete else EXIT_INCONCLUSIVE


def _cmd_eds_verify(args):
    _, ctx, budget, cache = _setup(args)
    lemma = args.lemma
    if lemma == "orderchange":
        rep = verify_order_change(ctx, args.n, args.p, budget, cache)
    elif lemma == "subgroup":
        rep = verify_subgroup(ctx, args.q, args.e, args.n_max)
    elif lemma == "strongdiv":
        rep = verify_strong_divisibility(ctx, args.bound)
    elif lemma == "square":
        rep = verify_square_denominators(ctx, args.n_max)
    elif lemma == "biggerS":
        rep = verify_bigger_support(ctx, bound=args.bound)
    elif lemma == "m1":
        rep = verify_m1(ctx, m1=args.m1, l_max=args.l_max, k_max=args.k_max,
                        budget=budget, cache=cache)
    else:  # growth
        gr = growth_rate(ctx, args.lo, args.hi)
        ok = gr.spread < 0.10 and abs(gr.last_diff) < abs(gr.first_diff)
        payload = {"lemma": lemma, "pass": ok, "complete": True,
                   "details": gr.to_dict()}
        return payload, _report_code(ok, True)
    payload = {"lemma": lemma, "pass": rep.passed, "complete": rep.complete,
               "details": rep.details}
    return payload, _report_code(rep.passed, rep.complete)


# ---------------------------------------------------------------------------
# model


def _cmd_model_divides(args):
    cfg, ctx, budget, cache = _setup(args)
    vt, spec = _w_spec(cfg, ctx, budget, cache)
    m0 = args.m0
    if m0 is None:
        m0 = estimate_C(ctx, bound=12).m0
    verdict = model_divides(args.j, args.k, ctx, spec, m0=m0,
                            budget=budget, cache=cache, v_table=vt)
    payload = verdict.to_dict()
    payload["m0"] = m0
    return payload, EXIT_OK if verdict.divides else EXIT_FAIL


def _subset_system(cfg, ctx, spec, c: Fraction) -> SubsetSystemConfig:
    """Assemble the equation-system parameters from the context: the
    auxiliary field, the smallest valid shift spacing d, and the smallest
    Z free of inverted primes."""
    d_prime = cfg.d_l
    d = math.isqrt(4 * d_prime) + 1
    while d * d <= 4 * d_prime:
        d += 1
    kappa = compute_kappa(ctx)
    rn = 2
    z = math.floor(rn * kappa) + 1
    while any(spec.contains_prime(p) for p, _ in factor(z).factors):
        z += 1
    return SubsetSystemConfig(
        D_prime=d_prime, d=d, ells=(0, 1, 2), Z=z, c=c, kappa=kappa,
    )


def _cmd_model_subset(args):
    cfg, ctx, budget, cache = _setup(args)
    vt, spec = _w_spec(cfg, ctx, budget, cache)
    sys_cfg = _subset_system(cfg, ctx, spec, Fraction(args.c))
    if args.test_mode:
        sys_cfg = sys_cfg.test_variant()
    wit = subset_construct(
        args.x, sys_cfg, ctx, spec,
        budget=SubsetBudget(max_index=args.max_index, factor=budget),
        cache=cache,
    )
    audit = subset_check(wit, sys_cfg, ctx, spec, budget, cache)
    witness = {k: _big(v) for k, v in wit.to_dict().items()}
    payload = {
        "x": args.x,
        "mode": sys_cfg.mode,
        "system": sys_cfg.to_dict(),
        "witness": witness,
        "audit": audit.to_dict(),
    }
    return payload, EXIT_OK if audit.all_equations_pass else EXIT_FAIL


# ---------------------------------------------------------------------------
# formula


def _cmd_formula_parse(args):
    f = parse(args.text, sort=args.sort)
    payload = {
        "formula": print_formula(f),
        "sort": args.sort,
        "free_variables": sorted(free_vars(f)),
        "profile": profile(f).to_dict(),
    }
    return payload, EXIT_OK


def _cmd_formula_profile(args):
    f = parse(args.text, sort=args.sort)
    return {"profile": profile(f).to_dict()}, EXIT_OK


def _cmd_formula_eval(args):
    cfg, _, _, _ = _setup(args)
    f = parse(args.text, sort="ring" if args.domain != "int" else "int")
    env_raw = json.loads(args.env) if args.env else {}
    d = args.d if args.d is not None else cfg.d_m
    if args.domain == "int":
        dom = IntDomain(args.bound)
        env = {k: int(v) for k, v in env_raw.items()}
    elif args.domain == "ring":
        dom = RingDomain(None, args.bound)
        env = {k: Fraction(str(v)) for k, v in env_raw.items()}
    else:
        dom = QuadDomain(d, args.bound, None)
        env = {k: _parse_element(str(v), d) for k, v in env_raw.items()}
        env.setdefault("alpha", QuadElem(d, Fraction(0), Fraction(1)))
    mode = CLAIM if args.mode == "claim" else FINITE
    value = eval_bounded(f, env, dom, mode=mode)
    payload = {"value": value, "mode": args.mode, "bound": args.bound,
               "domain": args.domain}
    if value == TRUE:
        return payload, EXIT_OK
    if value == FALSE:
        return payload, EXIT_FAIL
    return payload, EXIT_INCONCLUSIVE


def _cmd_formula_validate_mult(args):
    f = mult_formula(drop_pin=args.drop_pin)
    rep = validate_defining_formula(f, MULT_FREE_ORDER, mult_oracle,
                                    bound=args.window)
    payload = {"window": args.window, "disagreements": len(rep.mismatches)}
    payload.update(rep.to_dict())
    return payload, EXIT_OK if rep.agree else EXIT_FAIL


def _cmd_formula_reduce(args):
    cfg, _, _, _ = _setup(args)
    f = parse(args.text, sort="ring")
    gamma = parse(args.gamma, sort="ring") if args.gamma else None
    d = args.alpha_d if args.alpha_d is not None else cfg.d_m
    red = reduce_quantifiers(f, gamma=gamma, alpha_data=(d, args.alpha_a))
    return red.to_dict(), EXIT_OK


# ---------------------------------------------------------------------------
# vertical


_VERTICAL_CODES = {"accepted": EXIT_OK, "rejected": EXIT_FAIL,
                   "inconclusive": EXIT_INCONCLUSIVE}


def _cmd_vertical_rankonedown(args):
    cfg, ctx, _, _ = _setup(args)
    d = args.d if args.d is not None else cfg.d_m
    u = _parse_element(args.u, d)
    rep = rankonedown_check(
        u, d, ctx,
        depth=args.depth if args.depth is not None else cfg.depth,
        q=args.q,
        index_cap=args.index_cap if args.index_cap is not None else cfg.index_cap,
    )
    return rep.to_dict(), _VERTICAL_CODES[rep.status]


def _cmd_vertical_subfield(args):
    cfg, ctx, _, _ = _setup(args)
    d = args.d if args.d is not None else cfg.d_m
    u = _parse_element(args.u, d)
    rep = subfield_check(
        u, d, ctx,
        r=args.r,
        depth=args.depth if args.depth is not None else cfg.depth,
        q=args.q,
        index_cap=args.index_cap if args.index_cap is not None else cfg.index_cap,
    )
    return rep.to_dict(), _VERTICAL_CODES[rep.status]


# ---------------------------------------------------------------------------
# density


def _density_out(report, args, cfg):
    if args.csv or cfg.report_format == "csv":
        return report.to_csv(), EXIT_OK
    return report.to_dict(), EXIT_OK


def _cmd_density_v(args):
    cfg, ctx, budget, cache = _setup(args)
    vt = build_V(ctx, bound=args.v_bound, budget=budget, cache=cache)
    rep = v_density(vt, _parse_grid(args.grid))
    return _density_out(rep, args, cfg)


def _cmd_density_split(args):
    cfg, _, _, _ = _setup(args)
    d_prime = args.d_prime if args.d_prime is not None else cfg.d_l
    if args.grid:
        return _density_out(split_density_report(d_prime, _parse_grid(args.grid)),
                            args, cfg)
    ratio = quadratic_split_density(d_prime, args.x)
    payload = {"d_prime": d_prime, "x": args.x,
               "ratio": str(ratio), "decimal": format_ratio(ratio)}
    return payload, EXIT_OK


def _cmd_density_cyclic(args):
    cfg, _, _, _ = _setup(args)
    rule = (CyclicFieldRule(args.p, args.q) if args.q is not None
            else smallest_cyclic_rule(args.p))
    if args.grid:
        return _density_out(cyclic_density_report(rule, _parse_grid(args.grid)),
                            args, cfg)
    ratio = cyclic_degree_one_density(rule, args.x)
    payload = {"p": rule.p, "q": rule.q, "x": args.x,
               "ratio": str(ratio), "decimal": format_ratio(ratio)}
    return payload, EXIT_OK


def _cmd_density_build_ring(args):
    cfg, ctx, budget, cache = _setup(args)
    eps = Fraction(args.epsilon) if args.epsilon else cfg.epsilon
    construction = build_W(eps, ctx, d_prime=cfg.d_l, x=args.x,
                           budget=budget, cache=cache)
    return construction.to_dict(), EXIT_OK if construction.ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# cache


def _cmd_cache_stats(args):
    _, _, _, cache = _setup(args)
    return cache.stats(), EXIT_OK


def _cmd_cache_gc(args):
    _, _, _, cache = _setup(args)
    return cache.gc(), EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    root = _Parser(prog="deflab",
                   description="definability toolkit experiment drivers")
    root.add_argument("--config", default=None, help="path to a config JSON")
    root.add_argument("--cache-path", default=None,
                      help="factorization cache file (overrides config)")
    root.add_argument("--pretty", action="store_true",
                      help="human-readable table instead of JSON")
    groups = root.add_subparsers(dest="group", metavar="GROUP")

    # eds
    eds = groups.add_parser("eds", help="denominator sequence").add_subparsers(
        dest="cmd", metavar="CMD")
    p = eds.add_parser("compute", help="denominator record at one index")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(handler=_cmd_eds_compute)
    p = eds.add_parser("verify", help="check one sequence law")
    p.add_argument("--lemma", required=True,
                   choices=["orderchange", "subgroup", "strongdiv", "square",
                            "growth", "biggerS", "m1"])
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--p", type=int, default=5)
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--e", type=int, default=1)
    p.add_argument("--n-max", type=int, default=25)
    p.add_argument("--bound", type=int, default=20)
    p.add_argument("--lo", type=int, default=15)
    p.add_argument("--hi", type=int, default=25)
    p.add_argument("--m1", type=int, default=1)
    p.add_argument("--l-max", type=int, default=4)
    p.add_argument("--k-max", type=int, default=4)
    p.set_defaults(handler=_cmd_eds_verify)

    # model
    model = groups.add_parser("model", help="divisibility model").add_subparsers(
        dest="cmd", metavar="CMD")
    p = model.add_parser("divides", help="does j divide k, through the model")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m0", type=int, default=None)
    p.set_defaults(handler=_cmd_model_divides)
    p = model.add_parser("subset", help="integer-subset equation system")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--test-mode", action="store_true",
                   help="reduced exponents (the honest ones exhaust any budget)")
    p.add_argument("--c", default="4/5", help="bound constant c")
    p.add_argument("--max-index", type=int, default=2000)
    p.set_defaults(handler=_cmd_model_subset)

    # formula
    formula = groups.add_parser("formula", help="first-order formulas").add_subparsers(
        dest="cmd", metavar="CMD")
    p = formula.add_parser("parse", help="parse and echo a formula")
    p.add_argument("--text", required=True)
    p.add_argument("--sort", choices=["int", "ring"], default="int")
    p.set_defaults(handler=_cmd_formula_parse)
    p = formula.add_parser("profile", help="quantifier counts")
    p.add_argument("--text", required=True)
    p.add_argument("--sort", choices=["int", "ring"], default="int")
    p.set_defaults(handler=_cmd_formula_profile)
    p = formula.add_parser("eval", help="bounded evaluation")
    p.add_argument("--text", required=True)
    p.add_argument("--env", default=None, help='JSON object, e.g. {"x": 3}')
    p.add_argument("--bound", type=int, default=25)
    p.add_argument("--mode", choices=["claim", "finite"], default="claim")
    p.add_argument("--domain", choices=["int", "ring", "quad"], default="int")
    p.add_argument("--d", type=int, default=None,
                   help="quadratic parameter for the quad domain")
    p.set_defaults(handler=_cmd_formula_eval)
    p = formula.add_parser("validate-mult",
                           help="exhaustive check of the product formula")
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--drop-pin", type=int, default=None, choices=[0, 1, 2],
                   help="drop one pinning clause (negative control)")
    p.set_defaults(handler=_cmd_formula_validate_mult)
    p = formula.add_parser("reduce", help="pack universals into one")
    p.add_argument("--text", required=True)
    p.add_argument("--gamma", default=None,
                   help="ring-membership template with free variable V")
    p.add_argument("--alpha-d", type=int, default=None)
    p.add_argument("--alpha-a", type=int, default=20)
    p.set_defaults(handler=_cmd_formula_reduce)

    # vertical
    vertical = groups.add_parser("vertical", help="subfield membership checks")\
        .add_subparsers(dest="cmd", metavar="CMD")
    for name, handler in (("rankonedown", _cmd_vertical_rankonedown),
                          ("subfield", _cmd_vertical_subfield)):
        p = vertical.add_parser(name)
        p.add_argument("--u", required=True,
                       help="rational 'p/q', or 'a,b' meaning a + b*sqrt(D)")
        p.add_argument("--depth", type=int, default=None)
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--q", type=int, default=None)
        p.add_argument("--index-cap", type=int, default=None)
        if name == "subfield":
            p.add_argument("--r", type=int, default=2)
        p.set_defaults(handler=handler)

    # density
    density = groups.add_parser("density", help="empirical prime densities")\
        .add_subparsers(dest="cmd", metavar="CMD")
    p = density.add_parser("v", help="density of the primitive-divisor set")
    p.add_argument("--grid", default="100,1000,10000")
    p.add_argument("--v-bound", type=int, default=11)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(handler=_cmd_density_v)
    p = density.add_parser("split", help="split-or-ramified density")
    p.add_argument("--d-prime", type=int, default=None)
    p.add_argument("--x", type=int, default=10**6)
    p.add_argument("--grid", default=None)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(handler=_cmd_density_split)
    p = density.add_parser("cyclic", help="degree-one density, cyclic field")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--x", type=int, default=10**6)
    p.add_argument("--grid", default=None)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(handler=_cmd_density_cyclic)
    p = density.add_parser("build-ring", help="inverted set of target density")
    p.add_argument("--epsilon", default=None)
    p.add_argument("--x", type=int, default=100_000)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(handler=_cmd_density_build_ring)

    # cache
    cache = groups.add_parser("cache", help="factorization cache").add_subparsers(
        dest="cmd", metavar="CMD")
    p = cache.add_parser("stats")
    p.set_defaults(handler=_cmd_cache_stats)
    p = cache.add_parser("gc")
    p.set_defaults(handler=_cmd_cache_gc)

    return root


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "handler"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        payload, code = args.handler(args)
    except (BudgetExhaustedError, IncompleteFactorizationError) as exc:
        details = getattr(exc, "details", None) or {}
        _emit({"outcome": "budget-exhausted", "error": str(exc),
               "details": details}, args.pretty)
        return EXIT_INCONCLUSIVE
    except (PreconditionError, FormulaError, ShapeError, ValueError, OSError,
            json.JSONDecodeError) as exc:
        print(f"deflab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(payload, args.pretty)
    return code


if __name__ == "__main__":
    sys.exit(main())
