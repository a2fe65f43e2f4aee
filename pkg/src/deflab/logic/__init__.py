"""Formula tooling: parsing and printing, quantifier profiles, bounded
three-valued evaluation with exact decision procedures, the
multiplication-defining formula, quantifier-packing rewrites, and
field-membership challenge checkers."""

from .evaluate import (
    CLAIM,
    FALSE,
    FINITE,
    TRUE,
    UNKNOWN,
    IntDomain,
    QuadDomain,
    RingDomain,
    compile_exact_plan,
    default_procedures,
    eval_bounded,
    is_square_quad,
    sqrt_frac,
    term_value,
)
from .formulas import (
    Add,
    And,
    Const,
    Divides,
    Eq,
    Exists,
    Forall,
    Mul,
    Not,
    NotEq,
    NotSquare,
    Or,
    Pred,
    QuantifierProfile,
    Scale,
    Sub,
    Var,
    check_sort,
    free_vars,
    nnf,
    num,
    parse,
    parse_term,
    prenex,
    print_formula,
    print_term,
    profile,
)
from .mult import (
    MULT_FREE_ORDER,
    ValidationReport,
    eval_mult,
    mult_formula,
    mult_oracle,
    validate_defining_formula,
)
from .reduce import (
    ReducedFormula,
    WeierstrassPair,
    bounded_agreement,
    reduce_quantifiers,
    residue_reps,
    weierstrass_quantifier_rewrite,
)
from .vertical import (
    VerticalReport,
    choose_challenge_prime,
    four_squares,
    rankonedown_check,
    subfield_check,
)

__all__ = [
    "CLAIM",
    "FALSE",
    "FINITE",
    "TRUE",
    "UNKNOWN",
    "IntDomain",
    "QuadDomain",
    "RingDomain",
    "compile_exact_plan",
    "default_procedures",
    "eval_bounded",
    "is_square_quad",
    "sqrt_frac",
    "term_value",
    "Add",
    "And",
    "Const",
    "Divides",
    "Eq",
    "Exists",
    "Forall",
    "Mul",
    "Not",
    "NotEq",
    "NotSquare",
    "Or",
    "Pred",
    "QuantifierProfile",
    "Scale",
    "Sub",
    "Var",
    "check_sort",
    "free_vars",
    "nnf",
    "num",
    "parse",
    "parse_term",
    "prenex",
    "print_formula",
    "print_term",
    "profile",
    "MULT_FREE_ORDER",
    "ValidationReport",
    "eval_mult",
    "mult_formula",
    "mult_oracle",
    "validate_defining_formula",
    "ReducedFormula",
    "WeierstrassPair",
    "bounded_agreement",
    "reduce_quantifiers",
    "residue_reps",
    "weierstrass_quantifier_rewrite",
    "VerticalReport",
    "choose_challenge_prime",
    "four_squares",
    "rankonedown_check",
    "subfield_check",
]
