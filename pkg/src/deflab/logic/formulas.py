"""First-order formula ASTs over (Z, +, |, !=) and its ring extension.

Terms: variables, the constants 0 and 1, sums, differences, integer
scalar multiples, and (in the ring sort only) full products.  Numerals
other than 0/1 are scalar multiples of 1.

Formulas: the atoms =, | (divides), !=, the ring-sort semantic atom
"nonsquare", pluggable predicate atoms, boolean connectives, and
quantifier blocks.  After parsing, bound variables are renamed apart
from free variables and from enclosing binders.

The concrete syntax is parenthesized prefix form:

    terms     x | 0 | 1 | 17 | (+ t t) | (- t t) | (* k t) | (** t t)
    atoms     (= t t) | (div t t) | (!= t t) | (nonsquare t) | (pred name t ...)
    formulas  (and f ...) | (or f ...) | (not f) | (E (x y) f) | (A (x) f)

(** . .) and (nonsquare .) are rejected in the integer sort.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import FormulaParseError, FormulaSortError

INT_SORT = "int"
RING_SORT = "ring"

# ---------------------------------------------------------------------------
# nodes


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise ValueError("only 0 and 1 are primitive constants")


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Scale:
    k: int
    term: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


TERM_TYPES = (Var, Const, Add, Sub, Scale, Mul)


@dataclass(frozen=True)
class Eq:
    left: object
    right: object


@dataclass(frozen=True)
class Divides:
    left: object
    right: object


@dataclass(frozen=True)
class NotEq:
    left: object
    right: object


@dataclass(frozen=True)
class NotSquare:
    term: object


@dataclass(frozen=True)
class Pred:
    name: str
    args: tuple


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    body: object


@dataclass(frozen=True)
class Exists:
    vars: tuple
    body: object


@dataclass(frozen=True)
class Forall:
    vars: tuple
    body: object


ATOM_TYPES = (Eq, Divides, NotEq, NotSquare, Pred)


def conj(items) -> object:
    items = tuple(items)
    if len(items) == 1:
        return items[0]
    return And(items)


def disj(items) -> object:
    items = tuple(items)
    if len(items) == 1:
        return items[0]
    return Or(items)


def num(k: int) -> object:
    """The numeral k as a term."""
    if k in (0, 1):
        return Const(k)
    return Scale(k, Const(1))


# ---------------------------------------------------------------------------
# structure helpers


def term_vars(t) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Const):
        return set()
    if isinstance(t, Scale):
        return term_vars(t.term)
    return term_vars(t.left) | term_vars(t.right)


def free_vars(f) -> set:
    if isinstance(f, (Eq, Divides, NotEq)):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, NotSquare):
        return term_vars(f.term)
    if isinstance(f, Pred):
        out = set()
        for a in f.args:
            out |= term_vars(a)
        return out
    if isinstance(f, (And, Or)):
        out = set()
        for item in f.items:
            out |= free_vars(item)
        return out
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - set(f.vars)
    raise TypeError(f"not a formula node: {f!r}")


def all_var_names(f) -> set:
    """Every variable name appearing anywhere (free or bound)."""
    if isinstance(f, (Exists, Forall)):
        return set(f.vars) | all_var_names(f.body)
    if isinstance(f, (And, Or)):
        out = set()
        for item in f.items:
            out |= all_var_names(item)
        return out
    if isinstance(f, Not):
        return all_var_names(f.body)
    return free_vars(f)


def subst_term(t, mapping: dict):
    """Replace variables by terms per mapping."""
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Const):
        return t
    if isinstance(t, Scale):
        return Scale(t.k, subst_term(t.term, mapping))
    return type(t)(subst_term(t.left, mapping), subst_term(t.right, mapping))


def subst(f, mapping: dict):
    """Capture-avoiding substitution of terms for free variables.

    Assumes the renamed-apart invariant (binders never shadow the
    substituted names), which parsing and construction maintain.
    """
    if isinstance(f, (Eq, Divides, NotEq)):
        return type(f)(subst_term(f.left, mapping), subst_term(f.right, mapping))
    if isinstance(f, NotSquare):
        return NotSquare(subst_term(f.term, mapping))
    if isinstance(f, Pred):
        return Pred(f.name, tuple(subst_term(a, mapping) for a in f.args))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(subst(item, mapping) for item in f.items))
    if isinstance(f, Not):
        return Not(subst(f.body, mapping))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k not in f.vars}
        return type(f)(f.vars, subst(f.body, inner))
    raise TypeError(f"not a formula node: {f!r}")


def fresh_name(base: str, taken: set) -> str:
    if base not in taken:
        return base
    i = 1
    while f"{base}__{i}" in taken:
        i += 1
    return f"{base}__{i}"


def rename_apart(f, taken=None):
    """Rename bound variables so no binder shadows a free variable or an
    enclosing binder.  Deterministic: fresh names are base__1, base__2, ...
    """
    taken = set(taken) if taken is not None else set(free_vars(f))

    def walk(node, scope_taken):
        if isinstance(node, (Exists, Forall)):
            new_vars = []
            mapping = {}
            for v in node.vars:
                nv = fresh_name(v, scope_taken)
                scope_taken = scope_taken | {nv}
                new_vars.append(nv)
                if nv != v:
                    mapping[v] = Var(nv)
            body = subst(node.body, mapping) if mapping else node.body
            return type(node)(tuple(new_vars), walk(body, scope_taken))
        if isinstance(node, (And, Or)):
            return type(node)(tuple(walk(item, scope_taken) for item in node.items))
        if isinstance(node, Not):
            return Not(walk(node.body, scope_taken))
        return node

    return walk(f, set(taken) | all_var_names(f) - _bound_names(f))


def _bound_names(f) -> set:
    if isinstance(f, (Exists, Forall)):
        return set(f.vars) | _bound_names(f.body)
    if isinstance(f, (And, Or)):
        out = set()
        for item in f.items:
            out |= _bound_names(item)
        return out
    if isinstance(f, Not):
        return _bound_names(f.body)
    return set()


# ---------------------------------------------------------------------------
# sort checking


def check_sort(f, sort: str):
    """Raise FormulaSortError if f uses ring-only constructs in the
    integer sort."""
    if sort not in (INT_SORT, RING_SORT):
        raise ValueError(f"unknown sort {sort!r}")

    def t_walk(t):
        if isinstance(t, Mul) and sort == INT_SORT:
            raise FormulaSortError(
                "full products (** . .) are not in the integer language"
            )
        if isinstance(t, Scale):
            t_walk(t.term)
        elif isinstance(t, (Add, Sub, Mul)):
            t_walk(t.left)
            t_walk(t.right)

    def walk(node):
        if isinstance(node, (Eq, Divides, NotEq)):
            t_walk(node.left)
            t_walk(node.right)
        elif isinstance(node, NotSquare):
            if sort == INT_SORT:
                raise FormulaSortError(
                    "(nonsquare .) is a ring-language atom"
                )
            t_walk(node.term)
        elif isinstance(node, Pred):
            for a in node.args:
                t_walk(a)
        elif isinstance(node, (And, Or)):
            for item in node.items:
                walk(item)
        elif isinstance(node, Not):
            walk(node.body)
        elif isinstance(node, (Exists, Forall)):
            walk(node.body)
        else:
            raise TypeError(f"not a formula node: {node!r}")

    walk(f)


# ---------------------------------------------------------------------------
# parser


_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_INT = re.compile(r"^-?\d+$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_KEYWORDS = {"and", "or", "not", "E", "A", "div", "pred", "nonsquare"}


def _tokenize(text: str):
    pos = 0
    out = []
    for m in _TOKEN.finditer(text):
        if text[pos : m.start()].strip():
            raise FormulaParseError(
                f"unexpected character at position {pos}: {text[pos]!r}"
            )
        out.append((m.group(), m.start()))
        pos = m.end()
    if text[pos:].strip():
        raise FormulaParseError(
            f"unexpected character at position {pos}: {text[pos]!r}"
        )
    return out


def _read(tokens, i):
    """One s-expression starting at token index i -> (tree, next_i).
    Trees are (token, position) leaves or lists of trees."""
    if i >= len(tokens):
        raise FormulaParseError("unexpected end of input")
    tok, pos = tokens[i]
    if tok == "(":
        items = []
        i += 1
        while True:
            if i >= len(tokens):
                raise FormulaParseError(
                    f"unclosed '(' opened at position {pos}"
                )
            if tokens[i][0] == ")":
                return items, i + 1
            node, i = _read(tokens, i)
            items.append(node)
    if tok == ")":
        raise FormulaParseError(f"unmatched ')' at position {pos}")
    return (tok, pos), i + 1


def _is_leaf(tree) -> bool:
    return isinstance(tree, tuple)


def _leaf_pos(tree) -> int:
    if _is_leaf(tree):
        return tree[1]
    return _leaf_pos(tree[0]) if tree else 0


def _parse_term(tree):
    if _is_leaf(tree):
        tok, pos = tree
        if _INT.match(tok):
            return num(int(tok))
        if _NAME.match(tok) and tok not in _KEYWORDS:
            return Var(tok)
        raise FormulaParseError(f"bad term {tok!r} at position {pos}")
    if not tree or not _is_leaf(tree[0]):
        raise FormulaParseError(
            f"expected an operator at position {_leaf_pos(tree)}"
        )
    op, pos = tree[0]
    args = tree[1:]
    if op == "+" or op == "-":
        if len(args) != 2:
            raise FormulaParseError(f"({op} . .) takes two terms, position {pos}")
        cls = Add if op == "+" else Sub
        return cls(_parse_term(args[0]), _parse_term(args[1]))
    if op == "*":
        if len(args) != 2 or not _is_leaf(args[0]) or not _INT.match(args[0][0]):
            raise FormulaParseError(
                f"(* k t) needs a literal integer k, position {pos}"
            )
        return Scale(int(args[0][0]), _parse_term(args[1]))
    if op == "**":
        if len(args) != 2:
            raise FormulaParseError(f"(** . .) takes two terms, position {pos}")
        return Mul(_parse_term(args[0]), _parse_term(args[1]))
    raise FormulaParseError(f"unknown term operator {op!r} at position {pos}")


def _parse_var_list(tree):
    if _is_leaf(tree):
        raise FormulaParseError(
            f"expected a variable list at position {tree[1]}"
        )
    names = []
    for leaf in tree:
        if not _is_leaf(leaf) or not _NAME.match(leaf[0]) or leaf[0] in _KEYWORDS:
            raise FormulaParseError(
                f"bad bound variable at position {_leaf_pos(leaf)}"
            )
        names.append(leaf[0])
    if len(set(names)) != len(names):
        raise FormulaParseError(
            f"repeated variable in binder at position {_leaf_pos(tree)}"
        )
    return tuple(names)


def _parse_formula(tree):
    if _is_leaf(tree):
        raise FormulaParseError(
            f"expected a formula at position {tree[1]}, got {tree[0]!r}"
        )
    if not tree or not _is_leaf(tree[0]):
        raise FormulaParseError(
            f"expected a connective at position {_leaf_pos(tree)}"
        )
    op, pos = tree[0]
    args = tree[1:]
    if op in ("=", "div", "!="):
        if len(args) != 2:
            raise FormulaParseError(f"({op} . .) takes two terms, position {pos}")
        cls = {"=": Eq, "div": Divides, "!=": NotEq}[op]
        return cls(_parse_term(args[0]), _parse_term(args[1]))
    if op == "nonsquare":
        if len(args) != 1:
            raise FormulaParseError(f"(nonsquare .) takes one term, position {pos}")
        return NotSquare(_parse_term(args[0]))
    if op == "pred":
        if not args or not _is_leaf(args[0]) or not _NAME.match(args[0][0]):
            raise FormulaParseError(f"(pred name t ...) at position {pos}")
        return Pred(args[0][0], tuple(_parse_term(a) for a in args[1:]))
    if op in ("and", "or"):
        if not args:
            raise FormulaParseError(f"({op} ...) needs arguments, position {pos}")
        cls = And if op == "and" else Or
        return cls(tuple(_parse_formula(a) for a in args))
    if op == "not":
        if len(args) != 1:
            raise FormulaParseError(f"(not .) takes one formula, position {pos}")
        return Not(_parse_formula(args[0]))
    if op in ("E", "A"):
        if len(args) != 2:
            raise FormulaParseError(
                f"({op} (vars) body) takes two parts, position {pos}"
            )
        cls = Exists if op == "E" else Forall
        return cls(_parse_var_list(args[0]), _parse_formula(args[1]))
    raise FormulaParseError(f"unknown connective {op!r} at position {pos}")


def parse(text: str, sort: str = INT_SORT):
    """Parse a formula; validates the sort and renames bound variables
    apart from free ones."""
    tokens = _tokenize(text)
    tree, nxt = _read(tokens, 0)
    if nxt != len(tokens):
        raise FormulaParseError(
            f"trailing input at position {tokens[nxt][1]}"
        )
    f = _parse_formula(tree)
    check_sort(f, sort)
    return rename_apart(f)


def parse_term(text: str, sort: str = INT_SORT):
    tokens = _tokenize(text)
    tree, nxt = _read(tokens, 0)
    if nxt != len(tokens):
        raise FormulaParseError(f"trailing input at position {tokens[nxt][1]}")
    t = _parse_term(tree)
    if sort == INT_SORT:
        check_sort(Eq(t, Const(0)), sort)
    return t


# ---------------------------------------------------------------------------
# printer


def print_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, Add):
        return f"(+ {print_term(t.left)} {print_term(t.right)})"
    if isinstance(t, Sub):
        return f"(- {print_term(t.left)} {print_term(t.right)})"
    if isinstance(t, Scale):
        return f"(* {t.k} {print_term(t.term)})"
    if isinstance(t, Mul):
        return f"(** {print_term(t.left)} {print_term(t.right)})"
    raise TypeError(f"not a term node: {t!r}")


def print_formula(f) -> str:
    if isinstance(f, Eq):
        return f"(= {print_term(f.left)} {print_term(f.right)})"
    if isinstance(f, Divides):
        return f"(div {print_term(f.left)} {print_term(f.right)})"
    if isinstance(f, NotEq):
        return f"(!= {print_term(f.left)} {print_term(f.right)})"
    if isinstance(f, NotSquare):
        return f"(nonsquare {print_term(f.term)})"
    if isinstance(f, Pred):
        inner = " ".join([f.name] + [print_term(a) for a in f.args])
        return f"(pred {inner})"
    if isinstance(f, And):
        return "(and " + " ".join(print_formula(i) for i in f.items) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(print_formula(i) for i in f.items) + ")"
    if isinstance(f, Not):
        return f"(not {print_formula(f.body)})"
    if isinstance(f, Exists):
        return f"(E ({' '.join(f.vars)}) {print_formula(f.body)})"
    if isinstance(f, Forall):
        return f"(A ({' '.join(f.vars)}) {print_formula(f.body)})"
    raise TypeError(f"not a formula node: {f!r}")


# ---------------------------------------------------------------------------
# quantifier profile


@dataclass(frozen=True)
class QuantifierProfile:
    universal_count: int
    existential_count: int
    alternation_pattern: str

    def to_dict(self) -> dict:
        return {
            "universal_count": self.universal_count,
            "existential_count": self.existential_count,
            "alternation_pattern": self.alternation_pattern,
        }


def nnf(f, negate: bool = False):
    """Negation normal form; quantifiers flip under negation."""
    if isinstance(f, ATOM_TYPES):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return nnf(f.body, not negate)
    if isinstance(f, And):
        items = tuple(nnf(i, negate) for i in f.items)
        return Or(items) if negate else And(items)
    if isinstance(f, Or):
        items = tuple(nnf(i, negate) for i in f.items)
        return And(items) if negate else Or(items)
    if isinstance(f, Exists):
        cls = Forall if negate else Exists
        return cls(f.vars, nnf(f.body, negate))
    if isinstance(f, Forall):
        cls = Exists if negate else Forall
        return cls(f.vars, nnf(f.body, negate))
    raise TypeError(f"not a formula node: {f!r}")


def _collect_pattern(f, out: list):
    if isinstance(f, Exists):
        out.extend("∃" * len(f.vars))
        _collect_pattern(f.body, out)
    elif isinstance(f, Forall):
        out.extend("∀" * len(f.vars))
        _collect_pattern(f.body, out)
    elif isinstance(f, (And, Or)):
        for item in f.items:
            _collect_pattern(item, out)
    elif isinstance(f, Not):
        _collect_pattern(f.body, out)


def profile(f) -> QuantifierProfile:
    """Quantifier counts and prenex pattern.

    Prenexing is deterministic: negation normal form first (negation
    flips quantifiers), then quantifier blocks are collected in
    depth-first left-to-right order.  Since parsing renames bound
    variables apart, this order is always capture-free.  Blocks count
    once per variable.
    """
    pat: list = []
    _collect_pattern(nnf(rename_apart(f)), pat)
    s = "".join(pat)
    return QuantifierProfile(s.count("∀"), s.count("∃"), s)


def prenex(f):
    """Materialized prenex form: ([(kind, var), ...], matrix) with kind
    in {"E", "A"}, using the same deterministic order as profile()."""
    f = nnf(rename_apart(f))
    prefix: list = []

    def strip(node):
        if isinstance(node, Exists):
            prefix.extend(("E", v) for v in node.vars)
            return strip(node.body)
        if isinstance(node, Forall):
            prefix.extend(("A", v) for v in node.vars)
            return strip(node.body)
        if isinstance(node, (And, Or)):
            return type(node)(tuple(strip(i) for i in node.items))
        if isinstance(node, Not):
            return Not(strip(node.body))
        return node

    matrix = strip(f)
    return prefix, matrix
