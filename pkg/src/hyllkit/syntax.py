"""Formulas of first-order intuitionistic linear logic with hybrid worlds.

Connectives: tensor ``*``, unit ``1``, linear implication ``-o``, additive
conjunction ``&`` with unit ``top``, additive disjunction ``+`` with unit
``0``, exponential ``!``, first-order quantifiers over terms (``all x.``,
``ex x.``) and over worlds (``allw u.``, ``exw u.``), the satisfaction
operator ``A @@ w`` and the binder ``dn u. A`` that names the current world.

Binders are stored with names; :func:`canonicalize` renames every bound
variable to a positional name so that alpha-equivalent formulas become
structurally equal, and :func:`alpha_eq` compares canonical forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from .worlds import (
    World,
    apply_bindings as apply_world_bindings,
    compose,
    format_world,
    is_metavar,
    nat,
    parse_world,
    sat_sub,
    subst_world,
    var as wvar,
    _WorldParser,
)


class FormulaSyntaxError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Term:
    """A first-order term: a constant, a bound variable, or a metavariable.

    `kind` is "const", "var" (bound by an enclosing quantifier) or "meta"
    (a prover unknown; metavariable names carry their ``?`` sigil).
    """

    kind: str
    name: str

    def __str__(self) -> str:
        return self.name


def const(name: str) -> Term:
    return Term("const", name)


def tvar(name: str) -> Term:
    return Term("var", name)


def tmeta(name: str) -> Term:
    return Term("meta", name)


# ---------------------------------------------------------------------------
# Formulas


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Tensor(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class One(Formula):
    pass


@dataclass(frozen=True)
class Limp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class With(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Oplus(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Zero(Formula):
    pass


@dataclass(frozen=True)
class Bang(Formula):
    body: Formula


@dataclass(frozen=True)
class ForallT(Formula):
    name: str
    body: Formula


@dataclass(frozen=True)
class ExistsT(Formula):
    name: str
    body: Formula


@dataclass(frozen=True)
class ForallW(Formula):
    name: str
    body: Formula


@dataclass(frozen=True)
class ExistsW(Formula):
    name: str
    body: Formula


@dataclass(frozen=True)
class At(Formula):
    body: Formula
    world: World


@dataclass(frozen=True)
class Down(Formula):
    name: str
    body: Formula


TERM_BINDERS = (ForallT, ExistsT)
WORLD_BINDERS = (ForallW, ExistsW, Down)
BINDERS = TERM_BINDERS + WORLD_BINDERS
BINARY = {Tensor: "*", With: "&", Oplus: "+", Limp: "-o"}


# ---------------------------------------------------------------------------
# Derived connectives


def box(body: Formula, here: str = "u", other: str = "w") -> Formula:
    """Necessity: true at every world reachable from here."""
    return Down(here, ForallW(other, At(body, compose(wvar(here), wvar(other)))))


def dia(body: Formula, here: str = "u", other: str = "w") -> Formula:
    """Possibility: true at some world reachable from here."""
    return Down(here, ExistsW(other, At(body, compose(wvar(here), wvar(other)))))


def delay(amount: World, body: Formula, here: str = "u") -> Formula:
    """True exactly `amount` later than the current world."""
    while here in amount.free_vars() | free_world_vars(body):
        here = here + "_"
    return Down(here, At(body, compose(wvar(here), amount)))


def dagger(body: Formula, here: str = "u") -> Formula:
    """True at every world outright (world-generic fact)."""
    while here in free_world_vars(body):
        here = here + "_"
    return ForallW(here, At(body, wvar(here)))


# ---------------------------------------------------------------------------
# Traversal helpers


def free_term_vars(f: Formula) -> set[str]:
    out: set[str] = set()

    def go(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, Atom):
            for t in g.args:
                if t.kind == "var" and t.name not in bound:
                    out.add(t.name)
        elif isinstance(g, (Tensor, With, Oplus, Limp)):
            go(g.left, bound)
            go(g.right, bound)
        elif isinstance(g, Bang):
            go(g.body, bound)
        elif isinstance(g, TERM_BINDERS):
            go(g.body, bound | {g.name})
        elif isinstance(g, WORLD_BINDERS):
            go(g.body, bound)
        elif isinstance(g, At):
            go(g.body, bound)

    go(f, frozenset())
    return out


def free_world_vars(f: Formula) -> set[str]:
    out: set[str] = set()

    def go(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, (Tensor, With, Oplus, Limp)):
            go(g.left, bound)
            go(g.right, bound)
        elif isinstance(g, Bang):
            go(g.body, bound)
        elif isinstance(g, TERM_BINDERS):
            go(g.body, bound)
        elif isinstance(g, WORLD_BINDERS):
            go(g.body, bound | {g.name})
        elif isinstance(g, At):
            out.update(g.world.free_vars() - bound)
            go(g.body, bound)

    go(f, frozenset())
    return out


def free_names(f: Formula) -> set[str]:
    """All free identifiers (term vars, world vars, constants, metavars)."""
    out = free_term_vars(f) | free_world_vars(f)

    def go(g: Formula) -> None:
        if isinstance(g, Atom):
            for t in g.args:
                if t.kind != "var":
                    out.add(t.name)
        elif isinstance(g, (Tensor, With, Oplus, Limp)):
            go(g.left)
            go(g.right)
        elif isinstance(g, (Bang, At)) or isinstance(g, BINDERS):
            go(g.body)

    go(f)
    return out


def _fresh(base: str, avoid: set[str]) -> str:
    if base not in avoid:
        return base
    i = 1
    while f"{base}_{i}" in avoid:
        i += 1
    return f"{base}_{i}"


def _rebuild_binder(g: Formula, name: str, body: Formula) -> Formula:
    return type(g)(name, body)


# ---------------------------------------------------------------------------
# Substitution (capture avoiding)


def subst_term_var(f: Formula, name: str, replacement: Term) -> Formula:
    def go(g: Formula) -> Formula:
        if isinstance(g, Atom):
            args = tuple(
                replacement if (t.kind == "var" and t.name == name) else t
                for t in g.args
            )
            return Atom(g.pred, args)
        if isinstance(g, (Tensor, With, Oplus, Limp)):
            return type(g)(go(g.left), go(g.right))
        if isinstance(g, Bang):
            return Bang(go(g.body))
        if isinstance(g, TERM_BINDERS):
            if g.name == name:
                return g
            if replacement.kind == "var" and replacement.name == g.name:
                avoid = free_term_vars(g.body) | {name, replacement.name}
                fresh = _fresh(g.name, avoid)
                body = subst_term_var(g.body, g.name, tvar(fresh))
                return _rebuild_binder(g, fresh, go(body))
            return _rebuild_binder(g, g.name, go(g.body))
        if isinstance(g, WORLD_BINDERS):
            return _rebuild_binder(g, g.name, go(g.body))
        if isinstance(g, At):
            return At(go(g.body), g.world)
        return g

    return go(f)


def subst_world_var(f: Formula, name: str, replacement: World) -> Formula:
    def go(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return g
        if isinstance(g, (Tensor, With, Oplus, Limp)):
            return type(g)(go(g.left), go(g.right))
        if isinstance(g, Bang):
            return Bang(go(g.body))
        if isinstance(g, TERM_BINDERS):
            return _rebuild_binder(g, g.name, go(g.body))
        if isinstance(g, WORLD_BINDERS):
            if g.name == name:
                return g
            if g.name in replacement.free_vars():
                avoid = free_world_vars(g.body) | replacement.free_vars() | {name}
                fresh = _fresh(g.name, avoid)
                body = subst_world_var(g.body, g.name, wvar(fresh))
                return _rebuild_binder(g, fresh, go(body))
            return _rebuild_binder(g, g.name, go(g.body))
        if isinstance(g, At):
            return At(go(g.body), subst_world(g.world, name, replacement))
        return g

    return go(f)


def apply_bindings_formula(
    f: Formula,
    world_bindings: Mapping[str, World],
    term_bindings: Mapping[str, Term] | None = None,
) -> Formula:
    out = f
    for name, value in world_bindings.items():
        out = subst_world_var(out, name, value)
    for name, value in (term_bindings or {}).items():
        out = subst_term_var(out, name, value)
    return out


# ---------------------------------------------------------------------------
# Canonicalization and alpha equivalence


def canonicalize(f: Formula) -> Formula:
    """Rename every bound variable to a positional name ``$0``, ``$1``, ..."""

    def go(g: Formula, depth: int, tenv: dict, wenv: dict) -> Formula:
        if isinstance(g, Atom):
            args = tuple(
                tvar(tenv[t.name]) if (t.kind == "var" and t.name in tenv) else t
                for t in g.args
            )
            return Atom(g.pred, args)
        if isinstance(g, (Tensor, With, Oplus, Limp)):
            return type(g)(go(g.left, depth, tenv, wenv),
                           go(g.right, depth, tenv, wenv))
        if isinstance(g, Bang):
            return Bang(go(g.body, depth, tenv, wenv))
        if isinstance(g, TERM_BINDERS):
            fresh = f"${depth}"
            tenv2 = {**tenv, g.name: fresh}
            return _rebuild_binder(g, fresh, go(g.body, depth + 1, tenv2, wenv))
        if isinstance(g, WORLD_BINDERS):
            fresh = f"${depth}"
            wenv2 = {**wenv, g.name: fresh}
            return _rebuild_binder(g, fresh, go(g.body, depth + 1, tenv, wenv2))
        if isinstance(g, At):
            w = g.world
            for old, new in wenv.items():
                if old in w.free_vars():
                    w = subst_world(w, old, wvar(new))
            return At(go(g.body, depth, tenv, wenv), w)
        return g

    return go(f, 0, {}, {})


def alpha_eq(a: Formula, b: Formula) -> bool:
    return canonicalize(a) == canonicalize(b)


def formula_size(f: Formula) -> int:
    if isinstance(f, (Tensor, With, Oplus, Limp)):
        return 1 + formula_size(f.left) + formula_size(f.right)
    if isinstance(f, (Bang, At)) or isinstance(f, BINDERS):
        return 1 + formula_size(f.body)
    return 1


# ---------------------------------------------------------------------------
# Parsing


_KEYWORDS = {"all", "ex", "allw", "exw", "dn", "top", "i"}


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> FormulaSyntaxError:
        return FormulaSyntaxError(f"{msg} at offset {self.pos} in {self.text!r}")

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self, k: int = 1) -> str:
        self.skip_ws()
        return self.text[self.pos:self.pos + k]

    def eat(self, tok: str) -> bool:
        if self.peek(len(tok)) == tok:
            self.pos += len(tok)
            return True
        return False

    def expect(self, tok: str) -> None:
        if not self.eat(tok):
            raise self.error(f"expected {tok!r}")

    def ident(self) -> Optional[str]:
        self.skip_ws()
        start = self.pos
        if start < len(self.text) and (self.text[start].isalpha() or self.text[start] == "_"):
            end = start
            while end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
                end += 1
            self.pos = end
            return self.text[start:end]
        return None


class FormulaParser:
    """Recursive-descent parser for the surface formula grammar.

    Precedence, loosest first: binders, ``-o`` (right assoc), ``+``, ``&``,
    ``*``, ``@@``, prefix ``!``, atoms.
    """

    def __init__(self, text: str, signature: Mapping[str, int] | None = None):
        self.tz = _Tokenizer(text)
        self.signature = signature

    def parse(self) -> Formula:
        f = self.formula(frozenset(), frozenset())
        self.tz.skip_ws()
        if self.tz.pos != len(self.tz.text):
            raise self.tz.error("unexpected trailing input")
        return f

    def formula(self, tbound: frozenset, wbound: frozenset) -> Formula:
        tz = self.tz
        save = tz.pos
        name = tz.ident()
        if name in ("all", "ex", "allw", "exw", "dn"):
            bound = tz.ident()
            if bound is None:
                raise tz.error("expected bound variable name")
            tz.expect(".")
            if name in ("all", "ex"):
                body = self.formula(tbound | {bound}, wbound)
                return (ForallT if name == "all" else ExistsT)(bound, body)
            body = self.formula(tbound, wbound | {bound})
            cls = {"allw": ForallW, "exw": ExistsW, "dn": Down}[name]
            return cls(bound, body)
        tz.pos = save
        return self.limp(tbound, wbound)

    def limp(self, tbound: frozenset, wbound: frozenset) -> Formula:
        left = self.oplus(tbound, wbound)
        if self.tz.eat("-o"):
            return Limp(left, self.formula(tbound, wbound))
        return left

    def oplus(self, tbound: frozenset, wbound: frozenset) -> Formula:
        f = self.with_(tbound, wbound)
        while self.tz.eat("+"):
            f = Oplus(f, self.with_(tbound, wbound))
        return f

    def with_(self, tbound: frozenset, wbound: frozenset) -> Formula:
        f = self.tensor(tbound, wbound)
        while self.tz.peek() == "&":
            self.tz.eat("&")
            f = With(f, self.tensor(tbound, wbound))
        return f

    def tensor(self, tbound: frozenset, wbound: frozenset) -> Formula:
        f = self.at(tbound, wbound)
        while self.tz.peek() == "*":
            self.tz.eat("*")
            f = Tensor(f, self.at(tbound, wbound))
        return f

    def at(self, tbound: frozenset, wbound: frozenset) -> Formula:
        f = self.unary(tbound, wbound)
        while self.tz.eat("@@"):
            f = At(f, self.world())
        return f

    def world(self) -> World:
        self.tz.skip_ws()
        wp = _WorldParser(self.tz.text)
        wp.pos = self.tz.pos
        w = wp.parse_term()
        while wp.peek() == "-" and wp.text[wp.pos:wp.pos + 2] != "-o":
            wp.pos += 1
            w = sat_sub(w, wp.parse_term())
        self.tz.pos = wp.pos
        return w

    def unary(self, tbound: frozenset, wbound: frozenset) -> Formula:
        tz = self.tz
        if tz.eat("!"):
            return Bang(self.unary(tbound, wbound))
        if tz.eat("("):
            f = self.formula(tbound, wbound)
            tz.expect(")")
            return f
        if tz.eat("1"):
            return One()
        if tz.eat("0"):
            return Zero()
        save = tz.pos
        name = tz.ident()
        if name is None:
            raise tz.error("expected a formula")
        if name == "top":
            return Top()
        if name in _KEYWORDS:
            tz.pos = save
            raise tz.error(f"unexpected keyword {name!r}")
        args: tuple[Term, ...] = ()
        if tz.peek() == "(":
            tz.eat("(")
            items = []
            while True:
                items.append(self.term(tbound))
                if not tz.eat(","):
                    break
            tz.expect(")")
            args = tuple(items)
        if self.signature is not None:
            if name not in self.signature:
                raise tz.error(f"undeclared predicate {name!r}")
            if self.signature[name] != len(args):
                raise tz.error(
                    f"predicate {name!r} expects {self.signature[name]} "
                    f"argument(s), got {len(args)}")
        return Atom(name, args)

    def term(self, tbound: frozenset) -> Term:
        tz = self.tz
        if tz.eat("?"):
            name = tz.ident()
            if name is None:
                raise tz.error("expected metavariable name after '?'")
            return tmeta("?" + name)
        name = tz.ident()
        if name is None:
            raise tz.error("expected a term")
        return tvar(name) if name in tbound else const(name)


def parse_formula(text: str, signature: Mapping[str, int] | None = None) -> Formula:
    return FormulaParser(text, signature).parse()


# ---------------------------------------------------------------------------
# Printing (canonical, minimal parentheses; reparsing yields an
# alpha-equivalent formula)


_PREC = {"binder": 0, "limp": 1, "oplus": 2, "with": 3, "tensor": 4, "at": 5, "unary": 6}


def format_formula(f: Formula) -> str:
    def go(g: Formula, prec: int, wbound: frozenset) -> str:
        if isinstance(g, Atom):
            if g.args:
                return f"{g.pred}({', '.join(str(t) for t in g.args)})"
            return g.pred
        if isinstance(g, One):
            return "1"
        if isinstance(g, Zero):
            return "0"
        if isinstance(g, Top):
            return "top"
        if isinstance(g, Bang):
            return "!" + go(g.body, _PREC["unary"], wbound)
        if isinstance(g, At):
            inner = go(g.body, _PREC["at"] + 1, wbound)
            text = f"{inner} @@ {format_world(g.world)}"
            return f"({text})" if prec > _PREC["at"] else text
        if isinstance(g, Tensor):
            text = f"{go(g.left, _PREC['tensor'], wbound)} * {go(g.right, _PREC['tensor'] + 1, wbound)}"
            return f"({text})" if prec > _PREC["tensor"] else text
        if isinstance(g, With):
            text = f"{go(g.left, _PREC['with'], wbound)} & {go(g.right, _PREC['with'] + 1, wbound)}"
            return f"({text})" if prec > _PREC["with"] else text
        if isinstance(g, Oplus):
            text = f"{go(g.left, _PREC['oplus'], wbound)} + {go(g.right, _PREC['oplus'] + 1, wbound)}"
            return f"({text})" if prec > _PREC["oplus"] else text
        if isinstance(g, Limp):
            text = f"{go(g.left, _PREC['limp'] + 1, wbound)} -o {go(g.right, _PREC['limp'], wbound)}"
            return f"({text})" if prec > _PREC["limp"] else text
        if isinstance(g, BINDERS):
            kw = {ForallT: "all", ExistsT: "ex", ForallW: "allw",
                  ExistsW: "exw", Down: "dn"}[type(g)]
            name, body = g.name, g.body
            if isinstance(g, TERM_BINDERS):
                # a constant with the binder's name would be captured on reparse
                clash = free_names(body) - free_term_vars(body)
            else:
                clash = set()
            if name in clash or name in _KEYWORDS or name.startswith("$") or not name:
                base = name.lstrip("$") or ("x" if isinstance(g, TERM_BINDERS) else "u")
                if not base or base[0].isdigit():
                    base = ("x" if isinstance(g, TERM_BINDERS) else "u") + base
                fresh = _fresh(base, clash | _KEYWORDS)
                if isinstance(g, TERM_BINDERS):
                    body = subst_term_var(body, name, tvar(fresh))
                else:
                    body = subst_world_var(body, name, wvar(fresh))
                name = fresh
            text = f"{kw} {name}. {go(body, _PREC['binder'], wbound)}"
            return f"({text})" if prec > _PREC["binder"] else text
        raise TypeError(f"unknown formula node {g!r}")

    return go(f, 0, frozenset())
