"""World expressions over the commutative monoid of time instants.

A world is a natural-number offset composed with a multiset of world
variables, plus an ordered list of pending saturating subtractions that
could not be evaluated because one side is still symbolic.

Canonical form invariants (enforced by the constructors):

* the variable multiset is stored as a sorted tuple of (name, count) pairs
  with count >= 1;
* a subtraction node whose operands are both ground collapses to its
  numeric value `max(l - r, 0)` and is folded into the offset;
* pending subtraction nodes are kept sorted by structural key so that
  composition is commutative on the representation itself.

Two worlds are equal iff their canonical representations are equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union


class WorldSyntaxError(ValueError):
    """Raised when a world expression fails to parse."""


# ---------------------------------------------------------------------------
# Representation


@dataclass(frozen=True)
class SatSub:
    """A pending saturating subtraction ``left - right`` (floored at zero)."""

    left: "World"
    right: "World"

    def key(self) -> tuple:
        return (self.left.key(), self.right.key())


@dataclass(frozen=True)
class World:
    """Canonical world expression: offset + variable multiset + pending subs."""

    offset: int = 0
    vars: tuple[tuple[str, int], ...] = ()
    subs: tuple[SatSub, ...] = ()

    def __post_init__(self) -> None:
        if self.offset < 0:
            raise ValueError("world offset must be a natural number")
        for name, count in self.vars:
            if count < 1:
                raise ValueError(f"variable multiplicity must be >= 1: {name}")

    # -- queries ------------------------------------------------------------

    def is_ground(self) -> bool:
        return not self.vars and not self.subs

    def is_identity(self) -> bool:
        return self.offset == 0 and self.is_ground()

    def free_vars(self) -> set[str]:
        out = {name for name, _ in self.vars}
        for sub in self.subs:
            out |= sub.left.free_vars() | sub.right.free_vars()
        return out

    def key(self) -> tuple:
        return (self.offset, self.vars, tuple(s.key() for s in self.subs))

    def __str__(self) -> str:
        return format_world(self)

    def __repr__(self) -> str:
        return f"World({format_world(self)!r})"


IDENTITY = World()


def _merge_vars(
    a: Iterable[tuple[str, int]], b: Iterable[tuple[str, int]]
) -> tuple[tuple[str, int], ...]:
    counts: dict[str, int] = {}
    for name, n in list(a) + list(b):
        counts[name] = counts.get(name, 0) + n
    return tuple(sorted((name, n) for name, n in counts.items() if n > 0))


def world(offset: int = 0, vars: Mapping[str, int] | None = None,
          subs: Iterable[SatSub] = ()) -> World:
    """Smart constructor producing the canonical form."""
    var_items = tuple(sorted((k, v) for k, v in (vars or {}).items() if v > 0))
    offset = offset
    kept: list[SatSub] = []
    for sub in subs:
        if sub.left.is_ground() and sub.right.is_ground():
            offset += max(sub.left.offset - sub.right.offset, 0)
        else:
            kept.append(sub)
    kept.sort(key=SatSub.key)
    return World(offset, var_items, tuple(kept))


def var(name: str) -> World:
    return World(0, ((name, 1),), ())


def nat(n: int) -> World:
    return World(n, (), ())


# ---------------------------------------------------------------------------
# Monoid operations


def compose(*ws: World) -> World:
    """Monoid composition ``u . v`` (commutative, identity `i`)."""
    offset = 0
    vars_acc: tuple[tuple[str, int], ...] = ()
    subs: list[SatSub] = []
    for w in ws:
        offset += w.offset
        vars_acc = _merge_vars(vars_acc, w.vars)
        subs.extend(w.subs)
    subs.sort(key=SatSub.key)
    return World(offset, vars_acc, tuple(subs))


def sat_sub(u: World, v: World) -> World:
    """Saturating subtraction ``u - v`` (evaluates when both sides are ground)."""
    if u.is_ground() and v.is_ground():
        return nat(max(u.offset - v.offset, 0))
    return world(subs=(SatSub(u, v),))


def reachable_witness(u: World, w: World) -> Optional[World]:
    """Return v with ``u . v == w`` if one exists syntactically, else None.

    For ground worlds this is exact; for symbolic worlds the witness exists
    when w dominates u component-wise (offset, variable multiset, and the
    pending subtractions of u embed into those of w).
    """
    if w.offset < u.offset:
        return None
    uc = dict(u.vars)
    wc = dict(w.vars)
    for name, n in uc.items():
        if wc.get(name, 0) < n:
            return None
    rest_vars = {name: wc[name] - uc.get(name, 0) for name in wc}
    rest_subs = list(w.subs)
    for sub in u.subs:
        if sub in rest_subs:
            rest_subs.remove(sub)
        else:
            return None
    return world(w.offset - u.offset, rest_vars, tuple(rest_subs))


def reachable(u: World, w: World) -> bool:
    return reachable_witness(u, w) is not None


# ---------------------------------------------------------------------------
# Substitution


def subst_world(w: World, name: str, value: World) -> World:
    """Substitute `value` for every free occurrence of variable `name`."""
    mult = dict(w.vars).get(name, 0)
    rest = {k: v for k, v in dict(w.vars).items() if k != name}
    subs = [
        SatSub(subst_world(s.left, name, value), subst_world(s.right, name, value))
        for s in w.subs
    ]
    base = world(w.offset, rest, subs)
    for _ in range(mult):
        base = compose(base, value)
    return base


def apply_bindings(w: World, bindings: Mapping[str, World]) -> World:
    out = w
    # iterate to a fixpoint so chained bindings resolve
    for _ in range(len(bindings) + 1):
        changed = False
        for name, value in bindings.items():
            if name in out.free_vars():
                out = subst_world(out, name, value)
                changed = True
        if not changed:
            break
    return out


# ---------------------------------------------------------------------------
# Unification (restricted pattern: at most one unknown, multiplicity one)


@dataclass(frozen=True)
class UnifyFailure:
    """Soft failure from unification."""

    reason: str  # "NoSolution" or "NonLinear"
    detail: str = ""

    def __bool__(self) -> bool:
        return False


UnifyResult = Union[dict, UnifyFailure]


def is_metavar(name: str) -> bool:
    return name.startswith("?")


def unify_worlds(
    a: World,
    b: World,
    bindings: Mapping[str, World] | None = None,
    rigid: frozenset[str] | set[str] = frozenset(),
) -> UnifyResult:
    """Unify two world expressions.

    Variables whose name starts with ``?`` (and is not in `rigid`) are
    unknowns; everything else is rigid. Succeeds only in the restricted
    pattern where, after cancelling the common part, at most one unknown of
    multiplicity one remains on one side; returns the extended binding map
    or a :class:`UnifyFailure` (``NoSolution`` / ``NonLinear``).
    """
    bindings = dict(bindings or {})
    a = apply_bindings(a, bindings)
    b = apply_bindings(b, bindings)
    if a == b:
        return bindings

    # cancel common offset
    common = min(a.offset, b.offset)
    ac, bc = dict(a.vars), dict(b.vars)
    for name in list(ac):
        if name in bc:
            k = min(ac[name], bc[name])
            ac[name] -= k
            bc[name] -= k
    ac = {k: v for k, v in ac.items() if v > 0}
    bc = {k: v for k, v in bc.items() if v > 0}
    asubs, bsubs = list(a.subs), list(b.subs)
    for s in list(asubs):
        if s in bsubs:
            asubs.remove(s)
            bsubs.remove(s)

    left = world(a.offset - common, ac, asubs)
    right = world(b.offset - common, bc, bsubs)

    def unknowns(w: World) -> list[tuple[str, int]]:
        return [(n, k) for n, k in w.vars if is_metavar(n) and n not in rigid]

    lu, ru = unknowns(left), unknowns(right)

    if not lu and not ru:
        # try structural unification of pending subtraction nodes
        if len(left.subs) == 1 and len(right.subs) == 1 and \
                left.offset == right.offset and left.vars == right.vars:
            ls, rs = left.subs[0], right.subs[0]
            mid = unify_worlds(ls.left, rs.left, bindings, rigid)
            if isinstance(mid, UnifyFailure):
                return mid
            return unify_worlds(ls.right, rs.right, mid, rigid)
        return UnifyFailure("NoSolution", f"{left} =/= {right}")

    if lu and ru:
        return UnifyFailure("NonLinear", "unknowns on both sides")

    unknown_side, ground_side = (left, right) if lu else (right, left)
    us = lu or ru
    if len(us) > 1 or us[0][1] > 1:
        return UnifyFailure("NonLinear", "more than one unknown occurrence")
    if unknown_side.subs:
        return UnifyFailure("NonLinear", "unknown beside pending subtraction")
    name = us[0][0]
    residue_vars = {n: k for n, k in unknown_side.vars if n != name}
    if residue_vars:
        return UnifyFailure("NonLinear", "unknown beside rigid variable")
    if ground_side.offset < unknown_side.offset:
        return UnifyFailure("NoSolution", f"offset {ground_side.offset} < {unknown_side.offset}")
    value = world(ground_side.offset - unknown_side.offset,
                  dict(ground_side.vars), ground_side.subs)
    if name in value.free_vars():
        return UnifyFailure("NoSolution", "occurs check")
    bindings[name] = value
    return bindings


# ---------------------------------------------------------------------------
# Concrete syntax:  world := term ('-' term)* ;  term := atom ('.' atom)*
#                   atom  := nat | ident | '?'ident | 'i' | '(' world ')'


def parse_world(text: str) -> World:
    parser = _WorldParser(text)
    w = parser.parse_expr()
    parser.skip_ws()
    if parser.pos != len(parser.text):
        raise WorldSyntaxError(
            f"unexpected trailing input at {parser.pos}: {text[parser.pos:]!r}")
    return w


class _WorldParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse_expr(self) -> World:
        w = self.parse_term()
        while self.peek() == "-":
            self.pos += 1
            w = sat_sub(w, self.parse_term())
        return w

    def parse_term(self) -> World:
        w = self.parse_atom()
        while self.peek() == ".":
            self.pos += 1
            w = compose(w, self.parse_atom())
        return w

    def parse_atom(self) -> World:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise WorldSyntaxError("unexpected end of world expression")
        ch = self.text[self.pos]
        if ch == "(":
            self.pos += 1
            w = self.parse_expr()
            if self.peek() != ")":
                raise WorldSyntaxError(f"expected ')' at {self.pos}")
            self.pos += 1
            return w
        if ch.isdigit():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            return nat(int(self.text[start:self.pos]))
        if ch == "?" or ch.isalpha() or ch == "_":
            start = self.pos
            if ch == "?":
                self.pos += 1
            if self.pos >= len(self.text) or not (
                self.text[self.pos].isalpha() or self.text[self.pos] == "_"
            ):
                raise WorldSyntaxError(f"expected identifier at {self.pos}")
            while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] == "_"
            ):
                self.pos += 1
            name = self.text[start:self.pos]
            if name == "i":
                return IDENTITY
            return var(name)
        raise WorldSyntaxError(f"unexpected character {ch!r} at {self.pos}")


def format_world(w: World) -> str:
    parts: list[str] = []
    for name, count in w.vars:
        parts.extend([name] * count)
    for sub in w.subs:
        parts.append(f"({format_world(sub.left)} - {format_world(sub.right)})")
    if w.offset or not parts:
        parts.append(str(w.offset))
    return ".".join(parts)
