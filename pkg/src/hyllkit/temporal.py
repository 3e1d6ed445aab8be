"""Temporal-logic operators expressed as hybrid linear-logic formulas.

State quantifiers map to the modal connectives: ``X`` is a one-tick delay,
``F``/``G`` are possibility/necessity over reachable worlds, and the past
operators ``H``/``O`` quantify over earlier worlds via saturating
subtraction.  ``U`` (until) requires a concrete step bound, since the world
grammar has no bounded quantifier.

Path quantifier ``A`` ("along every path") is handled per state operator.
"For every rule r" is never a formula-level quantifier: for ``AX``/``AG``
it becomes one proof obligation per rule, each of the shape
``(fireable(r) & body) + not_fireable(r)``; inside ``AF``/``AU`` bounded
expansions it becomes an additive conjunction of those guarded obligations
over the finite rule set.

Oscillation between two states comes in three flavours: a single-cycle
formula, a world-generic formula, and a meta-level reading as a triple of
sequent obligations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .kernel import Judgement, Sequent
from .syntax import (
    At,
    Down,
    ExistsW,
    ForallW,
    Formula,
    Limp,
    Oplus,
    Tensor,
    With,
    Zero,
    box,
    dagger,
    delay,
    dia,
    free_world_vars,
)
from .worlds import World, compose, nat, sat_sub, var as wvar


class TemporalError(ValueError):
    """An encoding request that cannot be expressed."""


class UnboundedBoundedQuantifier(TemporalError):
    """``U`` needs a concrete step bound; none was supplied."""


Ruleset = Sequence[tuple[Formula, Formula]]

STATE_OPERATORS = ("X", "F", "G", "U", "H", "O")
PATH_OPERATORS = ("AX", "AG", "AF", "AU")


def _fresh_wname(base: str, *formulas: Formula) -> str:
    avoid = set()
    for f in formulas:
        avoid |= free_world_vars(f)
    name = base
    while name in avoid:
        name += "_"
    return name


# ---------------------------------------------------------------------------
# State quantifiers


def next_step(p: Formula) -> Formula:
    """``X P``: true one tick from now."""
    return delay(nat(1), p)


def eventually(p: Formula) -> Formula:
    """``F P``: true at some reachable world."""
    return dia(p)


def globally(p: Formula) -> Formula:
    """``G P``: true at every reachable world."""
    return box(p)


def until(p1: Formula, p2: Formula, bound: Optional[int]) -> Formula:
    """``P1 U P2`` with a concrete bound: P2 holds `bound` ticks from now
    and P1 holds at every strictly earlier tick."""
    if bound is None:
        raise UnboundedBoundedQuantifier(
            "until needs a concrete step bound; the world grammar has no "
            "bounded quantifier")
    if bound < 0:
        raise TemporalError("until bound must be a natural number")
    u = _fresh_wname("u", p1, p2)
    parts = [At(p2, compose(wvar(u), nat(bound)))]
    parts += [At(p1, compose(wvar(u), nat(i))) for i in range(bound)]
    body = parts[0]
    for part in parts[1:]:
        body = Tensor(body, part)
    return Down(u, body)


def historically(p: Formula) -> Formula:
    """``H P``: true at every earlier (or current) world."""
    u = _fresh_wname("u", p)
    w = _fresh_wname("w", p)
    if w == u:
        w += "_"
    return Down(u, ForallW(w, At(p, sat_sub(wvar(u), wvar(w)))))


def once(p: Formula) -> Formula:
    """``O P``: true at some earlier (or current) world."""
    u = _fresh_wname("u", p)
    w = _fresh_wname("w", p)
    if w == u:
        w += "_"
    return Down(u, ExistsW(w, At(p, sat_sub(wvar(u), wvar(w)))))


def encode_state(op: str, p: Formula, p2: Optional[Formula] = None,
                 bound: Optional[int] = None) -> Formula:
    """Encode a state-quantified operator as a single formula."""
    if op == "X":
        return next_step(p)
    if op == "F":
        return eventually(p)
    if op == "G":
        return globally(p)
    if op == "H":
        return historically(p)
    if op == "O":
        return once(p)
    if op == "U":
        if p2 is None:
            raise TemporalError("until takes two propositions")
        return until(p, p2, bound)
    raise TemporalError(f"unknown state operator {op!r}")


# ---------------------------------------------------------------------------
# Path quantifiers


def rule_obligation(fireable: Formula, not_fireable: Formula,
                    body: Formula) -> Formula:
    """Either the rule can fire and `body` holds, or it cannot fire."""
    return Oplus(With(fireable, body), not_fireable)


def forall_rules(body: Formula, ruleset: Ruleset) -> Formula:
    """Additive conjunction of the guarded obligation over every rule."""
    if not ruleset:
        raise TemporalError("ruleset must be nonempty")
    parts = [rule_obligation(f, nf, body) for f, nf in ruleset]
    out = parts[0]
    for part in parts[1:]:
        out = With(out, part)
    return out


def ax_obligations(p: Formula, ruleset: Ruleset) -> list[Formula]:
    """``AX P``: one obligation per rule — the rule fires and P holds one
    tick later, or the rule cannot fire."""
    if not ruleset:
        raise TemporalError("ruleset must be nonempty")
    return [rule_obligation(f, nf, next_step(p)) for f, nf in ruleset]


def ag_goals(p: Formula, ruleset: Ruleset,
             world_var: str = "w") -> list[tuple[str, Sequent]]:
    """``AG P`` as proof obligations: P localises to instant 0, and every
    rule either fires and preserves P one tick later or cannot fire."""
    w = wvar(world_var)
    goals = [("base", Sequent((), (Judgement(p, nat(0)),),
                              Judgement(At(p, nat(0)), w)))]
    for i, ob in enumerate(ax_obligations(p, ruleset), start=1):
        goals.append((f"step_{i}",
                      Sequent((), (), Judgement(Limp(p, ob), w))))
    return goals


def ag_ax_goals(left: Formula, right: Formula, ruleset: Ruleset,
                world_var: str = "n") -> list[tuple[str, Sequent]]:
    """``AG (L -> AX R)`` as one obligation per rule: whenever L holds,
    the rule fires and R holds one tick later, or the rule cannot fire."""
    w = wvar(world_var)
    return [(f"step_{i}", Sequent((), (), Judgement(Limp(left, ob), w)))
            for i, ob in enumerate(ax_obligations(right, ruleset), start=1)]


def af_formula(p: Formula, bound: int, ruleset: Ruleset) -> Formula:
    """``AF P`` expanded to a concrete bound: P now, or along every rule
    P one tick later, or ... up to `bound` ticks."""
    if bound is None or bound < 1:
        raise TemporalError("AF needs a step bound of at least 1")

    def layer(j: int) -> Formula:
        here = p if j == 0 else delay(nat(j), p)
        if j == bound:
            return here
        return Oplus(here, forall_rules(layer(j + 1), ruleset))

    return layer(0)


def au_formula(p1: Formula, p2: Formula, bound: int,
               ruleset: Ruleset) -> Formula:
    """``A (P1 U P2)`` expanded to a concrete bound."""
    if bound is None or bound < 1:
        raise TemporalError("AU needs a step bound of at least 1")

    def step(f: Formula, j: int) -> Formula:
        return f if j == 0 else delay(nat(j), f)

    def layer(j: int) -> Formula:
        if j == bound:
            return step(p2, j)
        return Oplus(step(p2, j),
                     Tensor(step(p1, j), forall_rules(layer(j + 1), ruleset)))

    return layer(0)


def encode_path(op: str, p: Formula, p2: Optional[Formula] = None,
                bound: Optional[int] = None,
                ruleset: Optional[Ruleset] = None):
    """Encode a path-quantified operator.

    ``AX`` and ``AG`` return lists of proof obligations (formulas resp.
    named sequents); ``AF`` and ``AU`` return a single bounded expansion.
    """
    if not ruleset:
        raise TemporalError(f"{op} needs a nonempty ruleset")
    if op == "AX":
        return ax_obligations(p, ruleset)
    if op == "AG":
        if p2 is not None:
            return ag_ax_goals(p, p2, ruleset)
        return ag_goals(p, ruleset)
    if op == "AF":
        if bound is None:
            raise TemporalError("AF needs a step bound")
        return af_formula(p, bound, ruleset)
    if op == "AU":
        if p2 is None:
            raise TemporalError("AU takes two propositions")
        if bound is None:
            raise TemporalError("AU needs a step bound")
        return au_formula(p, p2, bound, ruleset)
    raise TemporalError(f"unknown path operator {op!r}")


# ---------------------------------------------------------------------------
# Oscillation


def exclusion(a: Formula, b: Formula) -> Formula:
    """A and B can never hold together."""
    return Limp(With(a, b), Zero())


def oscillate_once(a: Formula, b: Formula, u: World, v: World) -> Formula:
    """One full swing: A now, B after `u` ticks, A again `v` ticks later,
    with A and B mutually exclusive."""
    return With(With(a, delay(u, With(b, delay(v, a)))), exclusion(a, b))


def oscillate_always(a: Formula, b: Formula, u: World, v: World) -> Formula:
    """World-generic oscillation: at every world, A leads to B after `u`
    ticks and B leads back to A after `v` ticks; A and B exclusive."""
    return With(dagger(With(Limp(a, delay(u, b)), Limp(b, delay(v, a)))),
                exclusion(a, b))


def oscillation_goals(a: Formula, b: Formula, u: World, v: World,
                      mode: str = "meta", world_var: str = "w"):
    """Oscillation as a formula (`once`/`always`) or, in `meta` mode, as
    three sequent obligations: A reaches B in `u` ticks, B reaches A in
    `v` more ticks, and A and B are mutually exclusive."""
    if mode in ("formula1", "once"):
        return oscillate_once(a, b, u, v)
    if mode in ("formulaH", "always"):
        return oscillate_always(a, b, u, v)
    if mode != "meta":
        raise TemporalError(f"unknown oscillation mode {mode!r}")
    w = wvar(world_var)
    wu = compose(w, u)
    wuv = compose(wu, v)
    return [
        ("rise", Sequent((), (Judgement(a, w),), Judgement(b, wu))),
        ("fall", Sequent((), (Judgement(b, wu),), Judgement(a, wuv))),
        ("excl", Sequent((), (), Judgement(exclusion(a, b), w))),
    ]


# ---------------------------------------------------------------------------
# Convenience: rulesets from compiled models


def ruleset_of(model) -> list[tuple[Formula, Formula]]:
    """The (fireable, not_fireable) pair of every rule of a model."""
    from . import biomodel

    return [(biomodel.fireable(model, r), biomodel.not_fireable(model, r))
            for r in model.rules]


@dataclass(frozen=True)
class TemporalSpec:
    """A fully described temporal property, validated before encoding."""

    operator: str
    p: Formula
    p2: Optional[Formula] = None
    bound: Optional[int] = None
    ruleset: Optional[Ruleset] = None

    def validate(self) -> None:
        op = self.operator
        if op not in STATE_OPERATORS + PATH_OPERATORS:
            raise TemporalError(f"unknown operator {op!r}")
        if op in ("U", "AU") and self.p2 is None:
            raise TemporalError(f"{op} takes two propositions")
        if op in ("AF", "AU") and self.bound is None:
            raise TemporalError(f"{op} needs a step bound")
        if op in PATH_OPERATORS and not self.ruleset:
            raise TemporalError(f"{op} needs a nonempty ruleset")

    def encode(self):
        self.validate()
        if self.operator in STATE_OPERATORS:
            return encode_state(self.operator, self.p, self.p2, self.bound)
        return encode_path(self.operator, self.p, self.p2, self.bound,
                           self.ruleset)
