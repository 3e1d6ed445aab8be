"""Boolean rule models: the ``.bio`` surface language, the compiler to
logical axioms, and an explicit-state transition-system oracle.

A model declares Boolean variables and asynchronous rules ``a => b``
(activation) or ``a => !b`` (inhibition).  Rule modifiers select premise
strength and effect shape:

* strength: ``general`` (default), ``strong`` (the target's current state
  is also required), ``weak`` (only the trigger is consulted);
* effect: ``consume`` (the trigger is used up), ``strong-effect`` (the
  trigger acts while absent), ``loop`` (self-loop: both present, nothing
  changes).

Each rule compiles to an axiom ``premise -o (next-state one tick later)
tensor (frame axioms for untouched variables)``; the whole system is the
world-generic closure of those axioms plus the two well-definedness
axioms.  The oracle interprets the same rules over explicit Boolean
states, giving an independent semantics to validate proofs against.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional

from .kernel import Judgement
from .syntax import (
    Atom, Bang, Down, ForallT, At, Formula, Limp, One, Oplus, Tensor, With,
    Zero, const, dagger, delay, format_formula, tvar,
)
from .worlds import World, compose, nat, var as wvar


class ModelError(ValueError):
    """Raised when a ``.bio`` model fails to parse or is ill-formed."""


STRENGTHS = ("general", "strong", "weak")
EFFECTS = ("plain", "consume", "strong_effect", "loop")


@dataclass(frozen=True)
class BioRule:
    source: str          # trigger variable a
    target: str          # target variable b
    activates: bool      # a => b  (False: a => !b)
    strength: str = "general"
    effect: str = "plain"

    def label(self) -> str:
        mods = []
        if self.strength != "general":
            mods.append(self.strength)
        if self.effect != "plain":
            mods.append(self.effect.replace("_", "-"))
        arrow = "=>" if self.activates else "=> !"
        return f"{' '.join(mods) + ' ' if mods else ''}{self.source} {arrow}{self.target}"


@dataclass(frozen=True)
class BioModel:
    name: str
    variables: tuple[str, ...]
    rules: tuple[BioRule, ...]
    init: tuple[tuple[str, bool], ...]  # (variable, present)


# ---------------------------------------------------------------------------
# Parsing


_RULE_RE = re.compile(
    r"rule(?P<mods>(?:\s+[a-z-]+)*)\s*:\s*(?P<src>\w+)\s*=>\s*(?P<neg>!?)\s*(?P<tgt>\w+)$"
)


def parse_model(text: str, name: str = "model") -> BioModel:
    variables: list[str] = []
    rules: list[BioRule] = []
    init: list[tuple[str, bool]] = []
    seen_vars: set[str] = set()

    statements: list[tuple[int, str]] = []
    cur: list[str] = []
    cur_line = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("--", 1)[0]
        rest = line
        while ";" in rest:
            head, rest = rest.split(";", 1)
            cur.append(head)
            stmt = " ".join(" ".join(cur).split())
            if stmt:
                statements.append((cur_line, stmt))
            cur = []
            cur_line = lineno
        if rest.strip():
            if not cur:
                cur_line = lineno
            cur.append(rest)
    if " ".join(" ".join(cur).split()):
        raise ModelError(f"line {cur_line}: statement missing terminating ';'")

    for lineno, stmt in statements:
        if stmt.startswith("vars "):
            for v in stmt[len("vars "):].split():
                if not re.fullmatch(r"[A-Za-z_]\w*", v):
                    raise ModelError(f"line {lineno}: bad variable name {v!r}")
                if v in seen_vars:
                    raise ModelError(f"line {lineno}: duplicate variable {v!r}")
                seen_vars.add(v)
                variables.append(v)
        elif stmt.startswith("rule"):
            m = _RULE_RE.fullmatch(stmt)
            if not m:
                raise ModelError(f"line {lineno}: cannot parse rule: {stmt!r}")
            mods = m.group("mods").split()
            strength, effect = "general", "plain"
            for mod in mods:
                if mod in ("general", "strong", "weak"):
                    strength = mod
                elif mod == "consume":
                    effect = "consume"
                elif mod == "strong-effect":
                    effect = "strong_effect"
                elif mod == "loop":
                    effect = "loop"
                else:
                    raise ModelError(f"line {lineno}: unknown modifier {mod!r}")
            src, tgt = m.group("src"), m.group("tgt")
            for v in (src, tgt):
                if v not in seen_vars:
                    raise ModelError(f"line {lineno}: undeclared variable {v!r}")
            if src == tgt:
                raise ModelError(f"line {lineno}: rule source and target must differ")
            activates = not m.group("neg")
            if effect == "loop" and (not activates or strength != "general"):
                raise ModelError(f"line {lineno}: loop rules are written 'rule loop: a => b'")
            rules.append(BioRule(src, tgt, activates, strength, effect))
        elif stmt.startswith("init "):
            if init:
                raise ModelError(f"line {lineno}: duplicate init statement")
            for tok in stmt[len("init "):].split():
                present = not tok.startswith("!")
                v = tok.lstrip("!")
                if v not in seen_vars:
                    raise ModelError(f"line {lineno}: undeclared variable {v!r}")
                if any(v == x for x, _ in init):
                    raise ModelError(f"line {lineno}: variable {v!r} listed twice in init")
                init.append((v, present))
        else:
            raise ModelError(f"line {lineno}: unrecognized statement: {stmt!r}")

    if not variables:
        raise ModelError("model declares no variables")
    if not rules:
        raise ModelError("model declares no rules")
    return BioModel(name, tuple(variables), tuple(rules), tuple(init))


def load_model(path: str) -> BioModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read(), name=path.rsplit("/", 1)[-1])


def signature_of(model: BioModel) -> dict[str, int]:
    return {"pres": 1, "abs": 1}


# ---------------------------------------------------------------------------
# Compilation to formulas


def lit(v: str, present: bool) -> Formula:
    return Atom("pres" if present else "abs", (const(v),))


def _tensor_fold(parts: list[Formula]) -> Formula:
    if not parts:
        return One()
    return reduce(Tensor, parts)


def _oplus_fold(parts: list[Formula]) -> Formula:
    return reduce(Oplus, parts)


def trigger_literal(rule: BioRule) -> tuple[str, bool]:
    """The (variable, present?) literal that makes the rule fireable."""
    return rule.source, rule.effect != "strong_effect"


def effect_literals(rule: BioRule) -> tuple[tuple[str, bool], tuple[str, bool]]:
    """Post-state literals for (source, target)."""
    if rule.effect == "loop":
        return (rule.source, True), (rule.target, True)
    src_after = rule.effect == "plain"
    if rule.effect == "strong_effect":
        tgt_after = not rule.activates
    else:
        tgt_after = rule.activates
    return (rule.source, src_after), (rule.target, tgt_after)


def premise_formula(rule: BioRule) -> Formula:
    a, asign = trigger_literal(rule)
    la = lit(a, asign)
    b = rule.target
    if rule.effect == "loop":
        return Tensor(la, lit(b, True))
    if rule.strength == "weak":
        return la
    if rule.strength == "strong":
        tgt_after = effect_literals(rule)[1][1]
        return Tensor(la, lit(b, not tgt_after))
    # general: the trigger with the target in either state (or ignored)
    return Oplus(Oplus(la, Tensor(la, lit(b, True))), Tensor(la, lit(b, False)))


def unchanged(v: str, u: World) -> Formula:
    step = compose(u, nat(1))
    return Bang(With(
        Limp(At(lit(v, True), u), At(lit(v, True), step)),
        Limp(At(lit(v, False), u), At(lit(v, False), step)),
    ))


def unchanged_set(vs: Iterable[str], u: World) -> Formula:
    return _tensor_fold([unchanged(v, u) for v in vs])


def untouched_vars(model: BioModel, rule: BioRule) -> list[str]:
    return [v for v in model.variables if v not in (rule.source, rule.target)]


def compile_rule(model: BioModel, rule: BioRule) -> Formula:
    (sa, ssign), (tb, tsign) = effect_literals(rule)
    effect = Tensor(lit(sa, ssign), lit(tb, tsign))
    frame = Down("u", unchanged_set(untouched_vars(model, rule), wvar("u")))
    return Limp(premise_formula(rule), Tensor(delay(nat(1), effect), frame))


def dont_care(v: str) -> Formula:
    return Oplus(lit(v, True), lit(v, False))


def dont_care_set(vs: Iterable[str]) -> Formula:
    return _tensor_fold([dont_care(v) for v in vs])


def fireable(model: BioModel, rule: BioRule) -> Formula:
    if rule.strength == "weak":
        rest = [v for v in model.variables if v != rule.source]
        return Tensor(premise_formula(rule), dont_care_set(rest))
    return Tensor(premise_formula(rule),
                  dont_care_set(untouched_vars(model, rule)))


def not_fireable(model: BioModel, rule: BioRule) -> Formula:
    a, asign = trigger_literal(rule)
    if rule.strength in ("general", "weak") and rule.effect != "loop":
        rest = [v for v in model.variables if v != a]
        return Tensor(lit(a, not asign), dont_care_set(rest))
    # strong premises (and loops): enumerate the three falsifying pairs
    b = rule.target
    bsign = not effect_literals(rule)[1][1] if rule.effect != "loop" else True
    la, nla = lit(a, asign), lit(a, not asign)
    lb, nlb = lit(b, bsign), lit(b, not bsign)
    cases = _oplus_fold([Tensor(nla, lb), Tensor(la, nlb), Tensor(nla, nlb)])
    return Tensor(cases, dont_care_set(untouched_vars(model, rule)))


def well_defined_0() -> Formula:
    x = tvar("x")
    return ForallT("x", Limp(Tensor(Atom("pres", (x,)), Atom("abs", (x,))), Zero()))


def well_defined_1() -> Formula:
    x = tvar("x")
    return ForallT("x", Oplus(Atom("pres", (x,)), Atom("abs", (x,))))


def initial_formula(model: BioModel) -> Optional[Formula]:
    if not model.init:
        return None
    return _tensor_fold([lit(v, present) for v, present in model.init])


def compile_system(model: BioModel) -> list[Judgement]:
    """The unrestricted zone: world-generic rule axioms + well-definedness."""
    out = [Judgement(dagger(compile_rule(model, r)), nat(0)) for r in model.rules]
    out.append(Judgement(dagger(well_defined_0()), nat(0)))
    out.append(Judgement(dagger(well_defined_1()), nat(0)))
    return out


def compile_dump(model: BioModel) -> str:
    """Canonical textual dump of everything the compiler produces."""
    lines: list[str] = []
    for v in model.variables:
        lines.append(f"var {v}")
    for i, r in enumerate(model.rules, start=1):
        lines.append(f"rule({i}) = {format_formula(compile_rule(model, r))}")
    lines.append(f"wd0 = {format_formula(well_defined_0())}")
    lines.append(f"wd1 = {format_formula(well_defined_1())}")
    init = initial_formula(model)
    if init is not None:
        lines.append(f"init = {format_formula(init)} @ 0")
    for i, r in enumerate(model.rules, start=1):
        lines.append(f"fireable({i}) = {format_formula(fireable(model, r))}")
    for i, r in enumerate(model.rules, start=1):
        lines.append(f"not_fireable({i}) = {format_formula(not_fireable(model, r))}")
    return "\n".join(lines) + "\n"


def install_macros(env, model: BioModel) -> None:
    """Expose the compiled definitions as formula macros for proof scripts."""

    def by_index(args: list[str], fn) -> str:
        i = int(args[0])
        if not (1 <= i <= len(model.rules)):
            raise ModelError(f"rule index {i} out of range")
        return format_formula(fn(model, model.rules[i - 1]))

    env.define_fn("rule", lambda a: by_index(a, compile_rule))
    env.define_fn("fireable", lambda a: by_index(a, fireable))
    env.define_fn("not_fireable", lambda a: by_index(a, not_fireable))
    env.define_fn("dont_care", lambda a: format_formula(dont_care_set(
        [x.strip() for x in a])))
    env.define("wd0", format_formula(well_defined_0()))
    env.define("wd1", format_formula(well_defined_1()))
    init = initial_formula(model)
    if init is not None:
        env.define("initial", format_formula(init))

    def unchanged_macro(args: list[str]) -> str:
        from .worlds import parse_world
        if len(args) < 2:
            raise ModelError("unchanged(vars..., world) needs a world argument")
        u = parse_world(args[-1])
        return format_formula(unchanged_set(args[:-1], u))

    env.define_fn("unchanged", unchanged_macro)


# ---------------------------------------------------------------------------
# Explicit-state oracle


State = tuple[bool, ...]


def _index(model: BioModel) -> dict[str, int]:
    return {v: i for i, v in enumerate(model.variables)}


def state_of(model: BioModel, present: Iterable[str]) -> State:
    want = set(present)
    unknown = want - set(model.variables)
    if unknown:
        raise ModelError(f"unknown variables in state: {sorted(unknown)}")
    return tuple(v in want for v in model.variables)


def initial_state(model: BioModel) -> Optional[State]:
    if not model.init:
        return None
    given = dict(model.init)
    missing = [v for v in model.variables if v not in given]
    if missing:
        raise ModelError(f"init does not cover variables: {missing}")
    return tuple(given[v] for v in model.variables)


def format_state(model: BioModel, s: State) -> str:
    return "{" + ", ".join(
        ("" if on else "!") + v for v, on in zip(model.variables, s)) + "}"


def rule_enabled(model: BioModel, rule: BioRule, s: State) -> bool:
    ix = _index(model)
    a, asign = trigger_literal(rule)
    if s[ix[a]] != asign:
        return False
    if rule.strength == "strong" or rule.effect == "loop":
        _, (b, tsign) = effect_literals(rule)
        want = True if rule.effect == "loop" else (not tsign)
        return s[ix[rule.target]] == want
    return True


def rule_apply(model: BioModel, rule: BioRule, s: State) -> State:
    ix = _index(model)
    out = list(s)
    for v, sign in effect_literals(rule):
        out[ix[v]] = sign
    return tuple(out)


def successors(model: BioModel, s: State) -> list[tuple[int, State]]:
    """Asynchronous semantics: one enabled rule fires at a time."""
    out = []
    for i, r in enumerate(model.rules, start=1):
        if rule_enabled(model, r, s):
            out.append((i, rule_apply(model, r, s)))
    return out


def run_path(model: BioModel, s: State, rule_indices: Iterable[int]
             ) -> Optional[list[State]]:
    """Fire the given 1-based rules in order; None if one is not enabled."""
    states = [s]
    for i in rule_indices:
        if not (1 <= i <= len(model.rules)):
            raise ModelError(f"rule index {i} out of range")
        r = model.rules[i - 1]
        if not rule_enabled(model, r, s):
            return None
        s = rule_apply(model, r, s)
        states.append(s)
    return states


def all_states(model: BioModel) -> list[State]:
    n = len(model.variables)
    return [tuple(bool(mask & (1 << i)) for i in range(n))
            for mask in range(1 << n)]


def transition_system(model: BioModel) -> dict[State, list[tuple[int, State]]]:
    return {s: successors(model, s) for s in all_states(model)}


def reachable_states(model: BioModel, start: State) -> set[State]:
    seen = {start}
    frontier = [start]
    while frontier:
        s = frontier.pop()
        for _, t in successors(model, s):
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return seen


def is_fixpoint(model: BioModel, s: State) -> bool:
    """Every enabled rule maps the state to itself."""
    return all(t == s for _, t in successors(model, s))
