"""Trusted sequent-calculus kernel.

A derivation is a tree of (rule, payload) nodes over two-zone sequents
``Gamma ; Delta |- C @ w`` (Gamma unrestricted, Delta linear).  The checker
recomputes every premise sequent from the node's conclusion and payload, so
a certificate only needs the root sequent plus the rule/payload skeleton;
nothing below the kernel is trusted.

The structural metatheorems (weakening, contraction, relocation, identity
expansion) are executable derivation transformers whose outputs are
re-checked by the same kernel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

from . import syntax as S
from .worlds import World, compose, format_world, parse_world, var as wvar
from .syntax import (
    Atom, Bang, Down, ExistsT, ExistsW, ForallT, ForallW, At, Formula, Limp,
    One, Oplus, Tensor, Term, Top, With, Zero, alpha_eq, format_formula,
    free_names, free_term_vars, free_world_vars, parse_formula,
    subst_term_var, subst_world_var, tvar,
)

CERT_FORMAT_VERSION = 1


class CheckError(Exception):
    """Raised when a derivation fails kernel checking."""


# ---------------------------------------------------------------------------
# Sequents


@dataclass(frozen=True)
class Judgement:
    formula: Formula
    world: World

    def __str__(self) -> str:
        return f"{format_formula(self.formula)} @ {format_world(self.world)}"


@dataclass(frozen=True)
class Sequent:
    gamma: tuple[Judgement, ...]
    delta: tuple[Judgement, ...]
    goal: Judgement

    def __str__(self) -> str:
        g = ", ".join(str(j) for j in self.gamma) or "."
        d = ", ".join(str(j) for j in self.delta) or "."
        return f"{g} ; {d} |- {self.goal}"


def jeq(a: Judgement, b: Judgement) -> bool:
    return a.world == b.world and alpha_eq(a.formula, b.formula)


def seq_eq(a: Sequent, b: Sequent) -> bool:
    return (
        len(a.gamma) == len(b.gamma)
        and len(a.delta) == len(b.delta)
        and all(jeq(x, y) for x, y in zip(a.gamma, b.gamma))
        and all(jeq(x, y) for x, y in zip(a.delta, b.delta))
        and jeq(a.goal, b.goal)
    )


def sequent_free_names(seq: Sequent) -> set[str]:
    out: set[str] = set()
    for j in seq.gamma + seq.delta + (seq.goal,):
        out |= free_names(j.formula)
        out |= j.world.free_vars()
    return out


# ---------------------------------------------------------------------------
# Derivations


@dataclass(frozen=True)
class Payload:
    principal: Optional[int] = None
    split: Optional[tuple[int, ...]] = None
    side: Optional[int] = None
    fresh: Optional[str] = None
    witness_term: Optional[Term] = None
    witness_world: Optional[World] = None
    cut: Optional[Judgement] = None


EMPTY = Payload()


@dataclass(frozen=True)
class Derivation:
    rule: str
    conclusion: Sequent
    payload: Payload = EMPTY
    premises: tuple["Derivation", ...] = ()

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)


# ---------------------------------------------------------------------------
# Rule semantics: conclusion + payload  ==>  premise sequents


def _principal(seq: Sequent, payload: Payload, cls) -> tuple[int, Judgement]:
    i = payload.principal
    if i is None:
        raise CheckError("missing principal index")
    if not (0 <= i < len(seq.delta)):
        raise CheckError(f"principal index {i} out of range")
    j = seq.delta[i]
    if cls is not None and not isinstance(j.formula, cls):
        raise CheckError(
            f"principal formula is {type(j.formula).__name__}, "
            f"expected {_cls_name(cls)}")
    return i, j


def _cls_name(cls) -> str:
    if isinstance(cls, tuple):
        return " or ".join(c.__name__ for c in cls)
    return cls.__name__


def _goal_is(seq: Sequent, cls) -> Formula:
    if not isinstance(seq.goal.formula, cls):
        raise CheckError(
            f"goal is {type(seq.goal.formula).__name__}, expected {_cls_name(cls)}")
    return seq.goal.formula


def _split(seq: Sequent, payload: Payload, pool: tuple[Judgement, ...]
           ) -> tuple[tuple[Judgement, ...], tuple[Judgement, ...]]:
    if payload.split is None:
        raise CheckError("missing context split")
    chosen = payload.split
    if len(set(chosen)) != len(chosen):
        raise CheckError("duplicate index in context split")
    for i in chosen:
        if not (0 <= i < len(pool)):
            raise CheckError(f"split index {i} out of range")
    sel = tuple(pool[i] for i in sorted(chosen))
    rest = tuple(pool[i] for i in range(len(pool)) if i not in set(chosen))
    return sel, rest


def _check_fresh(seq: Sequent, name: Optional[str]) -> str:
    if not name:
        raise CheckError("missing fresh name")
    if name in sequent_free_names(seq):
        raise CheckError(f"eigenvariable {name!r} is not fresh for the sequent")
    return name


def premises_of(seq: Sequent, rule: str, payload: Payload,
                allow_cut: bool = False) -> list[Sequent]:
    """Compute the premise sequents demanded by a rule instance.

    Raises :class:`CheckError` if the rule does not apply.
    """
    gamma, delta, goal = seq.gamma, seq.delta, seq.goal
    w = goal.world

    if rule == "init":
        if len(delta) != 1:
            raise CheckError("init needs exactly one linear hypothesis")
        if not isinstance(goal.formula, Atom):
            raise CheckError("init goal must be atomic")
        if not jeq(delta[0], goal):
            raise CheckError(f"init mismatch: {delta[0]} vs {goal}")
        return []

    if rule == "copy":
        i = payload.principal
        if i is None or not (0 <= i < len(gamma)):
            raise CheckError(f"copy index {i} out of range")
        return [Sequent(gamma, delta + (gamma[i],), goal)]

    if rule == "tensorR":
        f = _goal_is(seq, Tensor)
        sel, rest = _split(seq, payload, delta)
        return [
            Sequent(gamma, sel, Judgement(f.left, w)),
            Sequent(gamma, rest, Judgement(f.right, w)),
        ]

    if rule == "tensorL":
        i, j = _principal(seq, payload, Tensor)
        f = j.formula
        new = delta[:i] + (Judgement(f.left, j.world), Judgement(f.right, j.world)) + delta[i + 1:]
        return [Sequent(gamma, new, goal)]

    if rule == "oneR":
        _goal_is(seq, One)
        if delta:
            raise CheckError("1R needs an empty linear context")
        return []

    if rule == "oneL":
        i, _ = _principal(seq, payload, One)
        return [Sequent(gamma, delta[:i] + delta[i + 1:], goal)]

    if rule == "limpR":
        f = _goal_is(seq, Limp)
        return [Sequent(gamma, delta + (Judgement(f.left, w),),
                        Judgement(f.right, w))]

    if rule == "limpL":
        i, j = _principal(seq, payload, Limp)
        f = j.formula
        pool = delta[:i] + delta[i + 1:]
        sel, rest = _split(seq, payload, pool)
        return [
            Sequent(gamma, sel, Judgement(f.left, j.world)),
            Sequent(gamma, rest + (Judgement(f.right, j.world),), goal),
        ]

    if rule == "topR":
        _goal_is(seq, Top)
        return []

    if rule == "zeroL":
        _principal(seq, payload, Zero)
        return []

    if rule == "withR":
        f = _goal_is(seq, With)
        return [Sequent(gamma, delta, Judgement(f.left, w)),
                Sequent(gamma, delta, Judgement(f.right, w))]

    if rule == "withL":
        i, j = _principal(seq, payload, With)
        if payload.side not in (1, 2):
            raise CheckError("withL needs side 1 or 2")
        part = j.formula.left if payload.side == 1 else j.formula.right
        return [Sequent(gamma, delta[:i] + (Judgement(part, j.world),) + delta[i + 1:], goal)]

    if rule == "oplusR":
        f = _goal_is(seq, Oplus)
        if payload.side not in (1, 2):
            raise CheckError("oplusR needs side 1 or 2")
        part = f.left if payload.side == 1 else f.right
        return [Sequent(gamma, delta, Judgement(part, w))]

    if rule == "oplusL":
        i, j = _principal(seq, payload, Oplus)
        f = j.formula
        return [
            Sequent(gamma, delta[:i] + (Judgement(f.left, j.world),) + delta[i + 1:], goal),
            Sequent(gamma, delta[:i] + (Judgement(f.right, j.world),) + delta[i + 1:], goal),
        ]

    if rule == "forallR":
        f = _goal_is(seq, (ForallT, ForallW))
        fresh = _check_fresh(seq, payload.fresh)
        if isinstance(f, ForallT):
            body = subst_term_var(f.body, f.name, tvar(fresh))
        else:
            body = subst_world_var(f.body, f.name, wvar(fresh))
        return [Sequent(gamma, delta, Judgement(body, w))]

    if rule == "forallL":
        i, j = _principal(seq, payload, (ForallT, ForallW))
        f = j.formula
        body = _instantiate(f, payload, "forallL")
        return [Sequent(gamma, delta[:i] + (Judgement(body, j.world),) + delta[i + 1:], goal)]

    if rule == "existsR":
        f = _goal_is(seq, (ExistsT, ExistsW))
        body = _instantiate(f, payload, "existsR")
        return [Sequent(gamma, delta, Judgement(body, w))]

    if rule == "existsL":
        i, j = _principal(seq, payload, (ExistsT, ExistsW))
        f = j.formula
        fresh = _check_fresh(seq, payload.fresh)
        if isinstance(f, ExistsT):
            body = subst_term_var(f.body, f.name, tvar(fresh))
        else:
            body = subst_world_var(f.body, f.name, wvar(fresh))
        return [Sequent(gamma, delta[:i] + (Judgement(body, j.world),) + delta[i + 1:], goal)]

    if rule == "bangR":
        f = _goal_is(seq, Bang)
        if delta:
            raise CheckError("!R needs an empty linear context")
        return [Sequent(gamma, (), Judgement(f.body, w))]

    if rule == "bangL":
        i, j = _principal(seq, payload, Bang)
        return [Sequent(gamma + (Judgement(j.formula.body, j.world),),
                        delta[:i] + delta[i + 1:], goal)]

    if rule == "atR":
        f = _goal_is(seq, At)
        return [Sequent(gamma, delta, Judgement(f.body, f.world))]

    if rule == "atL":
        i, j = _principal(seq, payload, At)
        f = j.formula
        return [Sequent(gamma, delta[:i] + (Judgement(f.body, f.world),) + delta[i + 1:], goal)]

    if rule == "downR":
        f = _goal_is(seq, Down)
        body = subst_world_var(f.body, f.name, w)
        return [Sequent(gamma, delta, Judgement(body, w))]

    if rule == "downL":
        i, j = _principal(seq, payload, Down)
        f = j.formula
        body = subst_world_var(f.body, f.name, j.world)
        return [Sequent(gamma, delta[:i] + (Judgement(body, j.world),) + delta[i + 1:], goal)]

    if rule == "cut":
        if not allow_cut:
            raise CheckError("cut is not permitted (allow_cut is off)")
        if payload.cut is None:
            raise CheckError("cut needs its cut judgement")
        sel, rest = _split(seq, payload, delta)
        return [
            Sequent(gamma, sel, payload.cut),
            Sequent(gamma, rest + (payload.cut,), goal),
        ]

    raise CheckError(f"unknown rule {rule!r}")


def _instantiate(f: Formula, payload: Payload, rule: str) -> Formula:
    if isinstance(f, (ForallT, ExistsT)):
        if payload.witness_term is None:
            raise CheckError(f"{rule} needs a term witness")
        return subst_term_var(f.body, f.name, payload.witness_term)
    if payload.witness_world is None:
        raise CheckError(f"{rule} needs a world witness")
    return subst_world_var(f.body, f.name, payload.witness_world)


# ---------------------------------------------------------------------------
# Checking


def check_derivation(d: Derivation, allow_cut: bool = False) -> None:
    """Validate a full derivation; raises :class:`CheckError` on failure."""
    expected = premises_of(d.conclusion, d.rule, d.payload, allow_cut)
    if len(expected) != len(d.premises):
        raise CheckError(
            f"rule {d.rule} expects {len(expected)} premise(s), "
            f"got {len(d.premises)}")
    for want, sub in zip(expected, d.premises):
        if not seq_eq(want, sub.conclusion):
            raise CheckError(
                f"premise mismatch under {d.rule}:\n"
                f"  expected {want}\n  found    {sub.conclusion}")
        check_derivation(sub, allow_cut)


def build(rule: str, conclusion: Sequent, payload: Payload = EMPTY,
          premises: Iterable[Derivation] = (), allow_cut: bool = False) -> Derivation:
    """Construct a node, validating the rule instance as it is built."""
    d = Derivation(rule, conclusion, payload, tuple(premises))
    expected = premises_of(conclusion, rule, payload, allow_cut)
    if len(expected) != len(d.premises):
        raise CheckError(f"rule {rule}: wrong premise count")
    for want, sub in zip(expected, d.premises):
        if not seq_eq(want, sub.conclusion):
            raise CheckError(
                f"rule {rule}: premise mismatch\n  expected {want}\n"
                f"  found    {sub.conclusion}")
    return d


def elaborate(conclusion: Sequent, skeleton, allow_cut: bool = False) -> Derivation:
    """Rebuild a full derivation from a (rule, payload, children) skeleton."""
    rule, payload, children = skeleton
    expected = premises_of(conclusion, rule, payload, allow_cut)
    if len(expected) != len(children):
        raise CheckError(f"rule {rule}: expects {len(expected)} premise(s), "
                         f"skeleton has {len(children)}")
    premises = tuple(
        elaborate(seq, child, allow_cut) for seq, child in zip(expected, children)
    )
    return Derivation(rule, conclusion, payload, premises)


def skeleton_of(d: Derivation):
    return (d.rule, d.payload, [skeleton_of(p) for p in d.premises])


# ---------------------------------------------------------------------------
# Identity expansion:  Gamma ; A@w |- A@w  for arbitrary A


def identity_expansion(a: Formula, w: World,
                       gamma: tuple[Judgement, ...] = ()) -> Derivation:
    j = Judgement(a, w)
    seq = Sequent(gamma, (j,), j)

    def p(**kw) -> Payload:
        return Payload(**kw)

    if isinstance(a, Atom):
        return build("init", seq)
    if isinstance(a, One):
        inner = build("oneR", Sequent(gamma, (), j))
        return build("oneL", seq, p(principal=0), [inner])
    if isinstance(a, Top):
        return build("topR", seq)
    if isinstance(a, Zero):
        return build("zeroL", seq, p(principal=0))
    if isinstance(a, Tensor):
        left = identity_expansion(a.left, w, gamma)
        right = identity_expansion(a.right, w, gamma)
        jl, jr = Judgement(a.left, w), Judgement(a.right, w)
        rnode = build("tensorR", Sequent(gamma, (jl, jr), j),
                      p(split=(0,)), [left, right])
        return build("tensorL", seq, p(principal=0), [rnode])
    if isinstance(a, Limp):
        jl, jr = Judgement(a.left, w), Judgement(a.right, w)
        left = identity_expansion(a.left, w, gamma)
        right = identity_expansion(a.right, w, gamma)
        lnode = build("limpL", Sequent(gamma, (j, jl), jr),
                      p(principal=0, split=(0,)), [left, right])
        return build("limpR", seq, EMPTY, [lnode])
    if isinstance(a, With):
        out = []
        for side, part in ((1, a.left), (2, a.right)):
            sub = identity_expansion(part, w, gamma)
            out.append(build("withL", Sequent(gamma, (j,), Judgement(part, w)),
                             p(principal=0, side=side), [sub]))
        return build("withR", seq, EMPTY, out)
    if isinstance(a, Oplus):
        out = []
        for side, part in ((1, a.left), (2, a.right)):
            sub = identity_expansion(part, w, gamma)
            rnode = build("oplusR", Sequent(gamma, (Judgement(part, w),), j),
                          p(side=side), [sub])
            out.append(rnode)
        return build("oplusL", seq, p(principal=0), out)
    if isinstance(a, Bang):
        body = Judgement(a.body, w)
        core = identity_expansion(a.body, w, gamma + (body,))
        cnode = build("copy", Sequent(gamma + (body,), (), body),
                      p(principal=len(gamma)), [core])
        rnode = build("bangR", Sequent(gamma + (body,), (), j), EMPTY, [cnode])
        return build("bangL", seq, p(principal=0), [rnode])
    if isinstance(a, (ForallT, ForallW)):
        fresh = S._fresh(a.name if not a.name.startswith("$") else "x",
                         free_names(a) | w.free_vars() | S._KEYWORDS
                         | {n for g in gamma for n in free_names(g.formula) | g.world.free_vars()})
        if isinstance(a, ForallT):
            body = subst_term_var(a.body, a.name, tvar(fresh))
            wit = p(principal=0, witness_term=tvar(fresh))
        else:
            body = subst_world_var(a.body, a.name, wvar(fresh))
            wit = p(principal=0, witness_world=wvar(fresh))
        core = identity_expansion(body, w, gamma)
        lnode = build("forallL", Sequent(gamma, (j,), Judgement(body, w)), wit, [core])
        return build("forallR", seq, p(fresh=fresh), [lnode])
    if isinstance(a, (ExistsT, ExistsW)):
        fresh = S._fresh(a.name if not a.name.startswith("$") else "x",
                         free_names(a) | w.free_vars() | S._KEYWORDS
                         | {n for g in gamma for n in free_names(g.formula) | g.world.free_vars()})
        if isinstance(a, ExistsT):
            body = subst_term_var(a.body, a.name, tvar(fresh))
            wit = p(witness_term=tvar(fresh))
        else:
            body = subst_world_var(a.body, a.name, wvar(fresh))
            wit = p(witness_world=wvar(fresh))
        core = identity_expansion(body, w, gamma)
        rnode = build("existsR", Sequent(gamma, (Judgement(body, w),), j), wit, [core])
        return build("existsL", seq, p(principal=0, fresh=fresh), [rnode])
    if isinstance(a, At):
        core = identity_expansion(a.body, a.world, gamma)
        rnode = build("atR", Sequent(gamma, (Judgement(a.body, a.world),), j),
                      EMPTY, [core])
        return build("atL", seq, p(principal=0), [rnode])
    if isinstance(a, Down):
        body = subst_world_var(a.body, a.name, w)
        core = identity_expansion(body, w, gamma)
        rnode = build("downR", Sequent(gamma, (Judgement(body, w),), j),
                      EMPTY, [core])
        return build("downL", seq, p(principal=0), [rnode])
    raise CheckError(f"identity expansion: unsupported formula {a!r}")


# ---------------------------------------------------------------------------
# Structural transformers (replay-based)


def _rename_world(w: World, ren: dict[str, str]) -> World:
    from .worlds import subst_world
    for old, new in ren.items():
        if old in w.free_vars():
            w = subst_world(w, old, wvar(new))
    return w


def _rename_term(t: Term, ren: dict[str, str]) -> Term:
    if t.kind == "var" and t.name in ren:
        return Term("var", ren[t.name])
    return t


def weaken(d: Derivation, extra: Iterable[Judgement]) -> Derivation:
    """Add unrestricted hypotheses; the result checks whenever `d` does."""
    extra = tuple(extra)
    k = len(extra)
    avoid = set()
    for j in extra:
        avoid |= free_names(j.formula) | j.world.free_vars()

    def go(node: Derivation, conclusion: Sequent,
           tren: dict[str, str], wren: dict[str, str]) -> Derivation:
        payload = node.payload
        if node.rule == "copy" and payload.principal is not None:
            payload = replace(payload, principal=payload.principal + k)
        if payload.witness_world is not None:
            payload = replace(payload, witness_world=_rename_world(payload.witness_world, wren))
        if payload.witness_term is not None:
            payload = replace(payload, witness_term=_rename_term(payload.witness_term, tren))
        tren, wren = dict(tren), dict(wren)
        if node.rule in ("forallR", "existsL") and payload.fresh:
            name = payload.fresh
            is_world = isinstance(
                (conclusion.goal.formula if node.rule == "forallR"
                 else conclusion.delta[payload.principal].formula),
                (ForallW, ExistsW))
            if name in avoid:
                fresh = S._fresh(name, avoid | sequent_free_names(conclusion))
                payload = replace(payload, fresh=fresh)
                (wren if is_world else tren)[name] = fresh
            else:
                (wren if is_world else tren).pop(name, None)
        premises = premises_of(conclusion, node.rule, payload, allow_cut=True)
        kids = tuple(go(sub, seq, tren, wren)
                     for sub, seq in zip(node.premises, premises))
        return Derivation(node.rule, conclusion, payload, kids)

    root = Sequent(extra + d.conclusion.gamma, d.conclusion.delta, d.conclusion.goal)
    return go(d, root, {}, {})


def contract(d: Derivation, i1: int, i2: int) -> Derivation:
    """Merge duplicate unrestricted hypotheses at positions i1 < i2."""
    gamma = d.conclusion.gamma
    if not (0 <= i1 < i2 < len(gamma)):
        raise CheckError("contract: bad indices")
    if not jeq(gamma[i1], gamma[i2]):
        raise CheckError("contract: hypotheses are not equal")

    def remap(i: int) -> int:
        if i == i2:
            return i1
        return i - 1 if i > i2 else i

    def go(node: Derivation, conclusion: Sequent) -> Derivation:
        payload = node.payload
        if node.rule == "copy" and payload.principal is not None:
            payload = replace(payload, principal=remap(payload.principal))
        premises = premises_of(conclusion, node.rule, payload, allow_cut=True)
        kids = tuple(go(sub, seq) for sub, seq in zip(node.premises, premises))
        return Derivation(node.rule, conclusion, payload, kids)

    root = Sequent(gamma[:i2] + gamma[i2 + 1:], d.conclusion.delta, d.conclusion.goal)
    return go(d, root)


def relocate(d: Derivation, u: World) -> Derivation:
    """Shift the linear zone and goal of a derivation by the world `u`.

    Replays the rule skeleton against the shifted root.  Quantifier world
    witnesses that instantiate unrestricted (world-generic) hypotheses are
    composed with `u`; witnesses on the goal side and witnesses mentioning
    locally introduced eigenvariables stay fixed.  The result is re-checked;
    a :class:`CheckError` means the derivation does not relocate.
    """
    con = d.conclusion
    root = Sequent(
        con.gamma,
        tuple(Judgement(j.formula, compose(u, j.world)) for j in con.delta),
        Judgement(con.goal.formula, compose(u, con.goal.world)),
    )

    def flags_of(conclusion: Sequent, rule: str, payload: Payload,
                 dflags: tuple[bool, ...], gflag: bool
                 ) -> list[tuple[tuple[bool, ...], bool]]:
        """Mirror premises_of on 'content still unshifted' provenance flags."""
        i = payload.principal
        if rule == "copy":
            return [(dflags + (True,), gflag)]
        if rule == "tensorR":
            chosen = set(payload.split or ())
            sel = tuple(f for k, f in enumerate(dflags) if k in chosen)
            rest = tuple(f for k, f in enumerate(dflags) if k not in chosen)
            return [(sel, gflag), (rest, gflag)]
        if rule in ("tensorL",):
            return [(dflags[:i] + (dflags[i], dflags[i]) + dflags[i + 1:], gflag)]
        if rule in ("oneL", "bangL"):
            return [(dflags[:i] + dflags[i + 1:], gflag)]
        if rule == "limpR":
            return [(dflags + (gflag,), gflag)]
        if rule == "limpL":
            pool = dflags[:i] + dflags[i + 1:]
            chosen = set(payload.split or ())
            sel = tuple(f for k, f in enumerate(pool) if k in chosen)
            rest = tuple(f for k, f in enumerate(pool) if k not in chosen)
            return [(sel, dflags[i]), (rest + (dflags[i],), gflag)]
        if rule == "withR":
            return [(dflags, gflag), (dflags, gflag)]
        if rule == "oplusL":
            kept = dflags
            return [(kept, gflag), (kept, gflag)]
        if rule == "cut":
            chosen = set(payload.split or ())
            sel = tuple(f for k, f in enumerate(dflags) if k in chosen)
            rest = tuple(f for k, f in enumerate(dflags) if k not in chosen)
            return [(sel, gflag), (rest + (gflag,), gflag)]
        if rule in ("withL", "oplusR", "forallL", "existsL", "atL", "downL"):
            return [(dflags, gflag)]
        if rule in ("forallR", "existsR", "bangR", "atR", "downR"):
            return [(() if rule == "bangR" else dflags, gflag)]
        if rule in ("init", "oneR", "topR", "zeroL"):
            return []
        raise CheckError(f"relocate: unknown rule {rule!r}")

    def go(node: Derivation, conclusion: Sequent,
           dflags: tuple[bool, ...], gflag: bool, eigens: frozenset[str]
           ) -> Derivation:
        payload = node.payload
        if payload.witness_world is not None:
            shift = False
            if node.rule == "forallL" and payload.principal is not None:
                shift = dflags[payload.principal]
            elif node.rule == "existsR":
                shift = gflag
            if shift and not (payload.witness_world.free_vars() & eigens):
                payload = replace(payload, witness_world=compose(u, payload.witness_world))
        if node.rule in ("forallR", "existsL") and payload.fresh:
            eigens = eigens | {payload.fresh}
        premises = premises_of(conclusion, node.rule, payload, allow_cut=True)
        flagged = flags_of(conclusion, node.rule, payload, dflags, gflag)
        kids = tuple(
            go(sub, seq, df, gf, eigens)
            for sub, seq, (df, gf) in zip(node.premises, premises, flagged)
        )
        return Derivation(node.rule, conclusion, payload, kids)

    out = go(d, root, tuple(False for _ in con.delta), False, frozenset())
    check_derivation(out, allow_cut=True)
    return out


# ---------------------------------------------------------------------------
# Serialization


def judgement_to_json(j: Judgement) -> dict:
    return {"formula": format_formula(j.formula), "world": format_world(j.world)}


def judgement_from_json(obj: dict) -> Judgement:
    return Judgement(parse_formula(obj["formula"]), parse_world(obj["world"]))


def sequent_to_json(seq: Sequent) -> dict:
    return {
        "gamma": [judgement_to_json(j) for j in seq.gamma],
        "delta": [judgement_to_json(j) for j in seq.delta],
        "goal": judgement_to_json(seq.goal),
    }


def sequent_from_json(obj: dict) -> Sequent:
    return Sequent(
        tuple(judgement_from_json(j) for j in obj["gamma"]),
        tuple(judgement_from_json(j) for j in obj["delta"]),
        judgement_from_json(obj["goal"]),
    )


def _payload_to_json(p: Payload) -> dict:
    out: dict = {}
    if p.principal is not None:
        out["principal"] = p.principal
    if p.split is not None:
        out["split"] = list(p.split)
    if p.side is not None:
        out["side"] = p.side
    if p.fresh is not None:
        out["fresh"] = p.fresh
    if p.witness_term is not None:
        out["witness_term"] = {"kind": p.witness_term.kind, "name": p.witness_term.name}
    if p.witness_world is not None:
        out["witness_world"] = format_world(p.witness_world)
    if p.cut is not None:
        out["cut"] = judgement_to_json(p.cut)
    return out


def _payload_from_json(obj: dict) -> Payload:
    wt = obj.get("witness_term")
    return Payload(
        principal=obj.get("principal"),
        split=tuple(obj["split"]) if "split" in obj else None,
        side=obj.get("side"),
        fresh=obj.get("fresh"),
        witness_term=Term(wt["kind"], wt["name"]) if wt else None,
        witness_world=parse_world(obj["witness_world"]) if "witness_world" in obj else None,
        cut=judgement_from_json(obj["cut"]) if "cut" in obj else None,
    )


def _node_to_json(d: Derivation) -> dict:
    return {
        "rule": d.rule,
        "payload": _payload_to_json(d.payload),
        "premises": [_node_to_json(p) for p in d.premises],
    }


def _node_from_json(obj: dict):
    return (obj["rule"], _payload_from_json(obj.get("payload", {})),
            [_node_from_json(p) for p in obj.get("premises", [])])


def certificate_to_json(
    derivations: Iterable[tuple[str, Derivation]],
    signature: dict[str, int] | None = None,
    allow_cut: bool = False,
) -> dict:
    return {
        "header": {
            "format_version": CERT_FORMAT_VERSION,
            "allow_cut": allow_cut,
            "signature": dict(signature or {}),
        },
        "derivations": [
            {
                "name": name,
                "sequent": sequent_to_json(d.conclusion),
                "tree": _node_to_json(d),
            }
            for name, d in derivations
        ],
    }


def certificate_dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def check_certificate(doc: dict) -> list[tuple[str, Derivation]]:
    """Parse, elaborate and kernel-check every derivation in a certificate.

    Returns the named, fully reconstructed derivations; raises
    :class:`CheckError` on the first failure.
    """
    header = doc.get("header", {})
    if header.get("format_version") != CERT_FORMAT_VERSION:
        raise CheckError(
            f"unsupported certificate format_version {header.get('format_version')!r}")
    allow_cut = bool(header.get("allow_cut", False))
    entries = doc.get("derivations")
    if not isinstance(entries, list):
        raise CheckError("certificate has no derivation list")
    out = []
    for entry in entries:
        name = entry.get("name", "?")
        try:
            seq = sequent_from_json(entry["sequent"])
            tree = _node_from_json(entry["tree"])
            d = elaborate(seq, tree, allow_cut)
            check_derivation(d, allow_cut)
        except (CheckError, KeyError, ValueError) as exc:
            raise CheckError(f"derivation {name!r}: {exc}") from exc
        out.append((name, d))
    return out
