"""Tactic prover producing kernel-checkable certificates.

The prover is untrusted: it assembles a (rule, payload) skeleton goal by
goal, resolving world/term metavariables (spelled ``?name``) by unification
at ``init`` leaves.  :func:`extract_certificate` replays the skeleton
through the kernel, so nothing here can smuggle in an unsound step.

Tactic scripts (one tactic expression per line, ``--`` comments) drive the
prover; see :func:`parse_script` for the header grammar (model, let, axiom,
goal and family declarations).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace as dc_replace
from typing import Callable, Iterable, Optional

from . import kernel as K
from .kernel import (
    CheckError, Derivation, Judgement, Payload, Sequent, premises_of,
)
from .syntax import (
    Atom, Bang, Down, ExistsT, ExistsW, ForallT, ForallW, At, Formula, Limp,
    One, Oplus, Tensor, Term, Top, With, Zero, alpha_eq,
    apply_bindings_formula, format_formula, free_names, parse_formula,
    subst_term_var, subst_world_var, tvar, _fresh, _KEYWORDS,
)
from .worlds import (
    UnifyFailure, World, apply_bindings as apply_wbind, compose, format_world,
    is_metavar, parse_world, unify_worlds, var as wvar,
)


class TacticError(Exception):
    """Soft failure: the tactic does not apply; the proof state is unchanged."""


class ScriptError(Exception):
    """A script failed to parse or to run (carries a line number)."""


# ---------------------------------------------------------------------------
# Proof state


@dataclass(frozen=True)
class Goal:
    gid: int
    name: str
    sequent: Optional[Sequent]  # None for an unexpanded case family
    family: Optional[tuple[tuple[str, Sequent], ...]] = None


@dataclass(frozen=True)
class ProofState:
    goals: tuple[Goal, ...]
    # closed goal id -> (rule, payload, child goal ids); "cases" uses the
    # pseudo-rule name "cases" and is flattened away at extraction time.
    nodes: dict
    roots: tuple[tuple[str, int], ...]
    root_sequents: dict
    wbind: dict
    tbind: dict
    used_names: frozenset[str]
    counter: int = 0
    signature: dict | None = None
    eigens: frozenset = frozenset()

    def first_open(self) -> Optional[Goal]:
        return self.goals[0] if self.goals else None

    def goal_by_id(self, gid: int) -> Goal:
        for g in self.goals:
            if g.gid == gid:
                return g
        raise TacticError(f"no open goal {gid}")

    def is_complete(self) -> bool:
        return not self.goals


def _seq_names(seq: Sequent) -> set[str]:
    return K.sequent_free_names(seq)


def initial_state(
    roots: list[tuple[str, object]],
    signature: dict | None = None,
) -> ProofState:
    """Create a proof state.

    Each root is (name, Sequent) for an ordinary goal or
    (name, [(case_name, Sequent), ...]) for a case family.
    """
    goals: list[Goal] = []
    root_ids: list[tuple[str, int]] = []
    root_sequents: dict = {}
    used: set[str] = set()
    gid = 0
    for name, target in roots:
        if isinstance(target, Sequent):
            goals.append(Goal(gid, name, target))
            root_sequents[gid] = target
            used |= _seq_names(target)
        else:
            fam = tuple((cname, cseq) for cname, cseq in target)
            goals.append(Goal(gid, name, None, fam))
            for _, cseq in fam:
                used |= _seq_names(cseq)
        root_ids.append((name, gid))
        gid += 1
    return ProofState(
        goals=tuple(goals),
        nodes={},
        roots=tuple(root_ids),
        root_sequents=root_sequents,
        wbind={},
        tbind={},
        used_names=frozenset(used),
        counter=gid,
        signature=dict(signature) if signature else None,
    )


def _apply_bind_judgement(j: Judgement, wb: dict, tb: dict) -> Judgement:
    return Judgement(apply_bindings_formula(j.formula, wb, tb),
                     apply_wbind(j.world, wb))


def _apply_bind_sequent(seq: Sequent, wb: dict, tb: dict) -> Sequent:
    if not wb and not tb:
        return seq
    return Sequent(
        tuple(_apply_bind_judgement(j, wb, tb) for j in seq.gamma),
        tuple(_apply_bind_judgement(j, wb, tb) for j in seq.delta),
        _apply_bind_judgement(seq.goal, wb, tb),
    )


def _with_bindings(state: ProofState, wb: dict, tb: dict) -> ProofState:
    if wb == state.wbind and tb == state.tbind:
        return state
    goals = tuple(
        g if g.sequent is None else dc_replace(g, sequent=_apply_bind_sequent(g.sequent, wb, tb))
        for g in state.goals
    )
    return dc_replace(state, goals=goals, wbind=dict(wb), tbind=dict(tb))


# ---------------------------------------------------------------------------
# Term unification (first-order, constants and metavariables)


def unify_terms(a: Term, b: Term, tbind: dict) -> Optional[dict]:
    def chase(t: Term) -> Term:
        while t.kind == "meta" and t.name in tbind:
            t = tbind[t.name]
        return t

    a, b = chase(a), chase(b)
    if a == b:
        return tbind
    if a.kind == "meta":
        return {**tbind, a.name: b}
    if b.kind == "meta":
        return {**tbind, b.name: a}
    return None


def unify_atoms(a: Atom, b: Atom, wb: dict, tb: dict,
                wa: World, wbw: World) -> Optional[tuple[dict, dict]]:
    """Unify two atomic judgements (formulas and worlds)."""
    if a.pred != b.pred or len(a.args) != len(b.args):
        return None
    for ta, tbm in zip(a.args, b.args):
        res = unify_terms(ta, tbm, tb)
        if res is None:
            return None
        tb = res
    wres = unify_worlds(wa, wbw, wb)
    if isinstance(wres, UnifyFailure):
        return None
    return wres, tb


# ---------------------------------------------------------------------------
# Primitive tactics


_PRINCIPAL_CLASS = {
    "tensorL": Tensor, "oneL": One, "limpL": Limp, "zeroL": Zero,
    "withL": With, "oplusL": Oplus, "forallL": (ForallT, ForallW),
    "existsL": (ExistsT, ExistsW), "bangL": Bang, "atL": At, "downL": Down,
}


def _resolve_principal(seq: Sequent, rule: str, given: Optional[int]) -> int:
    cls = _PRINCIPAL_CLASS[rule]
    if given is not None:
        return given
    hits = [i for i, j in enumerate(seq.delta) if isinstance(j.formula, cls)]
    if not hits:
        raise TacticError(f"{rule}: no hypothesis with the right shape")
    if len(hits) > 1:
        raise TacticError(
            f"{rule}: AmbiguousPrincipal, candidates {hits}; give an index")
    return hits[0]


def _close_goal(state: ProofState, goal: Goal, rule: str, payload: Payload,
                premises: list[Sequent], names: Iterable[str] = ()
                ) -> tuple[ProofState, list[int]]:
    """Replace `goal` by the premise goals (in place, preserving order)."""
    nodes = dict(state.nodes)
    counter = state.counter
    child_goals: list[Goal] = []
    for k, seq in enumerate(premises):
        child_goals.append(Goal(counter, f"{goal.name}.{k + 1}", seq))
        counter += 1
    nodes[goal.gid] = (rule, payload, tuple(g.gid for g in child_goals))
    idx = next(i for i, g in enumerate(state.goals) if g.gid == goal.gid)
    goals = state.goals[:idx] + tuple(child_goals) + state.goals[idx + 1:]
    new_used = state.used_names | set(names)
    for seq in premises:
        new_used |= _seq_names(seq)
    eigens = state.eigens
    if payload.fresh:
        eigens = eigens | {payload.fresh}
    st = dc_replace(state, goals=goals, nodes=nodes, counter=counter,
                    used_names=frozenset(new_used), eigens=eigens)
    return st, [g.gid for g in child_goals]


def _fresh_name(state: ProofState, hint: str) -> str:
    base = hint if hint and not hint.startswith("$") and not hint.startswith("?") else "x"
    return _fresh(base, set(state.used_names) | _KEYWORDS)


def _fresh_meta(state: ProofState, hint: str, counter_bump: int = 0) -> tuple[str, ProofState]:
    n = state.counter
    name = f"?{hint}{n}"
    while name in state.used_names:
        n += 1
        name = f"?{hint}{n}"
    st = dc_replace(state, counter=n + 1,
                    used_names=state.used_names | {name})
    return name, st


def apply_primitive(state: ProofState, gid: int, rule: str,
                    payload: Payload) -> tuple[ProofState, list[int]]:
    goal = state.goal_by_id(gid)
    if goal.sequent is None:
        raise TacticError("this goal is a case family; use 'cases' first")
    seq = goal.sequent

    if rule == "init":
        if len(seq.delta) != 1:
            raise TacticError("init: need exactly one linear hypothesis")
        hyp, want = seq.delta[0], seq.goal
        if not isinstance(hyp.formula, Atom) or not isinstance(want.formula, Atom):
            raise TacticError("init: both sides must be atomic")
        res = unify_atoms(hyp.formula, want.formula, state.wbind, state.tbind,
                          hyp.world, want.world)
        if res is None:
            raise TacticError(f"init: cannot unify {hyp} with {want}")
        wb, tb = res
        state = _with_bindings(state, wb, tb)
        goal = state.goal_by_id(gid)
        return _close_goal(state, goal, "init", K.EMPTY, [])

    try:
        premises = premises_of(seq, rule, payload, allow_cut=True)
    except CheckError as exc:
        raise TacticError(str(exc)) from exc
    names = [payload.fresh] if payload.fresh else []
    return _close_goal(state, goal, rule, payload, premises, names)


def expand_cases(state: ProofState, gid: int) -> tuple[ProofState, list[int]]:
    goal = state.goal_by_id(gid)
    if goal.family is None:
        raise TacticError("cases: goal is not a case family")
    nodes = dict(state.nodes)
    counter = state.counter
    children: list[Goal] = []
    roots = list(state.roots)
    root_sequents = dict(state.root_sequents)
    pos = next(i for i, (n, g) in enumerate(roots) if g == gid)
    new_roots = []
    for cname, cseq in goal.family:
        child = Goal(counter, cname, cseq)
        children.append(child)
        root_sequents[counter] = cseq
        new_roots.append((cname, counter))
        counter += 1
    roots[pos:pos + 1] = new_roots
    nodes[gid] = ("cases", K.EMPTY, tuple(c.gid for c in children))
    idx = next(i for i, g in enumerate(state.goals) if g.gid == gid)
    goals = state.goals[:idx] + tuple(children) + state.goals[idx + 1:]
    st = dc_replace(state, goals=goals, nodes=nodes, counter=counter,
                    roots=tuple(roots), root_sequents=root_sequents)
    return st, [c.gid for c in children]


# ---------------------------------------------------------------------------
# Automatic proof search (bounded depth-first; depth counts choices only)


_INVERTIBLE_GOAL = (Top, Limp, With, ForallT, ForallW, At, Down)
_INVERTIBLE_HYP = (Zero, One, Tensor, Bang, ExistsT, ExistsW, At, Down, Oplus)

AUTO_DEFAULT_DEPTH = 8


class _Search:
    """Deterministic bounded DFS over a single goal sequent."""

    def __init__(self, state: ProofState):
        self.used = set(state.used_names) | _KEYWORDS
        self.counter = state.counter

    def fresh_eigen(self, hint: str) -> str:
        base = hint if hint and not hint.startswith("$") else "x"
        name = _fresh(base, self.used)
        self.used.add(name)
        return name

    def fresh_meta(self, hint: str) -> str:
        name = f"?{hint}{self.counter}"
        self.counter += 1
        while name in self.used:
            name = f"?{hint}{self.counter}"
            self.counter += 1
        self.used.add(name)
        return name

    def search(self, seq: Sequent, wb: dict, tb: dict, depth: int):
        """Return (skeleton, wb, tb) or None."""
        seq = _apply_bind_sequent(seq, wb, tb)
        goal = seq.goal.formula

        # --- closing rules ------------------------------------------------
        if isinstance(goal, Top):
            return ("topR", K.EMPTY, []), wb, tb
        for i, j in enumerate(seq.delta):
            if isinstance(j.formula, Zero):
                return ("zeroL", Payload(principal=i), []), wb, tb

        # --- invertible hypothesis rules ----------------------------------
        for i, j in enumerate(seq.delta):
            f = j.formula
            if isinstance(f, One):
                return self._one(seq, "oneL", Payload(principal=i), wb, tb, depth)
            if isinstance(f, Tensor):
                return self._one(seq, "tensorL", Payload(principal=i), wb, tb, depth)
            if isinstance(f, Bang):
                return self._one(seq, "bangL", Payload(principal=i), wb, tb, depth)
            if isinstance(f, (ExistsT, ExistsW)):
                fresh = self.fresh_eigen(f.name)
                return self._one(seq, "existsL", Payload(principal=i, fresh=fresh), wb, tb, depth)
            if isinstance(f, At):
                return self._one(seq, "atL", Payload(principal=i), wb, tb, depth)
            if isinstance(f, Down):
                return self._one(seq, "downL", Payload(principal=i), wb, tb, depth)
        for i, j in enumerate(seq.delta):
            if isinstance(j.formula, Oplus):
                return self._many(seq, "oplusL", Payload(principal=i), wb, tb, depth)

        # --- invertible goal rules ----------------------------------------
        if isinstance(goal, Limp):
            return self._one(seq, "limpR", K.EMPTY, wb, tb, depth)
        if isinstance(goal, With):
            return self._many(seq, "withR", K.EMPTY, wb, tb, depth)
        if isinstance(goal, (ForallT, ForallW)):
            fresh = self.fresh_eigen(goal.name)
            return self._one(seq, "forallR", Payload(fresh=fresh), wb, tb, depth)
        if isinstance(goal, At):
            return self._one(seq, "atR", K.EMPTY, wb, tb, depth)
        if isinstance(goal, Down):
            return self._one(seq, "downR", K.EMPTY, wb, tb, depth)

        # --- choices -------------------------------------------------------
        if depth <= 0:
            return None

        if isinstance(goal, Atom) and len(seq.delta) == 1 and \
                isinstance(seq.delta[0].formula, Atom):
            res = unify_atoms(seq.delta[0].formula, goal, wb, tb,
                              seq.delta[0].world, seq.goal.world)
            if res is not None:
                return ("init", K.EMPTY, []), res[0], res[1]

        if isinstance(goal, One) and not seq.delta:
            return ("oneR", K.EMPTY, []), wb, tb

        if isinstance(goal, Oplus):
            for side in (1, 2):
                out = self._one(seq, "oplusR", Payload(side=side), wb, tb, depth - 1)
                if out:
                    return out

        if isinstance(goal, Bang) and not seq.delta:
            out = self._one(seq, "bangR", K.EMPTY, wb, tb, depth - 1)
            if out:
                return out

        if isinstance(goal, (ExistsT, ExistsW)):
            if isinstance(goal, ExistsT):
                payload = Payload(witness_term=Term("meta", self.fresh_meta("t")))
            else:
                payload = Payload(witness_world=wvar(self.fresh_meta("w")))
            out = self._one(seq, "existsR", payload, wb, tb, depth - 1)
            if out:
                return out

        if isinstance(goal, Tensor):
            n = len(seq.delta)
            for mask in range(1 << n):
                split = tuple(i for i in range(n) if mask & (1 << i))
                out = self._many(seq, "tensorR", Payload(split=split), wb, tb, depth - 1)
                if out:
                    return out

        for i, j in enumerate(seq.delta):
            f = j.formula
            if isinstance(f, With):
                for side in (1, 2):
                    out = self._one(seq, "withL", Payload(principal=i, side=side),
                                    wb, tb, depth - 1)
                    if out:
                        return out
            elif isinstance(f, (ForallT, ForallW)):
                if isinstance(f, ForallT):
                    payload = Payload(principal=i,
                                      witness_term=Term("meta", self.fresh_meta("t")))
                else:
                    payload = Payload(principal=i,
                                      witness_world=wvar(self.fresh_meta("w")))
                out = self._one(seq, "forallL", payload, wb, tb, depth - 1)
                if out:
                    return out
            elif isinstance(f, Limp):
                n = len(seq.delta) - 1
                for mask in range(1 << n):
                    split = tuple(k for k in range(n) if mask & (1 << k))
                    out = self._many(seq, "limpL", Payload(principal=i, split=split),
                                     wb, tb, depth - 1)
                    if out:
                        return out

        for i in range(len(seq.gamma)):
            out = self._one(seq, "copy", Payload(principal=i), wb, tb, depth - 1)
            if out:
                return out

        return None

    def _expand(self, seq: Sequent, rule: str, payload: Payload):
        try:
            return premises_of(seq, rule, payload)
        except CheckError:
            return None

    def _one(self, seq, rule, payload, wb, tb, depth):
        premises = self._expand(seq, rule, payload)
        if premises is None:
            return None
        return self._chain(seq, rule, payload, premises, wb, tb, depth)

    def _many(self, seq, rule, payload, wb, tb, depth):
        premises = self._expand(seq, rule, payload)
        if premises is None:
            return None
        return self._chain(seq, rule, payload, premises, wb, tb, depth)

    def _chain(self, seq, rule, payload, premises, wb, tb, depth):
        kids = []
        for sub in premises:
            out = self.search(sub, wb, tb, depth)
            if out is None:
                return None
            skel, wb, tb = out
            kids.append(skel)
        return (rule, payload, kids), wb, tb


def auto_tactic(state: ProofState, gid: int,
                depth: int = AUTO_DEFAULT_DEPTH) -> tuple[ProofState, list[int]]:
    goal = state.goal_by_id(gid)
    if goal.sequent is None:
        raise TacticError("auto: goal is a case family; use 'cases' first")
    engine = _Search(state)
    out = engine.search(goal.sequent, dict(state.wbind), dict(state.tbind), depth)
    if out is None:
        raise TacticError(f"auto: no proof within depth {depth}")
    skel, wb, tb = out
    state = dc_replace(state, counter=max(state.counter, engine.counter),
                       used_names=frozenset(engine.used - _KEYWORDS))
    state = _with_bindings(state, wb, tb)

    # merge the found skeleton into the proof state
    def install(st: ProofState, g: Goal, sk) -> ProofState:
        rule, payload, kids = sk
        seq = st.goal_by_id(g.gid).sequent
        try:
            premises = premises_of(seq, rule, payload)
        except CheckError as exc:
            raise TacticError(f"auto: replay failed: {exc}") from exc
        st, gids = _close_goal(st, st.goal_by_id(g.gid), rule, payload, premises,
                               [payload.fresh] if payload.fresh else [])
        for child_gid, child_sk in zip(gids, kids):
            st = install(st, st.goal_by_id(child_gid), child_sk)
        return st

    # the skeleton was found against the bindings-applied sequent, but init
    # leaves may have extended the bindings, so re-apply them first
    state = _with_bindings(state, dict(wb), dict(tb))
    state = install(state, state.goal_by_id(gid), skel)
    return state, []


# ---------------------------------------------------------------------------
# Certificate extraction


class UnresolvedMetavariable(Exception):
    pass


def _resolved_payload(p: Payload, wb: dict, tb: dict) -> Payload:
    out = p
    if p.witness_world is not None:
        w = apply_wbind(p.witness_world, wb)
        if any(is_metavar(n) for n in w.free_vars()):
            raise UnresolvedMetavariable(f"world witness {format_world(w)}")
        out = dc_replace(out, witness_world=w)
    if p.witness_term is not None:
        t = p.witness_term
        while t.kind == "meta" and t.name in tb:
            t = tb[t.name]
        if t.kind == "meta":
            raise UnresolvedMetavariable(f"term witness {t.name}")
        out = dc_replace(out, witness_term=t)
    if p.cut is not None:
        out = dc_replace(out, cut=_apply_bind_judgement(p.cut, wb, tb))
    return out


def extract_skeletons(state: ProofState) -> list[tuple[str, Sequent, tuple]]:
    """Resolve bindings and return (name, root sequent, skeleton) per root."""
    if state.goals:
        open_names = ", ".join(g.name for g in state.goals)
        raise TacticError(f"proof is not complete; open goals: {open_names}")
    wb, tb = state.wbind, state.tbind

    def skel_of(gid: int):
        rule, payload, kids = state.nodes[gid]
        return (rule, _resolved_payload(payload, wb, tb),
                [skel_of(k) for k in kids])

    out = []
    for name, gid in state.roots:
        rule, payload, kids = state.nodes[gid]
        if rule == "cases":
            raise TacticError("internal error: unexpanded family at a root")
        root = _apply_bind_sequent(state.root_sequents[gid], wb, tb)
        for j in root.gamma + root.delta + (root.goal,):
            for n in j.world.free_vars() | free_names(j.formula):
                if is_metavar(n):
                    raise UnresolvedMetavariable(
                        f"{n} is unresolved in root goal {name!r}")
        out.append((name, root, skel_of(gid)))
    return out


def extract_certificate(state: ProofState, allow_cut: bool = False) -> dict:
    """Produce a certificate document; every derivation is kernel-checked."""
    derivs = []
    for name, root, skel in extract_skeletons(state):
        d = K.elaborate(root, skel, allow_cut)
        K.check_derivation(d, allow_cut)
        derivs.append((name, d))
    return K.certificate_to_json(derivs, state.signature, allow_cut)


def witnesses(state: ProofState) -> dict[str, str]:
    """Human-readable view of the resolved metavariable bindings."""
    out = {}
    for name, w in state.wbind.items():
        out[name] = format_world(apply_wbind(w, state.wbind))
    for name, t in state.tbind.items():
        v = t
        while v.kind == "meta" and v.name in state.tbind:
            v = state.tbind[v.name]
        out[name] = str(v)
    return out


# ---------------------------------------------------------------------------
# Tactic expression parsing


@dataclass(frozen=True)
class Tactic:
    kind: str
    payload: tuple = ()


def parse_tactic(text: str) -> Tactic:
    tokens = _tokenize_tactic(text)
    tac, pos = _parse_alt(tokens, 0)
    if pos != len(tokens):
        raise ScriptError(f"trailing tokens in tactic: {' '.join(tokens[pos:])}")
    return tac


def _tokenize_tactic(text: str) -> list[str]:
    out = []
    for raw in re.findall(r"\(|\)|;|\||[^\s();|]+", text):
        out.append(raw)
    return out


def _parse_alt(tokens, pos):
    left, pos = _parse_seq(tokens, pos)
    while pos < len(tokens) and tokens[pos] == "|":
        right, pos = _parse_seq(tokens, pos + 1)
        left = Tactic("or", (left, right))
    return left, pos


def _parse_seq(tokens, pos):
    left, pos = _parse_atom_tac(tokens, pos)
    while pos < len(tokens) and tokens[pos] == ";":
        right, pos = _parse_atom_tac(tokens, pos + 1)
        left = Tactic("then", (left, right))
    return left, pos


_PRIM_ARITY = {
    # name: (takes_principal, takes_split, takes_witness, takes_fresh)
    "init": (), "oneR": (), "topR": (), "limpR": (), "withR": (),
    "bangR": (), "atR": (), "downR": (), "oplusR1": (), "oplusR2": (),
    "tensorL": ("principal?",), "oneL": ("principal?",),
    "zeroL": ("principal?",), "oplusL": ("principal?",),
    "bangL": ("principal?",), "atL": ("principal?",), "downL": ("principal?",),
    "withL1": ("principal?",), "withL2": ("principal?",),
    "existsL": ("principal?", "fresh?"),
    "forallR": ("fresh?",),
    "copy": ("principal",),
    "tensorR": ("split",),
    "limpL": ("principal", "split"),
    "forallL": ("principal", "witness"),
    "existsR": ("witness",),
}


def _parse_atom_tac(tokens, pos):
    if pos >= len(tokens):
        raise ScriptError("expected a tactic")
    tok = tokens[pos]
    if tok == "(":
        inner, pos = _parse_alt(tokens, pos + 1)
        if pos >= len(tokens) or tokens[pos] != ")":
            raise ScriptError("expected ')' in tactic")
        return inner, pos + 1
    if tok == "try":
        inner, pos = _parse_atom_tac(tokens, pos + 1)
        return Tactic("try", (inner,)), pos
    if tok == "repeat":
        inner, pos = _parse_atom_tac(tokens, pos + 1)
        return Tactic("repeat", (inner,)), pos
    if tok == "auto":
        depth = AUTO_DEFAULT_DEPTH
        if pos + 1 < len(tokens) and tokens[pos + 1].isdigit():
            depth = int(tokens[pos + 1])
            pos += 1
        return Tactic("auto", (depth,)), pos + 1
    if tok == "cases":
        return Tactic("cases", ()), pos + 1
    if tok == "skip":
        return Tactic("skip", ()), pos + 1
    if tok not in _PRIM_ARITY:
        raise ScriptError(f"unknown tactic {tok!r}")
    spec = _PRIM_ARITY[tok]
    args: list[str] = []
    pos += 1
    stop = {")", ";", "|"}
    while pos < len(tokens) and tokens[pos] not in stop and len(args) < len(spec):
        args.append(tokens[pos])
        pos += 1
    return Tactic("prim", (tok, tuple(args))), pos


# ---------------------------------------------------------------------------
# Tactic evaluation


def _parse_mask(text: str) -> tuple[int, ...]:
    if text in (".", "-"):
        return ()
    try:
        return tuple(int(p) for p in text.split(",") if p != "")
    except ValueError as exc:
        raise TacticError(f"bad split {text!r}") from exc


def _prim_payload(state: ProofState, seq: Sequent, name: str,
                  args: tuple[str, ...]) -> tuple[str, Payload, ProofState]:
    rule = name
    payload = K.EMPTY
    ap = list(args)

    def next_arg(optional=False) -> Optional[str]:
        return ap.pop(0) if ap else (None if optional else None)

    if name in ("withL1", "withL2"):
        rule = "withL"
        side = 1 if name == "withL1" else 2
        i = _resolve_principal(seq, rule, int(ap[0]) if ap else None)
        payload = Payload(principal=i, side=side)
    elif name in ("oplusR1", "oplusR2"):
        rule = "oplusR"
        payload = Payload(side=1 if name == "oplusR1" else 2)
    elif name in ("tensorL", "oneL", "zeroL", "oplusL", "bangL", "atL", "downL"):
        i = _resolve_principal(seq, name, int(ap[0]) if ap else None)
        payload = Payload(principal=i)
    elif name == "existsL":
        i = _resolve_principal(seq, name, int(ap[0]) if ap else None)
        f = seq.delta[i].formula
        hint = ap[1] if len(ap) > 1 else getattr(f, "name", "x")
        fresh = _fresh_name(state, hint)
        payload = Payload(principal=i, fresh=fresh)
    elif name == "forallR":
        goal = seq.goal.formula
        hint = ap[0] if ap else getattr(goal, "name", "x")
        fresh = _fresh_name(state, hint)
        payload = Payload(fresh=fresh)
    elif name == "copy":
        if not ap:
            raise TacticError("copy: unrestricted-zone index required")
        payload = Payload(principal=int(ap[0]))
    elif name == "tensorR":
        if not ap:
            raise TacticError("tensorR: context split required (e.g. 0,2 or .)")
        payload = Payload(split=_parse_mask(ap[0]))
    elif name == "limpL":
        if not ap:
            raise TacticError("limpL: principal index required")
        i = int(ap[0])
        if len(ap) < 2:
            raise TacticError("limpL: context split required (e.g. 0,2 or .)")
        payload = Payload(principal=i, split=_parse_mask(ap[1]))
    elif name == "forallL":
        if len(ap) < 2:
            raise TacticError("forallL: index and witness required")
        i = int(ap[0])
        payload = Payload(principal=i, **_witness(state, seq.delta[i].formula, ap[1]))
    elif name == "existsR":
        if not ap:
            raise TacticError("existsR: witness required")
        payload = Payload(**_witness(state, seq.goal.formula, ap[0]))
    return rule, payload, state


def _witness(state: ProofState, quantifier: Formula, text: str) -> dict:
    if isinstance(quantifier, (ForallW, ExistsW)):
        try:
            return {"witness_world": parse_world(text)}
        except ValueError as exc:
            raise TacticError(f"bad world witness {text!r}: {exc}") from exc
    if isinstance(quantifier, (ForallT, ExistsT)):
        if text.startswith("?"):
            return {"witness_term": Term("meta", text)}
        if text in state.eigens:
            return {"witness_term": Term("var", text)}
        return {"witness_term": Term("const", text)}
    raise TacticError("witness given but the principal is not a quantifier")


def eval_tactic(state: ProofState, gid: int, tac: Tactic
                ) -> tuple[ProofState, list[int]]:
    if tac.kind == "prim":
        name, args = tac.payload
        goal = state.goal_by_id(gid)
        if goal.sequent is None:
            raise TacticError("goal is a case family; use 'cases' first")
        rule, payload, state = _prim_payload(state, goal.sequent, name, args)
        return apply_primitive(state, gid, rule, payload)
    if tac.kind == "auto":
        return auto_tactic(state, gid, tac.payload[0])
    if tac.kind == "cases":
        return expand_cases(state, gid)
    if tac.kind == "skip":
        return state, [gid]
    if tac.kind == "then":
        t1, t2 = tac.payload
        state, gids = eval_tactic(state, gid, t1)
        out: list[int] = []
        for g in gids:
            state, sub = eval_tactic(state, g, t2)
            out.extend(sub)
        return state, out
    if tac.kind == "or":
        t1, t2 = tac.payload
        try:
            return eval_tactic(state, gid, t1)
        except TacticError:
            return eval_tactic(state, gid, t2)
    if tac.kind == "try":
        (t1,) = tac.payload
        try:
            return eval_tactic(state, gid, t1)
        except TacticError:
            return state, [gid]
    if tac.kind == "repeat":
        (t1,) = tac.payload
        frontier = [gid]
        for _ in range(10000):
            progressed = False
            next_frontier: list[int] = []
            for g in frontier:
                try:
                    state, subs = eval_tactic(state, g, t1)
                    progressed = True
                    next_frontier.extend(subs)
                except TacticError:
                    next_frontier.append(g)
            frontier = next_frontier
            if not progressed:
                return state, frontier
        raise TacticError("repeat: too many iterations")
    raise TacticError(f"unknown tactic kind {tac.kind!r}")


def run_tactic_text(state: ProofState, text: str,
                    gid: Optional[int] = None) -> ProofState:
    """Apply a tactic expression to a goal (default: the first open goal)."""
    goal = state.first_open() if gid is None else state.goal_by_id(gid)
    if goal is None:
        raise TacticError("no open goals")
    tac = parse_tactic(text)
    state, _ = eval_tactic(state, goal.gid, tac)
    return state


# ---------------------------------------------------------------------------
# Proof scripts


@dataclass
class Script:
    path: str
    model_path: Optional[str]
    roots: list
    signature: dict | None
    tactic_lines: list[tuple[int, str]]


def _split_judgement(text: str) -> tuple[str, str]:
    """Split 'formula @ world' on the last top-level single '@'."""
    depth = 0
    candidates = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        elif c == "@" and depth == 0:
            if i + 1 < len(text) and text[i + 1] == "@":
                i += 2
                continue
            if i > 0 and text[i - 1] == "@":
                i += 1
                continue
            candidates.append(i)
        i += 1
    if not candidates:
        raise ScriptError(f"judgement needs '@ world': {text!r}")
    cut = candidates[-1]
    return text[:cut].strip(), text[cut + 1:].strip()


def _split_top(text: str, sep: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [p.strip() for p in out]


class MacroEnv:
    """Textual macro expansion for goal formulas.

    Macros map a name (and argument strings) to formula text; expansion
    repeats until no macro names remain, so macros may mention each other.
    """

    def __init__(self):
        self.zero: dict[str, str] = {}
        self.callable: dict[str, Callable[[list[str]], str]] = {}

    def define(self, name: str, text: str) -> None:
        self.zero[name] = text

    def define_fn(self, name: str, fn: Callable[[list[str]], str]) -> None:
        self.callable[name] = fn

    def expand(self, text: str) -> str:
        for _ in range(64):
            new = self._expand_once(text)
            if new == text:
                return text
            text = new
        raise ScriptError("macro expansion did not terminate")

    def _expand_once(self, text: str) -> str:
        out: list[str] = []
        i, n = 0, len(text)
        while i < n:
            m = re.match(r"[A-Za-z_]\w*", text[i:])
            if not m:
                out.append(text[i])
                i += 1
                continue
            name = m.group(0)
            j = i + len(name)
            if i > 0 and (text[i - 1].isalnum() or text[i - 1] in "_?$"):
                out.append(text[i:j])
                i = j
                continue
            k = j
            while k < n and text[k].isspace():
                k += 1
            if name in self.callable and k < n and text[k] == "(":
                depth, e = 0, k
                while e < n:
                    if text[e] == "(":
                        depth += 1
                    elif text[e] == ")":
                        depth -= 1
                        if depth == 0:
                            break
                    e += 1
                if depth != 0:
                    raise ScriptError(f"unbalanced parentheses in {name}(...) call")
                args = [a.strip() for a in _split_top(text[k + 1:e], ",")]
                out.append("(" + self.callable[name](args) + ")")
                i = e + 1
                continue
            if name in self.zero and not (k < n and text[k] == "("):
                out.append("(" + self.zero[name] + ")")
                i = j
                continue
            out.append(text[i:j])
            i = j
        return "".join(out)


def builtin_macros(env: MacroEnv) -> None:
    env.define_fn("delay", lambda a: _delay_text(a))
    env.define_fn("boxm", lambda a: f"dn uu. allw ww. (({a[0]}) @@ uu.ww)")
    env.define_fn("diam", lambda a: f"dn uu. exw ww. (({a[0]}) @@ uu.ww)")
    env.define_fn("dagger", lambda a: f"allw uu. (({a[0]}) @@ uu)")


def _delay_text(args: list[str]) -> str:
    if len(args) != 2:
        raise ScriptError("delay(amount, formula) takes two arguments")
    amount, body = args
    return f"dn uu. (({body}) @@ uu.{amount})"


def parse_script(path: str, text: str, model_env=None) -> Script:
    """Parse a proof script.

    Header lines (before a ``----`` separator):

    * ``model <path>``      load a rule model; its compiled axioms form the
      unrestricted zone and its definitions become formula macros
    * ``let <name> = <formula text>``   zero-argument macro
    * ``axiom <formula> @ <world>``     extra unrestricted hypothesis
    * ``family <var> <lo>..<hi>``       the next goal becomes a case family
    * ``goal [name :] <delta> |- <formula> @ <world>``  (delta: judgements
      separated by top-level commas, or ``.`` for empty)

    Body lines are tactic expressions applied to the first open goal.
    """
    from . import biomodel  # local import to avoid a cycle

    env = MacroEnv()
    builtin_macros(env)
    model = None
    model_path = None
    gamma: list[Judgement] = []
    signature = None
    roots: list = []
    pending_family: Optional[tuple[str, int, int]] = None
    tactic_lines: list[tuple[int, str]] = []
    in_body = False

    import os
    base = os.path.dirname(os.path.abspath(path)) if path else "."

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if set(raw.strip()) == {"-"} and len(raw.strip()) >= 4:
            in_body = True
            continue
        line = raw.split("--", 1)[0].rstrip()
        if not line.strip():
            continue
        if in_body:
            tactic_lines.append((lineno, line.strip()))
            continue
        stripped = line.strip()
        try:
            if stripped.startswith("model "):
                model_path = stripped[len("model "):].strip()
                candidate = model_path if os.path.isabs(model_path) else \
                    os.path.join(base, model_path)
                if not os.path.exists(candidate):
                    candidate = model_path
                model = biomodel.load_model(candidate)
                model_path = candidate
                gamma.extend(biomodel.compile_system(model))
                signature = biomodel.signature_of(model)
                biomodel.install_macros(env, model)
            elif stripped.startswith("let "):
                name, _, body = stripped[len("let "):].partition("=")
                env.define(name.strip(), body.strip())
            elif stripped.startswith("axiom "):
                ftext, wtext = _split_judgement(stripped[len("axiom "):])
                gamma.append(Judgement(parse_formula(env.expand(ftext)),
                                       parse_world(wtext)))
            elif stripped.startswith("family "):
                m = re.fullmatch(r"family\s+(\w+)\s+(\d+)\s*\.\.\s*(\d+)",
                                 stripped)
                if not m:
                    raise ScriptError("expected: family <var> <lo>..<hi>")
                pending_family = (m.group(1), int(m.group(2)), int(m.group(3)))
            elif stripped.startswith("goal "):
                body = stripped[len("goal "):]
                name = f"goal_{len(roots) + 1}"
                if ":" in body.split("|-", 1)[0]:
                    name, body = body.split(":", 1)
                    name = name.strip()
                    body = body.strip()
                if "|-" not in body:
                    raise ScriptError("goal needs '|-'")
                dtext, gtext = body.split("|-", 1)

                def build_goal(subst: Optional[tuple[str, int]]) -> Sequent:
                    dt, gt = dtext, gtext
                    if subst:
                        fvar, val = subst
                        dt = re.sub(rf"\b{fvar}\b", str(val), dt)
                        gt = re.sub(rf"\b{fvar}\b", str(val), gt)
                    delta = []
                    dt = dt.strip()
                    if dt not in (".", ""):
                        for part in _split_top(dt, ","):
                            ftext, wtext = _split_judgement(part)
                            delta.append(Judgement(
                                parse_formula(env.expand(ftext)),
                                parse_world(wtext)))
                    ftext, wtext = _split_judgement(gt.strip())
                    goal = Judgement(parse_formula(env.expand(ftext)),
                                     parse_world(wtext))
                    return Sequent(tuple(gamma), tuple(delta), goal)

                if pending_family:
                    fvar, lo, hi = pending_family
                    cases = []
                    for v in range(lo, hi + 1):
                        cname = re.sub(rf"\(\s*{fvar}\s*\)", f"_{v}", name)
                        if cname == name:
                            cname = f"{name}_{v}"
                        cases.append((cname, build_goal((fvar, v))))
                    roots.append((name if "(" not in name else
                                  name.split("(")[0], cases))
                    pending_family = None
                else:
                    roots.append((name, build_goal(None)))
            else:
                raise ScriptError(f"unrecognized header line: {stripped!r}")
        except (ScriptError, ValueError) as exc:
            raise ScriptError(f"{path}:{lineno}: {exc}") from exc

    if not roots:
        raise ScriptError(f"{path}: script declares no goal")
    return Script(path, model_path, roots, signature, tactic_lines)


def run_script(script: Script) -> ProofState:
    state = initial_state(script.roots, script.signature)
    for lineno, text in script.tactic_lines:
        goal = state.first_open()
        if goal is None:
            raise ScriptError(
                f"{script.path}:{lineno}: no open goals left but tactics remain")
        try:
            tac = parse_tactic(text)
            state, _ = eval_tactic(state, goal.gid, tac)
        except (TacticError, ScriptError) as exc:
            raise ScriptError(
                f"{script.path}:{lineno}: tactic {text!r} failed on goal "
                f"{goal.name}: {exc}\n  goal was: {goal.sequent}") from exc
    return state


def load_and_run(path: str) -> ProofState:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return run_script(parse_script(path, text))
