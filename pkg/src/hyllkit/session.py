"""Interactive proof sessions shared by the REPL and the HTTP service.

A session wraps a parsed script's goals plus the list of tactic texts
applied so far.  Undo replays the history from the initial goals, so any
state the session reaches is reproducible from (goals, history) alone.
"""

from __future__ import annotations

import secrets
import time
from dataclasses import dataclass, field
from typing import Optional

from . import kernel as K
from .prover import (
    Goal,
    ProofState,
    Script,
    TacticError,
    eval_tactic,
    extract_certificate,
    initial_state,
    parse_script,
    parse_tactic,
    witnesses,
)
from .syntax import (
    Atom,
    Bang,
    Down,
    ExistsT,
    ExistsW,
    ForallT,
    ForallW,
    Limp,
    One,
    Oplus,
    Tensor,
    Top,
    With,
    Zero,
    At,
    format_formula,
)
from .worlds import format_world


class SessionError(ValueError):
    """A request that the session cannot honour."""


class OpenGoals(SessionError):
    """Certificate requested while goals remain open."""


def _fresh_state(script: Script) -> ProofState:
    return initial_state(script.roots, script.signature)


@dataclass
class Session:
    sid: str
    script: Script
    state: ProofState
    history: list[tuple[Optional[int], str]] = field(default_factory=list)
    touched: float = field(default_factory=time.monotonic)

    def touch(self) -> None:
        self.touched = time.monotonic()

    def _target(self, gid: Optional[int]) -> Goal:
        if gid is None:
            goal = self.state.first_open()
            if goal is None:
                raise SessionError("no open goals")
            return goal
        return self.state.goal_by_id(gid)

    def apply(self, text: str, gid: Optional[int] = None) -> None:
        """Apply one tactic expression; on failure the state is unchanged."""
        goal = self._target(gid)
        tac = parse_tactic(text)
        new_state, _ = eval_tactic(self.state, goal.gid, tac)
        self.state = new_state
        self.history.append((gid, text))
        self.touch()

    def undo(self) -> None:
        if not self.history:
            raise SessionError("nothing to undo")
        history = self.history[:-1]
        state = _fresh_state(self.script)
        for gid, text in history:
            goal = state.first_open() if gid is None else state.goal_by_id(gid)
            state, _ = eval_tactic(state, goal.gid, parse_tactic(text))
        self.state = state
        self.history = history
        self.touch()

    def certificate(self, allow_cut: bool = False) -> dict:
        if self.state.goals:
            raise OpenGoals(f"{len(self.state.goals)} goals still open")
        return extract_certificate(self.state, allow_cut)

    def witnesses(self) -> dict[str, str]:
        return witnesses(self.state)


def session_from_text(text: str, path: str = "<session>") -> Session:
    """Build a session from script text; body tactic lines are parsed but
    not run (they are reported so a client can replay them)."""
    script = parse_script(path, text)
    return Session(secrets.token_hex(8), script, _fresh_state(script))


# ---------------------------------------------------------------------------
# Rendering and hints


def judgement_doc(j: K.Judgement) -> dict:
    return {"formula": format_formula(j.formula),
            "world": format_world(j.world)}


def sequent_doc(seq: K.Sequent) -> dict:
    return {"gamma": [judgement_doc(j) for j in seq.gamma],
            "delta": [judgement_doc(j) for j in seq.delta],
            "goal": judgement_doc(seq.goal)}


def goal_doc(goal: Goal) -> dict:
    doc = {"gid": goal.gid, "name": goal.name,
           "family": goal.sequent is None}
    if goal.sequent is None:
        doc["cases"] = [name for name, _ in goal.family]
        doc["pretty"] = f"case family: {', '.join(doc['cases'])}"
    else:
        doc["sequent"] = sequent_doc(goal.sequent)
        doc["pretty"] = str(goal.sequent)
    return doc


def state_doc(session: Session) -> dict:
    return {
        "session": session.sid,
        "goals": [goal_doc(g) for g in session.state.goals],
        "complete": session.state.is_complete(),
        "history": [text for _, text in session.history],
        "witnesses": session.witnesses(),
        "tactics": [text for _, text in session.script.tactic_lines],
    }


_RIGHT_HINTS = {
    Tensor: "tensorR <mask>", One: "oneR", Limp: "limpR", With: "withR",
    Top: "topR", Oplus: "oplusR1 / oplusR2", Bang: "bangR",
    ForallT: "forallR", ExistsT: "existsR <term>", ForallW: "forallR",
    ExistsW: "existsR <world>", At: "atR", Down: "downR",
}
_LEFT_HINTS = {
    Tensor: "tensorL", One: "oneL", Limp: "limpL {i} <mask>",
    With: "withL1 {i} / withL2 {i}", Oplus: "oplusL", Zero: "zeroL",
    Bang: "bangL", ForallT: "forallL {i} <term>", ExistsT: "existsL",
    ForallW: "forallL {i} <world>", ExistsW: "existsL", At: "atL",
    Down: "downL",
}


def hint_tactics(goal: Goal) -> list[str]:
    """Plausible tactic shapes for a goal, judging by principal formulas."""
    if goal.sequent is None:
        return ["cases"]
    hints: list[str] = []
    seq = goal.sequent
    g = seq.goal.formula
    if isinstance(g, Atom) and any(
            isinstance(j.formula, Atom) for j in seq.delta):
        hints.append("init")
    kind = _RIGHT_HINTS.get(type(g))
    if kind:
        hints.append(kind)
    for i, j in enumerate(seq.delta):
        kind = _LEFT_HINTS.get(type(j.formula))
        if kind:
            hints.append(kind.format(i=i) if "{i}" in kind else f"{kind} {i}")
    for i in range(len(seq.gamma)):
        hints.append(f"copy {i}")
    hints.append("auto 4")
    return hints


# ---------------------------------------------------------------------------
# Store with idle expiry


class SessionStore:
    def __init__(self, idle_timeout: float = 1800.0):
        self.idle_timeout = idle_timeout
        self._sessions: dict[str, Session] = {}

    def _purge(self) -> None:
        now = time.monotonic()
        dead = [sid for sid, s in self._sessions.items()
                if now - s.touched > self.idle_timeout]
        for sid in dead:
            del self._sessions[sid]

    def add(self, session: Session) -> None:
        self._purge()
        self._sessions[session.sid] = session

    def get(self, sid: str) -> Session:
        self._purge()
        session = self._sessions.get(sid)
        if session is None:
            raise SessionError(f"unknown session {sid!r}")
        session.touch()
        return session

    def drop(self, sid: str) -> None:
        self._sessions.pop(sid, None)
