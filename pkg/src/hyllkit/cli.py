"""Command-line interface: model checking/compilation, proof running,
certificate checking, the explicit-state oracle, an interactive REPL, and
a local HTTP service for the browser workbench."""

from __future__ import annotations

import json
import os
import sys
from typing import Optional

import click
from pydantic import BaseModel

from . import biomodel, kernel as K
from .prover import ScriptError, TacticError, load_and_run, parse_script
from .session import (
    OpenGoals,
    Session,
    SessionError,
    SessionStore,
    goal_doc,
    hint_tactics,
    session_from_text,
    state_doc,
)


def _fail(message: str, as_json: bool, code: int = 1):
    if as_json:
        click.echo(json.dumps({"error": message}), err=True)
    else:
        click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Hybrid linear-logic toolkit for rule-based state models."""


# ---------------------------------------------------------------------------
# Models


@main.command("check-model")
@click.argument("path", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="structured output")
def check_model(path: str, as_json: bool) -> None:
    """Validate a rule-model file."""
    try:
        model = biomodel.load_model(path)
    except biomodel.ModelError as exc:
        _fail(str(exc), as_json)
    doc = {
        "name": model.name,
        "variables": list(model.variables),
        "rules": len(model.rules),
        "initial": [v if p else f"!{v}" for v, p in model.init],
    }
    if as_json:
        click.echo(json.dumps(doc))
    else:
        click.echo(f"ok: {len(model.variables)} variables, "
                   f"{len(model.rules)} rules")


@main.command("compile")
@click.argument("path", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="structured output")
def compile_cmd(path: str, as_json: bool) -> None:
    """Compile a rule model to its logical axioms and print them."""
    try:
        model = biomodel.load_model(path)
    except biomodel.ModelError as exc:
        _fail(str(exc), as_json)
    if as_json:
        gamma = biomodel.compile_system(model)
        click.echo(json.dumps({
            "variables": list(model.variables),
            "axioms": [K.judgement_to_json(j) for j in gamma],
        }))
    else:
        click.echo(biomodel.compile_dump(model), nl=False)


# ---------------------------------------------------------------------------
# Proving


def _write_certificate(doc: dict, out: str) -> None:
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(K.certificate_dumps(doc))


@main.command("prove")
@click.argument("script", type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), default=None,
              help="certificate file (default: script stem + .cert.json)")
@click.option("--allow-cut", is_flag=True, help="permit cut in the checker")
@click.option("--json", "as_json", is_flag=True, help="structured output")
def prove(script: str, output: Optional[str], allow_cut: bool,
          as_json: bool) -> None:
    """Run a proof script and write a kernel-checked certificate."""
    from .prover import extract_certificate, witnesses

    try:
        state = load_and_run(script)
    except (ScriptError, TacticError, biomodel.ModelError) as exc:
        _fail(str(exc), as_json)
    if state.goals:
        _fail(f"{len(state.goals)} goals remain open after the script",
              as_json)
    try:
        cert = extract_certificate(state, allow_cut)
    except (K.CheckError, TacticError) as exc:
        _fail(str(exc), as_json)
    out = output or os.path.splitext(script)[0] + ".cert.json"
    _write_certificate(cert, out)
    doc = {"certificate": out,
           "derivations": [name for name, _ in state.roots],
           "witnesses": witnesses(state)}
    if as_json:
        click.echo(json.dumps(doc))
    else:
        click.echo(f"proved {', '.join(doc['derivations'])}")
        for k, v in doc["witnesses"].items():
            click.echo(f"  {k} = {v}")
        click.echo(f"certificate written to {out}")


@main.command("auto")
@click.argument("goalfile", type=click.Path(exists=True))
@click.option("--depth", type=int, default=6, show_default=True)
@click.option("-o", "--output", type=click.Path(), default=None)
@click.option("--json", "as_json", is_flag=True, help="structured output")
def auto_cmd(goalfile: str, depth: int, output: Optional[str],
             as_json: bool) -> None:
    """Prove every goal of a script header by bounded automatic search."""
    from .prover import extract_certificate, witnesses

    with open(goalfile, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        session = session_from_text(text, goalfile)
        while session.state.goals:
            goal = session.state.first_open()
            if goal.sequent is None:
                session.apply("cases")
            else:
                session.apply(f"auto {depth}")
    except (ScriptError, TacticError, biomodel.ModelError) as exc:
        _fail(str(exc), as_json)
    cert = extract_certificate(session.state)
    doc = {"witnesses": witnesses(session.state)}
    if output:
        _write_certificate(cert, output)
        doc["certificate"] = output
    if as_json:
        click.echo(json.dumps(doc))
    else:
        click.echo("proved all goals" + (f"; certificate in {output}"
                                         if output else ""))


@main.command("check-cert")
@click.argument("path", type=click.Path(exists=True))
@click.option("--allow-cut", is_flag=True,
              help="accept certificates that use cut")
@click.option("--json", "as_json", is_flag=True, help="structured output")
def check_cert(path: str, allow_cut: bool, as_json: bool) -> None:
    """Kernel-check a certificate file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"unreadable certificate: {exc}", as_json)
    if allow_cut:
        doc.setdefault("header", {})["allow_cut"] = True
    try:
        named = K.check_certificate(doc)
    except K.CheckError as exc:
        _fail(str(exc), as_json)
    if as_json:
        click.echo(json.dumps({"ok": True,
                               "derivations": [n for n, _ in named]}))
    else:
        click.echo(f"ok: {len(named)} derivation(s) check")


# ---------------------------------------------------------------------------
# Oracle


def _parse_state(model, text: str):
    names = [t for t in text.replace(",", " ").split() if t]
    for n in names:
        if n not in model.variables:
            raise biomodel.ModelError(f"unknown variable {n!r}")
    return biomodel.state_of(model, names)


@main.command("oracle")
@click.argument("path", type=click.Path(exists=True))
@click.option("--from", "from_", default=None,
              help="comma-separated present variables (default: init)")
@click.option("--query", type=click.Choice(["reach", "fixpoint", "path"]),
              required=True)
@click.option("--target", default=None,
              help="comma-separated present variables (reach)")
@click.option("--rules", default=None, help="comma-separated rule path")
@click.option("--bound", type=int, default=None, help="step bound (reach)")
@click.option("--json", "as_json", is_flag=True, help="structured output")
def oracle(path: str, from_: Optional[str], query: str,
           target: Optional[str], rules: Optional[str],
           bound: Optional[int], as_json: bool) -> None:
    """Query the explicit-state transition system of a model."""
    try:
        model = biomodel.load_model(path)
        if from_ is not None:
            start = _parse_state(model, from_)
        else:
            start = biomodel.initial_state(model)
            if start is None:
                raise biomodel.ModelError(
                    "model has no initial state; use --from")
        doc = {"from": biomodel.format_state(model, start)}
        if query == "fixpoint":
            doc["fixpoint"] = biomodel.is_fixpoint(model, start)
        elif query == "path":
            if not rules:
                raise biomodel.ModelError("path query needs --rules")
            idx = [int(t) for t in rules.replace(",", " ").split()]
            states = biomodel.run_path(model, start, idx)
            if states is None:
                doc["enabled"] = False
            else:
                doc["enabled"] = True
                doc["states"] = [biomodel.format_state(model, s)
                                 for s in states]
        else:
            if target is None:
                raise biomodel.ModelError("reach query needs --target")
            goal = _parse_state(model, target)
            path_found = _bfs_path(model, start, goal, bound)
            doc["reachable"] = path_found is not None
            if path_found is not None:
                doc["path"] = path_found
    except (biomodel.ModelError, ValueError) as exc:
        _fail(str(exc), as_json)
    if as_json:
        click.echo(json.dumps(doc))
    else:
        for k, v in doc.items():
            click.echo(f"{k}: {v}")


def _bfs_path(model, start, goal, bound: Optional[int]):
    """Shortest rule-index path from start to goal, or None."""
    from collections import deque

    queue = deque([(start, [])])
    seen = {start}
    while queue:
        s, trail = queue.popleft()
        if s == goal:
            return trail
        if bound is not None and len(trail) >= bound:
            continue
        for i, t in biomodel.successors(model, s):
            if t not in seen:
                seen.add(t)
                queue.append((t, trail + [i]))
    return None


# ---------------------------------------------------------------------------
# REPL


@main.command("repl")
@click.argument("goalfile", type=click.Path(exists=True))
def repl(goalfile: str) -> None:
    """Interactively prove the goals of a script header."""
    with open(goalfile, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        session = session_from_text(text, goalfile)
    except (ScriptError, biomodel.ModelError) as exc:
        _fail(str(exc), False)
    _print_goals(session)
    while True:
        try:
            line = input("hyll> ").strip()
        except EOFError:
            break
        if not line:
            continue
        if line in ("quit", "exit"):
            break
        if line == "goals":
            _print_goals(session)
            continue
        if line == "undo":
            try:
                session.undo()
            except SessionError as exc:
                click.echo(f"error: {exc}")
                continue
            _print_goals(session)
            continue
        if line.startswith("save"):
            out = line[4:].strip() or "proof.cert.json"
            try:
                _write_certificate(session.certificate(), out)
                click.echo(f"certificate written to {out}")
            except (OpenGoals, K.CheckError, TacticError) as exc:
                click.echo(f"error: {exc}")
            continue
        try:
            session.apply(line)
        except (TacticError, ScriptError) as exc:
            click.echo(f"error: {exc}")
            continue
        _print_goals(session)


def _print_goals(session: Session) -> None:
    if session.state.is_complete():
        click.echo("Proof complete.")
        return
    for i, g in enumerate(session.state.goals):
        marker = ">" if i == 0 else " "
        doc = goal_doc(g)
        click.echo(f"{marker} [{g.gid}] {g.name}: {doc['pretty']}")


# ---------------------------------------------------------------------------
# HTTP service


class CreateSession(BaseModel):
    script: Optional[str] = None
    path: Optional[str] = None


class ApplyTactic(BaseModel):
    text: str
    goal: Optional[int] = None


def create_app(root: str):
    """The workbench service; all state lives in an in-process store."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import Response

    root = os.path.abspath(root)
    store = SessionStore()
    app = FastAPI(title="hyllkit workbench service")

    def _session(sid: str) -> Session:
        try:
            return store.get(sid)
        except SessionError as exc:
            raise HTTPException(404, detail=str(exc))

    def _safe_path(rel: str) -> str:
        full = os.path.abspath(os.path.join(root, rel))
        if not full.startswith(root + os.sep):
            raise HTTPException(400, detail="path escapes the service root")
        if not os.path.isfile(full):
            raise HTTPException(404, detail=f"no such file: {rel}")
        return full

    @app.get("/examples")
    def examples():
        out = []
        proof_dir = os.path.join(root, "proofs")
        if os.path.isdir(proof_dir):
            for name in sorted(os.listdir(proof_dir)):
                if name.endswith(".hp"):
                    with open(os.path.join(proof_dir, name),
                              encoding="utf-8") as fh:
                        out.append({"name": name,
                                    "path": f"proofs/{name}",
                                    "text": fh.read()})
        return out

    @app.post("/sessions")
    def create(req: CreateSession):
        if req.path is not None:
            full = _safe_path(req.path)
            with open(full, encoding="utf-8") as fh:
                text = fh.read()
            path = full
        elif req.script is not None:
            text = req.script
            path = os.path.join(root, "proofs", "_session.hp")
        else:
            raise HTTPException(400, detail="need 'script' or 'path'")
        try:
            session = session_from_text(text, path)
        except (ScriptError, biomodel.ModelError,
                ValueError) as exc:
            raise HTTPException(400, detail=str(exc))
        store.add(session)
        return state_doc(session)

    @app.get("/sessions/{sid}")
    def get_state(sid: str):
        return state_doc(_session(sid))

    @app.post("/sessions/{sid}/tactic")
    def tactic(sid: str, req: ApplyTactic):
        session = _session(sid)
        try:
            session.apply(req.text, req.goal)
        except (TacticError, ScriptError, SessionError) as exc:
            raise HTTPException(400, detail=str(exc))
        return state_doc(session)

    @app.post("/sessions/{sid}/undo")
    def undo(sid: str):
        session = _session(sid)
        try:
            session.undo()
        except SessionError as exc:
            raise HTTPException(400, detail=str(exc))
        return state_doc(session)

    @app.get("/sessions/{sid}/hints")
    def hints(sid: str, goal: Optional[int] = None):
        session = _session(sid)
        try:
            target = (session.state.first_open() if goal is None
                      else session.state.goal_by_id(goal))
        except TacticError as exc:
            raise HTTPException(404, detail=str(exc))
        if target is None:
            return {"hints": []}
        return {"hints": hint_tactics(target)}

    @app.get("/sessions/{sid}/certificate")
    def certificate(sid: str):
        session = _session(sid)
        try:
            doc = session.certificate()
        except OpenGoals as exc:
            raise HTTPException(
                409, detail={"error": "OpenGoals", "message": str(exc),
                             "open": len(session.state.goals)})
        except (K.CheckError, TacticError) as exc:
            raise HTTPException(500, detail=str(exc))
        return Response(content=K.certificate_dumps(doc),
                        media_type="application/json")

    @app.delete("/sessions/{sid}")
    def drop(sid: str):
        store.drop(sid)
        return {"ok": True}

    return app


@main.command("serve")
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True,
              help="bind address (loopback only by default)")
@click.option("--root", type=click.Path(exists=True, file_okay=False),
              default=".", show_default=True,
              help="directory whose proofs/ and models/ are served")
def serve(port: int, host: str, root: str) -> None:
    """Run the local workbench service."""
    import uvicorn

    uvicorn.run(create_app(root), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
