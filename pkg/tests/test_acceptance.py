"""Acceptance suite: one test per shipped guarantee, each with an explicit
wall-clock budget.  Proof scripts are executed once per session (see
conftest.ProofRun) and their recorded runtimes are asserted here."""

import json
import random
import time

import pytest

from hyllkit import biomodel as B
from hyllkit import kernel as K
from hyllkit.kernel import (
    Derivation,
    Judgement,
    Sequent,
    certificate_dumps,
    check_certificate,
    check_derivation,
    contract,
    identity_expansion,
    relocate,
    weaken,
)
from hyllkit.prover import TacticError, auto_tactic, initial_state, run_tactic_text
from hyllkit.syntax import (
    At,
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
    const,
    formula_size,
    parse_formula,
    tvar,
)
from hyllkit.worlds import nat, parse_world, var

from conftest import GOLDEN, MODELS, PROOFS

import os


def _model(name):
    return B.load_model(os.path.join(MODELS, name))


def _first(d: Derivation, rule: str):
    """First node with the given rule, in preorder."""
    if d.rule == rule:
        return d
    for p in d.premises:
        hit = _first(p, rule)
        if hit is not None:
            return hit
    return None


def _count(d: Derivation, rule: str) -> int:
    return (d.rule == rule) + sum(_count(p, rule) for p in d.premises)


# ---------------------------------------------------------------------------
# Golden compilation


def test_golden_compilation_under_1s():
    t0 = time.monotonic()
    for name in ("p53", "p53_strong"):
        model = _model(f"{name}.bio")
        with open(os.path.join(GOLDEN, f"{name}.txt")) as fh:
            assert B.compile_dump(model) == fh.read()
    assert time.monotonic() - t0 < 1.0


# ---------------------------------------------------------------------------
# Case-study properties


def test_property1_oscillation_witnesses(proof_runs):
    run = proof_runs["property1"]
    assert run.witnesses == {"?u": "2", "?v": "2"}
    assert run.seconds < 10.0


def test_property1_split_witnesses(proof_runs):
    run = proof_runs["property1_split"]
    assert run.witnesses == {"?u": "2", "?v": "2"}
    assert run.seconds < 10.0


def test_property2_reaches_repair_within_bound(proof_runs):
    run = proof_runs["property2"]
    assert run.witnesses == {"?u": "4"}
    assert int(run.witnesses["?u"]) < 5
    assert run.seconds < 10.0


def test_property3_fireable_branch_taken_for_rules_4_and_6(proof_runs):
    run = proof_runs["property3"]
    chosen = set()
    for name, d in run.derivations:
        if not name.startswith("step_"):
            continue
        node = _first(d, "oplusR")
        assert node is not None
        if node.payload.side == 1:  # left disjunct: the rule fires
            chosen.add(int(name.split("_")[1]))
    assert chosen == {4, 6}
    assert run.seconds < 30.0


def test_property4_fireable_branches_match_state_disjuncts(proof_runs):
    run = proof_runs["property4"]
    fires_from_both_present = set()
    fires_from_both_absent = set()
    for name, d in run.derivations:
        i = int(name.split("_")[1])
        split = _first(d, "oplusL")  # the two disjuncts of the assumed state
        assert split is not None and len(split.premises) == 2
        if _count(split.premises[0], "withR"):
            fires_from_both_present.add(i)
        if _count(split.premises[1], "withR"):
            fires_from_both_absent.add(i)
    assert fires_from_both_present == {1, 4, 5}
    assert fires_from_both_absent == {2, 6}
    assert run.seconds < 60.0


# ---------------------------------------------------------------------------
# Certified prover: every certificate re-checks without cut


def test_all_certificates_check_without_cut(proof_runs):
    for run in proof_runs.values():
        doc = json.loads(certificate_dumps(run.certificate))
        assert doc["header"]["allow_cut"] is False
        named = check_certificate(doc)
        assert len(named) == len(run.derivations)


# ---------------------------------------------------------------------------
# Consistency: no cut-free proof of falsity


def test_no_proof_of_zero_at_depth_6():
    st = initial_state(
        [("absurd", Sequent((), (), Judgement(Zero(), var("w"))))])
    t0 = time.monotonic()
    with pytest.raises(TacticError, match="no proof within depth 6"):
        auto_tactic(st, st.goals[0].gid, 6)
    assert time.monotonic() - t0 < 60.0


# ---------------------------------------------------------------------------
# Identity expansion fuzz


def _random_closed_formula(rng, budget, tvars=(), wvars=()):
    leaves = ["atom", "one", "top", "zero"]
    unary = ["bang", "forallT", "existsT", "forallW", "existsW", "at", "down"]
    binary = ["tensor", "limp", "with", "oplus"]
    menu = list(leaves)
    if budget >= 2:
        menu += 2 * unary
    if budget >= 3:
        menu += 2 * binary
    kind = rng.choice(menu)
    if kind == "atom":
        name = rng.choice(["p", "q", "pres", "abs"])
        if name in ("pres", "abs"):
            arg = (rng.choice([tvar(rng.choice(tvars)), const("c")])
                   if tvars else const("c"))
            return Atom(name, (arg,))
        return Atom(name, ())
    if kind == "one":
        return One()
    if kind == "top":
        return Top()
    if kind == "zero":
        return Zero()
    if kind in ("tensor", "limp", "with", "oplus"):
        lb = rng.randint(1, budget - 2)
        left = _random_closed_formula(rng, lb, tvars, wvars)
        right = _random_closed_formula(rng, budget - 1 - lb, tvars, wvars)
        cls = {"tensor": Tensor, "limp": Limp,
               "with": With, "oplus": Oplus}[kind]
        return cls(left, right)
    if kind == "bang":
        return Bang(_random_closed_formula(rng, budget - 1, tvars, wvars))
    if kind in ("forallT", "existsT"):
        name = f"x{len(tvars)}"
        body = _random_closed_formula(rng, budget - 1, tvars + (name,), wvars)
        return (ForallT if kind == "forallT" else ExistsT)(name, body)
    if kind in ("forallW", "existsW", "down"):
        name = f"u{len(wvars)}"
        body = _random_closed_formula(rng, budget - 1, tvars, wvars + (name,))
        cls = {"forallW": ForallW, "existsW": ExistsW, "down": Down}[kind]
        return cls(name, body)
    # at: world is a bound world variable when one exists, else a literal
    body = _random_closed_formula(rng, budget - 1, tvars, wvars)
    world = var(rng.choice(wvars)) if wvars else nat(rng.randint(0, 3))
    return At(body, world)


def test_identity_expansion_fuzz_200_formulas():
    rng = random.Random(20260823)
    t0 = time.monotonic()
    named = []
    for i in range(200):
        f = _random_closed_formula(rng, rng.randint(1, 12))
        assert formula_size(f) <= 12
        d = identity_expansion(f, nat(0))
        named.append((f"id_{i}", d))
    doc = json.loads(certificate_dumps(
        K.certificate_to_json(named, None, allow_cut=False)))
    assert len(check_certificate(doc)) == 200
    assert time.monotonic() - t0 < 30.0


# ---------------------------------------------------------------------------
# Structural transformers on every case-study derivation


def test_transformers_on_all_property_certificates(proof_runs):
    extra = Judgement(parse_formula("zz"), nat(0))
    t0 = time.monotonic()
    seen = 0
    for run in proof_runs.values():
        for name, d in run.derivations:
            dw = weaken(d, [extra])
            check_derivation(dw, allow_cut=False)
            dc = contract(weaken(d, [extra, extra]), 0, 1)
            check_derivation(dc, allow_cut=False)
            assert dc.conclusion.gamma[:1] == (extra,)
            if (run.name, name) == ("property3", "localise"):
                continue  # see test_relocate_localised_invariant below
            dr = relocate(d, nat(1))
            check_derivation(dr, allow_cut=False)
            seen += 1
    assert seen == 16
    assert time.monotonic() - t0 < 10.0


@pytest.mark.xfail(
    strict=True,
    reason="the localisation derivation pins its content to instant 0 with "
    "a satisfaction goal, and no axiom moves absolute facts; shifting the "
    "whole derivation breaks its leaves, so relocation rejects it")
def test_relocate_localised_invariant(proof_runs):
    run = proof_runs["property3"]
    d = dict(run.derivations)["localise"]
    dr = relocate(d, nat(1))
    check_derivation(dr, allow_cut=False)


# ---------------------------------------------------------------------------
# Oracle cross-validation


def test_oracle_cross_validation_under_1s():
    t0 = time.monotonic()
    m = _model("p53.bio")
    start = B.state_of(m, ["Mdm2", "DNAdam"])
    active = B.state_of(m, ["p53", "DNAdam"])
    repaired = B.state_of(m, ["Mdm2"])
    assert len(B.all_states(m)) == 8
    assert B.run_path(m, start, [1, 2])[-1] == active
    assert B.run_path(m, start, [1, 2, 3, 4])[-1] == start
    assert B.run_path(m, start, [1, 2, 5, 6])[-1] == repaired
    assert B.is_fixpoint(m, repaired)
    ms = _model("p53_strong.bio")
    ip, im = ms.variables.index("p53"), ms.variables.index("Mdm2")
    for s in B.all_states(ms):
        if s[ip] != s[im]:
            continue  # only both-present / both-absent states matter
        for _, t in B.successors(ms, s):
            assert t[ip] != t[im]
    assert time.monotonic() - t0 < 1.0


# ---------------------------------------------------------------------------
# Localisation commutes with the propositional connectives


@pytest.mark.parametrize("op", ["*", "&", "+"])
def test_down_commutes_with_connective(op):
    t0 = time.monotonic()
    packed = parse_formula(f"dn u. (a {op} b)")
    spread = parse_formula(f"(dn u. a) {op} (dn u. b)")
    w = parse_world("w")
    for left, right in ((packed, spread), (spread, packed)):
        st = initial_state([
            ("dir", Sequent((), (Judgement(left, w),), Judgement(right, w)))])
        st = run_tactic_text(st, "auto 6")
        assert st.is_complete()
    assert time.monotonic() - t0 < 10.0
