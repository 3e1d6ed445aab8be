import json

import pytest

from hyllkit import kernel as K
from hyllkit.kernel import (
    CheckError,
    Derivation,
    Judgement,
    Payload,
    Sequent,
    build,
    certificate_dumps,
    certificate_to_json,
    check_certificate,
    check_derivation,
    contract,
    elaborate,
    identity_expansion,
    premises_of,
    relocate,
    skeleton_of,
    weaken,
)
from hyllkit.syntax import parse_formula
from hyllkit.worlds import nat, parse_world, var


def j(formula: str, world: str) -> Judgement:
    return Judgement(parse_formula(formula), parse_world(world))


def seq(gamma, delta, goal) -> Sequent:
    return Sequent(tuple(gamma), tuple(delta), goal)


# ---------------------------------------------------------------------------
# Single rules


def test_init():
    s = seq([], [j("a", "w")], j("a", "w"))
    d = build("init", s)
    check_derivation(d)


def test_init_rejects_world_mismatch():
    s = seq([], [j("a", "w")], j("a", "w.1"))
    with pytest.raises(CheckError):
        build("init", s)


def test_init_rejects_extra_hypotheses():
    s = seq([], [j("a", "w"), j("b", "w")], j("a", "w"))
    with pytest.raises(CheckError):
        build("init", s)


def test_tensor_right_split_is_explicit():
    s = seq([], [j("a", "w"), j("b", "w")], j("a * b", "w"))
    left, right = premises_of(s, "tensorR", Payload(split=(0,)))
    assert left.delta == (j("a", "w"),)
    assert right.delta == (j("b", "w"),)
    # the complementary split leaves the wrong atoms on each side
    left2, _ = premises_of(s, "tensorR", Payload(split=(1,)))
    assert left2.delta == (j("b", "w"),)


def test_copy_appends_at_end():
    s = seq([j("a", "0")], [j("b", "w")], j("c", "w"))
    (p,) = premises_of(s, "copy", Payload(principal=0))
    assert p.delta == (j("b", "w"), j("a", "0"))


def test_forall_world_left_instantiates():
    s = seq([], [j("allw u. a @@ u", "0")], j("a @@ w", "0"))
    (p,) = premises_of(s, "forallL",
                       Payload(principal=0, witness_world=var("w")))
    assert p.delta == (j("a @@ w", "0"),)


def test_forall_right_requires_fresh_eigenvariable():
    s = seq([], [], j("allw u. a @@ u.w", "0"))
    (p,) = premises_of(s, "forallR", Payload(fresh="v"))
    assert p.goal == j("a @@ v.w", "0")
    with pytest.raises(CheckError):
        premises_of(s, "forallR", Payload(fresh="w"))  # w occurs already


def test_at_internalizes_world():
    s = seq([], [j("a", "v")], j("a @@ v", "w"))
    (p,) = premises_of(s, "atR", Payload())
    assert p.goal == j("a", "v")


def test_down_binds_current_world():
    s = seq([], [j("a", "w.1")], j("dn u. a @@ u", "w.1"))
    (p,) = premises_of(s, "downR", Payload())
    assert p.goal == j("a @@ w.1", "w.1")


def test_cut_is_gated():
    s = seq([], [j("a", "w")], j("a", "w"))
    payload = Payload(split=(0,), cut=j("a", "w"))
    with pytest.raises(CheckError):
        premises_of(s, "cut", payload, allow_cut=False)
    p1, p2 = premises_of(s, "cut", payload, allow_cut=True)
    assert p1.goal == j("a", "w")


def test_unknown_rule_rejected():
    s = seq([], [j("a", "w")], j("a", "w"))
    with pytest.raises(CheckError):
        premises_of(s, "frobnicate", Payload())


# ---------------------------------------------------------------------------
# Identity expansion


IDENTITY_MENU = [
    "a",
    "1",
    "top",
    "0",
    "a * b",
    "a -o b",
    "a & b",
    "a + b",
    "!a",
    "all x. pres(x)",
    "ex x. pres(x)",
    "allw u. a @@ u",
    "exw u. a @@ u",
    "a @@ 3",
    "dn u. a @@ u.1",
    "(a * b) -o (c + d) & top",
    "!(all x. pres(x) + abs(x))",
]


@pytest.mark.parametrize("text", IDENTITY_MENU)
def test_identity_expansion_checks(text):
    a = parse_formula(text)
    d = identity_expansion(a, parse_world("w"))
    check_derivation(d, allow_cut=False)
    assert d.conclusion == seq([], [Judgement(a, var("w"))],
                               Judgement(a, var("w")))


def test_identity_expansion_with_gamma():
    gamma = (j("c", "0"),)
    d = identity_expansion(parse_formula("a -o b"), var("w"), gamma)
    check_derivation(d)
    assert d.conclusion.gamma == gamma


# ---------------------------------------------------------------------------
# Structural transformers


def _identity(text: str, world: str = "w") -> Derivation:
    return identity_expansion(parse_formula(text), parse_world(world))


def test_weaken_extends_gamma():
    d = _identity("a * b")
    extra = [j("zz", "0"), j("allw u. c @@ u", "0")]
    dw = weaken(d, extra)
    check_derivation(dw)
    assert dw.conclusion.gamma == tuple(extra)


def test_contract_merges_gamma_copies():
    d = _identity("a & b")
    dup = j("c", "0")
    dw = weaken(d, [dup, dup])
    dc = contract(dw, 0, 1)
    check_derivation(dc)
    assert dc.conclusion.gamma == (dup,)


def test_contract_round_trip():
    d = weaken(_identity("a"), [j("c", "0")])
    d2 = weaken(d, [j("c", "0")])
    dc = contract(d2, 0, 1)
    check_derivation(dc)
    assert dc.conclusion == d.conclusion


def test_contract_retargets_copy():
    # a derivation that actually copies the duplicated hypothesis
    s = seq([j("a", "w"), j("a", "w")], [], j("a", "w"))
    (p,) = premises_of(s, "copy", Payload(principal=1))
    d = build("copy", s, Payload(principal=1), [build("init", p)])
    dc = contract(d, 0, 1)
    check_derivation(dc)
    assert dc.conclusion.gamma == (j("a", "w"),)


def test_relocate_by_identity_is_noop():
    d = _identity("a * b")
    dr = relocate(d, nat(0))
    check_derivation(dr)
    assert dr.conclusion == d.conclusion


def test_relocate_shifts_conclusion():
    d = _identity("a", "w")
    dr = relocate(d, nat(3))
    check_derivation(dr)
    assert dr.conclusion.delta == (j("a", "w.3"),)
    assert dr.conclusion.goal == j("a", "w.3")


def test_relocate_rejects_absolute_content():
    # a hypothesis naming an absolute world cannot be shifted soundly
    s = seq([], [j("a @@ 0", "0")], j("a", "0"))
    (p,) = premises_of(s, "atL", Payload(principal=0))
    d = build("atL", s, Payload(principal=0), [build("init", p)])
    check_derivation(d)
    with pytest.raises(CheckError):
        relocate(d, nat(1))


# ---------------------------------------------------------------------------
# Certificates


def test_certificate_round_trip():
    d = _identity("(a * b) -o a * b")
    doc = certificate_to_json([("id", d)], signature=None, allow_cut=False)
    text = certificate_dumps(doc)
    named = check_certificate(json.loads(text))
    assert [n for n, _ in named] == ["id"]
    assert named[0][1].conclusion == d.conclusion


def test_certificate_serialization_is_deterministic():
    d = _identity("a & b")
    doc = certificate_to_json([("id", d)], None, False)
    assert certificate_dumps(doc) == certificate_dumps(
        json.loads(certificate_dumps(doc)))


def test_certificate_rejects_corruption():
    d = _identity("a * b")
    doc = json.loads(certificate_dumps(
        certificate_to_json([("id", d)], None, False)))
    doc["derivations"][0]["tree"]["rule"] = "oneR"
    with pytest.raises(CheckError):
        check_certificate(doc)


def test_certificate_rejects_missing_derivations():
    with pytest.raises(CheckError):
        check_certificate({"header": {"format_version": 1}})


def test_certificate_rejects_unknown_version():
    with pytest.raises(CheckError):
        check_certificate({"header": {"format_version": 99},
                           "derivations": []})


def test_elaborate_inverts_skeleton():
    d = _identity("a + b")
    d2 = elaborate(d.conclusion, skeleton_of(d))
    check_derivation(d2)
    assert skeleton_of(d2) == skeleton_of(d)


# ---------------------------------------------------------------------------
# Conservativity: derivations without hybrid connectives never touch the
# hybrid rules


def _rules_used(d: Derivation) -> set:
    out = {d.rule}
    for p in d.premises:
        out |= _rules_used(p)
    return out


@pytest.mark.parametrize("text", ["a * b", "a -o b", "a & b + !c", "1"])
def test_conservativity_census(text):
    d = identity_expansion(parse_formula(text), nat(0))
    check_derivation(d)
    assert not (_rules_used(d) & {"atR", "atL", "downR", "downL"})
