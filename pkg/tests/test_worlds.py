import pytest

from hyllkit.worlds import (
    UnifyFailure,
    compose,
    format_world,
    nat,
    parse_world,
    reachable,
    reachable_witness,
    sat_sub,
    subst_world,
    unify_worlds,
    var,
    world,
)


def test_parse_format_round_trip():
    for text in ("0", "3", "w", "w.3", "u.v.2", "?u", "w.?u", "(u - w)",
                 "(u - w).2", "i"):
        w = parse_world(text)
        assert parse_world(format_world(w)) == w


def test_identity_and_offsets():
    assert parse_world("i") == nat(0)
    assert compose(var("w"), nat(0)) == var("w")
    assert compose(nat(2), nat(3)) == nat(5)
    assert compose(var("w"), compose(nat(1), nat(1))) == parse_world("w.2")


def test_composition_is_commutative_in_canonical_form():
    a = compose(var("u"), compose(var("w"), nat(4)))
    b = compose(nat(4), compose(var("u"), var("w")))
    assert a == b
    assert format_world(a) == "u.w.4"


def test_variable_multiset():
    w = compose(var("u"), var("u"))
    assert w.vars == (("u", 2),)
    assert format_world(w) == "u.u"


def test_saturating_subtraction_collapses_on_ground():
    assert sat_sub(nat(5), nat(3)) == nat(2)
    assert sat_sub(nat(3), nat(5)) == nat(0)
    assert sat_sub(nat(3), nat(3)) == nat(0)


def test_saturating_subtraction_symbolic_is_opaque():
    w = sat_sub(var("u"), var("w"))
    assert w.subs
    assert format_world(w) == "(u - w)"


def test_substitution_grounds_subtraction():
    w = sat_sub(var("u"), nat(1))
    assert subst_world(w, "u", nat(4)) == nat(3)


def test_reachability():
    assert reachable(var("w"), parse_world("w.3"))
    assert not reachable(parse_world("w.3"), var("w"))
    assert reachable_witness(var("w"), parse_world("w.2.v")) is not None
    assert reachable_witness(var("w"), var("v")) is None


def test_unify_single_metavariable():
    out = unify_worlds(parse_world("w.?u"), parse_world("w.4"))
    assert out and out["?u"] == nat(4)


def test_unify_no_solution():
    out = unify_worlds(parse_world("w.?u.3"), parse_world("w.1"))
    assert isinstance(out, UnifyFailure) and out.reason == "NoSolution"


def test_unify_nonlinear_rejected():
    out = unify_worlds(parse_world("?u.?u"), parse_world("w.w"))
    assert isinstance(out, UnifyFailure) and out.reason == "NonLinear"


def test_unify_respects_existing_bindings():
    ok = unify_worlds(parse_world("w.?u"), parse_world("w.2"), {"?u": nat(2)})
    assert ok
    bad = unify_worlds(parse_world("w.?u"), parse_world("w.3"), {"?u": nat(2)})
    assert isinstance(bad, UnifyFailure)
