import os
import textwrap

import pytest

from hyllkit import kernel as K
from hyllkit.kernel import Judgement, Sequent
from hyllkit.prover import (
    MacroEnv,
    ScriptError,
    TacticError,
    UnresolvedMetavariable,
    auto_tactic,
    builtin_macros,
    eval_tactic,
    extract_certificate,
    initial_state,
    load_and_run,
    parse_script,
    parse_tactic,
    run_script,
    run_tactic_text,
    witnesses,
)
from hyllkit.syntax import parse_formula
from hyllkit.worlds import nat, parse_world, var

from conftest import MODELS, PROOFS


def j(formula: str, world: str) -> Judgement:
    return Judgement(parse_formula(formula), parse_world(world))


def goal_state(gamma, delta, goal):
    return initial_state(
        [("g", Sequent(tuple(gamma), tuple(delta), goal))])


# ---------------------------------------------------------------------------
# Primitive tactics


def test_init_closes_goal():
    st = goal_state([], [j("a", "w")], j("a", "w"))
    st = run_tactic_text(st, "init")
    assert st.is_complete()


def test_init_unifies_metavariable():
    st = goal_state([], [j("a", "w.2")], j("a", "w.?u"))
    st = run_tactic_text(st, "init")
    assert st.is_complete()
    assert witnesses(st) == {"?u": "2"}


def test_failed_tactic_leaves_state_unchanged():
    st = goal_state([], [j("a", "w")], j("b", "w"))
    with pytest.raises(TacticError):
        run_tactic_text(st, "init")
    assert len(st.goals) == 1


def test_principal_inference_unique_match():
    st = goal_state([], [j("a * b", "w"), j("c", "w")], j("c", "w"))
    st = run_tactic_text(st, "tensorL")  # the only tensor is found
    from hyllkit.syntax import format_formula
    assert [format_formula(x.formula) for x in st.goals[0].sequent.delta] == \
        ["a", "b", "c"]


def test_principal_inference_ambiguity_reported():
    st = goal_state([], [j("a * b", "w"), j("c * d", "w")], j("c", "w"))
    with pytest.raises(TacticError) as e:
        run_tactic_text(st, "tensorL")
    assert "AmbiguousPrincipal" in str(e.value)


def test_tensor_right_mask():
    st = goal_state([], [j("a", "w"), j("b", "w")], j("b * a", "w"))
    st = run_tactic_text(st, "tensorR 1")
    st = run_tactic_text(st, "init")
    st = run_tactic_text(st, "init")
    assert st.is_complete()


def test_forall_left_with_world_witness():
    st = goal_state([], [j("allw u. a @@ u", "0")], j("a", "w.1"))
    st = run_tactic_text(st, "forallL 0 w.1")
    st = run_tactic_text(st, "atL 0")
    st = run_tactic_text(st, "init")
    assert st.is_complete()


def test_exists_right_with_term_witness():
    st = goal_state([], [j("pres(p53)", "w")], j("ex x. pres(x)", "w"))
    st = run_tactic_text(st, "existsR p53")
    st = run_tactic_text(st, "init")
    assert st.is_complete()


# ---------------------------------------------------------------------------
# Tacticals


def test_then_applies_to_all_subgoals():
    st = goal_state([], [j("a", "w"), j("b", "w")], j("a * b", "w"))
    st = run_tactic_text(st, "tensorR 0 ; init")
    assert st.is_complete()


def test_or_falls_through():
    st = goal_state([], [j("a", "w")], j("a", "w"))
    st = run_tactic_text(st, "oneR | init")
    assert st.is_complete()


def test_try_swallows_failure():
    st = goal_state([], [j("a", "w")], j("a", "w"))
    st2 = run_tactic_text(st, "try oneR")
    assert len(st2.goals) == 1


def test_repeat():
    st = goal_state([], [j("a * (b * c)", "w")], j("a", "w"))
    st = run_tactic_text(st, "repeat tensorL")
    assert len(st.goals[0].sequent.delta) == 3


def test_unknown_tactic_rejected():
    with pytest.raises(ScriptError):
        parse_tactic("frobnicate")


# ---------------------------------------------------------------------------
# Automatic search


def test_auto_identity():
    st = goal_state([], [j("(a + b) & c", "w")], j("(a + b) & c", "w"))
    st = run_tactic_text(st, "auto 6")
    assert st.is_complete()


def test_auto_respects_depth():
    st = goal_state([], [], j("0", "w"))
    with pytest.raises(TacticError):
        auto_tactic(st, 0, 6)


def test_auto_binds_world_metavariable():
    st = goal_state([], [j("a", "w.3")], j("dn u. a @@ u", "w.?v"))
    st = run_tactic_text(st, "auto 4")
    assert st.is_complete()
    assert witnesses(st)["?v"] == "3"


# ---------------------------------------------------------------------------
# Extraction


def test_extract_certificate_checks():
    st = goal_state([], [j("a * b", "w")], j("a * b", "w"))
    st = run_tactic_text(st, "auto 4")
    cert = extract_certificate(st)
    assert K.check_certificate(cert)


def test_extract_requires_completion():
    st = goal_state([], [j("a", "w")], j("a", "w"))
    with pytest.raises(Exception):
        extract_certificate(st)


def test_unresolved_metavariable_is_an_error():
    st = goal_state([], [j("a", "w")],
                    j("ex x. a", "w"))
    st = run_tactic_text(st, "existsR ?t")
    st = run_tactic_text(st, "init")
    assert st.is_complete()
    with pytest.raises(UnresolvedMetavariable):
        extract_certificate(st)


# ---------------------------------------------------------------------------
# Macros and scripts


def test_macro_expansion_nested_parens():
    env = MacroEnv()
    builtin_macros(env)
    out = env.expand("delay(?u, (a & delay(1, b)))")
    f = parse_formula(out)
    assert "@@" in out
    assert f is not None


def test_macro_rejects_wrong_arity():
    env = MacroEnv()
    builtin_macros(env)
    with pytest.raises(ScriptError):
        env.expand("delay(1)")


SCRIPT = textwrap.dedent("""\
    -- a tiny two-goal script
    let pair = a * b

    goal first : pair @ w |- pair @ w
    goal second : . |- 1 @ w
    ----
    auto 4
    oneR
""")


def test_script_runs_to_completion(tmp_path):
    path = tmp_path / "tiny.hp"
    path.write_text(SCRIPT)
    st = load_and_run(str(path))
    assert st.is_complete()
    cert = extract_certificate(st)
    assert [e["name"] for e in cert["derivations"]] == ["first", "second"]


def test_script_error_reports_line(tmp_path):
    path = tmp_path / "bad.hp"
    path.write_text("goal g : . |- 1 @ w\n----\ninit\n")
    with pytest.raises(ScriptError) as e:
        load_and_run(str(path))
    assert "bad.hp:3" in str(e.value)


def test_script_rejects_leftover_tactics(tmp_path):
    path = tmp_path / "extra.hp"
    path.write_text("goal g : . |- 1 @ w\n----\noneR\noneR\n")
    with pytest.raises(ScriptError):
        load_and_run(str(path))


def test_family_goal_expands_with_cases():
    text = textwrap.dedent("""\
        family k 1..3
        goal g(k) : a @ w |- a @ w
        ----
        cases
        init
        init
        init
    """)
    script = parse_script("<mem>", text)
    st = run_script(script)
    assert st.is_complete()
    cert = extract_certificate(st)
    assert [e["name"] for e in cert["derivations"]] == ["g_1", "g_2", "g_3"]


def test_model_header_installs_macros(tmp_path):
    path = tmp_path / "m.hp"
    rel = os.path.relpath(MODELS, tmp_path)
    path.write_text(textwrap.dedent(f"""\
        model {rel}/p53.bio
        goal g : . |- wd1 @ w
        ----
        skip
    """))
    script = parse_script(str(path), path.read_text())
    (name, target) = script.roots[0]
    assert "pres" in str(target.goal.formula)
