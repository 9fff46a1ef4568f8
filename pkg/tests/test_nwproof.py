from pathlib import Path

import pytest

from corpus import corpus_derivation, nw_corpus
from treedet.automata import accepts_lasso
from treedet.derivation import (Derivation, Node, derivation_from_json, derivation_to_json,
                                to_dot)
from treedet.errors import NotALasso, NotApplicable, NotARuleInstance, StructuralError
from treedet.mucalc import parse_formula as P
from treedet.nwproof import (A_I, Branch, Star, apply_nw_rule, branch_word, build_nw,
                             check_nw, check_nw_brute, enumerate_branches, nu_trail_oracle,
                             trail_relation, tracking_automaton)

GOLDEN = Path(__file__).parent / "golden"
NU = P("nu x. []x")
BOX_NU = P("[](nu x. []x)")


def fs(*texts):
    return frozenset(P(t) for t in texts)


def test_apply_rule_examples():
    assert apply_nw_rule("R_nu", NU, {NU}) == [{BOX_NU}]
    assert apply_nw_rule("Ax1", None, fs("p", "~p", "q")) == []
    assert apply_nw_rule("R_box", P("[]a"), fs("[]a", "<>b", "q")) == [fs("a", "b")]
    assert apply_nw_rule("R_and", P("a & b"), fs("a & b", "c")) == [fs("a", "c"), fs("b", "c")]
    with pytest.raises(NotApplicable):
        apply_nw_rule("Ax1", None, fs("p", "q"))
    with pytest.raises(NotApplicable):
        apply_nw_rule("R_or", P("a & b"), fs("a & b"))


def test_trail_examples():
    st = trail_relation(fs("[]a", "<>b"), P("[]a"), fs("a", "b"))
    assert st.active == {(P("[]a"), P("a")), (P("<>b"), P("b"))}
    assert st.passive == frozenset()
    st = trail_relation(fs("a | b", "c"), P("a | b"), fs("a", "b", "c"))
    assert st.active == {(P("a | b"), P("a")), (P("a | b"), P("b"))}
    assert st.passive == {(P("c"), P("c"))}
    st = trail_relation(frozenset({NU}), NU, frozenset({BOX_NU}))
    assert st.active == {(NU, BOX_NU)} and st.passive == frozenset()
    with pytest.raises(NotARuleInstance):
        trail_relation(fs("a | b"), P("a | b"), fs("a"))


def test_and_with_coinciding_premises():
    # both conjuncts already present: the two premises are equal
    st = trail_relation(fs("a & a"), P("a & a"), fs("a"))
    assert st.active == {(P("a & a"), P("a"))}


def test_tracking_automaton_shape():
    aut = tracking_automaton({NU})
    assert set(aut.states) == {A_I, NU, BOX_NU, Star(NU)}
    assert aut.priority(Star(NU)) == 0
    assert all(aut.priority(q) == 1 for q in aut.states if q != Star(NU))
    gamma = frozenset({NU})
    assert aut.delta(NU, (gamma, NU, frozenset({BOX_NU}))) == {Star(NU)}
    box_letter = (frozenset({BOX_NU}), BOX_NU, gamma)
    assert aut.delta(Star(NU), box_letter) == {NU}
    assert aut.delta(A_I, box_letter) == gamma


def test_no_nu_priority():
    aut = tracking_automaton({P("mu x. []x")})
    assert all(aut.priority(q) == 1 for q in aut.states if not isinstance(q, Star))


def test_branch_word_duplicates_root_letter():
    d = corpus_derivation("nu x. [] x", 0)
    (b,) = enumerate_branches(d)
    w = branch_word(d, b)
    root = d[d.root]
    assert w.stem[0] == (root.sequent, None, root.sequent)
    assert len(w.stem) == len(b.stem) + 1
    assert len(w.loop) == len(b.cycle)
    with pytest.raises(NotALasso):
        branch_word(d, Branch((), ("n2",)))


def test_oracle_examples():
    d = corpus_derivation("nu x. [] x", 0)
    (b,) = enumerate_branches(d)
    assert nu_trail_oracle(d, b)
    # two least fixpoints feeding each other through the box rule
    d = build_nw([P("mu x. <>x"), P("mu y. []y")])
    (b,) = enumerate_branches(d)
    assert not nu_trail_oracle(d, b)
    assert not check_nw(d)
    # the diamond dies at the box rule and only the nu loop survives
    d = build_nw([P("mu x. <>x"), P("nu y. []y")])
    assert check_nw(d)


def test_check_nw_examples():
    assert check_nw(corpus_derivation("nu x. [] x", 0))
    bad = check_nw(corpus_derivation("mu x. [] x", 0))
    assert not bad and bad.witness
    finite = build_nw([P("p | ~p")])
    assert check_nw(finite)
    assert enumerate_branches(finite) == []


def test_vacuous_binder_regression():
    # the inner mu unfolds straight into the outer nu
    d = corpus_derivation("nu x. mu y. x", 0)
    assert check_nw(d)
    assert check_nw_brute(d)


def test_trail_oracle_matches_automaton_and_brute():
    for text, d, expected in nw_corpus():
        assert bool(check_nw(d)) == expected, text
        assert bool(check_nw_brute(d)) == expected, text
        aut = tracking_automaton(d[d.root].sequent)
        for b in enumerate_branches(d):
            assert nu_trail_oracle(d, b) == accepts_lasso(aut, branch_word(d, b)), text


def test_json_roundtrip_and_golden():
    d = corpus_derivation("nu x. [] x", 0)
    text = derivation_to_json(d)
    assert text == (GOLDEN / "nu_box.nwproof").read_text()
    again = derivation_from_json(text)
    assert derivation_to_json(again) == text
    assert check_nw(again)
    assert 'style=dashed' in to_dot(again)


def test_structural_errors_name_the_node():
    d = corpus_derivation("nu x. [] x", 0)
    d.nodes["n2"].sequent = fs("[]p")
    with pytest.raises(StructuralError) as e:
        check_nw(d)
    assert "n" in str(e.value)

    d = corpus_derivation("nu x. [] x", 0)
    d.nodes["n3"].discharge = "nope"
    with pytest.raises(StructuralError, match="dangling"):
        check_nw(d)

    d = corpus_derivation("nu x. [] x", 0)
    d.nodes["n3"].sequent = fs("[]p")
    with pytest.raises(StructuralError):
        check_nw(d)


def test_companion_must_be_ancestor():
    nodes = {
        "r": Node("r", fs("a & b"), "R_and", P("a & b"), ["d", "l"]),
        "d": Node("d", fs("a"), "Dis", children=["ax"], companion_of="t"),
        "ax": Node("ax", fs("a"), None, discharge="t"),
        "l": Node("l", fs("b"), None, discharge="t"),
    }
    with pytest.raises(StructuralError):
        Derivation(nodes, "r").check_shape()


def test_malformed_json():
    with pytest.raises(StructuralError):
        derivation_from_json("{")
    with pytest.raises(StructuralError):
        derivation_from_json('{"nodes": [{"id": "a", "sequent": ["p |"], "rule": "Ax2"}]}')


def test_retargeted_detour_is_rejected():
    from corpus import detour_derivation
    from mutants import retarget_back_edges

    d = detour_derivation()
    assert check_nw(d)
    (_, m), = retarget_back_edges(d)
    assert not check_nw(m)
    assert not check_nw_brute(m)
