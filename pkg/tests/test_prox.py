from fractions import Fraction

import pytest

from sqclp import prox, qdom
from sqclp.prox import ProxError, ProximityRelation, SymbolKey, ctor, pred
from sqclp.syntax import Num, Str, Struct, Var

UW = qdom.parse_domain("(u,w)")
U = qdom.parse_domain("u")


def uw(a, b):
    return qdom.value_from_raw(UW, (Fraction(a), Fraction(b)))


def uval(x):
    return qdom.value_from_raw(U, Fraction(x))


@pytest.fixture
def work_rel():
    text = """
    % closeness between the writing predicates and the two spellings
    pprox(wrote, authored, 2, (0.9,0)).
    cprox(kle, kli, 0, (0.8,2)).
    """
    return prox.load_prox(text, UW, name="Work")


def test_load_keeps_declaration_order(work_rel):
    assert work_rel.pairs == [
        (pred("wrote", 2), pred("authored", 2), uw("0.9", 0)),
        (ctor("kle", 0), ctor("kli", 0), uw("0.8", 2)),
    ]
    assert work_rel.diagnostics == []


def test_lookup_is_symmetric_and_reflexive(work_rel):
    top = qdom.top(UW)
    assert prox.lookup(work_rel, pred("wrote", 2), pred("authored", 2)) == uw("0.9", 0)
    assert prox.lookup(work_rel, pred("authored", 2), pred("wrote", 2)) == uw("0.9", 0)
    assert prox.lookup(work_rel, pred("wrote", 2), pred("wrote", 2)) == top
    assert prox.lookup(work_rel, ctor("sha", 0), ctor("sha", 0)) == top
    assert prox.lookup(work_rel, ctor("kle", 0), ctor("hamlet", 0)) is qdom.BOTTOM
    # predicate/constructor and arity mismatches never relate
    assert prox.lookup(work_rel, pred("kle", 0), ctor("kle", 0)) is qdom.BOTTOM
    assert prox.lookup(work_rel, ctor("kle", 0), ctor("kle", 1)) is qdom.BOTTOM


def test_reflexive_and_duplicate_entries_are_normalized():
    text = """
    cprox(kle, kle, 0, top).
    cprox(kle, kli, 0, (0.8,2)).
    cprox(kli, kle, 0, (0.8,2)).
    """
    rel = prox.load_prox(text, UW)
    assert len(rel.pairs) == 1
    assert len(rel.diagnostics) == 2


def test_conflicting_values_are_an_error():
    text = """
    cprox(kle, kli, 0, (0.8,2)).
    cprox(kli, kle, 0, (0.7,2)).
    """
    with pytest.raises(ProxError, match="line 3.*conflicting"):
        prox.load_prox(text, UW)


def test_bad_facts_are_rejected_with_line_numbers():
    with pytest.raises(ProxError, match="line 1"):
        prox.load_prox("pprox(wrote, authored, 2).", UW)
    with pytest.raises(ProxError, match="bad proximity value"):
        prox.load_prox("cprox(kle, kli, 0, 0.8).", UW)
    with pytest.raises(ProxError, match="bad proximity value"):
        prox.load_prox("cprox(kle, kli, 0, (1.5,2)).", U)


def test_kind_and_arity_mismatch_errors():
    rel = ProximityRelation(UW)
    with pytest.raises(ProxError, match="predicate to a constructor"):
        rel.add(pred("f", 1), ctor("f", 1), uw("0.9", 0))
    with pytest.raises(ProxError, match="arity mismatch"):
        rel.add(ctor("f", 1), ctor("g", 2), uw("0.9", 0))
    with pytest.raises(ProxError, match="out of range"):
        rel.add(ctor("f", 1), ctor("g", 1), qdom.BOTTOM)


def test_basic_value_pairs():
    rel = prox.load_prox("cprox(2, 3, 0, 0.9).", U)
    assert prox.term_proximity(rel, Num(Fraction(2)), Num(Fraction(3))) == uval("0.9")
    assert prox.term_proximity(rel, Num(Fraction(2)), Num(Fraction(2))) == qdom.top(U)
    assert prox.term_proximity(rel, Num(Fraction(2)), Num(Fraction(5))) is qdom.BOTTOM
    with pytest.raises(ProxError, match="numbers cannot name predicates"):
        prox.load_prox("pprox(2, 3, 0, 0.9).", U)
    with pytest.raises(ProxError, match="arity 0"):
        prox.load_prox("cprox(2, 3, 1, 0.9).", U)


def test_term_proximity_examples(work_rel):
    top = qdom.top(UW)
    kle, kli = Struct("kle"), Struct("kli")
    assert prox.term_proximity(work_rel, kle, kli) == uw("0.8", 2)
    assert prox.term_proximity(work_rel, Var("X"), Var("X")) == top
    assert prox.term_proximity(work_rel, Var("X"), Var("Y")) is qdom.BOTTOM
    assert prox.term_proximity(work_rel, Var("X"), Struct("f", (Var("Y"),))) is qdom.BOTTOM
    assert prox.term_proximity(work_rel, Str("a b"), Str("a b")) == top
    assert prox.term_proximity(work_rel, Str("a b"), kle) is qdom.BOTTOM


def test_term_proximity_decomposes_compound_terms():
    rel = prox.load_prox("cprox(f, g, 1, 0.8).\ncprox(a, b, 0, 0.5).", U)
    fa = Struct("f", (Struct("a"),))
    gb = Struct("g", (Struct("b"),))
    ga = Struct("g", (Struct("a"),))
    assert prox.term_proximity(rel, fa, ga) == uval("0.8")
    assert prox.term_proximity(rel, fa, gb) == uval("0.5")  # min(0.8, 0.5)
    assert prox.term_proximity(rel, fa, Struct("h", (Struct("a"),))) is qdom.BOTTOM


def test_closeness_threshold(work_rel):
    kle, kli = Struct("kle"), Struct("kli")
    assert prox.closeness_d(work_rel, UW, uw("0.8", 2), kle, kli)
    assert prox.closeness_d(work_rel, UW, uw("0.5", 7), kle, kli)
    assert not prox.closeness_d(work_rel, UW, uw("0.9", 2), kle, kli)
    assert not prox.closeness_d(work_rel, UW, uw("0.8", 1), kle, kli)
    assert not prox.closeness_d(work_rel, UW, qdom.BOTTOM, kle, kli)
    with pytest.raises(ProxError, match="different qualification domains"):
        prox.closeness_d(work_rel, U, uval("0.5"), kle, kle)


def test_similarity_gap_report():
    rel = prox.load_prox("cprox(a, b, 0, 0.9).\ncprox(b, c, 0, 0.8).", U)
    gaps = prox.similarity_gaps(rel)
    assert any("a/0" in g and "c/0" in g for g in gaps)
    # a transitively closed relation reports nothing
    closed = prox.load_prox(
        "cprox(a, b, 0, 0.9).\ncprox(b, c, 0, 0.8).\ncprox(a, c, 0, 0.8).", U
    )
    assert prox.similarity_gaps(closed) == []


def test_identity_relation_relates_nothing_new():
    rel = prox.identity_relation(U)
    assert prox.lookup(rel, ctor("a", 0), ctor("a", 0)) == qdom.top(U)
    assert prox.lookup(rel, ctor("a", 0), ctor("b", 0)) is qdom.BOTTOM
    assert rel.pairs == []
