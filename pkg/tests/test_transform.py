from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from sqclp import prox, qdom, syntax, transform
from sqclp.syntax import (
    BodyItem,
    Clause,
    DefinedAtom,
    Num,
    Primitive,
    ProgramUnit,
    Struct,
    Var,
)
from sqclp.transform import TransformError

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

UW = qdom.parse_domain("(u,w)")
U = qdom.parse_domain("u")


def uw(a, b):
    return qdom.value_from_raw(UW, (Fraction(a), Fraction(b)))


@pytest.fixture
def work_unit():
    return syntax.parse_program((FIXTURES / "pr.qclp").read_text())


@pytest.fixture
def work_rel(work_unit):
    return prox.load_prox((FIXTURES / "pr.prox").read_text(), work_unit.dom)


# --- golden transcripts ------------------------------------------------------


def test_elim_prox_golden(work_unit, work_rel):
    staged = transform.elim_prox(work_unit, work_rel)
    assert syntax.emit_qclp_source(staged) == (GOLDEN / "pr_elim_prox.txt").read_text()


def test_elim_qdom_golden(work_unit, work_rel):
    lowered = transform.elim_qdom(transform.elim_prox(work_unit, work_rel))
    assert syntax.emit_clp_source(lowered) == (GOLDEN / "pr_elim_qdom.txt").read_text()


def test_optimized_golden(work_unit, work_rel):
    final = transform.compile_program(work_unit, work_rel)
    assert syntax.emit_clp_source(final) == (GOLDEN / "pr_optimized.txt").read_text()


def test_goal_golden(work_rel):
    goal = syntax.parse_goal("good_work(X)#W :: W >= (0.5,10).", UW)
    literal = transform.compile_goal(goal, UW, work_rel, optimize=False)
    assert literal.render() == (
        "qVal(W), qBound((0.5,10), top, W), qVal(W1), qBound(W, top, W1), "
        "good_work(X, W1)"
    )
    assert literal.internal == ["W1"]
    fused = transform.compile_goal(goal, UW, work_rel)
    assert fused.render() == "qVal(W), qBound((0.5,10), top, W), good_work(X, W)"
    assert fused.internal == []
    assert fused.wvars == {"W": "W"}
    assert fused.term_vars == ["X"]


def test_compiled_source_reloads(work_unit, work_rel):
    # pay__0.9_0 etc. must survive a tokenize/parse round trip
    lowered = transform.elim_qdom(transform.elim_prox(work_unit, work_rel))
    text = syntax.emit_clp_source(lowered)
    back = syntax.parse_program(text, dialect="clp")
    assert back.dom == UW
    assert not back.optimized_unif
    assert syntax.emit_clp_source(back) == text


# --- proximity elimination ----------------------------------------------------


def test_identity_relation_passes_through(work_unit):
    rel = prox.identity_relation(UW)
    assert transform.elim_prox(work_unit, rel) is work_unit
    goal = syntax.parse_goal("(X == sha)#W.", UW)
    assert transform.elim_prox_goal(goal, rel) is goal


def test_hat_clauses_keep_attenuation_and_thresholds(work_unit, work_rel):
    staged = transform.elim_prox(work_unit, work_rel)
    by_name = {c.head.name: c for c in staged.clauses}
    hat = by_name["good_work__c4"]
    assert hat.atten == uw("0.75", 3)
    assert hat.body[0].threshold == uw("0.5", 100)
    assert hat.body[1].threshold is None


def test_bridges_per_close_predicate(work_unit, work_rel):
    staged = transform.elim_prox(work_unit, work_rel)
    heads = [c.head.name for c in staged.clauses]
    # one self bridge per clause and an authored bridge per wrote clause
    assert heads.count("wrote") == 2
    assert heads.count("authored") == 2
    authored = [c for c in staged.clauses if c.head.name == "authored"][0]
    first = authored.body[0].atom
    assert isinstance(first, DefinedAtom) and first.name == "pay__0.9_0"


def test_basic_value_pairs_become_eqp_facts():
    unit = syntax.parse_program("# qdom u\n\np(1) <--\n")
    rel = prox.load_prox("cprox(2, 3, 0, 0.5).\n", U)
    staged = transform.elim_prox(unit, rel)
    eqp = [c for c in staged.clauses if c.head.name == "eqp" and c.head.args]
    numeric = [c.head.args for c in eqp if isinstance(c.head.args[0], Num)]
    assert (Num(Fraction(2)), Num(Fraction(3))) in numeric
    assert (Num(Fraction(3)), Num(Fraction(2))) in numeric
    # no reflexive facts for basic values: the variable clause covers them
    assert (Num(Fraction(2)), Num(Fraction(2))) not in numeric


def test_compound_constructor_pairs_decompose():
    unit = syntax.parse_program("# qdom u\n\np(f(a)) <--\n")
    rel = prox.load_prox("cprox(f, g, 1, 0.8).\n", U)
    staged = transform.elim_prox(unit, rel)
    wanted = [
        c
        for c in staged.clauses
        if c.head.name == "eqp"
        and c.head.args
        and isinstance(c.head.args[0], Struct)
        and c.head.args[0].name == "f"
        and isinstance(c.head.args[1], Struct)
        and c.head.args[1].name == "g"
    ]
    assert len(wanted) == 1
    body = wanted[0].body
    assert [a.atom.name for a in body] == ["pay__0.8", "eqp"]
    assert body[1].atom.args == (Var("X1"), Var("Y1"))


def test_bridge_variables_avoid_clause_variables():
    unit = syntax.parse_program("# qdom u\n\np(X1, Y) <-- q(X1)\n")
    rel = prox.load_prox("pprox(p, r, 2, 0.9).\n", U)
    staged = transform.elim_prox(unit, rel)
    bridge = [c for c in staged.clauses if c.head.name == "r"][0]
    names = [t.name for t in bridge.head.args]
    assert len(set(names)) == 2
    assert "X1" not in names  # taken by the source clause


def test_elim_prox_rejects_domain_mismatch(work_unit):
    rel = prox.load_prox("cprox(a, b, 0, 0.5).\n", U)
    with pytest.raises(TransformError):
        transform.elim_prox(work_unit, rel)


def test_reserved_names_are_rejected():
    unit = syntax.parse_program("# qdom u\n\neqp(a, b) <--\n")
    rel = prox.load_prox("cprox(a, b, 0, 0.5).\n", U)
    with pytest.raises(TransformError, match="eqp"):
        transform.elim_prox(unit, rel)
    unit2 = syntax.parse_program("# qdom u\n\np(pay__top) <--\n")
    with pytest.raises(TransformError, match="pay__top"):
        transform.elim_prox(unit2, rel)
    unit3 = syntax.parse_program("# qdom u\n\nq__c1(a) <--\n")
    with pytest.raises(TransformError, match="q__c1"):
        transform.elim_prox(unit3, rel)


# --- qualification elimination --------------------------------------------------


def test_every_predicate_gains_one_argument(work_unit, work_rel):
    staged = transform.elim_prox(work_unit, work_rel)
    before = dict(syntax.predicates_in_order(staged.clauses))
    lowered = transform.elim_qdom(staged)
    after = dict(syntax.predicates_in_order(lowered.clauses))
    for name, arity in before.items():
        assert after[name] == arity + 1
    assert after["qVal"] == 1
    assert after["qBound"] == 3


def test_facts_get_the_attenuation_bound():
    unit = syntax.parse_program("# qdom u\n\np(a) <-0.9-\n")
    lowered = transform.elim_qdom(unit)
    clause = lowered.clauses[0]
    assert syntax.render_clp_clause(clause) == (
        "p(a, W) :- qVal(W), qBound(W, 1, 0.9)."
    )


def test_head_variable_avoids_source_w():
    unit = syntax.parse_program("# qdom u\n\np(W) <-- q(W)\n")
    lowered = transform.elim_qdom(unit)
    head = lowered.clauses[0].head
    assert head.args[0] == Var("W")
    assert head.args[1] != Var("W")


def test_elim_qdom_rejects_guard_predicates():
    unit = syntax.parse_program("# qdom u\n\nqVal(a) <--\n")
    with pytest.raises(TransformError, match="qVal"):
        transform.elim_qdom(unit)


def test_domain_clauses_scalar_w():
    w = qdom.parse_domain("w")
    rendered = [syntax.render_clp_clause(c) for c in transform.domain_clauses(w)]
    assert rendered == [
        "qVal(X) :- {X >= 0}.",
        "qBound(X, Y, Z) :- {X >= Y+Z}.",
    ]


def test_domain_clauses_scalar_b():
    b = qdom.parse_domain("b")
    rendered = [syntax.render_clp_clause(c) for c in transform.domain_clauses(b)]
    assert rendered == ["qVal(1).", "qBound(1, 1, 1)."]


def test_domain_clauses_three_leaf_product():
    dom = qdom.parse_domain("(u,w,u)")
    rendered = [syntax.render_clp_clause(c) for c in transform.domain_clauses(dom)]
    assert rendered == [
        "qVal((X1,X2,X3)) :- {X1 > 0, X1 =< 1, X2 >= 0, X3 > 0, X3 =< 1}.",
        "qBound((X1,X2,X3), (Y1,Y2,Y3), (Z1,Z2,Z3)) :- "
        "{X1 =< Y1*Z1, X2 >= Y2+Z2, X3 =< Y3*Z3}.",
    ]


qvalues = st.one_of(
    st.fractions(min_value=Fraction(1, 100), max_value=1).map(
        lambda u: (u, Fraction(0))
    ),
    st.tuples(
        st.fractions(min_value=Fraction(1, 100), max_value=1),
        st.fractions(min_value=0, max_value=30),
    ),
).map(lambda t: qdom.value_from_raw(UW, t))


@given(atten=qvalues, thresh=st.one_of(st.none(), qvalues), body_len=st.integers(0, 3))
def test_guard_counts(atten, thresh, body_len):
    body = tuple(
        BodyItem(DefinedAtom("q", (Var(f"A{i}"),)), thresh) for i in range(body_len)
    )
    unit = ProgramUnit(
        dom=UW, clauses=[Clause(DefinedAtom("p", (Var("A"),)), atten, body)]
    )
    lowered = transform.elim_qdom(unit)
    atoms = [item.atom for item in lowered.clauses[0].body]
    qvals = [a for a in atoms if isinstance(a, DefinedAtom) and a.name == "qVal"]
    qbounds = [a for a in atoms if isinstance(a, DefinedAtom) and a.name == "qBound"]
    assert len(qvals) == 1 + body_len
    if body_len == 0:
        assert len(qbounds) == 1  # the attenuation completion
    else:
        assert len(qbounds) == body_len * (1 if thresh is None else 2)


# --- optimization passes ---------------------------------------------------------


@pytest.fixture
def lowered(work_unit, work_rel):
    return transform.elim_qdom(transform.elim_prox(work_unit, work_rel))


def test_pay_unfolding_removes_all_toll_clauses(lowered):
    optimized = transform.optimize_eq_clauses(lowered)
    assert not any(c.head.name.startswith("pay__") for c in optimized.clauses)
    for clause in optimized.clauses:
        for item in clause.body:
            if isinstance(item.atom, DefinedAtom):
                assert not item.atom.name.startswith("pay__")


def test_pay_unfolding_pins_eq_clause_shape(lowered):
    optimized = transform.simplify_guards(transform.optimize_eq_clauses(lowered))
    rendered = [syntax.render_clp_clause(c) for c in optimized.clauses]
    assert "eqp(X, Y, W) :- qVal(W), X == Y." in rendered
    assert "eqp(sha, sha, W) :- qVal(W)." in rendered
    assert "eqp(kle, kli, W) :- qVal(W), qBound(W, top, (0.8,2))." in rendered


def test_pay_unfolding_keeps_bridge_tolls(lowered):
    optimized = transform.simplify_guards(transform.optimize_eq_clauses(lowered))
    authored = [c for c in optimized.clauses if c.head.name == "authored"][0]
    first = authored.body[1].atom
    assert isinstance(first, DefinedAtom) and first.name == "qBound"
    assert syntax.render_atom(first) == "qBound(W, top, (0.9,0))"


def test_simplify_drops_constant_true_guards():
    unit = syntax.parse_program("# qdom u\n\np(a) <--\n")
    final = transform.compile_program(unit)
    assert syntax.render_clp_clause(final.clauses[0]) == "p(a, W) :- qVal(W)."


def test_simplify_keeps_binding_guards():
    # qBound(W, a, top) constrains W whenever a is below the top
    body = (
        BodyItem(DefinedAtom("qVal", (Var("W"),))),
        BodyItem(
            DefinedAtom("qBound", (Var("W"), Num(Fraction(9, 10)), Num(Fraction(1))))
        ),
    )
    unit = ProgramUnit(
        dom=U,
        clauses=[Clause(DefinedAtom("p", (Var("W"),)), qdom.top(U), body)],
        dialect="clp",
    )
    out = transform.simplify_guards(unit)
    assert len(out.clauses[0].body) == 2

    relaxed = ProgramUnit(
        dom=U,
        clauses=[
            Clause(
                DefinedAtom("p", (Var("W"),)),
                qdom.top(U),
                (
                    body[0],
                    BodyItem(
                        DefinedAtom(
                            "qBound", (Var("W"), Num(Fraction(1)), Num(Fraction(1)))
                        )
                    ),
                ),
            )
        ],
        dialect="clp",
    )
    out = transform.simplify_guards(relaxed)
    assert len(out.clauses[0].body) == 1


def test_goal_fusion_multiple_items():
    rel = prox.load_prox("cprox(a, b, 0, 0.8).\n", U)
    goal = syntax.parse_goal(
        "(X == a)#W1, (X == b)#W2 :: W1 >= 0.8, W2 >= 0.8.", U
    )
    fused = transform.compile_goal(goal, U, rel)
    assert fused.render() == (
        "qVal(W1), qBound(0.8, 1, W1), eqp(X, a, W1), "
        "qVal(W2), qBound(0.8, 1, W2), eqp(X, b, W2)"
    )
    assert fused.internal == []


def test_goal_without_condition_keeps_qval():
    goal = syntax.parse_goal("p(X)#W.", U)
    fused = transform.compile_goal(goal, U)
    assert fused.render() == "qVal(W), p(X, W)"
