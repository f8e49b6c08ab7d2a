from fractions import Fraction

import pytest

from sqclp import oracle, prox, qdom, syntax, transform
from sqclp.oracle import (
    Fixture,
    OracleError,
    OracleLimit,
    ProofTree,
    QcAtom,
    check_eq_lemma,
    check_proof,
    check_theorem_equivalences,
    enumerate_derivable,
    ground_universe,
)
from sqclp.syntax import DefinedAtom, Equation, Num, Primitive, Struct, Var

UW = qdom.parse_domain("(u,w)")
U = qdom.parse_domain("u")
W = qdom.parse_domain("w")
TOP_UW = qdom.top(UW)


def uw(a, b):
    return qdom.value_from_raw(UW, (Fraction(a), Fraction(b)))


def u(a):
    return qdom.value_from_raw(U, Fraction(a))


def w(a):
    return qdom.value_from_raw(W, Fraction(a))


WORK_SRC = """# qdom (u,w)

famous(sha) <-(0.9,1)-
wrote(sha, kle) <-(1,1)-
wrote(sha, hamlet) <-(1,1)-
good_work(G) <-(0.75,3)- famous(A)#(0.5,100), authored(A, G)
"""

WORK_PROX = """pprox(wrote, authored, 2, (0.9,0)).
cprox(kle, kli, 0, (0.8,2)).
"""

THRESH_SRC = """# qdom u

p(X) <-0.9- X == b#?
q(X) <-1- X == b#0.8
"""

WEIGHT_SRC = """# qdom w

p(a) <-2-
q(X) <-1- p(X)#?
"""


@pytest.fixture
def work_unit():
    return syntax.parse_program(WORK_SRC)


@pytest.fixture
def work_rel(work_unit):
    return prox.load_prox(WORK_PROX, work_unit.dom)


@pytest.fixture
def work_universe():
    return [Struct(n) for n in ("sha", "kle", "kli", "hamlet")]


@pytest.fixture
def thresh_unit():
    return syntax.parse_program(THRESH_SRC)


@pytest.fixture
def thresh_rel(thresh_unit):
    return prox.load_prox(
        "cprox(b, a, 0, 0.9).\ncprox(b, c, 0, 0.4).", thresh_unit.dom
    )


ABC = [Struct(n) for n in ("a", "b", "c")]


# --- proof checking ----------------------------------------------------------------


def test_reflexive_equation_leaf_is_valid(work_unit):
    t = Struct("f", (Struct("a"),))
    tree = ProofTree(QcAtom(Equation(t, t), uw("0.3", 7)), "SQEA")
    assert check_proof(work_unit, None, None, tree)


def test_primitive_leaf_is_valid_at_any_qual(work_unit):
    atom = Primitive("cp_le", (Num(Fraction(1)), Num(Fraction(2))))
    assert check_proof(work_unit, None, None, ProofTree(QcAtom(atom, uw(1, 0)), "SQPA"))
    assert check_proof(
        work_unit, None, None, ProofTree(QcAtom(atom, uw("0.01", 999)), "SQPA")
    )


def test_false_primitive_leaf_is_rejected(work_unit):
    atom = Primitive("cp_lt", (Num(Fraction(2)), Num(Fraction(1))))
    assert not check_proof(work_unit, None, None, ProofTree(QcAtom(atom, uw(1, 0)), "SQPA"))


def good_work_tree(root_qual, famous_qual, kli_kle_qual):
    """Clause step for good_work(kli) through the wrote/authored bridge."""
    sha, kli, kle = Struct("sha"), Struct("kli"), Struct("kle")
    famous = ProofTree(
        QcAtom(DefinedAtom("famous", (sha,)), famous_qual),
        "SQDA",
        clause_index=0,
        children=[ProofTree(QcAtom(Equation(sha, sha), TOP_UW), "SQEA")],
    )
    authored = ProofTree(
        QcAtom(DefinedAtom("authored", (sha, kli)), uw("0.8", 2)),
        "SQDA",
        clause_index=1,
        children=[
            ProofTree(QcAtom(Equation(sha, sha), TOP_UW), "SQEA"),
            ProofTree(QcAtom(Equation(kli, kle), kli_kle_qual), "SQEA"),
        ],
    )
    return ProofTree(
        QcAtom(DefinedAtom("good_work", (kli,)), root_qual),
        "SQDA",
        clause_index=3,
        theta={"G": kli, "A": sha},
        children=[
            ProofTree(QcAtom(Equation(kli, kli), TOP_UW), "SQEA"),
            famous,
            authored,
        ],
    )


def test_clause_step_through_predicate_bridge(work_unit, work_rel):
    tree = good_work_tree(uw("0.6", 5), uw("0.9", 1), uw("0.8", 2))
    assert check_proof(work_unit, work_rel, None, tree)


def test_clause_step_rejects_qual_above_ceiling(work_unit, work_rel):
    tree = good_work_tree(uw("0.7", 5), uw("0.9", 1), uw("0.8", 2))
    assert not check_proof(work_unit, work_rel, None, tree)
    tree = good_work_tree(uw("0.6", 4), uw("0.9", 1), uw("0.8", 2))
    assert not check_proof(work_unit, work_rel, None, tree)


def test_clause_step_rejects_threshold_violation(work_unit, work_rel):
    # famous(sha) at (0.4,1) is itself derivable, but the calling clause
    # demands at least (0.5,100) from that premise.
    tree = good_work_tree(uw("0.2", 20), uw("0.4", 1), uw("0.8", 2))
    assert not check_proof(work_unit, work_rel, None, tree)


def test_clause_step_rejects_equation_above_proximity(work_unit, work_rel):
    tree = good_work_tree(uw("0.6", 5), uw("0.9", 1), uw("0.9", 2))
    assert not check_proof(work_unit, work_rel, None, tree)


def test_identity_relation_blocks_the_bridge(work_unit):
    # The same tree under the identity relation: authored never resolves
    # against a wrote clause.
    tree = good_work_tree(uw("0.6", 5), uw("0.9", 1), uw("0.8", 2))
    assert not check_proof(work_unit, None, None, tree)


def test_dangling_clause_reference(work_unit, work_rel):
    tree = good_work_tree(uw("0.6", 5), uw("0.9", 1), uw("0.8", 2))
    tree.clause_index = 17
    with pytest.raises(OracleError, match="dangling clause reference"):
        check_proof(work_unit, work_rel, None, tree)


def test_equation_under_context_entailment(thresh_unit, thresh_rel):
    # With X == a in the context, X == b holds up to the a/b closeness.
    pi = (Equation(Var("X"), Struct("a")),)
    tree = ProofTree(QcAtom(Equation(Var("X"), Struct("b")), u("0.9"), pi), "SQEA")
    assert check_proof(thresh_unit, thresh_rel, None, tree)
    tree = ProofTree(QcAtom(Equation(Var("X"), Struct("b")), u("0.95"), pi), "SQEA")
    assert not check_proof(thresh_unit, thresh_rel, None, tree)


def test_primitive_under_context(work_unit):
    pi = (Primitive("cp_le", (Var("X"), Num(Fraction(2)))),)
    atom = Primitive("cp_le", (Var("X"), Num(Fraction(3))))
    tree = ProofTree(QcAtom(atom, uw(1, 0), pi), "SQPA")
    assert check_proof(work_unit, None, None, tree)
    atom = Primitive("cp_le", (Var("X"), Num(Fraction(1))))
    tree = ProofTree(QcAtom(atom, uw(1, 0), pi), "SQPA")
    assert not check_proof(work_unit, None, None, tree)


def test_unsatisfiable_context_is_an_error(work_unit):
    pi = (Primitive("cp_lt", (Num(Fraction(2)), Num(Fraction(1)))),)
    tree = ProofTree(QcAtom(Equation(Struct("a"), Struct("a")), uw(1, 0), pi), "SQEA")
    with pytest.raises(OracleError, match="unsatisfiable"):
        check_proof(work_unit, None, None, tree)


def test_unknown_rule_tag(work_unit):
    tree = ProofTree(QcAtom(Equation(Struct("a"), Struct("a")), uw(1, 0)), "MODUS")
    with pytest.raises(OracleError, match="unknown rule tag"):
        check_proof(work_unit, None, None, tree)


def test_plain_tree_uses_the_nominal_top(thresh_unit, thresh_rel):
    compiled = transform.compile_program(thresh_unit, thresh_rel)
    eq = Equation(Struct("a"), Struct("a"))
    assert check_proof(compiled, None, None, ProofTree(QcAtom(eq, qdom.B_TOP), "EA"))
    # A real qualification on a plain node is a shape error, not a proof.
    assert not check_proof(compiled, None, None, ProofTree(QcAtom(eq, u("0.9")), "EA"))


# --- enumeration --------------------------------------------------------------------


def test_equation_maxima_match_the_relation(thresh_unit, thresh_rel):
    table = enumerate_derivable(thresh_unit, thresh_rel, None, ABC)
    a, b, c = ABC
    assert table.max_qual(Equation(b, a)) == u("0.9")
    assert table.derivable(Equation(b, a), u("0.9"))
    assert table.max_qual(Equation(b, c)) == u("0.4")
    assert not table.derivable(Equation(b, c), u("0.8"))
    assert table.max_qual(Equation(a, c)) is qdom.BOTTOM


def test_threshold_cuts_one_route_but_not_the_other(thresh_unit, thresh_rel):
    table = enumerate_derivable(thresh_unit, thresh_rel, None, ABC)
    a, b, c = ABC
    # Binding X to b and paying the c/b gap at the head argument beats the
    # direct binding, whose equation premise only reaches 0.4 anyway.
    assert table.max_qual(DefinedAtom("p", (c,))) == u("0.4")
    # q demands 0.8 from its equation premise, so only the head-argument
    # route remains for q(c).
    assert table.max_qual(DefinedAtom("q", (c,))) == u("0.4")
    assert table.max_qual(DefinedAtom("q", (b,))) == u(1)
    assert table.max_qual(DefinedAtom("p", (a,))) == u("0.9")


def test_work_maxima_and_downward_closure(work_unit, work_rel, work_universe):
    table = enumerate_derivable(work_unit, work_rel, None, work_universe)
    kli = DefinedAtom("good_work", (Struct("kli"),))
    assert table.max_qual(kli) == uw("0.675", 4)
    # The weaker classic answer is below the maximum on both components.
    assert table.derivable(kli, uw("0.6", 5))
    assert not table.derivable(kli, uw("0.7", 4))
    assert table.max_qual(DefinedAtom("good_work", (Struct("kle"),))) == uw("0.675", 4)
    assert table.max_qual(DefinedAtom("famous", (Struct("sha"),))) == uw("0.9", 1)


def test_depth_zero_and_monotone_growth(work_unit, work_rel, work_universe):
    t0 = enumerate_derivable(work_unit, work_rel, None, work_universe, depth=0)
    assert all(isinstance(atom, Equation) for atom in t0.table)
    prev = t0
    for depth in (1, 2, 3):
        t = enumerate_derivable(work_unit, work_rel, None, work_universe, depth=depth)
        for atom, q in prev.table.items():
            assert t.derivable(atom, q)
        prev = t
    fix = enumerate_derivable(work_unit, work_rel, None, work_universe)
    assert fix.table == prev.table


def test_node_cap_aborts_with_a_distinct_signal(work_unit, work_rel, work_universe):
    with pytest.raises(OracleLimit):
        enumerate_derivable(work_unit, work_rel, None, work_universe, node_cap=10)


def test_additive_domain_maxima():
    unit = syntax.parse_program(WEIGHT_SRC)
    rel = prox.load_prox("cprox(a, b, 0, 3).", unit.dom)
    ab = [Struct("a"), Struct("b")]
    table = enumerate_derivable(unit, rel, None, ab)
    assert table.max_qual(DefinedAtom("p", (Struct("a"),))) == w(2)
    assert table.max_qual(DefinedAtom("p", (Struct("b"),))) == w(3)
    assert table.max_qual(DefinedAtom("q", (Struct("a"),))) == w(3)
    # Both routes to q(b) cost 3: through p(b), or through the a/b argument
    # gap; the direct route through p(a) would cost 4 and loses.
    assert table.max_qual(DefinedAtom("q", (Struct("b"),))) == w(3)
    assert table.derivable(DefinedAtom("q", (Struct("b"),)), w(4))


def test_plain_enumeration_against_value_grid(thresh_unit, thresh_rel):
    compiled = transform.compile_program(thresh_unit, thresh_rel)
    grid = [
        syntax.qvalue_to_term(U, u(x))
        for x in ("0.36", "0.4", "0.72", "0.8", "0.81", "0.9", "1")
    ]
    table = enumerate_derivable(
        compiled, None, qdom.QEncoding(U), ABC, node_cap=300_000, qual_terms=grid
    )
    derived = {
        (atom.name, atom.args)
        for atom in table.defined_atoms()
    }
    b = Struct("b")
    one = syntax.qvalue_to_term(U, u(1))
    assert (transform.EQ_PRED, (b, Struct("a"), syntax.qvalue_to_term(U, u("0.9")))) in derived
    assert ("q", (b, one)) in derived
    assert ("p", (b, syntax.qvalue_to_term(U, u("0.9")))) in derived
    assert ("p", (b, one)) not in derived


def test_plain_enumeration_defaults_to_top_only(thresh_unit, thresh_rel):
    compiled = transform.compile_program(thresh_unit, thresh_rel)
    table = enumerate_derivable(compiled, None, qdom.QEncoding(U), ABC)
    names = {atom.name for atom in table.defined_atoms()}
    assert "q" in names  # q(b) holds outright
    assert "p" not in names  # every p fact sits strictly below the top


def test_ground_universe_layers():
    uni = ground_universe([("a", 0), ("f", 1)], 2)
    assert [syntax.render_term(t) for t in uni] == ["a", "f(a)", "f(f(a))"]
    assert len(ground_universe([("a", 0), ("f", 1), ("g", 1)], 2)) == 7


# --- transformation agreement ---------------------------------------------------------


def test_three_way_agreement_on_the_work_program(work_unit, work_rel, work_universe):
    report = check_theorem_equivalences(
        Fixture("work", work_unit, work_rel, work_universe)
    )
    assert report.agree, report.summary()
    assert report.checked >= 10
    assert report.summary().startswith("work: all agree")


def test_three_way_agreement_on_thresholds(thresh_unit, thresh_rel):
    report = check_theorem_equivalences(
        Fixture("thresholds", thresh_unit, thresh_rel, ABC)
    )
    assert report.agree, report.summary()


def test_three_way_agreement_on_additive_weights():
    unit = syntax.parse_program(WEIGHT_SRC)
    rel = prox.load_prox("cprox(a, b, 0, 3).", unit.dom)
    report = check_theorem_equivalences(
        Fixture("weights", unit, rel, [Struct("a"), Struct("b")])
    )
    assert report.agree, report.summary()


def test_agreement_with_identity_relation_passes_the_source_through(thresh_unit):
    report = check_theorem_equivalences(
        Fixture("identity", thresh_unit, None, ABC)
    )
    assert report.agree, report.summary()


def test_agreement_on_the_two_point_domain():
    unit = syntax.parse_program("# qdom b\n\np(a) <--\nq(X) <-- p(X)#?\n")
    report = check_theorem_equivalences(
        Fixture("two point", unit, None, [Struct("a"), Struct("b")])
    )
    assert report.agree, report.summary()


def test_empty_fixture_is_vacuous():
    unit = syntax.ProgramUnit(dom=U)
    report = check_theorem_equivalences(Fixture("empty", unit, None, [Struct("a")]))
    assert report.agree
    assert report.checked == 1  # the reflexive equation over the universe


def test_disagreement_is_reported_not_swallowed(work_unit, work_rel, work_universe):
    # Sabotage the staged program by dropping the equation clauses: the
    # bridges then starve and the compiled sides lose answers.
    staged = transform.elim_prox(work_unit, work_rel)
    staged.clauses = [c for c in staged.clauses if c.head.name != transform.EQ_PRED]

    def fake_elim(unit, rel):
        return staged

    real = transform.elim_prox
    transform.elim_prox = fake_elim
    try:
        report = check_theorem_equivalences(
            Fixture("sabotaged", work_unit, work_rel, work_universe)
        )
    finally:
        transform.elim_prox = real
    assert not report.agree
    assert "sabotaged" in report.summary()


def test_equation_clause_lemma():
    pairs = {
        (prox.ctor("f", 1), prox.ctor("g", 1)): u("0.8"),
    }
    rel = prox.ProximityRelation(U, pairs)
    universe = ground_universe([("a", 0), ("f", 1), ("g", 1)], 2)
    report = check_eq_lemma(rel, universe)
    assert report.agree, report.summary()
    assert report.checked == len(universe) ** 2


def test_equation_clause_lemma_identity():
    rel = prox.identity_relation(U)
    universe = ground_universe([("a", 0), ("f", 1)], 2)
    report = check_eq_lemma(rel, universe)
    assert report.agree, report.summary()
