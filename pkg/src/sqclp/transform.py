"""Program transformations to plain CLP over real arithmetic.

Two stages take a qualified program with a proximity relation down to an
ordinary constraint logic program:

* ``elim_prox`` compiles the proximity relation away.  Each source clause
  gets a renamed "hat" copy plus one bridging clause per predicate close to
  its head predicate; equations move to the ``eqp`` predicate, whose clauses
  (variable case, one decomposition clause per related constructor pair,
  ``pay__*`` toll facts) replay proximity during unification.
* ``elim_qdom`` compiles the qualification domain away.  Predicates grow a
  trailing qualification argument and every clause gains ``qVal``/``qBound``
  guard atoms tying that argument to the attenuation value, the body atoms'
  qualifications, and the declared thresholds.  Clauses defining ``qVal``
  and ``qBound`` for the concrete domain close the program.

Both stages are pure program-to-program functions on the syntax-module AST.
The optimization passes (``optimize_eq_clauses`` unfolds the pay toll calls,
``simplify_guards`` drops guards that are constant-true, ``optimize_goal``
fuses per-atom qualification variables into the goal's own ones) preserve
the answer set; ``compile_program``/``compile_goal`` run the whole pipeline
the way the command line driver does.

Generated names (``<pred>__c<k>`` for hat predicates, ``pay__<value>``,
``eqp``, ``qVal``, ``qBound``, and the variables ``W``/``W<i>``/``X<i>``)
are reserved; colliding source programs are rejected up front.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import prox, qdom, syntax
from .prox import ProximityRelation, SymbolKey
from .qdom import QDomain, QValue
from .syntax import (
    Atom,
    BodyItem,
    Bin,
    Clause,
    DefinedAtom,
    Equation,
    Goal,
    Num,
    Primitive,
    ProgramUnit,
    Struct,
    Term,
    Tup,
    Var,
)


class TransformError(ValueError):
    pass


# --- reserved names -------------------------------------------------------------

EQ_PRED = "eqp"
PAY_PREFIX = "pay__"
QVAL = "qVal"
QBOUND = "qBound"

_HAT_RE = re.compile(r".*__c\d+$")


def _is_reserved(name: str) -> bool:
    return (
        name in (EQ_PRED, QVAL, QBOUND)
        or name.startswith(PAY_PREFIX)
        or bool(_HAT_RE.match(name))
    )


def _hat_name(pred_name: str, ordinal: int) -> str:
    return f"{pred_name}__c{ordinal}"


def _pay_name(dom: QDomain, value: QValue) -> str:
    if value == qdom.top(dom):
        return PAY_PREFIX + "top"
    literal = qdom.render_qvalue(value)
    return PAY_PREFIX + literal.replace("(", "").replace(")", "").replace(",", "_")


def _check_program_names(unit: ProgramUnit, rel: Optional[ProximityRelation]) -> None:
    offenders: list[str] = []
    for clause in unit.clauses:
        names = [clause.head.name]
        for item in clause.body:
            if isinstance(item.atom, DefinedAtom):
                names.append(item.atom.name)
        names.extend(name for name, _ in syntax.constructors_in_order([clause]))
        offenders.extend(n for n in names if _is_reserved(n))
    if rel is not None:
        offenders.extend(s.name for s in rel.symbols() if _is_reserved(s.name))
    if offenders:
        raise TransformError(
            f"reserved name in source program: {sorted(set(offenders))[0]!r}"
        )


def _fresh_names(prefix: str, count: int, used: set[str]) -> list[str]:
    """count names prefix1..prefixN, bumping a suffix past any name in use."""
    out = []
    for i in range(1, count + 1):
        candidate, bump = f"{prefix}{i}", 0
        while candidate in used:
            bump += 1
            candidate = f"{prefix}{i}_{bump}"
        used.add(candidate)
        out.append(candidate)
    return out


def _clause_var_names(clause: Clause) -> set[str]:
    names: list[str] = []
    for t in clause.head.args:
        syntax.term_vars(t, names)
    for item in clause.body:
        for t in syntax.atom_terms(item.atom):
            syntax.term_vars(t, names)
    return set(names)


# --- proximity elimination -------------------------------------------------------


def _atom_eqp(atom: Atom) -> Atom:
    if isinstance(atom, Equation):
        return DefinedAtom(EQ_PRED, (atom.lhs, atom.rhs))
    return atom


def elim_prox(unit: ProgramUnit, rel: ProximityRelation) -> ProgramUnit:
    """Compile the proximity relation into ordinary clauses.

    With no declared pairs the relation is the identity and the program is
    returned unchanged: equations then mean plain unification, which the
    target language already has.
    """
    if unit.dialect != "qclp":
        raise TransformError("proximity elimination expects a qualified source program")
    if unit.dom is None:
        raise TransformError("program has no qualification domain")
    if rel.dom != unit.dom:
        raise TransformError("relation and program use different qualification domains")
    if not rel.pairs:
        return unit
    _check_program_names(unit, rel)

    dom = unit.dom
    top_val = qdom.top(dom)
    out: list[Clause] = []

    for ordinal, clause in enumerate(unit.clauses, start=1):
        pred_name = clause.head.name
        arity = len(clause.head.args)
        hat = _hat_name(pred_name, ordinal)
        hat_body = tuple(
            BodyItem(_atom_eqp(item.atom), item.threshold) for item in clause.body
        )
        out.append(Clause(DefinedAtom(hat, clause.head.args), clause.atten, hat_body))

        partners: list[tuple[str, QValue]] = [(pred_name, top_val)]
        for key, lam in rel.partners(prox.pred(pred_name, arity)):
            if key.kind == "pred":
                partners.append((key.name, lam))
        used = _clause_var_names(clause)
        fresh = _fresh_names("X", arity, used)
        for other_name, lam in partners:
            body = [BodyItem(DefinedAtom(_pay_name(dom, lam)))]
            for x, t in zip(fresh, clause.head.args):
                body.append(BodyItem(DefinedAtom(EQ_PRED, (Var(x), t))))
            body.append(BodyItem(DefinedAtom(hat, clause.head.args)))
            head = DefinedAtom(other_name, tuple(Var(x) for x in fresh))
            out.append(Clause(head, top_val, tuple(body)))

    out.extend(_eq_clauses(unit, rel))

    result = ProgramUnit(
        dom=dom,
        prox_name=None,
        optimized_unif=unit.optimized_unif,
        clauses=out,
        meta={"unif": "sim" if unit.optimized_unif else "prox"},
        dialect="qclp",
    )
    return result


def _eq_clauses(unit: ProgramUnit, rel: ProximityRelation) -> list[Clause]:
    """The eqp predicate: variable clause, then a decomposition clause per
    related constructor pair (every known constructor is related to itself),
    then the pay toll facts."""
    dom = rel.dom
    top_val = qdom.top(dom)
    pay_top = _pay_name(dom, top_val)
    clauses = [
        Clause(
            DefinedAtom(EQ_PRED, (Var("X"), Var("Y"))),
            top_val,
            (BodyItem(Equation(Var("X"), Var("Y"))),),
        )
    ]

    ctors = syntax.constructors_in_order(unit.clauses)
    for a, b, _ in rel.pairs:
        for s in (a, b):
            if s.kind == "ctor" and (s.name, s.arity) not in ctors:
                ctors.append((s.name, s.arity))
    for name, arity in ctors:
        clauses.append(_eq_pair_clause(dom, (name, arity), (name, arity), pay_top))

    for a, b, lam in rel.pairs:
        if a.kind == "pred":
            continue
        pay = _pay_name(dom, lam)
        if a.kind == "basic":
            ta, tb = Num(Fraction(a.name)), Num(Fraction(b.name))
            clauses.append(Clause(DefinedAtom(EQ_PRED, (ta, tb)), top_val, (BodyItem(DefinedAtom(pay)),)))
            clauses.append(Clause(DefinedAtom(EQ_PRED, (tb, ta)), top_val, (BodyItem(DefinedAtom(pay)),)))
        else:
            clauses.append(_eq_pair_clause(dom, (a.name, a.arity), (b.name, b.arity), pay))
            clauses.append(_eq_pair_clause(dom, (b.name, b.arity), (a.name, a.arity), pay))

    pay_values = [top_val] + [v for v in rel.values() if v != top_val]
    for v in pay_values:
        clauses.append(Clause(DefinedAtom(_pay_name(dom, v)), v))
    return clauses


def _pair_term(name: str, args: tuple[Term, ...]) -> Term:
    if name == "(,)":
        return Tup(args)
    return Struct(name, args)


def _eq_pair_clause(dom: QDomain, left: tuple[str, int], right: tuple[str, int], pay: str) -> Clause:
    arity = left[1]
    xs = tuple(Var(f"X{i}") for i in range(1, arity + 1))
    ys = tuple(Var(f"Y{i}") for i in range(1, arity + 1))
    body = [BodyItem(DefinedAtom(pay))]
    body.extend(BodyItem(DefinedAtom(EQ_PRED, (x, y))) for x, y in zip(xs, ys))
    head = DefinedAtom(EQ_PRED, (_pair_term(left[0], xs), _pair_term(right[0], ys)))
    return Clause(head, qdom.top(dom), tuple(body))


def elim_prox_goal(goal: Goal, rel: ProximityRelation) -> Goal:
    if not rel.pairs:
        return goal
    return Goal(
        items=[(_atom_eqp(atom), w) for atom, w in goal.items],
        conditions=dict(goal.conditions),
    )


# --- qualification-domain elimination ----------------------------------------------


def _value_term(dom: QDomain, d: QValue) -> Term:
    """Value literal as a target-language term.

    The whole-domain top of a product domain prints as ``top``; every other
    value (scalar tops included) stays numeric, matching the convention of
    the compiled-program surface syntax.
    """
    if isinstance(dom, qdom.Prod) and d == qdom.top(dom):
        return syntax.TOP
    return syntax._shape_to_term(qdom.encode(qdom.QEncoding(dom), d))


def _guards(dom: QDomain, *, qval_of: Term, bound: Optional[tuple[Term, Term, Term]]) -> list[Atom]:
    out: list[Atom] = [DefinedAtom(QVAL, (qval_of,))]
    if bound is not None:
        out.append(DefinedAtom(QBOUND, bound))
    return out


def _transform_atom(atom: Atom, dom: QDomain, fresh: list[str]) -> tuple[Atom, Term]:
    """An atom plus the term carrying its qualification: a fresh variable for
    defined atoms (appended as the new last argument), the top literal for
    equations and primitive constraints."""
    if isinstance(atom, DefinedAtom):
        w = fresh.pop(0)
        return DefinedAtom(atom.name, atom.args + (Var(w),)), Var(w)
    return atom, _value_term(dom, qdom.top(dom))


def _mentions_guard_preds(unit: ProgramUnit) -> Optional[str]:
    for clause in unit.clauses:
        if clause.head.name in (QVAL, QBOUND):
            return clause.head.name
        for item in clause.body:
            if isinstance(item.atom, DefinedAtom) and item.atom.name in (QVAL, QBOUND):
                return item.atom.name
    return None


def elim_qdom(unit: ProgramUnit) -> ProgramUnit:
    """Compile qualification values into an extra argument guarded by
    qVal/qBound constraints, appending the clauses defining both predicates
    for the program's domain."""
    if unit.dialect != "qclp":
        raise TransformError("qualification elimination expects a qualified program")
    if unit.dom is None:
        raise TransformError("program has no qualification domain")
    bad = _mentions_guard_preds(unit)
    if bad is not None:
        raise TransformError(f"source program already mentions {bad}")

    dom = unit.dom
    top_term = _value_term(dom, qdom.top(dom))
    out: list[Clause] = []

    for clause in unit.clauses:
        used = _clause_var_names(clause)
        defined_count = sum(
            1 for item in clause.body if isinstance(item.atom, DefinedAtom)
        )
        head_w, bump = "W", 0
        while head_w in used:
            bump += 1
            head_w = f"W_{bump}"
        used.add(head_w)
        fresh = _fresh_names("W", defined_count, used)
        alpha_term = _value_term(dom, clause.atten)

        body: list[Atom] = [DefinedAtom(QVAL, (Var(head_w),))]
        if not clause.body:
            body.append(DefinedAtom(QBOUND, (Var(head_w), top_term, alpha_term)))
        for item in clause.body:
            atom2, w_term = _transform_atom(item.atom, dom, fresh)
            body.append(DefinedAtom(QVAL, (w_term,)))
            if item.threshold is not None:
                thr = _value_term(dom, item.threshold)
                body.append(DefinedAtom(QBOUND, (thr, top_term, w_term)))
            body.append(DefinedAtom(QBOUND, (Var(head_w), alpha_term, w_term)))
            body.append(atom2)

        head = DefinedAtom(clause.head.name, clause.head.args + (Var(head_w),))
        out.append(Clause(head, qdom.top(dom), tuple(BodyItem(a) for a in body)))

    out.extend(domain_clauses(dom))

    meta = {"qdom": qdom.render_domain(dom)}
    meta.update({k: v for k, v in unit.meta.items() if k != "qdom"})
    return ProgramUnit(
        dom=dom,
        prox_name=None,
        optimized_unif=unit.optimized_unif,
        clauses=out,
        meta=meta,
        dialect="clp",
    )


def domain_clauses(dom: QDomain) -> list[Clause]:
    """The qVal/qBound clauses specialized to one domain.

    Scalar domains get plain heads (the boolean one degenerates to facts);
    product domains get flat tuple heads, one variable per leaf, with the
    per-leaf constraints merged into a single brace group.
    """
    kinds = [leaf.kind for leaf in qdom.leaves(dom)]
    top_val = qdom.top(dom)
    if kinds == ["b"]:
        one = Num(Fraction(1))
        return [
            Clause(DefinedAtom(QVAL, (one,)), top_val),
            Clause(DefinedAtom(QBOUND, (one, one, one)), top_val),
        ]

    def leaf_vars(prefix: str) -> list[Term]:
        if len(kinds) == 1:
            return [Var(prefix)]
        return [Var(f"{prefix}{i}") for i in range(1, len(kinds) + 1)]

    def head_arg(vs: list[Term]) -> Term:
        return vs[0] if len(vs) == 1 else Tup(tuple(vs))

    xs, ys, zs = leaf_vars("X"), leaf_vars("Y"), leaf_vars("Z")
    zero, one = Num(Fraction(0)), Num(Fraction(1))

    qval_body: list[BodyItem] = []
    for kind, x in zip(kinds, xs):
        if kind == "u":
            qval_body.append(BodyItem(Primitive("cp_gt", (x, zero))))
            qval_body.append(BodyItem(Primitive("cp_le", (x, one))))
        elif kind == "w":
            qval_body.append(BodyItem(Primitive("cp_ge", (x, zero))))
        else:
            qval_body.append(BodyItem(Primitive("cp_eq", (x, one))))

    qbound_body: list[BodyItem] = []
    for kind, x, y, z in zip(kinds, xs, ys, zs):
        if kind == "u":
            qbound_body.append(BodyItem(Primitive("cp_le", (x, Bin("*", y, z)))))
        elif kind == "w":
            qbound_body.append(BodyItem(Primitive("cp_ge", (x, Bin("+", y, z)))))
        else:
            for v in (x, y, z):
                qbound_body.append(BodyItem(Primitive("cp_eq", (v, one))))

    return [
        Clause(DefinedAtom(QVAL, (head_arg(xs),)), top_val, tuple(qval_body)),
        Clause(
            DefinedAtom(QBOUND, (head_arg(xs), head_arg(ys), head_arg(zs))),
            top_val,
            tuple(qbound_body),
        ),
    ]


# --- goal transformation ---------------------------------------------------------


@dataclass
class CompiledGoal:
    """A goal lowered to a flat atom list.

    ``wvars`` maps each source qualification variable to the variable that
    carries its value at runtime (the same name, for this transformation).
    ``internal`` lists the per-atom helper variables; answer printing
    eliminates them.  ``term_vars`` are the goal's ordinary variables in
    first-occurrence order.
    """

    atoms: list[Atom]
    wvars: dict[str, str] = field(default_factory=dict)
    internal: list[str] = field(default_factory=list)
    term_vars: list[str] = field(default_factory=list)

    def render(self) -> str:
        return syntax.render_atom_seq(self.atoms)


def elim_qdom_goal(goal: Goal, dom: QDomain) -> CompiledGoal:
    """Per goal atom: qVal on its qualification variable, the threshold
    bound when declared, then the qVal/qBound pair linking the atom's own
    qualification, then the atom."""
    top_term = _value_term(dom, qdom.top(dom))
    term_vars: list[str] = []
    for atom, _ in goal.items:
        for t in syntax.atom_terms(atom):
            syntax.term_vars(t, term_vars)
    used = set(term_vars) | {w for _, w in goal.items}

    defined_count = sum(1 for atom, _ in goal.items if isinstance(atom, DefinedAtom))
    fresh = _fresh_names("W", defined_count, used)

    atoms: list[Atom] = []
    internal: list[str] = []
    for atom, w in goal.items:
        atoms.append(DefinedAtom(QVAL, (Var(w),)))
        beta = goal.conditions.get(w)
        if beta is not None:
            atoms.append(DefinedAtom(QBOUND, (_value_term(dom, beta), top_term, Var(w))))
        atom2, w_term = _transform_atom(atom, dom, fresh)
        if isinstance(w_term, Var):
            internal.append(w_term.name)
        atoms.append(DefinedAtom(QVAL, (w_term,)))
        atoms.append(DefinedAtom(QBOUND, (Var(w), top_term, w_term)))
        atoms.append(atom2)

    return CompiledGoal(
        atoms=atoms,
        wvars={w: w for _, w in goal.items},
        internal=internal,
        term_vars=term_vars,
    )


def optimize_goal(cg: CompiledGoal) -> CompiledGoal:
    """Fuse each single-use helper variable into the goal variable it bounds.

    The pattern qVal(W'), qBound(W, top, W'), p(..., W') collapses to
    p(..., W): the helper is existential and the answer set for W is
    unchanged (any witness for W' at least W can be replaced by W itself).
    """
    atoms = list(cg.atoms)
    dropped: set[int] = set()
    internal: list[str] = []
    for helper in cg.internal:
        uses = [
            i
            for i, a in enumerate(atoms)
            if i not in dropped and helper in _atom_var_names(a)
        ]
        if len(uses) != 3:
            internal.append(helper)
            continue
        i_qval, i_qbound, i_atom = uses
        qval_a, qbound_a, target = atoms[i_qval], atoms[i_qbound], atoms[i_atom]
        if not (
            isinstance(qval_a, DefinedAtom)
            and qval_a.name == QVAL
            and qval_a.args == (Var(helper),)
            and isinstance(qbound_a, DefinedAtom)
            and qbound_a.name == QBOUND
            and len(qbound_a.args) == 3
            and qbound_a.args[2] == Var(helper)
            and isinstance(qbound_a.args[0], Var)
            and isinstance(target, DefinedAtom)
            and target.args
            and target.args[-1] == Var(helper)
        ):
            internal.append(helper)
            continue
        goal_w = qbound_a.args[0].name
        atoms[i_atom] = DefinedAtom(target.name, target.args[:-1] + (Var(goal_w),))
        dropped.update((i_qval, i_qbound))
    return CompiledGoal(
        atoms=[a for i, a in enumerate(atoms) if i not in dropped],
        wvars=dict(cg.wvars),
        internal=internal,
        term_vars=list(cg.term_vars),
    )


def _atom_var_names(atom: Atom) -> set[str]:
    names: list[str] = []
    for t in syntax.atom_terms(atom):
        syntax.term_vars(t, names)
    return set(names)


# --- optimization passes -----------------------------------------------------------


def _ground_value(dom: QDomain, t: Term) -> Optional[QValue]:
    try:
        return syntax.term_to_qvalue(dom, t)
    except qdom.DomainError:
        return None


def optimize_eq_clauses(unit: ProgramUnit) -> ProgramUnit:
    """Unfold pay__* toll calls and drop the toll clauses.

    Each call site has the shape qVal(V), qBound(X, A, V), pay__t(V) with V
    used nowhere else; it collapses to qBound(X, A, t) where t is the toll's
    own bound.  Call sites that do not match (hand-written programs) get a
    plain unfolding instead.
    """
    if unit.dialect != "clp":
        raise TransformError("pay unfolding runs on compiled programs")
    dom = unit.dom

    tolls: dict[str, Term] = {}
    for clause in unit.clauses:
        name = clause.head.name
        if not name.startswith(PAY_PREFIX) or len(clause.head.args) != 1:
            continue
        bound = [
            item.atom
            for item in clause.body
            if isinstance(item.atom, DefinedAtom) and item.atom.name == QBOUND
        ]
        if len(bound) == 1 and len(bound[0].args) == 3:
            tolls[name] = bound[0].args[2]

    out: list[Clause] = []
    for clause in unit.clauses:
        if clause.head.name in tolls:
            continue
        out.append(_unfold_pay(clause, tolls, dom))
    return ProgramUnit(
        dom=dom,
        prox_name=unit.prox_name,
        optimized_unif=unit.optimized_unif,
        clauses=out,
        meta=dict(unit.meta),
        dialect="clp",
    )


def _unfold_pay(clause: Clause, tolls: dict[str, Term], dom) -> Clause:
    items = list(clause.body)
    changed = True
    while changed:
        changed = False
        for i, item in enumerate(items):
            atom = item.atom
            if not (
                isinstance(atom, DefinedAtom)
                and atom.name in tolls
                and len(atom.args) == 1
                and isinstance(atom.args[0], Var)
            ):
                continue
            v = atom.args[0].name
            uses = [
                j
                for j, it in enumerate(items)
                if v in _atom_var_names(it.atom)
            ]
            toll = tolls[atom.name]
            if uses == [i - 2, i - 1, i] and _is_guard_pair(items, i, v):
                bound = items[i - 1].atom
                items[i - 1 : i + 1] = [
                    BodyItem(DefinedAtom(QBOUND, (bound.args[0], bound.args[1], toll)))
                ]
                del items[i - 2]
            else:
                items[i : i + 1] = [
                    BodyItem(DefinedAtom(QVAL, (Var(v),))),
                    BodyItem(
                        DefinedAtom(QBOUND, (Var(v), _value_term(dom, qdom.top(dom)), toll))
                    ),
                ]
            changed = True
            break
    return Clause(clause.head, clause.atten, tuple(items))


def _is_guard_pair(items: list[BodyItem], i: int, v: str) -> bool:
    if i < 2:
        return False
    qval_a, qbound_a = items[i - 2].atom, items[i - 1].atom
    return (
        isinstance(qval_a, DefinedAtom)
        and qval_a.name == QVAL
        and qval_a.args == (Var(v),)
        and isinstance(qbound_a, DefinedAtom)
        and qbound_a.name == QBOUND
        and len(qbound_a.args) == 3
        and qbound_a.args[2] == Var(v)
    )


def simplify_guards(unit: ProgramUnit) -> ProgramUnit:
    """Drop guard atoms that are true for every store.

    qVal on a valid value literal always holds; qBound(x, a, b) with ground
    a, b holds for every x whose qVal guard is present when a o b is the top
    value, and is decided outright when x is ground too.
    """
    if unit.dialect != "clp":
        raise TransformError("guard simplification runs on compiled programs")
    dom = unit.dom
    out = []
    for clause in unit.clauses:
        kept = [item for item in clause.body if not _guard_is_trivial(dom, item.atom)]
        out.append(Clause(clause.head, clause.atten, tuple(kept)))
    return ProgramUnit(
        dom=dom,
        prox_name=unit.prox_name,
        optimized_unif=unit.optimized_unif,
        clauses=out,
        meta=dict(unit.meta),
        dialect="clp",
    )


def _guard_is_trivial(dom, atom: Atom) -> bool:
    if not isinstance(atom, DefinedAtom) or dom is None:
        return False
    if atom.name == QVAL and len(atom.args) == 1:
        return _ground_value(dom, atom.args[0]) is not None
    if atom.name == QBOUND and len(atom.args) == 3:
        x, y, z = atom.args
        vy, vz = _ground_value(dom, y), _ground_value(dom, z)
        if vy is None or vz is None:
            return False
        ceiling = qdom.attenuate(dom, vy, vz)
        vx = _ground_value(dom, x)
        if vx is not None:
            return qdom.leq(dom, vx, ceiling)
        return ceiling == qdom.top(dom)
    return False


# --- pipeline drivers ---------------------------------------------------------------


def compile_program(
    unit: ProgramUnit,
    rel: Optional[ProximityRelation] = None,
    optimize: bool = True,
) -> ProgramUnit:
    relation = rel if rel is not None else prox.identity_relation(unit.dom)
    staged = elim_prox(unit, relation)
    lowered = elim_qdom(staged)
    if optimize:
        lowered = simplify_guards(optimize_eq_clauses(lowered))
    return lowered


def compile_goal(
    goal: Goal,
    dom: QDomain,
    rel: Optional[ProximityRelation] = None,
    optimize: bool = True,
) -> CompiledGoal:
    relation = rel if rel is not None else prox.identity_relation(dom)
    staged = elim_prox_goal(goal, relation)
    lowered = elim_qdom_goal(staged, dom)
    if optimize:
        lowered = optimize_goal(lowered)
    return lowered
