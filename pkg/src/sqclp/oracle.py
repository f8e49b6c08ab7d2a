"""Bounded reference semantics for programs, used as test ground truth.

The derivability of a qualified atom from a program is defined by a three
rule proof calculus: a clause step (tag ``DA``) instantiates a program
clause and charges its attenuation, an equation step (``EA``) closes a
proximity-entailed equation, and a primitive step (``PA``) closes a
constraint entailed by the context.  The same rules cover the three
program layers this package deals with:

* source programs with a proximity relation (clause steps may switch to a
  close predicate, equations are proved up to proximity);
* staged programs after ``elim_prox`` (the relation is the identity, so
  equations collapse to context entailment);
* compiled plain programs after ``elim_qdom`` (no qualifications at all;
  ``qVal``/``qBound`` are evaluated against the qualification domain they
  were generated from).

Two services are offered.  ``check_proof`` validates a handcrafted proof
tree node by node, including contexts with real-arithmetic constraints.
``enumerate_derivable`` computes, bottom-up over a finite ground-term
universe, every derivable atom together with its maximal qualification;
smaller qualifications are implied downward, which ``DerivedTable``
encodes.  Both are deliberately small and independent of the engine, so
they can arbitrate when engine and transformation disagree.

``check_theorem_equivalences`` runs one program through all three layers
and diffs the resulting tables; agreement over the fixture corpus is the
correctness evidence for the two transformations and for the optimization
passes.  Enumeration is bounded by a node cap and a round cap; hitting a
cap raises ``OracleLimit`` rather than returning a truncated table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from . import clpsolver, prox, qdom, syntax, transform
from .clpsolver import Store
from .prox import ProximityRelation
from .qdom import QDomain, QValue
from .syntax import (
    Atom,
    Bin,
    Clause,
    DefinedAtom,
    Equation,
    Primitive,
    ProgramUnit,
    Struct,
    Term,
    Tup,
    Var,
)


class OracleError(ValueError):
    pass


class OracleLimit(RuntimeError):
    """The enumeration hit its node or round cap before finishing."""


# --- qc-atoms and proof trees ----------------------------------------------------

Context = tuple[Union[Primitive, Equation], ...]


@dataclass(frozen=True)
class QcAtom:
    """An atom asserted at a qualification under a constraint context."""

    atom: Atom
    qual: QValue
    context: Context = ()


@dataclass
class ProofTree:
    """One inference node; children are the premises in rule order.

    Clause steps (rule ``DA``, also accepted with a calculus prefix such as
    ``SQDA`` or ``QDA``) name their program clause by index, carry the
    instantiating substitution, and have one equation child per head
    argument followed by one child per body atom.  ``EA`` and ``PA`` nodes
    are leaves.
    """

    root: QcAtom
    rule: str
    clause_index: Optional[int] = None
    theta: dict[str, Term] = field(default_factory=dict)
    children: list["ProofTree"] = field(default_factory=list)


def subst_atom(atom: Atom, theta: dict[str, Term]) -> Atom:
    if isinstance(atom, DefinedAtom):
        return DefinedAtom(atom.name, tuple(syntax.subst(t, theta) for t in atom.args))
    if isinstance(atom, Equation):
        return Equation(syntax.subst(atom.lhs, theta), syntax.subst(atom.rhs, theta))
    sides = tuple(
        Bin(s.op, syntax.subst(s.lhs, theta), syntax.subst(s.rhs, theta))
        if isinstance(s, Bin)
        else syntax.subst(s, theta)
        for s in atom.args
    )
    return Primitive(atom.name, sides)


# --- contexts ---------------------------------------------------------------------


def _context_store(pi: Context) -> Store:
    store = Store()
    ok = True
    for entry in pi:
        if isinstance(entry, Equation):
            ok = store.equate(entry.lhs, entry.rhs)
        elif isinstance(entry, Primitive):
            ok = store.assert_(clpsolver.constraint_of(entry))
        else:
            raise OracleError(f"not a constraint: {entry!r}")
        if not ok:
            break
    if not ok or not store.is_sat():
        raise OracleError("context is unsatisfiable")
    return store


def _entails_equal(store: Store, t: Term, s: Term) -> bool:
    t, s = store.walk(t), store.walk(s)
    if t == s:
        return True
    if isinstance(t, (Struct, Tup)) and isinstance(s, (Struct, Tup)):
        if syntax.functor(t) != syntax.functor(s):
            return False
        return all(
            _entails_equal(store, a, b)
            for a, b in zip(syntax.term_args(t), syntax.term_args(s))
        )
    if isinstance(t, (Var, syntax.Num)) and isinstance(s, (Var, syntax.Num)):
        return store.entails(("eq", t, s)) is True
    return False


def _subterms(t: Term, acc: list[Term]) -> None:
    if t not in acc:
        acc.append(t)
    for a in syntax.term_args(t):
        _subterms(a, acc)


def _approx(
    rel: ProximityRelation,
    dom: QDomain,
    d: QValue,
    t: Term,
    s: Term,
    pi: Context,
    store: Optional[Store],
) -> bool:
    """The flexible equation check: some context-equal pair of terms is
    close enough.  Candidates are drawn from the subterms of the equation
    and of the context, which covers every context arising in practice."""
    if not pi:
        return prox.closeness_d(rel, dom, d, t, s)
    assert store is not None
    pool: list[Term] = []
    _subterms(t, pool)
    _subterms(s, pool)
    for entry in pi:
        if isinstance(entry, Equation):
            _subterms(entry.lhs, pool)
            _subterms(entry.rhs, pool)
        else:
            for side in entry.args:
                for leafside in (side.lhs, side.rhs) if isinstance(side, Bin) else (side,):
                    _subterms(leafside, pool)
    near_t = [c for c in pool if _entails_equal(store, t, c)]
    near_s = [c for c in pool if _entails_equal(store, s, c)]
    return any(
        prox.closeness_d(rel, dom, d, th, sh) for th in near_t for sh in near_s
    )


# --- proof checking ----------------------------------------------------------------


def check_proof(
    unit: ProgramUnit,
    rel: Optional[ProximityRelation],
    enc: Optional[qdom.QEncoding],
    tree: ProofTree,
) -> bool:
    """True iff every node is a valid rule instance for this program.

    ``rel`` of None means the identity relation.  Plain compiled programs
    (dialect ``clp``) are checked without qualification side conditions;
    ``enc`` then supplies the domain for evaluating guard atoms (defaults
    to the unit's own domain).
    """
    plain = unit.dialect == "clp"
    dom = unit.dom
    if dom is None:
        raise OracleError("program has no qualification domain")
    relation = rel if rel is not None else prox.identity_relation(dom)
    if relation.dom != dom:
        raise OracleError("relation and program use different domains")
    if enc is None:
        enc = qdom.QEncoding(dom)
    store = _context_store(tree.root.context)
    return _check_node(unit, dom, relation, enc, plain, tree, tree.root.context, store)


def _check_node(
    unit: ProgramUnit,
    dom: QDomain,
    relation: ProximityRelation,
    enc: qdom.QEncoding,
    plain: bool,
    node: ProofTree,
    pi: Context,
    store: Store,
) -> bool:
    if node.root.context != pi:
        return False
    d = node.root.qual
    if plain:
        # Plain derivations carry no real qualification; the nominal top of
        # the two-point domain marks every node.
        if d != qdom.B_TOP:
            return False
    elif d is qdom.BOTTOM or not qdom.member(dom, d):
        return False
    atom = node.root.atom
    tag = node.rule.upper()

    if tag.endswith("DA"):
        if not isinstance(atom, DefinedAtom):
            return False
        if node.clause_index is None or not 0 <= node.clause_index < len(unit.clauses):
            raise OracleError(f"dangling clause reference: {node.clause_index}")
        clause = unit.clauses[node.clause_index]
        n, m = len(clause.head.args), len(clause.body)
        if len(atom.args) != n or len(node.children) != n + m:
            return False
        d0 = prox.lookup(
            relation, prox.pred(atom.name, n), prox.pred(clause.head.name, n)
        )
        if d0 is qdom.BOTTOM:
            return False
        quals = [d0]
        for i in range(n):
            child = node.children[i].root
            expected = Equation(atom.args[i], syntax.subst(clause.head.args[i], node.theta))
            if child.atom != expected:
                return False
            quals.append(child.qual)
        body_quals = []
        for j, item in enumerate(clause.body):
            child = node.children[n + j].root
            if child.atom != subst_atom(item.atom, node.theta):
                return False
            if (
                not plain
                and item.threshold is not None
                and not qdom.leq(dom, item.threshold, child.qual)
            ):
                return False
            body_quals.append(child.qual)
        if not plain:
            ceiling = qdom.glb(
                dom,
                qdom.glb_all(dom, quals),
                qdom.attenuate(dom, clause.atten, qdom.glb_all(dom, body_quals)),
            )
            if not qdom.leq(dom, d, ceiling):
                return False
        return all(
            _check_node(unit, dom, relation, enc, plain, ch, pi, store)
            for ch in node.children
        )

    if node.children:
        return False
    if tag.endswith("EA"):
        if not isinstance(atom, Equation):
            return False
        if plain:
            return _entails_equal(store, atom.lhs, atom.rhs)
        return _approx(relation, dom, d, atom.lhs, atom.rhs, pi, store)
    if tag.endswith("PA"):
        if not isinstance(atom, Primitive):
            return False
        return store.entails(clpsolver.constraint_of(atom)) is True
    raise OracleError(f"unknown rule tag: {node.rule!r}")


# --- bottom-up enumeration ----------------------------------------------------------


@dataclass
class DerivedTable:
    """Derivable ground atoms with their maximal qualification.

    Derivability is downward closed: A at d is derivable whenever d is a
    non-bottom value below the recorded maximum, which ``derivable``
    implements directly.
    """

    dom: QDomain
    table: dict[Atom, QValue]

    def max_qual(self, atom: Atom) -> QValue:
        return self.table.get(atom, qdom.BOTTOM)

    def derivable(self, atom: Atom, d: Optional[QValue] = None) -> bool:
        best = self.max_qual(atom)
        if best is qdom.BOTTOM:
            return False
        if d is None:
            return True
        return d is not qdom.BOTTOM and qdom.leq(self.dom, d, best)

    def defined_atoms(self) -> list[Atom]:
        return [a for a in self.table if isinstance(a, DefinedAtom)]


class _Budget:
    def __init__(self, node_cap: int):
        self.left = node_cap

    def spend(self, n: int = 1) -> None:
        self.left -= n
        if self.left < 0:
            raise OracleLimit("enumeration node cap exceeded")


_MAX_ROUNDS = 64


def _eval_arith(side) -> Fraction:
    if isinstance(side, syntax.Num):
        return side.value
    if isinstance(side, Bin):
        a, b = _eval_arith(side.lhs), _eval_arith(side.rhs)
        if side.op == "+":
            return a + b
        if side.op == "-":
            return a - b
        if side.op == "*":
            return a * b
        if b == 0:
            raise ZeroDivisionError
        return a / b
    raise OracleError(f"primitive side is not ground: {side!r}")


def ground_primitive_true(p: Primitive) -> bool:
    try:
        rel, lhs, rhs = clpsolver.constraint_of(p)
        a, b = _eval_arith(lhs), _eval_arith(rhs)
    except ZeroDivisionError:
        return False
    return {
        "lt": a < b,
        "le": a <= b,
        "gt": a > b,
        "ge": a >= b,
        "eq": a == b,
    }[rel]


def _clause_vars(clause: Clause) -> list[str]:
    names: list[str] = []
    for t in clause.head.args:
        syntax.term_vars(t, names)
    for item in clause.body:
        for t in syntax.atom_terms(item.atom):
            syntax.term_vars(t, names)
    return names


def enumerate_derivable(
    unit: ProgramUnit,
    rel: Optional[ProximityRelation],
    enc: Optional[qdom.QEncoding],
    universe: list[Term],
    depth: Optional[int] = None,
    node_cap: int = 200_000,
    qual_terms: Optional[list[Term]] = None,
) -> DerivedTable:
    """All ground atoms over the universe derivable with clause nesting at
    most ``depth`` (None runs to a fixpoint), each with its maximal
    qualification.  Equations between universe terms are included; their
    maximum is the term proximity.  Raises OracleLimit at the caps.

    For a compiled unit the result is a table of plain facts instead; the
    value arguments of those facts range over ``qual_terms`` (default: just
    the top literal), since a compiled program has ground value positions
    where the source had qualifications."""
    if unit.dialect == "clp":
        return _enumerate_plain(unit, enc, universe, depth, node_cap, qual_terms)
    dom = unit.dom
    if dom is None:
        raise OracleError("program has no qualification domain")
    relation = rel if rel is not None else prox.identity_relation(dom)
    if relation.dom != dom:
        raise OracleError("relation and program use different domains")

    budget = _Budget(node_cap)
    table: dict[Atom, QValue] = {}
    for t in universe:
        for s in universe:
            budget.spend()
            lam = prox.term_proximity(relation, t, s)
            if lam is not qdom.BOTTOM:
                table[Equation(t, s)] = lam

    def body_max(atom: Atom) -> QValue:
        if isinstance(atom, DefinedAtom):
            return table.get(atom, qdom.BOTTOM)
        if isinstance(atom, Equation):
            return prox.term_proximity(relation, atom.lhs, atom.rhs)
        return qdom.top(dom) if ground_primitive_true(atom) else qdom.BOTTOM

    partner_cache: dict[tuple[str, int], list[tuple[str, QValue]]] = {}

    def head_partners(name: str, arity: int) -> list[tuple[str, QValue]]:
        key = (name, arity)
        if key not in partner_cache:
            out = [(name, qdom.top(dom))]
            for sym, lam in relation.partners(prox.pred(name, arity)):
                if sym.kind == "pred":
                    out.append((sym.name, lam))
            partner_cache[key] = out
        return partner_cache[key]

    rounds = depth if depth is not None else _MAX_ROUNDS
    for _ in range(rounds):
        changed = False
        for clause in unit.clauses:
            names = _clause_vars(clause)
            for values in itertools.product(universe, repeat=len(names)):
                budget.spend()
                theta = dict(zip(names, values))
                body_quals = []
                ok = True
                for item in clause.body:
                    e = body_max(subst_atom(item.atom, theta))
                    if e is qdom.BOTTOM or (
                        item.threshold is not None
                        and not qdom.leq(dom, item.threshold, e)
                    ):
                        ok = False
                        break
                    body_quals.append(e)
                if not ok:
                    continue
                base = qdom.attenuate(dom, clause.atten, qdom.glb_all(dom, body_quals))
                if base is qdom.BOTTOM:
                    continue
                head_args = [syntax.subst(t, theta) for t in clause.head.args]
                arg_cands = []
                for t in head_args:
                    cands = []
                    for u in universe:
                        lam = prox.term_proximity(relation, u, t)
                        if lam is not qdom.BOTTOM:
                            cands.append((u, lam))
                    arg_cands.append(cands)
                for p2, d0 in head_partners(clause.head.name, len(head_args)):
                    for picks in itertools.product(*arg_cands):
                        budget.spend()
                        q = qdom.glb_all(dom, [d0, base, *(lam for _, lam in picks)])
                        if q is qdom.BOTTOM:
                            continue
                        key = DefinedAtom(p2, tuple(u for u, _ in picks))
                        old = table.get(key, qdom.BOTTOM)
                        new = q if old is qdom.BOTTOM else qdom.lub(dom, old, q)
                        if new != old:
                            table[key] = new
                            changed = True
        if not changed:
            break
    else:
        if depth is None:
            raise OracleLimit("no fixpoint within the round cap")
    return DerivedTable(dom, table)


def _guard_true(enc: qdom.QEncoding, atom: DefinedAtom) -> bool:
    try:
        vals = [syntax.term_to_qvalue(enc.dom, t) for t in atom.args]
    except qdom.DomainError:
        return False
    if atom.name == transform.QVAL:
        return len(vals) == 1
    if len(vals) != 3:
        return False
    x, y, z = vals
    return qdom.leq(enc.dom, x, qdom.attenuate(enc.dom, y, z))


def _match_term(pattern: Term, ground: Term, binds: dict[str, Term]) -> bool:
    if isinstance(pattern, Var):
        if pattern.name in binds:
            return binds[pattern.name] == ground
        binds[pattern.name] = ground
        return True
    if isinstance(pattern, (Struct, Tup)):
        if not isinstance(ground, (Struct, Tup)):
            return False
        if syntax.functor(pattern) != syntax.functor(ground):
            return False
        return all(
            _match_term(p, g, binds)
            for p, g in zip(syntax.term_args(pattern), syntax.term_args(ground))
        )
    return pattern == ground


def _free_vars(atom: Atom) -> list[str]:
    names: list[str] = []
    for t in syntax.atom_terms(atom):
        syntax.term_vars(t, names)
    return names


def _enumerate_plain(
    unit: ProgramUnit,
    enc: Optional[qdom.QEncoding],
    universe: list[Term],
    depth: Optional[int],
    node_cap: int,
    qual_terms: Optional[list[Term]] = None,
) -> DerivedTable:
    """Enumeration for compiled programs: no qualification arithmetic and
    the guard predicates evaluated directly against the domain.  Clause
    bodies are solved left to right; variables get bound by matching the
    facts derived so far, by equations against the term universe, or (for
    guard operands) by trying the ``qual_terms`` value literals."""
    if enc is None:
        if unit.dom is None:
            raise OracleError("compiled program lost its domain annotation")
        enc = qdom.QEncoding(unit.dom)
    dom = enc.dom
    if qual_terms is None:
        qual_terms = [syntax.qvalue_to_term(dom, qdom.top(dom))]
    budget = _Budget(node_cap)
    guard_names = (transform.QVAL, transform.QBOUND)
    clauses = [c for c in unit.clauses if c.head.name not in guard_names]
    facts: dict[tuple[str, int], list[tuple[Term, ...]]] = {}

    def eval_ground(atom) -> bool:
        if isinstance(atom, DefinedAtom) and atom.name in guard_names:
            return _guard_true(enc, atom)
        if isinstance(atom, DefinedAtom):
            return tuple(atom.args) in facts.get((atom.name, len(atom.args)), [])
        if isinstance(atom, Equation):
            return atom.lhs == atom.rhs
        return ground_primitive_true(atom)

    def solve(items, theta):
        # Most-bound-first join: evaluate whatever is already ground, bind
        # variables through fact rows and one-sided equations, and fall back
        # to blind value enumeration only for what remains.
        if not items:
            yield theta
            return
        budget.spend()
        insts = [subst_atom(it.atom, theta) for it in items]
        for i, atom in enumerate(insts):
            if not _free_vars(atom):
                if eval_ground(atom):
                    yield from solve(items[:i] + items[i + 1 :], theta)
                return
        for i, atom in enumerate(insts):
            if isinstance(atom, Equation):
                rest = items[:i] + items[i + 1 :]
                if isinstance(atom.lhs, Var) and not _free_vars_t(atom.rhs):
                    yield from solve(rest, {**theta, atom.lhs.name: atom.rhs})
                    return
                if isinstance(atom.rhs, Var) and not _free_vars_t(atom.lhs):
                    yield from solve(rest, {**theta, atom.rhs.name: atom.lhs})
                    return
        for i, atom in enumerate(insts):
            if isinstance(atom, DefinedAtom) and atom.name not in guard_names:
                rest = items[:i] + items[i + 1 :]
                for args in facts.get((atom.name, len(atom.args)), []):
                    budget.spend()
                    binds: dict[str, Term] = {}
                    if all(_match_term(p, g, binds) for p, g in zip(atom.args, args)):
                        yield from solve(rest, {**theta, **binds})
                return
        atom = insts[0]
        rest = items[1:]
        free = _free_vars(atom)
        if isinstance(atom, DefinedAtom):
            for values in itertools.product(qual_terms, repeat=len(free)):
                budget.spend()
                extra = dict(zip(free, values))
                if _guard_true(enc, subst_atom(atom, extra)):
                    yield from solve(rest, {**theta, **extra})
        elif isinstance(atom, Equation):
            for values in itertools.product(universe, repeat=len(free)):
                budget.spend()
                extra = dict(zip(free, values))
                inst = subst_atom(atom, extra)
                if inst.lhs == inst.rhs:
                    yield from solve(rest, {**theta, **extra})
        else:
            raise OracleError(
                f"primitive with unbound variables: {syntax.render_atom(atom)}"
            )

    rounds = depth if depth is not None else _MAX_ROUNDS
    for _ in range(rounds):
        changed = False
        for clause in clauses:
            key = (clause.head.name, len(clause.head.args))
            for theta in solve(list(clause.body), {}):
                args = tuple(syntax.subst(t, theta) for t in clause.head.args)
                if any(syntax.term_vars(a) for a in args):
                    raise OracleError(
                        f"clause head not grounded by its body: {clause.head.name}"
                    )
                if args and any(a not in universe for a in args[:-1]):
                    continue
                if args not in facts.setdefault(key, []):
                    facts[key].append(args)
                    changed = True
        if not changed:
            break
    else:
        if depth is None:
            raise OracleLimit("no fixpoint within the round cap")
    table: dict[Atom, QValue] = {
        DefinedAtom(name, args): qdom.B_TOP
        for (name, _), rows in facts.items()
        for args in rows
    }
    return DerivedTable(qdom.parse_domain("b"), table)


def _free_vars_t(t: Term) -> list[str]:
    return syntax.term_vars(t)


# --- universes ----------------------------------------------------------------------


def ground_universe(symbols: list[tuple[str, int]], depth: int) -> list[Term]:
    """All ground terms of nesting depth at most ``depth`` over the given
    constructor alphabet, in a deterministic order."""
    layers: list[Term] = [
        Struct(name) for name, arity in symbols if arity == 0
    ]
    current = list(layers)
    for _ in range(depth):
        fresh: list[Term] = []
        for name, arity in symbols:
            if arity == 0:
                continue
            for args in itertools.product(current, repeat=arity):
                t = Struct(name, args)
                if t not in layers and t not in fresh:
                    fresh.append(t)
        if not fresh:
            break
        layers.extend(fresh)
        current = list(layers)
    return layers


# --- transformation agreement ---------------------------------------------------------


@dataclass
class Fixture:
    name: str
    unit: ProgramUnit
    rel: Optional[ProximityRelation]
    universe: list[Term]
    depth: Optional[int] = None
    node_cap: int = 500_000
    compare_optimized: bool = True


@dataclass
class AgreementReport:
    name: str
    checked: int
    disagreements: list[str]

    @property
    def agree(self) -> bool:
        return not self.disagreements

    def summary(self) -> str:
        if self.agree:
            return f"{self.name}: all agree ({self.checked} atoms)"
        lines = [f"{self.name}: {len(self.disagreements)} disagreements"]
        lines.extend("  " + w for w in self.disagreements)
        return "\n".join(lines)


def _plain_maxima(
    plain_table: DerivedTable, dom: QDomain
) -> dict[tuple[str, tuple[Term, ...]], QValue]:
    out: dict[tuple[str, tuple[Term, ...]], QValue] = {}
    for atom in plain_table.defined_atoms():
        if not atom.args:
            continue
        try:
            val = syntax.term_to_qvalue(dom, atom.args[-1])
        except qdom.DomainError:
            continue
        key = (atom.name, atom.args[:-1])
        old = out.get(key, qdom.BOTTOM)
        out[key] = val if old is qdom.BOTTOM else qdom.lub(dom, old, val)
    return out


def _witness_table(
    staged: DerivedTable,
) -> dict[tuple[str, tuple[Term, ...]], QValue]:
    """Best qualification per derived atom, keyed by name and argument
    tuple.  Used to propose bindings for the free variables of a compiled
    clause body; every proposed call is still verified clause by clause."""
    out: dict[tuple[str, tuple[Term, ...]], QValue] = {}
    for atom, q in staged.table.items():
        if isinstance(atom, DefinedAtom) and q is not qdom.BOTTOM:
            out[(atom.name, atom.args)] = q
    return out


class _CompiledChecker:
    """Top-down derivability check against a compiled (plain) program.

    ``derives(name, args, q)`` asks whether the program proves the lifted
    atom ``name(args..., v)`` where ``v`` encodes ``q``.  Clause heads are
    matched, guard atoms are evaluated against the domain once ground, and
    free variables in body calls are bound from a witness table of known
    derivations before the call itself is checked recursively.  Witnesses
    only steer the search; nothing is accepted without a clause derivation.
    Recursion through the same goal is cut off, so self-referential
    predicates are only followed to finite depth.
    """

    def __init__(
        self,
        unit: ProgramUnit,
        enc: qdom.QEncoding,
        witnesses: dict[tuple[str, tuple[Term, ...]], QValue],
        budget: _Budget,
    ):
        self.dom = enc.dom
        self.enc = enc
        self.witnesses = witnesses
        self.budget = budget
        self.guard_names = (transform.QVAL, transform.QBOUND)
        self.clauses: dict[tuple[str, int], list[Clause]] = {}
        for c in unit.clauses:
            if c.head.name in self.guard_names:
                continue
            self.clauses.setdefault((c.head.name, len(c.head.args)), []).append(c)
        self.memo: dict[tuple[str, tuple[Term, ...], QValue], bool] = {}

    def derives(self, name: str, args: tuple[Term, ...], q: QValue) -> bool:
        if q is qdom.BOTTOM:
            return False
        key = (name, tuple(args), q)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.memo[key] = False  # cut cycles: a derivation cannot use itself
        out = False
        qterm = syntax.qvalue_to_term(self.dom, q)
        for clause in self.clauses.get((name, len(args) + 1), []):
            self.budget.spend()
            binds: dict[str, Term] = {}
            if not all(
                _match_term(p, g, binds)
                for p, g in zip(clause.head.args[:-1], args)
            ):
                continue
            if not _match_term(clause.head.args[-1], qterm, binds):
                continue
            if self._body([it.atom for it in clause.body], binds):
                out = True
                break
        self.memo[key] = out
        return out

    def _ground_true(self, atom: Atom) -> bool:
        if isinstance(atom, DefinedAtom) and atom.name in self.guard_names:
            return _guard_true(self.enc, atom)
        if isinstance(atom, DefinedAtom):
            if not atom.args:
                return False
            try:
                q = syntax.term_to_qvalue(self.dom, atom.args[-1])
            except qdom.DomainError:
                return False
            return self.derives(atom.name, atom.args[:-1], q)
        if isinstance(atom, Equation):
            return atom.lhs == atom.rhs
        return ground_primitive_true(atom)

    def _body(self, items: list[Atom], binds: dict[str, Term]) -> bool:
        if not items:
            return True
        self.budget.spend()
        insts = [subst_atom(a, binds) for a in items]
        for i, atom in enumerate(insts):
            if not _free_vars(atom):
                if not self._ground_true(atom):
                    return False
                return self._body(items[:i] + items[i + 1 :], binds)
        for i, atom in enumerate(insts):
            if isinstance(atom, Equation):
                rest = items[:i] + items[i + 1 :]
                if isinstance(atom.lhs, Var) and not _free_vars_t(atom.rhs):
                    return self._body(rest, {**binds, atom.lhs.name: atom.rhs})
                if isinstance(atom.rhs, Var) and not _free_vars_t(atom.lhs):
                    return self._body(rest, {**binds, atom.rhs.name: atom.lhs})
        for i, atom in enumerate(insts):
            if (
                isinstance(atom, DefinedAtom)
                and atom.name not in self.guard_names
                and atom.args
            ):
                rest = items[:i] + items[i + 1 :]
                for (wname, wargs), wmax in self.witnesses.items():
                    if wname != atom.name or len(wargs) != len(atom.args) - 1:
                        continue
                    self.budget.spend()
                    extra: dict[str, Term] = {}
                    if not all(
                        _match_term(p, g, extra)
                        for p, g in zip(atom.args[:-1], wargs)
                    ):
                        continue
                    last = syntax.subst(atom.args[-1], extra)
                    if isinstance(last, Var):
                        q = wmax
                        extra[last.name] = syntax.qvalue_to_term(self.dom, wmax)
                    else:
                        try:
                            q = syntax.term_to_qvalue(self.dom, last)
                        except qdom.DomainError:
                            continue
                    if self.derives(atom.name, wargs, q) and self._body(
                        rest, {**binds, **extra}
                    ):
                        return True
                return False
        raise OracleError(
            f"cannot ground compiled body item: {syntax.render_atom(insts[0])}"
        )


def check_theorem_equivalences(fixture: Fixture) -> AgreementReport:
    """Diff the derivable-atom tables of the source program, its staged
    form, and its compiled form (optionally also the optimized compiled
    form), restricted to the source signature."""
    unit = fixture.unit
    dom = unit.dom
    relation = fixture.rel if fixture.rel is not None else prox.identity_relation(dom)
    cap = fixture.node_cap

    source = enumerate_derivable(
        unit, relation, None, fixture.universe, fixture.depth, cap
    )
    staged_unit = transform.elim_prox(unit, relation)
    passthrough = staged_unit is unit
    staged = enumerate_derivable(staged_unit, None, None, fixture.universe, None, cap)

    compiled_unit = transform.elim_qdom(staged_unit)
    enc = qdom.QEncoding(dom)
    quals = {
        v
        for v in itertools.chain(source.table.values(), staged.table.values())
        if v is not qdom.BOTTOM
    }
    quals.add(qdom.top(dom))
    candidates = sorted(quals, key=str)
    witnesses = _witness_table(staged)
    budget = _Budget(cap)
    checkers = [("compiled", _CompiledChecker(compiled_unit, enc, witnesses, budget))]
    if fixture.compare_optimized:
        optimized_unit = transform.simplify_guards(
            transform.optimize_eq_clauses(compiled_unit)
        )
        checkers.append(
            ("optimized", _CompiledChecker(optimized_unit, enc, witnesses, budget))
        )

    def compiled_max(chk: _CompiledChecker, name: str, args: tuple) -> QValue:
        # The candidate grid holds every qualification either earlier side
        # produced plus the top, so the true compiled maximum for an atom in
        # the shared signature is on the grid whenever the sides agree.
        best: QValue = qdom.BOTTOM
        for v in candidates:
            if chk.derives(name, args, v):
                best = v if best is qdom.BOTTOM else qdom.lub(dom, best, v)
        return best

    source_preds = {
        (name, arity) for name, arity in syntax.predicates_in_order(unit.clauses)
    }

    def staged_atom(atom: Atom) -> Atom:
        if isinstance(atom, Equation) and not passthrough:
            return DefinedAtom(transform.EQ_PRED, (atom.lhs, atom.rhs))
        return atom

    def plain_key(atom: Atom) -> tuple[str, tuple[Term, ...]]:
        if isinstance(atom, Equation):
            return (transform.EQ_PRED, (atom.lhs, atom.rhs))
        return (atom.name, atom.args)

    keys: list[Atom] = [
        a
        for a in source.table
        if isinstance(a, Equation)
        or (a.name, len(a.args)) in source_preds
    ]
    for atom in staged.table:
        if (
            isinstance(atom, DefinedAtom)
            and (atom.name, len(atom.args)) in source_preds
            and atom not in keys
        ):
            keys.append(atom)

    disagreements: list[str] = []
    for atom in keys:
        vals = [("source", source.max_qual(atom))]
        vals.append(("staged", staged.max_qual(staged_atom(atom))))
        if not (passthrough and isinstance(atom, Equation)):
            # Without the equation stage there is no compiled predicate that
            # answers for plain equations, so those keys compare two ways.
            name, args = plain_key(atom)
            for label, chk in checkers:
                vals.append((label, compiled_max(chk, name, args)))
        reference = vals[0][1]
        if any(v != reference for _, v in vals[1:]):
            shown = ", ".join(
                f"{label} {'_|_' if v is qdom.BOTTOM else qdom.render_qvalue(v)}"
                for label, v in vals
            )
            disagreements.append(f"{syntax.render_atom(atom)}: {shown}")

    return AgreementReport(fixture.name, len(keys), disagreements)


def check_eq_lemma(
    rel: ProximityRelation, universe: list[Term], node_cap: int = 200_000
) -> AgreementReport:
    """Two routes to the closeness of a term pair: the direct extension of
    the relation to terms, and enumeration over the equation clauses that
    ``elim_prox`` generates.  They must assign every pair the same value."""
    dom = rel.dom
    empty = ProgramUnit(dom=dom)
    staged = transform.elim_prox(empty, rel)
    if staged is empty:
        table = enumerate_derivable(empty, rel, None, universe, None, node_cap)

        def derived_max(t: Term, s: Term) -> QValue:
            return table.max_qual(Equation(t, s))

    else:
        table = enumerate_derivable(staged, None, None, universe, None, node_cap)

        def derived_max(t: Term, s: Term) -> QValue:
            return table.max_qual(DefinedAtom(transform.EQ_PRED, (t, s)))

    disagreements: list[str] = []
    checked = 0
    for t in universe:
        for s in universe:
            checked += 1
            direct = prox.term_proximity(rel, t, s)
            derived = derived_max(t, s)
            if direct != derived:
                disagreements.append(
                    f"{syntax.render_term(t)} ~ {syntax.render_term(s)}: "
                    f"direct {direct!r}, derived {derived!r}"
                )
    return AgreementReport("equation clauses", checked, disagreements)
