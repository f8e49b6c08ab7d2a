"""SLD resolution over lowered programs, with a real-constraint store.

The machine consumes the output of the lowering passes: plain clauses whose
qualification bookkeeping has become qVal/qBound guards and whose closeness
reasoning has become ``eqp`` calls.  Three predicate names are interpreted
natively instead of being resolved against their own clauses:

* ``qVal(X)`` constrains X to the domain's encoded carrier,
* ``qBound(X, Y, Z)`` states X is below Y attenuated by Z, leafwise,
* ``eqp(T, S, W)`` unifies up to closeness at level W.

``eqp`` dispatches on the instantiation of its first two arguments and then
resolves against the artifact's own eqp clauses.  A variable-variable call
uses only the variable clause (a plain bind).  Anything else enumerates the
constructor clauses in their textual order, which tries the constructors
close to the known root one by one.  Programs compiled from a
``#optimized_unif`` source (similarity relations) bind variable against
non-variable directly through the variable clause instead of enumerating.

Answers are streamed lazily in depth-first, textual-clause order.  Each
answer carries the data substitution restricted to the goal's variables,
the per-atom qualification values maximized over their guard chains, and
the residual constraints on whatever numeric variables remain in the data
bindings.  Limit exhaustion raises ``EngineLimit``; finite failure just
ends the stream.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from . import clpsolver, prox, qdom, syntax, transform
from .clpsolver import SolverError, Store
from .prox import ProximityRelation
from .qdom import QDomain, QValue
from .syntax import (
    Bin,
    Clause,
    DefinedAtom,
    Equation,
    Num,
    Primitive,
    ProgramUnit,
    Struct,
    Term,
    Tup,
    Var,
)
from .transform import CompiledGoal


class EngineError(Exception):
    pass


class EngineLimit(EngineError):
    """A search limit was exhausted before the stream was complete."""


# parsed but outside the solving scope
_UNSUPPORTED = ("maximize", "minimize")

_FLEX_WITNESS_CAP = 20000


@dataclass
class Limits:
    max_answers: Optional[int] = None
    max_depth: Optional[int] = None
    max_steps: Optional[int] = None
    iterative_deepening: bool = False
    occurs_check: bool = False


@dataclass
class Answer:
    """One computed answer: data bindings, qualification values, residual.

    ``sigma`` is restricted to the goal's data variables and omits identity
    bindings.  ``mu`` maps every goal qualification variable (hidden ones
    included) to the largest value its guard chain admits.  ``residual``
    lists the remaining constraints on numeric variables that survive in
    ``sigma``; it is empty for ground answers.  ``level`` is the meet of
    all ``mu`` values.
    """

    sigma: dict[str, Term]
    mu: dict[str, QValue]
    residual: list[Primitive]
    level: QValue
    dom: QDomain

    def is_ground(self) -> bool:
        return not self.residual and not any(
            syntax.term_vars(t) for t in self.sigma.values()
        )

    def render(self) -> str:
        parts = [f"{x} = {syntax.render_term(t)}" for x, t in self.sigma.items()]
        parts += [
            f"{w} = {syntax.render_term(syntax.qvalue_to_term(self.dom, q))}"
            for w, q in self.mu.items()
            if not w.startswith("_")
        ]
        parts += [syntax.render_atom(p) for p in self.residual]
        return ", ".join(parts) if parts else "true"


def solve(unit: ProgramUnit, goal: CompiledGoal, limits: Optional[Limits] = None) -> Iterator[Answer]:
    """Stream the answers of a lowered goal against a lowered program."""
    limits = limits if limits is not None else Limits()
    if unit.dialect != "clp":
        raise EngineError("the engine runs lowered programs; transform the unit first")
    if unit.dom is None:
        raise EngineError("program artifact lacks a qualification domain")
    if limits.iterative_deepening:
        return _solve_deepening(unit, goal, limits)
    return _Machine(unit, goal, limits, limits.max_depth, raise_on_prune=True).run()


def _solve_deepening(unit: ProgramUnit, goal: CompiledGoal, limits: Limits) -> Iterator[Answer]:
    """Re-run with growing depth caps until a sweep completes unpruned.

    Answers already seen in earlier sweeps are suppressed, so the stream
    contains each answer once, ordered by the depth at which it first
    appears.  Step limits apply per sweep."""
    seen: set = set()
    yielded = 0
    cap = 1
    while True:
        machine = _Machine(unit, goal, limits, cap, raise_on_prune=False)
        for ans in machine.run():
            fp = _fingerprint(ans)
            if fp in seen:
                continue
            seen.add(fp)
            yield ans
            yielded += 1
            if limits.max_answers is not None and yielded >= limits.max_answers:
                return
        if not machine.pruned:
            return
        if limits.max_depth is not None and cap >= limits.max_depth:
            raise EngineLimit("depth limit reached with branches still pruned")
        cap = 2 * cap
        if limits.max_depth is not None:
            cap = min(cap, limits.max_depth)


def _fingerprint(ans: Answer) -> tuple:
    return (
        tuple(sorted((x, syntax.render_term(t)) for x, t in ans.sigma.items())),
        tuple((w, repr(q)) for w, q in ans.mu.items()),
        tuple(syntax.render_atom(p) for p in ans.residual),
    )


_FAIL = object()


class _Machine:
    def __init__(
        self,
        unit: ProgramUnit,
        goal: CompiledGoal,
        limits: Limits,
        depth_cap: Optional[int],
        raise_on_prune: bool,
    ):
        self.dom = unit.dom
        self.enc = qdom.QEncoding(self.dom)
        self.leaves = qdom.leaves(self.dom)
        self.goal = goal
        self.limits = limits
        self.depth_cap = depth_cap
        self.raise_on_prune = raise_on_prune
        self.bind_one_var = unit.optimized_unif
        self.store = Store(occurs_check=limits.occurs_check)
        self.index: dict[tuple[str, int], list[Clause]] = {}
        self.eq_var: list[Clause] = []
        self.eq_ctor: list[Clause] = []
        self._index_clauses(unit)
        self._clause_vars: dict[int, tuple[str, ...]] = {}
        self.ages: dict[str, int] = {}
        for name in itertools.chain(goal.term_vars, goal.wvars.values(), goal.internal):
            self.ages.setdefault(name, len(self.ages))
        self.steps = 0
        self.answers = 0
        self.pruned = False

    def _index_clauses(self, unit: ProgramUnit) -> None:
        for cl in unit.clauses:
            name, arity = cl.head.name, len(cl.head.args)
            if name == transform.EQ_PRED and arity == 3:
                l, r = cl.head.args[0], cl.head.args[1]
                if isinstance(l, Var) and isinstance(r, Var):
                    self.eq_var.append(cl)
                else:
                    self.eq_ctor.append(cl)
            elif name in (transform.QVAL, transform.QBOUND):
                continue  # interpreted natively
            else:
                self.index.setdefault((name, arity), []).append(cl)

    # --- search -----------------------------------------------------------------

    def run(self) -> Iterator[Answer]:
        goals = None
        for atom in reversed(self.goal.atoms):
            goals = ((atom, 0), goals)
        # choice frames: [store mark, clause iterator, calling atom, rest, depth]
        stack: list[list] = []
        advancing = True
        while True:
            failed = False
            while advancing and not failed:
                if goals is None:
                    ans = self._answer()
                    if ans is not None:
                        yield ans
                        self.answers += 1
                        if (
                            self.limits.max_answers is not None
                            and self.answers >= self.limits.max_answers
                        ):
                            return
                    failed = True
                    break
                (atom, depth), rest = goals
                self._step()
                if isinstance(atom, Equation):
                    if self._equation(atom):
                        goals = rest
                    else:
                        failed = True
                elif isinstance(atom, Primitive):
                    if self._primitive(atom):
                        goals = rest
                    else:
                        failed = True
                elif isinstance(atom, DefinedAtom):
                    if atom.name == transform.QVAL and len(atom.args) == 1:
                        if self._qval(atom):
                            goals = rest
                        else:
                            failed = True
                    elif atom.name == transform.QBOUND and len(atom.args) == 3:
                        if self._qbound(atom):
                            goals = rest
                        else:
                            failed = True
                    elif atom.name in _UNSUPPORTED:
                        raise EngineError(f"unsupported primitive {atom.name}")
                    else:
                        if self.depth_cap is not None and depth >= self.depth_cap:
                            self.pruned = True
                            failed = True
                        else:
                            alts = self._alternatives(atom)
                            stack.append(
                                [self.store.snapshot(), iter(alts), atom, rest, depth]
                            )
                            failed = True  # fall through to pick the first alternative
                else:
                    raise EngineError(f"cannot solve goal atom {atom!r}")
            # chronological backtracking: next alternative of the top frame
            while stack:
                mark, alts, call, rest, depth = stack[-1]
                self.store.restore(mark)
                cl = next(alts, None)
                if cl is None:
                    stack.pop()
                    continue
                self._step()
                new = self._apply(cl, call, rest, depth)
                if new is not _FAIL:
                    goals = new
                    break
            else:
                if self.pruned and self.raise_on_prune:
                    raise EngineLimit("depth limit pruned branches; the stream is incomplete")
                return

    def _step(self) -> None:
        self.steps += 1
        if self.limits.max_steps is not None and self.steps > self.limits.max_steps:
            raise EngineLimit("step limit exceeded")

    def _alternatives(self, atom: DefinedAtom) -> list[Clause]:
        if atom.name == transform.EQ_PRED and len(atom.args) == 3:
            t = self.store.deref(atom.args[0])
            s = self.store.deref(atom.args[1])
            tv, sv = isinstance(t, Var), isinstance(s, Var)
            if tv and sv:
                return self.eq_var
            if tv or sv:
                return self.eq_var if self.bind_one_var else self.eq_ctor
            return self.eq_ctor
        return self.index.get((atom.name, len(atom.args)), [])

    def _apply(self, cl: Clause, call: DefinedAtom, rest, depth: int):
        head_args, body = self._rename(cl)
        for pat, arg in zip(head_args, call.args):
            if not self.store.equate(pat, arg, complete=False):
                return _FAIL
        new = rest
        for atom in reversed(body):
            new = ((atom, depth + 1), new)
        return new

    def _rename(self, cl: Clause):
        names = self._clause_vars.get(id(cl))
        if names is None:
            acc: list[str] = []
            for t in cl.head.args:
                syntax.term_vars(t, acc)
            for item in cl.body:
                for t in syntax.atom_terms(item.atom):
                    syntax.term_vars(t, acc)
            names = tuple(acc)
            self._clause_vars[id(cl)] = names
        m = {n: self._fresh("r") for n in names}
        head_args = tuple(syntax.subst(a, m) for a in cl.head.args)
        body = tuple(_subst_atom(item.atom, m) for item in cl.body)
        return head_args, body

    def _fresh(self, prefix: str) -> Var:
        name = self.store.fresh(prefix)
        self.ages[name] = len(self.ages)
        return Var(name)

    def _age(self, name: str) -> int:
        age = self.ages.get(name)
        if age is None:
            age = len(self.ages)
            self.ages[name] = age
        return age

    # --- deterministic atoms -------------------------------------------------------

    def _equation(self, eq: Equation) -> bool:
        t = self.store.deref(eq.lhs)
        s = self.store.deref(eq.rhs)
        if isinstance(t, Var) and isinstance(s, Var) and t.name != s.name:
            # bind the younger variable so answers keep the goal's names
            if self._age(t.name) <= self._age(s.name):
                t, s = s, t
        return self.store.equate(t, s, complete=False)

    def _primitive(self, atom: Primitive) -> bool:
        if atom.name in _UNSUPPORTED:
            raise EngineError(f"unsupported primitive {atom.name}")
        try:
            c = clpsolver.constraint_of(atom)
        except SolverError as exc:
            raise EngineError(str(exc)) from exc
        return self.store.assert_(c, complete=False)

    def _qval(self, atom: DefinedAtom) -> bool:
        ops = self._leaf_operands(atom.args[0])
        if ops is None:
            return False
        return self.store.assert_all(qdom.qval_constraint(self.enc, ops), complete=False)

    def _qbound(self, atom: DefinedAtom) -> bool:
        xs = self._leaf_operands(atom.args[0])
        ys = self._leaf_operands(atom.args[1])
        zs = self._leaf_operands(atom.args[2])
        if xs is None or ys is None or zs is None:
            return False
        return self.store.assert_all(
            qdom.qbound_constraint(self.enc, xs, ys, zs), complete=False
        )

    def _leaf_operands(self, t: Term) -> Optional[list]:
        """One solver operand (variable name or number) per domain leaf.

        Unbound product-shaped arguments are bound to a flat tuple of fresh
        components first, so later guards can address the leaves."""
        t = self.store.deref(t)
        if isinstance(t, Struct) and t.name == "top" and not t.args:
            return [_leaf_top(leaf) for leaf in self.leaves]
        if len(self.leaves) == 1:
            op = self._leaf_operand(t, self.leaves[0])
            return None if op is None else [op]
        if isinstance(t, Var):
            comps = tuple(self._fresh("q") for _ in self.leaves)
            if not self.store.equate(t, Tup(comps), complete=False):
                return None
            return [c.name for c in comps]
        if isinstance(t, Tup) and len(t.items) == len(self.leaves):
            out = []
            for item, leaf in zip(t.items, self.leaves):
                op = self._leaf_operand(item, leaf)
                if op is None:
                    return None
                out.append(op)
            return out
        return None

    def _leaf_operand(self, t: Term, leaf: qdom.Leaf):
        t = self.store.deref(t)
        if isinstance(t, Num):
            return t.value
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Struct) and t.name == "top" and not t.args:
            return _leaf_top(leaf)
        return None

    # --- answers -----------------------------------------------------------------

    def _answer(self) -> Optional[Answer]:
        if not self.store.is_sat():
            return None
        sigma: dict[str, Term] = {}
        for v in self.goal.term_vars:
            t = self._inline_numeric(self.store.walk(Var(v)))
            if t != Var(v):
                sigma[v] = t
        mu = {w: self._qualification_of(rt) for w, rt in self.goal.wvars.items()}
        self._check_jointly_attainable(mu)
        level = qdom.glb_all(self.dom, mu.values())
        return Answer(
            sigma=sigma,
            mu=mu,
            residual=self._residual(sigma),
            level=level,
            dom=self.dom,
        )

    def _qualification_of(self, runtime: str) -> QValue:
        """The largest value of a qualification variable under the store.

        The guard chains only bound these variables (above by attenuated
        callee values, below by thresholds), so the reported value is the
        supremum of the feasible region, leaf by leaf."""
        t = self.store.walk(Var(runtime))
        n = len(self.leaves)
        if n == 1:
            items: list[Optional[Term]] = [t]
        elif isinstance(t, Tup) and len(t.items) == n:
            items = list(t.items)
        elif isinstance(t, Var):
            items = [None] * n  # never constrained: every leaf is free
        else:
            raise EngineError(f"malformed qualification value {syntax.render_term(t)}")
        vals: list[Fraction] = []
        for item, leaf in zip(items, self.leaves):
            vals.append(self._leaf_optimum(item, leaf))
        shape = _unflatten(self.dom, iter(vals))
        try:
            return qdom.decode(self.enc, shape)
        except qdom.DomainError as exc:
            raise EngineError(f"qualification value outside the domain: {exc}") from exc

    def _leaf_optimum(self, item: Optional[Term], leaf: qdom.Leaf) -> Fraction:
        if item is None:
            return _leaf_top(leaf)
        item = self.store.deref(item)
        if isinstance(item, Num):
            return item.value
        if isinstance(item, Struct) and item.name == "top" and not item.args:
            return _leaf_top(leaf)
        if not isinstance(item, Var):
            raise EngineError(f"malformed qualification leaf {syntax.render_term(item)}")
        if leaf.kind == "b":
            v = self.store.value_of(item.name)
            return v if v is not None else Fraction(1)
        if leaf.kind == "u":
            hi, attained = self.store.optimum(item.name, maximize=True)
            if hi is None:
                return Fraction(1)
        else:  # proof weights order reversed: smaller is higher
            hi, attained = self.store.optimum(item.name, maximize=False)
            if hi is None:
                return Fraction(0)
        if not attained:
            raise EngineError("qualification supremum is not attained")
        return hi

    def _check_jointly_attainable(self, mu: dict[str, QValue]) -> None:
        """The per-variable suprema must admit one common solution."""
        mark = self.store.snapshot()
        try:
            ok = True
            for w, q in mu.items():
                term = _flat_value_term(self.enc, q)
                if not self.store.equate(Var(self.goal.wvars[w]), term, complete=False):
                    ok = False
                    break
            ok = ok and self.store.is_sat()
        finally:
            self.store.restore(mark)
        if not ok:
            raise EngineError("qualification suprema are not jointly attainable")

    def _inline_numeric(self, t: Term) -> Term:
        if isinstance(t, Var):
            if t.name in self.store.numeric:
                v = self.store.value_of(t.name)
                if v is not None:
                    return Num(v)
            return t
        if isinstance(t, Struct) and t.args:
            return Struct(t.name, tuple(self._inline_numeric(a) for a in t.args))
        if isinstance(t, Tup):
            return Tup(tuple(self._inline_numeric(a) for a in t.items))
        return t

    def _residual(self, sigma: dict[str, Term]) -> list[Primitive]:
        keep = set()
        for t in sigma.values():
            for name in syntax.term_vars(t):
                if name in self.store.numeric:
                    keep.add(name)
        for v in self.goal.term_vars:
            # an unbound goal variable may still carry numeric constraints
            if v not in sigma and v in self.store.numeric:
                keep.add(v)
        elim = set(self.store.numeric) - keep
        values, constraints, delayed = self.store.residual(keep, eliminate=elim)
        prims: list[Primitive] = []
        for name in sorted(values):
            prims.append(Primitive("cp_eq", (Var(name), Num(values[name]))))
        for coeffs, const, strict in constraints:
            prims.append(_ineq_primitive(coeffs, const, strict))
        for _, out, x, y in delayed:
            prims.append(Primitive("cp_eq", (Var(out), Bin("*", Var(x), Var(y)))))
        return prims


def _subst_atom(atom, m: dict[str, Term]):
    if isinstance(atom, DefinedAtom):
        return DefinedAtom(atom.name, tuple(syntax.subst(a, m) for a in atom.args))
    if isinstance(atom, Equation):
        return Equation(syntax.subst(atom.lhs, m), syntax.subst(atom.rhs, m))
    if isinstance(atom, Primitive):
        return Primitive(atom.name, tuple(_subst_side(a, m) for a in atom.args))
    raise EngineError(f"cannot rename atom {atom!r}")


def _subst_side(t, m: dict[str, Term]):
    if isinstance(t, Bin):
        return Bin(t.op, syntax.subst(t.lhs, m), syntax.subst(t.rhs, m))
    return syntax.subst(t, m)


def _leaf_top(leaf: qdom.Leaf) -> Fraction:
    return Fraction(0) if leaf.kind == "w" else Fraction(1)


def _unflatten(dom: QDomain, it):
    if isinstance(dom, qdom.Prod):
        left = _unflatten(dom.left, it)
        right = _unflatten(dom.right, it)
        return (left, right)
    return next(it)


def _flat_value_term(enc: qdom.QEncoding, q: QValue) -> Term:
    flat: list[Fraction] = []

    def walk(shape):
        if isinstance(shape, tuple):
            walk(shape[0])
            walk(shape[1])
        else:
            flat.append(shape)

    walk(qdom.encode(enc, q))
    if len(flat) == 1:
        return Num(flat[0])
    return Tup(tuple(Num(x) for x in flat))


def _scaled(name: str, c: Fraction) -> Term:
    if c == 1:
        return Var(name)
    return Bin("*", Num(c), Var(name))


def _summed(terms: list) -> Optional[Term]:
    acc = None
    for t in terms:
        acc = t if acc is None else Bin("+", acc, t)
    return acc


def _ineq_primitive(coeffs: dict[str, Fraction], const: Fraction, strict: bool) -> Primitive:
    # sum(coeffs) + const (<|<=) 0, rendered with positive terms on each side
    lhs_terms = [_scaled(v, c) for v, c in sorted(coeffs.items()) if c > 0]
    rhs_terms = [_scaled(v, -c) for v, c in sorted(coeffs.items()) if c < 0]
    if const > 0:
        lhs_terms.append(Num(const))
    elif const < 0:
        rhs_terms.append(Num(-const))
    lhs = _summed(lhs_terms) or Num(Fraction(0))
    rhs = _summed(rhs_terms) or Num(Fraction(0))
    return Primitive("cp_lt" if strict else "cp_le", (lhs, rhs))


# --- subsumption ------------------------------------------------------------------


def check_subsumes(ans: Answer, gsol: Answer, goal: CompiledGoal) -> bool:
    """Whether the ground answer is an instance of the candidate answer.

    Holds when every qualification of the candidate dominates the ground
    one and the ground data bindings arise from the candidate's bindings at
    some solution of the candidate's residual constraints."""
    _require_ground(gsol, goal)
    dom = ans.dom
    for w in goal.wvars:
        if not qdom.leq(dom, _mu_of(gsol, w), _mu_of(ans, w)):
            return False
    binds: dict[str, Term] = {}
    for x in goal.term_vars:
        pat = ans.sigma.get(x, Var(x))
        if not _match(pat, gsol.sigma[x], binds):
            return False
    return _nu_solves(ans, binds)


def check_subsumes_flexible(
    ans: Answer, gsol: Answer, goal: CompiledGoal, rel: ProximityRelation
) -> bool:
    """Subsumption up to closeness at the ground answer's own level.

    The candidate's level must dominate the ground answer's level, and some
    instantiation of the candidate's bindings (a solution of its residual)
    must be close to the ground bindings at that level, variable by
    variable.  Witness instantiations are searched over the subterms of the
    ground answer plus sampled residual bounds; the search is complete for
    the ground, finite cases it is used on."""
    _require_ground(gsol, goal)
    dom = ans.dom
    lam_g = qdom.glb_all(dom, (_mu_of(gsol, w) for w in goal.wvars))
    lam_a = qdom.glb_all(dom, (_mu_of(ans, w) for w in goal.wvars))
    if not qdom.leq(dom, lam_g, lam_a):
        return False
    pats = {x: ans.sigma.get(x, Var(x)) for x in goal.term_vars}
    free: list[str] = []
    for pat in pats.values():
        syntax.term_vars(pat, free)
    pool = _subterm_pool(gsol)
    rstore = Store()
    for p in ans.residual:
        if not rstore.assert_(clpsolver.constraint_of(p), complete=False):
            return False
    candidates: list[list[Term]] = []
    for v in free:
        if v in rstore.numeric:
            candidates.append(_numeric_candidates(rstore, v, pool))
        else:
            candidates.append(pool)
    total = 1
    for c in candidates:
        total *= max(len(c), 1)
        if total > _FLEX_WITNESS_CAP:
            raise EngineError("witness search space too large")
    for choice in itertools.product(*candidates):
        binds = dict(zip(free, choice))
        if not _nu_solves(ans, binds):
            continue
        ok = True
        for x in goal.term_vars:
            inst = syntax.subst(pats[x], binds)
            if not qdom.leq(dom, lam_g, prox.term_proximity(rel, gsol.sigma[x], inst)):
                ok = False
                break
        if ok:
            return True
    return False


def _mu_of(ans: Answer, w: str) -> QValue:
    q = ans.mu.get(w)
    if q is None:
        raise EngineError(f"answer lacks a qualification for {w}")
    return q


def _require_ground(gsol: Answer, goal: CompiledGoal) -> None:
    if gsol.residual:
        raise EngineError("the reference answer must be ground (empty residual)")
    for x in goal.term_vars:
        t = gsol.sigma.get(x)
        if t is None or syntax.term_vars(t):
            raise EngineError("the reference answer must bind every goal variable to a ground term")


def _match(pat: Term, target: Term, binds: dict[str, Term]) -> bool:
    if isinstance(pat, Var):
        seen = binds.get(pat.name)
        if seen is not None:
            return seen == target
        binds[pat.name] = target
        return True
    if isinstance(pat, Num) and isinstance(target, Num):
        return pat.value == target.value
    if isinstance(pat, Struct) and isinstance(target, Struct):
        return (
            pat.name == target.name
            and len(pat.args) == len(target.args)
            and all(_match(p, t, binds) for p, t in zip(pat.args, target.args))
        )
    if isinstance(pat, Tup) and isinstance(target, Tup):
        return len(pat.items) == len(target.items) and all(
            _match(p, t, binds) for p, t in zip(pat.items, target.items)
        )
    return pat == target


def _nu_solves(ans: Answer, binds: dict[str, Term]) -> bool:
    store = Store()
    for p in ans.residual:
        if not store.assert_(clpsolver.constraint_of(p), complete=False):
            return False
    for name, t in binds.items():
        if not store.equate(Var(name), t, complete=False):
            return False
    return store.is_sat()


def _subterm_pool(gsol: Answer) -> list[Term]:
    pool: list[Term] = []

    def add(t: Term):
        if t not in pool:
            pool.append(t)
        for a in syntax.term_args(t):
            add(a)

    for t in gsol.sigma.values():
        add(t)
    return pool


def _numeric_candidates(rstore: Store, name: str, pool: list[Term]) -> list[Term]:
    out: list[Term] = [t for t in pool if isinstance(t, Num)]
    lo, lo_s, hi, hi_s = rstore.bounds_of(name)
    if lo is not None and not lo_s and Num(lo) not in out:
        out.append(Num(lo))
    if hi is not None and not hi_s and Num(hi) not in out:
        out.append(Num(hi))
    if lo is not None and hi is not None and lo < hi:
        mid = (lo + hi) / 2
        if Num(mid) not in out:
            out.append(Num(mid))
    return out
