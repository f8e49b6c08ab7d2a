"""Constraint store over real arithmetic plus constructor terms.

The store keeps two cooperating layers under one trail:

* Herbrand bindings for term variables, maintained by structural equation
  decomposition (``equate``);
* a set of linear rows over real-valued variables with per-variable
  interval bounds, maintained by ``assert_``.

Assertion is atomic: an assertion that would make the store unsatisfiable
is rejected and leaves the store unchanged.  Satisfiability of the linear
fragment is decided by bounds propagation plus Fourier-Motzkin
elimination; nonlinear multiplications are delayed until one factor is
numerically ground (their satisfiability is only approximated until then,
matching the usual clp(R) behavior).

Arithmetic constraints are neutral tuples ``(rel, lhs, rhs)`` with
``rel`` one of ``lt le gt ge eq``.  Sides may be numbers, variable tokens
(strings), ``syntax`` terms (``Var``/``Num``/``Bin``), or nested
``('add', a, b)`` / ``('sub', a, b)`` / ``('mul', a, b)`` /
``('div', a, b)`` tuples.  All arithmetic is exact-rational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from . import syntax
from .syntax import Term, Var


class SolverError(ValueError):
    pass


class _TypeClash(Exception):
    """A constructor term reached an arithmetic position (false in the reals)."""


class _Unsat(Exception):
    """Internal: bounds propagation emptied an interval."""


@dataclass(frozen=True)
class Interval:
    lo: Optional[Fraction] = None
    lo_strict: bool = False
    hi: Optional[Fraction] = None
    hi_strict: bool = False

    def empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and (self.lo_strict or self.hi_strict)

    def pinned(self) -> Optional[Fraction]:
        if (
            self.lo is not None
            and self.lo == self.hi
            and not self.lo_strict
            and not self.hi_strict
        ):
            return self.lo
        return None


# a linear row: sum(coeffs[v] * v) + const  REL  0, REL in {le, lt, eq}
@dataclass
class Row:
    coeffs: dict[str, Fraction]
    const: Fraction
    rel: str


@dataclass
class MulRow:
    out: str  # out = x * y
    x: str
    y: str
    active: bool = False


_PROPAGATION_ROUNDS = 200


class Store:
    def __init__(self, occurs_check: bool = False):
        self.bindings: dict[str, Term] = {}
        self.numeric: set[str] = set()
        self.ivals: dict[str, Interval] = {}
        self.rows: list[Row] = []
        self.muls: list[MulRow] = []
        self.trail: list[tuple] = []
        self.occurs_check = occurs_check
        self._counter = 0

    # --- variables and snapshots ---------------------------------------------

    def fresh(self, prefix: str = "v") -> str:
        self._counter += 1
        return f"_{prefix}{self._counter}"

    def snapshot(self) -> int:
        return len(self.trail)

    def restore(self, mark: int) -> None:
        if mark > len(self.trail):
            raise SolverError("stale snapshot")
        while len(self.trail) > mark:
            kind, *rest = self.trail.pop()
            if kind == "bind":
                del self.bindings[rest[0]]
            elif kind == "ival":
                name, old = rest
                if old is None:
                    del self.ivals[name]
                else:
                    self.ivals[name] = old
            elif kind == "numeric":
                self.numeric.discard(rest[0])
            elif kind == "row":
                self.rows.pop()
            elif kind == "mul":
                self.muls.pop()
            elif kind == "mulact":
                self.muls[rest[0]].active = False

    def fingerprint(self) -> tuple:
        return (
            tuple(sorted(self.bindings.items(), key=lambda kv: kv[0])),
            tuple(sorted(self.numeric)),
            tuple(sorted(self.ivals.items(), key=lambda kv: kv[0])),
            tuple((tuple(sorted(r.coeffs.items())), r.const, r.rel) for r in self.rows),
            tuple((m.out, m.x, m.y, m.active) for m in self.muls),
        )

    # --- term layer ----------------------------------------------------------

    def deref(self, t: Term) -> Term:
        while isinstance(t, Var):
            nxt = self.bindings.get(t.name)
            if nxt is None:
                return t
            t = nxt
        return t

    def walk(self, t: Term) -> Term:
        """Deep dereference, for answer extraction."""
        t = self.deref(t)
        if isinstance(t, syntax.Struct) and t.args:
            return syntax.Struct(t.name, tuple(self.walk(a) for a in t.args))
        if isinstance(t, syntax.Tup):
            return syntax.Tup(tuple(self.walk(a) for a in t.items))
        return t

    def _occurs(self, name: str, t: Term) -> bool:
        t = self.deref(t)
        if isinstance(t, Var):
            return t.name == name
        return any(self._occurs(name, a) for a in syntax.term_args(t))

    def _bind(self, name: str, t: Term) -> bool:
        if self.occurs_check and self._occurs(name, t):
            return False
        if name in self.numeric:
            t = self.deref(t)
            if isinstance(t, syntax.Num):
                if not self._add_linear({name: Fraction(1)}, -t.value, "eq"):
                    return False
            elif isinstance(t, Var):
                self._register(t.name)
                if not self._add_linear({name: Fraction(1), t.name: Fraction(-1)}, Fraction(0), "eq"):
                    return False
            else:
                return False  # a real-valued variable cannot be a constructor term
        self.bindings[name] = t
        self.trail.append(("bind", name))
        return True

    def equate(self, t: Term, s: Term, complete: bool = True) -> bool:
        """Structural equation; atomic like assert_."""
        mark = self.snapshot()
        if self._equate(t, s) and (not complete or self.is_sat()):
            return True
        self.restore(mark)
        return False

    def _equate(self, t: Term, s: Term) -> bool:
        t, s = self.deref(t), self.deref(s)
        if isinstance(t, Var):
            if isinstance(s, Var) and s.name == t.name:
                return True
            return self._bind(t.name, s)
        if isinstance(s, Var):
            return self._bind(s.name, t)
        if isinstance(t, syntax.Num) or isinstance(s, syntax.Num):
            return isinstance(t, syntax.Num) and isinstance(s, syntax.Num) and t.value == s.value
        if isinstance(t, syntax.Str) or isinstance(s, syntax.Str):
            return isinstance(t, syntax.Str) and isinstance(s, syntax.Str) and t.value == s.value
        if syntax.functor(t) != syntax.functor(s):
            return False
        return all(self._equate(a, b) for a, b in zip(syntax.term_args(t), syntax.term_args(s)))

    # --- numeric layer ---------------------------------------------------------

    def _register(self, name: str) -> None:
        if name not in self.numeric:
            self.numeric.add(name)
            self.trail.append(("numeric", name))

    def _side(self, x) -> tuple[dict[str, Fraction], Fraction]:
        """Lower a side to a linear combination, introducing delayed
        multiplications for variable*variable products."""
        if isinstance(x, (int, Fraction)):
            return ({}, Fraction(x))
        if isinstance(x, str):
            return self._var_side(x)
        if isinstance(x, syntax.Num):
            return ({}, x.value)
        if isinstance(x, Var):
            t = self.deref(x)
            if isinstance(t, Var):
                return self._var_side(t.name)
            return self._side(t)
        if isinstance(x, syntax.Bin):
            op = {"+": "add", "-": "sub", "*": "mul", "/": "div"}[x.op]
            return self._side((op, x.lhs, x.rhs))
        if isinstance(x, tuple) and len(x) == 3 and x[0] in ("add", "sub", "mul", "div"):
            op, a, b = x
            ca, ka = self._side(a)
            cb, kb = self._side(b)
            if op == "add":
                return (_merge(ca, cb, 1), ka + kb)
            if op == "sub":
                return (_merge(ca, cb, -1), ka - kb)
            if op == "mul":
                if not ca:  # numeric * linear
                    return ({v: ka * c for v, c in cb.items()}, ka * kb)
                if not cb:
                    return ({v: kb * c for v, c in ca.items()}, ka * kb)
                return self._delay_mul(ca, ka, cb, kb)
            # division only by a nonzero number; anything else stays out of scope
            if cb:
                raise SolverError("division by a non-ground expression is not supported")
            if kb == 0:
                raise _TypeClash
            return ({v: c / kb for v, c in ca.items()}, ka / kb)
        raise _TypeClash

    def _var_side(self, name: str) -> tuple[dict[str, Fraction], Fraction]:
        t = self.deref(Var(name))
        if isinstance(t, syntax.Num):
            return ({}, t.value)
        if isinstance(t, Var):
            self._register(t.name)
            return ({t.name: Fraction(1)}, Fraction(0))
        raise _TypeClash

    def _delay_mul(self, ca, ka, cb, kb):
        if len(ca) != 1 or ka != 0 or len(cb) != 1 or kb != 0:
            raise SolverError("only simple variable products are supported")
        (xa, fa), (xb, fb) = next(iter(ca.items())), next(iter(cb.items()))
        out = self.fresh("mul")
        self._register(out)
        self.muls.append(MulRow(out, xa, xb))
        self.trail.append(("mul",))
        return ({out: fa * fb}, Fraction(0))

    def assert_(self, constraint, complete: bool = True) -> bool:
        """Atomically add one constraint; False leaves the store unchanged.

        ``complete=True`` (the default) decides linear satisfiability exactly.
        Callers whose constraint chains are acyclic by construction (each new
        guard only bounds a fresh variable) may pass ``complete=False`` to
        rely on bounds propagation alone and defer the exact check."""
        return self.assert_all([constraint], complete)

    def assert_all(self, constraints: Iterable, complete: bool = True) -> bool:
        mark = self.snapshot()
        for c in constraints:
            try:
                if not self._do_assert(c):
                    self.restore(mark)
                    return False
            except _TypeClash:
                self.restore(mark)
                return False
        if complete and not self.is_sat():
            self.restore(mark)
            return False
        return True

    def _do_assert(self, constraint) -> bool:
        if not (isinstance(constraint, tuple) and len(constraint) == 3):
            raise SolverError(f"malformed constraint: {constraint!r}")
        rel, lhs, rhs = constraint
        if rel == "equate":
            return self._equate(lhs, rhs)
        if rel not in ("lt", "le", "gt", "ge", "eq"):
            raise SolverError(f"unknown relation {rel!r}")
        cl, kl = self._side(lhs)
        cr, kr = self._side(rhs)
        coeffs = _merge(cl, cr, -1)
        const = kl - kr
        if rel in ("gt", "ge"):  # flip to lt/le
            coeffs = {v: -c for v, c in coeffs.items()}
            const = -const
            rel = "lt" if rel == "gt" else "le"
        return self._add_linear(coeffs, const, rel)

    def _add_linear(self, coeffs: dict[str, Fraction], const: Fraction, rel: str) -> bool:
        coeffs = {v: c for v, c in coeffs.items() if c != 0}
        if not coeffs:
            if rel == "eq":
                return const == 0
            return const < 0 if rel == "lt" else const <= 0
        if len(coeffs) == 1:
            # A bound on a single variable is just an interval update; keeping
            # it out of ``rows`` keeps Fourier-Motzkin small.
            ((v, c),) = coeffs.items()
            self._register(v)
            bound = -const / c
            try:
                if rel == "eq":
                    self._tighten(v, bound, False, upper=True)
                    self._tighten(v, bound, False, upper=False)
                else:
                    self._tighten(v, bound, rel == "lt", upper=c > 0)
            except _Unsat:
                return False
            return self._propagate()
        for v in coeffs:
            self._register(v)
        self.rows.append(Row(coeffs, const, rel))
        self.trail.append(("row",))
        return self._propagate()

    # --- bounds propagation ------------------------------------------------------

    def _ival(self, name: str) -> Interval:
        return self.ivals.get(name, Interval())

    def _set_ival(self, name: str, new: Interval) -> None:
        old = self.ivals.get(name)
        self.ivals[name] = new
        self.trail.append(("ival", name, old))
        if new.empty():
            raise _Unsat

    def _tighten(self, name: str, bound: Fraction, strict: bool, upper: bool) -> bool:
        """Tighten one side of an interval; True iff it changed."""
        iv = self._ival(name)
        if upper:
            if iv.hi is None or bound < iv.hi or (bound == iv.hi and strict and not iv.hi_strict):
                self._set_ival(name, Interval(iv.lo, iv.lo_strict, bound, strict))
                return True
        else:
            if iv.lo is None or bound > iv.lo or (bound == iv.lo and strict and not iv.lo_strict):
                self._set_ival(name, Interval(bound, strict, iv.hi, iv.hi_strict))
                return True
        return False

    def _propagate(self) -> bool:
        try:
            for _ in range(_PROPAGATION_ROUNDS):
                changed = False
                for row in self.rows:
                    changed |= self._propagate_row(row)
                changed |= self._activate_muls()
                if not changed:
                    return True
            return True  # convergence cap reached; FM still decides at answer time
        except _Unsat:
            return False

    def _propagate_row(self, row: Row) -> bool:
        changed = False
        directions = [(row.coeffs, row.const, row.rel == "lt")]
        if row.rel == "eq":
            directions = [
                (row.coeffs, row.const, False),
                ({v: -c for v, c in row.coeffs.items()}, -row.const, False),
            ]
        for coeffs, const, strict in directions:
            for v, c in coeffs.items():
                acc = -const
                s = strict
                ok = True
                for u, cu in coeffs.items():
                    if u == v:
                        continue
                    iv = self._ival(u)
                    if cu > 0:
                        if iv.lo is None:
                            ok = False
                            break
                        acc -= cu * iv.lo
                        s = s or iv.lo_strict
                    else:
                        if iv.hi is None:
                            ok = False
                            break
                        acc -= cu * iv.hi
                        s = s or iv.hi_strict
                if not ok:
                    continue
                # c*v <= acc (strict if s)
                changed |= self._tighten(v, acc / c, s, upper=c > 0)
        return changed

    def _activate_muls(self) -> bool:
        changed = False
        for idx, m in enumerate(self.muls):
            if m.active:
                continue
            vx = self._ival(m.x).pinned()
            vy = self._ival(m.y).pinned()
            if vx is None and vy is None:
                continue
            m.active = True
            self.trail.append(("mulact", idx))
            coeffs = {m.out: Fraction(1)}
            if vx is not None:
                if vx != 0:
                    coeffs[m.y] = -vx
            elif vy != 0:
                coeffs[m.x] = -vy
            self.rows.append(Row(coeffs, Fraction(0), "eq"))
            self.trail.append(("row",))
            changed = True
        return changed

    # --- decision procedures --------------------------------------------------------

    def _inequalities(self) -> list[tuple[dict[str, Fraction], Fraction, bool]]:
        """All constraints as (coeffs, const, strict) meaning sum+const (<|<=) 0."""
        out = []
        for row in self.rows:
            if row.rel == "eq":
                out.append((dict(row.coeffs), row.const, False))
                out.append(({v: -c for v, c in row.coeffs.items()}, -row.const, False))
            else:
                out.append((dict(row.coeffs), row.const, row.rel == "lt"))
        for name, iv in self.ivals.items():
            if iv.hi is not None:
                out.append(({name: Fraction(1)}, -iv.hi, iv.hi_strict))
            if iv.lo is not None:
                out.append(({name: Fraction(-1)}, iv.lo, iv.lo_strict))
        return out

    @staticmethod
    def _eliminate(ineqs, name):
        uppers, lowers, rest = [], [], []
        for coeffs, const, strict in ineqs:
            c = coeffs.get(name, Fraction(0))
            if c > 0:
                uppers.append((coeffs, const, strict, c))
            elif c < 0:
                lowers.append((coeffs, const, strict, c))
            else:
                rest.append((coeffs, const, strict))
        for cu, ku, su, a in uppers:
            for cl, kl, sl, b in lowers:
                # a>0, b<0: combine (1/a)*upper + (-1/b)*lower
                coeffs: dict[str, Fraction] = {}
                for v, c in cu.items():
                    if v != name:
                        coeffs[v] = coeffs.get(v, Fraction(0)) + c / a
                for v, c in cl.items():
                    if v != name:
                        coeffs[v] = coeffs.get(v, Fraction(0)) - c / b
                coeffs = {v: c for v, c in coeffs.items() if c != 0}
                rest.append((coeffs, ku / a - kl / b, su or sl))
        return rest

    @staticmethod
    def _constants_ok(ineqs) -> bool:
        for coeffs, const, strict in ineqs:
            if not coeffs:
                if const > 0 or (const == 0 and strict):
                    return False
        return True

    def is_sat(self) -> bool:
        """Decide the linear fragment (delayed multiplications excluded).

        Variables constrained only by their own interval are satisfiable by
        construction (intervals are never empty), so elimination runs over
        the row variables alone."""
        ineqs = []
        for row in self.rows:
            if row.rel == "eq":
                ineqs.append((dict(row.coeffs), row.const, False))
                ineqs.append(({v: -c for v, c in row.coeffs.items()}, -row.const, False))
            else:
                ineqs.append((dict(row.coeffs), row.const, row.rel == "lt"))
        names = sorted({v for coeffs, _, _ in ineqs for v in coeffs})
        for name in names:
            iv = self.ivals.get(name)
            if iv is not None:
                if iv.hi is not None:
                    ineqs.append(({name: Fraction(1)}, -iv.hi, iv.hi_strict))
                if iv.lo is not None:
                    ineqs.append(({name: Fraction(-1)}, iv.lo, iv.lo_strict))
        for name in names:
            ineqs = self._eliminate(ineqs, name)
            ineqs = [r for r in ineqs if r[0] or not self._row_trivial(r)]
            if not self._constants_ok(ineqs):
                return False
        return self._constants_ok(ineqs)

    @staticmethod
    def _row_trivial(r) -> bool:
        coeffs, const, strict = r
        return not coeffs and (const < 0 or (const == 0 and not strict))

    def has_pending_nonlinear(self) -> bool:
        return any(not m.active for m in self.muls)

    def entails(self, constraint) -> Optional[bool]:
        """True = every solution satisfies it; False = some solution refutes it;
        None = undecided (nonlinear residue)."""
        rel, lhs, rhs = constraint
        if rel == "eq":
            le = self.entails(("le", lhs, rhs))
            ge = self.entails(("ge", lhs, rhs))
            if le is True and ge is True:
                return True
            if le is False or ge is False:
                return False
            return None
        neg = {"lt": "ge", "le": "gt", "gt": "le", "ge": "lt"}[rel]
        if not self._holds_with((neg, lhs, rhs)):
            return True
        if not self._holds_with(constraint):
            return False
        return None if self.has_pending_nonlinear() else False

    def _holds_with(self, constraint) -> bool:
        mark = self.snapshot()
        try:
            ok = self._do_assert(constraint)
            sat = ok and self.is_sat()
        except _TypeClash:
            sat = False
        finally:
            self.restore(mark)
        return sat

    def value_of(self, name: str) -> Optional[Fraction]:
        t = self.deref(Var(name))
        if isinstance(t, syntax.Num):
            return t.value
        if isinstance(t, Var):
            name = t.name
        lo, lo_s, hi, hi_s = self.bounds_of(name)
        if lo is not None and lo == hi and not lo_s and not hi_s:
            return lo
        return None

    def bounds_of(self, name: str) -> tuple[Optional[Fraction], bool, Optional[Fraction], bool]:
        """Exact projection bounds for one variable (FM over everything else).

        Only the row-connected component of ``name`` matters: disjoint
        components share no variables, so they never combine under
        elimination."""
        comp = {name}
        while True:
            grown = False
            for row in self.rows:
                keys = row.coeffs.keys()
                if comp & keys and not keys <= comp:
                    comp |= keys
                    grown = True
            if not grown:
                break
        ineqs = []
        for row in self.rows:
            if not comp & row.coeffs.keys():
                continue
            if row.rel == "eq":
                ineqs.append((dict(row.coeffs), row.const, False))
                ineqs.append(({v: -c for v, c in row.coeffs.items()}, -row.const, False))
            else:
                ineqs.append((dict(row.coeffs), row.const, row.rel == "lt"))
        for v in comp:
            iv = self.ivals.get(v)
            if iv is None:
                continue
            if iv.hi is not None:
                ineqs.append(({v: Fraction(1)}, -iv.hi, iv.hi_strict))
            if iv.lo is not None:
                ineqs.append(({v: Fraction(-1)}, iv.lo, iv.lo_strict))
        for v in sorted(comp - {name}):
            ineqs = self._eliminate(ineqs, v)
        lo, hi = None, None
        lo_s = hi_s = False
        for coeffs, const, strict in ineqs:
            c = coeffs.get(name)
            if not c:
                continue
            bound = -const / c
            if c > 0:  # upper
                if hi is None or bound < hi or (bound == hi and strict):
                    hi, hi_s = bound, strict
            else:
                if lo is None or bound > lo or (bound == lo and strict):
                    lo, lo_s = bound, strict
        return lo, lo_s, hi, hi_s

    def optimum(self, name: str, maximize: bool) -> tuple[Optional[Fraction], bool]:
        """(bound, attained); bound None means unbounded in that direction."""
        lo, lo_s, hi, hi_s = self.bounds_of(name)
        if maximize:
            return (hi, not hi_s if hi is not None else False)
        return (lo, not lo_s if lo is not None else False)

    def residual(self, names: Iterable[str], eliminate: Iterable[str] = ()):
        """Project the store onto the given numeric variables.

        Pinned variables are reported as bindings.  Variables in
        ``eliminate`` (internal helpers) are removed by elimination; any
        other variable sharing a constraint with a kept one stays as an
        attendant.  Returns (values, constraints, delayed)."""
        keep = set(names)
        values: dict[str, Fraction] = {}
        for name in sorted(keep):
            v = self.value_of(name)
            if v is not None:
                values[name] = v
        live = keep - set(values)
        if not live:
            delayed = [
                ("mul", m.out, m.x, m.y)
                for m in self.muls
                if not m.active and keep & {m.out, m.x, m.y}
            ]
            return values, [], delayed
        ineqs = self._inequalities()
        allvars = {v for coeffs, _, _ in ineqs for v in coeffs}
        pinned_helpers = {v for v in allvars - keep if self.value_of(v) is not None}
        for v in sorted((set(eliminate) | pinned_helpers) - live):
            ineqs = self._eliminate(ineqs, v)
        # keep the constraints connected to the live variables
        rows = []
        seen = set()
        for coeffs, const, strict in ineqs:
            if not coeffs:
                continue
            key = (tuple(sorted(coeffs.items())), const, strict)
            if key in seen:
                continue
            seen.add(key)
            rows.append((dict(coeffs), const, strict))
        reach = set(live)
        while True:
            grown = False
            for coeffs, _, _ in rows:
                if reach & set(coeffs) and not set(coeffs) <= reach:
                    reach |= set(coeffs)
                    grown = True
            if not grown:
                break
        constraints = _minimize([r for r in rows if set(r[0]) & reach])
        delayed = [
            ("mul", m.out, m.x, m.y)
            for m in self.muls
            if not m.active and (keep | reach) & {m.out, m.x, m.y}
        ]
        return values, constraints, delayed


def _merge(a: dict[str, Fraction], b: dict[str, Fraction], sign: int) -> dict[str, Fraction]:
    out = dict(a)
    for v, c in b.items():
        out[v] = out.get(v, Fraction(0)) + sign * c
    return out


def _entailed_by(system, row) -> bool:
    """Whether the inequality ``row`` follows from the ``system`` (FM check
    of system plus row's negation)."""
    coeffs, const, strict = row
    neg = ({v: -c for v, c in coeffs.items()}, -const, not strict)
    ineqs = list(system) + [neg]
    for name in sorted({v for cs, _, _ in ineqs for v in cs}):
        ineqs = Store._eliminate(ineqs, name)
    return not Store._constants_ok(ineqs)


def _minimize(rows):
    """Greedily drop rows implied by the remaining ones."""
    kept = list(rows)
    i = 0
    while i < len(kept):
        rest = kept[:i] + kept[i + 1 :]
        if _entailed_by(rest, kept[i]):
            kept.pop(i)
        else:
            i += 1
    return kept


_CP_RELS = {"cp_lt": "lt", "cp_le": "le", "cp_gt": "gt", "cp_ge": "ge", "cp_eq": "eq"}


def constraint_of(p: syntax.Primitive):
    """The neutral (rel, lhs, rhs) form of a parsed primitive atom."""
    rel = _CP_RELS.get(p.name)
    if rel is not None:
        lhs, rhs = p.args
        return (rel, lhs, rhs)
    op = syntax._OP_RENDER.get(p.name)
    if op is None:
        raise SolverError(f"unknown primitive {p.name}")
    a, b, c = p.args
    return ("eq", syntax.Bin(op, a, b), c)
