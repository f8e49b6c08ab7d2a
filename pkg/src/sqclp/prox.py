"""Proximity relations between program symbols.

A relation assigns a qualification value to pairs of predicate or
constructor symbols of equal arity.  It is kept reflexive (every symbol
is close to itself at the top value) and symmetric by construction;
transitivity is not required and is only reported on request.

Relations are loaded from ``.prox`` files holding ``pprox``/``cprox``
facts, e.g.::

    pprox(wrote, authored, 2, (0.9,0)).
    cprox(king_lear, king_liar, 0, (0.8,2)).

Values live in the qualification domain of the program the relation is
linked against, so the domain is an argument of the loader.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from . import qdom
from .qdom import BOTTOM, QDomain, QValue


class ProxError(ValueError):
    pass


@dataclass(frozen=True)
class SymbolKey:
    kind: str  # "pred", "ctor", or "basic" (numeric constants)
    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


def pred(name: str, arity: int) -> SymbolKey:
    return SymbolKey("pred", name, arity)


def ctor(name: str, arity: int) -> SymbolKey:
    return SymbolKey("ctor", name, arity)


@dataclass
class ProximityRelation:
    dom: QDomain
    name: Optional[str] = None
    # declared pairs in file order, declared orientation, after normalization
    pairs: list[tuple[SymbolKey, SymbolKey, QValue]] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    _table: dict[tuple[SymbolKey, SymbolKey], QValue] = field(default_factory=dict)

    def add(self, a: SymbolKey, b: SymbolKey, value: QValue, where: str = "") -> None:
        if a.kind != b.kind:
            raise ProxError(f"{where}cannot relate a predicate to a constructor")
        if a.arity != b.arity:
            raise ProxError(f"{where}arity mismatch: {a} vs {b}")
        if value is BOTTOM or not qdom.member(self.dom, value):
            raise ProxError(f"{where}proximity value out of range for the domain")
        if a == b:
            self.diagnostics.append(f"{where}dropped reflexive entry for {a}")
            return
        key = (a, b) if (a.name, a.arity) <= (b.name, b.arity) else (b, a)
        if key in self._table:
            if self._table[key] == value:
                self.diagnostics.append(f"{where}dropped duplicate entry for {a} ~ {b}")
                return
            raise ProxError(f"{where}conflicting values for {a} ~ {b}")
        self._table[key] = value
        self.pairs.append((a, b, value))

    def symbols(self) -> list[SymbolKey]:
        seen: list[SymbolKey] = []
        for a, b, _ in self.pairs:
            for s in (a, b):
                if s not in seen:
                    seen.append(s)
        return seen

    def values(self) -> list[QValue]:
        """Declared proximity values, deduplicated, in declaration order."""
        out: list[QValue] = []
        for _, _, v in self.pairs:
            if v not in out:
                out.append(v)
        return out

    def partners(self, s: SymbolKey) -> list[tuple[SymbolKey, QValue]]:
        """Symbols declared close to ``s`` (excluding ``s``), declaration order."""
        out = []
        for a, b, v in self.pairs:
            if a == s:
                out.append((b, v))
            elif b == s:
                out.append((a, v))
        return out


def identity_relation(dom: QDomain) -> ProximityRelation:
    """The relation that is top on equal symbols and bottom elsewhere."""
    return ProximityRelation(dom)


def lookup(rel: ProximityRelation, a: SymbolKey, b: SymbolKey) -> QValue:
    if a == b:
        return qdom.top(rel.dom)
    if a.kind != b.kind or a.arity != b.arity:
        return BOTTOM
    key = (a, b) if (a.name, a.arity) <= (b.name, b.arity) else (b, a)
    return rel._table.get(key, BOTTOM)


def basic_key(value: Fraction) -> SymbolKey:
    return SymbolKey("basic", qdom.render_number(value), 0)


def term_proximity(rel: ProximityRelation, t, s) -> QValue:
    """Extend the relation to terms: variables are only close to themselves,
    basic values consult the declared basic pairs, compound terms combine the
    root proximity with the meet over the arguments."""
    from . import syntax  # local import: syntax depends on qdom only

    dom = rel.dom
    if isinstance(t, syntax.Var) or isinstance(s, syntax.Var):
        return qdom.top(dom) if t == s else BOTTOM
    if isinstance(t, syntax.Num) and isinstance(s, syntax.Num):
        return lookup(rel, basic_key(t.value), basic_key(s.value))
    if isinstance(t, (syntax.Num, syntax.Str)) or isinstance(s, (syntax.Num, syntax.Str)):
        return qdom.top(dom) if t == s else BOTTOM
    nt, at_ = syntax.functor(t)
    ns, as_ = syntax.functor(s)
    if at_ != as_:
        return BOTTOM
    root = lookup(rel, ctor(nt, at_), ctor(ns, as_))
    if root is BOTTOM:
        return BOTTOM
    acc = root
    for ta, sa in zip(syntax.term_args(t), syntax.term_args(s)):
        acc = qdom.glb(dom, acc, term_proximity(rel, ta, sa))
        if acc is BOTTOM:
            return BOTTOM
    return acc


def closeness_d(rel: ProximityRelation, dom: QDomain, d: QValue, t, s) -> bool:
    """Whether the two terms are close at least to degree ``d`` (d > bottom)."""
    if dom != rel.dom:
        raise ProxError("relation and query use different qualification domains")
    if d is BOTTOM:
        return False
    return qdom.leq(dom, d, term_proximity(rel, t, s))


def similarity_gaps(rel: ProximityRelation, limit: int = 20) -> list[str]:
    """Triples where transitivity through a middle symbol fails.  Purely
    advisory: proximity relations are allowed to be non-transitive."""
    out: list[str] = []
    syms = rel.symbols()
    for a in syms:
        for b, vab in rel.partners(a):
            for c, vbc in rel.partners(b):
                if c == a:
                    continue
                through = qdom.glb(rel.dom, vab, vbc)
                direct = lookup(rel, a, c)
                if not qdom.leq(rel.dom, through, direct):
                    out.append(f"{a} ~ {b} ~ {c} suggests {a} ~ {c}")
                    if len(out) >= limit:
                        return out
    return out


# --- the .prox file format ----------------------------------------------------

_NAME = r"[a-z][A-Za-z0-9_]*|-?\d+(?:\.\d+)?"
_FACT_RE = re.compile(rf"^(pprox|cprox)\s*\(\s*({_NAME})\s*,\s*({_NAME})\s*,\s*(\d+)\s*,\s*(.*?)\s*\)\s*\.\s*$")


def _parse_value(text: str, dom: QDomain, where: str) -> QValue:
    text = text.strip()
    if text == "top":
        return qdom.top(dom)
    try:
        raw = _parse_raw(text)
    except ValueError as e:
        raise ProxError(f"{where}bad proximity value {text!r}: {e}") from None
    try:
        return qdom.value_from_raw(dom, raw)
    except qdom.DomainError as e:
        raise ProxError(f"{where}bad proximity value {text!r}: {e}") from None


def _parse_raw(text: str):
    text = text.strip()
    if text.startswith("("):
        if not text.endswith(")"):
            raise ValueError("unbalanced parentheses")
        parts = _split_commas(text[1:-1])
        if len(parts) < 2:
            raise ValueError("tuple needs at least two components")
        return tuple(_parse_raw(p) for p in parts)
    return _parse_number(text)


def _split_commas(text: str) -> list[str]:
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError("unbalanced parentheses")
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    if depth:
        raise ValueError("unbalanced parentheses")
    parts.append(text[start:])
    return parts


def _parse_number(text: str) -> Fraction:
    text = text.strip()
    if not re.fullmatch(r"-?\d+(\.\d+)?", text):
        raise ValueError(f"not a number: {text!r}")
    return Fraction(text)


def load_prox(text: str, dom: QDomain, name: Optional[str] = None) -> ProximityRelation:
    """Parse ``pprox``/``cprox`` facts into a relation over ``dom``.

    Reflexive entries and exact duplicates are dropped with a diagnostic;
    conflicting duplicates, bad arities, and out-of-domain values are errors
    tagged with their line number.
    """
    rel = ProximityRelation(dom, name=name)
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("%", 1)[0].strip()
        if not line:
            continue
        where = f"line {lineno}: "
        m = _FACT_RE.match(line)
        if not m:
            raise ProxError(f"{where}expected a pprox/cprox fact, got {line!r}")
        kindword, n1, n2, arity, valtext = m.groups()
        kind = "pred" if kindword == "pprox" else "ctor"
        value = _parse_value(valtext, dom, where)
        key1 = _symbol_key(kind, n1, int(arity), where)
        key2 = _symbol_key(kind, n2, int(arity), where)
        rel.add(key1, key2, value, where)
    return rel


def _symbol_key(kind: str, name: str, arity: int, where: str) -> SymbolKey:
    if name[0].isdigit() or name[0] == "-":
        if kind == "pred":
            raise ProxError(f"{where}numbers cannot name predicates")
        if arity != 0:
            raise ProxError(f"{where}basic values take arity 0, got {arity}")
        return basic_key(Fraction(name))
    return SymbolKey(kind, name, arity)
