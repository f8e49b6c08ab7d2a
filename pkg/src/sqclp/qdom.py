"""Qualification domains.

A qualification domain is a lattice with top, bottom, and an attenuation
operation.  Its elements score how firmly an atom has been established:
certainty degrees in (0, 1] (domain ``u``), proof weights in [0, inf]
ordered the other way around (domain ``w``), the two-point boolean lattice
(domain ``b``), and strict cartesian products of those (``(u,w)`` and
friends, where any bottom component collapses the whole tuple to bottom).

Values are exact: leaf payloads are ``Fraction`` and every operation is
closed over rationals, so printed answers reproduce bit for bit.

The module also hosts the real-arithmetic encoding used by the program
transformation: an injective map from non-bottom values to real terms
(numbers, or nested pairs for product domains) together with constraint
templates ``qval_constraint`` (membership in the encoded carrier) and
``qbound_constraint`` (the relation "x is at most y attenuated by z").
Constraint templates are returned in a small neutral shape so the solver
can consume them directly and the emitter can pretty-print them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

# ---------------------------------------------------------------------------
# domain descriptors


@dataclass(frozen=True)
class Leaf:
    kind: str  # 'b' | 'u' | 'w'

    def __repr__(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Prod:
    left: "QDomain"
    right: "QDomain"

    def __repr__(self) -> str:
        return f"({self.left!r},{self.right!r})"


QDomain = Union[Leaf, Prod]

B = Leaf("b")
U = Leaf("u")
W = Leaf("w")


class DomainError(ValueError):
    pass


def parse_domain(text: str) -> QDomain:
    """Parse a domain descriptor such as ``u``, ``w``, ``(u,w)``, ``((u,w),b)``.

    A comma-separated list without parentheses is accepted as well; tuples
    with more than two components nest to the right.
    """
    toks = _dom_tokens(text)
    dom, pos = _parse_dom(toks, 0)
    if pos != len(toks):
        raise DomainError(f"trailing input in domain descriptor: {text!r}")
    return dom


def _dom_tokens(text: str) -> list[str]:
    toks = []
    for ch in text:
        if ch in "(),":
            toks.append(ch)
        elif ch in "buw":
            toks.append(ch)
        elif ch.isspace():
            continue
        else:
            raise DomainError(f"bad character {ch!r} in domain descriptor")
    return toks


def _parse_dom(toks: list[str], pos: int) -> tuple[QDomain, int]:
    parts, pos = [], pos
    part, pos = _parse_dom_atom(toks, pos)
    parts.append(part)
    while pos < len(toks) and toks[pos] == ",":
        part, pos = _parse_dom_atom(toks, pos + 1)
        parts.append(part)
    return _right_nest(parts), pos


def _parse_dom_atom(toks: list[str], pos: int) -> tuple[QDomain, int]:
    if pos >= len(toks):
        raise DomainError("unexpected end of domain descriptor")
    t = toks[pos]
    if t == "(":
        dom, pos = _parse_dom(toks, pos + 1)
        if pos >= len(toks) or toks[pos] != ")":
            raise DomainError("unbalanced parenthesis in domain descriptor")
        return dom, pos + 1
    if t in ("b", "u", "w"):
        return Leaf(t), pos + 1
    raise DomainError(f"unexpected {t!r} in domain descriptor")


def _right_nest(parts: list[QDomain]) -> QDomain:
    dom = parts[-1]
    for p in reversed(parts[:-1]):
        dom = Prod(p, dom)
    return dom


def render_domain(dom: QDomain, outer: bool = True) -> str:
    if isinstance(dom, Leaf):
        return dom.kind
    inner = f"{render_domain(dom.left, False)},{render_domain(dom.right, False)}"
    return inner if outer else f"({inner})"


def leaves(dom: QDomain) -> list[Leaf]:
    if isinstance(dom, Leaf):
        return [dom]
    return leaves(dom.left) + leaves(dom.right)


# ---------------------------------------------------------------------------
# values


class _Bottom:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "bottom"


BOTTOM = _Bottom()


@dataclass(frozen=True)
class BTop:
    def __repr__(self) -> str:
        return "btop"


@dataclass(frozen=True)
class UVal:
    v: Fraction  # 0 < v <= 1

    def __repr__(self) -> str:
        return f"u:{self.v}"


@dataclass(frozen=True)
class WVal:
    v: Fraction  # v >= 0; the infinite weight is BOTTOM itself

    def __repr__(self) -> str:
        return f"w:{self.v}"


@dataclass(frozen=True)
class PairVal:
    left: "QValue"
    right: "QValue"  # components never BOTTOM (strict product)

    def __repr__(self) -> str:
        return f"({self.left!r},{self.right!r})"


QValue = Union[_Bottom, BTop, UVal, WVal, PairVal]

B_TOP = BTop()


def top(dom: QDomain) -> QValue:
    if isinstance(dom, Leaf):
        if dom.kind == "b":
            return B_TOP
        if dom.kind == "u":
            return UVal(Fraction(1))
        return WVal(Fraction(0))
    return PairVal(top(dom.left), top(dom.right))


def member(dom: QDomain, d: QValue) -> bool:
    """Type check: does d live in dom's carrier (bottom lives in every one)?"""
    if d is BOTTOM:
        return True
    if isinstance(dom, Leaf):
        if dom.kind == "b":
            return isinstance(d, BTop)
        if dom.kind == "u":
            return isinstance(d, UVal) and 0 < d.v <= 1
        return isinstance(d, WVal) and d.v >= 0
    return (
        isinstance(d, PairVal)
        and d.left is not BOTTOM
        and d.right is not BOTTOM
        and member(dom.left, d.left)
        and member(dom.right, d.right)
    )


def _check(dom: QDomain, *vals: QValue) -> None:
    for d in vals:
        if not member(dom, d):
            raise DomainError(f"value {d!r} does not belong to domain {render_domain(dom)!r}")


def value_from_raw(dom: QDomain, raw) -> QValue:
    """Build a QValue from parsed literal data.

    ``raw`` is a Fraction (or int) for leaf domains, or a tuple of raws for
    product domains; tuples longer than two nest to the right.  Integers
    coerce to the leaf carrier (1 is u-top or b-top; any n >= 0 is a weight).
    """
    if isinstance(raw, tuple):
        if not isinstance(dom, Prod):
            raise DomainError(f"tuple literal used in leaf domain {render_domain(dom)!r}")
        if len(raw) < 2:
            raise DomainError("tuple literal needs at least two components")
        head, rest = raw[0], raw[1:] if len(raw) > 2 else raw[1]
        return PairVal(value_from_raw(dom.left, head), value_from_raw(dom.right, rest))
    if isinstance(dom, Prod):
        raise DomainError(
            f"scalar literal used in product domain {render_domain(dom)!r}"
        )
    x = Fraction(raw)
    if dom.kind == "b":
        if x == 1:
            return B_TOP
        raise DomainError(f"boolean domain admits only 1, got {x}")
    if dom.kind == "u":
        if 0 < x <= 1:
            return UVal(x)
        raise DomainError(f"certainty value out of (0,1]: {x}")
    if x >= 0:
        return WVal(x)
    raise DomainError(f"negative proof weight: {x}")


def leq(dom: QDomain, d: QValue, e: QValue) -> bool:
    """The qualification ordering: d below e (bottom below everything)."""
    _check(dom, d, e)
    if d is BOTTOM:
        return True
    if e is BOTTOM:
        return False
    if isinstance(dom, Leaf):
        if dom.kind == "b":
            return True  # both are top here
        if dom.kind == "u":
            return d.v <= e.v
        return d.v >= e.v  # lighter proof weight is better
    return leq(dom.left, d.left, e.left) and leq(dom.right, d.right, e.right)


def glb(dom: QDomain, d: QValue, e: QValue) -> QValue:
    _check(dom, d, e)
    if d is BOTTOM or e is BOTTOM:
        return BOTTOM
    if isinstance(dom, Leaf):
        if dom.kind == "b":
            return B_TOP
        if dom.kind == "u":
            return UVal(min(d.v, e.v))
        return WVal(max(d.v, e.v))
    return PairVal(glb(dom.left, d.left, e.left), glb(dom.right, d.right, e.right))


def lub(dom: QDomain, d: QValue, e: QValue) -> QValue:
    _check(dom, d, e)
    if d is BOTTOM:
        return e
    if e is BOTTOM:
        return d
    if isinstance(dom, Leaf):
        if dom.kind == "b":
            return B_TOP
        if dom.kind == "u":
            return UVal(max(d.v, e.v))
        return WVal(min(d.v, e.v))
    return PairVal(lub(dom.left, d.left, e.left), lub(dom.right, d.right, e.right))


def attenuate(dom: QDomain, d: QValue, e: QValue) -> QValue:
    """d attenuated by e (written d o e): composing a clause step weakens d by e."""
    _check(dom, d, e)
    if d is BOTTOM or e is BOTTOM:
        return BOTTOM
    if isinstance(dom, Leaf):
        if dom.kind == "b":
            return B_TOP
        if dom.kind == "u":
            return UVal(d.v * e.v)
        return WVal(d.v + e.v)
    return PairVal(
        attenuate(dom.left, d.left, e.left), attenuate(dom.right, d.right, e.right)
    )


def glb_all(dom: QDomain, vals) -> QValue:
    """Greatest lower bound of an iterable, top for the empty one."""
    acc = top(dom)
    for v in vals:
        acc = glb(dom, acc, v)
    return acc


# ---------------------------------------------------------------------------
# number and value rendering


def render_number(x: Fraction, force_decimal: bool = False) -> str:
    """Shortest exact decimal for a rational; integral values get one
    decimal place when force_decimal is set (answer positions print 4.0)."""
    x = Fraction(x)
    if x.denominator == 1:
        return f"{x.numerator}.0" if force_decimal else str(x.numerator)
    den = x.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        digits = max(twos, fives)
        scaled = abs(x) * Fraction(10) ** digits
        text = str(scaled.numerator).rjust(digits + 1, "0")
        whole, frac = text[:-digits] or "0", text[-digits:].rstrip("0") or "0"
        sign = "-" if x < 0 else ""
        return f"{sign}{whole}.{frac}"
    return repr(float(x))  # non-decimal rational: fall back to shortest float


def render_qvalue(d: QValue, force_decimal: bool = False) -> str:
    if d is BOTTOM:
        raise DomainError("bottom has no literal form")
    if isinstance(d, BTop):
        return "1"
    if isinstance(d, (UVal, WVal)):
        return render_number(d.v, force_decimal)
    return f"({render_qvalue(d.left, force_decimal)},{render_qvalue(d.right, force_decimal)})"


# ---------------------------------------------------------------------------
# the real-arithmetic encoding


@dataclass(frozen=True)
class QEncoding:
    """Injective embedding of a domain's non-bottom values into real terms.

    Leaf values map to their number; a product value maps to the pair of its
    component encodings.  Encoded shapes are plain data: a Fraction, or a
    2-tuple of shapes.
    """

    dom: QDomain


EncodedShape = Union[Fraction, tuple]


def encode(enc: QEncoding, d: QValue) -> EncodedShape:
    if d is BOTTOM:
        raise DomainError("bottom is not encodable")
    _check(enc.dom, d)
    return _encode(d)


def _encode(d: QValue) -> EncodedShape:
    if isinstance(d, BTop):
        return Fraction(1)
    if isinstance(d, (UVal, WVal)):
        return d.v
    return (_encode(d.left), _encode(d.right))


def decode(enc: QEncoding, t: EncodedShape) -> QValue:
    """Inverse of encode; rejects shapes outside the encoded carrier."""
    d = _decode(enc.dom, t)
    if not member(enc.dom, d) or d is BOTTOM:
        raise DomainError(f"shape {t!r} is outside the encoded carrier")
    return d


def _decode(dom: QDomain, t: EncodedShape) -> QValue:
    if isinstance(dom, Prod):
        if not (isinstance(t, tuple) and len(t) == 2):
            raise DomainError(f"expected a pair shape, got {t!r}")
        return PairVal(_decode(dom.left, t[0]), _decode(dom.right, t[1]))
    if isinstance(t, tuple):
        raise DomainError(f"expected a number, got pair {t!r}")
    x = Fraction(t)
    if dom.kind == "b":
        if x == 1:
            return B_TOP
        raise DomainError(f"boolean encoding admits only 1, got {x}")
    if dom.kind == "u":
        if 0 < x <= 1:
            return UVal(x)
        raise DomainError(f"certainty encoding out of (0,1]: {x}")
    if x >= 0:
        return WVal(x)
    raise DomainError(f"weight encoding below 0: {x}")


# Constraint templates.  Shapes of the neutral constraint form:
#   ('lt'|'le'|'ge'|'eq', lhs, rhs) where operands are tokens, Fractions, or
#   ('mul', a, b) / ('add', a, b) expression nodes.
# Tokens are whatever the caller threads through (solver cells, variable
# names for emission); leaf positions of pair arguments are addressed by the
# caller via `split_pairs`.


def qval_leaf_constraints(kind: str, x) -> list[tuple]:
    if kind == "b":
        return [("eq", x, Fraction(1))]
    if kind == "u":
        return [("lt", Fraction(0), x), ("le", x, Fraction(1))]
    # proof weights: zero is the top weight and is admitted
    return [("ge", x, Fraction(0))]


def qbound_leaf_constraints(kind: str, x, y, z) -> list[tuple]:
    if kind == "b":
        return [("eq", x, Fraction(1)), ("eq", y, Fraction(1)), ("eq", z, Fraction(1))]
    if kind == "u":
        return [("le", x, ("mul", y, z))]
    return [("ge", x, ("add", y, z))]


def qval_constraint(enc: QEncoding, x_leaves) -> list[tuple]:
    """Membership constraints for one encoded value.

    ``x_leaves`` lists one token/number per leaf of the domain, left to
    right (callers destructure pair arguments before asking).
    """
    ls = leaves(enc.dom)
    if len(x_leaves) != len(ls):
        raise DomainError(f"expected {len(ls)} leaf operands, got {len(x_leaves)}")
    out = []
    for leaf, x in zip(ls, x_leaves):
        out.extend(qval_leaf_constraints(leaf.kind, x))
    return out


def qbound_constraint(enc: QEncoding, x_leaves, y_leaves, z_leaves) -> list[tuple]:
    """Constraints stating x is below y attenuated by z, leafwise."""
    ls = leaves(enc.dom)
    for name, seq in (("x", x_leaves), ("y", y_leaves), ("z", z_leaves)):
        if len(seq) != len(ls):
            raise DomainError(f"{name} must supply {len(ls)} leaf operands")
    out = []
    for leaf, x, y, z in zip(ls, x_leaves, y_leaves, z_leaves):
        out.extend(qbound_leaf_constraints(leaf.kind, x, y, z))
    return out


def split_shape(enc: QEncoding, t: EncodedShape) -> list:
    """Flatten an encoded shape into its per-leaf numbers, left to right."""
    out: list = []
    _split(enc.dom, t, out)
    return out


def _split(dom: QDomain, t, out: list) -> None:
    if isinstance(dom, Prod):
        if not (isinstance(t, tuple) and len(t) == 2):
            raise DomainError(f"expected a pair shape, got {t!r}")
        _split(dom.left, t[0], out)
        _split(dom.right, t[1], out)
    else:
        out.append(Fraction(t))
