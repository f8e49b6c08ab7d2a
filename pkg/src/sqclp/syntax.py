"""AST, parsers, and renderers for qualified logic programs.

Two surface dialects share one AST:

* ``qclp`` source files: attenuation arrows (``head <-(0.9,1)- body``,
  ``head <--`` for top), optional ``#value`` thresholds on body atoms,
  layout-based clause separation (a clause starts where a line returns to
  the first clause's column) or explicit ``;`` separators, and the three
  directives ``# qdom``, ``# prox 'Name'``, ``# optimized_unif``.
* ``clp`` artifact files: plain ``head :- body.`` clauses, primitive
  constraints optionally grouped in ``{ ... }``, metadata carried in
  leading ``% key: value`` comments.

Primitive constraints are normalized to prefix atoms (``op_add``/``cp_le``
style) with at most one arithmetic operator per comparison side; the
renderers print them back in infix form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from . import qdom
from .qdom import QDomain, QValue


class SyntaxErr(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + msg)
        self.line = line
        self.col = col


# --- terms --------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Num:
    value: Fraction

    def __str__(self) -> str:
        return qdom.render_number(self.value)


@dataclass(frozen=True)
class Str:
    value: str

    def __str__(self) -> str:
        return f"'{self.value}'"


@dataclass(frozen=True)
class Struct:
    name: str
    args: tuple["Term", ...] = ()

    def __str__(self) -> str:
        return render_term(self)


@dataclass(frozen=True)
class Tup:
    items: tuple["Term", ...]  # always at least two

    def __str__(self) -> str:
        return render_term(self)


Term = Union[Var, Num, Str, Struct, Tup]

TOP = Struct("top")
NIL = Struct("[]")


def cons(head: Term, tail: Term) -> Struct:
    return Struct(".", (head, tail))


def make_list(items: list[Term], tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(items):
        out = cons(item, out)
    return out


def functor(t: Term) -> tuple[str, int]:
    if isinstance(t, Struct):
        return (t.name, len(t.args))
    if isinstance(t, Tup):
        return ("(,)", len(t.items))
    raise TypeError(f"no functor: {t!r}")


def term_args(t: Term) -> tuple[Term, ...]:
    if isinstance(t, Struct):
        return t.args
    if isinstance(t, Tup):
        return t.items
    return ()


def term_vars(t: Term, acc: Optional[list[str]] = None) -> list[str]:
    """Variable names in first-occurrence order."""
    out = acc if acc is not None else []
    if isinstance(t, Var):
        if t.name not in out:
            out.append(t.name)
    elif isinstance(t, (Struct, Tup)):
        for a in term_args(t):
            term_vars(a, out)
    return out


def subst(t: Term, mapping: dict[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Struct) and t.args:
        return Struct(t.name, tuple(subst(a, mapping) for a in t.args))
    if isinstance(t, Tup):
        return Tup(tuple(subst(a, mapping) for a in t.items))
    return t


# --- atoms and clauses ----------------------------------------------------------


@dataclass(frozen=True)
class DefinedAtom:
    name: str
    args: tuple[Term, ...] = ()

    def __str__(self) -> str:
        return render_atom(self)


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return render_atom(self)


@dataclass(frozen=True)
class Bin:
    """One arithmetic operation inside a comparison (non-nested)."""

    op: str  # + - * /
    lhs: Term
    rhs: Term


# comparison names and their infix spellings
_CP_RENDER = {"cp_lt": "<", "cp_le": "=<", "cp_gt": ">", "cp_ge": ">=", "cp_eq": "="}
_OP_NAMES = {"+": "op_add", "-": "op_sub", "*": "op_mul", "/": "op_div"}
_OP_RENDER = {v: k for k, v in _OP_NAMES.items()}


@dataclass(frozen=True)
class Primitive:
    """Prefix-normalized real-arithmetic constraint.

    ``cp_*`` atoms have two sides, each a Term or a one-level Bin;
    ``op_*`` atoms have three term arguments with args[0] op args[1] = args[2].
    """

    name: str
    args: tuple[Union[Term, Bin], ...]

    def __str__(self) -> str:
        return render_atom(self)


Atom = Union[DefinedAtom, Equation, Primitive]


@dataclass(frozen=True)
class BodyItem:
    atom: Atom
    threshold: Optional[QValue] = None  # None encodes the `?` threshold


@dataclass(frozen=True)
class Clause:
    head: DefinedAtom
    atten: QValue
    body: tuple[BodyItem, ...] = ()


@dataclass
class ProgramUnit:
    dom: Optional[QDomain]
    prox_name: Optional[str] = None
    optimized_unif: bool = False
    clauses: list[Clause] = field(default_factory=list)
    meta: dict[str, str] = field(default_factory=dict)
    dialect: str = "qclp"


@dataclass
class Goal:
    # (atom, qualification variable name); hidden names start with "_"
    items: list[tuple[Atom, str]]
    conditions: dict[str, QValue] = field(default_factory=dict)

    def wvars(self) -> list[str]:
        return [w for _, w in self.items]


# --- value literals --------------------------------------------------------------


def term_to_qvalue(dom: QDomain, t: Term) -> QValue:
    """Read a source-level value literal (number, tuple, or ``top``)."""
    raw = _term_to_raw(t)
    return qdom.value_from_raw(dom, raw) if raw is not _TOP_MARK else qdom.top(dom)


_TOP_MARK = object()


def _term_to_raw(t: Term):
    if isinstance(t, Num):
        return t.value
    if isinstance(t, Tup):
        parts = tuple(_term_to_raw(x) for x in t.items)
        if any(p is _TOP_MARK for p in parts):
            raise qdom.DomainError("top is not allowed inside a tuple literal")
        return parts
    if t == TOP:
        return _TOP_MARK
    raise qdom.DomainError(f"not a qualification value literal: {render_term(t)}")


def qvalue_to_term(dom: QDomain, d: QValue) -> Term:
    """Render a value as a term, using ``top`` for the whole-domain top."""
    if d == qdom.top(dom):
        return TOP
    shape = qdom.encode(qdom.QEncoding(dom), d)
    return _shape_to_term(shape)


def _shape_to_term(shape) -> Term:
    if isinstance(shape, tuple):
        flat: list[Term] = []
        for part in shape:
            t = _shape_to_term(part)
            flat.extend(t.items) if isinstance(t, Tup) else flat.append(t)
        return Tup(tuple(flat))
    return Num(shape)


# --- tokenizer --------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # ID VAR NUM STR PUNCT DIRECTIVE EOF
    text: str
    line: int
    col: int


_PUNCT2 = ("::", ":-", "<-", "==", ">=", "=<", "<=")
_PUNCT1 = "()[]{},|.#;=<>+-*/?"


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def err(msg):
        raise SyntaxErr(msg, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("/*", i):
            depth, i, col = 1, i + 2, col + 2
            while i < n and depth:
                if text.startswith("/*", i):
                    depth += 1
                    i += 2
                    col += 2
                elif text.startswith("*/", i):
                    depth -= 1
                    i += 2
                    col += 2
                elif text[i] == "\n":
                    i += 1
                    line += 1
                    col = 1
                else:
                    i += 1
                    col += 1
            if depth:
                err("unterminated comment")
            continue
        if ch == "#" and col == 1:
            start = i
            while i < n and text[i] != "\n":
                i += 1
            toks.append(Token("DIRECTIVE", text[start:i], line, 1))
            continue
        if ch.isdigit():
            start, c0 = i, col
            while i < n and text[i].isdigit():
                i += 1
            if i + 1 < n and text[i] == "." and text[i + 1].isdigit():
                i += 1
                while i < n and text[i].isdigit():
                    i += 1
            toks.append(Token("NUM", text[start:i], line, c0))
            col = c0 + (i - start)
            continue
        if ch == "'":
            start, c0 = i + 1, col
            j = text.find("'", start)
            if j < 0 or "\n" in text[start:j]:
                err("unterminated quoted name")
            toks.append(Token("STR", text[start:j], line, c0))
            col = c0 + (j + 1 - i)
            i = j + 1
            continue
        if ch.isalpha() or ch == "_":
            start, c0 = i, col
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
                # names like pay__0.9_2 embed a dot; a dot ends the name
                # (clause terminator) unless a digit follows immediately
                if i + 1 < n and text[i] == "." and text[i + 1].isdigit():
                    i += 1
            word = text[start:i]
            kind = "VAR" if word[0].isupper() or word[0] == "_" else "ID"
            toks.append(Token(kind, word, line, c0))
            col = c0 + len(word)
            continue
        two = text[i : i + 2]
        if two in _PUNCT2:
            toks.append(Token("PUNCT", two, line, col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT1:
            toks.append(Token("PUNCT", ch, line, col))
            i += 1
            col += 1
            continue
        err(f"unexpected character {ch!r}")
    toks.append(Token("EOF", "", line, col))
    return toks


# --- parser -----------------------------------------------------------------------


class _Parser:
    def __init__(self, toks: list[Token], dom: Optional[QDomain]):
        self.toks = toks
        self.pos = 0
        self.dom = dom
        self._fresh = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at_punct(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "PUNCT" and t.text in texts

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not (t.kind == "PUNCT" and t.text == text):
            raise SyntaxErr(f"expected {text!r}, got {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def err(self, msg: str):
        t = self.peek()
        raise SyntaxErr(msg, t.line, t.col)

    # terms

    def parse_term(self) -> Term:
        t = self.peek()
        if t.kind == "VAR":
            self.next()
            if t.text == "_":
                self._fresh += 1
                return Var(f"_G{self._fresh}")
            return Var(t.text)
        if t.kind == "NUM":
            self.next()
            return Num(Fraction(t.text))
        if t.kind == "STR":
            self.next()
            return Str(t.text)
        if self.at_punct("-") and self.peek(1).kind == "NUM":
            self.next()
            num = self.next()
            return Num(-Fraction(num.text))
        if t.kind == "ID":
            self.next()
            if self.at_punct("("):
                self.next()
                args = [self.parse_term()]
                while self.at_punct(","):
                    self.next()
                    args.append(self.parse_term())
                self.expect(")")
                return Struct(t.text, tuple(args))
            return Struct(t.text)
        if self.at_punct("("):
            self.next()
            items = [self.parse_term()]
            while self.at_punct(","):
                self.next()
                items.append(self.parse_term())
            self.expect(")")
            return items[0] if len(items) == 1 else Tup(tuple(items))
        if self.at_punct("["):
            self.next()
            if self.at_punct("]"):
                self.next()
                return NIL
            items = [self.parse_term()]
            while self.at_punct(","):
                self.next()
                items.append(self.parse_term())
            tail: Term = NIL
            if self.at_punct("|"):
                self.next()
                tail = self.parse_term()
            self.expect("]")
            return make_list(items, tail)
        self.err("expected a term")

    # atoms

    def _parse_operand(self) -> Union[Term, Bin]:
        t = self.parse_term()
        if self.at_punct("+", "-", "*", "/"):
            op = self.next().text
            rhs = self.parse_term()
            return Bin(op, t, rhs)
        return t

    def parse_atom(self) -> Atom:
        # prefix primitive: +(A,B,C) etc.
        if self.at_punct("+", "-", "*", "/") and self.peek(1).kind == "PUNCT" and self.peek(1).text == "(":
            op = self.next().text
            self.expect("(")
            args = [self.parse_term()]
            while self.at_punct(","):
                self.next()
                args.append(self.parse_term())
            self.expect(")")
            if len(args) != 3:
                self.err(f"prefix {op!r} constraint takes three arguments")
            return Primitive(_OP_NAMES[op], tuple(args))
        lhs = self._parse_operand()
        if self.at_punct("=="):
            self.next()
            rhs = self._parse_operand()
            if isinstance(lhs, Bin) or isinstance(rhs, Bin):
                self.err("arithmetic does not belong in == equations")
            return Equation(lhs, rhs)
        if self.at_punct("<", "=<", "<=", ">", ">=", "="):
            op = self.next().text
            rhs = self._parse_operand()
            name = {"<": "cp_lt", "=<": "cp_le", "<=": "cp_le", ">": "cp_gt", ">=": "cp_ge", "=": "cp_eq"}[op]
            if name == "cp_eq" and isinstance(lhs, Bin) != isinstance(rhs, Bin):
                bin_, plain = (lhs, rhs) if isinstance(lhs, Bin) else (rhs, lhs)
                return Primitive(_OP_NAMES[bin_.op], (bin_.lhs, bin_.rhs, plain))
            return Primitive(name, (lhs, rhs))
        if isinstance(lhs, Struct):
            return DefinedAtom(lhs.name, lhs.args)
        self.err("expected an atom")

    def parse_value(self) -> QValue:
        if self.dom is None:
            self.err("value literal before the qdom directive")
        t = self.peek()
        term = self.parse_term()
        try:
            return term_to_qvalue(self.dom, term)
        except qdom.DomainError as e:
            raise SyntaxErr(str(e), t.line, t.col) from None


def _parse_directive(tok: Token, unit: ProgramUnit) -> None:
    body = tok.text.lstrip("#").strip()
    parts = body.split(None, 1)
    if not parts:
        raise SyntaxErr("empty directive", tok.line, tok.col)
    name, rest = parts[0], (parts[1].strip() if len(parts) > 1 else "")
    if name == "qdom":
        if unit.dom is not None:
            raise SyntaxErr("duplicate qdom directive", tok.line, tok.col)
        try:
            unit.dom = qdom.parse_domain(rest)
        except qdom.DomainError as e:
            raise SyntaxErr(str(e), tok.line, tok.col) from None
    elif name == "prox":
        rest = rest.strip()
        if rest.startswith("'") and rest.endswith("'") and len(rest) >= 2:
            rest = rest[1:-1]
        if not rest:
            raise SyntaxErr("prox directive needs a relation name", tok.line, tok.col)
        unit.prox_name = rest
    elif name == "optimized_unif":
        unit.optimized_unif = True
    else:
        raise SyntaxErr(f"unknown directive {name!r}", tok.line, tok.col)


def parse_meta(text: str) -> dict[str, str]:
    """``% key: value`` lines from the leading comment block."""
    meta: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if not line.startswith("%"):
            break
        body = line.lstrip("%").strip()
        if ":" in body:
            key, _, value = body.partition(":")
            if key.strip() and " " not in key.strip():
                meta[key.strip()] = value.strip()
    return meta


def parse_program(text: str, dialect: str = "qclp") -> ProgramUnit:
    if dialect == "clp":
        return _parse_clp_program(text)
    if dialect != "qclp":
        raise ValueError(f"unknown dialect {dialect!r}")
    toks = tokenize(text)
    unit = ProgramUnit(dom=None)
    p = _Parser(toks, None)
    # directives first
    while p.peek().kind == "DIRECTIVE":
        _parse_directive(p.next(), unit)
        p.dom = unit.dom
    if any(t.kind == "DIRECTIVE" for t in toks[p.pos :]):
        bad = next(t for t in toks[p.pos :] if t.kind == "DIRECTIVE")
        raise SyntaxErr("directives must precede all clauses", bad.line, bad.col)
    if unit.dom is None:
        raise SyntaxErr("missing mandatory qdom directive")
    if p.peek().kind == "EOF":
        return unit
    base_col = p.peek().col
    while p.peek().kind != "EOF":
        unit.clauses.append(_parse_qclp_clause(p, base_col))
        if p.at_punct(";"):
            p.next()
            continue
        t = p.peek()
        if t.kind == "EOF":
            break
        if t.line == p.toks[p.pos - 1].line or t.col != base_col:
            p.err("expected ';' or a new clause at the base column")
    return unit


def _parse_qclp_clause(p: _Parser, base_col: int) -> Clause:
    head = p.parse_atom()
    if not isinstance(head, DefinedAtom):
        p.err("clause heads must be defined atoms")
    p.expect("<-")
    if p.at_punct("-"):
        p.next()
        atten = qdom.top(p.dom)
    else:
        atten = p.parse_value()
        p.expect("-")
    arrow_line = p.toks[p.pos - 1].line
    body: list[BodyItem] = []
    t = p.peek()
    starts_body = not (
        t.kind == "EOF"
        or (t.kind == "PUNCT" and t.text == ";")
        or (t.line > arrow_line and t.col <= base_col)
    )
    if starts_body:
        while True:
            _parse_body_into(p, body)
            if p.at_punct(","):
                p.next()
                continue
            break
    return Clause(head=head, atten=atten, body=tuple(body))


def _parse_body_into(p: _Parser, body: list[BodyItem]) -> None:
    if p.at_punct("{"):
        p.next()
        while True:
            atom = p.parse_atom()
            if not isinstance(atom, Primitive):
                p.err("braces may only contain primitive constraints")
            body.append(BodyItem(atom))
            if p.at_punct(","):
                p.next()
                continue
            break
        p.expect("}")
        return
    atom = p.parse_atom()
    threshold: Optional[QValue] = None
    if p.at_punct("#"):
        p.next()
        if p.at_punct("?"):
            p.next()
        else:
            if p.peek().kind == "VAR":
                p.err("clause thresholds must be values, not variables")
            threshold = p.parse_value()
    body.append(BodyItem(atom, threshold))


def _parse_clp_program(text: str) -> ProgramUnit:
    meta = parse_meta(text)
    dom = qdom.parse_domain(meta["qdom"]) if "qdom" in meta else None
    toks = tokenize(text)
    unit = ProgramUnit(dom=dom, meta=meta, dialect="clp")
    unit.prox_name = meta.get("prox")
    unit.optimized_unif = meta.get("unif") == "sim"
    p = _Parser(toks, dom)
    while p.peek().kind != "EOF":
        if p.peek().kind == "DIRECTIVE":
            raise SyntaxErr("unexpected directive in compiled program", p.peek().line, 1)
        head = p.parse_atom()
        if not isinstance(head, DefinedAtom):
            p.err("clause heads must be defined atoms")
        body: list[BodyItem] = []
        if p.at_punct(":-"):
            p.next()
            while True:
                _parse_body_into(p, body)
                if p.at_punct(","):
                    p.next()
                    continue
                break
        p.expect(".")
        top_val = qdom.top(dom) if dom is not None else qdom.B_TOP
        unit.clauses.append(Clause(head=head, atten=top_val, body=tuple(body)))
    return unit


def parse_goal(text: str, dom: QDomain) -> Goal:
    toks = tokenize(text)
    p = _Parser(toks, dom)
    items: list[tuple[Atom, str]] = []
    hidden = 0
    while True:
        if p.at_punct("("):
            # allow a parenthesized equation like (X==Y)#W
            mark = p.pos
            p.next()
            try:
                atom = p.parse_atom()
                p.expect(")")
            except SyntaxErr:
                p.pos = mark
                atom = p.parse_atom()
        else:
            atom = p.parse_atom()
        if p.at_punct("#"):
            p.next()
            t = p.peek()
            if t.kind != "VAR":
                p.err("goal qualification annotations must be variables")
            p.next()
            wname = t.text
        else:
            hidden += 1
            wname = f"_W{hidden}"
        if any(w == wname for _, w in items):
            raise SyntaxErr(f"repeated qualification variable {wname}")
        items.append((atom, wname))
        if p.at_punct(","):
            p.next()
            continue
        break
    goal = Goal(items=items)
    if p.at_punct("::"):
        p.next()
        while True:
            t = p.peek()
            if t.kind != "VAR":
                p.err("threshold conditions start with a qualification variable")
            p.next()
            p.expect(">=")
            value = p.parse_value()
            if t.text not in goal.wvars():
                raise SyntaxErr(f"condition names unknown variable {t.text}", t.line, t.col)
            if t.text in goal.conditions:
                raise SyntaxErr(f"duplicate condition for {t.text}", t.line, t.col)
            goal.conditions[t.text] = value
            if p.at_punct(","):
                p.next()
                continue
            break
    p.expect(".")
    if p.peek().kind != "EOF":
        p.err("unexpected input after the goal's final dot")
    return goal


# --- rendering ---------------------------------------------------------------------


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Num):
        return qdom.render_number(t.value)
    if isinstance(t, Str):
        return f"'{t.value}'"
    if isinstance(t, Tup):
        return "(" + ",".join(render_term(x) for x in t.items) + ")"
    if t.name == "." and len(t.args) == 2:
        return _render_list(t)
    if t.name == "[]" and not t.args:
        return "[]"
    if not t.args:
        return t.name
    return t.name + "(" + ", ".join(render_term(a) for a in t.args) + ")"


def _render_list(t: Struct) -> str:
    items = []
    cur: Term = t
    while isinstance(cur, Struct) and cur.name == "." and len(cur.args) == 2:
        items.append(cur.args[0])
        cur = cur.args[1]
    body = ", ".join(render_term(x) for x in items)
    if cur == NIL:
        return f"[{body}]"
    return f"[{body}|{render_term(cur)}]"


def _render_side(s: Union[Term, Bin]) -> str:
    if isinstance(s, Bin):
        return f"{render_term(s.lhs)}{s.op}{render_term(s.rhs)}"
    return render_term(s)


def render_atom(a: Atom) -> str:
    if isinstance(a, DefinedAtom):
        if not a.args:
            return a.name
        return a.name + "(" + ", ".join(render_term(x) for x in a.args) + ")"
    if isinstance(a, Equation):
        return f"{render_term(a.lhs)} == {render_term(a.rhs)}"
    if a.name in _CP_RENDER:
        lhs, rhs = a.args
        return f"{_render_side(lhs)} {_CP_RENDER[a.name]} {_render_side(rhs)}"
    x, y, z = a.args
    return f"{render_term(x)}{_OP_RENDER[a.name]}{render_term(y)} = {render_term(z)}"


def render_qclp_clause(clause: Clause, dom: QDomain) -> str:
    if clause.atten == qdom.top(dom):
        arrow = "<--"
    else:
        arrow = f"<-{render_term(qvalue_to_term(dom, clause.atten))}-"
    parts = []
    for item in clause.body:
        text = render_atom(item.atom)
        if item.threshold is not None:
            text += "#" + render_term(qvalue_to_term(dom, item.threshold))
        parts.append(text)
    head = render_atom(clause.head)
    return f"{head} {arrow} {', '.join(parts)}" if parts else f"{head} {arrow}"


def render_atom_seq(atoms: list[Atom]) -> str:
    """Comma-joined atoms with adjacent primitives merged into one brace group."""
    chunks: list[str] = []
    run: list[str] = []
    for atom in atoms:
        if isinstance(atom, Primitive):
            run.append(render_atom(atom))
            continue
        if run:
            chunks.append("{" + ", ".join(run) + "}")
            run = []
        chunks.append(render_atom(atom))
    if run:
        chunks.append("{" + ", ".join(run) + "}")
    return ", ".join(chunks)


def render_clp_clause(clause: Clause) -> str:
    head = render_atom(clause.head)
    if not clause.body:
        return head + "."
    return f"{head} :- {render_atom_seq([item.atom for item in clause.body])}."


def emit_qclp_source(unit: ProgramUnit) -> str:
    lines = [f"# qdom {qdom.render_domain(unit.dom)}"]
    if unit.prox_name:
        lines.append(f"# prox '{unit.prox_name}'")
    if unit.optimized_unif:
        lines.append("# optimized_unif")
    lines.append("")
    for clause in unit.clauses:
        lines.append(render_qclp_clause(clause, unit.dom))
    return "\n".join(lines) + "\n"


def emit_clp_source(unit: ProgramUnit, meta: Optional[dict[str, str]] = None) -> str:
    lines = []
    merged = dict(unit.meta)
    if meta:
        merged.update(meta)
    if unit.dom is not None:
        merged.setdefault("qdom", qdom.render_domain(unit.dom))
    for key, value in merged.items():
        lines.append(f"% {key}: {value}")
    if lines:
        lines.append("")
    for clause in unit.clauses:
        lines.append(render_clp_clause(clause))
    return "\n".join(lines) + "\n"


# --- program inspection helpers ------------------------------------------------------


def atom_terms(a: Atom) -> list[Term]:
    if isinstance(a, DefinedAtom):
        return list(a.args)
    if isinstance(a, Equation):
        return [a.lhs, a.rhs]
    out: list[Term] = []
    for side in a.args:
        if isinstance(side, Bin):
            out.extend([side.lhs, side.rhs])
        else:
            out.append(side)
    return out


def constructors_in_order(clauses: list[Clause]) -> list[tuple[str, int]]:
    """Constructor symbols (name, arity) in first-appearance order, walking
    clause heads then bodies.  Numbers and quoted names are basic values,
    not constructors, and are excluded."""
    seen: list[tuple[str, int]] = []

    def walk(t: Term):
        if isinstance(t, (Struct, Tup)):
            key = functor(t)
            if key not in seen:
                seen.append(key)
            for a in term_args(t):
                walk(a)

    for clause in clauses:
        for t in clause.head.args:
            walk(t)
        for item in clause.body:
            for t in atom_terms(item.atom):
                walk(t)
    return seen


def predicates_in_order(clauses: list[Clause]) -> list[tuple[str, int]]:
    seen: list[tuple[str, int]] = []
    for clause in clauses:
        key = (clause.head.name, len(clause.head.args))
        if key not in seen:
            seen.append(key)
        for item in clause.body:
            if isinstance(item.atom, DefinedAtom):
                key = (item.atom.name, len(item.atom.args))
                if key not in seen:
                    seen.append(key)
    return seen
