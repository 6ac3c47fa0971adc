"""Bounded temporal-logic specifications over finite three-valued traces.

Concrete syntax
---------------
    atom      :=  IDENT | IDENT '{' key '=' value (',' key '=' value)* '}'
                  keys: eps, delta (must appear together), level
                  level: 'instance' (default) | 'model'
    unary     :=  '!' f  |  'X' f  |  'G[a,b]' f  |  'F[a,b]' f
    binary    :=  f 'U[a,b]' g  |  f '&' g  |  f '|' g  |  f '->' g
    intervals :=  0 <= a <= b, both finite naturals

Precedence, tightest first: !, X/G/F, U, &, |, ->. '&', '|' and 'U'
associate left, '->' right. Identifiers match [A-Za-z_][A-Za-z0-9_]*;
the operator names X, G, F, U are reserved.

Evaluation is strong-Kleene three-valued. Positions past the end of the
trace read as Unknown (truncated-trace semantics), as do atoms absent from
a state. Model-level atoms are read per state like any other; by convention
traces carry them constant.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Union


class ThreeValued(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    @classmethod
    def from_bool(cls, value: bool) -> "ThreeValued":
        return cls.TRUE if value else cls.FALSE


def three_not(v: ThreeValued) -> ThreeValued:
    if v is ThreeValued.TRUE:
        return ThreeValued.FALSE
    if v is ThreeValued.FALSE:
        return ThreeValued.TRUE
    return ThreeValued.UNKNOWN


def three_and(a: ThreeValued, b: ThreeValued) -> ThreeValued:
    if a is ThreeValued.FALSE or b is ThreeValued.FALSE:
        return ThreeValued.FALSE
    if a is ThreeValued.TRUE and b is ThreeValued.TRUE:
        return ThreeValued.TRUE
    return ThreeValued.UNKNOWN


def three_or(a: ThreeValued, b: ThreeValued) -> ThreeValued:
    if a is ThreeValued.TRUE or b is ThreeValued.TRUE:
        return ThreeValued.TRUE
    if a is ThreeValued.FALSE and b is ThreeValued.FALSE:
        return ThreeValued.FALSE
    return ThreeValued.UNKNOWN


def three_implies(a: ThreeValued, b: ThreeValued) -> ThreeValued:
    return three_or(three_not(a), b)


INSTANCE = "instance"
MODEL = "model"
_LEVELS = (INSTANCE, MODEL)


@dataclass(frozen=True)
class Atom:
    """Atomic proposition, optionally carrying its own (epsilon, delta)
    claim. ``level`` says whether that claim is per-input (instance) or
    per-distribution (model)."""

    name: str
    level: str = INSTANCE
    bound: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.level not in _LEVELS:
            raise ValueError(f"level must be one of {_LEVELS}, got {self.level!r}")
        if self.bound is not None:
            eps, delta = self.bound
            object.__setattr__(self, "bound", (float(eps), float(delta)))


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next:
    operand: "Formula"


def _check_interval(low: int, high: int) -> None:
    if low < 0 or high < 0:
        raise ValueError("interval bounds must be >= 0")
    if high < low:
        raise ValueError(f"empty interval [{low},{high}]")


@dataclass(frozen=True)
class Always:
    low: int
    high: int
    operand: "Formula"

    def __post_init__(self) -> None:
        _check_interval(self.low, self.high)


@dataclass(frozen=True)
class Eventually:
    low: int
    high: int
    operand: "Formula"

    def __post_init__(self) -> None:
        _check_interval(self.low, self.high)


@dataclass(frozen=True)
class Until:
    low: int
    high: int
    left: "Formula"
    right: "Formula"

    def __post_init__(self) -> None:
        _check_interval(self.low, self.high)


Formula = Union[Atom, Not, And, Or, Implies, Next, Always, Eventually, Until]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[!&|(){}\[\],=])
""",
    re.VERBOSE,
)

_RESERVED = {"X", "G", "F", "U"}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> Iterator[_Token]:
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        column = match.start() - line_start + 1
        kind = match.lastgroup
        value = match.group()
        if kind == "ws":
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = match.start() + value.rfind("\n") + 1
        elif kind == "punct":
            yield _Token(value, value, line, column)
        elif kind == "ident" and value in _RESERVED:
            yield _Token(value, value, line, column)
        else:
            yield _Token(kind, value, line, column)
        pos = match.end()
    yield _Token("eof", "", line, len(text) - line_start + 1)


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            shown = tok.text if tok.kind != "eof" else "end of input"
            raise ParseError(
                f"expected {what or kind!r}, found {shown!r}", tok.line, tok.column
            )
        return self.advance()

    def parse(self) -> Formula:
        formula = self.implies()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(
                f"unexpected trailing input {tok.text!r}", tok.line, tok.column
            )
        return formula

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek().kind == "arrow":
            self.advance()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        node = self.conjunction()
        while self.peek().kind == "|":
            self.advance()
            node = Or(node, self.conjunction())
        return node

    def conjunction(self) -> Formula:
        node = self.until()
        while self.peek().kind == "&":
            self.advance()
            node = And(node, self.until())
        return node

    def until(self) -> Formula:
        node = self.unary()
        while self.peek().kind == "U":
            self.advance()
            low, high = self.interval()
            node = Until(low, high, node, self.unary())
        return node

    def interval(self) -> tuple[int, int]:
        self.expect("[")
        low_tok = self.expect("number", "interval bound")
        self.expect(",")
        high_tok = self.expect("number", "interval bound")
        close = self.expect("]")
        if "." in low_tok.text or "." in high_tok.text:
            raise ParseError(
                "interval bounds must be naturals", low_tok.line, low_tok.column
            )
        low, high = int(low_tok.text), int(high_tok.text)
        if high < low:
            raise ParseError(
                f"empty interval [{low},{high}]", close.line, close.column
            )
        return low, high

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "!":
            self.advance()
            return Not(self.unary())
        if tok.kind == "X":
            self.advance()
            return Next(self.unary())
        if tok.kind == "G":
            self.advance()
            low, high = self.interval()
            return Always(low, high, self.unary())
        if tok.kind == "F":
            self.advance()
            low, high = self.interval()
            return Eventually(low, high, self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "(":
            self.advance()
            inner = self.implies()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            return self.atom()
        shown = tok.text if tok.kind != "eof" else "end of input"
        raise ParseError(
            f"expected an atom, '!', 'X', 'G', 'F' or '(', found {shown!r}",
            tok.line,
            tok.column,
        )

    def atom(self) -> Formula:
        name_tok = self.expect("ident", "atom name")
        if self.peek().kind != "{":
            return Atom(name_tok.text)
        self.advance()
        fields: dict[str, str] = {}
        while True:
            key_tok = self.expect("ident", "annotation key")
            if key_tok.text not in ("eps", "delta", "level"):
                raise ParseError(
                    f"unknown annotation key {key_tok.text!r}",
                    key_tok.line,
                    key_tok.column,
                )
            if key_tok.text in fields:
                raise ParseError(
                    f"duplicate annotation key {key_tok.text!r}",
                    key_tok.line,
                    key_tok.column,
                )
            self.expect("=")
            if key_tok.text == "level":
                value_tok = self.expect("ident", "'instance' or 'model'")
                if value_tok.text not in _LEVELS:
                    raise ParseError(
                        f"level must be 'instance' or 'model', found {value_tok.text!r}",
                        value_tok.line,
                        value_tok.column,
                    )
                fields["level"] = value_tok.text
            else:
                value_tok = self.expect("number", "a number")
                fields[key_tok.text] = value_tok.text
            if self.peek().kind == ",":
                self.advance()
                continue
            break
        closing = self.expect("}")
        if ("eps" in fields) != ("delta" in fields):
            raise ParseError(
                "eps and delta must be annotated together", closing.line, closing.column
            )
        bound = None
        if "eps" in fields:
            bound = (float(fields["eps"]), float(fields["delta"]))
        return Atom(name_tok.text, fields.get("level", INSTANCE), bound)


def parse(text: str) -> Formula:
    """Parse the concrete syntax into a Formula, or raise ParseError with
    the offending line/column."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Pretty-printing
# ---------------------------------------------------------------------------

_PREC_IMPLIES, _PREC_OR, _PREC_AND, _PREC_UNTIL, _PREC_UNARY = 1, 2, 3, 4, 5


def _fmt_number(x: float) -> str:
    return repr(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(float(x))


def _atom_text(atom: Atom) -> str:
    parts = []
    if atom.bound is not None:
        parts.append(f"eps={_fmt_number(atom.bound[0])}")
        parts.append(f"delta={_fmt_number(atom.bound[1])}")
    if atom.level != INSTANCE or atom.bound is not None:
        parts.append(f"level={atom.level}")
    if not parts:
        return atom.name
    return f"{atom.name}{{{', '.join(parts)}}}"


def _pretty(formula: Formula, parent_prec: int) -> str:
    if isinstance(formula, Atom):
        return _atom_text(formula)
    if isinstance(formula, Not):
        return "!" + _pretty(formula.operand, _PREC_UNARY)
    if isinstance(formula, Next):
        return "X " + _pretty(formula.operand, _PREC_UNARY)
    if isinstance(formula, Always):
        text = f"G[{formula.low},{formula.high}] " + _pretty(
            formula.operand, _PREC_UNARY
        )
    elif isinstance(formula, Eventually):
        text = f"F[{formula.low},{formula.high}] " + _pretty(
            formula.operand, _PREC_UNARY
        )
    elif isinstance(formula, Until):
        text = (
            _pretty(formula.left, _PREC_UNTIL)
            + f" U[{formula.low},{formula.high}] "
            + _pretty(formula.right, _PREC_UNTIL + 1)
        )
        return text if parent_prec <= _PREC_UNTIL else f"({text})"
    elif isinstance(formula, And):
        text = _pretty(formula.left, _PREC_AND) + " & " + _pretty(
            formula.right, _PREC_AND + 1
        )
        return text if parent_prec <= _PREC_AND else f"({text})"
    elif isinstance(formula, Or):
        text = _pretty(formula.left, _PREC_OR) + " | " + _pretty(
            formula.right, _PREC_OR + 1
        )
        return text if parent_prec <= _PREC_OR else f"({text})"
    elif isinstance(formula, Implies):
        text = _pretty(formula.left, _PREC_IMPLIES + 1) + " -> " + _pretty(
            formula.right, _PREC_IMPLIES
        )
        return text if parent_prec <= _PREC_IMPLIES else f"({text})"
    else:
        raise TypeError(f"not a formula node: {formula!r}")
    # Unary temporal operators bind their operand tightly.
    return text if parent_prec <= _PREC_UNARY else f"({text})"


def pretty(formula: Formula) -> str:
    """Canonical rendering; parse(pretty(f)) is structurally equal to f."""
    return _pretty(formula, 0)


def atoms_of(formula: Formula) -> tuple[Atom, ...]:
    """Every distinct atom of the formula, sorted by name.

    Two occurrences of one name must agree on level and bound; a conflict
    is an error because the name could not carry a single guarantee.
    """
    found: dict[str, Atom] = {}

    def visit(node: Formula) -> None:
        if isinstance(node, Atom):
            prior = found.get(node.name)
            if prior is not None and prior != node:
                raise ValueError(
                    f"atom {node.name!r} occurs with conflicting annotations: "
                    f"{prior} vs {node}"
                )
            found[node.name] = node
        elif isinstance(node, (Not, Next, Always, Eventually)):
            visit(node.operand)
        elif isinstance(node, (And, Or, Implies, Until)):
            visit(node.left)
            visit(node.right)
        else:
            raise TypeError(f"not a formula node: {node!r}")

    visit(formula)
    return tuple(found[name] for name in sorted(found))


# ---------------------------------------------------------------------------
# Traces and evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    """Finite sequence of states; each state maps atom names to a
    ThreeValued. Atoms absent from a state read as Unknown."""

    states: tuple[Mapping[str, ThreeValued], ...]

    def __post_init__(self) -> None:
        if not self.states:
            raise ValueError("trace must contain at least one state")
        object.__setattr__(
            self, "states", tuple(dict(state) for state in self.states)
        )
        for state in self.states:
            for name, value in state.items():
                if not isinstance(value, ThreeValued):
                    raise TypeError(
                        f"state value for {name!r} must be ThreeValued, got {value!r}"
                    )

    def __len__(self) -> int:
        return len(self.states)

    def value(self, name: str, position: int) -> ThreeValued:
        if position >= len(self.states):
            return ThreeValued.UNKNOWN
        return self.states[position].get(name, ThreeValued.UNKNOWN)


def _eval(
    formula: Formula,
    trace: Trace,
    t: int,
    reads: set[tuple[str, int]] | None,
) -> ThreeValued:
    if isinstance(formula, Atom):
        if t >= len(trace):
            return ThreeValued.UNKNOWN
        if reads is not None:
            reads.add((formula.name, t))
        return trace.value(formula.name, t)
    if isinstance(formula, Not):
        return three_not(_eval(formula.operand, trace, t, reads))
    if isinstance(formula, And):
        return three_and(
            _eval(formula.left, trace, t, reads), _eval(formula.right, trace, t, reads)
        )
    if isinstance(formula, Or):
        return three_or(
            _eval(formula.left, trace, t, reads), _eval(formula.right, trace, t, reads)
        )
    if isinstance(formula, Implies):
        return three_implies(
            _eval(formula.left, trace, t, reads), _eval(formula.right, trace, t, reads)
        )
    if isinstance(formula, Next):
        return _eval(formula.operand, trace, t + 1, reads)
    if isinstance(formula, Always):
        acc = ThreeValued.TRUE
        for i in range(formula.low, formula.high + 1):
            acc = three_and(acc, _eval(formula.operand, trace, t + i, reads))
        return acc
    if isinstance(formula, Eventually):
        acc = ThreeValued.FALSE
        for i in range(formula.low, formula.high + 1):
            acc = three_or(acc, _eval(formula.operand, trace, t + i, reads))
        return acc
    if isinstance(formula, Until):
        acc = ThreeValued.FALSE
        for i in range(formula.low, formula.high + 1):
            term = _eval(formula.right, trace, t + i, reads)
            for j in range(formula.low, i):
                term = three_and(term, _eval(formula.left, trace, t + j, reads))
            acc = three_or(acc, term)
        return acc
    raise TypeError(f"not a formula node: {formula!r}")


def eval3(formula: Formula, trace: Trace, t: int = 0) -> ThreeValued:
    """Three-valued verdict of the formula at position t.

    Bounded operators expand over their window; positions beyond the trace
    contribute Unknown. The whole window is evaluated (no short-circuiting)
    so evaluation counts are deterministic.
    """
    if not 0 <= t < len(trace):
        raise IndexError(f"position {t} out of range for trace of length {len(trace)}")
    return _eval(formula, trace, t, None)


def eval3_counting(
    formula: Formula, trace: Trace, t: int = 0
) -> tuple[ThreeValued, dict[str, int]]:
    """Like eval3, but also report how many distinct trace positions each
    atom was read at, which is what formula-level delta accounting needs."""
    if not 0 <= t < len(trace):
        raise IndexError(f"position {t} out of range for trace of length {len(trace)}")
    reads: set[tuple[str, int]] = set()
    verdict = _eval(formula, trace, t, reads)
    counts: dict[str, int] = {}
    for name, _ in reads:
        counts[name] = counts.get(name, 0) + 1
    return verdict, counts
