"""
Specification text to formula trees and back.

Three input logics share one grammar and one tree type:

    STL   leaves are linear comparisons        s > 2, s1 <= 4
    MTL   leaves are atomic propositions       RegionA
    wSTL  STL leaves, weighted operators       &&^p(G^w1[1,5] (s>2), F^w2[0,3] (s<1))

Operator precedence, tightest first: negation and temporal prefixes, Until
(infix, left-associative), conjunction, disjunction. Parentheses override.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from .errors import (
    InvalidWeight, LexError, MissingInterval, ParseError, UnknownWeight, WeightArityMismatch
)

logger = logging.getLogger('tlsynth.syntax')


class Logic(Enum):
    STL = 'stl'
    MTL = 'mtl'
    WSTL = 'wstl'


class Kind(Enum):
    PREDICATE = 'Pred'
    BOOL_CONST = 'Const'
    NOT = 'Not'
    AND = 'And'
    OR = 'Or'
    ALWAYS = 'Always'
    EVENTUALLY = 'Eventually'
    UNTIL = 'Until'


TEMPORAL_KINDS = frozenset({Kind.ALWAYS, Kind.EVENTUALLY, Kind.UNTIL})
WEIGHTABLE_KINDS = frozenset({Kind.AND, Kind.OR, Kind.ALWAYS, Kind.EVENTUALLY})


class Sense(Enum):
    GE = '>='
    LE = '<='

    def flipped(self) -> 'Sense':
        return Sense.LE if self is Sense.GE else Sense.GE


@dataclass(frozen=True)
class SourceSpan:
    """Character offsets [start, end) of a node in the specification text."""
    start: int
    end: int


NO_SPAN = SourceSpan(0, 0)


def format_number(value: float) -> str:
    """Shortest text that reads back to the same float."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class Linear:
    """Comparison `signal >= threshold` or `signal <= threshold`."""
    signal: str
    sense: Sense
    threshold: float

    def negated(self) -> 'Linear':
        return Linear(self.signal, self.sense.flipped(), self.threshold)

    def __str__(self) -> str:
        return f"{self.signal} {self.sense.value} {format_number(self.threshold)}"


@dataclass(frozen=True)
class Atom:
    """Atomic proposition; `negated` marks an atom absorbed from a negation."""
    name: str
    negated: bool = False

    def toggled(self) -> 'Atom':
        return Atom(self.name, not self.negated)

    def __str__(self) -> str:
        return f"!{self.name}" if self.negated else self.name


Predicate = Union[Linear, Atom]


@dataclass(frozen=True)
class Formula:
    """Immutable formula tree node.

    Equality and hashing are structural; spans are carried for error
    reporting only and never compared.
    """
    kind: Kind
    children: Tuple['Formula', ...] = ()
    interval: Optional[Tuple[int, int]] = None
    weight: Optional[str] = None
    predicate: Optional[Predicate] = None
    value: Optional[bool] = None
    span: SourceSpan = field(default=NO_SPAN, compare=False, repr=False)

    @property
    def is_temporal(self) -> bool:
        return self.kind in TEMPORAL_KINDS

    @property
    def child(self) -> 'Formula':
        return self.children[0]

    def __str__(self) -> str:
        return print_formula(self)


# Node factories. Conjunction and disjunction flatten unweighted children of
# the same kind so no unweighted And has an unweighted And child.

def linear(signal: str, sense: Sense, threshold: float, span: SourceSpan = NO_SPAN) -> Formula:
    return Formula(Kind.PREDICATE, predicate=Linear(signal, sense, float(threshold)), span=span)


def atom(name: str, negated: bool = False, span: SourceSpan = NO_SPAN) -> Formula:
    return Formula(Kind.PREDICATE, predicate=Atom(name, negated), span=span)


def boolean(value: bool, span: SourceSpan = NO_SPAN) -> Formula:
    return Formula(Kind.BOOL_CONST, value=bool(value), span=span)


def negation(child: Formula, span: SourceSpan = NO_SPAN) -> Formula:
    return Formula(Kind.NOT, (child,), span=span)


def _nary(
    kind: Kind, children: Sequence[Formula], weight: Optional[str], span: SourceSpan
) -> Formula:
    if weight is not None:
        items = tuple(children)
    else:
        items = []
        for child in children:
            if child.kind is kind and child.weight is None:
                items.extend(child.children)
            else:
                items.append(child)
        items = tuple(items)
    if len(items) < 2:
        raise ValueError(f"{kind.value} needs at least two operands")
    return Formula(kind, items, weight=weight, span=span)


def conjunction(
    children: Sequence[Formula], weight: Optional[str] = None, span: SourceSpan = NO_SPAN
) -> Formula:
    return _nary(Kind.AND, children, weight, span)


def disjunction(
    children: Sequence[Formula], weight: Optional[str] = None, span: SourceSpan = NO_SPAN
) -> Formula:
    return _nary(Kind.OR, children, weight, span)


def _check_interval(a: int, b: int) -> Tuple[int, int]:
    if not (0 <= a <= b):
        raise ValueError(f"interval [{a},{b}] must satisfy 0 <= a <= b")
    return (int(a), int(b))


def always(
    a: int, b: int, child: Formula, weight: Optional[str] = None, span: SourceSpan = NO_SPAN
) -> Formula:
    return Formula(Kind.ALWAYS, (child,), _check_interval(a, b), weight, span=span)


def eventually(
    a: int, b: int, child: Formula, weight: Optional[str] = None, span: SourceSpan = NO_SPAN
) -> Formula:
    return Formula(Kind.EVENTUALLY, (child,), _check_interval(a, b), weight, span=span)


def until(a: int, b: int, left: Formula, right: Formula, span: SourceSpan = NO_SPAN) -> Formula:
    return Formula(Kind.UNTIL, (left, right), _check_interval(a, b), span=span)


def iter_nodes(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def formula_signals(f: Formula) -> Tuple[str, ...]:
    """Signal names of linear predicates, in order of first appearance."""
    seen: Dict[str, None] = {}
    for node in iter_nodes(f):
        if isinstance(node.predicate, Linear):
            seen.setdefault(node.predicate.signal, None)
    return tuple(seen)


def formula_atoms(f: Formula) -> Tuple[str, ...]:
    """Proposition names, in order of first appearance."""
    seen: Dict[str, None] = {}
    for node in iter_nodes(f):
        if isinstance(node.predicate, Atom):
            seen.setdefault(node.predicate.name, None)
    return tuple(seen)


def node_count(f: Formula) -> int:
    return sum(1 for _ in iter_nodes(f))


class WeightTable(Mapping[str, Tuple[float, ...]]):
    """Named weight vectors with strictly positive entries."""

    def __init__(self, weights: Optional[Mapping[str, Sequence[float]]] = None):
        self._weights: Dict[str, Tuple[float, ...]] = {}
        if not isinstance(weights or {}, Mapping):
            raise InvalidWeight("weights must map names to vectors")
        for name, vector in (weights or {}).items():
            if isinstance(vector, (str, bytes)):
                raise InvalidWeight(f"weight '{name}' must be a list of numbers")
            try:
                values = tuple(float(v) for v in vector)
            except (TypeError, ValueError):
                raise InvalidWeight(f"weight '{name}' must be a list of numbers") from None
            if not values:
                raise InvalidWeight(f"weight '{name}' is empty")
            if any(not math.isfinite(v) or v <= 0 for v in values):
                raise InvalidWeight(f"weight '{name}' must contain finite positive entries")
            self._weights[str(name)] = values

    def __getitem__(self, name: str) -> Tuple[float, ...]:
        return self._weights[name]

    def __iter__(self):
        return iter(self._weights)

    def __len__(self) -> int:
        return len(self._weights)

    def __repr__(self) -> str:
        return f"WeightTable({self._weights!r})"

    def resolve(self, name: Optional[str], size: int) -> Tuple[float, ...]:
        """Weight vector for a tag, all ones when untagged."""
        if name is None:
            return (1.0,) * size
        if name not in self._weights:
            raise UnknownWeight(name)
        vector = self._weights[name]
        if len(vector) != size:
            raise WeightArityMismatch(name, size, len(vector))
        return vector

    def scaled(self, factor: float) -> 'WeightTable':
        return WeightTable({k: [factor * v for v in vec] for k, vec in self._weights.items()})


def weight_size(f: Formula) -> int:
    """Length a weight vector attached to `f` must have."""
    if f.kind in (Kind.AND, Kind.OR):
        return len(f.children)
    a, b = f.interval
    return b - a + 1


def validate_weights(f: Formula, weights: WeightTable) -> None:
    for node in iter_nodes(f):
        if node.weight is not None:
            weights.resolve(node.weight, weight_size(node))


# --- Lexer ------------------------------------------------------------------

class Token(NamedTuple):
    kind: str
    text: str
    start: int
    end: int


_TOKEN_SPEC = [
    ('WS', r'\s+'),
    ('ALWAYS', r'\[\]'),
    ('EVENTUALLY', r'<>'),
    ('AND', r'&&?'),
    ('OR', r'\|\|?'),
    ('NOT', r'[!~]'),
    ('GE', r'>='),
    ('LE', r'<='),
    ('EQ', r'==?'),
    ('GT', r'>'),
    ('LT', r'<'),
    ('CARET', r'\^'),
    ('LBRACKET', r'\['),
    ('RBRACKET', r'\]'),
    ('LPAREN', r'\('),
    ('RPAREN', r'\)'),
    ('COMMA', r','),
    ('NUMBER', r'-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?'),
    ('IDENT', r'[A-Za-z_][A-Za-z0-9_]*'),
]
_TOKEN_RE = re.compile('|'.join(f'(?P<{name}>{pattern})' for name, pattern in _TOKEN_SPEC))
_KEYWORDS = {'F': 'EVENTUALLY', 'G': 'ALWAYS', 'U': 'UNTIL', 'true': 'TRUE', 'false': 'FALSE'}
_COMPARISONS = frozenset({'GT', 'GE', 'LT', 'LE', 'EQ'})


def tokenize(text: str, logic: Logic = Logic.STL) -> List[Token]:
    """Split specification text into tokens, skipping whitespace."""
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise LexError(f"unexpected character {text[pos]!r} at offset {pos}", pos)
        kind = match.lastgroup
        if kind == 'CARET' and logic is not Logic.WSTL:
            raise LexError(f"weight marker '^' at offset {pos} is only allowed in wSTL", pos)
        if kind == 'IDENT':
            kind = _KEYWORDS.get(match.group(), 'IDENT')
        if kind != 'WS':
            tokens.append(Token(kind, match.group(), match.start(), match.end()))
        pos = match.end()
    return tokens


# --- Parser -----------------------------------------------------------------

_OPERAND_START = frozenset({'(', '!', 'F', 'G', '&&', '||', 'identifier', 'true', 'false'})
_COMPARISON_TEXT = frozenset({'>', '>=', '<', '<='})


class _Parser:
    """Recursive-descent parser over a token list."""

    def __init__(self, text: str, logic: Logic, weights: Optional[WeightTable]):
        self.text = text
        self.logic = logic
        self.weights = weights if weights is not None else WeightTable()
        self.tokens = tokenize(text, logic)
        self.pos = 0
        self.last_end = 0

    # token helpers

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def at(self, kind: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        self.last_end = tok.end
        return tok

    def error(self, message: str, expected=()) -> ParseError:
        tok = self.peek()
        if tok is None:
            end = len(self.text)
            return ParseError(f"{message} at end of input", (end, end), expected)
        return ParseError(
            f"{message}: found {tok.text!r} at offset {tok.start}", (tok.start, tok.end), expected
        )

    def expect(self, kind: str, what: str) -> Token:
        if not self.at(kind):
            raise self.error(f"expected {what}", {what})
        return self.advance()

    def span_from(self, start: int) -> SourceSpan:
        return SourceSpan(start, self.last_end)

    # grammar

    def parse(self) -> Formula:
        if not self.tokens:
            raise ParseError("empty specification", (0, 0), _OPERAND_START)
        f = self.parse_or()
        if self.peek() is not None:
            raise self.error("unexpected token", {'&&', '||', 'U', 'end of input'})
        return f

    def parse_or(self) -> Formula:
        start = self.peek().start if self.peek() else len(self.text)
        items = [self.parse_and()]
        while self.at('OR'):
            self.advance()
            items.append(self.parse_and())
        if len(items) == 1:
            return items[0]
        return disjunction(items, span=self.span_from(start))

    def parse_and(self) -> Formula:
        start = self.peek().start if self.peek() else len(self.text)
        items = [self.parse_until()]
        while self.at('AND'):
            self.advance()
            items.append(self.parse_until())
        if len(items) == 1:
            return items[0]
        return conjunction(items, span=self.span_from(start))

    def parse_until(self) -> Formula:
        start = self.peek().start if self.peek() else len(self.text)
        left = self.parse_unary()
        while self.at('UNTIL'):
            op = self.advance()
            if self.at('CARET'):
                raise self.error("Until does not take a weight", {'['})
            a, b = self.parse_interval(op)
            right = self.parse_unary()
            left = until(a, b, left, right, span=self.span_from(start))
        return left

    def parse_unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise self.error("expected a formula", _OPERAND_START)
        if tok.kind == 'NOT':
            self.advance()
            child = self.parse_unary()
            return negation(child, span=self.span_from(tok.start))
        if tok.kind in ('ALWAYS', 'EVENTUALLY'):
            self.advance()
            weight = self.parse_weight_tag()
            a, b = self.parse_interval(tok)
            child = self.parse_unary()
            node = Formula(
                Kind[tok.kind], (child,), (a, b), weight, span=self.span_from(tok.start)
            )
            self.check_weight(node)
            return node
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise self.error("expected a formula", _OPERAND_START)
        if tok.kind == 'LPAREN':
            self.advance()
            inner = self.parse_or()
            self.expect('RPAREN', ')')
            return inner
        if tok.kind in ('AND', 'OR'):
            return self.parse_call()
        if tok.kind in ('TRUE', 'FALSE'):
            self.advance()
            return boolean(tok.kind == 'TRUE', span=SourceSpan(tok.start, tok.end))
        if tok.kind == 'IDENT':
            return self.parse_predicate()
        raise self.error("expected a formula", _OPERAND_START)

    def parse_call(self) -> Formula:
        op = self.advance()
        weight = self.parse_weight_tag()
        self.expect('LPAREN', '(')
        args = [self.parse_or()]
        while self.at('COMMA'):
            self.advance()
            args.append(self.parse_or())
        self.expect('RPAREN', ')')
        span = self.span_from(op.start)
        if len(args) < 2:
            raise ParseError(
                f"'{op.text}' call at offset {op.start} needs at least two operands",
                (span.start, span.end), {','}
            )
        factory = conjunction if op.kind == 'AND' else disjunction
        node = factory(args, weight=weight, span=span)
        self.check_weight(node)
        return node

    def parse_weight_tag(self) -> Optional[str]:
        if not self.at('CARET'):
            return None
        self.advance()
        name = self.expect('IDENT', 'weight name').text
        if name not in self.weights:
            raise UnknownWeight(name)
        return name

    def check_weight(self, node: Formula) -> None:
        if node.weight is not None:
            self.weights.resolve(node.weight, weight_size(node))

    def parse_interval(self, op: Token) -> Tuple[int, int]:
        if not self.at('LBRACKET'):
            raise MissingInterval(
                f"operator '{op.text}' at offset {op.start} needs an interval [a,b]",
                (op.start, op.end), {'['}
            )
        open_tok = self.advance()
        a = self.parse_bound()
        self.expect('COMMA', ',')
        b = self.parse_bound()
        self.expect('RBRACKET', ']')
        if a > b:
            raise ParseError(
                f"interval [{a},{b}] at offset {open_tok.start} has a > b",
                (open_tok.start, self.last_end)
            )
        return a, b

    def parse_bound(self) -> int:
        tok = self.expect('NUMBER', 'integer')
        if not tok.text.isdigit():
            raise ParseError(
                f"interval bound {tok.text!r} at offset {tok.start} must be a nonnegative integer",
                (tok.start, tok.end), {'integer'}
            )
        return int(tok.text)

    def parse_predicate(self) -> Formula:
        name = self.advance()
        cmp_tok = self.peek()
        if cmp_tok is not None and cmp_tok.kind in _COMPARISONS:
            if self.logic is Logic.MTL:
                raise ParseError(
                    f"linear predicates not allowed in MTL (offset {name.start})",
                    (name.start, cmp_tok.end)
                )
            if cmp_tok.kind == 'EQ':
                raise ParseError(
                    f"equality predicate at offset {cmp_tok.start} is not supported",
                    (cmp_tok.start, cmp_tok.end), _COMPARISON_TEXT
                )
            self.advance()
            number = self.expect('NUMBER', 'number')
            threshold = float(number.text)
            if not math.isfinite(threshold):
                raise ParseError(
                    f"threshold {number.text!r} at offset {number.start} is out of range",
                    (number.start, number.end), {'number'}
                )
            sense = Sense.GE if cmp_tok.kind in ('GT', 'GE') else Sense.LE
            return linear(name.text, sense, threshold, span=self.span_from(name.start))
        if self.logic is not Logic.MTL:
            raise ParseError(
                f"atomic proposition '{name.text}' at offset {name.start} is not allowed in "
                f"{self.logic.name}; expected a comparison",
                (name.start, name.end), _COMPARISON_TEXT
            )
        return atom(name.text, span=SourceSpan(name.start, name.end))


def parse(text: str, logic: Logic, weights: Optional[Mapping[str, Sequence[float]]] = None
          ) -> Formula:
    """Parse specification text in the given logic."""
    table = weights if isinstance(weights, WeightTable) else WeightTable(weights)
    f = _Parser(text, logic, table).parse()
    logger.debug(f"Parsed {logic.value} specification with {node_count(f)} nodes")
    return f


def parse_stl(text: str) -> Formula:
    return parse(text, Logic.STL)


def parse_mtl(text: str) -> Formula:
    return parse(text, Logic.MTL)


def parse_wstl(text: str, weights: Mapping[str, Sequence[float]]) -> Formula:
    return parse(text, Logic.WSTL, weights)


# --- Printing ---------------------------------------------------------------

def _operand(f: Formula) -> str:
    if f.kind is Kind.BOOL_CONST or isinstance(f.predicate, Atom):
        return print_formula(f)
    return f"({print_formula(f)})"


def _tag(f: Formula) -> str:
    return f"^{f.weight}" if f.weight is not None else ""


def print_formula(f: Formula) -> str:
    """Canonical text that parses back to a structurally equal tree."""
    match f.kind:
        case Kind.PREDICATE:
            return str(f.predicate)
        case Kind.BOOL_CONST:
            return 'true' if f.value else 'false'
        case Kind.NOT:
            return f"!{_operand(f.child)}"
        case Kind.AND | Kind.OR:
            op = '&&' if f.kind is Kind.AND else '||'
            if f.weight is not None:
                return f"{op}^{f.weight}({', '.join(print_formula(c) for c in f.children)})"
            return f" {op} ".join(_operand(c) for c in f.children)
        case Kind.ALWAYS | Kind.EVENTUALLY:
            op = 'G' if f.kind is Kind.ALWAYS else 'F'
            a, b = f.interval
            return f"{op}{_tag(f)}[{a},{b}] {_operand(f.child)}"
        case Kind.UNTIL:
            a, b = f.interval
            left, right = f.children
            return f"{_operand(left)} U[{a},{b}] {_operand(right)}"
    raise ValueError(f"unknown node kind {f.kind}")


def _label(f: Formula) -> str:
    match f.kind:
        case Kind.PREDICATE:
            if isinstance(f.predicate, Atom):
                return f"Atom {f.predicate}"
            return f"Pred {f.predicate}"
        case Kind.BOOL_CONST:
            return f"Const {'true' if f.value else 'false'}"
        case Kind.ALWAYS | Kind.EVENTUALLY | Kind.UNTIL:
            a, b = f.interval
            return f"{f.kind.value}{_tag(f)}[{a},{b}]"
    return f"{f.kind.value}{_tag(f)}"


def format_tree(f: Formula) -> str:
    """Indented dump, one node per line, one space per depth level."""
    lines = []

    def walk(node: Formula, depth: int) -> None:
        lines.append(' ' * depth + _label(node))
        for child in node.children:
            walk(child, depth + 1)

    walk(f, 0)
    return '\n'.join(lines)
