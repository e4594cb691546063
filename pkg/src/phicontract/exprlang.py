"""A small arithmetic expression language for distances, maps and control functions.

Grammar::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := unary ('^' factor)?
    unary   := '-' unary | primary
    primary := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'

``^`` is right-associative and binds tighter than ``*`` and ``/``.  Because
unary minus sits below ``^`` in the grammar, ``-2^2`` parses as ``(-2)^2``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ArityError,
    DivisionByZeroError,
    EvalDomainError,
    EvaluationError,
    ExprSyntaxError,
    NonFiniteError,
    NotASelfMapError,
    TotalityError,
    UnknownIdentifierError,
)

FUNCTIONS = {"min": 2, "max": 2, "abs": 1, "sqrt": 1}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


# -- syntax tree -------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Num | Var | Neg | BinOp | Call


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8"))


def tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}",
                                  _byte_offset(source, pos), source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), _byte_offset(source, pos)))
        pos = m.end()
    tokens.append(_Token("end", "", _byte_offset(source, len(source))))
    return tokens


class _Parser:
    def __init__(self, source: str, variables: frozenset):
        self.source = source
        self.variables = variables
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def _expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind == "end":
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", self.tok.offset, self.source)
        return self._advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset, self.source)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self._advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self._advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        base = self.unary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self._advance()
            return BinOp("^", base, self.factor())
        return base

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            self._advance()
            return Neg(self.unary())
        return self.primary()

    def primary(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self._advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"literal {tok.text!r} overflows", tok.offset, self.source)
            return Num(value)
        if tok.kind == "ident":
            self._advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                if tok.text not in FUNCTIONS:
                    raise UnknownIdentifierError(tok.text, tok.offset, self.variables)
                self._advance()
                args = [self.expr()]
                while self.tok.kind == "op" and self.tok.text == ",":
                    self._advance()
                    args.append(self.expr())
                self._expect(")")
                if len(args) != FUNCTIONS[tok.text]:
                    raise ArityError(tok.text, FUNCTIONS[tok.text], len(args), tok.offset)
                return Call(tok.text, tuple(args))
            if tok.text not in self.variables:
                raise UnknownIdentifierError(tok.text, tok.offset, self.variables)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {found}", tok.offset, self.source)


# -- printing ----------------------------------------------------------------

def to_source(node: Node) -> str:
    """Canonical, fully parenthesised text for ``node``; re-parses to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    return f"{node.name}({', '.join(to_source(a) for a in node.args)})"


# -- evaluation --------------------------------------------------------------

def _scalar_eval(node: Node, env: Mapping[str, float]) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_scalar_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _scalar_eval(node.left, env)
        b = _scalar_eval(node.right, env)
        op = node.op
        if op == "+":
            r = a + b
        elif op == "-":
            r = a - b
        elif op == "*":
            r = a * b
        elif op == "/":
            if b == 0:
                raise DivisionByZeroError("division by zero", env)
            r = a / b
        else:
            if a == 0 and b < 0:
                raise EvalDomainError("0 raised to a negative power", env)
            if a < 0 and not float(b).is_integer():
                raise EvalDomainError("negative base with non-integer exponent", env)
            try:
                r = a ** b
            except OverflowError:
                raise NonFiniteError("overflow in ^", env) from None
    else:
        vals = [_scalar_eval(a, env) for a in node.args]
        name = node.name
        if name == "min":
            r = min(vals)
        elif name == "max":
            r = max(vals)
        elif name == "abs":
            r = abs(vals[0])
        else:
            if vals[0] < 0:
                raise EvalDomainError("sqrt of a negative number", env)
            r = math.sqrt(vals[0])
    r = float(r)
    if not math.isfinite(r):
        raise NonFiniteError("non-finite intermediate value", env)
    return r


class _VectorEval:
    def __init__(self, env: Mapping[str, np.ndarray]):
        self.env = env
        self.shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()

    def fail(self, cls, message, mask):
        mask = np.broadcast_to(mask, self.shape)
        idx = tuple(np.argwhere(mask)[0]) if self.shape else ()
        where = {k: float(np.broadcast_to(v, self.shape)[idx]) for k, v in self.env.items()}
        raise cls(message, where)

    def __call__(self, node: Node):
        if isinstance(node, Num):
            return np.float64(node.value)
        if isinstance(node, Var):
            return self.env[node.name]
        if isinstance(node, Neg):
            return -self(node.operand)
        with np.errstate(all="ignore"):
            if isinstance(node, BinOp):
                a = self(node.left)
                b = self(node.right)
                op = node.op
                if op == "+":
                    r = a + b
                elif op == "-":
                    r = a - b
                elif op == "*":
                    r = a * b
                elif op == "/":
                    zero = np.asarray(b) == 0
                    if zero.any():
                        self.fail(DivisionByZeroError, "division by zero", zero)
                    r = a / b
                else:
                    bad = (np.asarray(a) == 0) & (np.asarray(b) < 0)
                    if bad.any():
                        self.fail(EvalDomainError, "0 raised to a negative power", bad)
                    bad = (np.asarray(a) < 0) & (np.floor(b) != b)
                    if bad.any():
                        self.fail(EvalDomainError, "negative base with non-integer exponent", bad)
                    r = np.power(a, b)
            else:
                vals = [self(a) for a in node.args]
                name = node.name
                if name == "min":
                    r = np.minimum(vals[0], vals[1])
                elif name == "max":
                    r = np.maximum(vals[0], vals[1])
                elif name == "abs":
                    r = np.abs(vals[0])
                else:
                    neg = np.asarray(vals[0]) < 0
                    if neg.any():
                        self.fail(EvalDomainError, "sqrt of a negative number", neg)
                    r = np.sqrt(vals[0])
        bad = ~np.isfinite(r)
        if np.any(bad):
            self.fail(NonFiniteError, "non-finite intermediate value", bad)
        return r


@dataclass(frozen=True)
class Expression:
    """A parsed expression together with its source text and declared variables."""

    source: str
    tree: Node = field(compare=True)
    variables: frozenset = field(default=frozenset())

    def __call__(self, **bindings: float) -> float:
        return evaluate(self, bindings)

    def vectorized(self, **arrays) -> np.ndarray:
        """Evaluate on broadcastable numpy arrays; errors name the first bad point."""
        env = {k: np.asarray(v, dtype=float) for k, v in arrays.items()}
        self._check_bindings(env)
        out = _VectorEval(env)(self.tree)
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def canonical(self) -> str:
        return to_source(self.tree)

    def _check_bindings(self, bindings):
        missing = free_variables(self.tree) - set(bindings)
        if missing:
            raise EvaluationError(f"unbound variable(s) {sorted(missing)}")

    def __str__(self):
        return self.source


def free_variables(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    out = set()
    for a in node.args:
        out |= free_variables(a)
    return out


def parse(source: str, allowed_variables: Iterable[str]) -> Expression:
    variables = frozenset(allowed_variables)
    tree = _Parser(source, variables).parse()
    return Expression(source, tree, variables)


def evaluate(expr: Expression, bindings: Mapping[str, float]) -> float:
    env = {k: float(v) for k, v in bindings.items()}
    expr._check_bindings(env)
    return _scalar_eval(expr.tree, env)


# -- piecewise maps ----------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    expr: Expression

    def guards(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class PiecewiseMap:
    """Self-map given by closed-interval guards; the first matching piece wins."""

    pieces: tuple
    name: str = "T"

    @classmethod
    def from_pairs(cls, pairs: Sequence, name: str = "T") -> "PiecewiseMap":
        """Build from ``[((lo, hi), "expr"), ...]`` with expressions in ``x``."""
        pieces = []
        for (lo, hi), src in pairs:
            expr = src if isinstance(src, Expression) else parse(src, {"x"})
            if not lo <= hi:
                raise ValueError(f"guard [{lo}, {hi}] is empty")
            pieces.append(Piece(float(lo), float(hi), expr))
        return cls(tuple(pieces), name)

    def raw(self, x: float) -> float:
        """Evaluate without the carrier check."""
        for piece in self.pieces:
            if piece.guards(x):
                return piece.expr(x=x)
        raise TotalityError(x, self.name)

    def raw_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.full(xs.shape, np.nan)
        todo = np.ones(xs.shape, dtype=bool)
        for piece in self.pieces:
            hit = todo & (xs >= piece.lo) & (xs <= piece.hi)
            if hit.any():
                out[hit] = piece.expr.vectorized(x=xs[hit])
                todo &= ~hit
        if todo.any():
            raise TotalityError(float(xs[todo][0]), self.name)
        return out


def apply_map(T: PiecewiseMap, carrier, x: float) -> float:
    """T(x), checked to land back in ``carrier``."""
    if not carrier.contains(x):
        from .errors import OutsideCarrierError
        raise OutsideCarrierError(x, carrier)
    y = T.raw(x)
    if not carrier.contains(y):
        raise NotASelfMapError(x, y, T.name)
    return y


def apply_map_array(T: PiecewiseMap, carrier, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    ys = T.raw_array(xs)
    inside = carrier.contains_array(ys)
    if not inside.all():
        i = int(np.argmin(inside))
        raise NotASelfMapError(float(xs.flat[i]), float(ys.flat[i]), T.name)
    return ys
