"""Small expression language for defining potentials.

Grammar (EBNF):

    expr     = term , { ("+" | "-") , term } ;
    term     = unary , { ("*" | "/") , unary } ;
    unary    = [ "-" | "+" ] , power ;
    power    = atom , [ "^" , integer ] ;
    atom     = number
             | "q" , "[" , index , "]"
             | name , "(" , expr , ")"        (* sin cos exp log sqrt *)
             | "sum_i" , "(" , expr , ")"
             | name                           (* named parameter *)
             | "(" , expr , ")" ;
    index    = integer | "i" , [ ("+" | "-") , integer ] ;

``sum_i(body)`` sums the body over lattice sites; inside it, ``q[i]``
and neighbor references ``q[i+1]`` / ``q[i-1]`` are resolved per site
under the periodic or open boundary flag given at parse time (open
boundaries drop sites whose neighbor references fall off the chain).
Exponents are integer literals only. Gradients and Hessians come from
forward-mode dual numbers, so they are exact to round-off.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .. import dual
from ..errors import (
    CoordinateIndexError,
    DslSyntaxError,
    UnknownIdentifierError,
)
from .base import PotentialModel

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
BOUNDARIES = ("periodic", "open")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Coord:
    index: int


@dataclass(frozen=True)
class SiteCoord:
    offset: int  # q[i+offset] inside sum_i


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


@dataclass(frozen=True)
class SiteSum:
    body: object
    boundary: str


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<NUMBER>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<NAME>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<OP>[+\-*/^()\[\]])
  | (?P<WS>[ \t]+)
  | (?P<NL>\n)
  | (?P<BAD>.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(source):
    tokens = []
    line, col = 1, 1
    for m in _TOKEN_RE.finditer(source):
        kind = m.lastgroup
        text = m.group()
        if kind == "NL":
            line += 1
            col = 1
            continue
        if kind == "WS":
            col += len(text)
            continue
        if kind == "BAD":
            raise DslSyntaxError(f"unexpected character {text!r}", line, col)
        tokens.append(Token(kind, text, line, col))
        col += len(text)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens, N, boundary):
        self.tokens = tokens
        self.pos = 0
        self.N = N
        self.boundary = boundary
        self.in_sum = False

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        tok = self.next()
        if tok.text != text:
            raise DslSyntaxError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.line, tok.column)
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "EOF":
            raise DslSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.column)
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.next().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok.text == "-":
            self.next()
            return Neg(self.unary())
        if tok.text == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek().text == "^":
            self.next()
            node = Pow(node, self._integer("exponent"))
        return node

    def _integer(self, what):
        sign = 1
        tok = self.peek()
        if tok.text in ("+", "-"):
            self.next()
            sign = -1 if tok.text == "-" else 1
            tok = self.peek()
        if tok.kind != "NUMBER" or not tok.text.isdigit():
            raise DslSyntaxError(f"expected integer {what}", tok.line, tok.column)
        self.next()
        return sign * int(tok.text)

    def atom(self):
        tok = self.next()
        if tok.kind == "NUMBER":
            return Const(float(tok.text))
        if tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "NAME":
            return self._name(tok)
        raise DslSyntaxError(f"unexpected {tok.text or 'end of input'!r}", tok.line, tok.column)

    def _name(self, tok):
        name = tok.text
        if name == "q" and self.peek().text == "[":
            self.next()
            node = self._coordref(tok)
            self.expect("]")
            return node
        if name == "sum_i":
            if self.in_sum:
                raise DslSyntaxError("sum_i cannot be nested", tok.line, tok.column)
            self.expect("(")
            self.in_sum = True
            body = self.expr()
            self.in_sum = False
            self.expect(")")
            return SiteSum(body, self.boundary)
        if self.peek().text == "(":
            if name not in FUNCTIONS:
                raise UnknownIdentifierError(f"unknown function {name!r}", tok.line, tok.column)
            self.next()
            arg = self.expr()
            self.expect(")")
            return Call(name, arg)
        if name == "i":
            raise UnknownIdentifierError("'i' is only valid inside q[...] under sum_i", tok.line, tok.column)
        return Param(name)

    def _coordref(self, qtok):
        tok = self.peek()
        if tok.kind == "NAME" and tok.text == "i":
            if not self.in_sum:
                raise UnknownIdentifierError("q[i] is only valid inside sum_i", tok.line, tok.column)
            self.next()
            offset = 0
            if self.peek().text in ("+", "-"):
                sign = -1 if self.next().text == "-" else 1
                num = self.peek()
                if num.kind != "NUMBER" or not num.text.isdigit():
                    raise DslSyntaxError("expected integer offset", num.line, num.column)
                self.next()
                offset = sign * int(num.text)
            return SiteCoord(offset)
        if tok.kind == "NUMBER" and tok.text.isdigit():
            self.next()
            idx = int(tok.text)
            if idx >= self.N:
                raise CoordinateIndexError(
                    f"coordinate index {idx} out of range for N={self.N}", qtok.line, qtok.column
                )
            return Coord(idx)
        raise DslSyntaxError("expected coordinate index", tok.line, tok.column)


def parse_potential_dsl(source, N, boundary="periodic"):
    """Parse DSL source into an expression tree for an N-coordinate model."""
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}")
    if N < 1:
        raise ValueError("N must be positive")
    return _Parser(_tokenize(source), N, boundary).parse()


# ---------------------------------------------------------------------------
# serializer: fully parenthesized, reparses to the identical tree
# ---------------------------------------------------------------------------


def serialize(node):
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Coord):
        return f"q[{node.index}]"
    if isinstance(node, SiteCoord):
        if node.offset == 0:
            return "q[i]"
        return f"q[i{'+' if node.offset > 0 else '-'}{abs(node.offset)}]"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Neg):
        return f"(-{serialize(node.arg)})"
    if isinstance(node, BinOp):
        return f"({serialize(node.lhs)}{node.op}{serialize(node.rhs)})"
    if isinstance(node, Pow):
        return f"({serialize(node.base)}^{node.exponent})"
    if isinstance(node, Call):
        return f"{node.fn}({serialize(node.arg)})"
    if isinstance(node, SiteSum):
        return f"sum_i({serialize(node.body)})"
    raise TypeError(f"not an AST node: {node!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _offsets(node):
    if isinstance(node, SiteCoord):
        return {node.offset}
    if isinstance(node, Neg):
        return _offsets(node.arg)
    if isinstance(node, BinOp):
        return _offsets(node.lhs) | _offsets(node.rhs)
    if isinstance(node, Pow):
        return _offsets(node.base)
    if isinstance(node, Call):
        return _offsets(node.arg)
    return set()


def eval_ast(node, q, params, site=None):
    """Evaluate over floats or dual numbers (q entries may be Duals)."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Coord):
        return q[node.index]
    if isinstance(node, SiteCoord):
        return q[(site + node.offset) % len(q)]
    if isinstance(node, Param):
        try:
            return params[node.name]
        except KeyError:
            raise UnknownIdentifierError(f"unbound parameter {node.name!r}") from None
    if isinstance(node, Neg):
        return -eval_ast(node.arg, q, params, site)
    if isinstance(node, BinOp):
        a = eval_ast(node.lhs, q, params, site)
        b = eval_ast(node.rhs, q, params, site)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        base = eval_ast(node.base, q, params, site)
        if isinstance(base, dual.Dual):
            return base ** node.exponent
        return base ** float(node.exponent)
    if isinstance(node, Call):
        return dual.FUNCTIONS[node.fn](eval_ast(node.arg, q, params, site))
    if isinstance(node, SiteSum):
        N = len(q)
        offs = _offsets(node.body)
        if node.boundary == "open" and offs:
            lo = max(0, -min(offs))
            hi = N - max(max(offs), 0)
        else:
            lo, hi = 0, N
        total = 0.0
        for s in range(lo, hi):
            total = total + eval_ast(node.body, q, params, s)
        return total
    raise TypeError(f"not an AST node: {node!r}")


class DslPotential(PotentialModel):
    """Potential defined by parsed DSL source.

    Derivatives are forward-mode: one dual pass per coordinate for the
    gradient, nested duals for the Hessian.
    """

    kind = "dsl"

    def __init__(self, source, N, params=None, boundary="periodic", box_halfwidth=2.0):
        self.ast = parse_potential_dsl(source, N, boundary)
        self.source = source
        self.boundary = boundary
        self.params = {k: float(v) for k, v in (params or {}).items()}
        box = np.column_stack([np.full(N, -box_halfwidth), np.full(N, box_halfwidth)])
        super().__init__(
            N,
            box,
            {
                "source": source,
                "params": dict(self.params),
                "boundary": boundary,
                "box_halfwidth": box_halfwidth,
            },
        )

    def value(self, q):
        q = [float(x) for x in q]
        return float(eval_ast(self.ast, q, self.params))

    def gradient(self, q):
        qf = [float(x) for x in q]
        g = np.empty(self.N)
        for i in range(self.N):
            qd = list(qf)
            qd[i] = dual.Dual(qf[i], 1.0)
            g[i] = dual.value(dual.tangent(eval_ast(self.ast, qd, self.params)))
        return g

    def hessian(self, q):
        qf = [float(x) for x in q]
        H = np.empty((self.N, self.N))
        for i in range(self.N):
            for j in range(i, self.N):
                qd = list(qf)
                if i == j:
                    qd[i] = dual.Dual(dual.Dual(qf[i], 1.0), dual.Dual(1.0, 0.0))
                else:
                    qd[i] = dual.Dual(dual.Dual(qf[i], 0.0), dual.Dual(1.0, 0.0))
                    qd[j] = dual.Dual(dual.Dual(qf[j], 1.0), dual.Dual(0.0, 0.0))
                out = eval_ast(self.ast, qd, self.params)
                H[i, j] = H[j, i] = dual.value(dual.tangent(dual.tangent(out)))
        return H
