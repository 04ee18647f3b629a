"""Tiny expression language for user-supplied phi(u) and w(t).

Grammar (unary minus binds looser than '^', which is right-associative):

    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := Number | Ident | Ident '(' expr (',' expr)* ')' | '(' expr ')'
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union


class ExprError(ValueError):
    position = 0

    @property
    def column(self) -> int:
        return self.position + 1


class LexError(ExprError):
    def __init__(self, position: int, snippet: str):
        self.position, self.snippet = position, snippet
        super().__init__(f"unexpected character {snippet!r} at column {position + 1}")


class ParseError(ExprError):
    def __init__(self, position: int, expected: tuple, found: str = "", message: str = ""):
        self.position, self.expected, self.found = position, tuple(expected), found
        msg = message or f"expected {' or '.join(expected)} but found {found or 'end of input'}"
        super().__init__(f"{msg} at column {position + 1}")


class DomainError(ArithmeticError):
    def __init__(self, node, argument):
        self.node, self.argument = node, argument
        super().__init__(f"domain error in {to_source(node)} at argument {argument!r}")


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    position: int


_SINGLE = {"+": "Plus", "-": "Minus", "*": "Star", "/": "Slash", "^": "Caret",
           "(": "LParen", ")": "RParen", ",": "Comma"}
_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def tokenize(src: str) -> list[Token]:
    if not src or not src.strip():
        raise LexError(0, src[:1])
    out, i = [], 0
    while i < len(src):
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _SINGLE:
            out.append(Token(_SINGLE[ch], ch, i))
            i += 1
            continue
        m = _NUMBER.match(src, i) or _IDENT.match(src, i)
        if not m:
            raise LexError(i, src[i:i + 8])
        kind = "Ident" if _IDENT.match(m.group(0)) else "Number"
        out.append(Token(kind, m.group(0), i))
        i = m.end()
    return out


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


Node = Union[Const, Var, Unary, Binary, Call]

ARITY = {"log": (1, 1), "exp": (1, 1), "sqrt": (1, 1), "abs": (1, 1), "min": (2, 99), "max": (2, 99)}
VARIABLES = ("u", "t")


class _Parser:
    def __init__(self, tokens, src_len):
        self.toks, self.i, self.end = tokens, 0, src_len

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def fail(self, expected):
        tok = self.peek()
        raise ParseError(tok.position if tok else self.end, expected, tok.lexeme if tok else "")

    def take(self, kind, expected):
        tok = self.peek()
        if tok is None or tok.kind != kind:
            self.fail(expected)
        self.i += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek() and self.peek().kind in ("Plus", "Minus"):
            op = self.toks[self.i].lexeme
            self.i += 1
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() and self.peek().kind in ("Star", "Slash"):
            op = self.toks[self.i].lexeme
            self.i += 1
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok and tok.kind == "Minus":
            self.i += 1
            return Unary("-", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() and self.peek().kind == "Caret":
            self.i += 1
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        tok = self.peek()
        expected = ("number", "identifier", "'('", "'-'")
        if tok is None:
            self.fail(expected)
        if tok.kind == "Number":
            self.i += 1
            return Const(float(tok.lexeme))
        if tok.kind == "LParen":
            self.i += 1
            node = self.expr()
            self.take("RParen", ("')'",))
            return node
        if tok.kind == "Ident":
            self.i += 1
            nxt = self.peek()
            if nxt and nxt.kind == "LParen":
                if tok.lexeme not in ARITY:
                    raise ParseError(tok.position, tuple(sorted(ARITY)), tok.lexeme,
                                     f"unknown function {tok.lexeme!r}")
                self.i += 1
                args = [self.expr()]
                while self.peek() and self.peek().kind == "Comma":
                    self.i += 1
                    args.append(self.expr())
                self.take("RParen", ("','", "')'"))
                lo, hi = ARITY[tok.lexeme]
                if not lo <= len(args) <= hi:
                    raise ParseError(tok.position, (f"{lo} argument(s)",), str(len(args)),
                                     f"{tok.lexeme} takes {lo if lo == hi else f'at least {lo}'} argument(s)")
                return Call(tok.lexeme, tuple(args))
            if tok.lexeme in ARITY:
                raise ParseError(nxt.position if nxt else self.end, ("'('",),
                                 nxt.lexeme if nxt else "")
            return Var(tok.lexeme)
        self.fail(expected)


def parse(tokens: list[Token], src_len: int | None = None) -> Node:
    end = src_len if src_len is not None else (tokens[-1].position + len(tokens[-1].lexeme) if tokens else 0)
    p = _Parser(tokens, end)
    node = p.expr()
    if p.peek() is not None:
        p.fail(("operator", "end of input"))
    return node


def compile_expr(src: str, var: str | None = None) -> Node:
    """Tokenize and parse; when var is given, every variable must be that name."""
    node = parse(tokenize(src), len(src))
    if var is not None:
        for name, pos in _variables(node):
            if name != var:
                col = src.find(name)
                raise ParseError(max(col, 0), (var,), name, f"unknown variable {name!r} (expected {var!r})")
    return node


def _variables(node):
    if isinstance(node, Var):
        yield node.name, 0
    elif isinstance(node, Unary):
        yield from _variables(node.operand)
    elif isinstance(node, Binary):
        yield from _variables(node.left)
        yield from _variables(node.right)
    elif isinstance(node, Call):
        for a in node.args:
            yield from _variables(a)


def _num(x: float) -> str:
    if math.isinf(x):
        return "1e999"
    return repr(float(x))


def to_source(node: Node) -> str:
    """Fully parenthesized source; parse(to_source(n)) == n."""
    if isinstance(node, Const):
        return _num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    return f"{node.fn}({', '.join(to_source(a) for a in node.args)})"


def eval_ast(node: Node, binding: tuple) -> float:
    """Evaluate with binding (name, value). Overflow gives +-inf; NaN-producing ops raise DomainError."""
    name, value = binding
    return _eval(node, name, float(value))


def _eval(node, name, x):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        if node.name != name:
            raise DomainError(node, node.name)
        return x
    if isinstance(node, Unary):
        return -_eval(node.operand, name, x)
    if isinstance(node, Binary):
        a, b = _eval(node.left, name, x), _eval(node.right, name, x)
        op = node.op
        if op == "+":
            r = a + b
        elif op == "-":
            r = a - b
        elif op == "*":
            r = a * b
        elif op == "/":
            if b == 0:
                raise DomainError(node, (a, b))
            r = a / b
        else:
            r = _pow(node, a, b)
        if math.isnan(r):
            raise DomainError(node, (a, b))
        return r
    args = [_eval(a, name, x) for a in node.args]
    fn = node.fn
    try:
        if fn == "log":
            if args[0] <= 0:
                raise DomainError(node, args[0])
            return math.log(args[0])
        if fn == "exp":
            return math.exp(args[0])
        if fn == "sqrt":
            if args[0] < 0:
                raise DomainError(node, args[0])
            return math.sqrt(args[0])
        if fn == "abs":
            return abs(args[0])
        if fn == "min":
            return min(args)
        return max(args)
    except OverflowError:
        return math.inf


def _pow(node, a, b):
    if a == 0 and b < 0:
        raise DomainError(node, (a, b))
    if a < 0 and not float(b).is_integer():
        raise DomainError(node, (a, b))
    try:
        return math.pow(a, b)
    except OverflowError:
        return math.inf if a > 0 or float(b) % 2 == 0 else -math.inf
