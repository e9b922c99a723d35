"""Small arithmetic expression language for fields and boundary radii.

Grammar (``^`` is right-associative and binds tighter than unary minus, so
``-x^2`` means ``-(x^2)``)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Explicit parentheses are kept as ``Group`` nodes and numbers keep their
source text, so printing a parsed expression reproduces the input up to
whitespace.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

FUNCTIONS = {
    "exp": np.exp,
    "cos": np.cos,
    "sin": np.sin,
    "sqrt": np.sqrt,
    "log": np.log,
    "tanh": np.tanh,
}
CONSTANTS = {"pi": np.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class ExpressionError(ValueError):
    """Syntax or name error, with the character position of the problem."""

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        super().__init__(message if position is None else f"{message} at position {position}")


@dataclass(frozen=True)
class Num:
    text: str

    @property
    def value(self) -> float:
        return float(self.text)


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
    func: str
    arg: "Node"


@dataclass(frozen=True)
class Group:
    inner: "Node"


Node = Union[Num, Var, Unary, Binary, Call, Group]


def tokenize(src: str):
    pos = 0
    out = []
    src = src.rstrip()
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            p = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExpressionError(f"unexpected character {src[p]!r}", p)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src: str, variables: Iterable[str]):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0
        self.variables = tuple(variables)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        t = self.take()
        if t[1] != value:
            found = "end of input" if t[0] == "end" else repr(t[1])
            raise ExpressionError(f"expected {value!r}, found {found}", t[2])
        return t

    def parse(self) -> Node:
        if self.peek()[0] == "end":
            raise ExpressionError("empty expression", 0)
        node = self.expr()
        t = self.peek()
        if t[0] != "end":
            raise ExpressionError(f"unexpected {t[1]!r}", t[2])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        t = self.peek()
        if t[0] == "op" and t[1] in ("-", "+"):
            self.take()
            return Unary(t[1], self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        t = self.peek()
        if t[0] == "op" and t[1] == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(text)
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if text not in FUNCTIONS:
                    raise ExpressionError(_unknown(text, FUNCTIONS, "function"), pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in FUNCTIONS:
                raise ExpressionError(f"function {text!r} needs an argument in parentheses", pos)
            if text not in CONSTANTS and text not in self.variables:
                raise ExpressionError(_unknown(text, list(CONSTANTS) + list(self.variables), "identifier"), pos)
            return Var(text)
        if kind == "op" and text == "(":
            inner = self.expr()
            self.expect(")")
            return Group(inner)
        found = "end of input" if kind == "end" else repr(text)
        raise ExpressionError(f"unexpected {found}", pos)


def _unknown(name: str, known: Iterable[str], what: str) -> str:
    near = difflib.get_close_matches(name, list(known), n=1, cutoff=0.5)
    hint = f"; did you mean {near[0]!r}?" if near else ""
    return f"unknown {what} {name!r}{hint}"


def parse(src: str, variables: Iterable[str] = ("r", "x1", "x2", "s")) -> Node:
    if not isinstance(src, str) or not src.strip():
        raise ExpressionError("expression must be a nonempty string")
    return _Parser(src, variables).parse()


def evaluate(node: Node, env: Dict[str, object]):
    """Vectorised evaluation; ``env`` maps variable names to arrays or scalars."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        try:
            return np.asarray(env[node.name], dtype=float)
        except KeyError:
            raise ExpressionError(f"no value supplied for variable {node.name!r}") from None
    if isinstance(node, Group):
        return evaluate(node.inner, env)
    if isinstance(node, Unary):
        v = evaluate(node.operand, env)
        return -v if node.op == "-" else +v
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, env))
    a = evaluate(node.left, env)
    b = evaluate(node.right, env)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return np.power(a, b)


def to_source(node: Node) -> str:
    """Print an expression; explicit groups are the only parentheses emitted besides calls."""
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Group):
        return f"({to_source(node.inner)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Unary):
        return f"{node.op}{to_source(node.operand)}"
    if node.op == "^":
        return f"{to_source(node.left)}^{to_source(node.right)}"
    return f"{to_source(node.left)} {node.op} {to_source(node.right)}"


def variables_of(node: Node) -> set:
    if isinstance(node, Var):
        return set() if node.name in CONSTANTS else {node.name}
    if isinstance(node, (Num,)):
        return set()
    if isinstance(node, Group):
        return variables_of(node.inner)
    if isinstance(node, Unary):
        return variables_of(node.operand)
    if isinstance(node, Call):
        return variables_of(node.arg)
    return variables_of(node.left) | variables_of(node.right)


@dataclass(frozen=True, eq=False)
class FieldExpression:
    """Parsed expression with its positivity certificate (grid minimum over the closed domain)."""

    source: str
    ast: Node
    kind: str  # "constant" | "radial" | "expression" | "radius"
    certificate: Optional[float] = None

    def __call__(self, **env):
        val = evaluate(self.ast, env)
        shape = np.broadcast(*[np.asarray(v) for v in env.values()]).shape if env else ()
        return np.broadcast_to(np.asarray(val, dtype=float), shape).copy() if shape else np.asarray(val, dtype=float)

    def planar(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return self(x1=x1, x2=x2, r=np.hypot(x1, x2))

    def radial(self, r):
        return self(r=np.asarray(r, dtype=float))

    def with_certificate(self, value: float) -> "FieldExpression":
        return FieldExpression(self.source, self.ast, self.kind, float(value))


_ALLOWED = {
    "constant": (),
    "radial": ("r",),
    "expression": ("x1", "x2", "r"),
    "radius": ("s",),
}


def parse_field_expression(src: str, kind: str = "expression") -> FieldExpression:
    """Parse ``src`` allowing only the variables of ``kind`` (``radial`` -> r, ``expression`` -> x1, x2, r)."""
    if kind not in _ALLOWED:
        raise ValueError(f"unknown expression kind {kind!r}")
    if isinstance(src, (int, float)) and not isinstance(src, bool):
        src = repr(float(src))
    ast = parse(src, _ALLOWED[kind])
    return FieldExpression(src, ast, kind)


def pretty(src: str) -> str:
    return to_source(parse(src))


def strip_ws(s: str) -> str:
    return re.sub(r"\s+", "", s)


def roundtrip_ok(src: str) -> Tuple[bool, str]:
    out = pretty(src)
    return strip_ws(out) == strip_ws(src), out
