"""
Arithmetic expression DSL used to define D, P, T and phi at runtime.

Grammar (recursive descent; precedence ``^`` > unary ``-`` > ``* /`` > ``+ -``)::

    expr       := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := "-" unary | power
    power      := primary ("^" unary)?
    primary    := NUMBER
                | IDENT
                | IDENT "(" expr ("," expr)* ")"
                | "if" "(" comparison "," expr "," expr ")"
                | "(" expr ")"
    comparison := expr ("<" | "<=" | ">" | ">=" | "==" | "!=") expr

``+ - * /`` associate to the left, ``^`` to the right.  Comparisons are only
legal as the first argument of ``if``; they select a branch and never produce
a number.  All arithmetic is IEEE double precision and every intermediate
result must stay finite.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EvaluationError, LexError, ParseError

FUNCTIONS = {"abs": 1, "sqrt": 1, "exp": 1, "log": 1, "min": 2, "max": 2, "if": 3}
COMPARISONS = ("<=", ">=", "==", "!=", "<", ">")


@dataclass(frozen=True)
class Token:
    kind: str  # number | identifier | operator | paren | comma
    lexeme: str
    position: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<identifier>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<operator><=|>=|==|!=|[-+*/^<>])
  | (?P<paren>[()])
  | (?P<comma>,)
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    if not source or not source.strip():
        raise LexError("empty expression", 0)
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            lexeme = m.group()
            if kind == "number" and not math.isfinite(float(lexeme)):
                raise LexError(f"number {lexeme!r} out of range", pos)
            tokens.append(Token(kind, lexeme, pos))
        pos = m.end()
    return tokens


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


def _finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise EvaluationError(f"{what} produced a non-finite result")
    return value


class Node:
    """Base of all expression nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    def evaluate(self, env: Mapping[str, float]) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Node):
    value: float

    def evaluate(self, env):
        return self.value


@dataclass(frozen=True)
class Var(Node):
    name: str

    def evaluate(self, env):
        try:
            return float(env[self.name])
        except KeyError:
            raise EvaluationError(f"unbound variable {self.name!r}") from None


@dataclass(frozen=True)
class Neg(Node):
    operand: Node

    def evaluate(self, env):
        return -self.operand.evaluate(env)


def _power(a: float, b: float) -> float:
    if a < 0 and not float(b).is_integer():
        raise EvaluationError(f"negative base {a!r} with non-integer exponent {b!r}")
    try:
        r = a**b
    except ZeroDivisionError:
        raise EvaluationError("zero raised to a negative power") from None
    except OverflowError:
        raise EvaluationError("power overflow") from None
    return _finite(r, "power")


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        op = self.op
        if op == "+":
            return _finite(a + b, "addition")
        if op == "-":
            return _finite(a - b, "subtraction")
        if op == "*":
            return _finite(a * b, "multiplication")
        if op == "/":
            if b == 0:
                raise EvaluationError("division by zero")
            return _finite(a / b, "division")
        return _power(a, b)


def _sqrt(a):
    if a < 0:
        raise EvaluationError(f"sqrt of negative value {a!r}")
    return math.sqrt(a)


def _log(a):
    if a <= 0:
        raise EvaluationError(f"log of non-positive value {a!r}")
    return math.log(a)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        raise EvaluationError("exp overflow") from None


_CALLS = {"abs": abs, "sqrt": _sqrt, "exp": _exp, "log": _log, "min": min, "max": max}


@dataclass(frozen=True)
class Call(Node):
    name: str
    args: tuple[Node, ...]

    def evaluate(self, env):
        return _CALLS[self.name](*(a.evaluate(env) for a in self.args))


_RELOPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


@dataclass(frozen=True)
class Compare:
    op: str
    left: Node
    right: Node

    def holds(self, env) -> bool:
        return _RELOPS[self.op](self.left.evaluate(env), self.right.evaluate(env))


@dataclass(frozen=True)
class Cond(Node):
    test: Compare
    then: Node
    orelse: Node

    def evaluate(self, env):
        return (self.then if self.test.holds(env) else self.orelse).evaluate(env)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0
        last = tokens[-1] if tokens else None
        self.end = last.position + len(last.lexeme) if last else 0

    def peek(self) -> Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def offset(self) -> int:
        tok = self.peek()
        return tok.position if tok else self.end

    def fail(self, message: str):
        tok = self.peek()
        found = repr(tok.lexeme) if tok else "end of input"
        raise ParseError(f"{message}, found {found}", self.offset())

    def accept(self, *lexemes: str) -> Token | None:
        tok = self.peek()
        if tok is not None and tok.kind != "number" and tok.lexeme in lexemes:
            self.i += 1
            return tok
        return None

    def expect(self, lexeme: str) -> Token:
        tok = self.accept(lexeme)
        if tok is None:
            self.fail(f"expected {lexeme!r}")
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.peek() is not None:
            self.fail("unexpected token")
        return node

    def expr(self) -> Node:
        node = self.term()
        while (tok := self.accept("+", "-")) is not None:
            node = BinOp(tok.lexeme, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while (tok := self.accept("*", "/")) is not None:
            node = BinOp(tok.lexeme, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Node:
        tok = self.peek()
        if tok is None:
            self.fail("expected an operand")
        if tok.kind == "number":
            self.i += 1
            return Const(float(tok.lexeme))
        if tok.kind == "identifier":
            self.i += 1
            if self.accept("("):
                return self.call(tok)
            if tok.lexeme in FUNCTIONS:
                raise ParseError(f"function {tok.lexeme!r} used without arguments", tok.position)
            return Var(tok.lexeme)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected an operand")

    def call(self, name_tok: Token) -> Node:
        name = name_tok.lexeme
        if name not in FUNCTIONS:
            raise ParseError(f"unknown function {name!r}", name_tok.position)
        if name == "if":
            test = self.comparison()
            self.expect(",")
            then = self.expr()
            self.expect(",")
            orelse = self.expr()
            self.expect(")")
            return Cond(test, then, orelse)
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        if len(args) != FUNCTIONS[name]:
            raise ParseError(
                f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}",
                name_tok.position,
            )
        return Call(name, tuple(args))

    def comparison(self) -> Compare:
        left = self.expr()
        tok = self.accept(*COMPARISONS)
        if tok is None:
            self.fail("expected a comparison operator")
        return Compare(tok.lexeme, left, self.expr())


def parse(tokens: list[Token]) -> Node:
    if not tokens:
        raise ParseError("empty expression", 0)
    return _Parser(list(tokens)).parse()


def parse_source(source: str) -> Node:
    return parse(tokenize(source))


def evaluate(ast: Node, bindings: Mapping[str, float]) -> float:
    return ast.evaluate(bindings)


def _children(node) -> Iterable:
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, (BinOp, Compare)):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    if isinstance(node, Cond):
        return (node.test, node.then, node.orelse)
    return ()


def walk(node):
    """Yield every node (and comparison) of the tree, parents first."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(tuple(_children(n))))


def free_variables(ast: Node) -> frozenset[str]:
    return frozenset(n.name for n in walk(ast) if isinstance(n, Var))


def branch_thresholds(ast: Node) -> list[float]:
    """Thresholds of comparisons of the form ``var <op> constant`` (either side).

    Comparisons whose sides both depend on variables are not solved for.
    """
    found = set()
    for n in walk(ast):
        if not isinstance(n, Compare):
            continue
        for var_side, const_side in ((n.left, n.right), (n.right, n.left)):
            if isinstance(var_side, Var) and not free_variables(const_side):
                try:
                    found.add(const_side.evaluate({}))
                except EvaluationError:
                    pass
    return sorted(found)


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _fmt(node) -> tuple[str, int]:
    if isinstance(node, Const):
        text = repr(node.value)
        return (f"({text})", _PREC["atom"]) if node.value < 0 else (text, _PREC["atom"])
    if isinstance(node, Var):
        return node.name, _PREC["atom"]
    if isinstance(node, Neg):
        text, p = _fmt(node.operand)
        if p < _PREC["neg"]:
            text = f"({text})"
        return f"-{text}", _PREC["neg"]
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        lt, lp = _fmt(node.left)
        rt, rp = _fmt(node.right)
        if node.op == "^":
            # right-associative; a signed base must be parenthesized
            if lp <= p:
                lt = f"({lt})"
            if rp < p:
                rt = f"({rt})"
        else:
            if lp < p:
                lt = f"({lt})"
            if rp <= p:
                rt = f"({rt})"
        return f"{lt} {node.op} {rt}", p
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})", _PREC["atom"]
    if isinstance(node, Cond):
        t = node.test
        return (
            f"if({to_source(t.left)} {t.op} {to_source(t.right)}, "
            f"{to_source(node.then)}, {to_source(node.orelse)})",
            _PREC["atom"],
        )
    raise TypeError(f"not an expression node: {node!r}")


def to_source(ast: Node) -> str:
    """Render an AST with the fewest parentheses that re-parse to the same tree."""
    return _fmt(ast)[0]


# --------------------------------------------------------------------------
# Formula: a parsed expression bound to a parameter list
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Formula:
    source: str
    ast: Node
    params: tuple[str, ...]

    @classmethod
    def compile(cls, source: str | float | int, params: Iterable[str]) -> "Formula":
        """Parse ``source``; raise ``ConfigError`` if it uses undeclared variables."""
        from .errors import ConfigError

        if isinstance(source, bool) or not isinstance(source, (str, int, float)):
            raise ConfigError(f"expression must be a string, got {source!r}")
        text = source if isinstance(source, str) else repr(float(source))
        params = tuple(params)
        ast = parse_source(text)
        stray = sorted(free_variables(ast) - set(params))
        if stray:
            raise ConfigError(
                f"expression {text!r} uses unknown variable(s) {', '.join(stray)}; "
                f"allowed: {', '.join(params)}"
            )
        return cls(text, ast, params)

    def __call__(self, *args: float) -> float:
        return self.ast.evaluate(dict(zip(self.params, args)))

    def thresholds(self) -> list[float]:
        return branch_thresholds(self.ast)

    def __str__(self):
        return self.source
