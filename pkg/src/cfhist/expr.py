"""Small closed expression language for intensities, jump probabilities and rules.

Expressions are arithmetic over predictable states: numeric constants, variable
references, ``+``, ``-``, ``*``, comparisons (which evaluate to 0.0 or 1.0),
``min``/``max`` and parentheses.  The special name ``t`` refers to the
evaluation time.  Because the grammar is closed, the set of variables an
expression reads is known statically, and expressions serialize as text.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

TIME = "t"

_BINOPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*"}
_CMPOPS = {
    ast.Eq: "==",
    ast.NotEq: "!=",
    ast.Lt: "<",
    ast.LtE: "<=",
    ast.Gt: ">",
    ast.GtE: ">=",
}
_FUNCS = {"min": min, "max": max}


class ExpressionError(ValueError):
    pass


def _check(node: ast.AST, text: str) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, text)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"only numeric constants are allowed in {text!r}")
    elif isinstance(node, ast.Name):
        if node.id in _FUNCS:
            raise ExpressionError(f"{node.id!r} used as a variable in {text!r}")
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator not allowed in {text!r}")
        _check(node.left, text)
        _check(node.right, text)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError(f"unary operator not allowed in {text!r}")
        _check(node.operand, text)
    elif isinstance(node, ast.Compare):
        if len(node.ops) != 1 or type(node.ops[0]) not in _CMPOPS:
            raise ExpressionError(f"only single comparisons are allowed in {text!r}")
        _check(node.left, text)
        _check(node.comparators[0], text)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise ExpressionError(f"unknown function in {text!r}")
        if node.keywords or len(node.args) < 2:
            raise ExpressionError(f"min/max take two or more positional arguments in {text!r}")
        for arg in node.args:
            _check(arg, text)
    else:
        raise ExpressionError(f"unsupported syntax {type(node).__name__} in {text!r}")


def _names(node: ast.AST) -> set[str]:
    out = set()
    for sub in ast.walk(node):
        if isinstance(sub, ast.Name) and sub.id not in _FUNCS:
            out.add(sub.id)
    return out


def _emit(node: ast.AST, index: Mapping[str, int]) -> str:
    if isinstance(node, ast.Constant):
        return repr(float(node.value))
    if isinstance(node, ast.Name):
        if node.id == TIME:
            return "t"
        return f"s[{index[node.id]}]"
    if isinstance(node, ast.BinOp):
        op = _BINOPS[type(node.op)]
        return f"({_emit(node.left, index)} {op} {_emit(node.right, index)})"
    if isinstance(node, ast.UnaryOp):
        sign = "-" if isinstance(node.op, ast.USub) else "+"
        return f"({sign}{_emit(node.operand, index)})"
    if isinstance(node, ast.Compare):
        op = _CMPOPS[type(node.ops[0])]
        left = _emit(node.left, index)
        right = _emit(node.comparators[0], index)
        return f"(1.0 if {left} {op} {right} else 0.0)"
    if isinstance(node, ast.Call):
        args = ", ".join(_emit(a, index) for a in node.args)
        return f"{node.func.id}({args})"
    raise ExpressionError(f"cannot compile {type(node).__name__}")


def _walk_eval(node: ast.AST, env: Mapping[str, float], t: float) -> float:
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return t if node.id == TIME else float(env[node.id])
    if isinstance(node, ast.BinOp):
        a = _walk_eval(node.left, env, t)
        b = _walk_eval(node.right, env, t)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        return a * b
    if isinstance(node, ast.UnaryOp):
        v = _walk_eval(node.operand, env, t)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Compare):
        a = _walk_eval(node.left, env, t)
        b = _walk_eval(node.comparators[0], env, t)
        op = type(node.ops[0])
        res = {
            ast.Eq: a == b,
            ast.NotEq: a != b,
            ast.Lt: a < b,
            ast.LtE: a <= b,
            ast.Gt: a > b,
            ast.GtE: a >= b,
        }[op]
        return 1.0 if res else 0.0
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](*(_walk_eval(a, env, t) for a in node.args))
    raise ExpressionError(f"cannot evaluate {type(node).__name__}")


@dataclass(frozen=True)
class Expression:
    """A parsed expression.  Equality and hashing go by source text."""

    text: str
    names: frozenset[str] = field(init=False, compare=False)
    _tree: ast.Expression = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        text = str(self.text).strip()
        if not text:
            raise ExpressionError("empty expression")
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
        _check(tree, text)
        object.__setattr__(self, "text", text)
        object.__setattr__(self, "_tree", tree)
        object.__setattr__(self, "names", frozenset(_names(tree.body)))

    @property
    def reads(self) -> frozenset[str]:
        """State variables read (``t`` excluded)."""
        return self.names - {TIME}

    @property
    def is_constant(self) -> bool:
        return not self.names

    def evaluate(self, env: Mapping[str, float], t: float = 0.0) -> float:
        return _walk_eval(self._tree.body, env, t)

    def compile(self, index: Mapping[str, int]) -> Callable[[Sequence[float], float], float]:
        """Compile to ``f(state, t)`` where ``state[index[name]]`` holds each variable."""
        missing = self.reads - set(index)
        if missing:
            raise ExpressionError(f"{self.text!r} reads unknown variables {sorted(missing)}")
        src = f"lambda s, t: {_emit(self._tree.body, index)}"
        return eval(compile(src, f"<expr {self.text}>", "eval"), {"min": min, "max": max})

    def __str__(self) -> str:
        return self.text


class TracingState(list):
    """State vector that records which slots were read.

    Compiled expressions index the state with ``s[i]``; wrapping the state in
    this class captures the actual reads of the running code.
    """

    def __init__(self, values, reads: set[int] | None = None):
        super().__init__(values)
        self.reads = set() if reads is None else reads

    def __getitem__(self, i):
        self.reads.add(i)
        return list.__getitem__(self, i)
