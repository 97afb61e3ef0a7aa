"""Sandboxed expression evaluator for Eval blocks and transition conditions.

Scripts are a small Python subset parsed with :mod:`ast` and interpreted
directly, so flow files can do arithmetic, string work, and read/write the
execution scopes without any access to the host interpreter. A script is a
sequence of statements; the value of the last expression statement is the
script result (None when the script ends on an assignment).

Scope layout, in name-resolution order:

* ``notepad``     per-context scratch map, writable
* ``blackboard``  execution-global map, writable
* ``environment`` run configuration, read-only

Bare names resolve through notepad, then blackboard, then environment, then
the builtin aliases (true/false/null and the whitelisted functions). Dotted
access on a dict behaves like ``.get``: missing keys read as None instead of
raising, which keeps one-line conditions like ``notepad.result == null``
usable before the key exists. Writes must target ``notepad.x`` or
``blackboard.x`` (or a bare name, which lands on the notepad).
"""

from __future__ import annotations

import ast
import operator
from typing import Any

from .errors import ExpressionError

_MAX_SCRIPT_LEN = 10_000
_MAX_ITERATIONS = 100_000

_ALLOWED_CALLS: dict[str, Any] = {
    "len": len,
    "str": str,
    "int": int,
    "float": float,
    "bool": bool,
    "abs": abs,
    "min": min,
    "max": max,
    "round": round,
    "sum": sum,
}

_CONSTANT_ALIASES: dict[str, Any] = {
    "true": True,
    "false": False,
    "null": None,
    "True": True,
    "False": False,
    "None": None,
}

_BIN_OPS: dict[type, Any] = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.FloorDiv: operator.floordiv,
    ast.Mod: operator.mod,
    ast.Pow: operator.pow,
}

_COMPARE_OPS: dict[type, Any] = {
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
    ast.In: lambda a, b: a in b,
    ast.NotIn: lambda a, b: a not in b,
}

_UNARY_OPS: dict[type, Any] = {
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
    ast.Not: operator.not_,
}

_SCOPE_NAMES = ("notepad", "blackboard", "environment")
_WRITABLE_SCOPES = ("notepad", "blackboard")


class Evaluator:
    """Evaluates one script against the three scope dicts."""

    def __init__(self, environment: dict, blackboard: dict, notepad: dict):
        self.scopes: dict[str, dict] = {
            "environment": environment,
            "blackboard": blackboard,
            "notepad": notepad,
        }

    # -- entry point --------------------------------------------------------

    def run(self, source: str) -> Any:
        if not isinstance(source, str):
            raise ExpressionError("script must be a string")
        if len(source) > _MAX_SCRIPT_LEN:
            raise ExpressionError("script too long")
        try:
            tree = ast.parse(source, mode="exec")
        except SyntaxError as exc:
            raise ExpressionError(f"syntax error: {exc.msg}") from None
        result: Any = None
        for stmt in tree.body:
            result = self._exec_stmt(stmt)
        return result

    # -- statements ---------------------------------------------------------

    def _exec_stmt(self, stmt: ast.stmt) -> Any:
        if isinstance(stmt, ast.Expr):
            return self._eval(stmt.value)
        if isinstance(stmt, ast.Assign):
            if len(stmt.targets) != 1:
                raise ExpressionError("chained assignment is not supported")
            value = self._eval(stmt.value)
            self._assign(stmt.targets[0], value)
            return None
        if isinstance(stmt, ast.AugAssign):
            op = _BIN_OPS.get(type(stmt.op))
            if op is None:
                raise ExpressionError(f"operator {type(stmt.op).__name__} is not supported")
            current = self._eval(self._target_as_read(stmt.target))
            value = self._apply(op, current, self._eval(stmt.value))
            self._assign(stmt.target, value)
            return None
        if isinstance(stmt, ast.If):
            branch = stmt.body if self._truthy(self._eval(stmt.test)) else stmt.orelse
            result: Any = None
            for inner in branch:
                result = self._exec_stmt(inner)
            return result
        if isinstance(stmt, ast.Pass):
            return None
        raise ExpressionError(f"statement {type(stmt).__name__} is not supported")

    @staticmethod
    def _target_as_read(target: ast.expr) -> ast.expr:
        # AugAssign targets carry Store context; reuse them as loads.
        clone = ast.copy_location(
            ast.parse(ast.unparse(target), mode="eval").body, target
        )
        return clone

    def _assign(self, target: ast.expr, value: Any) -> None:
        if isinstance(target, ast.Name):
            if target.id in ("environment",) or target.id in _CONSTANT_ALIASES:
                raise ExpressionError(f"cannot assign to {target.id!r}")
            if target.id in _WRITABLE_SCOPES:
                raise ExpressionError(f"cannot replace scope {target.id!r}")
            self.scopes["notepad"][target.id] = value
            return
        if isinstance(target, ast.Attribute):
            container = self._resolve_write_container(target.value)
            container[target.attr] = value
            return
        if isinstance(target, ast.Subscript):
            container = self._resolve_write_container(target.value)
            key = self._eval(target.slice)
            if not isinstance(key, (str, int)):
                raise ExpressionError("subscript keys must be strings or integers")
            container[key] = value
            return
        raise ExpressionError("unsupported assignment target")

    def _resolve_write_container(self, node: ast.expr) -> dict:
        if isinstance(node, ast.Name):
            if node.id == "environment":
                raise ExpressionError("environment is read-only")
            if node.id in _WRITABLE_SCOPES:
                return self.scopes[node.id]
            raise ExpressionError(f"cannot write through {node.id!r}")
        value = self._eval(node)
        if isinstance(value, dict):
            return value
        raise ExpressionError("assignment target is not a map")

    # -- expressions --------------------------------------------------------

    def _eval(self, node: ast.expr) -> Any:
        if isinstance(node, ast.Constant):
            if isinstance(node.value, (str, int, float, bool)) or node.value is None:
                return node.value
            raise ExpressionError(f"literal {node.value!r} is not supported")
        if isinstance(node, ast.Name):
            return self._lookup(node.id)
        if isinstance(node, ast.Attribute):
            base = self._eval(node.value)
            if isinstance(base, dict):
                return base.get(node.attr)
            if base is None:
                return None
            raise ExpressionError(f"cannot read attribute {node.attr!r} of {type(base).__name__}")
        if isinstance(node, ast.Subscript):
            base = self._eval(node.value)
            key = self._eval(node.slice)
            return self._subscript(base, key)
        if isinstance(node, ast.BinOp):
            op = _BIN_OPS.get(type(node.op))
            if op is None:
                raise ExpressionError(f"operator {type(node.op).__name__} is not supported")
            return self._apply(op, self._eval(node.left), self._eval(node.right))
        if isinstance(node, ast.UnaryOp):
            op = _UNARY_OPS.get(type(node.op))
            if op is None:
                raise ExpressionError(f"operator {type(node.op).__name__} is not supported")
            return self._apply(op, self._eval(node.operand))
        if isinstance(node, ast.BoolOp):
            values = node.values
            if isinstance(node.op, ast.And):
                result: Any = True
                for sub in values:
                    result = self._eval(sub)
                    if not self._truthy(result):
                        return result
                return result
            for sub in values:
                result = self._eval(sub)
                if self._truthy(result):
                    return result
            return result
        if isinstance(node, ast.Compare):
            left = self._eval(node.left)
            for op_node, right_node in zip(node.ops, node.comparators):
                op = _COMPARE_OPS.get(type(op_node))
                if op is None:
                    raise ExpressionError(f"comparison {type(op_node).__name__} is not supported")
                right = self._eval(right_node)
                if not self._apply(op, left, right):
                    return False
                left = right
            return True
        if isinstance(node, ast.IfExp):
            if self._truthy(self._eval(node.test)):
                return self._eval(node.body)
            return self._eval(node.orelse)
        if isinstance(node, ast.Call):
            return self._call(node)
        if isinstance(node, ast.List):
            return [self._eval(e) for e in node.elts]
        if isinstance(node, ast.Dict):
            out = {}
            for k, v in zip(node.keys, node.values):
                if k is None:
                    raise ExpressionError("dict unpacking is not supported")
                key = self._eval(k)
                if not isinstance(key, (str, int)):
                    raise ExpressionError("dict keys must be strings or integers")
                out[key] = self._eval(v)
            return out
        if isinstance(node, ast.JoinedStr):
            parts = []
            for piece in node.values:
                if isinstance(piece, ast.FormattedValue):
                    parts.append(_stringify(self._eval(piece.value)))
                else:
                    parts.append(str(self._eval(piece)))
            return "".join(parts)
        if isinstance(node, ast.FormattedValue):
            return _stringify(self._eval(node.value))
        raise ExpressionError(f"expression {type(node).__name__} is not supported")

    def _call(self, node: ast.Call) -> Any:
        if node.keywords:
            raise ExpressionError("keyword arguments are not supported")
        if not isinstance(node.func, ast.Name):
            raise ExpressionError("only builtin functions may be called")
        fn = _ALLOWED_CALLS.get(node.func.id)
        if fn is None:
            raise ExpressionError(f"function {node.func.id!r} is not available")
        args = [self._eval(a) for a in node.args]
        return self._apply(fn, *args)

    def _lookup(self, name: str) -> Any:
        if name in _SCOPE_NAMES:
            return self.scopes[name]
        for scope in ("notepad", "blackboard", "environment"):
            if name in self.scopes[scope]:
                return self.scopes[scope][name]
        if name in _CONSTANT_ALIASES:
            return _CONSTANT_ALIASES[name]
        if name in _ALLOWED_CALLS:
            raise ExpressionError(f"{name!r} is a function; call it")
        raise ExpressionError(f"unknown name {name!r}")

    def _subscript(self, base: Any, key: Any) -> Any:
        if isinstance(base, dict):
            if not isinstance(key, (str, int)):
                raise ExpressionError("map keys must be strings or integers")
            return base.get(key)
        if isinstance(base, (list, str)):
            if not isinstance(key, int) or isinstance(key, bool):
                raise ExpressionError("sequence index must be an integer")
            try:
                return base[key]
            except IndexError:
                raise ExpressionError("sequence index out of range") from None
        if base is None:
            return None
        raise ExpressionError(f"cannot index {type(base).__name__}")

    @staticmethod
    def _truthy(value: Any) -> bool:
        return bool(value)

    @staticmethod
    def _apply(fn: Any, *args: Any) -> Any:
        try:
            return fn(*args)
        except ExpressionError:
            raise
        except ZeroDivisionError:
            raise ExpressionError("division by zero") from None
        except (TypeError, ValueError) as exc:
            raise ExpressionError(str(exc)) from None


def evaluate(source: str, environment: dict, blackboard: dict, notepad: dict) -> Any:
    """Run ``source`` and return the value of its final expression."""
    return Evaluator(environment, blackboard, notepad).run(source)


def _stringify(value: Any) -> str:
    from .model import stringify_result

    return stringify_result(value)
