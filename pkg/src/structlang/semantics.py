"""Evaluator: expressions denote structures, queries denote lookups.

A Structure is an ordered map from role paths to symbol names.  Paths use
the same innermost-first storage as the syntax: the last atom is the
outermost (root-nearest) role.  Invariants maintained here:

  * no bound path is a proper suffix of another (a tree position cannot
    be both a leaf symbol and an internal node),
  * no duplicate paths,
  * the empty path, if present, is the only binding (a bare symbol).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import StructLangError
from .syntax import Bind, Expr, Query, RolePath, Sum, Sym


class EvalError(StructLangError):
    pass


class SumConflict(EvalError):
    def __init__(self, path_a: RolePath, path_b: RolePath):
        self.path_a = path_a
        self.path_b = path_b
        super().__init__(
            f"conflicting bindings in sum: path {_path_text(path_a)!r} "
            f"collides with {_path_text(path_b)!r}"
        )


class MissOperand(EvalError):
    def __init__(self) -> None:
        super().__init__("a sum operand evaluated to the miss value")


@dataclass(frozen=True)
class Miss:
    """Not-found query answer; prints as '$'."""


MISS = Miss()


@dataclass
class Structure:
    bindings: dict[RolePath, str] = field(default_factory=dict)

    def is_bare_symbol(self) -> bool:
        return list(self.bindings) == [()]

    def max_depth(self) -> int:
        return max((len(p) for p in self.bindings), default=0)


Value = Structure | Miss


def _path_text(path: RolePath) -> str:
    return ":".join(path) if path else "(empty)"


def _suffix_related(a: RolePath, b: RolePath) -> bool:
    # equal paths count as a conflict too
    shorter, longer = (a, b) if len(a) <= len(b) else (b, a)
    return longer[len(longer) - len(shorter) :] == shorter


def merge_bindings(parts: list[Structure]) -> Structure:
    """Union of bindings in order; SumConflict on any overlap or suffix clash."""
    merged: dict[RolePath, str] = {}
    for part in parts:
        for path, sym in part.bindings.items():
            for seen in merged:
                if _suffix_related(path, seen):
                    raise SumConflict(seen, path)
            merged[path] = sym
    return Structure(merged)


def unbind_one(s: Structure, role: str) -> Value:
    """Keep bindings whose outermost atom is `role`, with that atom removed.

    Bindings under other roles are dropped; no survivors means Miss.
    A bare-symbol binding has no outermost atom and never survives.
    """
    kept: dict[RolePath, str] = {}
    for path, sym in s.bindings.items():
        if path and path[-1] == role:
            kept[path[:-1]] = sym
    if not kept:
        return MISS
    return Structure(kept)


def evaluate(e: Expr) -> Value:
    if isinstance(e, Sym):
        return Structure({(): e.name})
    if isinstance(e, Bind):
        v = evaluate(e.child)
        if isinstance(v, Miss):
            return MISS
        return Structure({path + (e.role,): sym for path, sym in v.bindings.items()})
    if isinstance(e, Sum):
        left = evaluate(e.left)
        right = evaluate(e.right)
        if isinstance(left, Miss) or isinstance(right, Miss):
            raise MissOperand()
        return merge_bindings([left, right])
    if isinstance(e, Query):
        v = evaluate(e.subject)
        # peel the query path outermost-first; Miss absorbs
        for role in reversed(e.path):
            if isinstance(v, Miss):
                return MISS
            v = unbind_one(v, role)
        return v
    raise TypeError(f"not an Expr: {e!r}")


def print_value(v: Value) -> str:
    """Canonical value text; reparses and re-evaluates to the same value."""
    if isinstance(v, Miss):
        return "$"
    if not v.bindings:
        raise ValueError("cannot print an empty structure")
    parts = []
    for path, sym in v.bindings.items():
        parts.append(sym if not path else f"{sym}:{':'.join(path)}")
    return " + ".join(parts)
