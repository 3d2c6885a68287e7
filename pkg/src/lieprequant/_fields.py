"""Closed-form coefficient fields backed by sympy, evaluated with numpy."""
from __future__ import annotations

import functools
from typing import Sequence

import numpy as np
import sympy as sp


def coordinate_symbols(d: int) -> tuple[sp.Symbol, ...]:
    return tuple(sp.Symbol(f"x{i}", real=True) for i in range(d))


T = sp.Symbol("t", real=True)

_ALIASES = ("x", "y", "z", "u", "v", "w")


def parse_expr(text: str | float | int, d: int) -> sp.Expr:
    """Parse a coefficient string; ``x, y, z`` alias ``x0, x1, x2``."""
    syms = coordinate_symbols(d)
    local = {f"x{i}": s for i, s in enumerate(syms)}
    for alias, s in zip(_ALIASES, syms):
        local[alias] = s
    local["t"] = T
    return sp.sympify(text, locals=local)


class SymField:
    """A tensor-valued field whose entries are sympy expressions.

    Calling the field on an ``(n, d)`` array returns ``(n, *shape)``.  When the
    field is time dependent, call it as ``field(t, X)`` with ``t`` of shape
    ``(n,)``.
    """

    def __init__(self, array, symbols: Sequence[sp.Symbol], time_dependent: bool = False):
        self.array = sp.Array(array) if not isinstance(array, sp.NDimArray) else array
        self.symbols = tuple(symbols)
        self.time_dependent = time_dependent
        self.shape = tuple(self.array.shape)

    @property
    def dimension(self) -> int:
        return len(self.symbols)

    @functools.cached_property
    def _compiled(self):
        args = ((T,) if self.time_dependent else ()) + self.symbols
        flat = list(sp.flatten(self.array)) if self.shape else [self.array[()]]
        return sp.lambdify(args, flat, modules="numpy"), len(flat)

    def __call__(self, *args) -> np.ndarray:
        if self.time_dependent:
            t, X = args
        else:
            (X,) = args
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        fn, size = self._compiled
        cols = [X[:, i] for i in range(X.shape[1])]
        if self.time_dependent:
            cols = [np.broadcast_to(np.asarray(t, dtype=float), (n,))] + cols
        if size == 0:
            return np.zeros((n,) + self.shape)
        out = fn(*cols)
        out = np.stack([np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in out], axis=-1)
        return out.reshape((n,) + self.shape)

    def jacobian(self) -> "SymField":
        """Field of shape ``(d, *shape)`` holding the coordinate derivatives."""
        return SymField(sp.derive_by_array(self.array, self.symbols), self.symbols, self.time_dependent)

    def time_derivative(self) -> "SymField":
        return SymField(self.array.diff(T), self.symbols, self.time_dependent)

    def map(self, fn) -> "SymField":
        return SymField(self.array.applyfunc(fn), self.symbols, self.time_dependent)

    def scaled(self, factor) -> "SymField":
        return SymField(self.array * sp.sympify(factor), self.symbols, self.time_dependent)

    def __add__(self, other: "SymField") -> "SymField":
        return SymField(self.array + other.array, self.symbols, self.time_dependent)

    def is_zero(self) -> bool:
        return all(sp.simplify(e) == 0 for e in sp.flatten(self.array))

    def __repr__(self) -> str:
        return f"SymField(shape={self.shape}, d={self.dimension})"


def constant_field(values, d: int) -> SymField:
    return SymField(sp.Array(sp.sympify(np.asarray(values).tolist())), coordinate_symbols(d))


def zeros_field(shape: tuple[int, ...], d: int) -> SymField:
    if not shape:
        return SymField(sp.Array(0), coordinate_symbols(d))
    return SymField(sp.MutableDenseNDimArray.zeros(*shape).as_immutable(), coordinate_symbols(d))


def flat_points(X, d: int) -> np.ndarray:
    """Reshape ``(..., d)`` to ``(n, d)``; safe for ``d = 0``."""
    X = np.asarray(X, dtype=float)
    if d == 0:
        n = int(np.prod(X.shape[:-1])) if X.ndim >= 2 else 1
        return np.zeros((n, 0))
    return X.reshape(-1, d)
