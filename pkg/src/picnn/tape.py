"""Reverse-mode automatic differentiation over numpy-array-valued scalars.

A Tape records elementary array operations in topological order; Tensor is a
thin handle around an ndarray value plus the vector-Jacobian closures needed
for the reverse sweep. Everything is deterministic: the same inputs replay to
bit-identical values and gradients.
"""
from __future__ import annotations

import numpy as np
from scipy.special import erf as _sp_erf

__all__ = ["Tape", "Tensor", "TapeError", "grad_params"]


class TapeError(RuntimeError):
    pass


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad down to `shape` (inverse of numpy broadcasting)."""
    grad = np.asarray(grad)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


class Tape:
    """Append-only record of operations; parents always precede children."""

    def __init__(self):
        self.nodes: list[Tensor] = []
        self.root: Tensor | None = None

    def _register(self, t: "Tensor"):
        t.idx = len(self.nodes)
        self.nodes.append(t)

    def leaf(self, value, name: str = "leaf") -> "Tensor":
        return Tensor(np.asarray(value, dtype=float), self, parents=(), vjps=(), op=name)

    def finalize(self, root: "Tensor"):
        if self.root is not None:
            raise TapeError("tape already finalized with a root")
        if root.tape is not self:
            raise TapeError("root does not belong to this tape")
        if root.value.size != 1:
            raise TapeError("root must be a scalar")
        self.root = root

    def backward(self, root: "Tensor" = None) -> None:
        """Reverse accumulation from a scalar root; fills Tensor.grad."""
        if root is None:
            root = self.root
        if root is None:
            raise TapeError("no root: finalize the tape or pass one explicitly")
        if root.value.size != 1:
            raise TapeError("backward root must be a scalar")
        adj = {root.idx: np.ones_like(root.value)}
        for node in reversed(self.nodes[: root.idx + 1]):
            g = adj.pop(node.idx, None)
            if g is None:
                continue
            node.grad = g if node.grad is None else node.grad + g
            for parent, vjp in zip(node.parents, node.vjps):
                contrib = vjp(g)
                if parent.idx in adj:
                    adj[parent.idx] = adj[parent.idx] + contrib
                else:
                    adj[parent.idx] = contrib


class Tensor:
    __slots__ = ("value", "tape", "parents", "vjps", "op", "idx", "grad")

    # make numpy defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, value, tape: Tape, parents=(), vjps=(), op="leaf"):
        self.value = np.asarray(value, dtype=float)
        self.tape = tape
        self.parents = parents
        self.vjps = vjps
        self.op = op
        self.grad = None
        tape._register(self)

    # -- helpers ---------------------------------------------------------
    def _coerce(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return self.tape.leaf(other, name="const")

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.value.shape})"

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        return Tensor(
            self.value + o.value, self.tape, (self, o),
            (lambda g: _unbroadcast(g, self.shape), lambda g: _unbroadcast(g, o.shape)),
            "add")

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.value, self.tape, (self,), (lambda g: -g,), "neg")

    def __sub__(self, other):
        o = self._coerce(other)
        return Tensor(
            self.value - o.value, self.tape, (self, o),
            (lambda g: _unbroadcast(g, self.shape), lambda g: _unbroadcast(-g, o.shape)),
            "sub")

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return Tensor(
            self.value * o.value, self.tape, (self, o),
            (lambda g: _unbroadcast(g * o.value, self.shape),
             lambda g: _unbroadcast(g * self.value, o.shape)),
            "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if np.any(np.abs(o.value) < 1e-300):
            raise ZeroDivisionError("division by (near-)zero tensor")
        return Tensor(
            self.value / o.value, self.tape, (self, o),
            (lambda g: _unbroadcast(g / o.value, self.shape),
             lambda g: _unbroadcast(-g * self.value / o.value**2, o.shape)),
            "div")

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, c):
        if isinstance(c, Tensor):
            raise TypeError("only constant exponents are supported")
        c = float(c)
        return Tensor(
            self.value**c, self.tape, (self,),
            (lambda g: g * c * self.value**(c - 1.0),),
            "pow_const")

    def __matmul__(self, other):
        o = self._coerce(other)
        a, b = self.value, o.value

        def vjp_a(g):
            if a.ndim == 2 and b.ndim == 1:
                return np.outer(g, b)
            if a.ndim == 1 and b.ndim == 1:
                return g * b
            return g @ b.T

        def vjp_b(g):
            if a.ndim == 1 and b.ndim == 2:
                return np.outer(a, g)
            if a.ndim == 1 and b.ndim == 1:
                return g * a
            return a.T @ g

        return Tensor(a @ b, self.tape, (self, o), (vjp_a, vjp_b), "matmul")

    def __rmatmul__(self, other):
        return self._coerce(other) @ self

    # -- shape ops -------------------------------------------------------
    def t(self):
        return Tensor(self.value.T, self.tape, (self,), (lambda g: g.T,), "transpose")

    def reshape(self, *shape):
        old = self.shape
        return Tensor(self.value.reshape(*shape), self.tape, (self,),
                      (lambda g: g.reshape(old),), "reshape")

    def sum(self):
        return Tensor(self.value.sum(), self.tape, (self,),
                      (lambda g: g * np.ones_like(self.value),), "sum")

    def mean(self):
        n = self.value.size
        return Tensor(self.value.mean(), self.tape, (self,),
                      (lambda g: g * np.ones_like(self.value) / n,), "mean")

    # -- elementary functions -------------------------------------------
    def exp(self):
        y = np.exp(self.value)
        return Tensor(y, self.tape, (self,), (lambda g: g * y,), "exp")

    def log(self):
        if np.any(self.value < 1e-300):
            raise ValueError("log of nonpositive tensor")
        return Tensor(np.log(self.value), self.tape, (self,),
                      (lambda g: g / self.value,), "log")

    def sin(self):
        return Tensor(np.sin(self.value), self.tape, (self,),
                      (lambda g: g * np.cos(self.value),), "sin")

    def cos(self):
        return Tensor(np.cos(self.value), self.tape, (self,),
                      (lambda g: -g * np.sin(self.value),), "cos")

    def sqrt(self):
        y = np.sqrt(self.value)
        return Tensor(y, self.tape, (self,), (lambda g: g * 0.5 / y,), "sqrt")

    def erf(self):
        c = 2.0 / np.sqrt(np.pi)
        return Tensor(_sp_erf(self.value), self.tape, (self,),
                      (lambda g: g * c * np.exp(-self.value**2),), "erf")

    def relu(self):
        mask = (self.value > 0).astype(float)
        return Tensor(self.value * mask, self.tape, (self,),
                      (lambda g: g * mask,), "relu")


def grad_params(loss: Tensor, params: list) -> np.ndarray:
    """Gradient of a scalar loss w.r.t. a list of leaf tensors, flattened.

    The tape must have exactly one scalar root, namely `loss`; re-finalizing
    a tape raises.
    """
    loss.tape.finalize(loss)
    loss.tape.backward()
    out = []
    for p in params:
        g = p.grad if p.grad is not None else np.zeros_like(p.value)
        out.append(np.asarray(g, dtype=float).ravel())
    return np.concatenate(out) if out else np.zeros(0)
