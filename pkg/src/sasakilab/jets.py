"""Truncated multivariate Taylor arithmetic.

A jet field is stored as an array whose first axis runs over Taylor
coefficients (multi-indices of total degree <= order, graded by degree) and
whose trailing axes are arbitrary: typically ``(points, *tensor_indices)``.
The coefficient of multi-index ``a`` is ``d^a f / a!``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

MAX_ORDER = 4


class JetDomainError(ArithmeticError):
    """An elementary function was evaluated outside its domain."""


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices of total degree <= order, graded then lexicographic."""
    out = []
    for deg in range(order + 1):
        layer = []
        for combo in combinations_with_replacement(range(dim), deg):
            alpha = [0] * dim
            for i in combo:
                alpha[i] += 1
            layer.append(tuple(alpha))
        out.extend(sorted(layer, reverse=True))
    return out


def ncoef(dim: int, order: int) -> int:
    return math.comb(dim + order, order)


class JetAlgebra:
    """Index tables for products and derivatives of jets in ``dim`` variables."""

    def __init__(self, dim: int, order: int):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
        self.dim = dim
        self.order = order
        self.alphas = multi_indices(dim, order)
        self.position = {a: i for i, a in enumerate(self.alphas)}
        self.factorials = np.array(
            [math.prod(math.factorial(k) for k in a) for a in self.alphas], dtype=float
        )
        self._pairs = {}
        self._derivs = {}

    def size(self, order: int) -> int:
        return ncoef(self.dim, order)

    def unit(self, i: int) -> tuple[int, ...]:
        return tuple(1 if j == i else 0 for j in range(self.dim))

    def _pair_table(self, order: int):
        if order not in self._pairs:
            m = self.size(order)
            ia, ib, ic = [], [], []
            for p, a in enumerate(self.alphas[:m]):
                for q, b in enumerate(self.alphas[:m]):
                    c = tuple(x + y for x, y in zip(a, b))
                    if sum(c) <= order:
                        ia.append(p)
                        ib.append(q)
                        ic.append(self.position[c])
            scatter = np.zeros((m, len(ic)))
            scatter[ic, np.arange(len(ic))] = 1.0
            self._pairs[order] = (np.array(ia), np.array(ib), scatter)
        return self._pairs[order]

    def _deriv_table(self, order: int, i: int):
        key = (order, i)
        if key not in self._derivs:
            m = self.size(order - 1)
            src, fac = [], []
            for b in self.alphas[:m]:
                c = list(b)
                c[i] += 1
                src.append(self.position[tuple(c)])
                fac.append(b[i] + 1.0)
            self._derivs[key] = (np.array(src), np.array(fac))
        return self._derivs[key]

    # -- arithmetic -------------------------------------------------------

    def mul(self, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
        """Elementwise (broadcast) product of two jets truncated at ``order``."""
        ia, ib, scatter = self._pair_table(order)
        prod = a[ia] * b[ib]
        shape = prod.shape[1:]
        return (scatter @ prod.reshape(len(ia), -1)).reshape((scatter.shape[0],) + shape)

    def einsum(self, subscripts: str, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
        """Tensor contraction of two jet fields sharing a point axis.

        ``subscripts`` names only the tensor indices, e.g. ``"ij,jk->ik"``.
        """
        ia, ib, scatter = self._pair_table(order)
        lhs, out = subscripts.split("->")
        sa, sb = lhs.split(",")
        prod = np.einsum(f"tZ{sa},tZ{sb}->tZ{out}", a[ia], b[ib], optimize=True)
        shape = prod.shape[1:]
        return (scatter @ prod.reshape(len(ia), -1)).reshape((scatter.shape[0],) + shape)

    def truncate(self, a: np.ndarray, order: int) -> np.ndarray:
        return a[: self.size(order)]

    def deriv(self, a: np.ndarray, i: int, order: int) -> np.ndarray:
        """Partial derivative in variable ``i`` of a jet of the given order."""
        if order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self._deriv_table(order, i)
        return a[src] * fac.reshape((-1,) + (1,) * (a.ndim - 1))

    def grad(self, a: np.ndarray, order: int) -> np.ndarray:
        """Stack of all partials; the new derivative axis sits after the point axis."""
        parts = [self.deriv(a, i, order) for i in range(self.dim)]
        return np.stack(parts, axis=2)

    def constant(self, value, order: int) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        out = np.zeros((self.size(order),) + value.shape)
        out[0] = value
        return out

    def variable(self, values: np.ndarray, i: int, order: int) -> np.ndarray:
        """Jet of coordinate ``i`` at the given points (shape (P,))."""
        out = self.constant(values, order)
        if order >= 1:
            out[self.position[self.unit(i)]] = 1.0
        return out

    def compose(self, u: np.ndarray, taylor: list[np.ndarray], order: int) -> np.ndarray:
        """Evaluate sum_m taylor[m] * (u - u0)^m, with taylor[m] = f^(m)(u0)/m!."""
        h = u[: self.size(order)].copy()
        h[0] = 0.0
        out = self.constant(taylor[0], order)
        power = h
        for m in range(1, order + 1):
            out = out + taylor[m] * power
            if m < order:
                power = self.mul(power, h, order)
        return out

    # -- elementary functions ----------------------------------------------

    def apply(self, name: str, u: np.ndarray, order: int) -> np.ndarray:
        u0 = u[0]
        return self.compose(u, _taylor_coefficients(name, u0, order), order)

    def reciprocal(self, u: np.ndarray, order: int) -> np.ndarray:
        return self.apply("recip", u, order)

    def div(self, a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
        return self.mul(a, self.reciprocal(b, order), order)

    def real_power(self, u: np.ndarray, p: float, order: int) -> np.ndarray:
        u0 = u[0]
        if np.any(u0 <= 0.0):
            raise JetDomainError(f"non-integer power {p!r} of a nonpositive base")
        coeffs = [_binom(p, m) * u0 ** (p - m) for m in range(order + 1)]
        return self.compose(u, coeffs, order)

    def int_power(self, u: np.ndarray, k: int, order: int) -> np.ndarray:
        if k < 0:
            return self.int_power(self.reciprocal(u, order), -k, order)
        out = self.constant(np.ones_like(u[0]), order)
        base = u[: self.size(order)]
        while k:
            if k & 1:
                out = self.mul(out, base, order)
            k >>= 1
            if k:
                base = self.mul(base, base, order)
        return out


def _binom(p: float, m: int) -> float:
    out = 1.0
    for j in range(m):
        out *= (p - j) / (j + 1)
    return out


def _taylor_coefficients(name: str, u0: np.ndarray, order: int) -> list[np.ndarray]:
    fact = [math.factorial(m) for m in range(order + 1)]
    if name == "exp":
        e = np.exp(u0)
        return [e / fact[m] for m in range(order + 1)]
    if name in ("sin", "cos"):
        s, c = np.sin(u0), np.cos(u0)
        cycle = [s, c, -s, -c] if name == "sin" else [c, -s, -c, s]
        return [cycle[m % 4] / fact[m] for m in range(order + 1)]
    if name in ("sinh", "cosh"):
        s, c = np.sinh(u0), np.cosh(u0)
        cycle = [s, c] if name == "sinh" else [c, s]
        return [cycle[m % 2] / fact[m] for m in range(order + 1)]
    if name == "log":
        if np.any(u0 <= 0.0):
            raise JetDomainError("log of a nonpositive value")
        return [np.log(u0)] + [(-1.0) ** (m + 1) / (m * u0**m) for m in range(1, order + 1)]
    if name == "sqrt":
        if np.any(u0 < 0.0):
            raise JetDomainError("sqrt of a negative value")
        if order >= 1 and np.any(u0 == 0.0):
            raise JetDomainError("sqrt is not differentiable at 0")
        return [_binom(0.5, m) * np.sqrt(u0) / np.where(u0 == 0, 1.0, u0) ** m for m in range(order + 1)]
    if name == "recip":
        if np.any(u0 == 0.0):
            raise JetDomainError("division by zero")
        return [(-1.0) ** m / u0 ** (m + 1) for m in range(order + 1)]
    raise KeyError(name)


@lru_cache(maxsize=None)
def algebra(dim: int, order: int) -> JetAlgebra:
    return JetAlgebra(dim, order)


@dataclass(frozen=True)
class Jet:
    """Value and all partial derivatives up to ``order`` of a scalar at one point."""

    order: int
    dim: int
    coefficients: np.ndarray  # Taylor coefficients, graded multi-index order

    @property
    def value(self) -> float:
        return float(self.coefficients[0])

    def partial(self, *indices: int) -> float:
        """Mixed partial derivative, e.g. ``partial(0, 1)`` is d^2/dx0 dx1."""
        if len(indices) > self.order:
            raise ValueError(f"jet of order {self.order} has no derivative of order {len(indices)}")
        alg = algebra(self.dim, self.order)
        alpha = [0] * self.dim
        for i in indices:
            alpha[i] += 1
        pos = alg.position[tuple(alpha)]
        return float(self.coefficients[pos] * alg.factorials[pos])

    def table(self, k: int) -> np.ndarray:
        """Symmetric array of all k-th order partial derivatives."""
        out = np.empty((self.dim,) * k)
        for idx in np.ndindex(*out.shape):
            out[idx] = self.partial(*idx)
        return out

    def truncate(self, order: int) -> "Jet":
        n = ncoef(self.dim, order)
        return Jet(order, self.dim, self.coefficients[:n].copy())
