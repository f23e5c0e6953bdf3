"""Entire functions represented by finite Taylor coefficient vectors.

Specs understood by :func:`builtin_function`::

    poly:c0,c1,...   explicit coefficients (complex literals allowed, e.g. 1+2j)
    monomial:n       z**n
    exp_trunc:N      sum_{k<=N} z**k / k!
    binom:n          (1 + z)**n
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError
from .numerics import circle_mean, log_circle_mean


@dataclass(frozen=True)
class EntireFunction:
    coeffs: tuple
    label: str = field(default="", compare=False)

    def __post_init__(self):
        c = tuple(complex(x) for x in self.coeffs)
        if not c:
            c = (0j,)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_coeffs(cls, coeffs, label: str = "") -> "EntireFunction":
        return cls(tuple(np.asarray(coeffs, dtype=complex).tolist()), label)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=complex)

    @property
    def degree(self) -> int:
        """Index of the last nonzero coefficient (0 for the zero function)."""
        nz = np.flatnonzero(self.array)
        return int(nz[-1]) if nz.size else 0

    def is_zero(self) -> bool:
        return not np.any(self.array)

    def is_constant(self) -> bool:
        return not np.any(self.array[1:])

    def __call__(self, z):
        return self.evaluate(z)

    def evaluate(self, z):
        """Horner evaluation at a point or array of points."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for c in reversed(self.coeffs):
            out = out * z + c
        return out[()]

    def derivative(self) -> "EntireFunction":
        c = self.array
        if c.size == 1:
            return EntireFunction((0j,), f"({self.label})'")
        return EntireFunction.from_coeffs(np.arange(1, c.size) * c[1:], f"({self.label})'")

    def __add__(self, other: "EntireFunction") -> "EntireFunction":
        a, b = self.array, other.array
        n = max(a.size, b.size)
        out = np.zeros(n, dtype=complex)
        out[: a.size] += a
        out[: b.size] += b
        return EntireFunction.from_coeffs(out, f"{self.label}+{other.label}")

    def scale(self, c: complex) -> "EntireFunction":
        return EntireFunction.from_coeffs(c * self.array, f"{c}*{self.label}")

    def circle_mean(self, r: float, q: float, n_nodes: int | None = None) -> float:
        return circle_mean(self, r, q, n_nodes)

    def log_circle_mean(self, r, q: float, n_nodes: int | None = None):
        return log_circle_mean(self, r, q, n_nodes)


def taylor_truncate(f: EntireFunction, M: int) -> EntireFunction:
    """The Taylor partial sum P_M f = sum_{k<=M} c_k z**k."""
    n = len(f.coeffs) - 1
    if not 0 <= M <= n:
        raise ValueError(f"M must lie in [0, {n}], got {M}")
    return EntireFunction(f.coeffs[: M + 1], f"P_{M}({f.label})")


def taylor_tail(f: EntireFunction, M: int) -> EntireFunction:
    """f - P_M f (the zero function when M >= degree)."""
    c = f.array.copy()
    c[: M + 1] = 0
    return EntireFunction.from_coeffs(c, f"({f.label})-P_{M}")


def _nonneg_int(token: str) -> int:
    try:
        n = int(token)
    except ValueError:
        raise ParseError(token, "expected a nonnegative integer") from None
    if n < 0:
        raise ParseError(token, "expected a nonnegative integer")
    return n


def builtin_function(spec: str) -> EntireFunction:
    kind, sep, arg = spec.strip().partition(":")
    if not sep:
        raise ParseError(spec, "function spec needs 'kind:argument'")
    if kind == "poly":
        coeffs = []
        for token in arg.split(","):
            try:
                coeffs.append(complex(token.strip().replace(" ", "")))
            except ValueError:
                raise ParseError(token, "bad polynomial coefficient") from None
        return EntireFunction(tuple(coeffs), spec)
    if kind == "monomial":
        n = _nonneg_int(arg)
        return EntireFunction((0,) * n + (1,), spec)
    if kind == "exp_trunc":
        n = _nonneg_int(arg)
        return EntireFunction(tuple(1 / math.factorial(k) for k in range(n + 1)), spec)
    if kind == "binom":
        n = _nonneg_int(arg)
        return EntireFunction(tuple(math.comb(n, k) for k in range(n + 1)), spec)
    raise ParseError(kind, "unknown function kind")
