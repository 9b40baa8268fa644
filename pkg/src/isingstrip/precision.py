"""Scalar backends for matrix work.

Two modes are supported.  ``double`` stores matrices as float64 numpy arrays;
``extended`` stores them as numpy object arrays of :class:`gmpy2.mpfr` values.
mpfr arithmetic picks up the *current* gmpy2 context, so every routine that
does extended arithmetic runs inside ``prec.context()``.
"""
from __future__ import annotations

import math
from contextlib import nullcontext
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np

MIN_EXTENDED_DIGITS = 50


@dataclass(frozen=True)
class Precision:
    mode: str = "double"
    digits: int = MIN_EXTENDED_DIGITS

    def __post_init__(self):
        if self.mode not in ("double", "extended"):
            raise ValueError(f"unknown precision mode {self.mode!r}")
        if self.mode == "extended" and self.digits < MIN_EXTENDED_DIGITS:
            raise ValueError(f"extended mode needs at least {MIN_EXTENDED_DIGITS} digits")

    @property
    def extended(self) -> bool:
        return self.mode == "extended"

    @property
    def bits(self) -> int:
        return int(math.ceil(self.digits * math.log2(10))) + 16

    @property
    def default_tolerance(self) -> float:
        return 1e-35 if self.extended else 1e-9

    def context(self):
        if self.extended:
            return gmpy2.context(gmpy2.get_context(), precision=self.bits)
        return nullcontext()

    # -- scalars ---------------------------------------------------------
    def scalar(self, v):
        if not self.extended:
            return float(v)
        with self.context():
            if isinstance(v, Fraction):
                return gmpy2.mpfr(gmpy2.mpq(v.numerator, v.denominator))
            return gmpy2.mpfr(v)

    def pi(self):
        if not self.extended:
            return math.pi
        with self.context():
            return gmpy2.const_pi()

    def _fn(self, name, v):
        if not self.extended:
            return getattr(math, name)(v)
        with self.context():
            return getattr(gmpy2, name)(self.scalar(v))

    def sqrt(self, v):
        return self._fn("sqrt", v)

    def sin(self, v):
        return self._fn("sin", v)

    def cos(self, v):
        return self._fn("cos", v)

    def tan(self, v):
        return self._fn("tan", v)

    def asin(self, v):
        return self._fn("asin", v)

    def log(self, v):
        return self._fn("log", v)

    def cot(self, v):
        if not self.extended:
            return 1.0 / math.tan(v)
        with self.context():
            return gmpy2.cot(self.scalar(v))

    # -- arrays ----------------------------------------------------------
    def zeros(self, shape):
        if not self.extended:
            return np.zeros(shape)
        out = np.empty(shape, dtype=object)
        zero = self.scalar(0)
        out.fill(zero)
        return out

    def eye(self, n: int):
        out = self.zeros((n, n))
        one = self.scalar(1)
        for i in range(n):
            out[i, i] = one
        return out

    def asarray(self, values):
        """Convert nested numbers (ints, floats, Fractions) to a backend array."""
        arr = np.asarray(values, dtype=object)
        if not self.extended:
            return np.array([float(v) for v in arr.flat], dtype=float).reshape(arr.shape)
        out = np.empty(arr.shape, dtype=object)
        flat = out.reshape(-1)
        for i, v in enumerate(arr.flat):
            flat[i] = self.scalar(v)
        return out

    def solve(self, a, rhs):
        """Solve ``a @ X = rhs`` for a small square system with many right-hand sides."""
        if not self.extended:
            return np.linalg.solve(np.asarray(a, float), np.asarray(rhs, float))
        with self.context():
            n = a.shape[0]
            aug = np.concatenate([np.array(a, dtype=object), np.array(rhs, dtype=object)], axis=1)
            for col in range(n):
                piv = max(range(col, n), key=lambda r: abs(aug[r, col]))
                if aug[piv, col] == 0:
                    raise np.linalg.LinAlgError("singular matrix")
                if piv != col:
                    aug[[col, piv]] = aug[[piv, col]]
                for r in range(col + 1, n):
                    f = aug[r, col] / aug[col, col]
                    if f != 0:
                        aug[r, col:] = aug[r, col:] - f * aug[col, col:]
            sol = np.empty((n, aug.shape[1] - n), dtype=object)
            for r in range(n - 1, -1, -1):
                acc = aug[r, n:].copy()
                for c in range(r + 1, n):
                    acc = acc - aug[r, c] * sol[c]
                sol[r] = acc / aug[r, r]
            return sol

    def slogdet(self, a):
        """Sign and log|det| via LU with partial pivoting."""
        if not self.extended:
            return np.linalg.slogdet(np.asarray(a, float))
        with self.context():
            m = np.array(a, dtype=object)
            n = m.shape[0]
            sign = 1
            logdet = self.scalar(0)
            for col in range(n):
                piv = max(range(col, n), key=lambda r: abs(m[r, col]))
                if m[piv, col] == 0:
                    return 0, -math.inf
                if piv != col:
                    m[[col, piv]] = m[[piv, col]]
                    sign = -sign
                d = m[col, col]
                if d < 0:
                    sign = -sign
                logdet += gmpy2.log(abs(d))
                f = m[col + 1:, col] / d
                m[col + 1:, col:] = m[col + 1:, col:] - np.outer(f, m[col, col:])
            return sign, logdet


DOUBLE = Precision("double")


def extended(digits: int = MIN_EXTENDED_DIGITS) -> Precision:
    return Precision("extended", digits)


def max_abs(a) -> float:
    """Largest entry magnitude as a float (0.0 for an empty array)."""
    arr = np.asarray(a)
    if arr.size == 0:
        return 0.0
    if arr.dtype != object:
        return float(np.max(np.abs(arr)))
    return float(max(abs(v) for v in arr.flat))


def to_float(a) -> np.ndarray:
    return np.array(a, dtype=float)


def commutator(a, b):
    return a @ b - b @ a
