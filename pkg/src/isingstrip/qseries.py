"""Exact q-series in powers of q^(1/2), the finitized characters and the partition-function check.

Exponents are stored doubled: key 3 means q^(3/2).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .free_energy import PRINTED_VARIANT, VARIANTS, boundary_energy, f_bulk
from .lattice import SpinBasis, SpectralPoint, transfer_matrix

PLUS, MINUS = "+", "-"
DEFAULT_TRUNCATION = 40
MAX_ENUMERATION_L = 20

VIRASORO_PLUS = (1, 0, 1, 1, 2, 2, 3, 3, 5, 5, 7, 8, 11, 12)
VIRASORO_MINUS = (1, 1, 1, 1, 2, 2, 3, 4, 5, 6, 8, 9)


@dataclass
class QSeries:
    """sum_e coeffs[e] q^(e/2), exponents e <= truncation (None keeps everything)."""

    coeffs: dict[int, int] = field(default_factory=dict)
    truncation: int | None = None

    def __post_init__(self):
        self.coeffs = {
            e: int(c) for e, c in self.coeffs.items() if c != 0 and (self.truncation is None or e <= self.truncation)
        }

    @classmethod
    def one(cls, truncation=None) -> QSeries:
        return cls({0: 1}, truncation)

    @classmethod
    def monomial(cls, doubled_exp: int, coeff: int = 1, truncation=None) -> QSeries:
        return cls({doubled_exp: coeff}, truncation)

    def _trunc(self, other: QSeries):
        ts = [t for t in (self.truncation, other.truncation) if t is not None]
        return min(ts) if ts else None

    def __add__(self, other: QSeries) -> QSeries:
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return QSeries(out, self._trunc(other))

    def __neg__(self) -> QSeries:
        return QSeries({e: -c for e, c in self.coeffs.items()}, self.truncation)

    def __sub__(self, other: QSeries) -> QSeries:
        return self + (-other)

    def __mul__(self, other) -> QSeries:
        if isinstance(other, int):
            return QSeries({e: c * other for e, c in self.coeffs.items()}, self.truncation)
        t = self._trunc(other)
        out: dict[int, int] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = e1 + e2
                if t is None or e <= t:
                    out[e] = out.get(e, 0) + c1 * c2
        return QSeries(out, t)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        t = self._trunc(other)
        a = {e: c for e, c in self.coeffs.items() if t is None or e <= t}
        b = {e: c for e, c in other.coeffs.items() if t is None or e <= t}
        return a == b

    def exact_div(self, other: QSeries) -> QSeries:
        """Polynomial long division that must leave no remainder (untruncated operands)."""
        if self.truncation is not None or other.truncation is not None:
            raise ValueError("exact division needs untruncated polynomials")
        if not other.coeffs:
            raise ZeroDivisionError("division by zero series")
        rem = dict(self.coeffs)
        lo = min(other.coeffs)
        lead = other.coeffs[lo]
        out: dict[int, int] = {}
        while rem:
            e = min(rem)
            q, r = divmod(rem[e], lead)
            if r:
                raise ArithmeticError("non-exact q-series division")
            shift = e - lo
            if shift < 0:
                raise ArithmeticError("non-exact q-series division")
            out[shift] = q
            for e2, c2 in other.coeffs.items():
                k = shift + e2
                v = rem.get(k, 0) - q * c2
                if v:
                    rem[k] = v
                else:
                    rem.pop(k, None)
        return QSeries(out)

    def truncate(self, truncation: int) -> QSeries:
        return QSeries(self.coeffs, truncation if self.truncation is None else min(truncation, self.truncation))

    def coefficient(self, doubled_exp: int) -> int:
        return self.coeffs.get(doubled_exp, 0)

    def at_one(self) -> int:
        return sum(self.coeffs.values())

    def min_exponent(self) -> int | None:
        return min(self.coeffs) if self.coeffs else None

    def evaluate(self, q: float) -> float:
        return float(sum(c * q ** (e / 2) for e, c in self.coeffs.items()))

    def log_evaluate(self, q: float) -> float:
        """log of the series at 0 < q < 1, factoring out the leading power."""
        e0 = self.min_exponent()
        rest = sum(c * q ** ((e - e0) / 2) for e, c in self.coeffs.items())
        return e0 / 2 * math.log(q) + math.log(rest)

    def items(self) -> list[tuple[int, int]]:
        return sorted(self.coeffs.items())


def _q_power_minus(n: int) -> QSeries:
    """1 - q^n (exponents doubled)."""
    return QSeries({0: 1, 2 * n: -1})


def qbinom(n: int, m: int) -> QSeries:
    """Gaussian binomial [n choose m]_q; zero for m > n (the product then contains 1 - q^0)."""
    if n < 0 or m < 0:
        raise ValueError("need n, m >= 0")
    if m > n:
        return QSeries({})
    num, den = QSeries.one(), QSeries.one()
    for i in range(m):
        num = num * _q_power_minus(n - i)
        den = den * _q_power_minus(i + 1)
    return num.exact_div(den)


def _check_sector(sector: str):
    if sector not in (PLUS, MINUS):
        raise ValueError("sector must be '+' or '-'")


def sector_for_b(b: int) -> str:
    return PLUS if b == 1 else MINUS


def char_partition(L: int, sector: str, truncation: int | None = DEFAULT_TRUNCATION, max_L: int = MAX_ENUMERATION_L) -> QSeries:
    """Sum over subsets P of {1..L+1} (even size for '+', odd for '-') of q^(sum_{j in P} (j - 1/2))."""
    _check_sector(sector)
    if L > max_L:
        raise ValueError(f"L={L} exceeds the enumeration limit {max_L}")
    want = 0 if sector == PLUS else 1
    out: dict[int, int] = {}
    for p in range(want, L + 2, 2):
        for P in itertools.combinations(range(1, L + 2), p):
            e = sum(2 * j - 1 for j in P)
            if truncation is None or e <= truncation:
                out[e] = out.get(e, 0) + 1
    return QSeries(out, truncation)


def char_fermionic(L: int, sector: str, truncation: int | None = DEFAULT_TRUNCATION) -> QSeries:
    _check_sector(sector)
    total = QSeries({}, truncation)
    if sector == PLUS:
        for m in range((L + 1) // 2 + 1):
            total = total + QSeries.monomial(4 * m * m, 1, truncation) * qbinom(L + 1, 2 * m)
    else:
        for m in range(1, (L + 1) // 2 + 2):
            total = total + QSeries.monomial(4 * m * m - 4 * m + 1, 1, truncation) * qbinom(L + 1, 2 * m - 1)
    return total


def char_bosonic(L: int, sector: str, truncation: int | None = DEFAULT_TRUNCATION) -> QSeries:
    """(1/2)(prod (1 + q^(k-1/2)) +- prod (1 - q^(k-1/2)))."""
    _check_sector(sector)
    plus, minus = QSeries.one(truncation), QSeries.one(truncation)
    for k in range(1, L + 2):
        plus = plus * QSeries({0: 1, 2 * k - 1: 1}, truncation)
        minus = minus * QSeries({0: 1, 2 * k - 1: -1}, truncation)
    both = plus + minus if sector == PLUS else plus - minus
    halves = {}
    for e, c in both.coeffs.items():
        if c % 2:
            raise ArithmeticError("bosonic form produced an odd coefficient")
        halves[e] = c // 2
    return QSeries(halves, truncation)


def virasoro_limit(sector: str, order: int) -> QSeries:
    """Limit character through q^(order/2) (doubled exponent ``order``)."""
    _check_sector(sector)
    L = max(order, 1)
    return char_bosonic(L, sector, order)


def virasoro_printed(sector: str) -> QSeries:
    """The printed leading coefficients of the two limiting characters."""
    _check_sector(sector)
    if sector == PLUS:
        return QSeries({2 * i: c for i, c in enumerate(VIRASORO_PLUS)}, 2 * (len(VIRASORO_PLUS) - 1))
    return QSeries({2 * i + 1: c for i, c in enumerate(VIRASORO_MINUS)}, 2 * len(VIRASORO_MINUS) - 1)


# -- partition-function asymptotics ---------------------------------------------

def log_trace_power(T: np.ndarray, M: int) -> float:
    """log Tr T^M by binary powering with per-step normalization."""
    if M < 1:
        raise ValueError("M must be >= 1")
    n = T.shape[0]
    result, log_r = np.eye(n), 0.0
    base, log_b = np.array(T, dtype=float), 0.0
    k = M
    while k:
        if k & 1:
            result = result @ base
            s = np.max(np.abs(result))
            result, log_r = result / s, log_r + log_b + math.log(s)
        k >>= 1
        if k:
            base = base @ base
            s = np.max(np.abs(base))
            base, log_b = base / s, 2 * log_b + math.log(s)
    tr = np.trace(result)
    if tr <= 0:
        raise ArithmeticError("trace of T^M is not positive")
    return log_r + math.log(tr)


def modular_q(L: int, M: int, x, variant: str = PRINTED_VARIANT) -> float:
    """exp(-c pi M / ((2L+3) x)) with c = 1 printed, c = 2 corrected."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    c = 1 if variant == PRINTED_VARIANT else 2
    return math.exp(-c * math.pi * M / ((2 * L + 3) * float(x)))


@dataclass
class PartitionFunctionReport:
    L: int
    M: int
    b: int
    u: float
    x: float
    variant: str
    q: float
    log_z: float
    log_z_asymptotic: float

    @property
    def deviation(self) -> float:
        return abs(self.log_z - self.log_z_asymptotic)


def partition_function_check(L: int, M: int, b: int, u: float, variant: str = PRINTED_VARIANT) -> PartitionFunctionReport:
    """Compare log Tr T^M with log(Z_div q^(-1/48) chi(q)).

    ``variant`` selects both the boundary free energy and the modular
    parameter (printed forms, or the corrected ones).
    """
    if not 0 < u < math.pi / 8:
        raise ValueError("u must lie in (0, pi/8)")
    if M < 1:
        raise ValueError("M must be >= 1")
    x = float(SpectralPoint.from_u(u).x)
    T = transfer_matrix(SpinBasis(L, b), x)
    log_z = log_trace_power(T, M)
    q = modular_q(L, M, x, variant)
    log_div = -2 * M * (2 * L + 3) * float(f_bulk(x)) - M * float(boundary_energy(x, variant))
    chi = char_partition(L, sector_for_b(b), truncation=None)
    asym = log_div - math.log(q) / 48 + chi.log_evaluate(q)
    return PartitionFunctionReport(L, M, b, u, x, variant, q, log_z, asym)


@dataclass
class TrendReport:
    ratio: int
    b: int
    u: float
    variant: str
    reports: list[PartitionFunctionReport]

    @property
    def deviations(self) -> list[float]:
        return [r.deviation for r in self.reports]

    @property
    def monotone(self) -> bool:
        d = self.deviations
        return all(b < a for a, b in zip(d, d[1:]))


def partition_function_trend(
    Ls=(1, 2, 4, 8), ratio: int = 2, b: int = 1, u: float = 0.1, variant: str = PRINTED_VARIANT
) -> TrendReport:
    """Deviation along (L, M = ratio L) doublings at fixed u."""
    reports = [partition_function_check(L, ratio * L, b, u, variant) for L in Ls]
    return TrendReport(ratio, b, u, variant, reports)
