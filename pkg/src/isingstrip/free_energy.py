"""Bulk and boundary free energies and the resummed expansion of log T(x).

Two variants of the boundary term are kept side by side.  ``printed`` is the
closed form as written, ``corrected`` is the one that the even-charge sum and
log T actually produce (its log(1 - 1/x^2) coefficient is 1/4, not 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from scipy import integrate

from .precision import DOUBLE, Precision
from .spectrum import (
    TRANSFER,
    Partition,
    alpha,
    cft_iom,
    eigenvalue,
    p_polynomial_coeffs,
)

PRINTED_VARIANT = "printed"
CORRECTED_VARIANT = "corrected"
VARIANTS = (PRINTED_VARIANT, CORRECTED_VARIANT)
DEFAULT_HYP_TOL = 1e-17
DEFAULT_M_MAX = 10


def _check_x(x):
    if not float(x) > 1:
        raise ValueError("x must exceed 1")


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")


def hyp3f2(z, prec: Precision = DOUBLE, tol: float | None = None, max_terms: int = 100000):
    """3F2((1/2, 1, 1); (3/2, 3/2); z) for |z| < 1.

    Term ratio is (k + 1/2)(k + 1) z / (k + 3/2)^2 < |z|, so the tail after a
    term t is bounded by |t| |z| / (1 - |z|).
    """
    zf = float(z)
    if abs(zf) >= 1:
        raise ValueError("3F2 series diverges for |z| >= 1")
    tol = (DEFAULT_HYP_TOL if not prec.extended else 10.0 ** (-prec.digits)) if tol is None else tol
    with prec.context():
        z = prec.scalar(z)
        term = prec.scalar(1)
        total = prec.scalar(1)
        for k in range(max_terms):
            if abs(zf) == 0 or abs(float(term)) * abs(zf) / (1 - abs(zf)) <= tol * abs(float(total)):
                return total
            term = term * (2 * k + 1) * (k + 1) * 2 * z / ((2 * k + 3) ** 2)
            total += term
    raise ArithmeticError("3F2 series did not converge")


def f_bulk(x, prec: Precision = DOUBLE):
    """-(1/4) log((1 + sqrt(1 - 1/x^2))/2) - 3F2(1/x^2) / (2 pi x)."""
    _check_x(x)
    with prec.context():
        x = prec.scalar(x)
        root = prec.sqrt(1 - 1 / (x * x))
        return -prec.log((1 + root) / 2) / 4 - hyp3f2(1 / (x * x), prec) / (2 * prec.pi() * x)


def f_bou(x, prec: Precision = DOUBLE):
    """Boundary free energy as printed: log(1 - 1/x^2) + (1/4) log((1 + 1/x)/(1 - 1/x))."""
    _check_x(x)
    with prec.context():
        y = 1 / prec.scalar(x)
        return prec.log(1 - y * y) + prec.log((1 + y) / (1 - y)) / 4


def f_bou_corrected(x, prec: Precision = DOUBLE):
    """(1/2) log(1 + 1/x): the boundary term that log T actually carries."""
    _check_x(x)
    with prec.context():
        return prec.log(1 + 1 / prec.scalar(x)) / 2


def boundary_energy(x, variant: str = PRINTED_VARIANT, prec: Precision = DOUBLE):
    _check_variant(variant)
    return f_bou(x, prec) if variant == PRINTED_VARIANT else f_bou_corrected(x, prec)


# -- resummations -------------------------------------------------------------

def even_charge_closed(L: int, n: int) -> int:
    """A_{2n} = -(2n-1)! ((2n)!/n!^2 (L+1) - 2^(2n-1) + C(2n-1, n))."""
    return -math.factorial(2 * n - 1) * (
        math.comb(2 * n, n) * (L + 1) - 2 ** (2 * n - 1) + math.comb(2 * n - 1, n)
    )


def even_series(L: int, x, N: int) -> float:
    """sum_{n=1}^N A_{2n} / ((2x)^(2n) (2n)!)."""
    total = 0.0
    for n in range(1, N + 1):
        coeff = Fraction(even_charge_closed(L, n), math.factorial(2 * n) * 4 ** n)
        total += float(coeff) / float(x) ** (2 * n)
    return total


def odd_divergent_series(L: int, x, N: int) -> float:
    """sum_{n=1}^N A^div_{2n-1} / ((2x)^(2n-1) (2n-1)!)."""
    total = 0.0
    for n in range(1, N + 1):
        den = math.factorial(2 * n - 1) * 2 ** (2 * n - 1)
        lead = Fraction(2 ** (4 * (n - 1)) * math.factorial(n - 1) ** 2, (2 * n - 1) * den)
        const = Fraction(2 ** (2 * (n - 1)) * math.factorial(2 * n - 2), den)
        total += (float(lead) * (4 * L + 6) / math.pi - float(const)) / float(x) ** (2 * n - 1)
    return total


def even_closed(L: int, x, variant: str = PRINTED_VARIANT) -> float:
    """Closed right side of the even resummation; the log(1 - 1/x^2) weight is 1 printed, 1/4 corrected."""
    _check_variant(variant)
    x = float(x)
    root = math.sqrt(1 - 1 / x**2)
    weight = 1.0 if variant == PRINTED_VARIANT else 0.25
    return (2 * L + 3) / 2 * math.log((1 + root) / 2) - weight * math.log(1 - 1 / x**2)


def odd_closed(L: int, x) -> float:
    x = float(x)
    return (2 * L + 3) / (math.pi * x) * float(hyp3f2(1 / x**2)) - math.log((1 + 1 / x) / (1 - 1 / x)) / 4


@dataclass
class ResummationResult:
    L: int
    x: float
    N: int
    even_residual: float
    even_residual_corrected: float
    odd_residual: float


def resummation_check(L: int, x, N: int = 30) -> ResummationResult:
    _check_x(x)
    ev = even_series(L, x, N)
    od = odd_divergent_series(L, x, N)
    return ResummationResult(
        L,
        float(x),
        N,
        abs(ev - even_closed(L, x, PRINTED_VARIANT)),
        abs(ev - even_closed(L, x, CORRECTED_VARIANT)),
        abs(od - odd_closed(L, x)),
    )


def regrouping_residual(L: int, x, variant: str = PRINTED_VARIANT) -> float:
    """| -2(2L+3) f_bulk - f_bou - (even + odd closed sides) |; zero by algebra for matching variants."""
    lhs = -2 * (2 * L + 3) * float(f_bulk(x)) - float(boundary_energy(x, variant))
    return abs(lhs - even_closed(L, x, variant) - odd_closed(L, x))


# -- integral identity ----------------------------------------------------------

def bulk_integral(x, epsabs: float = 1e-14, epsrel: float = 1e-13) -> float:
    """int_0^{pi/2} log(1/sin t + 1/x) dt, with t = s^2 to tame the endpoint log."""
    xf = float(x)

    def f(s):
        t = s * s
        return 2 * s * math.log(1 / math.sin(t) + 1 / xf)

    val, err = integrate.quad(f, 0.0, math.sqrt(math.pi / 2), epsabs=epsabs, epsrel=epsrel, limit=200)
    if err > 1e-9:
        raise ArithmeticError(f"quadrature error estimate {err:.2e} too large")
    return val


def integral_closed(x) -> float:
    xf = float(x)
    return float(hyp3f2(1 / xf**2)) / xf + math.pi / 2 * math.log(1 + math.sqrt(1 - 1 / xf**2))


def integral_identity_check(x) -> float:
    _check_x(x)
    return abs(bulk_integral(x) - integral_closed(x))


@dataclass
class BulkComparison:
    x: float
    f_bulk: float
    integral_form: float
    difference: float
    ratio: float
    consistent_form: float


def f_bulk_integral_comparison(x) -> BulkComparison:
    """Report the printed integral expression for f_bulk next to the series one.

    ``consistent_form`` = -(1/(2 pi)) (integral - (pi/2) log 2) is what the
    series definition equals once the integral identity is used.
    """
    _check_x(x)
    integral = bulk_integral(x)
    fb = float(f_bulk(x))
    form = -0.5 * (integral + math.log(math.sqrt(2)))
    consistent = -(integral - math.pi / 2 * math.log(2)) / (2 * math.pi)
    return BulkComparison(float(x), fb, form, form - fb, form / fb if fb else math.inf, consistent)


# -- full expansion of log T ----------------------------------------------------

def cft_series(P: Partition, x, M_max: int = DEFAULT_M_MAX) -> float:
    """sum_{m=1}^{M_max} (-1)^m/(2m)! (pi/(2L+3))^(2m-1) alpha_m I_{2m-1}(P) P_{2m-1}(1/x)."""
    xf = float(x)
    z = math.pi / (2 * P.L + 3)
    total = 0.0
    for m in range(1, M_max + 1):
        poly = sum(float(c) / xf**k for k, c in p_polynomial_coeffs(m).items())
        coeff = Fraction((-1) ** m, math.factorial(2 * m)) * alpha(m) * cft_iom(P, m)
        total += float(coeff) * z ** (2 * m - 1) * poly
    return total


def logT_expansion(P: Partition, x, M_max: int = DEFAULT_M_MAX, variant: str = PRINTED_VARIANT) -> float:
    L = P.L
    return -2 * (2 * L + 3) * float(f_bulk(x)) - float(boundary_energy(x, variant)) + cft_series(P, x, M_max)


def logT_expansion_check(
    L: int,
    b: int,
    P: Partition,
    x,
    M_max: int = DEFAULT_M_MAX,
    variant: str = PRINTED_VARIANT,
    orientation: str = TRANSFER,
) -> float:
    """|log lam_P(x) - expansion| for P in the b sector."""
    _check_x(x)
    if P.L != L:
        raise ValueError("partition built for a different L")
    P.check_sector(b)
    lam = float(eigenvalue(P, x, orientation=orientation))
    if lam <= 0:
        raise ValueError("eigenvalue is not positive; log undefined")
    return abs(math.log(lam) - logT_expansion(P, x, M_max, variant))
