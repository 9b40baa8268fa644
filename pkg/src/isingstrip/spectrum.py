"""Analytic spectrum of the strip transfer matrix and the closed forms built on it.

Eigenvalues are labelled by partitions P of {1..L+1}.  ``analytic_eigenvalue``
is the product formula as written; the normalized matrix T(x) actually has
the eigenvalues ``transfer_eigenvalue(P, x) = analytic_eigenvalue(P, -x)``
with P even for b = +1 and odd for b = -1.  Everything that is compared with
extracted matrices uses the latter ("transfer" orientation).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .precision import DOUBLE, Precision, max_abs

TRANSFER = "transfer"
PRINTED = "printed"
ORACLE = "ORACLE"


@dataclass(frozen=True)
class Partition:
    L: int
    members: tuple[int, ...] = ()

    def __post_init__(self):
        m = tuple(self.members)
        object.__setattr__(self, "members", m)
        if any(b <= a for a, b in zip(m, m[1:])):
            raise ValueError("partition members must be strictly increasing")
        if m and (m[0] < 1 or m[-1] > self.L + 1):
            raise ValueError(f"partition members must lie in 1..{self.L + 1}")

    @property
    def p(self) -> int:
        return len(self.members)

    def mu(self, k: int) -> int:
        return -1 if k in self.members else 1

    def sector(self) -> int:
        """Boundary spin b of the sector this partition belongs to."""
        return 1 if self.p % 2 == 0 else -1

    def check_sector(self, b: int):
        if self.sector() != b:
            raise ValueError(f"partition {self.members} (p={self.p}) is not in the b={b} sector")


def t_k(L: int, k: int, prec: Precision = DOUBLE):
    if not 1 <= k <= L + 1:
        raise ValueError(f"k must be in 1..{L + 1}")
    with prec.context():
        return (2 * k - 1) * prec.pi() / (4 * L + 6)


def sines(L: int, prec: Precision = DOUBLE) -> list:
    with prec.context():
        return [prec.sin(t_k(L, k, prec)) for k in range(1, L + 2)]


POLE_GUARD = 1e-12


def analytic_eigenvalue(P: Partition, x, prec: Precision = DOUBLE):
    """prod_{k in P} (x + s_k)/(x - s_k) * prod_k (1 - s_k/x), s_k = sin t_k."""
    s = sines(P.L, prec)
    with prec.context():
        x = prec.scalar(x)
        if x == 0:
            raise ZeroDivisionError("x = 0")
        out = prec.scalar(1)
        for k in P.members:
            den = x - s[k - 1]
            if abs(den) < POLE_GUARD * max(1.0, abs(float(x))):
                raise ZeroDivisionError(f"x too close to the pole sin(t_{k})")
            out *= (x + s[k - 1]) / den
        for sk in s:
            out *= 1 - sk / x
        return out


def mu_form_eigenvalue(P: Partition, x, prec: Precision = DOUBLE):
    """x^-(L+1) prod_k (x - mu_k s_k)."""
    s = sines(P.L, prec)
    with prec.context():
        x = prec.scalar(x)
        out = prec.scalar(1)
        for k, sk in enumerate(s, start=1):
            out *= x - P.mu(k) * sk
        return out / x ** (P.L + 1)


def transfer_eigenvalue(P: Partition, x, prec: Precision = DOUBLE):
    """Eigenvalue of the normalized T(x) labelled by P."""
    with prec.context():
        return analytic_eigenvalue(P, -prec.scalar(x), prec)


def eigenvalue(P: Partition, x, prec: Precision = DOUBLE, orientation: str = TRANSFER):
    if orientation == TRANSFER:
        return transfer_eigenvalue(P, x, prec)
    if orientation == PRINTED:
        return analytic_eigenvalue(P, x, prec)
    raise ValueError(f"unknown orientation {orientation!r}")


def enumerate_sector(L: int, b: int) -> list[Partition]:
    if b not in (1, -1):
        raise ValueError("b must be +1 or -1")
    start = 0 if b == 1 else 1
    out = []
    for p in range(start, L + 2, 2):
        out.extend(Partition(L, c) for c in itertools.combinations(range(1, L + 2), p))
    return out


def chebyshev_u(n: int, x, prec: Precision = DOUBLE):
    """Chebyshev polynomial of the second kind by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be >= 0")
    with prec.context():
        x = prec.scalar(x)
        u0, u1 = prec.scalar(1), 2 * x
        if n == 0:
            return u0
        for _ in range(n - 1):
            u0, u1 = u1, 2 * x * u1 - u0
        return u1


def chebyshev_product(L: int, x, prec: Precision = DOUBLE):
    """2^(2L+2) prod_k (x^2 - sin^2 t_k), the factorized U_{2L+2}(x)."""
    with prec.context():
        x = prec.scalar(x)
        out = prec.scalar(2) ** (2 * L + 2)
        for sk in sines(L, prec):
            out *= x * x - sk * sk
        return out


def inversion_scalar(L: int, x, prec: Precision = DOUBLE):
    with prec.context():
        return (-1) ** (L + 1) * prec.scalar(2) ** (2 * L + 4) * chebyshev_u(2 * L + 2, x, prec)


@dataclass
class InversionResult:
    L: int
    b: int
    x: float
    residual: float
    direct_residual: float | None
    factorization_residual: float


def factorization_residual(L: int, prec: Precision = DOUBLE, samples: int = 10, seed: int = 0) -> float:
    """max relative |U_{2L+2}(x) - 2^(2L+2) prod (x^2 - sin^2 t_k)| over random x."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for x in rng.uniform(-3, 3, samples):
        u = chebyshev_u(2 * L + 2, x, prec)
        f = chebyshev_product(L, x, prec)
        with prec.context():
            worst = max(worst, float(abs(u - f)) / max(1.0, float(abs(u))))
    return worst


def inversion_check(L: int, b: int, x, poly=None, prec: Precision = DOUBLE, direct: bool = False) -> InversionResult:
    """Relative max entry of D(x) D(-x) - (-1)^(L+1) 2^(2L+4) U_{2L+2}(x) 1.

    ``poly`` is an extracted MatrixPolynomial (built here when omitted); D(-x)
    comes from evaluating it at -x.  With ``direct`` the lattice matrix at -x
    (negative spectral parameter) is checked as well.
    """
    from .iom import extract_D
    from .lattice import SpinBasis, rescale_to_D, transfer_matrix

    poly = extract_D(L, b, prec=prec) if poly is None else poly
    with prec.context():
        c = inversion_scalar(L, x, prec)
        eye = prec.eye(1 << L)
        dp = poly.evaluate_D(x)
        dm = poly.evaluate_D(-prec.scalar(x))
        res = max_abs(dp @ dm - eye * c) / abs(float(c))
        dres = None
        if direct:
            basis = SpinBasis(L, b)
            tp = rescale_to_D(transfer_matrix(basis, x, prec), x, L, prec)
            mx = -prec.scalar(x)
            tm = rescale_to_D(transfer_matrix(basis, mx, prec), mx, L, prec)
            dres = max_abs(tp @ tm - eye * c) / abs(float(c))
    return InversionResult(L, b, float(x), res, dres, factorization_residual(L, prec))


@dataclass
class SpectrumReport:
    L: int
    b: int
    x: float
    orientation: str
    probe_residual: float
    trace_residuals: dict[int, float]
    sector_size: int
    dim: int

    def passed(self, tol: float) -> bool:
        return (
            self.sector_size == self.dim
            and self.probe_residual <= tol
            and all(r <= tol for r in self.trace_residuals.values())
        )


def spectrum_match(
    L: int,
    b: int,
    x,
    prec: Precision = DOUBLE,
    seed: int = 0,
    orientation: str = TRANSFER,
    T=None,
    max_resample: int = 20,
) -> SpectrumReport:
    """Characteristic-polynomial probes and trace moments of T(x) against the sector eigenvalues.

    Each probe compares det(lam - T) with prod_P (lam - lam_P) through
    (sign, log|det|); the residual is the largest relative deviation.
    """
    from .lattice import SpinBasis, transfer_matrix

    basis = SpinBasis(L, b)
    T = transfer_matrix(basis, x, prec) if T is None else T
    sector = enumerate_sector(L, b)
    lams = [eigenvalue(P, x, prec, orientation) for P in sector]
    lf = np.array([float(v) for v in lams])
    lo, hi = lf.min(), lf.max()
    pad = 0.25 * max(hi - lo, 1e-3)
    spacing = np.min(np.diff(np.sort(lf))) if len(lf) > 1 else 1.0
    rng = np.random.default_rng(seed)
    n = basis.dim
    worst = 0.0
    probes = 0
    with prec.context():
        eye = prec.eye(n)
        while probes < n + 1:
            for _ in range(max_resample):
                lam = rng.uniform(lo - pad, hi + pad)
                if np.min(np.abs(lf - lam)) > 1e-3 * max(spacing, 1e-6):
                    break
            else:
                raise RuntimeError("probe collision resampling exhausted")
            lam_s = prec.scalar(lam)
            sign, logdet = prec.slogdet(eye * lam_s - T)
            rsign, rlog = 1, prec.scalar(0)
            for v in lams:
                d = lam_s - v
                if d < 0:
                    rsign = -rsign
                rlog += prec.log(abs(d))
            if sign != rsign:
                worst = max(worst, 2.0)
            else:
                worst = max(worst, abs(math.expm1(float(logdet - rlog))))
            probes += 1
        traces = {}
        power = eye
        for m in (1, 2, 3):
            power = power @ T
            tr = sum(power[i, i] for i in range(n))
            ref = sum(v ** m for v in lams)
            traces[m] = float(abs(tr - ref)) / max(1.0, float(abs(ref)))
    return SpectrumReport(L, b, float(x), orientation, worst, traces, len(sector), n)


# -- sine power sums ----------------------------------------------------------

def sine_power_sum(L: int, r: int, prec: Precision = DOUBLE, subset=None):
    """sum over k (all of 1..L+1, or ``subset``) of sin^r(t_k)."""
    if r < 1:
        raise ValueError("r must be positive")
    s = sines(L, prec)
    ks = range(1, L + 2) if subset is None else subset
    with prec.context():
        total = prec.scalar(0)
        for k in ks:
            total += s[k - 1] ** r
        return total


def printed_odd_sine_sum(L: int, n: int, prec: Precision = DOUBLE):
    """Closed form for sum_k sin^(2n-1) t_k as printed."""
    with prec.context():
        pi = prec.pi()
        total = prec.scalar(0)
        for k in range(n):
            j = n - k
            term = math.comb(2 * n - 1, k) * (-1) ** (n - k - 1)
            csc = 1 / prec.sin((2 * j - 1) * pi / (4 * L + 6))
            total += term * csc * (1 - prec.sin(pi * (4 * j * L + 4 * j + 1) / (4 * L + 6)))
        return total / prec.scalar(2) ** (2 * n - 1)


def printed_even_sine_sum(L: int, n: int, prec: Precision = DOUBLE):
    """Closed form for sum_k sin^(2n) t_k as printed (sign included)."""
    val = Fraction(math.factorial(2 * n), math.factorial(n) ** 2) * (L + 1) - 2 ** (2 * n - 1) + math.comb(2 * n - 1, n)
    return prec.scalar(-val / Fraction(2 ** (2 * n)))


def even_formula_in_range(L: int, n: int) -> bool:
    """The printed even closed form holds while 2n <= 4L+4."""
    return 2 * n <= 4 * L + 4


@dataclass
class SignFit:
    name: str
    sign: int
    residual: float
    matched: bool


def fit_sign(name: str, oracle, printed, tol: float) -> SignFit:
    o, p = float(oracle), float(printed)
    scale = max(abs(o), 1e-300)
    plus, minus = abs(o - p) / scale, abs(o + p) / scale
    sign, res = (1, plus) if plus <= minus else (-1, minus)
    return SignFit(name, sign, res, res <= tol)


def compare_sine_sum(L: int, r: int, prec: Precision = DOUBLE, tol: float | None = None) -> SignFit:
    tol = prec.default_tolerance if tol is None else tol
    oracle = sine_power_sum(L, r, prec)
    if r % 2:
        return fit_sign("odd_sine_sum", oracle, printed_odd_sine_sum(L, (r + 1) // 2, prec), tol)
    return fit_sign("even_sine_sum", oracle, printed_even_sine_sum(L, r // 2, prec), tol)


# -- exact constants ----------------------------------------------------------

def coeff_C(n: int, m: int) -> Fraction:
    if n < 1 or m < 1:
        raise ValueError("n, m must be >= 1")
    total = sum(
        math.comb(2 * n - 1, k) * (-1) ** (n - k - 1) * (2 * (n - k) - 1) ** (2 * m - 1) for k in range(n)
    )
    return Fraction(total, 2 ** (2 * n - 2))


def alpha(m: int) -> Fraction:
    """-sqrt(pi) m (2m-1) 3^m Gamma(4m-1) / (2^(2m-2) m! Gamma(3m-1/2)), exactly.

    Gamma(3m-1/2) = (6m-2)! sqrt(pi) / (4^(3m-1) (3m-1)!), so sqrt(pi) cancels.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    gamma_half = Fraction(math.factorial(6 * m - 2), 4 ** (3 * m - 1) * math.factorial(3 * m - 1))
    num = m * (2 * m - 1) * 3 ** m * math.factorial(4 * m - 2)
    den = Fraction(2) ** (2 * m - 2) * math.factorial(m) * gamma_half
    return -num / den


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    """Bernoulli number B_n with B_1 = -1/2."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return Fraction(1)
    if n > 1 and n % 2:
        return Fraction(0)
    return -sum(math.comb(n + 1, k) * bernoulli(k) for k in range(n)) / (n + 1)


def bernoulli_half(m: int) -> Fraction:
    """B_{2m}(1/2) = (2^(1-2m) - 1) B_{2m}."""
    return (Fraction(1, 2 ** (2 * m - 1)) - 1) * bernoulli(2 * m)


def cft_iom(P: Partition, m: int) -> Fraction:
    """I_{2m-1}(P) = (4m sum_{k in P} (k - 1/2)^(2m-1) + B_{2m}(1/2)) / alpha(m)."""
    s = sum(Fraction(2 * k - 1, 2) ** (2 * m - 1) for k in P.members)
    return (4 * m * s + bernoulli_half(m)) / alpha(m)


def p_polynomial_coeffs(m: int) -> dict[int, Fraction]:
    """P_{2m-1}(z) = sum_{n=1}^m z^(2n-1) C_{n,m} / (2n-1), as power -> coefficient."""
    return {2 * n - 1: coeff_C(n, m) / (2 * n - 1) for n in range(1, m + 1)}


def p_polynomial(m: int, z):
    return sum(float(c) * z ** k for k, c in p_polynomial_coeffs(m).items())


# -- eigenvalues of the charges -----------------------------------------------

@dataclass
class IomEigenTable:
    partition: Partition
    values: dict[int, object]
    sign_convention: str = ORACLE
    orientation: str = TRANSFER
    fitted_signs: dict[str, SignFit] = field(default_factory=dict)
    split_skipped: list[int] = field(default_factory=list)


def oracle_charge(P: Partition, k: int, prec: Precision = DOUBLE, orientation: str = TRANSFER):
    """k! times the w^k coefficient of log(eigenvalue), w = 1/(2x).

    In the transfer orientation log(lam_P) = sum_all log(1 + 2 s w)
    + sum_P [log(1 - 2 s w) - log(1 + 2 s w)].
    """
    with prec.context():
        s_all = sine_power_sum(P.L, k, prec)
        s_p = sine_power_sum(P.L, k, prec, P.members) if P.members else prec.scalar(0)
        odd = k % 2 == 1
        val = math.factorial(k - 1) * prec.scalar(2) ** k * ((s_all if odd else -s_all) - (2 * s_p if odd else 0))
        if orientation == PRINTED and odd:
            val = -val
        return val


def printed_even_charge(L: int, n: int, prec: Precision = DOUBLE):
    """A_{2n} = 2^(2n) (2n-1)! sum_k sin^(2n) t_k as printed."""
    with prec.context():
        return prec.scalar(2) ** (2 * n) * math.factorial(2 * n - 1) * sine_power_sum(L, 2 * n, prec)


def printed_odd_charge(P: Partition, n: int, prec: Precision = DOUBLE):
    """A_{2n-1} = 2^(2n-1) (2n-2)! (-2 sum_P sin^(2n-1) + sum_all sin^(2n-1))."""
    with prec.context():
        r = 2 * n - 1
        s_p = sine_power_sum(P.L, r, prec, P.members) if P.members else prec.scalar(0)
        return prec.scalar(2) ** r * math.factorial(r - 1) * (sine_power_sum(P.L, r, prec) - 2 * s_p)


def divergent_part(L: int, n: int, prec: Precision = DOUBLE):
    """2^(4(n-1)) (n-1)!^2/(2n-1) (4L+6)/pi - 2^(2(n-1)) (2n-2)!."""
    with prec.context():
        lead = Fraction(2 ** (4 * (n - 1)) * math.factorial(n - 1) ** 2, 2 * n - 1)
        return prec.scalar(lead) * (4 * L + 6) / prec.pi() - 2 ** (2 * (n - 1)) * math.factorial(2 * n - 2)


def cft_series_part(P: Partition, n: int, terms: int = 40, prec: Precision = DOUBLE):
    """2^(2n-1)(2n-2)! sum_{m=n}^{n+terms-1} C_{n,m} (-1)^m/(2m)! (pi/(2L+3))^(2m-1) alpha_m I_{2m-1}(P)."""
    with prec.context():
        z = prec.pi() / (2 * P.L + 3)
        total = prec.scalar(0)
        for m in range(n, n + terms):
            c = coeff_C(n, m) * (-1) ** m / math.factorial(2 * m) * alpha(m) * cft_iom(P, m)
            total += prec.scalar(c) * z ** (2 * m - 1)
        return prec.scalar(2) ** (2 * n - 1) * math.factorial(2 * n - 2) * total


SPLIT_MAX_RATIO = 0.75


def split_series_ratio(L: int, n: int) -> float:
    """Geometric ratio (per m) of the CFT series for A_{2n-1}; it diverges above 1."""
    return (2 * n - 1) / (2 * (2 * L + 3))


def split_terms(L: int, n: int, tol: float, cap: int = 200) -> int:
    r = split_series_ratio(L, n)
    if r >= 1:
        raise ValueError(f"CFT series for A_{2 * n - 1} diverges at L={L}")
    return min(cap, int(math.ceil(math.log(tol) / (2 * math.log(r)))) + 10)


def split_odd_charge(P: Partition, n: int, terms: int = 40, prec: Precision = DOUBLE):
    """A_{2n-1} rebuilt as divergent part plus the CFT series."""
    with prec.context():
        return divergent_part(P.L, n, prec) + cft_series_part(P, n, terms, prec)


def expansion_odd_sine_combination(P: Partition, n: int, terms: int, prec: Precision = DOUBLE):
    """Truncated expansion of -2 sum_P sin^(2n-1) t_k + sum_all sin^(2n-1) t_k."""
    with prec.context():
        z = prec.pi() / (4 * P.L + 6)
        lead = Fraction(2) ** (2 * n - 3) * math.factorial(n - 1) ** 2 / math.factorial(2 * n - 1)
        total = prec.scalar(lead) * (4 * P.L + 6) / prec.pi() - prec.scalar(Fraction(1, 2))
        for m in range(n, n + terms):
            s = sum(Fraction(2 * k - 1, 2) ** (2 * m - 1) for k in P.members)
            c = Fraction(2) ** (2 * m - 1) * coeff_C(n, m) * (-1) ** m / math.factorial(2 * m)
            total += prec.scalar(c * (4 * m * s + bernoulli_half(m))) * z ** (2 * m - 1)
        return total


def iom_eigen(
    P: Partition,
    N: int = 15,
    prec: Precision = DOUBLE,
    orientation: str = TRANSFER,
    tol: float | None = None,
) -> IomEigenTable:
    """ORACLE charge eigenvalues A_1(P)..A_N(P) with fitted signs of the printed closed forms.

    ``fitted_signs`` holds one SignFit per printed formula and order
    ('even_charge_k', 'odd_charge_k', 'split_k').  The divergent/CFT split is
    only compared where its m-series ratio is at most SPLIT_MAX_RATIO; other
    odd orders are listed in ``split_skipped``.
    """
    tol = prec.default_tolerance if tol is None else tol
    values = {k: oracle_charge(P, k, prec, orientation) for k in range(1, N + 1)}
    fits, skipped = {}, []
    for k in range(1, N + 1):
        if k % 2 == 0:
            fits[f"even_charge_{k}"] = fit_sign("even_charge", values[k], printed_even_charge(P.L, k // 2, prec), tol)
            continue
        n = (k + 1) // 2
        fits[f"odd_charge_{k}"] = fit_sign("odd_charge", values[k], printed_odd_charge(P, n, prec), tol)
        if split_series_ratio(P.L, n) > SPLIT_MAX_RATIO:
            skipped.append(k)
            continue
        terms = split_terms(P.L, n, tol)
        fits[f"split_{k}"] = fit_sign("split", values[k], split_odd_charge(P, n, terms, prec), tol)
    return IomEigenTable(P, values, ORACLE, orientation, fits, skipped)


def log_expansion_error(P: Partition, x, N: int, prec: Precision = DOUBLE, orientation: str = TRANSFER) -> float:
    """|exp(sum_{k<=N} A_k(P) / (k! (2x)^k)) - lam_P(x)| / |lam_P(x)|."""
    with prec.context():
        w = 1 / (2 * prec.scalar(x))
        s = prec.scalar(0)
        for k in range(1, N + 1):
            s += oracle_charge(P, k, prec, orientation) * w ** k / math.factorial(k)
        lam = eigenvalue(P, x, prec, orientation)
        if prec.extended:
            import gmpy2

            approx = gmpy2.exp(s)
        else:
            approx = math.exp(s)
        return float(abs(approx - lam) / abs(lam))


def log_expansion_slope(P: Partition, N: int, xs=None, orientation: str = TRANSFER) -> float:
    """Least-squares slope of log(error) against log(x); about -(N+1) when the truncation is right."""
    xs = np.geomspace(4.0, 64.0, 9) if xs is None else np.asarray(xs, dtype=float)
    errs = np.array([log_expansion_error(P, x, N, DOUBLE, orientation) for x in xs])
    keep = errs > 1e-14
    if keep.sum() < 3:
        raise ValueError("errors at roundoff level; lower N or x")
    return float(np.polyfit(np.log(xs[keep]), np.log(errs[keep]), 1)[0])


# -- pairing-free spectral check of extracted charges ---------------------------

def trace_pairing(family, x, ks=None, ms=(0, 1, 2), prec: Precision | None = None, T=None) -> dict:
    """Relative residuals of sum_P A_k(P) lam_P^m - Tr(A_k T^m), keyed by (k, m)."""
    from .lattice import SpinBasis, transfer_matrix

    prec = family.prec if prec is None else prec
    L, b = family.L, family.b
    ks = sorted(family.charges) if ks is None else ks
    T = transfer_matrix(SpinBasis(L, b), x, prec) if T is None else T
    sector = enumerate_sector(L, b)
    lams = [transfer_eigenvalue(P, x, prec) for P in sector]
    out = {}
    with prec.context():
        powers = {0: prec.eye(T.shape[0])}
        for m in range(1, max(ms) + 1):
            powers[m] = powers[m - 1] @ T
        for k in ks:
            a = family[k]
            vals = [oracle_charge(P, k, prec) for P in sector]
            for m in ms:
                lhs = sum(v * lam ** m for v, lam in zip(vals, lams))
                prod = a @ powers[m]
                rhs = sum(prod[i, i] for i in range(T.shape[0]))
                scale = max(1.0, sum(abs(float(v)) * abs(float(lam)) ** m for v, lam in zip(vals, lams)))
                out[(k, m)] = float(abs(lhs - rhs)) / scale
    return out
