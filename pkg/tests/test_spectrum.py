import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from isingstrip import spectrum as sp
from isingstrip.iom import extract_D
from isingstrip.lattice import SpinBasis, transfer_matrix
from isingstrip.precision import extended


def test_t_k_values():
    assert math.isclose(sp.t_k(0, 1), math.pi / 6)
    assert math.isclose(sp.t_k(1, 1), math.pi / 10)
    assert math.isclose(sp.t_k(2, 2), 3 * math.pi / 14)
    with pytest.raises(ValueError):
        sp.t_k(2, 4)


def test_partition_validation():
    with pytest.raises(ValueError):
        sp.Partition(2, (2, 1))
    with pytest.raises(ValueError):
        sp.Partition(2, (4,))
    with pytest.raises(ValueError):
        sp.Partition(2, (1,)).check_sector(1)


def test_L0_eigenvalue():
    P = sp.Partition(0, ())
    for x in (1.5, 3.0, -7.0):
        assert math.isclose(sp.analytic_eigenvalue(P, x), 1 - 1 / (2 * x))


def test_eigenvalue_tends_to_one():
    assert abs(sp.analytic_eigenvalue(sp.Partition(3, (1, 4)), 1e9) - 1) < 1e-8


def test_pole_guard():
    P = sp.Partition(0, (1,))
    with pytest.raises(ZeroDivisionError):
        sp.analytic_eigenvalue(P, 0.5)
    with pytest.raises(ZeroDivisionError):
        sp.analytic_eigenvalue(P, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5), st.data(), st.floats(1.1, 30.0), st.sampled_from([1.0, -1.0]))
def test_mu_form_agrees_with_product_form(L, data, x, sgn):
    members = data.draw(st.sets(st.integers(1, L + 1)))
    P = sp.Partition(L, tuple(sorted(members)))
    assert math.isclose(sp.analytic_eigenvalue(P, sgn * x), sp.mu_form_eigenvalue(P, sgn * x), rel_tol=1e-12)


def test_enumerate_sector():
    plus = [P.members for P in sp.enumerate_sector(2, 1)]
    minus = [P.members for P in sp.enumerate_sector(2, -1)]
    assert sorted(plus) == sorted([(), (1, 2), (1, 3), (2, 3)])
    assert sorted(minus) == sorted([(1,), (2,), (3,), (1, 2, 3)])
    for L in range(6):
        assert len(sp.enumerate_sector(L, 1)) + len(sp.enumerate_sector(L, -1)) == 2 ** (L + 1)


def test_chebyshev_examples():
    assert sp.chebyshev_u(4, 1.0) == 5
    assert sp.inversion_scalar(1, 1.0) == 320
    for x in (0.3, 1.7, -2.2):
        assert math.isclose(sp.chebyshev_u(4, x), 16 * x**4 - 12 * x**2 + 1)
        assert math.isclose(sp.chebyshev_product(1, x), 16 * x**4 - 12 * x**2 + 1, abs_tol=1e-12)
    # cos-form oracle
    th = 0.7
    assert math.isclose(sp.chebyshev_u(9, math.cos(th)), math.sin(10 * th) / math.sin(th))


@pytest.mark.parametrize("L", [1, 2, 3, 4])
@pytest.mark.parametrize("b", [1, -1])
def test_inversion_identity(L, b):
    poly = extract_D(L, b)
    for x in (1.4, -2.3, 3.9):
        r = sp.inversion_check(L, b, x, poly, direct=True)
        assert r.residual < 1e-10
        assert r.direct_residual < 1e-10
        assert r.factorization_residual < 1e-12


@pytest.mark.parametrize("L", [1, 2, 3, 4])
@pytest.mark.parametrize("b", [1, -1])
def test_spectrum_matches_numpy_eigenvalues(L, b):
    x = 2.0
    ev = np.sort(np.linalg.eigvalsh(transfer_matrix(SpinBasis(L, b), x)))
    ref = np.sort([sp.transfer_eigenvalue(P, x) for P in sp.enumerate_sector(L, b)])
    assert np.allclose(ev, ref, rtol=1e-12)
    rep = sp.spectrum_match(L, b, x)
    assert rep.passed(1e-10)
    assert rep.sector_size == rep.dim == 2**L


def test_printed_orientation_swaps_sectors_for_even_L():
    assert sp.spectrum_match(3, 1, 2.0, orientation=sp.PRINTED).passed(1e-10)
    assert not sp.spectrum_match(2, 1, 2.0, orientation=sp.PRINTED).passed(1e-10)


def test_spectrum_extended():
    p = extended(50)
    rep = sp.spectrum_match(2, -1, 3, p)
    assert rep.passed(1e-40)


def test_sine_sum_examples():
    assert math.isclose(sp.sine_power_sum(0, 1), 0.5)
    assert math.isclose(sp.printed_odd_sine_sum(0, 1), 0.5)
    assert math.isclose(sp.sine_power_sum(0, 2), 0.25)
    assert math.isclose(sp.printed_even_sine_sum(0, 1), -0.25)
    fit = sp.compare_sine_sum(2, 3)
    assert fit.matched and fit.sign == 1
    fit = sp.compare_sine_sum(2, 4)
    assert fit.matched and fit.sign == -1


def test_even_sine_sum_breaks_out_of_range():
    # r = 2n > 4L+4 picks up extra aliasing terms
    assert sp.even_formula_in_range(1, 4)
    assert not sp.even_formula_in_range(1, 5)
    assert not sp.compare_sine_sum(1, 10).matched


def test_coeff_C():
    assert sp.coeff_C(1, 1) == 1
    assert sp.coeff_C(2, 1) == 0
    assert sp.coeff_C(2, 2) == -6
    for n in range(1, 9):
        for m in range(1, n):
            assert sp.coeff_C(n, m) == 0


def test_alpha_against_gamma():
    assert sp.alpha(1) == -8
    for m in range(1, 8):
        ref = -math.sqrt(math.pi) * m * (2 * m - 1) * 3**m * math.gamma(4 * m - 1) / (
            2 ** (2 * m - 2) * math.factorial(m) * math.gamma(3 * m - 0.5)
        )
        assert math.isclose(float(sp.alpha(m)), ref, rel_tol=1e-12)


def test_bernoulli_against_sympy():
    # sympy's B_1 convention differs; B_1 = -1/2 here
    assert sp.bernoulli(1) == Fraction(-1, 2)
    for n in [0, *range(2, 31)]:
        assert sp.bernoulli(n) == Fraction(str(sympy.bernoulli(n)))
    assert sp.bernoulli_half(1) == Fraction(-1, 12)
    assert sp.bernoulli_half(2) == Fraction(7, 240)
    for m in range(1, 8):
        assert sp.bernoulli_half(m) == Fraction(str(sympy.bernoulli(2 * m, sympy.Rational(1, 2))))


def test_cft_iom_examples():
    assert sp.cft_iom(sp.Partition(2, ()), 1) == Fraction(1, 96)
    assert sp.cft_iom(sp.Partition(2, (1,)), 1) == Fraction(-23, 96)
    # adding k shifts alpha * I by 4m (k - 1/2)^(2m-1)
    a = sp.cft_iom(sp.Partition(4, (1, 3)), 2) * sp.alpha(2)
    b = sp.cft_iom(sp.Partition(4, (1, 3, 5)), 2) * sp.alpha(2)
    assert b - a == 8 * Fraction(9, 2) ** 3


def test_p_polynomials():
    assert sp.p_polynomial_coeffs(1) == {1: 1}
    assert sp.p_polynomial_coeffs(2) == {1: 1, 3: -2}
    assert math.isclose(sp.p_polynomial(2, 0.5), 0.5 - 2 * 0.125)


def test_oracle_charge_against_mpmath_taylor():
    # independent oracle: Taylor coefficients of log lam(-1/(2w)) by mpmath
    P = sp.Partition(2, (1, 3))
    s = [math.sin(sp.t_k(2, k)) for k in (1, 2, 3)]

    def loglam(w):
        out = mpmath.mpf(0)
        for k, sk in enumerate(s, start=1):
            out += mpmath.log(1 + 2 * sk * w)
            if k in P.members:
                out += mpmath.log(1 - 2 * sk * w) - mpmath.log(1 + 2 * sk * w)
        return out

    with mpmath.workdps(40):
        coeffs = mpmath.taylor(loglam, 0, 8)
    for k in range(1, 9):
        assert math.isclose(float(sp.oracle_charge(P, k)), float(coeffs[k]) * math.factorial(k), rel_tol=1e-10)


def test_oracle_a2_and_a1():
    L = 3
    P = sp.Partition(L, ())
    assert math.isclose(sp.oracle_charge(P, 2), -7)
    s = sum(math.sin(sp.t_k(L, k)) for k in range(1, L + 2))
    # transfer orientation gives +2 sum sin; the printed orientation the opposite
    assert math.isclose(sp.oracle_charge(P, 1), 2 * s)
    assert math.isclose(sp.oracle_charge(P, 1, orientation=sp.PRINTED), -2 * s)


def test_iom_eigen_fitted_signs():
    table = sp.iom_eigen(sp.Partition(3, (2,)), 9, tol=1e-9)
    fits = table.fitted_signs
    assert all(f.matched for f in fits.values())
    assert {f.sign for k, f in fits.items() if k.startswith("even")} == {-1}
    assert {f.sign for k, f in fits.items() if k.startswith("odd")} == {1}
    assert {f.sign for k, f in fits.items() if k.startswith("split")} == {1}
    assert table.split_skipped == [k for k in range(1, 10, 2) if sp.split_series_ratio(3, (k + 1) // 2) > sp.SPLIT_MAX_RATIO]


def test_split_series_diverges_past_ratio_one():
    assert sp.split_series_ratio(1, 3) == 0.5
    with pytest.raises(ValueError):
        sp.split_terms(1, 6, 1e-9)


def test_log_expansion_slope():
    P = sp.enumerate_sector(3, -1)[-1]
    assert abs(sp.log_expansion_slope(P, 4) + 5) < 0.3


@pytest.mark.parametrize("b", [1, -1])
def test_trace_pairing_double(b):
    from isingstrip.iom import extract_iom

    fam = extract_iom(2, b, 6)
    res = sp.trace_pairing(fam, 2.5)
    assert max(res.values()) < 1e-9
    assert set(res) == {(k, m) for k in range(1, 7) for m in (0, 1, 2)}
