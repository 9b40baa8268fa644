import math

import mpmath
import pytest

from isingstrip import free_energy as fe
from isingstrip.iom import exact_scalar_charge
from isingstrip.precision import extended
from isingstrip.spectrum import Partition, enumerate_sector


@pytest.mark.parametrize("z", [0.0, 0.01, 0.25, -0.5, 0.9])
def test_hyp3f2_against_mpmath(z):
    ref = float(mpmath.hyp3f2(0.5, 1, 1, 1.5, 1.5, z))
    assert math.isclose(float(fe.hyp3f2(z)), ref, rel_tol=1e-14)


def test_hyp3f2_extended():
    p = extended(50)
    with mpmath.workdps(60):
        ref = mpmath.hyp3f2(0.5, 1, 1, 1.5, 1.5, mpmath.mpf(1) / 4)
        got = mpmath.mpf(str(fe.hyp3f2(p.scalar("0.25"), p)))
        assert abs(got - ref) < mpmath.mpf("1e-48")


def test_hyp3f2_domain():
    assert fe.hyp3f2(0.0) == 1
    with pytest.raises(ValueError):
        fe.hyp3f2(1.0)


def test_free_energies_vanish_at_infinity():
    assert abs(float(fe.f_bulk(1e8))) < 1e-8
    assert abs(float(fe.f_bou(1e8))) < 1e-8
    assert abs(float(fe.f_bou_corrected(1e8))) < 1e-8
    with pytest.raises(ValueError):
        fe.f_bulk(0.9)
    with pytest.raises(ValueError):
        fe.boundary_energy(2.0, "other")


def test_f_bulk_against_mpmath():
    for x in (1.3, 2.0, 10.0):
        ref = -mpmath.log((1 + mpmath.sqrt(1 - 1 / mpmath.mpf(x) ** 2)) / 2) / 4 - mpmath.hyp3f2(
            0.5, 1, 1, 1.5, 1.5, 1 / mpmath.mpf(x) ** 2
        ) / (2 * mpmath.pi * x)
        assert math.isclose(float(fe.f_bulk(x)), float(ref), rel_tol=1e-13)


@pytest.mark.parametrize("L", [0, 1, 2, 3])
def test_even_charge_closed_form(L):
    assert fe.even_charge_closed(L, 1) == -(2 * L + 1)
    for n in range(1, 2 * L + 3):
        assert math.isclose(fe.even_charge_closed(L, n), float(exact_scalar_charge(2 * n, L)), rel_tol=1e-12)


def test_resummation_corrected_and_odd():
    r = fe.resummation_check(1, 2.0, 30)
    assert r.odd_residual < 1e-12
    assert r.even_residual_corrected < 1e-12


def test_printed_even_resummation_is_off():
    # the printed log(1 - 1/x^2) weight leaves an x-dependent gap
    r = fe.resummation_check(1, 2.0, 30)
    assert math.isclose(r.even_residual, 0.75 * abs(math.log(1 - 0.25)), rel_tol=1e-12)


def test_even_series_converges_geometrically():
    # successive partial-sum gaps shrink by about 1/x^2
    x = 4.0
    gaps = [abs(fe.even_series(0, x, n + 1) - fe.even_series(0, x, n)) for n in range(5, 10)]
    ratios = [b / a for a, b in zip(gaps, gaps[1:])]
    assert all(0.5 / x**2 < r < 1 / x**2 for r in ratios)


def test_regrouping_is_algebraic():
    for L in (0, 3):
        for variant in fe.VARIANTS:
            assert fe.regrouping_residual(L, 2.5, variant) < 1e-12


def test_integral_identity():
    assert fe.integral_identity_check(2.0) < 1e-8
    assert fe.integral_identity_check(1.1) < 1e-6
    assert math.isclose(fe.bulk_integral(1e12), math.pi / 2 * math.log(2), rel_tol=1e-10)


def test_integral_against_mpmath_quadrature():
    x = 3.0
    ref = mpmath.quad(lambda t: mpmath.log(1 / mpmath.sin(t) + 1 / x), [0, mpmath.pi / 2])
    assert math.isclose(fe.bulk_integral(x), float(ref), rel_tol=1e-12)


def test_bulk_integral_comparison():
    reps = [fe.f_bulk_integral_comparison(x) for x in (2.0, 4.0, 8.0)]
    diffs = [r.difference for r in reps]
    assert max(diffs) - min(diffs) > 1e-3
    for r in reps:
        assert math.isclose(r.consistent_form, r.f_bulk, rel_tol=1e-10, abs_tol=1e-13)
    far = fe.f_bulk_integral_comparison(1e9)
    assert abs(far.integral_form + 0.5 * (math.pi / 2 * math.log(2) + 0.5 * math.log(2))) < 1e-8


def test_logT_expansion_example_corrected():
    P = Partition(4, ())
    r4 = fe.logT_expansion_check(4, 1, P, 3.0, 4, fe.CORRECTED_VARIANT)
    r8 = fe.logT_expansion_check(4, 1, P, 3.0, 8, fe.CORRECTED_VARIANT)
    assert r8 < 1e-10
    assert r4 / r8 > 100


def test_logT_expansion_converges_in_m_max():
    worst = {M: max(fe.logT_expansion_check(4, b, P, 3.0, M, fe.CORRECTED_VARIANT)
                    for b in (1, -1) for P in enumerate_sector(4, b))
             for M in (10, 15, 25)}
    assert worst[10] > worst[15] > worst[25]
    assert worst[25] < 1e-10


def test_logT_expansion_is_asymptotic_at_small_L():
    # terms with 2n-1 > 2(2L+3) grow with m, so the error has an interior minimum
    def worst(M):
        return max(fe.logT_expansion_check(1, b, P, 3.0, M, fe.CORRECTED_VARIANT)
                   for b in (1, -1) for P in enumerate_sector(1, b))

    errs = [worst(M) for M in (10, 15, 20, 25, 30)]
    assert errs[1] < errs[0] and errs[1] < 1e-10
    assert errs[2] < errs[3] < errs[4]


def test_logT_printed_boundary_offset():
    # the printed boundary term shifts log T by f_bou - f_bou_corrected
    P = Partition(3, (2, 4))
    x = 3.0
    gap = abs(float(fe.f_bou(x)) - float(fe.f_bou_corrected(x)))
    assert math.isclose(fe.logT_expansion_check(3, 1, P, x, 25, fe.PRINTED_VARIANT), gap, rel_tol=1e-8)


def test_logT_expansion_validation():
    with pytest.raises(ValueError):
        fe.logT_expansion_check(3, -1, Partition(3, (1, 2)), 3.0)
    with pytest.raises(ValueError):
        fe.logT_expansion_check(2, 1, Partition(3, ()), 3.0)
