import math
from fractions import Fraction

import gmpy2
import numpy as np
import pytest

from isingstrip.precision import DOUBLE, Precision, extended, max_abs


def test_extended_needs_fifty_digits():
    with pytest.raises(ValueError):
        Precision("extended", 30)
    with pytest.raises(ValueError):
        Precision("quad")


def test_extended_pi_matches_mpmath():
    import mpmath

    p = extended(60)
    with mpmath.workdps(70):
        reference = str(mpmath.pi)
    with p.context():
        assert abs(p.pi() - gmpy2.mpfr(reference)) < gmpy2.mpfr("1e-60")


def test_scalar_from_fraction_is_exact_to_working_precision():
    p = extended(50)
    with p.context():
        v = p.scalar(Fraction(1, 3)) * 3 - 1
    assert abs(v) < 1e-50


def test_solve_matches_numpy():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(5, 5))
    rhs = rng.normal(size=(5, 3))
    p = extended(50)
    sol = p.solve(p.asarray(a), p.asarray(rhs))
    assert np.allclose(np.array(sol, dtype=float), np.linalg.solve(a, rhs), atol=1e-12)


def test_slogdet_matches_numpy():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(6, 6))
    s1, l1 = np.linalg.slogdet(a)
    s2, l2 = extended(50).slogdet(extended(50).asarray(a))
    assert s1 == s2
    assert abs(l1 - float(l2)) < 1e-12


def test_double_backend_uses_floats():
    assert DOUBLE.zeros((2, 2)).dtype == float
    assert DOUBLE.default_tolerance == 1e-9
    assert max_abs(np.array([[1.0, -3.0]])) == 3.0
    assert math.isclose(DOUBLE.cot(0.3), 1 / math.tan(0.3))
