import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingstrip.lattice import (
    SpectralPoint,
    SpinBasis,
    brute_force_transfer,
    build_transfer,
    rescale_to_D,
    transfer_matrix,
    weight_left,
    weight_right,
)
from isingstrip.precision import extended


def test_basis_encoding_round_trip():
    basis = SpinBasis(3, -1)
    for state in range(basis.dim):
        assert basis.encode(basis.decode(state)) == state
    assert basis.full_configuration(0) == (1, 1, 1, 1, -1)
    assert basis.decode(0b101) == (-1, 1, -1)


def test_basis_rejects_bad_input():
    with pytest.raises(ValueError):
        SpinBasis(2, 0)
    with pytest.raises(ValueError):
        SpinBasis(-1, 1)
    with pytest.raises(ValueError):
        SpinBasis(2, 1).encode((1,))


def test_weights_at_pi_over_8():
    # tan(pi/8) = sqrt2 - 1, cot(pi/8) = sqrt2 + 1
    u = math.pi / 8
    t, c = math.sqrt(2) - 1, math.sqrt(2) + 1
    assert math.isclose(weight_right(1, -1, 1, u), t)
    assert math.isclose(weight_right(1, 1, 1, u), c)
    assert weight_right(-1, 1, 1, u) == 1.0
    assert math.isclose(weight_left(1, 1, 1, u), c)
    assert math.isclose(weight_left(1, -1, 1, u), t)
    assert weight_left(-1, -1, 1, u) == 1.0


def test_weight_singularities():
    with pytest.raises(ValueError):
        weight_left(1, 1, 1, 0.0)
    with pytest.raises(ValueError):
        weight_right(1, 1, 1, math.pi / 4)
    with pytest.raises(ValueError):
        weight_left(2, 1, 1, 0.1)


@pytest.mark.parametrize("L", [0, 1, 2, 3])
@pytest.mark.parametrize("b", [1, -1])
def test_contraction_matches_brute_force(L, b):
    basis = SpinBasis(L, b)
    for u in (0.07, 0.19, -0.05):
        assert np.allclose(build_transfer(basis, u), brute_force_transfer(basis, u), rtol=1e-13, atol=1e-13)


def test_extended_contraction_matches_brute_force():
    p = extended(50)
    basis = SpinBasis(2, -1)
    a = build_transfer(basis, p.scalar("0.13"), p)
    b = brute_force_transfer(basis, p.scalar("0.13"), p)
    with p.context():
        assert max(abs(v) for v in (a - b).flat) < 1e-45


@pytest.mark.parametrize("b", [1, -1])
def test_transfer_matrices_commute(b):
    basis = SpinBasis(3, b)
    t1 = transfer_matrix(basis, 1.7)
    t2 = transfer_matrix(basis, 5.3)
    assert np.abs(t1 @ t2 - t2 @ t1).max() < 1e-12


@pytest.mark.parametrize("b", [1, -1])
def test_transfer_symmetric_and_tends_to_identity(b):
    basis = SpinBasis(3, b)
    t = transfer_matrix(basis, 2.5)
    assert np.abs(t - t.T).max() < 1e-13
    assert np.abs(transfer_matrix(basis, 1e7) - np.eye(8)).max() < 1e-5


def test_L1_two_by_two_spectrum():
    # b = -1 sector eigenvalues: P = {1}, {2} at -x
    x = 2.0
    s = [math.sin(math.pi / 10), math.sin(3 * math.pi / 10)]
    ev = np.sort(np.linalg.eigvalsh(transfer_matrix(SpinBasis(1, -1), x)))
    expected = sorted(
        [
            (x - s[0]) / (x + s[0]) * (1 + s[0] / x) * (1 + s[1] / x),
            (x - s[1]) / (x + s[1]) * (1 + s[0] / x) * (1 + s[1] / x),
        ]
    )
    assert np.allclose(ev, expected, rtol=1e-13)


def test_rescale_to_D():
    basis = SpinBasis(2, 1)
    t = transfer_matrix(basis, 3.0)
    d = rescale_to_D(t, 3.0, 2)
    assert np.allclose(d, 2**7 * 27 * t)
    raw = build_transfer(basis, SpectralPoint.from_x(3.0).u)
    assert np.allclose(d, 2 * raw)


def test_spectral_point_round_trip():
    pt = SpectralPoint.from_x(-2.0)
    assert -math.pi / 8 < pt.u < 0
    assert math.isclose(SpectralPoint.from_u(pt.u).x, -2.0)
    assert math.isclose(SpectralPoint.from_w(0.25).x, 2.0)
    with pytest.raises(ValueError):
        SpectralPoint.from_x(0.5)


def test_max_L_guard():
    with pytest.raises(ValueError):
        build_transfer(SpinBasis(5, 1), 0.1, max_L=4)
    with pytest.raises(ValueError):
        build_transfer(SpinBasis(1, 1), 0.9)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=1.05, max_value=50.0), st.sampled_from([1, -1]))
def test_trace_matches_sector_sum(x, b):
    from isingstrip.spectrum import enumerate_sector, transfer_eigenvalue

    t = transfer_matrix(SpinBasis(2, b), x)
    total = sum(transfer_eigenvalue(P, x) for P in enumerate_sector(2, b))
    assert math.isclose(np.trace(t), total, rel_tol=1e-11)
