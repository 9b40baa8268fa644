import math

import numpy as np
import pytest

from isingstrip import tl
from isingstrip.iom import extract_iom
from isingstrip.lattice import SpinBasis, transfer_matrix

SQ2 = math.sqrt(2)


def explicit_generators(L, b):
    """Generators built state by state from the spin configuration, no bit tricks."""
    basis = SpinBasis(L, b)
    n = basis.dim
    gens = {}
    for i in range(1, L + 2):
        e = np.zeros((n, n))
        for s in range(n):
            full = basis.full_configuration(s)
            if full[i - 1] == full[i]:
                e[s, s] = SQ2
        gens[2 * i] = e
    gens[1] = np.eye(n) / SQ2
    for i in range(2, L + 2):
        e = np.zeros((n, n))
        for s in range(n):
            spins = list(basis.decode(s))
            e[s, s] += 1 / SQ2
            spins[i - 2] = -spins[i - 2]
            e[basis.encode(spins), s] += 1 / SQ2
        gens[2 * i - 1] = e
    return gens


@pytest.mark.parametrize("L", [1, 2, 3])
@pytest.mark.parametrize("b", [1, -1])
def test_structured_generators_match_explicit(L, b):
    gens = tl.TLGenerators(L, b)
    ref = explicit_generators(L, b)
    rng = np.random.default_rng(0)
    m = rng.normal(size=(gens.dim, gens.dim))
    for i in range(1, gens.count + 1):
        assert np.allclose(gens.dense(i), ref[i])
        assert np.allclose(gens.left(i, m), ref[i] @ m)
        assert np.allclose(gens.right(i, m), m @ ref[i])


def test_relations_on_explicit_generators():
    # independent of verify_tl_relations: only e_1 breaks e^2 = sqrt2 e and e e' e = e
    e = explicit_generators(3, -1)
    n = len(e)
    for i in range(2, n + 1):
        assert np.allclose(e[i] @ e[i], SQ2 * e[i])
    for i in range(2, n):
        assert np.allclose(e[i] @ e[i + 1] @ e[i], e[i])
        assert np.allclose(e[i + 1] @ e[i] @ e[i + 1], e[i + 1])
    for i in range(1, n + 1):
        for j in range(i + 2, n + 1):
            assert np.allclose(e[i] @ e[j], e[j] @ e[i])
    assert not np.allclose(e[1] @ e[1], SQ2 * e[1])
    assert not np.allclose(e[1] @ e[2] @ e[1], e[1])


@pytest.mark.parametrize("L", [2, 3, 4])
def test_verify_relations_only_boundary_exceptions(L):
    rep = tl.verify_tl_relations(L, 1)
    assert rep.failures == []
    names = {c.relation for c in rep.exceptions}
    assert len(names) == 2
    assert all(c.indices[0] == 1 for c in rep.exceptions)


def test_verify_relations_needs_L2():
    with pytest.raises(ValueError):
        tl.verify_tl_relations(1, 1)


@pytest.mark.parametrize("L", [1, 2, 3])
@pytest.mark.parametrize("b", [1, -1])
def test_a1_matches_finite_difference(L, b):
    # T(w) = 1 + A_1 w + ..., and -x maps w to -w
    basis = SpinBasis(L, b)
    x = 5000.0
    fd = (transfer_matrix(basis, x) - transfer_matrix(basis, -x)) * x
    gens = tl.TLGenerators(L, b)
    assert np.abs(tl.iom_rhs(gens, 1) - fd).max() < 1e-5


def test_h3_matches_dense_commutators():
    L = 3
    e = explicit_generators(L, 1)
    n = 2 * L + 2

    def c(a, b):
        return a @ b - b @ a

    ref = SQ2 * sum(c(e[i], c(e[i + 1], e[i + 2])) for i in range(1, n - 1))
    assert np.allclose(tl.nested_hamiltonian(tl.TLGenerators(L, 1), 1), ref)


def test_hamiltonian_empty_sum_is_zero():
    gens = tl.TLGenerators(1, 1)
    assert np.abs(tl.nested_hamiltonian(gens, 2)).max() == 0
    with pytest.raises(ValueError):
        tl.nested_hamiltonian(gens, -1)


def test_tangle_collision():
    gens = tl.TLGenerators(2, 1)
    assert np.allclose(tl.boundary_tangle(gens, 2), SQ2 * (gens.dense(3) + gens.dense(5)))
    with pytest.raises(tl.PatternCollision):
        tl.boundary_tangle(gens, 3)


def test_extrapolation_flags():
    assert not tl.decomposition_is_extrapolated(7)
    assert tl.decomposition_is_extrapolated(9)
    assert tl.hamiltonian_is_extrapolated(9)
    assert tl.tangle_is_extrapolated(4)


def test_requirements():
    assert tl.decomposition_requirements(3) == (set(), 1)
    assert tl.decomposition_requirements(7) == ({3}, 3)


@pytest.mark.parametrize("b", [1, -1])
def test_a3_a5_decomposition_double(b):
    fam = extract_iom(3, b, 5)
    gens = tl.TLGenerators(3, b)
    for n in (3, 5):
        rhs = tl.iom_rhs(gens, n, fam.charges)
        assert np.abs(rhs - fam[n]).max() / np.abs(fam[n]).max() < 1e-9


def test_iom_rhs_needs_lower_charges():
    gens = tl.TLGenerators(3, 1)
    with pytest.raises(ValueError):
        tl.iom_rhs(gens, 7)
    with pytest.raises(KeyError):
        tl.iom_rhs(gens, 17)
