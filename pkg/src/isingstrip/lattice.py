"""Fixed-boundary spin bookkeeping, Boltzmann weights and the strip transfer matrix.

Lattice sites run 1..L+2.  Sites 1 and L+2 carry the fixed spins +1 and ``b``;
the L free sites 2..L+1 are stored as bits of the state index, site j in bit
j-2, with bit value 0 for spin +1 and 1 for spin -1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .precision import DOUBLE, Precision

DEFAULT_MAX_L = 12


@dataclass(frozen=True)
class SpinBasis:
    L: int
    b: int

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("L must be non-negative")
        if self.b not in (1, -1):
            raise ValueError("boundary spin b must be +1 or -1")

    @property
    def dim(self) -> int:
        return 1 << self.L

    @property
    def degenerate(self) -> bool:
        """L = 0 gives a 1x1 matrix; usable as a trivial oracle only."""
        return self.L == 0

    def encode(self, spins: Sequence[int]) -> int:
        if len(spins) != self.L:
            raise ValueError(f"expected {self.L} free spins, got {len(spins)}")
        state = 0
        for bit, s in enumerate(spins):
            if s not in (1, -1):
                raise ValueError("spins must be +1 or -1")
            if s == -1:
                state |= 1 << bit
        return state

    def decode(self, state: int) -> tuple[int, ...]:
        if not 0 <= state < self.dim:
            raise ValueError("state out of range")
        return tuple(-1 if (state >> bit) & 1 else 1 for bit in range(self.L))

    def full_configuration(self, state: int) -> tuple[int, ...]:
        return (1, *self.decode(state), self.b)

    def site_spins(self) -> np.ndarray:
        """Array of shape (L+2, dim): spin of lattice site j+1 in every state."""
        states = np.arange(self.dim)
        out = np.empty((self.L + 2, self.dim), dtype=int)
        out[0] = 1
        out[-1] = self.b
        for bit in range(self.L):
            out[bit + 1] = 1 - 2 * ((states >> bit) & 1)
        return out


@dataclass(frozen=True)
class SpectralPoint:
    u: object
    x: object

    @classmethod
    def from_u(cls, u, prec: Precision = DOUBLE) -> SpectralPoint:
        u = prec.scalar(u)
        with prec.context():
            return cls(u, 1 / prec.sin(4 * u))

    @classmethod
    def from_x(cls, x, prec: Precision = DOUBLE) -> SpectralPoint:
        """Point with the given x, |x| > 1; u lands in (-pi/8, 0) for x < -1."""
        x = prec.scalar(x)
        if abs(x) <= 1:
            raise ValueError("|x| must exceed 1")
        with prec.context():
            return cls(prec.asin(1 / x) / 4, x)

    @classmethod
    def from_w(cls, w, prec: Precision = DOUBLE) -> SpectralPoint:
        """Point with w = 1/(2x)."""
        w = prec.scalar(w)
        with prec.context():
            return cls(prec.asin(2 * w) / 4, 1 / (2 * w))


def _check_spins(*spins):
    for s in spins:
        if s not in (1, -1):
            raise ValueError("spins must be +1 or -1")


def _singular(v: float) -> bool:
    # tan/cot of v blow up at multiples of pi/2 (tan) or pi (cot); callers pass both.
    r = math.remainder(float(v), math.pi / 2)
    return abs(r) < 1e-14


def weight_right(rho: int, tau: int, sigma: int, u, prec: Precision = DOUBLE):
    _check_spins(rho, tau, sigma)
    arg = math.pi / 4 - float(u)
    if _singular(arg):
        raise ValueError(f"weight_right is singular at u={float(u)!r}")
    with prec.context():
        a = prec.pi() / 4 - prec.scalar(u)
        t, c = prec.tan(a), prec.cot(a)
        if sigma == -tau:
            return t if sigma == rho else prec.scalar(1)
        return c if sigma == rho else prec.scalar(1)


def weight_left(rho: int, tau: int, sigma: int, u, prec: Precision = DOUBLE):
    _check_spins(rho, tau, sigma)
    if _singular(u):
        raise ValueError(f"weight_left is singular at u={float(u)!r}")
    with prec.context():
        v = prec.scalar(u)
        if sigma == tau:
            return prec.cot(v) if sigma == rho else prec.scalar(1)
        return prec.tan(v) if sigma == rho else prec.scalar(1)


def _check_u(u):
    uf = float(u)
    if not 0 < abs(uf) < math.pi / 4:
        raise ValueError("u must satisfy 0 < |u| < pi/4")


def build_transfer(basis: SpinBasis, u, prec: Precision = DOUBLE, max_L: int = DEFAULT_MAX_L):
    """Raw strip transfer matrix T[sigma, rho](u), entries straight from the weights.

    The tau chain is contracted left to right for all (sigma, rho) pairs at
    once, carrying a 2-vector over the current tau spin; cost O(L 4^L).
    Negative u in (-pi/4, 0) is accepted as the analytic continuation to x < -1.
    """
    if basis.L > max_L:
        raise ValueError(f"L={basis.L} exceeds the configured maximum {max_L}")
    _check_u(u)
    spins = basis.site_spins()
    n = basis.dim
    idx = (spins < 0).astype(int)  # 0 <-> +1, 1 <-> -1
    vals = (1, -1)
    with prec.context():
        wl = {(r, t, s): weight_left(r, t, s, u, prec) for r in vals for t in vals for s in vals}
        wr = {(r, t, s): weight_right(r, t, s, u, prec) for r in vals for t in vals for s in vals}
        # site[s_i, r_i, t_prev_i, t_i] = W_L(r, t_prev, s) * W_R(r, t, s)
        site = np.empty((2, 2, 2, 2), dtype=object)
        for (si, s), (ri, r), (pi_, tp), (ti, t) in itertools.product(enumerate(vals), repeat=4):
            site[si, ri, pi_, ti] = wl[(r, tp, s)] * wr[(r, t, s)]
        if not prec.extended:
            site = site.astype(float)

        vec = prec.zeros((n, n, 2))
        vec[..., 0] = wr[(1, 1, 1)]
        vec[..., 1] = wr[(1, -1, 1)]
        for site_no in range(1, basis.L + 1):
            k = site[idx[site_no][:, None], idx[site_no][None, :]]  # (n, n, 2, 2)
            new = prec.zeros((n, n, 2))
            for t in range(2):
                new[..., t] = vec[..., 0] * k[..., 0, t] + vec[..., 1] * k[..., 1, t]
            vec = new
        b = basis.b
        return vec[..., 0] * wl[(b, 1, b)] + vec[..., 1] * wl[(b, -1, b)]


def brute_force_transfer(basis: SpinBasis, u, prec: Precision = DOUBLE):
    """Literal sum over all 2^(L+1) tau configurations for every entry (tests only)."""
    n, L, b = basis.dim, basis.L, basis.b
    out = prec.zeros((n, n))
    with prec.context():
        for i in range(n):
            s = basis.full_configuration(i)
            for j in range(n):
                r = basis.full_configuration(j)
                total = prec.scalar(0)
                for tau in itertools.product((1, -1), repeat=L + 1):
                    w = weight_right(1, tau[0], 1, u, prec)
                    for site in range(1, L + 1):
                        w *= weight_left(r[site], tau[site - 1], s[site], u, prec)
                        w *= weight_right(r[site], tau[site], s[site], u, prec)
                    w *= weight_left(b, tau[L], b, u, prec)
                    total += w
                out[i, j] = total
    return out


def transfer_matrix(basis: SpinBasis, x, prec: Precision = DOUBLE, max_L: int = DEFAULT_MAX_L):
    """Normalized transfer matrix T(x) = T_raw(u) / (4x)^(L+1), with x = csc(4u).

    With this normalization T(x) -> identity as x -> infinity, i.e. D_0 = 1.
    """
    pt = SpectralPoint.from_x(x, prec)
    raw = build_transfer(basis, pt.u, prec, max_L)
    with prec.context():
        return raw / (4 * pt.x) ** (basis.L + 1)


def rescale_to_D(T, x, L: int, prec: Precision = DOUBLE):
    """D(x) = 2^(2L+3) x^(L+1) T(x) for the normalized T."""
    with prec.context():
        out = T * (prec.scalar(2) ** (2 * L + 3) * prec.scalar(x) ** (L + 1))
    if not prec.extended and not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite entries in D(x)")
    return out
