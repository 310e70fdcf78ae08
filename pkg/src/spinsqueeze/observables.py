"""Physical readouts of a collective state.

All sums over the excitation number ``l`` pair the binomial ``C(N, l)`` with
the bare element through :func:`~spinsqueeze.state.binomial_weighted`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .index import index_tables
from .params import DerivedParams
from .state import CollectiveState, binomial_weighted, log_binomials

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class SpinMoments:
    jx: float
    jy: float
    jz: float
    jx2: float
    jy2: float
    jz2: float
    # largest imaginary residue of the sums above; zero for hermitian states
    imag_residual: float = 0.0

    @property
    def dx(self) -> float:
        return math.sqrt(max(self.jx2 - self.jx ** 2, 0.0))

    @property
    def dy(self) -> float:
        return math.sqrt(max(self.jy2 - self.jy ** 2, 0.0))

    @property
    def dz(self) -> float:
        return math.sqrt(max(self.jz2 - self.jz ** 2, 0.0))

    def mean(self, axis: str) -> float:
        return getattr(self, "j" + axis)

    def variance(self, axis: str) -> float:
        return getattr(self, "j" + axis + "2") - getattr(self, "j" + axis) ** 2


@dataclass(frozen=True)
class DistributionSnapshot:
    """Bare diagonal elements against ``l`` under the three plotting weights."""

    time: float
    l: np.ndarray
    weight1: np.ndarray
    weightL: np.ndarray
    weightL2: np.ndarray

    def values(self, weight: str = "L") -> np.ndarray:
        return {"1": self.weight1, "L": self.weightL, "L2": self.weightL2}[weight]


def _sector_sum(s: CollectiveState, sector, coeff) -> complex:
    ls, idx = sector
    if ls.size == 0:
        return 0j
    logc = log_binomials(s.n_atoms)[ls]
    return complex(np.sum(coeff * binomial_weighted(logc, s.amplitudes[idx])))


def _diag_sum(s: CollectiveState, coeff) -> complex:
    logc = log_binomials(s.n_atoms)
    return complex(np.sum(coeff * binomial_weighted(logc, s.diagonal())))


def spin_expectations(s: CollectiveState) -> tuple[float, float, float]:
    """``(<J_x>, <J_y>, <J_z>)``.

    ``J_x`` and ``J_y`` read the single-coherence sector ``(l-1, 0; 1, N-l)``,
    ``J_z`` the diagonal.
    """
    N = s.n_atoms
    t = index_tables(N)
    coh = _sector_sum(s, t.sector_du1, t.sector_du1[0])
    jz = _diag_sum(s, 0.5 * (2 * np.arange(N + 1) - N))
    return coh.real, -coh.imag, jz.real


def spin_second_moments(s: CollectiveState) -> tuple[float, float, float]:
    """``(<J_x^2>, <J_y^2>, <J_z^2>)``."""
    return _second_moments(s)[:3]


def _second_moments(s: CollectiveState):
    N = s.n_atoms
    t = index_tables(N)
    l = np.arange(N + 1)
    lowering = _sector_sum(s, t.sector_du2, t.sector_du2[0] * (t.sector_du2[0] - 1))
    raising = _sector_sum(s, t.sector_ud2, (N - t.sector_ud2[0]) * (N - t.sector_ud2[0] - 1))
    mixed = _sector_sum(s, t.sector_ud1_du1, 2 * t.sector_ud1_du1[0] * (N - t.sector_ud1_du1[0]))
    norm = _diag_sum(s, np.full(N + 1, float(N)))
    jx2 = 0.25 * (lowering + norm + mixed + raising)
    jy2 = -0.25 * (lowering - norm - mixed + raising)
    jz2 = _diag_sum(s, 0.25 * (2 * l - N) ** 2)
    residual = max(abs(jx2.imag), abs(jy2.imag), abs(jz2.imag))
    return jx2.real, jy2.real, jz2.real, residual


def spin_moments(s: CollectiveState) -> SpinMoments:
    jx, jy, jz = spin_expectations(s)
    jx2, jy2, jz2, residual = _second_moments(s)
    return SpinMoments(jx, jy, jz, jx2, jy2, jz2, residual)


def squeezing_from_moments(m: SpinMoments, N: int, axes=("z", "x", "y")) -> float:
    """``N Var(J_a) / (<J_b>^2 + <J_c>^2)`` for ``axes = (a, b, c)``.

    Returns NaN when the transverse projection vanishes; callers treat NaN as
    the undefined flag.
    """
    a, b, c = axes
    if sorted(axes) != list(AXES):
        raise ValueError(f"axes must be a permutation of x, y, z, got {axes!r}")
    denom = m.mean(b) ** 2 + m.mean(c) ** 2
    if denom < (1e-12 * N) ** 2:
        return math.nan
    return N * m.variance(a) / denom


def squeezing_parameter(s: CollectiveState, axes=("z", "x", "y")) -> float:
    return squeezing_from_moments(spin_moments(s), s.n_atoms, axes)


def bm_expectation(s: CollectiveState, d: DerivedParams) -> complex:
    """``<b_m> = sum_l C(N, l) [xi_up (N - l) + xi_dn l] <l, 0; 0, N-l>``.

    ``l`` counts atoms in ``g_up``; ``xi_dn`` multiplies that population.
    """
    N = s.n_atoms
    l = np.arange(N + 1)
    return _diag_sum(s, d.xi_up * (N - l) + d.xi_dn * l)


def diagonal_distribution(s: CollectiveState) -> np.ndarray:
    """Populations ``C(N, l) Re<l, 0; 0, N-l>`` of the ``J_z`` eigenvalues."""
    return binomial_weighted(log_binomials(s.n_atoms), s.diagonal().real)


def distribution_snapshot(s: CollectiveState, time: float = 0.0) -> DistributionSnapshot:
    """Bare diagonal ``<l, 0; 0, N-l>`` times ``1``, ``l - N/2`` and ``(l - N/2)^2``.

    No binomial factor is applied.
    """
    N = s.n_atoms
    l = np.arange(N + 1)
    bare = s.diagonal().real
    shift = l - N / 2
    return DistributionSnapshot(float(time), l, bare.copy(), shift * bare, shift ** 2 * bare)
