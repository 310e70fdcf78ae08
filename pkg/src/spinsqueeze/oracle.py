"""Brute-force reference on the full ``2**N x 2**N`` density matrix.

Every operator is assembled from explicit single-atom matrices with Kronecker
products; nothing here uses the permutation symmetry that the collective
solver relies on.  Product-basis state ``|a_1 ... a_N>`` has flat index
``sum_k a_k 2**(N-1-k)`` with ``a_k = 1`` for ``g_up``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DomainError, IntegrationError, OracleIntegrityError
from .index import canonical_tuples, flat_index, state_count
from .observables import SpinMoments
from .params import PhysicalParams, cos_sin, derive_params
from .state import CollectiveState

MAX_ATOMS = 4
SYMMETRY_TOL = 1e-10

# single-atom matrices in the (down, up) basis
_P_DN = np.array([[1, 0], [0, 0]], dtype=np.complex128)
_P_UP = np.array([[0, 0], [0, 1]], dtype=np.complex128)
_RAISE = np.array([[0, 0], [1, 0]], dtype=np.complex128)  # |up><down|
_LOWER = _RAISE.T.copy()  # |down><up|
_EYE = np.eye(2, dtype=np.complex128)


@dataclass
class FullDensityMatrix:
    n_atoms: int
    rho: np.ndarray

    def __post_init__(self):
        _check_capacity(self.n_atoms)
        dim = 2 ** self.n_atoms
        self.rho = np.asarray(self.rho, dtype=np.complex128)
        if self.rho.shape != (dim, dim):
            raise DomainError(f"expected a {dim}x{dim} matrix for N={self.n_atoms}, got {self.rho.shape}")

    def copy(self) -> "FullDensityMatrix":
        return FullDensityMatrix(self.n_atoms, self.rho.copy())

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T)).min())


def _check_capacity(N: int) -> None:
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if N > MAX_ATOMS:
        raise CapacityError(f"the full-matrix oracle is limited to N <= {MAX_ATOMS}, got {N}")


def site_operator(op: np.ndarray, k: int, N: int) -> np.ndarray:
    """``op`` acting on atom ``k`` (0-based, most significant bit first)."""
    out = np.ones((1, 1), dtype=np.complex128)
    for j in range(N):
        out = np.kron(out, op if j == k else _EYE)
    return out


@lru_cache(maxsize=8)
def _operators(N: int):
    ops = {
        name: [site_operator(m, k, N) for k in range(N)]
        for name, m in (("p_up", _P_UP), ("p_dn", _P_DN), ("raise", _RAISE), ("lower", _LOWER))
    }
    return ops


def collective_operator(name: str, N: int) -> np.ndarray:
    """Sum over atoms of a single-atom operator: ``p_up``, ``p_dn``, ``raise`` or ``lower``."""
    _check_capacity(N)
    return sum(_operators(N)[name])


def spin_operators(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(J_x, J_y, J_z)`` as explicit matrices."""
    sp = collective_operator("raise", N)
    sm = collective_operator("lower", N)
    jx = 0.5 * (sp + sm)
    jy = (sp - sm) / 2j
    jz = 0.5 * (collective_operator("p_up", N) - collective_operator("p_dn", N))
    return jx, jy, jz


def css_density_matrix(theta: float, phi: float, N: int) -> FullDensityMatrix:
    """Product state of ``cos(theta/2)|down> + sin(theta/2) e^{-i phi}|up>``.

    With elements read as ``<beta|rho|alpha>`` this reproduces the collective
    product formula built from ``d_up = sin(theta/2) e^{i phi}``.
    """
    _check_capacity(N)
    c, s = cos_sin(theta / 2)
    cp, sp = cos_sin(phi)
    psi1 = np.array([c, s * complex(cp, -sp)], dtype=np.complex128)
    psi = np.ones(1, dtype=np.complex128)
    for _ in range(N):
        psi = np.kron(psi, psi1)
    return FullDensityMatrix(N, np.outer(psi, psi.conj()))


def _dissipator(o: np.ndarray, rho: np.ndarray) -> np.ndarray:
    oo = o.conj().T @ o
    return 0.5 * (oo @ rho + rho @ oo) - o @ rho @ o.conj().T


def _backaction(o: np.ndarray, rho: np.ndarray) -> np.ndarray:
    orho = o @ rho
    rho_od = rho @ o.conj().T
    return orho + rho_od - np.trace(orho + rho_od) * rho


def sme_generators(p: PhysicalParams, frame_shift: float | None = None):
    """Hamiltonian, Lindblad list ``[(rate, op)]`` and measured operator.

    Only ``chi`` and ``xi`` are taken from :func:`derive_params`; every rate is
    rebuilt here from ``gamma``, ``g`` and ``kappa``.
    """
    N = int(p.n_atoms)
    _check_capacity(N)
    d = derive_params(p, frame_shift=frame_shift)
    ops = _operators(N)
    p_up = collective_operator("p_up", N)
    p_dn = collective_operator("p_dn", N)
    # each level is shifted by the drive coupling the other level
    ham = -2.0 * p.delta_up * d.chi_up * p_dn - 2.0 * p.delta_dn * d.chi_dn * p_up - d.frame_shift * p_up
    chi_bar = {"up": d.chi_dn, "dn": d.chi_up}
    lindblad = []
    for k in range(N):
        lindblad.append((p.gamma * chi_bar["up"] * 2 / 3, ops["p_up"][k]))
        lindblad.append((p.gamma * chi_bar["dn"] * 2 / 3, ops["p_dn"][k]))
        lindblad.append((p.gamma * chi_bar["up"] / 3, ops["lower"][k]))
        lindblad.append((p.gamma * chi_bar["dn"] / 3, ops["raise"][k]))
    coll = 4 * p.g ** 2 / p.kappa
    lindblad.append((coll * chi_bar["up"], p_up))
    lindblad.append((coll * chi_bar["dn"], p_dn))
    b_m = d.xi_dn * p_up + d.xi_up * p_dn
    return ham, [(r, o) for r, o in lindblad if r != 0.0], b_m


def full_sme_step(
    rho: FullDensityMatrix,
    p: PhysicalParams,
    dt: float,
    dW: float,
    measurement_on: bool = True,
    frame_shift: float | None = None,
    generators=None,
) -> FullDensityMatrix:
    """One Euler-Maruyama step of the effective master equation, then trace renormalization.

    ``generators`` may carry a cached :func:`sme_generators` result.
    """
    if rho.n_atoms != p.n_atoms:
        raise DomainError(f"state has N={rho.n_atoms}, parameters say N={p.n_atoms}")
    ham, lindblad, b_m = generators if generators is not None else sme_generators(p, frame_shift)
    r = rho.rho
    drift = -1j * (ham @ r - r @ ham)
    for rate, o in lindblad:
        drift -= rate * _dissipator(o, r)
    new = r + dt * drift
    if measurement_on and dW != 0.0:
        new = new + dW * _backaction(b_m, r)
    tr = np.trace(new).real
    if not math.isfinite(tr) or tr <= 0:
        raise IntegrationError(f"oracle trace became {tr!r}")
    return FullDensityMatrix(rho.n_atoms, new / tr)


def evolve(
    rho: FullDensityMatrix,
    p: PhysicalParams,
    dt: float,
    dws,
    measurement_on: bool = True,
    frame_shift: float | None = None,
) -> FullDensityMatrix:
    """Apply :func:`full_sme_step` once per increment in ``dws``."""
    gens = sme_generators(p, frame_shift)
    for dw in dws:
        rho = full_sme_step(rho, p, dt, float(dw), measurement_on, generators=gens)
    return rho


def _levels(i: int, N: int) -> tuple[int, ...]:
    return tuple((i >> (N - 1 - k)) & 1 for k in range(N))


def _tuple_of(row: int, col: int, N: int) -> tuple[int, int, int, int]:
    """Collective numbers of ``<row|rho|col>``; ``n_ab`` counts column level ``a``, row level ``b``."""
    counts = [0, 0, 0, 0]
    for a, b in zip(_levels(col, N), _levels(row, N)):
        # slot order uu, ud, du, dd
        counts[(1 - a) * 2 + (1 - b)] += 1
    return tuple(counts)


def _representative(m: tuple[int, int, int, int], N: int) -> tuple[int, int]:
    col_bits = [1] * (m[0] + m[1]) + [0] * (m[2] + m[3])
    row_bits = [1] * m[0] + [0] * m[1] + [1] * m[2] + [0] * m[3]
    col = sum(bit << (N - 1 - k) for k, bit in enumerate(col_bits))
    row = sum(bit << (N - 1 - k) for k, bit in enumerate(row_bits))
    return row, col


def symmetry_residual(rho: FullDensityMatrix) -> float:
    """Largest spread of matrix elements within one collective class."""
    N = rho.n_atoms
    dim = 2 ** N
    ref = {}
    worst = 0.0
    for row in range(dim):
        for col in range(dim):
            m = _tuple_of(row, col, N)
            v = rho.rho[row, col]
            if m in ref:
                worst = max(worst, abs(v - ref[m]))
            else:
                ref[m] = v
    return worst


def collective_projection(rho: FullDensityMatrix, tol: float = SYMMETRY_TOL) -> CollectiveState:
    """Read one representative element per collective class.

    Raises :class:`OracleIntegrityError` if equivalent elements differ by more
    than ``tol``.
    """
    N = rho.n_atoms
    residual = symmetry_residual(rho)
    if residual > tol:
        raise OracleIntegrityError(f"density matrix is not permutation symmetric (residual {residual:.3e})")
    amp = np.empty(state_count(N), dtype=np.complex128)
    for i, m in enumerate(canonical_tuples(N)):
        row, col = _representative(tuple(m), N)
        amp[i] = rho.rho[row, col]
    return CollectiveState(N, amp)


def embed(s: CollectiveState) -> FullDensityMatrix:
    """Full matrix whose every element is the collective amplitude of its class."""
    N = s.n_atoms
    _check_capacity(N)
    dim = 2 ** N
    rho = np.empty((dim, dim), dtype=np.complex128)
    for row in range(dim):
        for col in range(dim):
            rho[row, col] = s.amplitudes[flat_index(_tuple_of(row, col, N), N)]
    return FullDensityMatrix(N, rho)


def symmetrize(rho: np.ndarray, N: int) -> np.ndarray:
    """Average of ``rho`` over all atom permutations."""
    _check_capacity(N)
    dim = 2 ** N
    out = np.zeros((dim, dim), dtype=np.complex128)
    perms = list(itertools.permutations(range(N)))
    for perm in perms:
        idx = np.array(
            [sum(_levels(i, N)[perm[k]] << (N - 1 - k) for k in range(N)) for i in range(dim)]
        )
        out += rho[np.ix_(idx, idx)]
    return out / len(perms)


def random_symmetric_state(N: int, rng: np.random.Generator, rank: int | None = None) -> FullDensityMatrix:
    """Random permutation-symmetric density matrix with unit trace."""
    dim = 2 ** N
    rank = dim if rank is None else rank
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = symmetrize(a @ a.conj().T, N)
    rho = 0.5 * (rho + rho.conj().T)
    return FullDensityMatrix(N, rho / np.trace(rho).real)


def oracle_observables(rho: FullDensityMatrix) -> SpinMoments:
    """Spin moments by direct traces against explicit operators."""
    jx, jy, jz = spin_operators(rho.n_atoms)
    r = rho.rho

    def ev(o):
        return np.trace(o @ r)

    vals = [ev(o) for o in (jx, jy, jz, jx @ jx, jy @ jy, jz @ jz)]
    residual = max(abs(v.imag) for v in vals)
    return SpinMoments(*(float(v.real) for v in vals), imag_residual=residual)


def bm_expectation_full(rho: FullDensityMatrix, p: PhysicalParams) -> complex:
    _, _, b_m = sme_generators(p)
    return complex(np.trace(b_m @ rho.rho))


@dataclass(frozen=True)
class EquivalenceReport:
    n_atoms: int
    steps: int
    max_abs_diff: float
    symmetry_residual: float
    min_eigenvalue: float

    def passed(self, tol: float) -> bool:
        return self.max_abs_diff < tol and self.symmetry_residual <= SYMMETRY_TOL


def equivalence_check(
    p: PhysicalParams,
    dt: float,
    increments,
    measurement_on: bool = True,
    frame_shift: float | None = None,
) -> EquivalenceReport:
    """Evolve the collective solver and the oracle with the same increments and compare."""
    from .dynamics import StepConfig, step_em
    from .state import css_init

    N = int(p.n_atoms)
    increments = np.asarray(increments, dtype=np.float64)
    d = derive_params(p, frame_shift=frame_shift)
    cfg = StepConfig(dt=dt, t_end=dt * max(len(increments), 1), measurement_on=measurement_on)
    s = css_init(p.theta, p.phi, N)
    rho = css_density_matrix(p.theta, p.phi, N)
    gens = sme_generators(p, frame_shift)
    for dw in increments:
        s = step_em(s, d, cfg, float(dw))
        rho = full_sme_step(rho, p, dt, float(dw), measurement_on, generators=gens)
    sym = symmetry_residual(rho)
    proj = collective_projection(rho, tol=max(SYMMETRY_TOL, sym))
    return EquivalenceReport(
        n_atoms=N,
        steps=len(increments),
        max_abs_diff=float(np.max(np.abs(proj.amplitudes - s.amplitudes))),
        symmetry_residual=sym,
        min_eigenvalue=rho.min_eigenvalue(),
    )
