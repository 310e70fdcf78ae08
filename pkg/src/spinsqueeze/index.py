"""Flat indexing of collective density-matrix elements.

A permutation-symmetric density matrix of ``N`` two-level atoms is fully
described by one amplitude per tuple ``(n_uu, n_ud, n_du, n_dd)`` of
non-negative integers summing to ``N``.  The amplitudes live in a flat array
ordered by three nested loops: ``n_dd`` outermost, then ``n_du``, then
``n_ud``; ``n_uu`` takes the remainder.  Offsets are zero based.

Within the ``n_dd`` block the remaining ``M = N - n_dd`` atoms are split over
the three other slots, which gives the closed form::

    flat = [C(N+3, 3) - C(M+3, 3)] + [C(M+2, 2) - C(K+2, 2)] + n_ud,
    M = N - n_dd,  K = M - n_du.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

import numpy as np

from .errors import CapacityError, DomainError

_INDEX_MAX = int(np.iinfo(np.int64).max)


class MultiIndex(NamedTuple):
    """Collective numbers of one density-matrix element.

    ``n_ab`` counts atoms whose column (bra-side) level is ``a`` and whose row
    (ket-side) level is ``b``; ``u`` is the upper hyperfine ground level
    ``g_up`` and ``d`` the lower one.
    """

    n_uu: int
    n_ud: int
    n_du: int
    n_dd: int

    @property
    def atoms(self) -> int:
        return self.n_uu + self.n_ud + self.n_du + self.n_dd

    def shifted(self, delta) -> "MultiIndex":
        return MultiIndex(*(int(a) + int(b) for a, b in zip(self, delta)))


@lru_cache(maxsize=64)
def _pascal(nmax: int) -> tuple[tuple[int, ...], ...]:
    # rows 0..nmax, columns 0..3, exact integers
    rows = [(1, 0, 0, 0)]
    for n in range(1, nmax + 1):
        prev = rows[-1]
        rows.append((1,) + tuple(prev[k - 1] + prev[k] for k in range(1, 4)))
    return tuple(rows)


def _check_atoms(N: int) -> None:
    if int(N) != N or N < 1:
        raise DomainError(f"atom count must be an integer >= 1, got {N!r}")


def state_count(N: int) -> int:
    """Number of valid tuples, ``C(N+3, 3)``."""
    _check_atoms(N)
    count = (N + 3) * (N + 2) * (N + 1) // 6
    if count > _INDEX_MAX:
        raise CapacityError(f"C({N}+3, 3) = {count} exceeds the 64-bit index range")
    return count


def canonical_tuples(N: int) -> Iterator[MultiIndex]:
    """Yield every tuple in flat-index order (the reference enumeration)."""
    _check_atoms(N)
    for n_dd in range(N + 1):
        for n_du in range(N - n_dd + 1):
            for n_ud in range(N - n_dd - n_du + 1):
                yield MultiIndex(N - n_dd - n_du - n_ud, n_ud, n_du, n_dd)


def _valid(m, N: int) -> bool:
    return len(m) == 4 and all(0 <= int(x) <= N for x in m) and sum(int(x) for x in m) == N


def _encode(n_ud: int, n_du: int, n_dd: int, N: int) -> int:
    table = _pascal(N + 3)
    M = N - n_dd
    K = M - n_du
    return (table[N + 3][3] - table[M + 3][3]) + (table[M + 2][2] - table[K + 2][2]) + n_ud


def flat_index(m, N: int) -> int:
    """Zero-based offset of tuple ``m = (n_uu, n_ud, n_du, n_dd)``."""
    _check_atoms(N)
    if not _valid(m, N):
        raise DomainError(f"{tuple(m)} is not a valid collective tuple for N={N}")
    _, n_ud, n_du, n_dd = (int(x) for x in m)
    return _encode(n_ud, n_du, n_dd, N)


def multi_index(i: int, N: int) -> MultiIndex:
    """Inverse of :func:`flat_index`."""
    total = state_count(N)
    if int(i) != i or not 0 <= i < total:
        raise DomainError(f"flat index {i!r} outside [0, {total})")
    i = int(i)
    table = _pascal(N + 3)

    # largest n_dd whose block starts at or before i
    lo, hi = 0, N
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if table[N + 3][3] - table[N - mid + 3][3] <= i:
            lo = mid
        else:
            hi = mid - 1
    n_dd = lo
    M = N - n_dd
    r = i - (table[N + 3][3] - table[M + 3][3])

    lo, hi = 0, M
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if table[M + 2][2] - table[M - mid + 2][2] <= r:
            lo = mid
        else:
            hi = mid - 1
    n_du = lo
    n_ud = r - (table[M + 2][2] - table[M - n_du + 2][2])
    return MultiIndex(M - n_du - n_ud, n_ud, n_du, n_dd)


def shift_index(i: int, delta, N: int) -> int | None:
    """Offset of ``multi_index(i) + delta``, or ``None`` when that tuple is invalid.

    ``None`` marks a boundary term that the caller drops.
    """
    m = multi_index(i, N).shifted(delta)
    if not _valid(m, N):
        return None
    return _encode(m.n_ud, m.n_du, m.n_dd, N)


def flat_index_array(n_ud, n_du, n_dd, N: int) -> np.ndarray:
    """Vectorised closed-form encoder; inputs are assumed valid."""
    n_ud = np.asarray(n_ud, dtype=np.int64)
    n_du = np.asarray(n_du, dtype=np.int64)
    n_dd = np.asarray(n_dd, dtype=np.int64)
    M = N - n_dd
    K = M - n_du
    c3 = lambda x: x * (x - 1) * (x - 2) // 6  # noqa: E731
    c2 = lambda x: x * (x - 1) // 2  # noqa: E731
    return (c3(N + 3) - c3(M + 3)) + (c2(M + 2) - c2(K + 2)) + n_ud


def shift_index_array(tables: "IndexTables", delta) -> np.ndarray:
    """Vectorised :func:`shift_index` over every flat index; ``-1`` marks out of domain."""
    d = [int(x) for x in delta]
    if sum(d) != 0:
        return np.full(tables.size, -1, dtype=np.int64)
    uu = tables.n_uu + d[0]
    ud = tables.n_ud + d[1]
    du = tables.n_du + d[2]
    dd = tables.n_dd + d[3]
    ok = (uu >= 0) & (ud >= 0) & (du >= 0) & (dd >= 0)
    out = np.full(tables.size, -1, dtype=np.int64)
    out[ok] = flat_index_array(ud[ok], du[ok], dd[ok], tables.n_atoms)
    return out


@dataclass(frozen=True)
class IndexTables:
    """Precomputed per-``N`` lookup arrays.

    ``diag[l]`` addresses ``(l, 0, 0, N-l)``.  The ``sector_*`` arrays address
    the coherence sectors read by the spin moments, paired with the ``l``
    values of the corresponding sums.
    """

    n_atoms: int
    n_uu: np.ndarray
    n_ud: np.ndarray
    n_du: np.ndarray
    n_dd: np.ndarray
    diag: np.ndarray
    partner: np.ndarray
    sector_du1: tuple[np.ndarray, np.ndarray]
    sector_du2: tuple[np.ndarray, np.ndarray]
    sector_ud1_du1: tuple[np.ndarray, np.ndarray]
    sector_ud2: tuple[np.ndarray, np.ndarray]

    @property
    def size(self) -> int:
        return self.n_uu.size


@lru_cache(maxsize=16)
def index_tables(N: int) -> IndexTables:
    size = state_count(N)
    n_ud = np.empty(size, dtype=np.int64)
    n_du = np.empty(size, dtype=np.int64)
    n_dd = np.empty(size, dtype=np.int64)
    pos = 0
    for dd in range(N + 1):
        M = N - dd
        # n_du outer, n_ud inner, both bounded by M
        du, ud = np.nonzero(np.add.outer(np.arange(M + 1), np.arange(M + 1)) <= M)
        k = du.size
        n_dd[pos:pos + k] = dd
        n_du[pos:pos + k] = du
        n_ud[pos:pos + k] = ud
        pos += k
    n_uu = N - n_ud - n_du - n_dd
    for arr in (n_uu, n_ud, n_du, n_dd):
        arr.setflags(write=False)

    ls = np.arange(N + 1)
    diag = flat_index_array(0, 0, N - ls, N)
    partner = flat_index_array(n_du, n_ud, n_dd, N)

    def sector(l, uu, ud, du, dd):
        return l, flat_index_array(ud, du, dd, N)

    l1 = np.arange(1, N + 1)
    l2 = np.arange(2, N + 1)
    l11 = np.arange(1, N)
    l0 = np.arange(0, N - 1)
    return IndexTables(
        n_atoms=N,
        n_uu=n_uu,
        n_ud=n_ud,
        n_du=n_du,
        n_dd=n_dd,
        diag=diag,
        partner=partner,
        sector_du1=sector(l1, l1 - 1, 0 * l1, 1 + 0 * l1, N - l1),
        sector_du2=sector(l2, l2 - 2, 0 * l2, 2 + 0 * l2, N - l2),
        sector_ud1_du1=sector(l11, l11 - 1, 1 + 0 * l11, 1 + 0 * l11, N - l11 - 1),
        sector_ud2=sector(l0, l0, 2 + 0 * l0, 0 * l0, N - l0 - 2),
    )
