"""The collective density matrix and its elementary operations."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError, IntegrationError
from .index import index_tables, state_count
from .params import cos_sin

# direct powers are exact enough below this size; log-space above
LOG_SPACE_ABOVE = 64
# direct powers are used while the smallest product stays well inside the normal range
_DIRECT_POWER_FLOOR = 1e-280

_DUMP_MAGIC = b"CDMS"
_DUMP_VERSION = 1
_DUMP_HEADER = struct.Struct("<4sIII")


@dataclass
class CollectiveState:
    """Amplitudes ``<n>`` for every collective tuple, in flat-index order."""

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (state_count(self.n_atoms),):
            raise DomainError(
                f"expected {state_count(self.n_atoms)} amplitudes for N={self.n_atoms}, "
                f"got shape {self.amplitudes.shape}"
            )

    def copy(self) -> "CollectiveState":
        return CollectiveState(self.n_atoms, self.amplitudes.copy())

    def diagonal(self) -> np.ndarray:
        """Bare diagonal elements ``<l, 0; 0, N-l>`` for ``l = 0..N``."""
        return self.amplitudes[index_tables(self.n_atoms).diag]

    @classmethod
    def zeros(cls, N: int) -> "CollectiveState":
        return cls(N, np.zeros(state_count(N), dtype=np.complex128))


@lru_cache(maxsize=32)
def log_binomials(N: int) -> np.ndarray:
    """``log C(N, l)`` for ``l = 0..N``, from exact integer binomials."""
    out = np.empty(N + 1)
    c = 1
    for l in range(N + 1):
        out[l] = math.log(c)
        c = c * (N - l) // (l + 1)
    out.setflags(write=False)
    return out


def binomial_weighted(log_c: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``C * values`` evaluated as ``exp(log C + log|v|) * phase``.

    Binomials near ``C(N, N/2)`` and amplitudes near ``2**-N`` overflow and
    underflow separately; only their product is of order one.
    """
    values = np.asarray(values)
    mag = np.abs(values)
    out = np.zeros(values.shape, dtype=values.dtype)
    nz = mag > 0
    scaled = np.exp(log_c[nz] + np.log(mag[nz]))
    if np.iscomplexobj(values):
        out[nz] = scaled * np.exp(1j * np.angle(values[nz]))
    else:
        out[nz] = np.copysign(scaled, values[nz])
    return out


def css_amplitudes(theta: float, phi: float, N: int) -> np.ndarray:
    # half-angle forms: |d_up|^2 = (1 - cos theta)/2, d_up conj(d_dn) = sin(theta)/2 e^{i phi}
    c, s = cos_sin(theta)
    cp, sp = cos_sin(phi)
    up_up = 0.5 * (1.0 - c)
    dn_dn = 0.5 * (1.0 + c)
    up_dn = 0.5 * s * complex(cp, sp)
    # factor d_a * conj(d_b) for each (a, b) pair: uu, ud, du, dd
    factors = (complex(up_up), up_dn, up_dn.conjugate(), complex(dn_dn))
    t = index_tables(N)
    counts = (t.n_uu, t.n_ud, t.n_du, t.n_dd)

    nonzero = [abs(f) for f in factors if f != 0]
    direct = N <= LOG_SPACE_ABOVE or min(nonzero) ** N > _DIRECT_POWER_FLOOR
    mag = np.ones(t.size)
    log_mag = np.zeros(t.size)
    phase = np.zeros(t.size)
    zero = np.zeros(t.size, dtype=bool)
    for f, n in zip(factors, counts):
        if f == 0:
            zero |= n > 0
            continue
        if direct:
            # exact for powers of two, e.g. the equatorial state
            mag *= np.power(abs(f), n)
        else:
            log_mag += n * math.log(abs(f))
        phase += n * math.atan2(f.imag, f.real)
    if not direct:
        mag = np.exp(log_mag)
    amp = mag * np.exp(1j * phase) if np.any(phase) else mag.astype(np.complex128)
    amp[zero] = 0.0
    return amp


def css_init(theta: float, phi: float, N: int) -> CollectiveState:
    """Coherent spin state with ``d_up = sin(theta/2) e^{i phi}``, ``d_dn = cos(theta/2)``.

    Element ``<n>`` is the product of ``d_a conj(d_b)`` raised to ``n_ab``.
    """
    return CollectiveState(N, css_amplitudes(theta, phi, N))


def trace(s: CollectiveState) -> float:
    """``sum_l C(N, l) Re<l, 0; 0, N-l>``."""
    diag = s.diagonal()
    return float(np.sum(binomial_weighted(log_binomials(s.n_atoms), diag.real)))


def trace_imag_residual(s: CollectiveState) -> float:
    """Binomially weighted imaginary part of the diagonal; zero for hermitian states."""
    diag = s.diagonal()
    return float(np.sum(binomial_weighted(log_binomials(s.n_atoms), diag.imag)))


def renormalize(s: CollectiveState) -> CollectiveState:
    tr = trace(s)
    if not math.isfinite(tr) or tr <= 0:
        raise IntegrationError(f"cannot renormalize state with trace {tr!r}; reduce dt")
    return CollectiveState(s.n_atoms, s.amplitudes / tr)


def hermitian_residual(s: CollectiveState) -> float:
    """``max |<uu,ud,du,dd> - conj<uu,du,ud,dd>|`` over all tuples."""
    a = s.amplitudes
    partner = index_tables(s.n_atoms).partner
    return float(np.max(np.abs(a - np.conj(a[partner]))))


def save_state(s: CollectiveState, path) -> None:
    """Binary dump: 16-byte header (magic, version, N, reserved) then little-endian (re, im) pairs."""
    path = Path(path)
    data = np.ascontiguousarray(s.amplitudes, dtype="<c16")
    with path.open("wb") as fh:
        fh.write(_DUMP_HEADER.pack(_DUMP_MAGIC, _DUMP_VERSION, s.n_atoms, 0))
        fh.write(data.tobytes())


def load_state(path) -> CollectiveState:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _DUMP_HEADER.size:
        raise DomainError(f"{path}: truncated state dump")
    magic, version, N, _ = _DUMP_HEADER.unpack_from(raw)
    if magic != _DUMP_MAGIC or version != _DUMP_VERSION:
        raise DomainError(f"{path}: not a version-{_DUMP_VERSION} CDMS state dump")
    body = raw[_DUMP_HEADER.size:]
    expected = 16 * state_count(N)
    if len(body) != expected:
        raise DomainError(f"{path}: expected {expected} payload bytes for N={N}, found {len(body)}")
    return CollectiveState(N, np.frombuffer(body, dtype="<c16").astype(np.complex128))
