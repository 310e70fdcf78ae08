"""Stochastic evolution of the collective density matrix.

The element-wise equations (Ito form, ``dW`` with variance ``dt``)::

    d<n> = dt * [ -i (light_shift - frame_shift)(n_du - n_ud)
                  - gamma (chi_up + chi_dn)/2 (n_ud + n_du)
                  - (gamma chi_dn / 3) n_uu - (gamma chi_up / 3) n_dd
                  - (2 g^2 / kappa)(chi_up + chi_dn)(n_ud - n_du)^2 ] <n>
         + dt * [ (gamma chi_dn / 3) n_dd <n_uu + 1, n_dd - 1>
                  + (gamma chi_up / 3) n_uu <n_uu - 1, n_dd + 1> ]
         + dW * [ B_row + conj(B_col) - <b_m + b_m^dagger> ] <n>

with ``B_row = xi_dn (n_uu + n_du) + xi_up (n_ud + n_dd)`` (the eigenvalue of
``b_m`` on the ket-side configuration) and ``B_col`` the same on the bra side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .errors import DomainError, IntegrationError
from .index import index_tables, shift_index_array
from .noise import WienerPath
from .observables import (
    DistributionSnapshot,
    distribution_snapshot,
    spin_moments,
    squeezing_from_moments,
)
from .params import DerivedParams, PhysicalParams, derive_params
from .state import CollectiveState, css_init, hermitian_residual, log_binomials, renormalize


@dataclass(frozen=True)
class StepConfig:
    dt: float = 1e-4
    t_end: float = 1.0
    renormalize_every: int = 1
    frame_shift_override: float | None = None
    record_every: int = 100
    snapshot_times: tuple[float, ...] = ()
    measurement_on: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if not self.t_end >= self.dt:
            raise DomainError(f"t_end ({self.t_end}) must be >= dt ({self.dt})")
        if self.renormalize_every < 1 or self.record_every < 1:
            raise DomainError("renormalize_every and record_every must be >= 1")
        object.__setattr__(self, "snapshot_times", tuple(float(t) for t in self.snapshot_times))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray
    xi2_z: np.ndarray
    photocurrent: np.ndarray
    trace_err: np.ndarray
    herm_err: np.ndarray
    snapshots: list[DistributionSnapshot] = field(default_factory=list)
    final_state: CollectiveState | None = None
    label: str = ""

    COLUMNS = ("times", "jx", "jy", "jz", "dx", "dy", "dz", "xi2_z", "photocurrent", "trace_err", "herm_err")

    @property
    def xi2_defined(self) -> np.ndarray:
        return ~np.isnan(self.xi2_z)

    def __len__(self) -> int:
        return int(self.times.size)

    @classmethod
    def empty(cls) -> "TrajectoryRecord":
        return cls(*(np.zeros(0) for _ in cls.COLUMNS))


def _kernel_args(d: DerivedParams):
    return (
        d.detuning_residual,
        d.coherence_damping,
        d.rate_decay,
        d.rate_pump,
        d.collective_damping,
        complex(d.xi_up),
        complex(d.xi_dn),
    )


def drift_deterministic(s: CollectiveState, d: DerivedParams) -> np.ndarray:
    """Time derivative from the Hamiltonian, individual and collective dissipators."""
    t = index_tables(s.n_atoms)
    a = s.amplitudes
    diff = t.n_du - t.n_ud
    lin = (
        -1j * d.detuning_residual * diff
        - d.coherence_damping * (t.n_ud + t.n_du)
        - d.rate_decay * t.n_uu
        - d.rate_pump * t.n_dd
        - d.collective_damping * diff ** 2
    )
    out = lin * a
    for rate, count, delta in (
        (d.rate_decay, t.n_dd, (1, 0, 0, -1)),
        (d.rate_pump, t.n_uu, (-1, 0, 0, 1)),
    ):
        if rate == 0:
            continue
        src = shift_index_array(t, delta)
        ok = src >= 0
        out[ok] += rate * count[ok] * a[src[ok]]
    return out


def measurement_term(s: CollectiveState, d: DerivedParams, dW: float, dt: float | None = None) -> np.ndarray:
    """Backaction increment ``dW [B_row + conj(B_col) - <b + b^dagger>] <n>``.

    The increment already carries its ``dW``; ``dt`` is accepted for symmetry
    with the drift and is not used.
    """
    from .observables import bm_expectation
    from .state import trace

    t = index_tables(s.n_atoms)
    N = s.n_atoms
    up_row = t.n_uu + t.n_du
    up_col = t.n_uu + t.n_ud
    b = (d.xi_dn * up_row + d.xi_up * (N - up_row)) + np.conj(d.xi_dn * up_col + d.xi_up * (N - up_col))
    bsum = 2.0 * bm_expectation(s, d).real / trace(s)
    return dW * (b - bsum) * s.amplitudes


def step_em(s: CollectiveState, d: DerivedParams, cfg: StepConfig, dW: float) -> CollectiveState:
    """One Euler-Maruyama step followed by renormalization."""
    N = s.n_atoms
    dst = np.empty_like(s.amplitudes)
    rot, coh, decay, pump, coll, xu, xd = _kernel_args(d)
    dw = float(dW) if cfg.measurement_on else 0.0
    tr1, _, _ = _kernel.em_step(
        s.amplitudes, dst, N, log_binomials(N), rot, coh, decay, pump, coll, xu, xd, cfg.dt, dw, True
    )
    if not math.isfinite(tr1) or tr1 <= 0 or not np.all(np.isfinite(dst)):
        raise IntegrationError(f"step produced trace {tr1!r}")
    return CollectiveState(N, dst)


def step_em_reference(s: CollectiveState, d: DerivedParams, cfg: StepConfig, dW: float) -> CollectiveState:
    """Unfused numpy composition of the same step; slow, used to cross-check the kernel."""
    new = s.amplitudes + cfg.dt * drift_deterministic(s, d)
    if cfg.measurement_on:
        new = new + measurement_term(s, d, dW, cfg.dt)
    return renormalize(CollectiveState(s.n_atoms, new))


def photocurrent_sample(s: CollectiveState, d: DerivedParams, dW: float, dt: float) -> float:
    """Homodyne photocurrent ``Re<b_m> + dW/dt``."""
    from .observables import bm_expectation

    return bm_expectation(s, d).real + dW / dt


def run_trajectory(
    p: PhysicalParams,
    cfg: StepConfig,
    noise: WienerPath,
    initial: CollectiveState | None = None,
    label: str = "",
    keep_state: bool = False,
) -> TrajectoryRecord:
    """Integrate from the coherent spin state ``(p.theta, p.phi)`` and record observables.

    Rows are written at step 0, every ``cfg.record_every`` steps and at the
    final step.  The photocurrent column holds the mean of ``Re<b_m> + dW/dt``
    over the steps since the previous row (NaN on the first row).
    """
    d = derive_params(p, frame_shift=cfg.frame_shift_override)
    N = int(p.n_atoms)
    n_steps = cfg.n_steps
    dws = noise.increments(cfg.dt, n_steps)

    state = initial.copy() if initial is not None else css_init(p.theta, p.phi, N)
    if state.n_atoms != N:
        raise DomainError(f"initial state has N={state.n_atoms}, parameters say {N}")
    src = state.amplitudes
    dst = np.empty_like(src)
    logc = log_binomials(N)
    rot, coh, decay, pump, coll, xu, xd = _kernel_args(d)

    record_steps = set(range(0, n_steps + 1, cfg.record_every))
    record_steps.add(n_steps)
    snap_steps = {}
    for ts in cfg.snapshot_times:
        k = int(round(ts / cfg.dt))
        if 0 <= k <= n_steps:
            snap_steps.setdefault(k, ts)

    rows = []
    snapshots = []
    current_sum = 0.0
    current_count = 0
    last_trace_err = 0.0

    def record(k, current):
        view = CollectiveState.__new__(CollectiveState)
        view.n_atoms = N
        view.amplitudes = src
        if k in record_steps:
            m = spin_moments(view)
            rows.append(
                (
                    k * cfg.dt,
                    m.jx,
                    m.jy,
                    m.jz,
                    m.dx,
                    m.dy,
                    m.dz,
                    squeezing_from_moments(m, N),
                    current,
                    last_trace_err,
                    hermitian_residual(view),
                )
            )
        if k in snap_steps:
            snapshots.append(distribution_snapshot(view, snap_steps[k]))

    record(0, math.nan)
    for k in range(n_steps):
        dw = float(dws[k])
        renorm = (k + 1) % cfg.renormalize_every == 0
        tr1, bsum, _ = _kernel.em_step(
            src, dst, N, logc, rot, coh, decay, pump, coll, xu, xd, cfg.dt,
            dw if cfg.measurement_on else 0.0, renorm,
        )
        if not math.isfinite(tr1) or tr1 <= 0:
            raise IntegrationError(f"trace became {tr1!r}; reduce dt", step=k + 1, time=(k + 1) * cfg.dt)
        # photocurrent uses the pre-step state: Re<b_m> is half of <b + b^dagger>
        current_sum += 0.5 * bsum + dw / cfg.dt
        current_count += 1
        last_trace_err = abs(tr1 - 1.0)
        src, dst = dst, src
        step = k + 1
        if step in record_steps or step in snap_steps:
            if not np.all(np.isfinite(src)):
                raise IntegrationError("non-finite amplitudes", step=step, time=step * cfg.dt)
            current = current_sum / current_count if current_count else math.nan
            record(step, current)
            if step in record_steps:
                current_sum = 0.0
                current_count = 0

    cols = np.array(rows, dtype=np.float64).T
    rec = TrajectoryRecord(*cols, snapshots=snapshots, label=label)
    if keep_state:
        rec.final_state = CollectiveState(N, src.copy())
    return rec
