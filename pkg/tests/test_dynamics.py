from __future__ import annotations

import math

import numpy as np
import pytest

from spinsqueeze import oracle
from spinsqueeze.dynamics import (
    StepConfig,
    TrajectoryRecord,
    drift_deterministic,
    measurement_term,
    photocurrent_sample,
    run_trajectory,
    step_em,
    step_em_reference,
)
from spinsqueeze.errors import DomainError, IntegrationError
from spinsqueeze.index import flat_index, index_tables
from spinsqueeze.noise import WienerPath
from spinsqueeze.observables import bm_expectation
from spinsqueeze.params import TWO_PI, PhysicalParams, derive_params
from spinsqueeze.state import CollectiveState, css_init, hermitian_residual, trace


def perturbed_state(N, rng, scale=0.1):
    # hermitian perturbation of a CSS, so every sector is populated
    s = css_init(1.1, 0.4, N)
    t = index_tables(N)
    noise = scale * (rng.standard_normal(t.size) + 1j * rng.standard_normal(t.size))
    noise = 0.5 * (noise + np.conj(noise[t.partner]))
    return CollectiveState(N, s.amplitudes * (1 + noise))


def test_step_config_validation():
    with pytest.raises(DomainError):
        StepConfig(dt=0.0)
    with pytest.raises(DomainError):
        StepConfig(dt=1e-3, t_end=1e-4)
    with pytest.raises(DomainError):
        StepConfig(record_every=0)
    assert StepConfig(dt=1e-4, t_end=0.5).n_steps == 5000


def test_drift_zero_on_diagonal_for_rotation_and_collective_terms():
    N = 6
    d = derive_params(PhysicalParams(n_atoms=N, gamma=0.0), frame_shift=0.0)
    s = css_init(1.0, 0.2, N)
    t = index_tables(N)
    out = drift_deterministic(s, d)
    np.testing.assert_array_equal(out[t.diag], 0)


def test_drift_at_fully_pumped_tuple():
    N = 5
    d = derive_params(PhysicalParams(n_atoms=N))
    s = CollectiveState.zeros(N)
    s.amplitudes[flat_index((N, 0, 0, 0), N)] = 1.0
    assert np.all(drift_deterministic(s, d) == 0)


def test_drift_single_coherence_ideal():
    N = 8
    p = PhysicalParams(n_atoms=N, gamma=0.0, vartheta=0.3)
    d = derive_params(p)
    s = css_init(1.3, 0.1, N)
    out = drift_deterministic(s, d)
    rate = 2 * p.g ** 2 / p.kappa * (d.chi_up + d.chi_dn)
    for l in range(1, N + 1):
        i = flat_index((l - 1, 0, 1, N - l), N)
        assert out[i] == pytest.approx(-rate * s.amplitudes[i], rel=1e-14)


def test_drift_is_trace_free(rng):
    for N in (1, 3, 10):
        d = derive_params(PhysicalParams(n_atoms=N, vartheta=0.4), frame_shift=0.0)
        s = perturbed_state(N, rng)
        deriv = CollectiveState(N, drift_deterministic(s, d))
        assert abs(trace(deriv)) < 1e-12


def test_measurement_examples():
    N = 4
    s = css_init(math.pi / 2, 0.0, N)
    d0 = derive_params(PhysicalParams(n_atoms=N, eta=0.0))
    assert np.all(measurement_term(s, d0, 0.1) == 0)

    d = derive_params(PhysicalParams(n_atoms=N))
    l0 = 2
    s1 = CollectiveState.zeros(N)
    s1.amplitudes[flat_index((l0, 0, 0, N - l0), N)] = 1 / math.comb(N, l0)
    assert np.all(np.abs(measurement_term(s1, d, 0.3)) < 1e-15)


def test_measurement_reweights_diagonal():
    N = 2
    d = derive_params(PhysicalParams(n_atoms=N))
    s = css_init(math.pi / 2, 0.0, N)
    dt = 1e-4
    out = step_em(s, d, StepConfig(dt=dt, t_end=dt), math.sqrt(dt))
    diag = out.diagonal().real
    # Re(xi_dn - xi_up) < 0 here, so a positive increment favours small l
    assert (d.xi_dn - d.xi_up).real < 0
    assert diag[0] > diag[1] > diag[2]
    neg = step_em(s, d, StepConfig(dt=dt, t_end=dt), -math.sqrt(dt)).diagonal().real
    assert neg[0] < neg[1] < neg[2]


def test_step_without_drive_is_identity():
    s = css_init(1.0, 0.5, 7)
    d = derive_params(PhysicalParams(n_atoms=7, beta_in=0.0))
    out = step_em(s, d, StepConfig(dt=1e-3, t_end=1e-3), 0.0)
    np.testing.assert_allclose(out.amplitudes, s.amplitudes, rtol=1e-15, atol=0)


@pytest.mark.parametrize("N", [1, 2, 5, 12, 40])
def test_kernel_matches_reference(N, rng):
    for kw, fs in (({}, None), ({"vartheta": 0.3}, 0.0), ({"gamma": 0.0, "delta_dn": TWO_PI * 700, "vartheta": 1.0}, 3.0)):
        d = derive_params(PhysicalParams(n_atoms=N, **kw), frame_shift=fs)
        s = perturbed_state(N, rng)
        cfg = StepConfig(dt=1e-3, t_end=1e-3)
        for dw in (0.0, 0.03, -0.05):
            a = step_em(s, d, cfg, dw).amplitudes
            b = step_em_reference(s, d, cfg, dw).amplitudes
            assert np.max(np.abs(a - b)) <= 1e-14 * np.max(np.abs(b))


def test_one_step_against_oracle():
    p = PhysicalParams(n_atoms=3)
    d = derive_params(p)
    dt = 1e-4
    for dw in (0.0, 0.01, -0.007):
        s = step_em(css_init(p.theta, p.phi, 3), d, StepConfig(dt=dt, t_end=dt), dw)
        rho = oracle.full_sme_step(oracle.css_density_matrix(p.theta, p.phi, 3), p, dt, dw)
        np.testing.assert_allclose(s.amplitudes, oracle.collective_projection(rho).amplitudes, atol=1e-10, rtol=0)


def test_trace_preserved_without_measurement():
    p = PhysicalParams(n_atoms=4, vartheta=0.3)
    cfg = StepConfig(dt=1e-4, t_end=0.1, measurement_on=False, record_every=1000)
    rec = run_trajectory(p, cfg, WienerPath.from_seed(1, cfg.n_steps))
    assert np.all(rec.trace_err < 1e-9)


def test_hermiticity_preserved():
    p = PhysicalParams(n_atoms=30, vartheta=0.2)
    cfg = StepConfig(dt=1e-4, t_end=1.0, record_every=2000)
    rec = run_trajectory(p, cfg, WienerPath.from_seed(2, cfg.n_steps), keep_state=True)
    assert np.all(rec.herm_err < 1e-10)
    assert hermitian_residual(rec.final_state) < 1e-10


def test_record_grid_and_snapshots():
    p = PhysicalParams(n_atoms=10)
    cfg = StepConfig(dt=1e-3, t_end=0.0105, record_every=3, snapshot_times=(0.0, 0.005, 0.5))
    rec = run_trajectory(p, cfg, WienerPath.from_seed(1, 20))
    np.testing.assert_allclose(rec.times, [0, 0.003, 0.006, 0.009, 0.010])
    assert [s.time for s in rec.snapshots] == [0.0, 0.005]
    assert math.isnan(rec.photocurrent[0]) and np.all(np.isfinite(rec.photocurrent[1:]))
    assert rec.xi2_z[0] == pytest.approx(1.0)
    assert len(rec) == 5 and rec.xi2_defined.all()
    assert len(TrajectoryRecord.empty()) == 0


def test_noise_too_short():
    with pytest.raises(DomainError):
        run_trajectory(PhysicalParams(n_atoms=3), StepConfig(dt=1e-3, t_end=0.1), WienerPath.from_seed(1, 10))


def test_integration_failure_reports_step():
    p = PhysicalParams(n_atoms=20, gamma=0.0, eta=1.0)
    cfg = StepConfig(dt=0.05, t_end=5.0)
    with pytest.raises(IntegrationError) as exc:
        run_trajectory(p, cfg, WienerPath.from_seed(4, cfg.n_steps))
    assert exc.value.step is not None and exc.value.time is not None


def test_determinism():
    p = PhysicalParams(n_atoms=20)
    cfg = StepConfig(dt=1e-4, t_end=0.05, record_every=50)
    noise = WienerPath.from_seed(9, cfg.n_steps)
    a = run_trajectory(p, cfg, noise)
    b = run_trajectory(p, cfg, noise)
    for name in TrajectoryRecord.COLUMNS:
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_sign_symmetry():
    for N in (4, 20):
        p = PhysicalParams(n_atoms=N, gamma=0.0)
        cfg = StepConfig(dt=1e-4, t_end=0.1, record_every=100)
        noise = WienerPath.from_seed(3, cfg.n_steps)
        a = run_trajectory(p, cfg, noise)
        b = run_trajectory(p, cfg, noise.negated())
        np.testing.assert_allclose(b.jz, -a.jz, atol=1e-10)
        np.testing.assert_allclose(b.jx, a.jx, atol=1e-10)
        np.testing.assert_allclose(b.dz, a.dz, atol=1e-10)


def test_photocurrent_sample():
    N = 10
    s = css_init(1.0, 0.0, N)
    d = derive_params(PhysicalParams(n_atoms=N))
    assert photocurrent_sample(s, d, 0.0, 1e-4) == pytest.approx(bm_expectation(s, d).real)
    d0 = derive_params(PhysicalParams(n_atoms=N, beta_in=0.0))
    assert photocurrent_sample(s, d0, 0.002, 1e-4) == 0.002 / 1e-4


def test_photocurrent_tracks_jz():
    # time-averaged current minus its no-information baseline anticorrelates
    # with J_z (xi_dn - xi_up < 0 at vartheta = 0)
    N = 20
    p = PhysicalParams(n_atoms=N)
    d = derive_params(p)
    cfg = StepConfig(dt=1e-4, t_end=0.2, record_every=2000)
    currents, jz = [], []
    for seed in range(100):
        rec = run_trajectory(p, cfg, WienerPath.from_seed(seed, cfg.n_steps))
        currents.append(rec.photocurrent[-1])
        jz.append(rec.jz[-1])
    r = np.corrcoef(currents, jz)[0, 1]
    assert (d.xi_dn - d.xi_up).real < 0
    assert r < -0.3
