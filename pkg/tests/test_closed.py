import numpy as np
import pytest

from drivenatom import (
    BlochState,
    PropagatorCache,
    SystemConfig,
    b_coeffs,
    bloch_rhs,
    bloch_via_propagator,
    evolve_u,
    integrate_closed,
    uv_elements,
)
from drivenatom.closed import UVPair, project_su2

RNG = np.random.default_rng(20240817)


def random_unit_bloch():
    v = RNG.normal(size=3)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# bloch_rhs
# ---------------------------------------------------------------------------


def test_rhs_precession_from_x():
    out = bloch_rhs(BlochState(1, 0, 0), 0.0, SystemConfig(s=0.0))
    assert np.allclose(out, [0.0, 1.0, 0.0])


def test_rhs_drive_tilts_from_z():
    s0 = 0.7
    out = bloch_rhs((0, 0, 1), 0.0, SystemConfig(s=s0, omega_l=1.0))
    assert np.allclose(out, [0.0, -s0, 0.0])


def test_rhs_drive_vanishes_at_quarter_period():
    wl = 2.3
    out = bloch_rhs((0, 1, 0), np.pi / (2 * wl), SystemConfig(s=5.0, omega_l=wl))
    assert np.allclose(out, [-1.0, 0.0, 0.0], atol=1e-12)


# ---------------------------------------------------------------------------
# integrate_closed
# ---------------------------------------------------------------------------


def test_free_precession_analytic():
    tr = integrate_closed([1, 0, 0], 25.0, SystemConfig(s=0.0), sample_count=501)
    assert np.max(np.abs(tr.sigma_x - np.cos(tr.times))) < 1e-7
    assert np.max(np.abs(tr.sigma_y - np.sin(tr.times))) < 1e-7
    assert np.max(np.abs(tr.sigma_z)) < 1e-9


def test_norm_conservation_within_tolerance_budget():
    rtol = 1e-9
    for s, wl in [(1.0, 1.0), (3.7, 2.2), (120.241, 50.0)]:
        tr = integrate_closed(
            random_unit_bloch(), 20.0, SystemConfig(s=s, omega_l=wl), rtol=rtol, sample_count=401
        )
        assert np.max(np.abs(tr.norms() - 1.0)) <= 10 * rtol


def test_resonant_weak_drive_rabi_flopping():
    # weak resonant drive: population difference follows cos(s t / 2)
    s = 0.1
    tr = integrate_closed([0, 0, 1], 140.0, SystemConfig(s=s, omega_l=1.0), sample_count=4001)
    assert np.max(np.abs(tr.sigma_z - np.cos(0.5 * s * tr.times))) < 0.05
    # full inversion and return period within 2 percent
    i_min = np.argmin(tr.sigma_z)
    assert tr.sigma_z[i_min] < -0.99
    period = 2.0 * tr.times[i_min]
    assert abs(period - 2 * np.pi / (0.5 * s)) / (2 * np.pi / (0.5 * s)) < 0.02


def test_sample_grid_validation():
    from drivenatom import ConfigError

    with pytest.raises(ConfigError):
        integrate_closed([1, 0, 0], 1.0, SystemConfig(), sample_times=[0.5, 0.2])
    with pytest.raises(ConfigError):
        integrate_closed([1, 0, 0], 1.0, SystemConfig(), sample_times=[0.5, 2.0])
    with pytest.raises(ConfigError):
        integrate_closed([1, 0, 0], 1.0, SystemConfig(), rtol=-1.0)


# ---------------------------------------------------------------------------
# evolve_u / uv / b
# ---------------------------------------------------------------------------


def test_propagator_identity_at_equal_times():
    assert np.allclose(evolve_u(1.5, 1.5, SystemConfig(s=2.0, omega_l=3.0)), np.eye(2))


def test_propagator_free_phases():
    tau = 0.8
    u = evolve_u(tau, 0.0, SystemConfig(s=0.0))
    expect = np.diag([np.exp(1j * tau / 2), np.exp(-1j * tau / 2)])
    assert np.max(np.abs(u - expect)) < 1e-12


def test_propagator_unitarity_and_special_determinant():
    cfg = SystemConfig(s=1.0, omega_l=1.0)
    for t, tp in [(1.3, 0.0), (7.9, 2.4), (0.3, 0.1)]:
        u = evolve_u(t, tp, cfg)
        assert np.max(np.abs(u @ u.conj().T - np.eye(2))) < 1e-10
        assert abs(np.linalg.det(u) - 1.0) < 1e-10


def test_propagator_composition():
    cfg = SystemConfig(s=1.0, omega_l=1.0)
    t = 1.3
    for tp in RNG.uniform(0.05, t - 0.05, size=4):
        left = evolve_u(t, 0.0, cfg)
        right = evolve_u(t, tp, cfg) @ evolve_u(tp, 0.0, cfg)
        assert np.max(np.abs(left - right)) < 1e-8


def test_propagator_periodicity():
    cfg = SystemConfig(s=2.7, omega_l=1.9)
    period = 2 * np.pi / cfg.omega_l
    for t in (0.3, 1.1):
        a = evolve_u(t + period, period, cfg)
        b = evolve_u(t, 0.0, cfg)
        assert np.max(np.abs(a - b)) < 1e-8


def test_uv_elements_trivial_and_free_cases():
    cfg = SystemConfig(s=1.0, omega_l=1.0)
    pair = uv_elements(2.0, 2.0, cfg)
    assert pair.u == pytest.approx(1.0) and pair.v == pytest.approx(1.0)
    tau = 1.1
    free = uv_elements(tau, 0.0, SystemConfig(s=0.0))
    assert free.u == pytest.approx(np.exp(1j * tau / 2))
    assert free.v == pytest.approx(np.exp(-1j * tau / 2))


def test_uv_norm_bound_and_cache_agreement():
    cfg = SystemConfig(s=1.7, omega_l=1.3)
    cache = PropagatorCache(cfg)
    for t, tp in [(3.0, 1.2), (9.4, 0.7), (5.5, 5.0)]:
        direct = uv_elements(t, tp, cfg)
        n2 = abs(direct.u) ** 2 + abs(direct.v) ** 2
        assert n2 <= 2.0 + 1e-9
        u_mat = cache.u_between(t, tp)
        u_c = u_mat[0, 0] + u_mat[1, 0]
        v_c = u_mat[0, 1] + u_mat[1, 1]
        cached = abs(u_c) ** 2 + abs(v_c) ** 2
        assert abs(n2 - cached) < 1e-8
        assert abs(direct.u - u_c) < 1e-8 and abs(direct.v - v_c) < 1e-8


def test_b_coeffs_algebra():
    assert b_coeffs(UVPair(1.0, 1.0, 0.0, 0.0)) == pytest.approx((1.0, 0.0, 0.0))
    phi = np.pi / 4
    b1, b2, b3 = b_coeffs(UVPair(np.exp(1j * phi), np.exp(-1j * phi), 0.0, 0.0))
    assert (b1, b2, b3) == pytest.approx((0.0, -1.0, 0.0), abs=1e-15)
    assert b_coeffs(UVPair(1.0, 0.0, 0.0, 0.0)) == pytest.approx((0.0, 0.0, 0.5))


# ---------------------------------------------------------------------------
# cache internals
# ---------------------------------------------------------------------------


def test_cache_grid_is_special_unitary():
    cache = PropagatorCache(SystemConfig(s=120.241, omega_l=50.0))
    u = cache.grid_u
    defect = np.max(np.abs(np.einsum("nab,ncb->nac", u, np.conj(u)) - np.eye(2)))
    dets = u[:, 0, 0] * u[:, 1, 1] - u[:, 0, 1] * u[:, 1, 0]
    assert defect < 1e-10
    assert np.max(np.abs(dets - 1.0)) < 1e-10


def test_cache_matches_direct_integration_off_grid():
    cfg = SystemConfig(s=2.0, omega_l=1.7)
    cache = PropagatorCache(cfg)
    for t in RNG.uniform(0.0, 40.0, size=6):
        assert np.max(np.abs(cache.u_at(t) - evolve_u(t, 0.0, cfg))) < 1e-8


def test_project_su2_restores_invariants():
    u = evolve_u(1.0, 0.0, SystemConfig(s=1.0, omega_l=1.0))
    noisy = u + 1e-6 * (RNG.normal(size=(2, 2)) + 1j * RNG.normal(size=(2, 2)))
    fixed = project_su2(noisy)
    assert np.max(np.abs(fixed @ fixed.conj().T - np.eye(2))) < 1e-12
    assert abs(np.linalg.det(fixed) - 1.0) < 1e-12
    assert np.max(np.abs(fixed - u)) < 5e-6


def test_representation_equivalence_bloch_vs_propagator():
    # conjugating the density matrix reproduces the Bloch integration
    for s, wl in [(1.0, 1.0), (2.7, 3.3)]:
        cfg = SystemConfig(s=s, omega_l=wl)
        initial = random_unit_bloch()
        times = np.linspace(0.0, 30.0, 301)
        tr = integrate_closed(initial, 30.0, cfg, rtol=1e-10, atol=1e-13, sample_times=times)
        via_u = bloch_via_propagator(initial, times, PropagatorCache(cfg))
        assert np.max(np.abs(tr.states - via_u)) < 1e-6
