import numpy as np
import pytest

from drivenatom import (
    ConfigError,
    DissipativeCoefficients,
    PropagatorCache,
    SystemConfig,
    build_kernel_table,
    dissipative_coefficients,
    dominant_frequency,
    envelope_at,
    integrate_closed,
    integrate_redfield,
    local_extrema_envelope,
    m_real,
    redfield_rhs,
)

BATH = SystemConfig(delta0=1.0, s=0.0, omega_l=1.0, g=0.05, omega_cav=1.0, gamma_cav=0.1)
DRIVEN_BATH = SystemConfig(delta0=1.0, s=1.0, omega_l=1.0, g=0.05, omega_cav=1.0, gamma_cav=0.1)


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------


def test_coefficients_vanish_at_t_zero():
    kernel = build_kernel_table(BATH, dtau=0.05, tau_cap=20.0)
    cache = PropagatorCache(BATH)
    out = dissipative_coefficients(0.0, kernel, cache, BATH)
    assert out.as_tuple() == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_coefficients_vanish_without_coupling():
    cfg = SystemConfig(s=1.0, omega_l=1.0, g=0.0)
    kernel = build_kernel_table(cfg, dtau=0.05)
    cache = PropagatorCache(cfg)
    for t in (0.7, 3.0, 11.4):
        assert dissipative_coefficients(t, kernel, cache, cfg).as_tuple() == (0.0,) * 5


def test_coefficients_short_time_growth_undriven():
    # b1(t, t) = 1, so Gamma1(t) -> M'(0) * t for small t
    kernel = build_kernel_table(BATH, dtau=0.002, tau_cap=5.0)
    cache = PropagatorCache(BATH)
    t = 0.05
    out = dissipative_coefficients(t, kernel, cache, BATH)
    assert out.gamma1 == pytest.approx(m_real(0.0, BATH) * t, rel=2e-3)


def test_coefficients_match_fine_quadrature_undriven():
    # undriven closed form: Gamma1(t) = int_0^t M'(tau) cos(tau) dtau
    kernel = build_kernel_table(BATH, dtau=0.01, tau_cap=10.0)
    cache = PropagatorCache(BATH)
    t = 6.0
    taus = np.linspace(0.0, t, 6001)
    fine = np.trapezoid(m_real(taus, BATH) * np.cos(taus), taus)
    out = dissipative_coefficients(t, kernel, cache, BATH)
    assert out.gamma1 == pytest.approx(fine, abs=5e-7)
    assert out.gamma3 == pytest.approx(0.0, abs=1e-9)
    assert out.a_y == pytest.approx(0.0, abs=1e-12)


def test_coefficients_partial_end_segment():
    # t off the lag grid exercises the closed-form end correction
    kernel = build_kernel_table(BATH, dtau=0.1, tau_cap=10.0)
    cache = PropagatorCache(BATH)
    coarse = dissipative_coefficients(1.23456, kernel, cache, BATH)
    kernel_f = build_kernel_table(BATH, dtau=0.002, tau_cap=10.0)
    fine = dissipative_coefficients(1.23456, kernel_f, cache, BATH)
    assert coarse.gamma1 == pytest.approx(fine.gamma1, rel=2e-3)


def test_coefficients_second_order_in_lag_step():
    cache = PropagatorCache(BATH)
    t = 8.0
    values = []
    for dtau in (0.2, 0.1, 0.05):
        kernel = build_kernel_table(BATH, dtau=dtau, tau_cap=10.0)
        values.append(dissipative_coefficients(t, kernel, cache, BATH).gamma1)
    err_coarse = abs(values[0] - values[2])
    err_fine = abs(values[1] - values[2])
    assert err_coarse / err_fine == pytest.approx(4.0, rel=0.6)


def test_coefficients_config_mismatch_rejected():
    kernel = build_kernel_table(BATH, dtau=0.05, tau_cap=5.0)
    cache = PropagatorCache(DRIVEN_BATH)
    with pytest.raises(ConfigError):
        dissipative_coefficients(1.0, kernel, cache, DRIVEN_BATH)


# ---------------------------------------------------------------------------
# rhs algebra
# ---------------------------------------------------------------------------


def zero_coeffs(t=0.0):
    return DissipativeCoefficients(t, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_rhs_reduces_to_coherent_form():
    from drivenatom import bloch_rhs

    rng = np.random.default_rng(3)
    cfg = DRIVEN_BATH
    for _ in range(5):
        state = rng.normal(size=3)
        t = rng.uniform(0, 10)
        assert np.allclose(redfield_rhs(state, zero_coeffs(t), t, cfg), bloch_rhs(state, t, cfg))


def test_rhs_substitutions():
    cfg = SystemConfig(s=0.0)
    c = DissipativeCoefficients(1.0, 0.3, 0.0, 0.0, 0.0, 0.0)
    assert np.allclose(redfield_rhs((0, 1, 0), c, 1.0, cfg), [-1.0, -0.3, 0.0])
    c2 = DissipativeCoefficients(1.0, 0.3, 0.0, 0.0, 0.0, 0.2)
    assert np.allclose(redfield_rhs((0, 0, 1), c2, 1.0, cfg), [0.0, 0.0, -0.5])


def test_rhs_first_component_has_no_rate_terms():
    rng = np.random.default_rng(5)
    for _ in range(5):
        state = rng.normal(size=3)
        coeffs = DissipativeCoefficients(2.0, *rng.normal(size=5))
        out = redfield_rhs(state, coeffs, 2.0, DRIVEN_BATH)
        assert out[0] == -DRIVEN_BATH.delta0 * state[1]


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def test_reduction_to_closed_dynamics_without_coupling():
    cfg = SystemConfig(s=1.3, omega_l=0.9)
    initial = np.array([0.6, 0.0, 0.8])
    times = np.linspace(0.0, 10.0, 51)
    diss = integrate_redfield(initial, 10.0, cfg, dt=0.004, sample_times=times)
    closed = integrate_closed(initial, 10.0, cfg, rtol=1e-11, atol=1e-14, sample_times=times)
    assert np.max(np.abs(diss.states - closed.states)) < 1e-8


def test_dissipative_deviation_scales_with_coupling_squared():
    # stay in the linear-response window: the induced decay must be << 1
    times = np.linspace(0.0, 10.0, 41)
    base = {**BATH.to_dict()}
    closed = integrate_closed([1, 0, 0], 10.0, SystemConfig(**{**base, "g": 0.0}), sample_times=times)
    devs = {}
    for g in (0.02, 0.01):
        tr = integrate_redfield([1, 0, 0], 10.0, SystemConfig(**{**base, "g": g}), sample_times=times)
        devs[g] = np.linalg.norm(tr.states[-1] - closed.states[-1])
    assert devs[0.02] / devs[0.01] == pytest.approx(4.0, rel=0.1)


def test_step_halving_changes_little():
    times = np.linspace(0.0, 20.0, 81)
    a = integrate_redfield([1, 0, 0], 20.0, DRIVEN_BATH, dt=2 * np.pi / 64, sample_times=times)
    b = integrate_redfield([1, 0, 0], 20.0, DRIVEN_BATH, dt=2 * np.pi / 128, sample_times=times)
    assert np.max(np.abs(a.states - b.states)) < 5e-5


def test_deterministic_reruns_bit_identical():
    a = integrate_redfield([1, 0, 0], 15.0, DRIVEN_BATH, sample_count=301)
    b = integrate_redfield([1, 0, 0], 15.0, DRIVEN_BATH, sample_count=301)
    assert np.array_equal(a.states, b.states)


def test_norm_monitor_records_excursions_without_clamping():
    # an initial vector outside the unit ball must be reported, not clipped
    tr = integrate_redfield([1.05, 0, 0], 1.0, DRIVEN_BATH, dt=0.02, sample_count=21)
    assert tr.metadata["norm_excursions"]
    assert tr.metadata["max_norm"] >= 1.05 - 1e-9
    ok = integrate_redfield([1, 0, 0], 5.0, DRIVEN_BATH, sample_count=21)
    assert ok.metadata["norm_excursions"] == []


def test_undriven_relaxation_targets():
    tr_x = integrate_redfield([1, 0, 0], 60.0, BATH, sample_count=1201)
    # oscillatory decay towards zero coherence
    assert abs(tr_x.sigma_x[-1]) < np.max(np.abs(tr_x.sigma_x[:100]))
    tr_z = integrate_redfield([0, 0, 1], 60.0, BATH, sample_count=601)
    assert 0.9 < tr_z.sigma_z[-1] <= 1.0
    assert np.max(np.abs(tr_z.sigma_x)) < 1e-6
    assert np.max(np.abs(tr_z.sigma_y)) < 1e-6


def test_kernel_reuse_and_validation():
    kernel = build_kernel_table(DRIVEN_BATH, dtau=2 * np.pi / 64, tau_cap=10.0)
    cache = PropagatorCache(DRIVEN_BATH)
    tr = integrate_redfield(
        [1, 0, 0], 10.0, DRIVEN_BATH, dt=2 * np.pi / 64, kernel=kernel, cache=cache, sample_count=51
    )
    assert tr.states.shape == (51, 3)
    with pytest.raises(ConfigError):
        integrate_redfield([1, 0, 0], 5.0, BATH, kernel=kernel)


# ---------------------------------------------------------------------------
# analysis helpers
# ---------------------------------------------------------------------------


def test_dominant_frequency_on_synthetic_signal():
    t = np.linspace(0.0, 80.0, 1601)
    v = 0.4 * np.exp(-0.02 * t) * np.cos(0.73 * t + 0.3) + 0.05
    w = dominant_frequency(t, v)
    assert w == pytest.approx(0.73, rel=5e-3)


def test_dominant_frequency_requires_uniform_samples():
    t = np.array([0.0, 0.1, 0.3, 0.35] + list(np.linspace(1, 10, 20)))
    with pytest.raises(ConfigError):
        dominant_frequency(t, np.sin(t))


def test_envelope_nodes_track_decay():
    t = np.linspace(0.0, 40.0, 4001)
    v = np.exp(-0.1 * t) * np.cos(3.0 * t)
    nodes_t, nodes_a = local_extrema_envelope(t, v)
    assert np.max(np.abs(nodes_a - np.exp(-0.1 * nodes_t))) < 0.02
    # envelope passes through the interpolated extrema exactly
    assert np.allclose(envelope_at(t, v, nodes_t), nodes_a)
    # and decays monotonically for a uniformly damped signal
    assert np.all(np.diff(nodes_a) < 1e-9)
