"""Driven Bloch equations with time-dependent dissipative rates.

The reduced dynamics of the atom in the lossy cavity follows

    d sigma_x/dt = -delta0 sigma_y
    d sigma_y/dt =  delta0 sigma_x - s(t) sigma_z
                    - Gamma1(t) sigma_y - Gamma2(t) sigma_x - A_y(t)
    d sigma_z/dt =  s(t) sigma_y - Gamma1(t) sigma_z - Gamma3(t) sigma_x - A_z(t)

with rates Gamma_i(t) = int_0^t dt' M'(t-t') b_i(t,t') and inhomogeneities
A_y = Re F, A_z = Im F, F(t) = (1/2) int_0^t dt' M''(t-t') [u^2 - v^2],
where u, v are matrix-element sums of the coherent propagator and
b1 = Re(u v*), b2 = -Im(u^2-v^2)/2, b3 = Re(u^2-v^2)/2.

The convolutions are evaluated by the trapezoid rule on a shared uniform
grid (kernel samples and propagators aligned), the coefficients are cubic
interpolated into the fixed-step RK4 substeps, and the Bloch vector is
advanced one step at a time.  Norm excursions beyond 1 + epsilon_pos are
recorded, never clamped.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, cos, floor

import numpy as np
from scipy.interpolate import CubicSpline

from .bath import KernelTable, build_kernel_table, m_imag, m_real
from .closed import PropagatorCache, _sample_grid
from .model import (
    ConfigError,
    SystemConfig,
    Trajectory,
    as_bloch_array,
    validate,
)

__all__ = [
    "DissipativeCoefficients",
    "dissipative_coefficients",
    "redfield_rhs",
    "integrate_redfield",
    "dominant_frequency",
    "local_extrema_envelope",
    "envelope_at",
]

DEFAULT_EPSILON_POS = 0.02
_SUBSTEPS_PER_PERIOD = 64


@dataclass(frozen=True)
class DissipativeCoefficients:
    """Rates and inhomogeneities of the dissipative Bloch equations at one time."""

    t: float
    gamma1: float
    gamma2: float
    gamma3: float
    a_y: float
    a_z: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.gamma1, self.gamma2, self.gamma3, self.a_y, self.a_z)


def _check_same_physics(a: SystemConfig, b: SystemConfig, what: str) -> None:
    if a.to_dict() != b.to_dict():
        raise ConfigError(f"{what} was built for a different configuration")


def _uv_against(u_t: np.ndarray, u_primes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """u(t,t'), v(t,t') for one U(t,0) against a stack of U(t',0).

    With w the column sums of U(t,0), unitarity gives
    u(t,t') = sum_c w_c conj(U(t',0)[0,c]) and similarly v with row 1.
    """
    w = u_t[0, :] + u_t[1, :]
    u = np.conj(u_primes[:, 0, :]) @ w
    v = np.conj(u_primes[:, 1, :]) @ w
    return u, v


def dissipative_coefficients(
    t: float,
    kernel: KernelTable,
    cache: PropagatorCache,
    config: SystemConfig,
) -> DissipativeCoefficients:
    """Evaluate the five convolution integrals at time t.

    Trapezoid rule on the kernel grid over the window
    [max(0, t - tau_max), t]; a partial end segment covers the remainder
    when t is not a grid multiple.  Error is O(dtau^2) plus the kernel's
    tail_bound.
    """
    cfg = validate(config)
    if t < 0:
        raise ConfigError("t must be non-negative")
    _check_same_physics(kernel.config, cfg, "kernel table")
    _check_same_physics(cache.config, cfg, "propagator cache")
    if t == 0.0 or cfg.g == 0.0:
        return DissipativeCoefficients(t, 0.0, 0.0, 0.0, 0.0, 0.0)

    dtau = kernel.dtau
    lag_end = min(t, kernel.tau_max)
    m = int(floor(lag_end / dtau + 1e-9))
    lags = np.arange(m + 1) * dtau
    u_t = cache.u_at(t)
    u_primes = cache.many_u(t - lags)
    u, v = _uv_against(u_t, u_primes)
    b1 = (u * np.conj(v)).real
    d = u * u - v * v

    kr = kernel.m_real[: m + 1]
    ki = kernel.m_imag[: m + 1]
    wt = np.full(m + 1, dtau)
    wt[0] = wt[-1] = 0.5 * dtau
    if m == 0:
        wt[0] = 0.0

    gamma1 = float(np.sum(wt * kr * b1))
    gamma2 = float(np.sum(wt * kr * (-0.5 * d.imag)))
    gamma3 = float(np.sum(wt * kr * (0.5 * d.real)))
    f_val = complex(0.5 * np.sum(wt * ki * d))

    rem = lag_end - m * dtau
    if rem > 1e-12 * dtau:
        # partial trapezoid from the last grid lag to lag_end, closed-form kernel
        kr_end = m_real(lag_end, cfg)
        ki_end = m_imag(lag_end, cfg)
        u_e, v_e = _uv_against(u_t, cache.many_u(np.array([t - lag_end])))
        b1_e = float((u_e[0] * np.conj(v_e[0])).real)
        d_e = u_e[0] ** 2 - v_e[0] ** 2
        half = 0.5 * rem
        gamma1 += half * (kr[m] * b1[m] + kr_end * b1_e)
        gamma2 += half * (kr[m] * (-0.5 * d[m].imag) + kr_end * (-0.5 * d_e.imag))
        gamma3 += half * (kr[m] * (0.5 * d[m].real) + kr_end * (0.5 * d_e.real))
        f_val += 0.5 * half * (ki[m] * d[m] + ki_end * d_e)

    return DissipativeCoefficients(
        t=t, gamma1=gamma1, gamma2=gamma2, gamma3=gamma3, a_y=f_val.real, a_z=f_val.imag
    )


def redfield_rhs(state, coeffs: DissipativeCoefficients, t: float, config: SystemConfig) -> np.ndarray:
    """Right-hand side of the dissipative Bloch equations."""
    x, y, z = as_bloch_array(state)
    st = config.s * cos(config.omega_l * t)
    g1, g2, g3, ay, az = coeffs.as_tuple()
    return np.array(
        [
            -config.delta0 * y,
            config.delta0 * x - st * z - g1 * y - g2 * x - ay,
            st * y - g1 * z - g3 * x - az,
        ]
    )


def _coefficients_on_grid(
    grid: np.ndarray,
    h: float,
    kernel: KernelTable,
    cache: PropagatorCache,
) -> np.ndarray:
    """Coefficient columns (gamma1, gamma2, gamma3, a_y, a_z) on a uniform grid.

    Lags are exact grid multiples, so kernel samples are reused directly;
    cost is O(N * W) with W the kernel window in grid points.
    """
    n = grid.size - 1
    if abs(kernel.dtau - h) < 1e-12 * h:
        kr_full = kernel.m_real
        ki_full = kernel.m_imag
    else:
        # resample a caller-provided table onto the convolution grid
        lags = np.arange(int(floor(kernel.tau_max / h + 1e-9)) + 1) * h
        kr_full = CubicSpline(kernel.tau_grid, kernel.m_real)(lags)
        ki_full = CubicSpline(kernel.tau_grid, kernel.m_imag)(lags)
    window = min(n, kr_full.size - 1)

    us = cache.many_u(grid)
    w_cols = us[:, 0, :] + us[:, 1, :]
    row0 = np.conj(us[:, 0, :])
    row1 = np.conj(us[:, 1, :])

    out = np.zeros((n + 1, 5))
    for k in range(1, n + 1):
        j0 = k - min(k, window)
        u = row0[j0 : k + 1] @ w_cols[k]
        v = row1[j0 : k + 1] @ w_cols[k]
        b1 = (u * np.conj(v)).real
        d = u * u - v * v
        kr = kr_full[: k - j0 + 1][::-1]
        ki = ki_full[: k - j0 + 1][::-1]
        wt = np.full(k - j0 + 1, h)
        wt[0] = wt[-1] = 0.5 * h
        krw = kr * wt
        f_val = 0.5 * np.sum(ki * wt * d)
        out[k, 0] = np.sum(krw * b1)
        out[k, 1] = np.sum(krw * (-0.5 * d.imag))
        out[k, 2] = np.sum(krw * (0.5 * d.real))
        out[k, 3] = f_val.real
        out[k, 4] = f_val.imag
    return out


def default_redfield_dt(config: SystemConfig) -> float:
    """Default step: resolve the drive period, the cavity period and 1/delta0."""
    scales = [2.0 * np.pi / config.omega_cav, 2.0 * np.pi / config.delta0]
    if config.s != 0.0 and config.omega_l > 0:
        scales.append(2.0 * np.pi / config.omega_l)
    return min(scales) / _SUBSTEPS_PER_PERIOD


def integrate_redfield(
    initial,
    t_end: float,
    config: SystemConfig,
    dt: float | None = None,
    sample_times=None,
    sample_count: int = 1025,
    kernel: KernelTable | None = None,
    cache: PropagatorCache | None = None,
    epsilon_pos: float = DEFAULT_EPSILON_POS,
    kernel_threshold: float = 1e-6,
) -> Trajectory:
    """Integrate the dissipative Bloch equations over [0, t_end].

    Fixed-step RK4 on a uniform grid; the five dissipative coefficients
    are assembled on the same grid from the kernel table and propagator
    cache, then cubic-interpolated into the half-step stage times.  With
    g = 0 the coefficients vanish identically and the integration reduces
    exactly to the coherent Bloch equations.

    Identical inputs produce bit-identical trajectories.
    """
    cfg = validate(config)
    if t_end <= 0:
        raise ConfigError("t_end must be positive")
    y0 = as_bloch_array(initial)
    h = default_redfield_dt(cfg) if dt is None else float(dt)
    if h <= 0:
        raise ConfigError("dt must be positive")
    n = max(int(ceil(t_end / h - 1e-9)), 1)
    grid = np.arange(n + 1) * h
    samples = _sample_grid(t_end, sample_times, sample_count)

    meta: dict = {"dt": h, "n_steps": n, "epsilon_pos": epsilon_pos}
    if cfg.g == 0.0:
        coeffs = np.zeros((n + 1, 5))
        meta["dtau"] = None
        meta["kernel_tail_bound"] = 0.0
    else:
        if cache is None:
            cache = PropagatorCache(cfg)
        else:
            _check_same_physics(cache.config, cfg, "propagator cache")
        if kernel is None:
            kernel = build_kernel_table(cfg, dtau=h, threshold=kernel_threshold, tau_cap=grid[-1])
        else:
            _check_same_physics(kernel.config, cfg, "kernel table")
        coeffs = _coefficients_on_grid(grid, h, kernel, cache)
        meta["dtau"] = kernel.dtau
        meta["kernel_tail_bound"] = kernel.tail_bound

    # stage-time coefficient and drive tables (grid and midpoints)
    if cfg.g == 0.0:
        c_mid = np.zeros((n, 5))
        c_grid = coeffs
    else:
        spline = CubicSpline(grid, coeffs, axis=0)
        c_mid = spline(grid[:-1] + 0.5 * h)
        c_grid = coeffs
    d0, s, wl = cfg.delta0, cfg.s, cfg.omega_l
    drive_grid = s * np.cos(wl * grid)
    drive_mid = s * np.cos(wl * (grid[:-1] + 0.5 * h))

    def rhs(y: np.ndarray, st: float, c: np.ndarray) -> np.ndarray:
        g1, g2, g3, ay, az = c
        return np.array(
            [
                -d0 * y[1],
                d0 * y[0] - st * y[2] - g1 * y[1] - g2 * y[0] - ay,
                st * y[1] - g1 * y[2] - g3 * y[0] - az,
            ]
        )

    states = np.empty((n + 1, 3))
    states[0] = y0
    y = y0.copy()
    for k in range(n):
        k1 = rhs(y, drive_grid[k], c_grid[k])
        k2 = rhs(y + 0.5 * h * k1, drive_mid[k], c_mid[k])
        k3 = rhs(y + 0.5 * h * k2, drive_mid[k], c_mid[k])
        k4 = rhs(y + h * k3, drive_grid[k + 1], c_grid[k + 1])
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[k + 1] = y

    norms = np.linalg.norm(states, axis=1)
    mask = norms > 1.0 + epsilon_pos
    excursions = [(float(grid[i]), float(norms[i])) for i in np.nonzero(mask)[0][:100]]
    meta["norm_excursions"] = excursions
    meta["max_norm"] = float(norms.max())

    sampled = CubicSpline(grid, states, axis=0)(samples)
    return Trajectory(times=samples, states=sampled, config=cfg, label="dissipative", metadata=meta)


# ---------------------------------------------------------------------------
# trajectory analysis helpers
# ---------------------------------------------------------------------------


def dominant_frequency(times, values) -> float:
    """Dominant oscillation frequency by least-squares sinusoid fit.

    A windowed FFT locates the strongest spectral line, then the angular
    frequency of a fitted a*cos(w t) + b*sin(w t) + c model is refined by
    minimising the residual (amplitudes solved linearly at each w).
    Requires uniform sampling.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 16:
        raise ConfigError("need at least 16 samples to fit a frequency")
    step = t[1] - t[0]
    if not np.allclose(np.diff(t), step, rtol=1e-8, atol=1e-12 * max(1.0, abs(step))):
        raise ConfigError("dominant_frequency requires uniform sampling")

    vc = v - v.mean()
    spec = np.abs(np.fft.rfft(vc * np.hanning(t.size)))
    freqs = 2.0 * np.pi * np.fft.rfftfreq(t.size, step)
    peak = int(np.argmax(spec[1:]) + 1)
    w0 = freqs[peak]
    bin_width = freqs[1]

    def residual(w: float) -> float:
        design = np.column_stack([np.cos(w * t), np.sin(w * t), np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(design, v, rcond=None)
        r = v - design @ coef
        return float(r @ r)

    lo = max(w0 - bin_width, 0.25 * bin_width)
    hi = w0 + bin_width
    ws = np.linspace(lo, hi, 41)
    best = int(np.argmin([residual(w) for w in ws]))
    lo = ws[max(best - 1, 0)]
    hi = ws[min(best + 1, ws.size - 1)]
    for _ in range(50):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if residual(m1) <= residual(m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def local_extrema_envelope(times, values) -> tuple[np.ndarray, np.ndarray]:
    """Envelope nodes: the local maxima of |values| (plus boundary maxima).

    Returns (node_times, node_heights); interpolate between nodes with
    :func:`envelope_at`.  By construction the envelope passes exactly
    through the extrema it interpolates.
    """
    t = np.asarray(times, dtype=float)
    a = np.abs(np.asarray(values, dtype=float))
    if t.size < 3:
        raise ConfigError("need at least 3 samples for an envelope")
    interior = np.nonzero((a[1:-1] >= a[:-2]) & (a[1:-1] >= a[2:]))[0] + 1
    idx = list(interior)
    if a[0] >= a[1]:
        idx.insert(0, 0)
    if a[-1] >= a[-2]:
        idx.append(t.size - 1)
    if not idx:
        idx = [int(np.argmax(a))]
    idx = np.unique(np.asarray(idx, dtype=int))
    return t[idx], a[idx]


def envelope_at(times, values, query) -> np.ndarray:
    """Piecewise-linear envelope of |values| evaluated at query times."""
    nodes_t, nodes_a = local_extrema_envelope(times, values)
    return np.interp(np.asarray(query, dtype=float), nodes_t, nodes_a)
