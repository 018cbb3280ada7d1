"""Effective spectral density of the lossy cavity and its correlation kernel.

Integrating out the cavity mode together with its Ohmic environment leaves
the atom coupled to a bath with the Lorentzian-peaked effective density

    J_eff(w) = (16 Gamma / Omega) g^2 w Omega^2 / ((Omega^2 - w^2)^2 + 4 w^2 Gamma^2),

peaked at w = Omega with width Gamma < Omega.  The zero-temperature
correlation kernel M(t) = M'(t) + i M''(t) then has the closed form

    M'(t)  = 4 g^2 (Omega/nu) e^{-Gamma t} cos(nu t)
             - (16 Gamma g^2 Omega / pi) * I(t),
    M''(t) = -4 g^2 (Omega/nu) e^{-Gamma t} sin(nu t),

with nu = sqrt(Omega^2 - Gamma^2) and the branch-cut integral
I(t) = int_0^inf y e^{-y t} / ((y^2+Omega^2)^2 - 4 y^2 Gamma^2) dy, which
decays only algebraically (~1/t^2) and is evaluated by adaptive quadrature
(small-y expansion at large t).  An independent quadrature of the spectral
representation, including a finite-temperature coth factor, serves as the
oracle (:func:`m_oracle`).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from math import cos, exp, log, pi, sin, sqrt

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .model import ConfigError, NumericsError, SystemConfig, validate

__all__ = [
    "j_eff",
    "j_ohmic",
    "m_real",
    "m_imag",
    "m_oracle",
    "KernelTable",
    "build_kernel_table",
    "kernel_table_to_csv",
]

# switch the branch integral to its small-y expansion beyond this scaled time
_BRANCH_ASYMPTOTIC_CUTOFF = 300.0
# hard cap on the kernel horizon, units 1/delta0
_TAU_HARD_CAP = 1.0e4


def j_eff(omega, config: SystemConfig):
    """Effective (cavity-filtered) spectral density at frequency omega >= 0."""
    w = np.asarray(omega, dtype=float)
    om, gam, g = config.omega_cav, config.gamma_cav, config.g
    out = (16.0 * gam / om) * g * g * w * om * om / ((om * om - w * w) ** 2 + 4.0 * w * w * gam * gam)
    return float(out) if np.ndim(omega) == 0 else out


def j_ohmic(omega, config: SystemConfig):
    """Ohmic density (2 Gamma / Omega) w exp(-w/omega_c) of the underlying bath."""
    w = np.asarray(omega, dtype=float)
    out = (2.0 * config.gamma_cav / config.omega_cav) * w * np.exp(-w / config.omega_c)
    return float(out) if np.ndim(omega) == 0 else out


def _nu(config: SystemConfig) -> float:
    return sqrt(config.omega_cav**2 - config.gamma_cav**2)


def m_imag(tau, config: SystemConfig):
    """Imaginary kernel part M''(tau), exact closed form (tau >= 0)."""
    t = np.asarray(tau, dtype=float)
    nu = _nu(config)
    g, gam, om = config.g, config.gamma_cav, config.omega_cav
    out = -4.0 * g * g * (om / nu) * np.exp(-gam * t) * np.sin(nu * t)
    return float(out) if np.ndim(tau) == 0 else out


def _branch_integral(tau: float, config: SystemConfig) -> float:
    """I(tau) = int_0^inf y e^{-y tau} / ((y^2+Om^2)^2 - 4 y^2 Gam^2) dy."""
    om, gam = config.omega_cav, config.gamma_cav
    if tau * om > _BRANCH_ASYMPTOTIC_CUTOFF:
        # 1/q(y) = (1/Om^4)(1 - b y^2 + (b^2 - c) y^4 + ...) under the
        # Laplace weight; moments int y^(2k+1) e^{-y tau} dy = (2k+1)!/tau^(2k+2)
        b = 2.0 * (om * om - 2.0 * gam * gam) / om**4
        c = 1.0 / om**4
        return (1.0 / tau**2 - 6.0 * b / tau**4 + 120.0 * (b * b - c) / tau**6) / om**4

    def integrand(y: float) -> float:
        q = (y * y + om * om) ** 2 - 4.0 * y * y * gam * gam
        return y * exp(-y * tau) / q

    val, err = quad(integrand, 0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    if err > 1e-9 * max(1.0, abs(val)):  # pragma: no cover - smooth integrand
        raise NumericsError(f"branch integral at tau={tau} only converged to {err:.2e}")
    return val


def m_real(tau, config: SystemConfig):
    """Real kernel part M'(tau): damped cosine plus the branch-cut term.

    Scalar tau gives a scalar; array input is evaluated pointwise.  The
    quadrature budget keeps the absolute error well below 1e-9 * |M'(0)|.
    """
    if np.ndim(tau) > 0:
        return np.array([m_real(float(t), config) for t in np.asarray(tau, dtype=float)])
    t = float(tau)
    if t < 0:
        raise ConfigError("tau must be non-negative")
    nu = _nu(config)
    g, gam, om = config.g, config.gamma_cav, config.omega_cav
    if g == 0.0:
        return 0.0
    damped = 4.0 * g * g * (om / nu) * exp(-gam * t) * cos(nu * t)
    return damped - (16.0 * gam * g * g * om / pi) * _branch_integral(t, config)


def _oracle_quad(f, tau: float, weight: str) -> tuple[float, float]:
    if tau == 0.0:
        return quad(f, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
    with warnings.catch_warnings():
        # accuracy is enforced through the returned error estimate instead
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(
            f,
            0.0,
            np.inf,
            weight=weight,
            wvar=tau,
            epsabs=1e-13,
            epsrel=1e-11,
            limit=400,
            limlst=300,
        )
    return val, err


def m_oracle(tau: float, config: SystemConfig, temperature: float | None = None) -> complex:
    """Bath correlation kernel by direct quadrature of the spectral form.

    M(tau) = (1/pi) int_0^inf J_eff(w) [coth(w/(2T)) cos(w tau) - i sin(w tau)] dw,
    with the coth factor dropping to 1 at T = 0.  This is the test oracle
    for the closed forms and the only place finite temperature is
    supported.  Raises NumericsError when the oscillatory quadrature does
    not reach its error target (tau too large for direct evaluation).
    """
    cfg = validate(config)
    if tau < 0:
        raise ConfigError("tau must be non-negative")
    temp = cfg.temperature if temperature is None else float(temperature)
    if temp < 0:
        raise ConfigError("temperature must be non-negative")
    if cfg.g == 0.0:
        return 0.0 + 0.0j

    def spectral(w: float) -> float:
        return j_eff(w, cfg)

    if temp == 0.0:
        f_cos = spectral
    else:

        def f_cos(w: float) -> float:
            if w == 0.0:
                # linear J_eff cancels the 1/w divergence of coth
                return 2.0 * temp * 16.0 * cfg.gamma_cav * cfg.g**2 / cfg.omega_cav**2
            return spectral(w) / np.tanh(w / (2.0 * temp))

    re, re_err = _oracle_quad(f_cos, tau, "cos")
    im, im_err = _oracle_quad(spectral, tau, "sin") if tau > 0 else (0.0, 0.0)
    scale = max(abs(re), abs(im), cfg.g**2)
    if re_err > 1e-8 * scale or im_err > 1e-8 * scale:
        raise NumericsError(
            f"oscillatory quadrature at tau={tau} reached only "
            f"{max(re_err, im_err):.2e} absolute accuracy"
        )
    return (re - 1j * im) / pi


@dataclass(frozen=True)
class KernelTable:
    """Kernel samples M'(tau), M''(tau) on a uniform grid [0, tau_max].

    ``tail_bound`` estimates the absolute error of truncating convolution
    integrals at tau_max.  Immutable after construction.
    """

    tau_grid: np.ndarray
    m_real: np.ndarray
    m_imag: np.ndarray
    tau_max: float
    tail_bound: float
    dtau: float
    threshold: float
    config: SystemConfig


def build_kernel_table(
    config: SystemConfig,
    dtau: float | None = None,
    threshold: float = 1e-6,
    tau_cap: float | None = None,
    hard_cap: float | None = None,
) -> KernelTable:
    """Precompute the kernel on a uniform grid out to its decay horizon.

    The horizon tau_max is the smallest grid time beyond which both
    envelope bounds (exponential for the damped oscillation, ~1/tau^2 for
    the branch term) stay below ``threshold`` relative to the kernel
    magnitude scale.  ``tau_cap`` optionally clips the horizon when the
    consumer only ever convolves over shorter windows; the stored
    tail_bound always refers to the actual stored horizon.
    """
    cfg = validate(config)
    if dtau is None:
        dtau = 2.0 * pi / (64.0 * max(cfg.omega_cav, cfg.delta0))
    if dtau <= 0:
        raise ConfigError("dtau must be positive")
    if threshold <= 0:
        raise ConfigError("threshold must be positive")
    cap = _TAU_HARD_CAP / cfg.delta0 if hard_cap is None else hard_cap

    if cfg.g == 0.0:
        grid = np.array([0.0, dtau])
        zeros = np.zeros(2)
        return KernelTable(grid, zeros.copy(), zeros.copy(), dtau, 0.0, dtau, threshold, cfg)

    g, gam, om = cfg.g, cfg.gamma_cav, cfg.omega_cav
    nu = _nu(cfg)
    amp_exp = 4.0 * g * g * om / nu
    coeff_branch = 16.0 * gam * g * g * om / (pi * om**4)
    # reference magnitude: kernel value at the origin or the oscillation scale
    ref = max(abs(m_real(0.0, cfg)), 4.0 * g * g * om)
    thr_abs = threshold * ref

    tau_exp = log(max(amp_exp / thr_abs, 1.0)) / gam
    tau_branch = sqrt(coeff_branch / thr_abs)
    tau_max = max(tau_exp, tau_branch, dtau)
    capped = tau_cap is not None and tau_cap < tau_max
    if capped:
        tau_max = max(float(tau_cap), dtau)
    if tau_max > cap:
        raise NumericsError(
            f"kernel horizon tau_max={tau_max:.3g} exceeds the hard cap {cap:.3g}; "
            "raise the threshold or the cap"
        )

    n = int(np.ceil(tau_max / dtau - 1e-9))
    grid = np.arange(n + 1) * dtau
    mr = m_real(grid, cfg)
    mi = m_imag(grid, cfg)
    if not capped:
        # the analytic envelopes bound the tail, but confirm on the samples
        while max(abs(mr[-1]), abs(mi[-1])) > thr_abs and grid[-1] < cap:
            extra = np.arange(n + 1, int(np.ceil(n * 1.2)) + 2) * dtau
            mr = np.concatenate([mr, m_real(extra, cfg)])
            mi = np.concatenate([mi, m_imag(extra, cfg)])
            grid = np.concatenate([grid, extra])
            n = grid.size - 1

    tau_end = grid[-1]
    tail = coeff_branch / tau_end + amp_exp * sqrt(2.0) * exp(-gam * tau_end) / gam
    return KernelTable(
        tau_grid=grid,
        m_real=mr,
        m_imag=mi,
        tau_max=float(tau_end),
        tail_bound=float(tail),
        dtau=float(dtau),
        threshold=float(threshold),
        config=cfg,
    )


def kernel_table_to_csv(table: KernelTable, path) -> None:
    """Dump (tau, m_real, m_imag) rows for inspection."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "m_real", "m_imag"])
        for tau, mr, mi in zip(table.tau_grid, table.m_real, table.m_imag):
            writer.writerow([f"{tau:.17g}", f"{mr:.17g}", f"{mi:.17g}"])
