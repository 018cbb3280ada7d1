"""Quasienergies of the periodically driven two-level system.

The two quasienergies are obtained from the eigenphases of the one-period
(monodromy) propagator U(T, 0), T = 2*pi/omega_l, folded into the first
Brillouin zone [-omega_l/2, omega_l/2).  This is exact for a two-level
system; no truncated extended-Hilbert-space machinery is involved.

In the high-frequency regime the splitting collapses onto the closed form
delta0 * J0(s/omega_l); driving the system at a zero of J0 freezes the
coherent dynamics.  J0 is implemented locally (ascending series below
|x| = 16, Hankel asymptotics beyond, coefficients from Abramowitz &
Stegun 9.2) to keep the root solving self-contained and testable against
an independent library implementation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, pi, sin, sqrt

import numpy as np
from scipy.optimize import brentq

from .closed import evolve_u
from .model import ConfigError, SystemConfig, validate

__all__ = [
    "bessel_j0",
    "bessel_j0_zero",
    "QuasienergyPair",
    "quasienergies",
    "cdt_splitting_highfreq",
    "find_cdt_amplitude",
    "quasienergy_sweep",
]

_SERIES_CUTOFF = 16.0

# Hankel expansion J0(x) ~ sqrt(2/(pi x)) [P(x) cos(x - pi/4) - Q(x) sin(x - pi/4)]
# with P, Q in inverse even/odd powers of x (A&S 9.2.9-9.2.10).
_P_COEFFS = (
    1.0,
    -9.0 / 128.0,
    3675.0 / 32768.0,
    -2401245.0 / 4194304.0,
    4108830350625.0 / 676457349120.0,
)
_Q_COEFFS = (
    -1.0 / 8.0,
    75.0 / 1024.0,
    -59535.0 / 262144.0,
    57972915.0 / 33554432.0,
)


def _j0_series(x: np.ndarray) -> np.ndarray:
    """Ascending series sum_k (-1)^k (x^2/4)^k / (k!)^2, |x| <= ~16."""
    q = 0.25 * x * x
    term = np.ones_like(q)
    total = np.ones_like(q)
    for k in range(1, 60):
        term = term * (-q) / (k * k)
        total = total + term
        if np.all(np.abs(term) < 1e-18 * np.maximum(1.0, np.abs(total))):
            break
    return total


def _j0_asymptotic(x: np.ndarray) -> np.ndarray:
    inv2 = 1.0 / (x * x)
    p = np.zeros_like(x)
    for c in reversed(_P_COEFFS):
        p = p * inv2 + c
    q = np.zeros_like(x)
    for c in reversed(_Q_COEFFS):
        q = q * inv2 + c
    q = q / x
    chi = x - 0.25 * pi
    return np.sqrt(2.0 / (pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind.

    Absolute accuracy better than 1e-10 for |x| <= 50 (and degrading only
    slowly beyond).  Accepts scalars or arrays.
    """
    arr = np.abs(np.asarray(x, dtype=float))
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    small = arr <= _SERIES_CUTOFF
    if np.any(small):
        out[small] = _j0_series(arr[small])
    if np.any(~small):
        out[~small] = _j0_asymptotic(arr[~small])
    return float(out[0]) if scalar else out


def bessel_j0_zero(k: int) -> float:
    """The k-th positive zero of J0 (k >= 1), to ~1e-12 relative accuracy.

    A McMahon estimate brackets the zero, then bracketed root refinement
    polishes it.  Zeros beyond k = 20 are rejected; the bracket table is
    only vetted that far.
    """
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise ConfigError(f"zero index must be an integer, got {k!r}")
    if k < 1:
        raise ConfigError(f"zero index must be >= 1, got {k}")
    if k > 20:
        raise ConfigError(f"zero index {k} beyond supported bracket range (20)")
    beta = (k - 0.25) * pi
    b8 = 8.0 * beta
    estimate = beta + 1.0 / b8 - 124.0 / (3.0 * b8**3) + 120928.0 / (15.0 * b8**5)
    lo, hi = estimate - 0.35, estimate + 0.35
    flo, fhi = bessel_j0(lo), bessel_j0(hi)
    if flo * fhi > 0:  # pragma: no cover - brackets are generous
        lo, hi = estimate - 0.8, estimate + 0.8
    return float(brentq(bessel_j0, lo, hi, xtol=1e-13, rtol=8.9e-16))


@dataclass(frozen=True)
class QuasienergyPair:
    """Both quasienergies folded into [-omega_l/2, omega_l/2), plus their splitting.

    The two values sum to zero modulo omega_l because the monodromy has
    unit determinant.  ``degenerate`` flags an (almost) crossing of the
    monodromy eigenvalues.
    """

    eps1: float
    eps2: float
    splitting: float
    degenerate: bool = False


def _fold(value: float, omega_l: float) -> float:
    return (value + 0.5 * omega_l) % omega_l - 0.5 * omega_l


def quasienergies(config: SystemConfig, rtol: float = 1e-12, atol: float = 1e-14) -> QuasienergyPair:
    """Quasienergies from the eigenphases of the monodromy operator.

    eps_a = -(omega_l / 2 pi) * arg(lambda_a) for the eigenvalues lambda_a
    of U(T, 0), folded into the first Brillouin zone.
    """
    cfg = validate(config)
    if cfg.omega_l <= 0:
        raise ConfigError("quasienergies need a positive omega_l to define the period")
    period = 2.0 * pi / cfg.omega_l
    mono = evolve_u(period, 0.0, cfg, rtol=rtol, atol=atol)
    lams = np.linalg.eigvals(mono)
    degenerate = bool(abs(lams[0] - lams[1]) < 1e-12)
    eps = [-float(np.angle(lam)) / period for lam in lams]
    eps = sorted(_fold(e, cfg.omega_l) for e in eps)
    splitting = abs(_fold(eps[1] - eps[0], cfg.omega_l))
    return QuasienergyPair(eps1=eps[0], eps2=eps[1], splitting=splitting, degenerate=degenerate)


def cdt_splitting_highfreq(s: float, omega_l: float, delta0: float = 1.0) -> float:
    """High-frequency closed form delta0 * J0(s/omega_l) for the splitting.

    No regime check is applied; callers compare against the monodromy
    result to judge validity.
    """
    if omega_l <= 0:
        raise ConfigError("omega_l must be positive")
    return delta0 * bessel_j0(s / omega_l)


def find_cdt_amplitude(omega_l: float, zero_index: int = 1) -> float:
    """Drive amplitude s = omega_l * j_k that freezes the coherent dynamics.

    j_k is the k-th positive zero of J0, so the high-frequency splitting
    vanishes at the returned amplitude.
    """
    if omega_l <= 0:
        raise ConfigError("omega_l must be positive")
    return omega_l * bessel_j0_zero(zero_index)


def quasienergy_sweep(
    omega_l: float,
    ratios,
    delta0: float = 1.0,
    rtol: float = 1e-12,
) -> dict[str, np.ndarray]:
    """Quasienergies along a drive-amplitude scan s = ratio * omega_l.

    Returns columns ready for CSV export: s_over_wl, eps1, eps2, splitting
    and the high-frequency prediction splitting_highfreq.
    """
    ratios = np.asarray(ratios, dtype=float)
    eps1 = np.empty_like(ratios)
    eps2 = np.empty_like(ratios)
    split = np.empty_like(ratios)
    for i, r in enumerate(ratios):
        cfg = SystemConfig(delta0=delta0, s=r * omega_l, omega_l=omega_l)
        pair = quasienergies(cfg, rtol=rtol)
        eps1[i], eps2[i], split[i] = pair.eps1, pair.eps2, pair.splitting
    high = np.array([cdt_splitting_highfreq(r * omega_l, omega_l, delta0) for r in ratios])
    return {
        "s_over_wl": ratios,
        "eps1": eps1,
        "eps2": eps2,
        "splitting": split,
        "splitting_highfreq": high,
    }
