"""Simulator for a periodically driven two-level atom in a lossy cavity.

The coherent part covers Bloch dynamics, unitary propagators and
quasienergies (including drive-induced freezing of the dynamics at zeros
of J0(s/omega_l)); the dissipative part couples the atom to a lossy
cavity mode through an effective Lorentzian bath and integrates the
resulting time-dependent dissipative Bloch equations.
"""

__version__ = "0.1.0"

from .model import (
    BlochState,
    ConfigError,
    NumericsError,
    SystemConfig,
    Trajectory,
    validate,
)
from .closed import (
    PropagatorCache,
    UVPair,
    b_coeffs,
    bloch_rhs,
    bloch_via_propagator,
    evolve_u,
    integrate_closed,
    uv_elements,
)
from .floquet import (
    QuasienergyPair,
    bessel_j0,
    bessel_j0_zero,
    cdt_splitting_highfreq,
    find_cdt_amplitude,
    quasienergies,
    quasienergy_sweep,
)
from .bath import (
    KernelTable,
    build_kernel_table,
    j_eff,
    j_ohmic,
    m_imag,
    m_oracle,
    m_real,
)
from .redfield import (
    DissipativeCoefficients,
    dissipative_coefficients,
    dominant_frequency,
    envelope_at,
    integrate_redfield,
    local_extrema_envelope,
    redfield_rhs,
)

__all__ = [
    "__version__",
    "BlochState",
    "ConfigError",
    "NumericsError",
    "SystemConfig",
    "Trajectory",
    "validate",
    "PropagatorCache",
    "UVPair",
    "b_coeffs",
    "bloch_rhs",
    "bloch_via_propagator",
    "evolve_u",
    "integrate_closed",
    "uv_elements",
    "QuasienergyPair",
    "bessel_j0",
    "bessel_j0_zero",
    "cdt_splitting_highfreq",
    "find_cdt_amplitude",
    "quasienergies",
    "quasienergy_sweep",
    "KernelTable",
    "build_kernel_table",
    "j_eff",
    "j_ohmic",
    "m_imag",
    "m_oracle",
    "m_real",
    "DissipativeCoefficients",
    "dissipative_coefficients",
    "dominant_frequency",
    "envelope_at",
    "integrate_redfield",
    "local_extrema_envelope",
    "redfield_rhs",
]
