"""Physical parameters, Bloch-vector state and trajectory containers.

Unit conventions used throughout the package: hbar = 1 and the two-level
splitting ``delta0`` sets the frequency scale, so every frequency-like
parameter is quoted in multiples of delta0 and times in 1/delta0.  The
drive enters as s(t) = s * cos(omega_l * t).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "NumericsError",
    "SystemConfig",
    "BlochState",
    "Trajectory",
    "validate",
    "CONFIG_FIELDS",
]


class ConfigError(ValueError):
    """A parameter set or an input document violates a model invariant."""


class NumericsError(RuntimeError):
    """An integration or quadrature failed to reach its target accuracy."""


# Couplings g >= BORN_WARNING_FACTOR * delta0 strain the weak-coupling
# treatment of the cavity; such runs are allowed but flagged.
BORN_WARNING_FACTOR = 0.1

# Field names accepted in a JSON config document, in canonical order.
CONFIG_FIELDS = (
    "delta0",
    "s",
    "omega_l",
    "g",
    "omega_cav",
    "gamma_cav",
    "temperature",
    "omega_c",
)


@dataclass(frozen=True)
class SystemConfig:
    """Immutable parameter set of the driven atom and its lossy cavity.

    Attributes
    ----------
    delta0 : float
        Level splitting, the frequency unit (fixed to 1 in practice).
    s : float
        Drive amplitude, units of delta0.
    omega_l : float
        Drive frequency, units of delta0.
    g : float
        Atom-cavity coupling, units of delta0.
    omega_cav : float
        Cavity mode frequency, units of delta0.
    gamma_cav : float
        Cavity line width, units of delta0.  Must stay below omega_cav,
        otherwise the correlation kernel is undefined.
    temperature : float
        Bath temperature in units of hbar*delta0/k_B.  Only the quadrature
        oracle uses it; the production kernel is evaluated at T = 0.
    omega_c : float
        Ohmic cutoff used by the pre-mapping spectral density and the
        oracle only; the effective density is the cutoff-free limit.
    born_warning : bool
        Set by :func:`validate` when g is large enough that the
        weak-coupling treatment becomes questionable.
    drive_phase_flipped : bool
        Set by :func:`validate` when a negative drive amplitude was
        normalised to |s| (a half-period phase shift of the drive).
    """

    delta0: float = 1.0
    s: float = 0.0
    omega_l: float = 1.0
    g: float = 0.0
    omega_cav: float = 1.0
    gamma_cav: float = 0.1
    temperature: float = 0.0
    omega_c: float = 50.0
    born_warning: bool = False
    drive_phase_flipped: bool = False

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], path: str = "config") -> "SystemConfig":
        """Build a config from a JSON-style mapping, rejecting unknown keys.

        Raises ConfigError naming the offending key path, so typos fail
        fast instead of silently running with defaults.
        """
        if not isinstance(doc, Mapping):
            raise ConfigError(f"{path}: expected an object, got {type(doc).__name__}")
        unknown = sorted(set(doc) - set(CONFIG_FIELDS))
        if unknown:
            raise ConfigError(f"{path}.{unknown[0]}: unknown field")
        kwargs = {}
        for key, value in doc.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
            kwargs[key] = float(value)
        return cls(**kwargs)

    def to_dict(self) -> dict[str, float]:
        """The eight physical fields as a plain dict (validation flags excluded)."""
        return {name: float(getattr(self, name)) for name in CONFIG_FIELDS}


def validate(config: SystemConfig) -> SystemConfig:
    """Check all parameter invariants and return the (possibly annotated) config.

    Negative drive amplitudes are normalised to |s| with the
    ``drive_phase_flipped`` note set; g >= delta0/10 sets ``born_warning``
    without rejecting the run.  Idempotent.
    """
    if not np.isfinite(config.delta0) or config.delta0 <= 0:
        raise ConfigError(f"delta0 must be positive, got {config.delta0}")
    if config.g < 0:
        raise ConfigError(f"g must be non-negative, got {config.g}")
    if config.temperature < 0:
        raise ConfigError(f"temperature must be non-negative, got {config.temperature}")
    if config.omega_cav <= 0:
        raise ConfigError(f"omega_cav must be positive, got {config.omega_cav}")
    if config.gamma_cav >= config.omega_cav:
        raise ConfigError(
            "correlation kernel undefined: gamma_cav must stay below omega_cav, "
            f"got gamma_cav={config.gamma_cav}, omega_cav={config.omega_cav}"
        )
    if config.gamma_cav < 0:
        raise ConfigError(f"gamma_cav must be non-negative, got {config.gamma_cav}")
    if config.g > 0 and config.gamma_cav == 0:
        raise ConfigError("a coupled cavity (g > 0) needs a positive line width gamma_cav")
    if config.omega_c <= 0:
        raise ConfigError(f"omega_c must be positive, got {config.omega_c}")
    if config.omega_l < 0:
        raise ConfigError(f"omega_l must be non-negative, got {config.omega_l}")

    out = config
    if out.s < 0:
        out = replace(out, s=-out.s, drive_phase_flipped=True)
    if out.s != 0 and out.omega_l <= 0:
        raise ConfigError("omega_l must be positive when the drive amplitude s is non-zero")
    warn = out.g >= BORN_WARNING_FACTOR * out.delta0
    if warn != out.born_warning:
        out = replace(out, born_warning=warn)
    return out


@dataclass(frozen=True)
class BlochState:
    """Expectation values (sigma_x, sigma_y, sigma_z) at one time instant."""

    sx: float
    sy: float
    sz: float

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "BlochState":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz], dtype=float)

    def norm(self) -> float:
        return float(np.sqrt(self.sx**2 + self.sy**2 + self.sz**2))


def as_bloch_array(state: "BlochState | Sequence[float] | np.ndarray") -> np.ndarray:
    """Coerce a BlochState or 3-sequence to a float array of shape (3,)."""
    if isinstance(state, BlochState):
        return state.as_array()
    arr = np.asarray(state, dtype=float)
    if arr.shape != (3,):
        raise ConfigError(f"a Bloch state needs exactly 3 components, got shape {arr.shape}")
    return arr


@dataclass
class Trajectory:
    """Time-ordered Bloch-vector samples with the generating configuration.

    ``states`` has shape (len(times), 3) with columns sigma_x, sigma_y,
    sigma_z.  ``metadata`` carries solver settings and diagnostics such as
    norm excursions; it never feeds back into the dynamics.
    """

    times: np.ndarray
    states: np.ndarray
    config: SystemConfig
    label: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or self.states.shape != (self.times.size, 3):
            raise ConfigError(
                f"trajectory shape mismatch: times {self.times.shape}, states {self.states.shape}"
            )
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ConfigError("trajectory times must be strictly increasing")

    @property
    def sigma_x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def sigma_y(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def sigma_z(self) -> np.ndarray:
        return self.states[:, 2]

    def state_at(self, index: int) -> BlochState:
        return BlochState.from_sequence(self.states[index])

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)
