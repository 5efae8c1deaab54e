"""The four built-in protocols: reference schedules, initial states and targets."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError
from .models import (
    HamiltonianSchedule,
    OscillatorParams,
    SpinParams,
    compression_frequency,
    constant_field,
    oscillator_schedule,
    rotating_field,
    spin_schedule,
    transport_function,
    transport_schedule,
)
from .rescale import Family, RescalingSpec
from .schedules import (
    WaveformTable,
    emit_spin_field_table,
    emit_tr_field_table,
    emit_tr_frequency_table,
    emit_tr_transport_table,
    emit_transport_frequency_table,
)

__all__ = ["Scenario", "ScenarioConfig", "BuiltScenario", "build_scenario", "waveform_tables", "SX_PLUS", "SX_MINUS"]

SX_PLUS = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
SX_MINUS = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)


class Scenario(str, enum.Enum):
    SPIN_FLIP_CONSTANT_Z = "SpinFlipConstantZ"
    SPIN_ROTATING_FIELD = "SpinRotatingField"
    OSCILLATOR_COMPRESSION = "OscillatorCompression"
    TRAP_TRANSPORT = "TrapTransport"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, Scenario):
            return value
        key = str(value).replace("_", "").replace("-", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ConfigError(f"unknown scenario {value!r}; choose from {[m.value for m in cls]}")


@dataclass
class ScenarioConfig:
    """Everything needed to run one reference/rescaled comparison.

    Physical defaults are natural units (hbar = m = 1). ``t_f`` defaults per
    scenario when left as None: pi/Omega for the spin flip, 4 pi/Omega for
    the rotating field, 100 for compression and 50 for transport.
    """

    scenario: Scenario = Scenario.SPIN_FLIP_CONSTANT_Z
    family: Family = Family.SINUSOIDAL
    a: float = 2.0
    t_f: float | None = None
    # model
    omega0: float = 1.0
    omegaf: float = 6.0
    d: float = 5.0
    omega: float = 1.0
    B0: float = 1.0
    gamma: float = 1.0
    theta: float = math.pi / 4
    omega_rot: float | None = None
    mass: float = 1.0
    hbar: float = 1.0
    basis_dim: int = 64
    # solver
    n_steps: int | None = None
    target_tol: float | None = None
    max_steps: int = 1 << 18
    n_start: int = 64
    quadrature_points: int = 4001
    samples: int = 101
    compare_levels: int | None = None
    # checks and output
    fidelity_threshold: float = 1.0 - 1e-8
    operator_tol: float = 1e-6
    unitarity_tol: float = 1e-10
    output_dir: str = "tr_output"

    def __post_init__(self):
        self.scenario = Scenario.parse(self.scenario)
        self.family = Family.parse(self.family)
        if self.family is Family.CUSTOM:
            raise ConfigError("custom rescaling functions cannot be configured from a file")
        for name in ("a", "omega0", "omegaf", "omega", "B0", "mass", "hbar"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.gamma == 0:
            raise ConfigError("gamma must be non-zero")
        if self.t_f is not None and not self.t_f > 0:
            raise ConfigError("t_f must be > 0")
        if self.basis_dim < 2:
            raise ConfigError("basis_dim must be >= 2")
        if self.n_steps is not None and self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")
        if self.target_tol is not None and not self.target_tol > 0:
            raise ConfigError("target_tol must be > 0")
        if self.quadrature_points < 3 or self.quadrature_points % 2 == 0:
            raise ConfigError("quadrature_points must be odd and >= 3")

    @property
    def rabi_frequency(self) -> float:
        return self.gamma * self.B0

    @property
    def reference_duration(self) -> float:
        if self.t_f is not None:
            return float(self.t_f)
        return {
            Scenario.SPIN_FLIP_CONSTANT_Z: math.pi / abs(self.rabi_frequency),
            Scenario.SPIN_ROTATING_FIELD: 4.0 * math.pi / abs(self.rabi_frequency),
            Scenario.OSCILLATOR_COMPRESSION: 100.0,
            Scenario.TRAP_TRANSPORT: 50.0,
        }[self.scenario]

    @property
    def rescaling(self) -> RescalingSpec:
        return RescalingSpec(self.family, self.a, self.reference_duration)

    def with_a(self, a: float) -> "ScenarioConfig":
        return replace(self, a=float(a))

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, enum.Enum) else v
        return out


@dataclass
class BuiltScenario:
    reference: HamiltonianSchedule
    initial: np.ndarray
    target: np.ndarray | None
    target_name: str
    hbar: float
    extra: dict = field(default_factory=dict)


def build_scenario(cfg: ScenarioConfig) -> BuiltScenario:
    """Reference schedule on ``[0, t_f]`` with its initial state and (optional) analytic target."""
    t_f = cfg.reference_duration
    sc = cfg.scenario
    if sc is Scenario.SPIN_FLIP_CONSTANT_Z:
        ref = spin_schedule(SpinParams(cfg.gamma, cfg.hbar), constant_field(cfg.B0), 0.0, t_f, commuting=True, label=sc.value)
        return BuiltScenario(ref, SX_PLUS.copy(), SX_MINUS.copy(), "S_x,-", cfg.hbar)
    if sc is Scenario.SPIN_ROTATING_FIELD:
        omega_rot = cfg.omega_rot if cfg.omega_rot is not None else cfg.rabi_frequency / 2.0
        fld = rotating_field(cfg.B0, cfg.theta, omega_rot)
        ref = spin_schedule(SpinParams(cfg.gamma, cfg.hbar), fld, 0.0, t_f, label=sc.value)
        return BuiltScenario(ref, SX_PLUS.copy(), None, "reference", cfg.hbar, {"omega_rot": omega_rot})
    if sc is Scenario.OSCILLATOR_COMPRESSION:
        params = OscillatorParams(cfg.mass, cfg.hbar, cfg.basis_dim, basis_frequency=cfg.omega0)
        ref = oscillator_schedule(
            params, 1.0, lambda t: compression_frequency(cfg.omega0, cfg.omegaf, t_f, t), 0.0, t_f, label=sc.value
        )
        return BuiltScenario(ref, _ground_state(ref), None, "reference", cfg.hbar)
    if sc is Scenario.TRAP_TRANSPORT:
        params = OscillatorParams(cfg.mass, cfg.hbar, cfg.basis_dim, basis_frequency=cfg.omega)
        ref = transport_schedule(
            params, 1.0, cfg.omega, lambda t: transport_function(cfg.d, t_f, t), 0.0, t_f, label=sc.value
        )
        return BuiltScenario(ref, _ground_state(ref), None, "reference", cfg.hbar)
    raise ConfigError(f"unhandled scenario {sc}")


def _ground_state(schedule: HamiltonianSchedule) -> np.ndarray:
    H = schedule(schedule.t_start)
    w, V = np.linalg.eigh(H.real if not np.any(np.imag(H)) else H)
    psi = V[:, 0].astype(complex)
    # Fix the sign so the largest component is real positive; keeps outputs reproducible.
    k = int(np.argmax(np.abs(psi)))
    return psi * (abs(psi[k]) / psi[k])


def waveform_tables(cfg: ScenarioConfig, n_rows: int = 501) -> dict[str, WaveformTable]:
    """Control waveforms relevant to the scenario, keyed by output file stem."""
    spec = cfg.rescaling
    sc = cfg.scenario
    if sc in (Scenario.SPIN_FLIP_CONSTANT_Z, Scenario.SPIN_ROTATING_FIELD):
        return {"waveform_spin_field": emit_spin_field_table(cfg.B0, spec, n_rows)}
    if sc is Scenario.OSCILLATOR_COMPRESSION:
        return {
            "waveform_frequency": emit_tr_frequency_table(cfg.omega0, cfg.omegaf, spec, n_rows),
            "waveform_kinetic_field": emit_tr_field_table(cfg.B0, spec, n_rows),
        }
    return {
        "waveform_frequency": emit_transport_frequency_table(cfg.omega, spec, n_rows),
        "waveform_position": emit_tr_transport_table(cfg.d, spec, n_rows),
        "waveform_kinetic_field": emit_tr_field_table(cfg.B0, spec, n_rows),
    }
