"""Finite-matrix Hamiltonian schedules and the time-rescaling transform.

A :class:`HamiltonianSchedule` is evaluated on arrays of times and returns
a stack of Hermitian matrices, which lets the propagator build whole blocks
of step exponentials at once. Oscillator operators live in a Fock basis
fixed at ``basis_frequency``; only scalar coefficients change in time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError
from .rescale import RescalingSpec, eval_f, eval_f_prime

__all__ = [
    "HamiltonianSchedule",
    "OscillatorParams",
    "SpinParams",
    "FockOperators",
    "PAULI",
    "check_hermitian",
    "fock_operators",
    "spin_schedule",
    "constant_field",
    "rotating_field",
    "oscillator_schedule",
    "transport_schedule",
    "time_rescale",
    "compression_frequency",
    "tr_frequency",
    "transport_function",
    "tr_transport_function",
]

HERMITIAN_RTOL = 1e-12
_DOMAIN_SLACK = 1e-12

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def check_hermitian(H: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    """True when ``max|H - H^dagger| <= rtol * max|H|`` for every matrix in the stack."""
    H = np.asarray(H)
    scale = np.abs(H).max(axis=(-2, -1))
    defect = np.abs(H - np.conj(np.swapaxes(H, -1, -2))).max(axis=(-2, -1))
    return bool(np.all(defect <= rtol * scale))


@dataclass(frozen=True)
class HamiltonianSchedule:
    """Time-dependent Hamiltonian ``t -> H(t)`` on ``[t_start, t_end]``.

    ``evaluate`` maps a 1-D array of times to an array of shape
    ``(len(times), dim, dim)``. ``commuting_family`` is a declaration by the
    constructor: ``H(t1) H(t2) == H(t2) H(t1)`` for all times.
    """

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    t_start: float
    t_end: float
    commuting_family: bool = False
    label: str = ""

    def __call__(self, t: float) -> np.ndarray:
        return self.evaluate(np.array([float(t)]))[0]

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @classmethod
    def from_function(cls, fn, dim, t_start, t_end, commuting_family=False, label=""):
        """Wrap a scalar ``fn(t) -> (dim, dim)`` matrix function."""

        def evaluate(times):
            return np.stack([np.asarray(fn(float(t)), dtype=complex) for t in np.atleast_1d(times)])

        return cls(dim, evaluate, float(t_start), float(t_end), commuting_family, label)


def _as_function(value) -> Callable[[np.ndarray], np.ndarray]:
    if callable(value):
        return lambda t: np.broadcast_to(np.asarray(value(t), dtype=float), np.shape(t))
    const = float(value)
    return lambda t: np.full(np.shape(t), const)


# --- spin-1/2 ---------------------------------------------------------------


@dataclass(frozen=True)
class SpinParams:
    gamma: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.gamma == 0:
            raise ParameterError("gyromagnetic ratio must be non-zero")
        if self.hbar <= 0:
            raise ParameterError("hbar must be > 0")


def constant_field(B0: float, axis=(0.0, 0.0, 1.0)):
    """Static field ``B0 * axis`` (axis normalised)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    vec = B0 * axis

    def field_fn(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(vec, t.shape + (3,)).copy()

    return field_fn


def rotating_field(B0: float, theta: float, omega_rot: float, phase: float = 0.0):
    """Field of magnitude B0 tilted by ``theta`` from z, precessing about z at ``omega_rot``."""

    def field_fn(t):
        t = np.asarray(t, dtype=float)
        phi = omega_rot * t + phase
        st = np.sin(theta)
        return B0 * np.stack([st * np.cos(phi), st * np.sin(phi), np.full_like(t, np.cos(theta))], axis=-1)

    return field_fn


def _fixed_direction(field_fn, t_start, t_end, n_probe=257) -> bool:
    B = np.asarray(field_fn(np.linspace(t_start, t_end, n_probe)), dtype=float)
    norms = np.linalg.norm(B, axis=-1)
    nz = norms > 1e-14 * max(norms.max(), 1e-300)
    if not nz.any():
        return True
    unit = B[nz] / norms[nz, None]
    # Antiparallel directions still commute.
    return bool(np.all(np.abs(np.abs(unit @ unit[0]) - 1.0) < 1e-12))


def spin_schedule(
    params: SpinParams,
    field,
    t_start: float = 0.0,
    t_end: float = 1.0,
    commuting: bool | None = None,
    label: str = "spin",
) -> HamiltonianSchedule:
    """``H(t) = gamma B(t) . S`` with ``S = hbar/2 (sigma_x, sigma_y, sigma_z)``.

    ``field`` maps an array of times to an array ``(..., 3)``. When
    ``commuting`` is None the field is probed on a grid and the schedule is
    flagged commuting iff its direction never changes.
    """
    if commuting is None:
        commuting = _fixed_direction(field, t_start, t_end)
    pref = params.gamma * params.hbar / 2.0
    paulis = np.stack([PAULI["x"], PAULI["y"], PAULI["z"]])

    def evaluate(times):
        B = np.asarray(field(np.asarray(times, dtype=float)), dtype=float).reshape(-1, 3)
        return pref * np.einsum("kc,cij->kij", B, paulis)

    return HamiltonianSchedule(2, evaluate, float(t_start), float(t_end), bool(commuting), label)


# --- harmonic oscillator ----------------------------------------------------


@dataclass(frozen=True)
class OscillatorParams:
    """Mass, hbar and the truncated Fock basis used to represent x and p."""

    mass: float = 1.0
    hbar: float = 1.0
    basis_dim: int = 64
    basis_frequency: float = 1.0

    def __post_init__(self):
        if int(self.basis_dim) != self.basis_dim or self.basis_dim < 2:
            raise ParameterError(f"basis_dim must be an integer >= 2, got {self.basis_dim}")
        for name in ("mass", "hbar", "basis_frequency"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")


@dataclass(frozen=True)
class FockOperators:
    x: np.ndarray
    p: np.ndarray
    x2: np.ndarray
    p2: np.ndarray


def fock_operators(params: OscillatorParams) -> FockOperators:
    """x, p, x^2, p^2 on the lowest ``basis_dim`` Fock states.

    Built two levels larger and cropped, so x^2 and p^2 are the projections
    of the exact operators rather than squares of truncated ones.
    """
    n = params.basis_dim
    big = n + 2
    lower = np.diag(np.sqrt(np.arange(1, big, dtype=float)), 1)
    x_len = np.sqrt(params.hbar / (2.0 * params.mass * params.basis_frequency))
    p_len = np.sqrt(params.hbar * params.mass * params.basis_frequency / 2.0)
    x = x_len * (lower + lower.T)
    p = 1j * p_len * (lower.T - lower)
    x2 = (x @ x)[:n, :n]
    p2 = (p @ p).real[:n, :n]
    return FockOperators(x=x[:n, :n], p=p[:n, :n], x2=x2, p2=p2)


def oscillator_schedule(
    params: OscillatorParams,
    kinetic_scale,
    omega,
    t_start: float = 0.0,
    t_end: float = 1.0,
    label: str = "oscillator",
) -> HamiltonianSchedule:
    """``H(t) = s(t) p^2/2m + m omega(t)^2 x^2 / 2`` on the fixed Fock basis.

    ``kinetic_scale`` and ``omega`` may be vectorised callables or constants.
    """
    ops = fock_operators(params)
    ks, om = _as_function(kinetic_scale), _as_function(omega)
    kin = ops.p2 / (2.0 * params.mass)
    pot = 0.5 * params.mass * ops.x2

    def evaluate(times):
        t = np.asarray(times, dtype=float).reshape(-1)
        s = ks(t)[:, None, None]
        w2 = (om(t) ** 2)[:, None, None]
        return s * kin + w2 * pot

    return HamiltonianSchedule(params.basis_dim, evaluate, float(t_start), float(t_end), False, label)


def transport_schedule(
    params: OscillatorParams,
    kinetic_scale,
    omega,
    x0,
    t_start: float = 0.0,
    t_end: float = 1.0,
    label: str = "transport",
) -> HamiltonianSchedule:
    """``H(t) = s(t) p^2/2m + m omega(t)^2 (x - x0(t))^2 / 2``.

    The square is expanded as ``x^2 - 2 x0 x + x0^2`` over fixed matrices.
    """
    ops = fock_operators(params)
    ks, om, centre = _as_function(kinetic_scale), _as_function(omega), _as_function(x0)
    kin = ops.p2 / (2.0 * params.mass)
    x2, x1, eye = ops.x2, ops.x.real, np.eye(params.basis_dim)
    half_m = 0.5 * params.mass

    def evaluate(times):
        t = np.asarray(times, dtype=float).reshape(-1)
        s = ks(t)[:, None, None]
        w2 = half_m * (om(t) ** 2)[:, None, None]
        c = centre(t)[:, None, None]
        return s * kin + w2 * (x2 - 2.0 * c * x1 + c * c * eye)

    return HamiltonianSchedule(params.basis_dim, evaluate, float(t_start), float(t_end), False, label)


# --- time rescaling ---------------------------------------------------------


def time_rescale(ref: HamiltonianSchedule, spec: RescalingSpec) -> HamiltonianSchedule:
    """Rescaled schedule ``tau -> f'(tau) H(f(tau))`` on ``[0, f^-1(t_f)]``.

    The reference must live on ``[0, spec.t_f]``. Reference times are clipped
    into that interval so round-off in ``f`` at the far endpoint never asks
    the reference for a time outside its domain.
    """
    tol = _DOMAIN_SLACK * spec.scale
    if abs(ref.t_start) > tol or abs(ref.t_end - spec.t_f) > tol:
        raise ParameterError(
            f"reference domain [{ref.t_start}, {ref.t_end}] does not match [0, t_f={spec.t_f}]"
        )
    t_lo, t_hi = ref.t_start, ref.t_end

    def evaluate(taus):
        taus = np.asarray(taus, dtype=float).reshape(-1)
        t = np.clip(eval_f(spec, taus), t_lo, t_hi)
        rate = np.asarray(eval_f_prime(spec, taus)).reshape(-1)
        return rate[:, None, None] * ref.evaluate(t)

    label = f"{ref.label}|tr(a={spec.a:g},{spec.family.value})" if ref.label else ""
    return HamiltonianSchedule(ref.dim, evaluate, 0.0, spec.duration, ref.commuting_family, label)


def _check_interval(t, lo, hi, what):
    t = np.asarray(t, dtype=float)
    slack = _DOMAIN_SLACK * max(1.0, abs(hi))
    if np.any(t < lo - slack) or np.any(t > hi + slack):
        raise ParameterError(f"{what} outside [{lo}, {hi}]")
    return np.clip(t, lo, hi)


def compression_frequency(omega0: float, omegaf: float, t_f: float, t):
    """Reference ramp ``omega0 + (omegaf - omega0) sin^2(pi t / 2 t_f)``.

    Zero slope at both ends, so the trap is static at the start and finish.
    """
    if t_f <= 0:
        raise ParameterError("t_f must be > 0")
    t = _check_interval(t, 0.0, t_f, "time")
    out = omega0 + (omegaf - omega0) * np.sin(np.pi * t / (2.0 * t_f)) ** 2
    return out if np.ndim(out) else float(out)


def tr_frequency(omega0: float, omegaf: float, spec: RescalingSpec, tau):
    """Rescaled trap frequency ``sqrt(f'(tau)) * omega(f(tau))``."""
    tau = _check_interval(tau, 0.0, spec.duration, "rescaled time")
    t = np.clip(eval_f(spec, tau), 0.0, spec.t_f)
    out = np.sqrt(eval_f_prime(spec, tau)) * compression_frequency(omega0, omegaf, spec.t_f, t)
    return out if np.ndim(out) else float(out)


def transport_function(d: float, t_f: float, t):
    """Reference trap position ``d sin^2(pi t / 2 t_f)``."""
    if t_f <= 0:
        raise ParameterError("t_f must be > 0")
    t = _check_interval(t, 0.0, t_f, "time")
    out = d * np.sin(np.pi * t / (2.0 * t_f)) ** 2
    return out if np.ndim(out) else float(out)


def tr_transport_function(d: float, spec: RescalingSpec, tau):
    """Rescaled trap position ``x0(f(tau))``."""
    tau = _check_interval(tau, 0.0, spec.duration, "rescaled time")
    t = np.clip(eval_f(spec, tau), 0.0, spec.t_f)
    out = transport_function(d, spec.t_f, t)
    return out if np.ndim(out) else float(out)
