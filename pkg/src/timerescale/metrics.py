"""Figures of merit for comparing reference and time-rescaled protocols."""

from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError, UndefinedPhaseError
from .models import HamiltonianSchedule
from .propagate import as_state, simpson_integral

__all__ = [
    "ProtocolReport",
    "fidelity",
    "relative_phase",
    "energy_uncertainty",
    "mt_product",
    "instantaneous_populations",
    "operator_integral",
    "peak_drive_norm",
    "integral_mismatch",
    "endpoint_mismatch",
]

DEGENERACY_RTOL = 1e-9


def _pair(psi1, psi2):
    psi1 = as_state(psi1)
    psi2 = as_state(psi2)
    if psi1.shape != psi2.shape:
        raise ParameterError(f"dimension mismatch: {psi1.shape[0]} vs {psi2.shape[0]}")
    return psi1, psi2


def fidelity(psi1, psi2) -> float:
    """``|<psi1|psi2>|^2``."""
    psi1, psi2 = _pair(psi1, psi2)
    return float(min(1.0, abs(np.vdot(psi1, psi2)) ** 2))


def relative_phase(target, psi) -> float:
    """``arg <target|psi>`` in (-pi, pi].

    The order matters: ``relative_phase(phi, -1j * phi)`` is ``-pi/2``.
    Only defined for near-parallel states (fidelity > 1/2).
    """
    target, psi = _pair(target, psi)
    overlap = np.vdot(target, psi)
    if abs(overlap) ** 2 <= 0.5:
        raise UndefinedPhaseError(f"states are too far apart for a global phase (fidelity={abs(overlap) ** 2:.3g})")
    phase = cmath.phase(overlap)
    return math.pi if phase == -math.pi else phase


def energy_uncertainty(H: np.ndarray, psi) -> float:
    """Standard deviation ``sqrt(<H^2> - <H>^2)`` of H in state psi."""
    H = np.asarray(H)
    psi = as_state(psi, H.shape[0])
    h_psi = H @ psi
    mean = np.vdot(psi, h_psi).real
    mean_sq = np.vdot(h_psi, h_psi).real
    return math.sqrt(max(0.0, mean_sq - mean * mean))


def mt_product(duration: float, delta_e: float) -> float:
    """Mandelstam-Tamm product ``duration * delta_e``."""
    if duration < 0 or delta_e < 0:
        raise ParameterError("duration and energy spread must be non-negative")
    return duration * delta_e


def instantaneous_populations(schedule: HamiltonianSchedule, t: float, psi) -> np.ndarray:
    """Populations of psi in the eigenbasis of ``H(t)``, eigenvalues ascending.

    Eigenvalues closer than ``1e-9 * ||H||`` are one degenerate level and
    their populations are summed, so the output may be shorter than dim.
    """
    psi = as_state(psi, schedule.dim)
    H = schedule(t)
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real
    w, V = np.linalg.eigh(H)
    pops = np.abs(V.conj().T @ psi) ** 2
    scale = max(np.abs(w).max(), 1e-300)
    groups = np.concatenate([[0], np.flatnonzero(np.diff(w) >= DEGENERACY_RTOL * scale) + 1])
    return np.add.reduceat(pops, groups)


def operator_integral(schedule: HamiltonianSchedule, n_points: int = 2001) -> np.ndarray:
    """Entrywise composite Simpson integral of H over the schedule domain."""
    return simpson_integral(schedule, n_points)


def peak_drive_norm(schedule: HamiltonianSchedule, n_samples: int = 2001) -> float:
    """Largest spectral norm of H(t) over ``n_samples`` equally spaced times."""
    n_samples = int(n_samples)
    if n_samples < 2:
        raise ParameterError("n_samples must be >= 2")
    times = np.linspace(schedule.t_start, schedule.t_end, n_samples)
    peak = 0.0
    size = max(1, (1 << 22) // (schedule.dim * schedule.dim))
    for lo in range(0, n_samples, size):
        H = np.asarray(schedule.evaluate(times[lo : lo + size]))
        if np.iscomplexobj(H) and not np.any(H.imag):
            H = H.real
        w = np.linalg.eigvalsh(H)
        peak = max(peak, float(np.abs(w).max()))
    return peak


def integral_mismatch(ref: HamiltonianSchedule, tr: HamiltonianSchedule, n_points: int = 2001) -> float:
    """Max-norm of ``int H_tr dtau - int H_ref dt``."""
    return float(np.abs(operator_integral(tr, n_points) - operator_integral(ref, n_points)).max())


def endpoint_mismatch(ref: HamiltonianSchedule, tr: HamiltonianSchedule) -> float:
    """Larger of the max-norm mismatches at the initial and at the final time."""
    start = np.abs(tr(tr.t_start) - ref(ref.t_start)).max()
    end = np.abs(tr(tr.t_end) - ref(ref.t_end)).max()
    return float(max(start, end))


@dataclass
class ProtocolReport:
    """Quality summary of one reference/rescaled protocol pair.

    ``fidelity`` and ``relative_phase`` compare the rescaled final state to
    the target named in ``target`` (an analytic state where the scenario has
    one, otherwise the reference final state). ``relative_phase`` is None
    when the states are too far apart for a phase to mean anything.
    """

    fidelity: float
    relative_phase: float | None
    mt_product: float
    mt_product_reference: float
    peak_drive_norm: float
    peak_drive_norm_reference: float
    integral_mismatch: float
    endpoint_mismatch: float
    operator_mismatch: float
    reference_fidelity: float
    target: str = "reference"

    def to_dict(self) -> dict:
        return asdict(self)
