"""Time-ordered propagators for Hamiltonian schedules.

``propagate_ordered`` is the workhorse: a product of midpoint exponentials
``exp(-i dt H(t_k + dt/2) / hbar)`` over a uniform grid, each computed from
a Hermitian eigendecomposition so every factor is unitary to eigensolver
precision. ``propagate_commuting`` handles schedules whose values commute
with a single exponential of the integrated Hamiltonian and is the oracle
for the ordered path on such families.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import ContractError, NumericalError, ParameterError, ScheduleError
from .models import HamiltonianSchedule, check_hermitian

__all__ = [
    "PropagationResult",
    "as_state",
    "basis_state",
    "random_state",
    "unitarity_defect",
    "expm_hermitian",
    "simpson_integral",
    "propagate_ordered",
    "propagate_commuting",
    "converge",
    "observed_orders",
    "max_abs_diff",
]

log = logging.getLogger(__name__)

NORM_TOL = 1e-10
_CHUNK_ELEMENTS = 1 << 22


@dataclass
class PropagationResult:
    """Evolution operator over a schedule's full domain plus diagnostics.

    ``trajectory`` holds ``(time, state)`` pairs when an initial state was
    supplied; ``achieved_difference`` and ``history`` are filled by
    :func:`converge` with the max-norm change between successive doublings.
    """

    final_unitary: np.ndarray
    unitarity_defect: float
    steps_used: int
    trajectory: list[tuple[float, np.ndarray]] | None = None
    final_state: np.ndarray | None = None
    achieved_difference: float | None = None
    history: list[tuple[int, float]] = field(default_factory=list)

    def apply(self, psi) -> np.ndarray:
        return self.final_unitary @ as_state(psi, self.final_unitary.shape[0])


def as_state(psi, dim: int | None = None) -> np.ndarray:
    """Validate a normalised state vector and return it as a complex array."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if dim is not None and psi.shape[0] != dim:
        raise ParameterError(f"state has dimension {psi.shape[0]}, expected {dim}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > NORM_TOL:
        raise ParameterError(f"state is not normalised (norm={norm!r})")
    return psi


def basis_state(dim: int, index: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def random_state(dim: int, rng: np.random.Generator, support: int | None = None) -> np.ndarray:
    """Haar-random state on the first ``support`` basis vectors (all by default)."""
    k = dim if support is None else support
    psi = np.zeros(dim, dtype=complex)
    psi[:k] = rng.normal(size=k) + 1j * rng.normal(size=k)
    return psi / np.linalg.norm(psi)


def unitarity_defect(U: np.ndarray) -> float:
    U = np.asarray(U)
    return float(np.abs(U.conj().T @ U - np.eye(U.shape[0])).max())


def max_abs_diff(A: np.ndarray, B: np.ndarray, subspace: int | None = None) -> float:
    """Max-norm ``|A - B|``, optionally on the leading ``subspace x subspace`` block."""
    D = np.asarray(A) - np.asarray(B)
    if subspace is not None:
        D = D[:subspace, :subspace]
    return float(np.abs(D).max())


def _eig_exponentials(H: np.ndarray, dt: float, hbar: float) -> np.ndarray:
    # H is a stack (k, n, n); real symmetric input takes the cheaper real path.
    if np.iscomplexobj(H) and not np.any(H.imag):
        H = H.real
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    phases = np.exp((-1j * dt / hbar) * w)
    return (V * phases[:, None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def expm_hermitian(H: np.ndarray, dt: float = 1.0, hbar: float = 1.0) -> np.ndarray:
    """``exp(-i dt H / hbar)`` for a Hermitian matrix or stack of matrices."""
    H = np.asarray(H)
    single = H.ndim == 2
    out = _eig_exponentials(H[None] if single else H, dt, hbar)
    return out[0] if single else out


def _ordered_product(Us: np.ndarray) -> np.ndarray:
    # Us[0] acts first. Pairwise reduction keeps the work in batched matmuls.
    while Us.shape[0] > 1:
        odd = Us.shape[0] % 2
        head = Us[: Us.shape[0] - odd]
        prod = head[1::2] @ head[0::2]
        Us = np.concatenate([prod, Us[-1:]]) if odd else prod
    return Us[0]


def _invariant_blocks(H: np.ndarray) -> list[np.ndarray] | None:
    """Index sets of invariant subspaces shared by every matrix in the stack.

    Found from the union of the exact non-zero patterns; returns None when
    the matrices are irreducible so the caller takes the dense path.
    """
    pattern = np.any(H != 0, axis=0)
    n_comp, labels = connected_components(pattern, directed=False)
    if n_comp == 1:
        return None
    return [np.flatnonzero(labels == c) for c in range(n_comp)]


def _chunk_bounds(n_steps: int, dim: int, sample_steps) -> list[tuple[int, int]]:
    size = max(1, min(4096, _CHUNK_ELEMENTS // (dim * dim)))
    cuts = set(range(0, n_steps, size)) | {n_steps}
    cuts |= {int(s) for s in sample_steps}
    cuts = sorted(c for c in cuts if 0 <= c <= n_steps)
    return [(lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:]) if hi > lo]


def propagate_ordered(
    schedule: HamiltonianSchedule,
    n_steps: int,
    hbar: float = 1.0,
    initial=None,
    n_samples: int | None = None,
) -> PropagationResult:
    """Midpoint-rule time-ordered propagator over the schedule's whole domain.

    Globally second order in ``dt``; exact for constant Hamiltonians.
    With ``initial`` the state is recorded at ``n_samples`` times (snapped to
    the step grid, both endpoints included; default: endpoints only).
    """
    n_steps = int(n_steps)
    if n_steps < 1:
        raise ParameterError(f"n_steps must be >= 1, got {n_steps}")
    if hbar <= 0:
        raise ParameterError("hbar must be > 0")
    dim = schedule.dim
    t0, dt = schedule.t_start, schedule.duration / n_steps
    psi0 = None if initial is None else as_state(initial, dim)

    sample_steps: list[int] = []
    if psi0 is not None:
        k = 2 if n_samples is None else max(2, int(n_samples))
        sample_steps = sorted({int(round(s)) for s in np.linspace(0, n_steps, k)})

    U = np.eye(dim, dtype=complex)
    trajectory = [] if psi0 is not None else None
    if psi0 is not None and sample_steps and sample_steps[0] == 0:
        trajectory.append((t0, psi0.copy()))

    for lo, hi in _chunk_bounds(n_steps, dim, sample_steps):
        t_mid = t0 + (np.arange(lo, hi) + 0.5) * dt
        H = np.asarray(schedule.evaluate(t_mid))
        if H.shape != (hi - lo, dim, dim):
            raise ScheduleError(f"schedule returned shape {H.shape}, expected {(hi - lo, dim, dim)}")
        if not check_hermitian(H):
            raise ScheduleError("schedule produced a non-Hermitian matrix")
        blocks = _invariant_blocks(H) if dim > 2 else None
        if blocks is None:
            U = _ordered_product(_eig_exponentials(H, dt, hbar)) @ U
        else:
            U_new = np.empty_like(U)
            for idx in blocks:
                sub = H[:, idx[:, None], idx[None, :]]
                U_new[idx] = _ordered_product(_eig_exponentials(sub, dt, hbar)) @ U[idx]
            U = U_new
        if trajectory is not None and hi in sample_steps:
            trajectory.append((t0 + hi * dt, U @ psi0))

    if trajectory is not None:
        # Pin the last sample to the exact domain end (avoids t0 + n*dt round-off).
        t_last, psi_last = trajectory[-1]
        trajectory[-1] = (schedule.t_end, psi_last)
    return PropagationResult(
        final_unitary=U,
        unitarity_defect=unitarity_defect(U),
        steps_used=n_steps,
        trajectory=trajectory,
        final_state=None if psi0 is None else U @ psi0,
    )


def simpson_integral(schedule: HamiltonianSchedule, n_points: int) -> np.ndarray:
    """Composite Simpson integral of ``H(t)`` over the schedule domain.

    ``n_points`` must be odd and >= 3. Evaluation is chunked so large bases
    never materialise every sample at once.
    """
    n_points = int(n_points)
    if n_points < 3 or n_points % 2 == 0:
        raise ParameterError(f"Simpson rule needs an odd number >= 3 of points, got {n_points}")
    t = np.linspace(schedule.t_start, schedule.t_end, n_points)
    h = (schedule.t_end - schedule.t_start) / (n_points - 1)
    w = np.full(n_points, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= h / 3.0
    size = max(1, _CHUNK_ELEMENTS // (schedule.dim * schedule.dim))
    total = np.zeros((schedule.dim, schedule.dim), dtype=complex)
    for lo in range(0, n_points, size):
        H = np.asarray(schedule.evaluate(t[lo : lo + size]))
        total += np.tensordot(w[lo : lo + size], H, axes=1)
    return total


def propagate_commuting(
    schedule: HamiltonianSchedule,
    quadrature_points: int = 2001,
    hbar: float = 1.0,
    initial=None,
) -> PropagationResult:
    """Single exponential ``exp(-(i/hbar) int H dt)`` for commuting families."""
    if not schedule.commuting_family:
        raise ContractError("propagate_commuting requires a schedule declared commuting_family")
    if hbar <= 0:
        raise ParameterError("hbar must be > 0")
    integral = simpson_integral(schedule, quadrature_points)
    integral = 0.5 * (integral + integral.conj().T)
    U = expm_hermitian(integral, 1.0, hbar)
    psi0 = None if initial is None else as_state(initial, schedule.dim)
    trajectory = None
    if psi0 is not None:
        trajectory = [(schedule.t_start, psi0.copy()), (schedule.t_end, U @ psi0)]
    return PropagationResult(
        final_unitary=U,
        unitarity_defect=unitarity_defect(U),
        steps_used=int(quadrature_points),
        trajectory=trajectory,
        final_state=None if psi0 is None else U @ psi0,
    )


def converge(
    schedule: HamiltonianSchedule,
    target_tol: float,
    max_steps: int = 1 << 20,
    hbar: float = 1.0,
    n_start: int = 16,
    subspace: int | None = None,
    initial=None,
    n_samples: int | None = None,
) -> PropagationResult:
    """Double ``n_steps`` until successive unitaries differ by less than ``target_tol``.

    The difference is the max-norm over the leading ``subspace`` block when
    given (useful to ignore truncation edges of a Fock basis). Raises
    :class:`NumericalError` carrying the last difference if ``max_steps`` is
    reached first.
    """
    if target_tol <= 0:
        raise ParameterError("target_tol must be > 0")
    n = max(1, int(n_start))
    if n > max_steps:
        raise ParameterError(f"n_start={n} exceeds max_steps={max_steps}")
    prev = propagate_ordered(schedule, n, hbar, initial, n_samples)
    history: list[tuple[int, float]] = []
    diff = math.inf
    while 2 * n <= max_steps:
        n *= 2
        cur = propagate_ordered(schedule, n, hbar, initial, n_samples)
        diff = max_abs_diff(cur.final_unitary, prev.final_unitary, subspace)
        history.append((n, diff))
        log.debug("converge %s: n=%d diff=%.3e", schedule.label, n, diff)
        if diff < target_tol:
            cur.achieved_difference = diff
            cur.history = history
            return cur
        prev = cur
    raise NumericalError(
        f"no convergence to {target_tol:g} within {max_steps} steps (last difference {diff:.3e})",
        residual=diff,
    )


def observed_orders(differences) -> list[float]:
    """``log2`` ratios of successive errors from a step-doubling sequence."""
    d = [float(x) for x in differences]
    return [math.log2(a / b) for a, b in zip(d[:-1], d[1:]) if a > 0 and b > 0]
