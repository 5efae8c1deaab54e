"""Time-rescaling functions t = f(tau), their derivatives, inverses and checks.

Two closed-form families are built in. Both map the compressed interval
[0, t_f/a] onto the reference interval [0, t_f] and have unit slope at
both ends, so the rescaled Hamiltonian f'(tau) H(f(tau)) starts and ends
on the reference Hamiltonian.

``SINUSOIDAL``::

    f(tau)  = a tau - t_f (a - 1) / (2 pi a) * sin(2 pi a tau / t_f)
    f'(tau) = a - (a - 1) cos(2 pi a tau / t_f)          range [1, 2a - 1]

``POLYNOMIAL``::

    f(tau)  = 2 (a^2 - a^3) / t_f^2 tau^3 + 3 (a^2 - a) / t_f tau^2 + tau
    f'(tau) = 1 + 6 (a - 1) u (1 - u),  u = a tau / t_f  range [1, (3a - 1)/2]

A ``CUSTOM`` family wraps user callables; nothing is assumed about it
beyond monotonicity, and :func:`validate_sta` checks it numerically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import NumericalError, ParameterError

__all__ = [
    "Family",
    "RescalingSpec",
    "StaValidationReport",
    "eval_f",
    "eval_f_prime",
    "invert_f",
    "validate_sta",
]

DEFAULT_INVERSE_TOL = 1e-12
_MAX_ITER = 200


class Family(str, enum.Enum):
    SINUSOIDAL = "sin"
    POLYNOMIAL = "poly"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value: "str | Family") -> "Family":
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower()
        aliases = {
            "sin": cls.SINUSOIDAL,
            "sinusoidal": cls.SINUSOIDAL,
            "poly": cls.POLYNOMIAL,
            "polynomial": cls.POLYNOMIAL,
            "custom": cls.CUSTOM,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ParameterError(f"unknown rescaling family {value!r}") from None


@dataclass(frozen=True)
class RescalingSpec:
    """One member of a time-rescaling family.

    Parameters
    ----------
    family : Family or str
        ``"sin"``, ``"poly"`` or ``"custom"``.
    a : float
        Contraction parameter. ``a > 1`` shortens the protocol to ``t_f / a``,
        ``a == 1`` is the identity and ``0 < a < 1`` dilates it.
    t_f : float
        Duration of the reference protocol.
    f, f_prime : callable, optional
        Vectorised ``f(tau)`` and ``f'(tau)``; required for the custom family
        and ignored otherwise.
    """

    family: Family
    a: float
    t_f: float
    f: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)
    f_prime: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        a, t_f = float(self.a), float(self.t_f)
        if not (math.isfinite(a) and a > 0):
            raise ParameterError(f"contraction parameter a must be > 0, got {self.a!r}")
        if not (math.isfinite(t_f) and t_f > 0):
            raise ParameterError(f"reference duration t_f must be > 0, got {self.t_f!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "t_f", t_f)
        if self.family is Family.CUSTOM and (self.f is None or self.f_prime is None):
            raise ParameterError("custom rescaling family needs both f and f_prime callables")

    @classmethod
    def custom(cls, f, f_prime, t_f: float, a: float = 1.0) -> "RescalingSpec":
        """Wrap user callables; ``a`` is only used as the initial guess for the duration."""
        return cls(Family.CUSTOM, a, t_f, f=f, f_prime=f_prime)

    @property
    def scale(self) -> float:
        return max(1.0, self.t_f)

    @cached_property
    def duration(self) -> float:
        """Length of the rescaled protocol, f^-1(t_f)."""
        if self.family is not Family.CUSTOM:
            return self.t_f / self.a
        hi = self.t_f / self.a
        for _ in range(_MAX_ITER):
            if float(eval_f(self, hi)) >= self.t_f:
                break
            hi *= 2.0
        else:
            raise NumericalError("custom rescaling function never reaches t_f")
        return _solve(self, self.t_f, 0.0, hi, DEFAULT_INVERSE_TOL)


def eval_f(spec: RescalingSpec, tau):
    """Rescaled time ``f(tau)``; accepts scalars or arrays.

    Outside ``[0, t_f/a]`` the same formula is extrapolated.
    """
    tau = np.asarray(tau, dtype=float)
    a, t_f = spec.a, spec.t_f
    if spec.family is Family.SINUSOIDAL:
        k = 2.0 * np.pi * a / t_f
        out = a * tau - (a - 1.0) / k * np.sin(k * tau)
    elif spec.family is Family.POLYNOMIAL:
        c3 = 2.0 * (a * a - a**3) / t_f**2
        c2 = 3.0 * (a * a - a) / t_f
        out = ((c3 * tau + c2) * tau + 1.0) * tau
    else:
        out = np.asarray(spec.f(tau), dtype=float)
    return out if out.ndim else float(out)


def eval_f_prime(spec: RescalingSpec, tau):
    """Rate ``f'(tau)``; accepts scalars or arrays."""
    tau = np.asarray(tau, dtype=float)
    a, t_f = spec.a, spec.t_f
    if spec.family is Family.SINUSOIDAL:
        out = a - (a - 1.0) * np.cos(2.0 * np.pi * a * tau / t_f)
    elif spec.family is Family.POLYNOMIAL:
        u = a * tau / t_f
        out = 1.0 + 6.0 * (a - 1.0) * u * (1.0 - u)
    else:
        out = np.asarray(spec.f_prime(tau), dtype=float)
    return out if out.ndim else float(out)


def _solve(spec: RescalingSpec, t: float, lo: float, hi: float, tol: float) -> float:
    # Newton on f(tau) - t, falling back to bisection whenever the step leaves
    # the bracket or the slope vanishes (sinusoidal a = 1/2 has f' = 0 mid-way).
    target = tol * spec.scale
    f_lo = float(eval_f(spec, lo)) - t
    f_hi = float(eval_f(spec, hi)) - t
    if abs(f_lo) <= target:
        return lo
    if abs(f_hi) <= target:
        return hi
    if f_lo > 0 or f_hi < 0:
        raise NumericalError(
            f"f(tau) - {t} does not change sign on [{lo}, {hi}]", residual=min(abs(f_lo), abs(f_hi))
        )
    x = min(max(t / spec.a, lo), hi)
    resid = float(eval_f(spec, x)) - t
    for _ in range(_MAX_ITER):
        if abs(resid) <= target:
            return x
        if resid < 0:
            lo = x
        else:
            hi = x
        slope = float(eval_f_prime(spec, x))
        x_new = x - resid / slope if slope > 0 else math.nan
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
        resid = float(eval_f(spec, x)) - t
    if abs(resid) <= target:
        return x
    raise NumericalError(f"inverse of f did not converge for t={t}", residual=abs(resid))


def invert_f(spec: RescalingSpec, t: float, tol: float = DEFAULT_INVERSE_TOL) -> float:
    """Return tau with ``|f(tau) - t| <= tol * max(1, t_f)``.

    Requires ``0 <= t <= t_f``. The search is bracketed on ``[0, duration]``,
    which is valid because f increases monotonically there.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    t = float(t)
    if not (0.0 <= t <= spec.t_f):
        raise ParameterError(f"t={t} outside the reference interval [0, {spec.t_f}]")
    if t == 0.0 and float(eval_f(spec, 0.0)) == 0.0:
        return 0.0
    return _solve(spec, t, 0.0, spec.duration, tol)


@dataclass(frozen=True)
class StaValidationReport:
    """Outcome of the four shortcut-to-adiabaticity requirements.

    initial_time_ok : f^-1(0) = 0
    faster_ok       : f^-1(t_f) < t_f
    initial_rate_ok : f'(0) = 1, so the rescaled Hamiltonian starts on H(0)
    final_rate_ok   : f'(f^-1(t_f)) = 1, so it ends on H(t_f)
    """

    initial_time_ok: bool
    faster_ok: bool
    initial_rate_ok: bool
    final_rate_ok: bool
    tolerance: float
    duration: float = math.nan

    @property
    def passed(self) -> bool:
        return self.initial_time_ok and self.faster_ok and self.initial_rate_ok and self.final_rate_ok

    def failures(self) -> list[str]:
        names = ("initial_time_ok", "faster_ok", "initial_rate_ok", "final_rate_ok")
        return [n for n in names if not getattr(self, n)]

    def to_text(self) -> str:
        lines = []
        for name in ("initial_time_ok", "faster_ok", "initial_rate_ok", "final_rate_ok"):
            lines.append(f"{name:16s} {'ok' if getattr(self, name) else 'FAIL'}")
        lines.append(f"duration         {self.duration:.17g}")
        lines.append(f"tolerance        {self.tolerance:.3g}")
        lines.append("PASS" if self.passed else "FAIL " + ",".join(self.failures()))
        return "\n".join(lines)


def validate_sta(spec: RescalingSpec, tol: float = 1e-10) -> StaValidationReport:
    """Check the STA requirements numerically for any family."""
    if tol <= 0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    scale = spec.scale
    tau_end = invert_f(spec, spec.t_f, tol=min(tol, DEFAULT_INVERSE_TOL))
    return StaValidationReport(
        initial_time_ok=abs(float(eval_f(spec, 0.0))) <= tol * scale,
        faster_ok=tau_end < spec.t_f - tol * scale,
        initial_rate_ok=abs(float(eval_f_prime(spec, 0.0)) - 1.0) <= tol,
        final_rate_ok=abs(float(eval_f_prime(spec, tau_end)) - 1.0) <= tol,
        tolerance=tol,
        duration=tau_end,
    )
