"""Tabulated control waveforms of rescaled protocols, written as CSV.

CSV layout::

    # scenario=oscillator_field, a=2, t_f=1, family=sin, B0=1
    tau,value
    0,1
    ...

Floats use 17 significant digits, so a table read back with
:meth:`WaveformTable.from_csv` is bit-identical to the one written.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .models import compression_frequency, transport_function, tr_frequency, tr_transport_function
from .rescale import RescalingSpec, eval_f_prime

__all__ = [
    "WaveformTable",
    "emit_tr_frequency_table",
    "emit_tr_field_table",
    "emit_tr_transport_table",
    "emit_transport_frequency_table",
    "emit_spin_field_table",
    "reference_values",
]

_HEAD_KEYS = ("scenario", "a", "t_f", "family")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass
class WaveformTable:
    tau: np.ndarray
    value: np.ndarray
    metadata: dict = field(default_factory=dict)
    columns: tuple[str, str] = ("tau", "value")

    def __len__(self) -> int:
        return len(self.tau)

    def to_csv(self, path: str | Path | None = None) -> str:
        keys = [k for k in _HEAD_KEYS if k in self.metadata]
        keys += [k for k in self.metadata if k not in _HEAD_KEYS]
        lines = ["# " + ", ".join(f"{k}={_fmt(self.metadata[k])}" for k in keys)]
        lines.append(",".join(self.columns))
        lines += [f"{format(t, '.17g')},{format(v, '.17g')}" for t, v in zip(self.tau, self.value)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source: str | Path) -> "WaveformTable":
        """Parse a table from a path or from CSV text."""
        text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else source
        meta: dict = {}
        rows = []
        columns = ("tau", "value")
        for line in io.StringIO(text):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for item in line[1:].split(","):
                    if "=" in item:
                        k, v = item.split("=", 1)
                        meta[k.strip()] = _parse_meta(v.strip())
            elif line[0].isalpha():
                columns = tuple(line.split(","))
            else:
                rows.append([float(x) for x in line.split(",")])
        arr = np.array(rows, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], meta, columns)


def _parse_meta(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def _grid(spec: RescalingSpec, n_rows: int) -> np.ndarray:
    if int(n_rows) < 2:
        raise ParameterError(f"n_rows must be >= 2, got {n_rows}")
    tau = np.linspace(0.0, spec.duration, int(n_rows))
    tau[-1] = spec.duration
    return tau


def _meta(scenario: str, spec: RescalingSpec, **extra) -> dict:
    return {"scenario": scenario, "a": spec.a, "t_f": spec.t_f, "family": spec.family.value, **extra}


def emit_tr_frequency_table(omega0: float, omegaf: float, spec: RescalingSpec, n_rows: int = 501) -> WaveformTable:
    """Rescaled trap frequency of the compression stroke; ends on omega0 and omegaf."""
    if omega0 <= 0 or omegaf <= 0:
        raise ParameterError("trap frequencies must be > 0")
    tau = _grid(spec, n_rows)
    value = np.asarray(tr_frequency(omega0, omegaf, spec, tau), dtype=float)
    return WaveformTable(tau, value, _meta("oscillator_frequency", spec, omega0=omega0, omegaf=omegaf))


def emit_tr_field_table(B0: float, spec: RescalingSpec, n_rows: int = 501) -> WaveformTable:
    """Magnetic field ``B0 sqrt(f'(tau))`` that rescales the kinetic term.

    Independent of the trap schedule; ``B0`` is the constant reference field.
    """
    if B0 <= 0:
        raise ParameterError("B0 must be > 0")
    tau = _grid(spec, n_rows)
    value = B0 * np.sqrt(np.asarray(eval_f_prime(spec, tau), dtype=float))
    return WaveformTable(tau, value, _meta("oscillator_field", spec, B0=B0))


def emit_tr_transport_table(d: float, spec: RescalingSpec, n_rows: int = 501) -> WaveformTable:
    """Rescaled trap position ``x0(f(tau))``; runs from 0 to d."""
    tau = _grid(spec, n_rows)
    value = np.asarray(tr_transport_function(d, spec, tau), dtype=float)
    return WaveformTable(tau, value, _meta("transport_position", spec, d=d))


def emit_transport_frequency_table(omega: float, spec: RescalingSpec, n_rows: int = 501) -> WaveformTable:
    """Rescaled frequency ``sqrt(f'(tau)) omega`` of the transported trap."""
    if omega <= 0:
        raise ParameterError("omega must be > 0")
    tau = _grid(spec, n_rows)
    value = omega * np.sqrt(np.asarray(eval_f_prime(spec, tau), dtype=float))
    return WaveformTable(tau, value, _meta("transport_frequency", spec, omega=omega))


def emit_spin_field_table(B0: float, spec: RescalingSpec, n_rows: int = 501) -> WaveformTable:
    """Spin drive magnitude ``B0 f'(tau)``; scales linearly with f', unlike the oscillator field."""
    if B0 <= 0:
        raise ParameterError("B0 must be > 0")
    tau = _grid(spec, n_rows)
    value = B0 * np.asarray(eval_f_prime(spec, tau), dtype=float)
    return WaveformTable(tau, value, _meta("spin_field", spec, B0=B0))


def reference_values(table: WaveformTable) -> tuple[float, float]:
    """Reference protocol's start and end value for the quantity in ``table``."""
    m = table.metadata
    scenario = m.get("scenario")
    if scenario == "oscillator_frequency":
        return m["omega0"], compression_frequency(m["omega0"], m["omegaf"], m["t_f"], m["t_f"])
    if scenario in ("oscillator_field", "spin_field"):
        return m["B0"], m["B0"]
    if scenario == "transport_position":
        return 0.0, transport_function(m["d"], m["t_f"], m["t_f"])
    if scenario == "transport_frequency":
        return m["omega"], m["omega"]
    raise ParameterError(f"no reference endpoints known for scenario {scenario!r}")
