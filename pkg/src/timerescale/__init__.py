"""Time-rescaled Hamiltonian dynamics as a shortcut to adiabaticity.

Build a reference Hamiltonian schedule, rescale it with ``time_rescale`` and
propagate both; the rescaled protocol reaches the same evolution operator
in ``t_f / a``.
"""

from .errors import (
    ConfigError,
    ContractError,
    NumericalError,
    ParameterError,
    ScheduleError,
    TimeRescaleError,
    UndefinedPhaseError,
)
from .metrics import (
    ProtocolReport,
    energy_uncertainty,
    fidelity,
    instantaneous_populations,
    mt_product,
    operator_integral,
    peak_drive_norm,
    relative_phase,
)
from .models import (
    HamiltonianSchedule,
    OscillatorParams,
    SpinParams,
    compression_frequency,
    constant_field,
    fock_operators,
    oscillator_schedule,
    rotating_field,
    spin_schedule,
    time_rescale,
    tr_frequency,
    tr_transport_function,
    transport_function,
    transport_schedule,
)
from .propagate import PropagationResult, converge, propagate_commuting, propagate_ordered
from .rescale import Family, RescalingSpec, StaValidationReport, eval_f, eval_f_prime, invert_f, validate_sta
from .schedules import (
    WaveformTable,
    emit_spin_field_table,
    emit_tr_field_table,
    emit_tr_frequency_table,
    emit_tr_transport_table,
    emit_transport_frequency_table,
)

__version__ = "0.1.0"
