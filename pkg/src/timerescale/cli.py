"""Command-line runner: ``tr-sta validate | run | sweep | schedules``.

Scenario files are INI-style with optional sections; keys are the field
names of :class:`~timerescale.scenarios.ScenarioConfig`::

    [scenario]
    scenario = SpinFlipConstantZ

    [rescaling]
    family = sin
    a = 2
    t_f = pi

    [solver]
    n_steps = 10000

Numeric values may be simple expressions of ``pi`` (``pi/2``, ``4*pi``).
The output directory can be overridden with ``TR_STA_OUTPUT_DIR``.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import dataclasses
import json
import logging
import math
import operator
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError, TimeRescaleError, UndefinedPhaseError
from .metrics import (
    ProtocolReport,
    endpoint_mismatch,
    energy_uncertainty,
    fidelity,
    integral_mismatch,
    mt_product,
    peak_drive_norm,
    relative_phase,
)
from .models import HamiltonianSchedule, time_rescale
from .propagate import PropagationResult, converge, max_abs_diff, propagate_commuting, propagate_ordered
from .rescale import RescalingSpec, StaValidationReport, validate_sta
from .scenarios import ScenarioConfig, build_scenario, waveform_tables

log = logging.getLogger("timerescale")

OUTPUT_ENV = "TR_STA_OUTPUT_DIR"

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_number(text: str) -> float:
    """Evaluate a numeric literal or an arithmetic expression in ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(text)

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse numeric value {text!r}") from None


def _field_types() -> dict[str, str]:
    return {f.name: str(f.type) for f in dataclasses.fields(ScenarioConfig)}


def config_from_mapping(values: dict[str, str]) -> ScenarioConfig:
    types = _field_types()
    kwargs = {}
    for key, raw in values.items():
        key = key.strip()
        if key not in types:
            raise ConfigError(f"unknown configuration key {key!r}")
        typ, raw = types[key], str(raw).strip()
        if typ in ("Scenario", "Family", "str"):
            kwargs[key] = raw
        elif raw.lower() in ("", "none"):
            kwargs[key] = None
        elif "int" in typ:
            value = _eval_number(raw)
            if float(value) != int(value):
                raise ConfigError(f"{key} must be an integer, got {raw!r}")
            kwargs[key] = int(value)
        else:
            kwargs[key] = float(_eval_number(raw))
    try:
        return ScenarioConfig(**kwargs)
    except TimeRescaleError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a scenario file; sections only group keys and may be omitted."""
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text if text.lstrip().startswith("[") else "[scenario]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    values: dict[str, str] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key in values:
                raise ConfigError(f"{path}: key {key!r} given twice")
            values[key] = value
    cfg = config_from_mapping(values)
    override = os.environ.get(OUTPUT_ENV)
    if override:
        cfg.output_dir = override
    return cfg


# --- running ------------------------------------------------------------------


@dataclass
class ScenarioRun:
    config: ScenarioConfig
    report: ProtocolReport
    reference: PropagationResult
    rescaled: PropagationResult
    validation: StaValidationReport
    checks: dict[str, bool]
    files: list[Path]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _propagate(schedule: HamiltonianSchedule, cfg: ScenarioConfig, initial, hbar) -> PropagationResult:
    if schedule.commuting_family and cfg.n_steps is None and cfg.target_tol is None:
        return propagate_commuting(schedule, cfg.quadrature_points, hbar, initial)
    if cfg.target_tol is not None:
        return converge(
            schedule, cfg.target_tol, cfg.max_steps, hbar, cfg.n_start, cfg.compare_levels, initial, cfg.samples
        )
    n = cfg.n_steps if cfg.n_steps is not None else 1000
    return propagate_ordered(schedule, n, hbar, initial, cfg.samples)


def _complex_list(psi) -> list[dict]:
    return [{"re": float(z.real), "im": float(z.imag)} for z in np.asarray(psi).reshape(-1)]


def _result_summary(res: PropagationResult) -> dict:
    return {
        "steps_used": res.steps_used,
        "unitarity_defect": res.unitarity_defect,
        "achieved_difference": res.achieved_difference,
        "history": [[n, d] for n, d in res.history],
    }


def _trajectory_csv(res: PropagationResult, meta: dict) -> str:
    dim = res.final_unitary.shape[0]
    head = "# " + ", ".join(f"{k}={v}" for k, v in meta.items())
    cols = ["t", "norm"] + [f"{p}_{k}" for k in range(dim) for p in ("re", "im")]
    lines = [head, ",".join(cols)]
    for t, psi in res.trajectory or []:
        vals = [t, float(np.linalg.norm(psi))]
        for z in psi:
            vals += [z.real, z.imag]
        lines.append(",".join(format(float(v), ".17g") for v in vals))
    return "\n".join(lines) + "\n"


def run_scenario(cfg: ScenarioConfig, write: bool = True, output_dir: str | Path | None = None) -> ScenarioRun:
    """Propagate the reference and rescaled protocols and compare them.

    Writes ``report.json``, ``trajectory_ref.csv``, ``trajectory_tr.csv`` and
    the scenario's waveform tables when ``write`` is set.
    """
    spec: RescalingSpec = cfg.rescaling
    built = build_scenario(cfg)
    ref = built.reference
    tr = time_rescale(ref, spec)
    hbar = built.hbar
    validation = validate_sta(spec)

    res_ref = _propagate(ref, cfg, built.initial, hbar)
    res_tr = _propagate(tr, cfg, built.initial, hbar)
    psi_ref, psi_tr = res_ref.final_state, res_tr.final_state
    target = built.target if built.target is not None else psi_ref

    try:
        phase = relative_phase(target, psi_tr)
    except UndefinedPhaseError:
        phase = None
    delta_e = energy_uncertainty(ref(ref.t_start), built.initial)
    report = ProtocolReport(
        fidelity=fidelity(target, psi_tr),
        relative_phase=phase,
        mt_product=mt_product(tr.duration, delta_e),
        mt_product_reference=mt_product(ref.duration, delta_e),
        peak_drive_norm=peak_drive_norm(tr),
        peak_drive_norm_reference=peak_drive_norm(ref),
        integral_mismatch=integral_mismatch(ref, tr, cfg.quadrature_points),
        endpoint_mismatch=endpoint_mismatch(ref, tr),
        operator_mismatch=max_abs_diff(res_ref.final_unitary, res_tr.final_unitary, cfg.compare_levels),
        reference_fidelity=fidelity(target, psi_ref),
        target=built.target_name,
    )
    checks = {
        "fidelity": report.fidelity >= cfg.fidelity_threshold,
        "operator_mismatch": report.operator_mismatch <= cfg.operator_tol,
        "unitarity": max(res_ref.unitarity_defect, res_tr.unitarity_defect) <= cfg.unitarity_tol,
    }
    run = ScenarioRun(cfg, report, res_ref, res_tr, validation, checks, [])
    if write:
        run.files = _write_outputs(run, built, Path(output_dir or cfg.output_dir))
    return run


def _write_outputs(run: ScenarioRun, built, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    cfg = run.config
    payload = {
        "scenario": cfg.scenario.value,
        "config": cfg.as_dict() | {"output_dir": None},
        "sta_validation": dataclasses.asdict(run.validation) | {"passed": run.validation.passed},
        "report": run.report.to_dict(),
        "reference": _result_summary(run.reference),
        "rescaled": _result_summary(run.rescaled),
        "initial_state": _complex_list(built.initial),
        "final_state_reference": _complex_list(run.reference.final_state),
        "final_state_rescaled": _complex_list(run.rescaled.final_state),
        "checks": run.checks,
        "passed": run.passed,
    }
    files = []
    path = out / "report.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    files.append(path)
    meta = {"scenario": cfg.scenario.value, "a": format(cfg.a, ".17g"), "t_f": format(cfg.reference_duration, ".17g"), "family": cfg.family.value}
    for name, res, proto in (("trajectory_ref.csv", run.reference, "reference"), ("trajectory_tr.csv", run.rescaled, "rescaled")):
        path = out / name
        path.write_text(_trajectory_csv(res, meta | {"protocol": proto}))
        files.append(path)
    files += write_waveforms(cfg, out)
    return files


def write_waveforms(cfg: ScenarioConfig, out: Path, n_rows: int = 501) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for stem, table in waveform_tables(cfg, n_rows).items():
        path = out / f"{stem}.csv"
        table.to_csv(path)
        files.append(path)
    return files


SWEEP_COLUMNS = (
    "a",
    "status",
    "fidelity",
    "relative_phase",
    "mt_product",
    "peak_drive_norm",
    "integral_mismatch",
    "endpoint_mismatch",
    "operator_mismatch",
    "error",
)


def sweep(cfg: ScenarioConfig, a_values, write: bool = True) -> list[dict]:
    """One report row per contraction parameter; a failing row does not stop the sweep."""
    a_values = [float(a) for a in a_values]
    if not a_values:
        raise ConfigError("sweep needs at least one value of a")
    base = Path(cfg.output_dir)
    rows = []
    for a in a_values:
        row = {k: "" for k in SWEEP_COLUMNS}
        row["a"] = a
        try:
            run = run_scenario(cfg.with_a(a), write=write, output_dir=base / f"a_{a:g}")
        except (TimeRescaleError, np.linalg.LinAlgError) as exc:
            row.update(status="error", error=f"{type(exc).__name__}: {exc}")
        else:
            rep = run.report
            row.update(
                status="pass" if run.passed else "fail",
                fidelity=rep.fidelity,
                relative_phase=rep.relative_phase if rep.relative_phase is not None else "",
                mt_product=rep.mt_product,
                peak_drive_norm=rep.peak_drive_norm,
                integral_mismatch=rep.integral_mismatch,
                endpoint_mismatch=rep.endpoint_mismatch,
                operator_mismatch=rep.operator_mismatch,
            )
        rows.append(row)
    if write:
        base.mkdir(parents=True, exist_ok=True)
        (base / "sweep.csv").write_text(sweep_csv(rows))
    return rows


def sweep_csv(rows: list[dict]) -> str:
    def cell(v):
        if isinstance(v, float):
            return format(v, ".17g")
        return str(v).replace(",", ";").replace("\n", " ")

    lines = [",".join(SWEEP_COLUMNS)]
    lines += [",".join(cell(r[c]) for c in SWEEP_COLUMNS) for r in rows]
    return "\n".join(lines) + "\n"


# --- argparse -------------------------------------------------------------------


def _cmd_validate(args) -> int:
    spec = RescalingSpec(args.family, _eval_number(args.a), _eval_number(args.tf))
    report = validate_sta(spec, args.tol)
    print(f"family={spec.family.value} a={spec.a:g} t_f={spec.t_f:g}")
    print(report.to_text())
    return 0 if report.passed else 1


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    run = run_scenario(cfg)
    rep = run.report
    print(f"scenario={cfg.scenario.value} a={cfg.a:g} family={cfg.family.value} t_f={cfg.reference_duration:.6g}")
    for name, value in rep.to_dict().items():
        print(f"  {name:26s} {value}")
    for name, ok in run.checks.items():
        print(f"  check {name:20s} {'PASS' if ok else 'FAIL'}")
    print(f"wrote {len(run.files)} files to {cfg.output_dir}")
    return 0 if run.passed else 1


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    a_values = [_eval_number(x) for x in args.a.split(",") if x.strip()]
    rows = sweep(cfg, a_values)
    sys.stdout.write(sweep_csv(rows))
    return 0 if all(r["status"] == "pass" for r in rows) else 1


def _cmd_schedules(args) -> int:
    cfg = load_config(args.config)
    files = write_waveforms(cfg, Path(cfg.output_dir), args.rows)
    for f in files:
        print(f)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tr-sta", description="Time-rescaled shortcuts to adiabaticity.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the STA requirements of a rescaling function")
    p.add_argument("--family", default="sin", choices=["sin", "poly"])
    p.add_argument("--a", required=True)
    p.add_argument("--tf", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="run one scenario and write report.json plus CSVs")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run a scenario for several contraction parameters")
    p.add_argument("--config", required=True)
    p.add_argument("--a", required=True, help="comma separated, e.g. 1,2,4,10")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("schedules", help="write the scenario's waveform tables only")
    p.add_argument("--config", required=True)
    p.add_argument("--rows", type=int, default=501)
    p.set_defaults(func=_cmd_schedules)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        residual = "" if exc.residual is None else f" (residual {exc.residual:.3e})"
        print(f"error: {exc}{residual}", file=sys.stderr)
        return 3
    except TimeRescaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
