"""Command-line front end.

Parses a small INI-style config (sections ``[scenario]``, ``[params]``,
``[sweep]``, ``[output]``), executes the named scenario over an optional
one-dimensional parameter grid, and writes the observables as CSV or JSON.
Output is deterministic: re-running the same config gives byte-identical
files, regardless of the thread count used for the sweep.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .errors import (
    ConvergenceError,
    DimensionError,
    IoError,
    ParseError,
    ScheduleOverlapError,
    StrobocatError,
    TruncationError,
    ValidationError,
)
from .evolve import DensityMatrix, bath_from_system, lindblad_evolve
from .fock import FockSpace, StateVector, coherent_state, ladder_ops, required_truncation
from .protocols import (
    amplify_finite,
    amplify_ideal,
    coherence_probe,
    detect_spectroscopy,
    mrfm_amplitude,
    saturation,
    two_mode_cat,
)
from .spinboson import SystemParams

SCENARIOS = (
    "amplify-ideal", "amplify-finite", "sweep-fidelity", "detect",
    "sweep-detect", "cohere", "lindblad", "two-mode", "mrfm", "saturation",
)
SWEEP_VARIABLES = ("eps_perp", "eps_d", "eps_z", "n_pulses", "lambda0")
DURATION_CONVENTIONS = ("calibrated-pi-over-epsd", "paper-pi-over-omegad")

# sweep variables that make sense per scenario; everything else is rejected
# up front so a bad config never starts computing
_SWEEPABLE = {
    "amplify-ideal": ("n_pulses", "lambda0"),
    "amplify-finite": ("n_pulses", "lambda0", "eps_perp"),
    "sweep-fidelity": ("eps_perp",),
    "detect": ("eps_d", "eps_z", "n_pulses", "lambda0"),
    "sweep-detect": ("eps_d",),
    "cohere": ("n_pulses", "lambda0"),
    "lindblad": (),
    "two-mode": ("n_pulses",),
    "mrfm": ("n_pulses",),
    "saturation": (),
}

# first CSV column when the run has no sweep grid
_INDEX_NAME = {
    "amplify-ideal": "n_pulses",
    "amplify-finite": "n_pulses",
    "sweep-fidelity": "eps_perp",
    "detect": "eps_d",
    "sweep-detect": "eps_d",
    "cohere": "n_pulses",
    "lindblad": "time",
    "two-mode": "n_pulses",
    "mrfm": "n_pulses",
    "saturation": "q_factor",
}

_DEGENERATE_ONLY = ("amplify-ideal", "amplify-finite", "sweep-fidelity",
                    "cohere", "two-mode")

_PARAM_KEYS = ("omega0", "lambda0", "eps_z", "eps_d", "omega_d", "q_factor",
               "temperature", "n_trunc")


@dataclass
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float

    def values(self) -> list[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + k * self.step for k in range(count)]


@dataclass
class OutputSpec:
    path: str | None = None
    format: str = "csv"


@dataclass
class RunConfig:
    scenario: str
    params: SystemParams
    sweep: SweepSpec | None
    output: OutputSpec
    duration_convention: str
    args: dict


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[dict]
    metadata: dict


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _split_lines(text: str) -> dict[str, dict[str, str]]:
    """Syntactic pass: sections of key = value pairs, with positions."""
    sections: dict[str, dict[str, str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith(("#", ";")):
            continue
        indent = len(raw) - len(raw.lstrip())
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError("unterminated section header", lineno,
                                 indent + len(stripped))
            name = stripped[1:-1].strip()
            if not name:
                raise ParseError("empty section name", lineno, indent + 1)
            if name not in ("scenario", "params", "sweep", "output"):
                raise ValidationError(f"unknown section '{name}'", field=name)
            if name in sections:
                raise ParseError(f"duplicate section '{name}'", lineno,
                                 indent + 1)
            sections[name] = {}
            current = name
            continue
        if current is None:
            raise ParseError("key outside any section", lineno, indent + 1)
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", lineno, indent + 1)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        eq_col = raw.index("=") + 1
        if not key:
            raise ParseError("empty key", lineno, eq_col)
        if not value:
            raise ParseError("empty value", lineno, eq_col + 1)
        if key in sections[current]:
            raise ParseError(f"duplicate key '{key}'", lineno, indent + 1)
        sections[current][key] = value
    return sections


def _as_float(section, key, value):
    try:
        return float(value)
    except ValueError:
        raise ValidationError(f"not a number: '{value}'",
                              field=f"{section}.{key}") from None


def _as_int(section, key, value):
    try:
        return int(value)
    except ValueError:
        raise ValidationError(f"not an integer: '{value}'",
                              field=f"{section}.{key}") from None


def _as_bool(section, key, value):
    low = value.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValidationError(f"not a boolean: '{value}'", field=f"{section}.{key}")


# scenario-section keys (beyond name/duration_convention) with defaults
_SCENARIO_KEYS = {
    "amplify-ideal": {"n": 12},
    "amplify-finite": {"n": 12, "eps_perp": 60.0, "shape": "hann"},
    "sweep-fidelity": {"n": [4, 8, 12], "shape": "hann"},
    "detect": {"n": 12},
    "sweep-detect": {"n": 12},
    "cohere": {"n": 12, "coherent_input": True},
    "lindblad": {"n": 12, "duration": 50.0, "samples": 25},
    "two-mode": {"n": 12, "lambda01": 0.2, "lambda02": 0.2},
    "mrfm": {"n": 12, "m": 1},
    "saturation": {},
}

_DEFAULT_SWEEP = {
    "sweep-fidelity": SweepSpec("eps_perp", 10.0, 120.0, 10.0),
    "sweep-detect": SweepSpec("eps_d", 0.5, 10.5, 0.25),
}


def _parse_scenario_arg(scenario, key, value):
    field = f"scenario.{key}"
    if key == "n":
        parts = [p.strip() for p in value.split(",")]
        ns = [_as_int("scenario", "n", p) for p in parts]
        if any(k < 0 for k in ns):
            raise ValidationError("pulse count must be >= 0", field=field)
        if scenario == "sweep-fidelity":
            return ns
        if len(ns) != 1:
            raise ValidationError(
                "a pulse-count list is only valid for sweep-fidelity",
                field=field)
        return ns[0]
    if key in ("eps_perp", "lambda01", "lambda02", "duration"):
        v = _as_float("scenario", key, value)
        if key == "eps_perp" and v <= 0:
            raise ValidationError("must be > 0", field=field)
        if key == "duration" and v <= 0:
            raise ValidationError("must be > 0", field=field)
        if key.startswith("lambda") and v < 0:
            raise ValidationError("must be >= 0", field=field)
        return v
    if key in ("m", "samples"):
        v = _as_int("scenario", key, value)
        if v < 1:
            raise ValidationError("must be >= 1", field=field)
        return v
    if key == "shape":
        if value not in ("hann", "rect"):
            raise ValidationError(f"unknown pulse shape '{value}'", field=field)
        return value
    if key == "coherent_input":
        return _as_bool("scenario", key, value)
    raise ValidationError(f"unknown key '{key}'", field=field)


def _alpha_budget(scenario, args, params: SystemParams,
                  sweep: SweepSpec | None) -> float:
    """Largest coherent amplitude any grid point will ask the space to hold."""
    n_max = float(np.max(args["n"])) if "n" in args else 0.0
    lam = params.lambda0
    if sweep is not None and sweep.variable == "n_pulses":
        n_max = max(n_max, sweep.stop)
    if sweep is not None and sweep.variable == "lambda0":
        lam = max(lam, sweep.stop)
    alpha0 = lam / (2.0 * params.omega0)
    if scenario in ("amplify-ideal", "amplify-finite", "sweep-fidelity",
                    "detect", "sweep-detect", "lindblad"):
        return 2.0 * n_max * alpha0
    if scenario == "cohere":
        return 4.0 * n_max * alpha0
    if scenario == "two-mode":
        return n_max * max(args["lambda01"], args["lambda02"]) / params.omega0
    return 0.0


def parse_config(text: str) -> RunConfig:
    sections = _split_lines(text)

    scen_sec = dict(sections.get("scenario", {}))
    name = scen_sec.pop("name", None)
    if name is None:
        raise ValidationError("missing scenario name", field="scenario.name")
    if name not in SCENARIOS:
        raise ValidationError(f"unknown scenario '{name}'",
                              field="scenario.name")

    convention = scen_sec.pop("duration_convention",
                              "calibrated-pi-over-epsd")
    if convention not in DURATION_CONVENTIONS:
        raise ValidationError(
            f"unknown duration convention '{convention}'",
            field="scenario.duration_convention")

    args = dict(_SCENARIO_KEYS[name])
    for key, value in scen_sec.items():
        if key not in args:
            raise ValidationError(f"unknown key '{key}'",
                                  field=f"scenario.{key}")
        args[key] = _parse_scenario_arg(name, key, value)

    raw_params = sections.get("params", {})
    fields = {}
    for key, value in raw_params.items():
        if key not in _PARAM_KEYS:
            raise ValidationError(f"unknown key '{key}'",
                                  field=f"params.{key}")
        fields[key] = (_as_int("params", key, value) if key == "n_trunc"
                       else _as_float("params", key, value))
    if fields.get("omega0", 1.0) <= 0:
        raise ValidationError("must be > 0", field="params.omega0")
    if fields.get("lambda0", 0.0) < 0:
        raise ValidationError("must be >= 0", field="params.lambda0")
    if fields.get("q_factor", 1.0) <= 0:
        raise ValidationError("must be > 0", field="params.q_factor")
    if fields.get("temperature", 0.0) < 0:
        raise ValidationError("must be >= 0", field="params.temperature")

    sweep = None
    if "sweep" in sections:
        raw = sections["sweep"]
        for key in ("variable", "start", "stop", "step"):
            if key not in raw:
                raise ValidationError("missing", field=f"sweep.{key}")
        for key in raw:
            if key not in ("variable", "start", "stop", "step"):
                raise ValidationError(f"unknown key '{key}'",
                                      field=f"sweep.{key}")
        var = raw["variable"]
        if var not in SWEEP_VARIABLES:
            raise ValidationError(f"unknown sweep variable '{var}'",
                                  field="sweep.variable")
        start = _as_float("sweep", "start", raw["start"])
        stop = _as_float("sweep", "stop", raw["stop"])
        step = _as_float("sweep", "step", raw["step"])
        if step <= 0:
            raise ValidationError("step must be > 0", field="sweep.step")
        if start > stop:
            raise ValidationError("start must be <= stop", field="sweep.start")
        if var == "n_pulses":
            for key, v in (("start", start), ("stop", stop), ("step", step)):
                if abs(v - round(v)) > 1e-9:
                    raise ValidationError(
                        "n_pulses grids must be whole numbers",
                        field=f"sweep.{key}")
        sweep = SweepSpec(var, start, stop, step)
    elif name in _DEFAULT_SWEEP:
        sweep = replace(_DEFAULT_SWEEP[name])

    if sweep is not None and sweep.variable not in _SWEEPABLE[name]:
        raise ValidationError(
            f"sweep variable '{sweep.variable}' not supported for "
            f"scenario '{name}'", field="sweep.variable")

    output = OutputSpec()
    if "output" in sections:
        raw = sections["output"]
        for key in raw:
            if key not in ("path", "format"):
                raise ValidationError(f"unknown key '{key}'",
                                      field=f"output.{key}")
        if "format" in raw:
            if raw["format"] not in ("csv", "json"):
                raise ValidationError(
                    f"unknown format '{raw['format']}'", field="output.format")
            output.format = raw["format"]
        if "path" in raw:
            output.path = raw["path"]

    explicit_trunc = fields.pop("n_trunc", None)
    if explicit_trunc is not None and explicit_trunc < 2:
        raise ValidationError("must be >= 2", field="params.n_trunc")
    params = SystemParams(**fields,
                          n_trunc=explicit_trunc if explicit_trunc else 64)

    if name in _DEGENERATE_ONLY and params.eps_z != 0.0:
        raise ValidationError(
            f"scenario '{name}' requires the degenerate working point "
            "eps_z = 0", field="params.eps_z")

    if explicit_trunc is None:
        budget = _alpha_budget(name, args, params, sweep)
        params = replace(params,
                         n_trunc=max(64, required_truncation(budget)))

    return RunConfig(scenario=name, params=params, sweep=sweep, output=output,
                     duration_convention=convention, args=args)


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

def _degenerate(params: SystemParams) -> SystemParams:
    return replace(params, eps_z=0.0, eps_d=0.0, omega_d=0.0)


def _observe(config: RunConfig, params: SystemParams, args: dict) -> dict:
    scenario = config.scenario
    if scenario == "amplify-ideal":
        r = amplify_ideal(args["n"], params)
        return {"fidelity_vs_ideal": r.fidelity_vs_ideal,
                "amplitude_up": r.conditional_amplitudes[0].real,
                "amplitude_down": r.conditional_amplitudes[1].real}
    if scenario == "amplify-finite":
        r = amplify_finite(args["n"], args["eps_perp"], params,
                           shape=args["shape"])
        return {"fidelity_vs_ideal": r.fidelity_vs_ideal,
                "amplitude_up": r.conditional_amplitudes[0].real,
                "amplitude_down": r.conditional_amplitudes[1].real}
    if scenario == "sweep-fidelity":
        out = {}
        for k in args["n"]:
            r = amplify_finite(k, args["eps_perp"], params,
                               shape=args["shape"])
            out[f"fidelity_n{k}"] = r.fidelity_vs_ideal
        return out
    if scenario in ("detect", "sweep-detect"):
        cat = amplify_ideal(args["n"], _degenerate(params)).final_state
        r = detect_spectroscopy(cat, params, args["n"],
                                duration_convention=config.duration_convention)
        return {"p_plus": r.p_plus, "p_minus": r.p_minus,
                "analytic_p_plus": r.analytic_p_plus,
                "analytic_p_minus": r.analytic_p_minus}
    if scenario == "cohere":
        cat = amplify_ideal(args["n"], params).final_state
        r = coherence_probe(cat, params, args["n"],
                            coherent_input=args["coherent_input"])
        return {"p_plus": r.p_plus, "p_minus": r.p_minus,
                "analytic_p_plus": r.analytic_p_plus,
                "analytic_p_minus": r.analytic_p_minus}
    if scenario == "two-mode":
        r = two_mode_cat(args["n"], args["lambda01"], args["lambda02"], params)
        rho1 = r.post_plus @ r.post_plus.conj().T
        evals = np.linalg.eigvalsh(rho1)
        entropy = float(-sum(p * math.log(p) for p in evals if p > 1e-14))
        return {"p_plus": r.p_plus, "p_minus": r.p_minus,
                "amplitude1_up": r.amplitudes_up[0].real,
                "amplitude2_up": r.amplitudes_up[1].real,
                "entropy_mode1_plus": entropy}
    if scenario == "mrfm":
        fig = mrfm_amplitude(args["n"], args["m"], params)
        return {"amplitude": fig.amplitude, "resolution": fig.resolution,
                "q_threshold": fig.q_threshold,
                "resolvable": 1.0 if fig.resolvable else 0.0}
    if scenario == "saturation":
        model, simulated = saturation(params)
        return {"n_s_analytic": model.n_s, "n_s_simulated": simulated}
    raise ValidationError(f"unrunnable scenario '{scenario}'",
                          field="scenario.name")


def _lindblad_rows(config: RunConfig) -> list[dict]:
    params, args = config.params, config.args
    beta = 2.0 * args["n"] * params.alpha0
    space = FockSpace(params.n_trunc)
    up = coherent_state(-beta, space).amplitudes
    dn = coherent_state(+beta, space).amplitudes
    cat = StateVector.normalized(up + dn)
    number = ladder_ops(space)[2]
    h = replace(number, entries=params.omega0 * number.entries)
    bath = bath_from_system(params)
    res = lindblad_evolve(h, DensityMatrix.from_state(cat), bath,
                          args["duration"], n_samples=args["samples"])

    def row(t, rho):
        beta_t = beta * math.exp(-0.5 * bath.gamma * t) * np.exp(
            -1j * params.omega0 * t)
        left = coherent_state(-beta_t, space).amplitudes
        right = coherent_state(beta_t, space).amplitudes
        coherence = abs(np.vdot(left, rho @ right))
        purity = float(np.real(np.trace(rho @ rho)))
        return {"time": float(t), "coherence_abs": float(coherence),
                "purity": purity}

    rho0 = np.outer(cat.amplitudes, cat.amplitudes.conj())
    rows = [row(0.0, rho0)]
    rows.extend(row(t, s) for t, s in zip(res.times, res.samples))
    return rows


def _bind(config: RunConfig, value):
    params, args = config.params, dict(config.args)
    var = config.sweep.variable
    if var == "n_pulses":
        args["n"] = int(round(value))
    elif var == "eps_perp":
        args["eps_perp"] = float(value)
    else:
        params = replace(params, **{var: float(value)})
    return params, args


def _annotate(err: StrobocatError, label: str) -> StrobocatError:
    if isinstance(err, ValidationError):
        return ValidationError(f"at {label}: {err}", field=err.field)
    return type(err)(f"at {label}: {err}")


def run(config: RunConfig, threads: int = 1) -> SweepResult:
    """Execute every grid point, emit the output file, return the table."""
    scenario = config.scenario
    index_name = config.sweep.variable if config.sweep else \
        _INDEX_NAME[scenario]

    if scenario == "lindblad":
        rows = _lindblad_rows(config)
    else:
        if config.sweep is not None:
            values = config.sweep.values()
        elif scenario == "detect":
            values = [config.params.eps_d]
        elif scenario == "saturation":
            values = [config.params.q_factor]
        else:
            values = [config.args["n"]]

        def job(value):
            if config.sweep is not None:
                params, args = _bind(config, value)
            else:
                params, args = config.params, config.args
            try:
                obs = _observe(config, params, args)
            except StrobocatError as err:
                raise _annotate(err, f"{index_name}={_csv_token(value)}") \
                    from err
            out = {index_name: value}
            out.update(obs)
            return out

        if threads > 1 and len(values) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(job, values))
        else:
            rows = [job(v) for v in values]

    columns = list(rows[0].keys())
    metadata = {
        "version": __version__,
        "scenario": scenario,
        "duration_convention": config.duration_convention,
        "params": {key: getattr(config.params, key)
                   for key in _PARAM_KEYS},
        "scenario_args": dict(config.args),
        "sweep": None if config.sweep is None else {
            "variable": config.sweep.variable, "start": config.sweep.start,
            "stop": config.sweep.stop, "step": config.sweep.step},
        "output_format": config.output.format,
    }
    result = SweepResult(columns=columns, rows=rows, metadata=metadata)

    if config.output.path is None:
        config.output.path = f"{scenario}.{config.output.format}"
    emit(result, config.output.format, config.output.path)
    return result


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _csv_token(value) -> str:
    if isinstance(value, int):
        return str(value)
    return "%.12g" % value


def _json_value(value):
    if isinstance(value, int):
        return value
    return float("%.12g" % value)


def emit(result: SweepResult, format: str, path: str) -> None:
    if format == "csv":
        lines = [",".join(result.columns)]
        for row in result.rows:
            lines.append(",".join(_csv_token(row[c]) for c in result.columns))
        payload = "\n".join(lines) + "\n"
    elif format == "json":
        doc = {"metadata": result.metadata,
               "rows": [{c: _json_value(row[c]) for c in result.columns}
                        for row in result.rows]}
        payload = json.dumps(doc, indent=2) + "\n"
    else:
        raise ValidationError(f"unknown format '{format}'",
                              field="output.format")
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(payload)
    except OSError as err:
        raise IoError(f"cannot write '{path}': {err}") from err


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _thread_budget(cli_value) -> int:
    if cli_value is not None:
        n = cli_value
    else:
        env = os.environ.get("STROBOCAT_THREADS")
        if env is None:
            return 1
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(f"not an integer: '{env}'",
                                  field="STROBOCAT_THREADS") from None
    if n < 1:
        raise ValidationError("thread count must be >= 1", field="threads")
    return n


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="strobocat",
        description="stroboscopic qubit-oscillator cat amplification runs")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario")
    p_run.add_argument("--config", required=True, help="config file path")
    p_run.add_argument("--out", help="output file (default <scenario>.<fmt>)")
    p_run.add_argument("--format", choices=("csv", "json"),
                       help="override [output] format")
    p_run.add_argument("--threads", type=int,
                       help="grid parallelism (or STROBOCAT_THREADS)")
    p_val = sub.add_parser("validate", help="check a config and exit")
    p_val.add_argument("--config", required=True, help="config file path")
    args = parser.parse_args(argv)

    try:
        try:
            text = open(args.config, "r", encoding="utf-8").read()
        except OSError as err:
            raise IoError(f"cannot read '{args.config}': {err}") from err
        config = parse_config(text)
        if args.command == "validate":
            points = len(config.sweep.values()) if config.sweep else 1
            print(f"ok: scenario={config.scenario} grid={points} "
                  f"n_trunc={config.params.n_trunc}")
            return 0
        if args.format:
            config.output.format = args.format
        if args.out:
            config.output.path = args.out
        result = run(config, threads=_thread_budget(args.threads))
        print(f"{config.output.path}: {len(result.rows)} rows")
        return 0
    except (ParseError, ValidationError, IoError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (ConvergenceError, TruncationError, DimensionError,
            ScheduleOverlapError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
