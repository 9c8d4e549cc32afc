"""Command-line interface driven by JSON configuration files.

Every subcommand reads one JSON config, writes a CSV data file plus a
``<command>.meta.json`` sidecar into the output directory, and exits 0.
The sidecar embeds the fully resolved configuration, so re-running the
tool on the sidecar itself reproduces the data files byte for byte.

Exit codes: 0 success, 1 computation or data-file failure, 2 config or
parameter validation failure. On failure a machine-readable
``error.json`` is written next to the outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import eigenvalue_sweep, save_eigenvalue_sweep
from .errors import ConfigError, RingqedError, TruncationError, ValidationError
from .helicity import load_field_grid, map_helicity, save_helicity_map
from .model import DriveSpec, SystemParams, save_spectrum, spectrum, transmission
from .optimize import maximize_contrast, save_contour, save_zero_trace, sweep_grid
from .oracle import TruncationSpec, oracle_transmission
from .tableio import finite, write_json, write_table

COMMANDS = ("spectrum", "eigen", "helicity", "optimize", "sweep", "validate")

PARAM_KEYS = (
    "g0",
    "kappa_i",
    "kappa_ex",
    "theta",
    "p",
    "h",
    "gamma",
    "delta12",
    "drive_amp",
)

OPTIMIZE_COLUMNS = (
    "kappa_ex",
    "delta12",
    "delta_c",
    "t_fwd",
    "t_bwd",
    "contrast_db",
    "iterations",
    "converged",
)

VALIDATE_COLUMNS = ("delta_c", "direction", "t_linear", "t_oracle", "rel_dev")


def _load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            "invalid JSON in %s: %s (line %d, column %d)"
            % (path, exc.msg, exc.lineno, exc.colno)
        ) from exc
    if not isinstance(config, dict):
        raise ConfigError("config root must be a JSON object")
    return config


def _apply_overrides(config: dict, assignments) -> None:
    """Apply --set KEY=VALUE pairs, with dotted keys as nested paths."""
    for text in assignments:
        key, sep, raw = text.partition("=")
        if not sep or not key:
            raise ConfigError("--set expects KEY=VALUE, got %r" % text)
        try:
            value = json.loads(raw)
        except ValueError:
            value = raw
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(
                    "--set path %r crosses the non-object entry %r" % (key, part)
                )
        node[parts[-1]] = value


def _check_sections(config: dict, command: str) -> None:
    allowed = {"command", "params", "_meta", command}
    unknown = sorted(k for k in config if k not in allowed)
    if unknown:
        raise ConfigError("unknown config section(s): %s" % ", ".join(unknown))
    declared = config.get("command")
    if declared is not None and declared != command:
        raise ConfigError(
            "config declares command %r but %r was invoked" % (declared, command)
        )
    if command in config and not isinstance(config[command], dict):
        raise ConfigError("section %r must be a JSON object" % command)


def _resolve_params(config: dict, command: str) -> SystemParams:
    raw = config.get("params")
    if raw is None:
        raise ConfigError("config must contain a 'params' section")
    if not isinstance(raw, dict):
        raise ConfigError("'params' must be a JSON object")
    unknown = sorted(set(raw) - set(PARAM_KEYS))
    if unknown:
        raise ConfigError("unknown parameter key(s): %s" % ", ".join(unknown))
    required = ["g0", "kappa_i"]
    if command in ("spectrum", "eigen", "validate"):
        # these run at one fixed coupling, so it has to be given
        required.append("kappa_ex")
    missing = [k for k in required if k not in raw]
    if missing:
        raise ConfigError("missing required parameter(s): %s" % ", ".join(missing))
    values = dict(raw)
    if "kappa_ex" not in values:
        # placeholder for searches that scan the coupling anyway
        values["kappa_ex"] = values["kappa_i"] + values.get("gamma", 1.0)
    try:
        return SystemParams(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError("invalid parameter value: %s" % exc) from exc


def _block(config: dict, command: str, defaults: dict) -> dict:
    raw = config.get(command, {})
    unknown = sorted(set(raw) - set(defaults))
    if unknown:
        raise ConfigError(
            "unknown key(s) in %r section: %s" % (command, ", ".join(unknown))
        )
    return {**defaults, **raw}


def _grid(block: dict, section: str) -> np.ndarray:
    start, stop, n = block["start"], block["stop"], block["n"]
    if not (finite(start) and finite(stop)):
        raise ConfigError("%s start/stop must be finite numbers" % section)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ConfigError("%s n must be a positive integer" % section)
    return np.linspace(float(start), float(stop), n)


def _subgrid(block: dict, key: str, defaults: dict, section: str) -> np.ndarray:
    raw = block[key]
    if not isinstance(raw, dict):
        raise ConfigError("%s.%s must be a JSON object" % (section, key))
    unknown = sorted(set(raw) - {"start", "stop", "n"})
    if unknown:
        raise ConfigError(
            "unknown key(s) in %s.%s: %s" % (section, key, ", ".join(unknown))
        )
    return _grid({**defaults, **raw}, "%s.%s" % (section, key))


def _parallel_map(fn, items, threads):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _run_spectrum(config, params, out_dir, threads):
    gamma = params.gamma
    block = _block(
        config,
        "spectrum",
        {"start": -60.0 * gamma, "stop": 60.0 * gamma, "n": 1201},
    )
    grid = _grid(block, "spectrum")
    result = spectrum(params, grid)
    resolved = {"command": "spectrum", "params": asdict(params), "spectrum": block}
    return resolved, {"spectrum.csv": lambda p: save_spectrum(p, result, params)}


def _run_eigen(config, params, out_dir, threads):
    gamma = params.gamma
    block = _block(
        config,
        "eigen",
        {"variable": "delta12", "start": None, "stop": None, "n": 121},
    )
    if block["variable"] not in ("delta12", "p"):
        raise ConfigError("eigen.variable must be 'delta12' or 'p'")
    if block["start"] is None:
        block["start"] = 0.0
    if block["stop"] is None:
        block["stop"] = 60.0 * gamma if block["variable"] == "delta12" else 1.0
    values = _grid(block, "eigen")
    eigenvalues = eigenvalue_sweep(params, block["variable"], values)
    resolved = {"command": "eigen", "params": asdict(params), "eigen": block}
    return resolved, {"eigen.csv": lambda p: save_eigenvalue_sweep(p, values, eigenvalues)}


def _run_helicity(config, params, out_dir, threads):
    block = _block(
        config,
        "helicity",
        {"input": None, "mode_number": 1, "label": "quasi-TE"},
    )
    if not isinstance(block["input"], str) or not block["input"]:
        raise ConfigError("helicity.input must name a field-grid CSV file")
    grid = load_field_grid(
        block["input"], mode_number=block["mode_number"], label=block["label"]
    )
    hmap = map_helicity(grid)
    resolved = {"command": "helicity", "helicity": block}
    if "params" in config:
        resolved["params"] = config["params"]
    return resolved, {"helicity.csv": lambda p: save_helicity_map(p, grid, hmap)}


def _run_optimize(config, params, out_dir, threads):
    block = _block(config, "optimize", {"fixed_delta12": None})
    fixed = block["fixed_delta12"]
    if fixed is not None and not finite(fixed):
        raise ConfigError("optimize.fixed_delta12 must be null or a finite number")
    result = maximize_contrast(params, fixed_delta12=fixed)
    row = (
        result.kappa_ex,
        result.delta12,
        result.delta_c,
        result.t_fwd,
        result.t_bwd,
        result.contrast_db,
        result.iterations,
        result.converged,
    )
    resolved = {"command": "optimize", "params": asdict(params), "optimize": block}
    return resolved, {"optimize.csv": lambda p: write_table(p, OPTIMIZE_COLUMNS, [row])}


def _run_sweep(config, params, out_dir, threads):
    gamma, ki = params.gamma, params.kappa_i
    block = _block(config, "sweep", {"kappa_ex": {}, "delta12": {}})
    kex_axis = _subgrid(
        block,
        "kappa_ex",
        {"start": ki, "stop": ki + 20.0 * gamma, "n": 21},
        "sweep",
    )
    d12_axis = _subgrid(
        block, "delta12", {"start": 0.0, "stop": 80.0 * gamma, "n": 21}, "sweep"
    )
    block = {
        "kappa_ex": {
            "start": float(kex_axis[0]),
            "stop": float(kex_axis[-1]),
            "n": int(kex_axis.size),
        },
        "delta12": {
            "start": float(d12_axis[0]),
            "stop": float(d12_axis[-1]),
            "n": int(d12_axis.size),
        },
    }
    contour = sweep_grid(params, kex_axis, d12_axis)
    resolved = {"command": "sweep", "params": asdict(params), "sweep": block}
    return resolved, {
        "sweep.csv": lambda p: save_contour(p, contour),
        "sweep_trace.csv": lambda p: save_zero_trace(p, contour),
    }


def _run_validate(config, params, out_dir, threads):
    gamma = params.gamma
    block = _block(
        config,
        "validate",
        {
            "n_max": 2,
            "drive_amp": 0.01 * gamma,
            "start": -60.0 * gamma,
            "stop": 60.0 * gamma,
            "n": 41,
            "directions": ["forward", "backward"],
        },
    )
    directions = block["directions"]
    if not isinstance(directions, list) or not directions or any(
        d not in ("forward", "backward") for d in directions
    ):
        raise ConfigError(
            "validate.directions must be a non-empty list drawn from "
            "'forward' and 'backward'"
        )
    try:
        trunc = TruncationSpec(n_max=block["n_max"], drive_amp=block["drive_amp"])
    except TruncationError as exc:
        raise ConfigError(str(exc)) from exc
    grid = _grid(block, "validate")
    tasks = [(float(dc), d) for dc in grid for d in directions]

    def work(task):
        dc, direction = task
        t_lin = transmission(params, DriveSpec(direction, dc))
        t_orc = oracle_transmission(params, trunc, direction, dc)
        rel = abs(t_orc - t_lin) / max(abs(t_lin), 1e-2)
        return (dc, direction, t_lin, t_orc, rel)

    rows = _parallel_map(work, tasks, threads)
    resolved = {"command": "validate", "params": asdict(params), "validate": block}
    return resolved, {"validate.csv": lambda p: write_table(p, VALIDATE_COLUMNS, rows)}


_RUNNERS = {
    "spectrum": _run_spectrum,
    "eigen": _run_eigen,
    "helicity": _run_helicity,
    "optimize": _run_optimize,
    "sweep": _run_sweep,
    "validate": _run_validate,
}


def _fail(out_dir: Path, command: str, exc: Exception, code: int) -> int:
    record = {
        "error": type(exc).__name__,
        "message": str(exc),
        "command": command,
        "exit_code": code,
    }
    try:
        write_json(out_dir / "error.json", record)
    except OSError:
        pass
    print("error: %s" % exc, file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ringqed",
        description="Non-reciprocal transmission through a ring resonator "
        "with a helicity-sensitive emitter.",
    )
    parser.add_argument(
        "--version", action="version", version="%(prog)s " + __version__
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "spectrum": "transmission and reflection spectra in both directions",
        "eigen": "polariton eigenvalue sweep over delta12 or p",
        "helicity": "helicity-degree map from a sampled mode field",
        "optimize": "maximize isolation contrast at zero backward transmission",
        "sweep": "contrast contour over (kappa_ex, delta12) with zero trace",
        "validate": "cross-check the linear pipeline against the truncated model",
    }
    for name in COMMANDS:
        cp = sub.add_parser(name, help=helps[name])
        cp.add_argument("config", help="JSON configuration file")
        cp.add_argument(
            "--set",
            action="append",
            default=[],
            dest="overrides",
            metavar="KEY=VALUE",
            help="override a config entry; dotted keys address nested objects",
        )
        cp.add_argument("--out-dir", default=".", help="output directory")
        cp.add_argument(
            "--threads",
            type=int,
            default=1,
            help="worker threads for independent grid points",
        )
    args = parser.parse_args(argv)

    out_dir = Path(args.out_dir)
    command = args.command
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        config = _load_config(args.config)
        _apply_overrides(config, args.overrides)
        _check_sections(config, command)
        if command == "helicity":
            params = None
        else:
            params = _resolve_params(config, command)
        started = time.perf_counter()
        resolved, writers = _RUNNERS[command](config, params, out_dir, args.threads)
        for filename, writer in writers.items():
            writer(out_dir / filename)
        resolved["_meta"] = {
            "version": __version__,
            "command": command,
            "wall_time_s": round(time.perf_counter() - started, 3),
            "outputs": sorted(writers),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        write_json(out_dir / ("%s.meta.json" % command), resolved)
    except (ConfigError, ValidationError) as exc:
        return _fail(out_dir, command, exc, 2)
    except RingqedError as exc:
        return _fail(out_dir, command, exc, 1)
    except OSError as exc:
        return _fail(out_dir, command, exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
