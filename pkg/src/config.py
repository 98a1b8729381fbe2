"""
Run configuration: task defaults, optional TOML file and command-line flags.

Precedence is flags > file > task defaults. The environment (loaded from
.env by the launcher) only supplies ambient values such as the default
seed, metrics CSV path and log level.
"""
from __future__ import annotations

import argparse
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict

from .errors import ParameterError
from .modules.solver import SOLVER_DEFAULT, TENSOR_DEFAULT, SolverParams, params_for_task

# flag name -> (section, key)
FLAG_KEYS: Dict[str, tuple[str, str]] = {
    "eta": ("solver", "eta"),
    "p": ("solver", "p"),
    "theta1": ("solver", "theta1"),
    "theta2": ("solver", "theta2"),
    "theta3": ("solver", "theta3"),
    "max_iter": ("solver", "max_iter"),
    "tol": ("solver", "tol"),
    "refine_every": ("solver", "refine_every"),
    "sigma": ("tensor", "sigma"),
    "rho": ("tensor", "rho"),
    "contrast": ("tensor", "contrast"),
    "gamma": ("tensor", "gamma"),
    "tensor_mode": ("tensor", "mode"),
}

BENCH_DEFAULT: Dict[str, Any] = {
    "noise": [0.005, 0.01, 0.015, 0.02, 0.025],
    "saltpepper": [0.2, 0.4, 0.6, 0.8, 0.9],
    "inpaint": [0.4, 0.6, 0.8, 0.9],
    "methods": ["twso"],
    "workers": 1,
}

KNOWN_SECTIONS = {"solver": set(SOLVER_DEFAULT), "tensor": set(TENSOR_DEFAULT), "bench": set(BENCH_DEFAULT)}


def default_seed() -> int:
    raw = os.getenv("TWSO_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ParameterError(f"TWSO_SEED must be an integer (got {raw!r})") from None


def load_config_file(path: str | os.PathLike | None) -> Dict[str, Dict[str, Any]]:
    if not path:
        return {}
    with Path(path).open("rb") as handle:
        try:
            data = tomllib.load(handle)
        except tomllib.TOMLDecodeError as err:
            raise ParameterError(f"{path}: {err}") from err
    for section, values in data.items():
        if section not in KNOWN_SECTIONS or not isinstance(values, dict):
            raise ParameterError(f"{path}: unknown section [{section}]")
        unknown = set(values) - KNOWN_SECTIONS[section]
        if unknown:
            raise ParameterError(f"{path}: unknown keys in [{section}]: {sorted(unknown)}")
    return data


def merge_sections(file_data: Dict[str, Dict[str, Any]], args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    merged = {"solver": dict(file_data.get("solver", {})), "tensor": dict(file_data.get("tensor", {}))}
    for flag, (section, key) in FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            merged[section][key] = value
    return merged


def task_for(command: str, p: int | None) -> str:
    if command == "inpaint":
        return "inpaint"
    return "saltpepper" if p == 1 else "denoise"


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: SolverParams
    seed: int
    input: Path | None = None
    output: Path | None = None
    mask: Path | None = None
    reference: Path | None = None
    metrics_csv: Path | None = None
    method: str = "twso"
    channelwise: bool = False
    bench: Dict[str, Any] = field(default_factory=dict)

    def param_row(self) -> Dict[str, Any]:
        pa = self.params
        return {
            "eta": pa.eta, "p": pa.p, "theta1": pa.theta1, "theta2": pa.theta2, "theta3": pa.theta3,
            "max_iter": pa.max_iter, "tol": pa.tol, "refine_every": pa.refine_every,
            "sigma": pa.tensor.sigma, "rho": pa.tensor.rho, "contrast": pa.tensor.contrast,
            "gamma": pa.tensor.gamma, "tensor_mode": pa.tensor.mode,
        }


def _path(value) -> Path | None:
    return Path(value) if value else None


def build_run_config(args: argparse.Namespace, task: str | None = None) -> RunConfig:
    file_data = load_config_file(getattr(args, "config", None))
    merged = merge_sections(file_data, args)
    task = task or task_for(args.command, merged["solver"].get("p"))
    try:
        params = params_for_task(task, tensor=merged["tensor"], **merged["solver"])
    except TypeError as err:
        raise ParameterError(str(err)) from err

    seed = args.seed if getattr(args, "seed", None) is not None else default_seed()
    metrics_csv = getattr(args, "metrics_csv", None) or None
    return RunConfig(
        command=args.command,
        params=params,
        seed=seed,
        input=_path(getattr(args, "input", None)),
        output=_path(getattr(args, "output", None)),
        mask=_path(getattr(args, "mask", None)),
        reference=_path(getattr(args, "reference", None)),
        metrics_csv=_path(metrics_csv),
        method=getattr(args, "method", None) or "twso",
        channelwise=bool(getattr(args, "color", False)),
        bench={**BENCH_DEFAULT, **file_data.get("bench", {})},
    )
