"""Flat dotted-key configuration with defaults, file loading, and overrides.

Precedence, lowest to highest: built-in defaults, config-file entries,
command-line `key=value` overrides, the `--seed` flag. Files hold one
`key = value` per line; blank lines and `#` comments are ignored. Every key
is typed by its default and unknown keys are rejected by name.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Callable

from subhmc.core import ConfigurationError


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in {"true", "yes", "1", "on"}:
        return True
    if low in {"false", "no", "0", "off"}:
        return False
    raise ConfigurationError(f"expected a boolean, got {raw!r}")


def _int(raw: str) -> int:
    try:
        return int(raw.strip())
    except ValueError:
        raise ConfigurationError(f"expected an integer, got {raw!r}") from None


def _float(raw: str) -> float:
    try:
        return float(raw.strip())
    except ValueError:
        raise ConfigurationError(f"expected a number, got {raw!r}") from None


def _str(raw: str) -> str:
    return raw.strip()


def _int_list(raw: str) -> tuple[int, ...]:
    items = tuple(_int(tok) for tok in raw.split(",") if tok.strip())
    if not items:
        raise ConfigurationError("expected a nonempty comma-separated list")
    if any(v <= 0 for v in items):
        raise ConfigurationError("list entries must be positive")
    return items


def _float_list(raw: str) -> tuple[float, ...]:
    items = tuple(_float(tok) for tok in raw.split(",") if tok.strip())
    if not items:
        raise ConfigurationError("expected a nonempty comma-separated list")
    if any(v <= 0 for v in items):
        raise ConfigurationError("list entries must be positive")
    return items


def _mu(raw: str) -> float | None:
    low = raw.strip().lower()
    if low == "random":
        return None
    return _float(raw)


# key -> (default, parser, help)
SCHEMA: dict[str, tuple[Any, Callable[[str], Any], str]] = {
    "seed": (1, _int, "root seed for data and chains"),
    "output.dir": ("out", _str, "directory for scenario CSVs"),
    "model.sigma": (2.0, _float, "observation noise scale"),
    "model.m": (0.0, _float, "prior mean"),
    "model.s": (1.0, _float, "prior scale"),
    "model.N": (500, _int, "observations per dimension"),
    "model.D": (1, _int, "number of dimensions"),
    "model.J": (25, _int, "number of equal batches (must divide N)"),
    "model.mu": (None, _mu, "true location; a number, or 'random' to draw it"),
    "trajectory.eps": (0.01, _float, "integrator step size"),
    "trajectory.tau": (2.0 * math.pi, _float, "total integration time"),
    "trajectory.subsets": ((20, 100, 400), _int_list,
                           "subset sizes for the biased trajectories"),
    "trajectory.q0": (0.0, _float, "initial position"),
    "trajectory.p0": (1.0, _float, "initial momentum"),
    "dimscan.dims": ((1, 2, 5, 10, 20, 50, 100), _int_list,
                     "dimension grid"),
    "dimscan.pool": (5, _int, "subsampled variants draw from the first pool batches"),
    "dimscan.cost_factor": (5.0, _float,
                            "subsampled step size is the calibrated one over this"),
    "dimscan.target_accept": (0.9, _float, "calibration target for the full chain"),
    "dimscan.iterations": (400, _int, "chain length per variant and dimension"),
    "dimscan.pilot_iterations": (500, _int, "pilot chain length during calibration"),
    "sweep.eps_scan": ((0.04, 0.02, 0.01), _float_list, "sweep step sizes"),
    "sweep.sweeps": (500, _int, "symmetric sweeps per step size"),
    "sweep.q0": (0.0, _float, "initial position"),
    "sweep.p0": (1.0, _float, "initial momentum"),
    "plateau.eps_grid": ((0.1, 0.05, 0.025, 0.0125), _float_list,
                         "step sizes, spanning at least three octaves"),
    "plateau.tau": (1.0, _float, "integration time per endpoint comparison"),
    "plateau.q0": (0.0, _float, "initial position"),
    "plateau.p0": (1.0, _float, "initial momentum"),
    "plateau.batch": (1, _int, "batch index for the fixed-batch variant"),
    "plateau.pool": ((1, 2, 3, 4, 5), _int_list,
                     "batch pool for the per-step variant (a strict subset)"),
    "plateau.partial": ((1, 2, 3, 4, 5), _int_list,
                        "batch sublist for the partial-sweep variant"),
    "sampler.eps": (0.05, _float, "chain step size"),
    "sampler.tau_max": (2.0 * math.pi, _float, "integration time is U(0, tau_max)"),
    "sampler.iterations": (5000, _int, "chain length"),
    "sampler.metropolis": (True, _bool, "apply the accept/reject correction"),
    "sampler.warmup_frac": (0.1, _float, "fraction of iterations discarded"),
    "sampler.schedule": ("full", _str,
                         "full | fixed_batch | per_step | per_trajectory"),
    "sampler.batch": (1, _int, "batch index for the fixed_batch schedule"),
    "sampler.pool": ((1, 2, 3, 4, 5), _int_list, "batch pool for random schedules"),
}


def defaults() -> dict[str, Any]:
    return {key: default for key, (default, _, _) in SCHEMA.items()}


def parse_value(key: str, raw: str) -> Any:
    if key not in SCHEMA:
        raise ConfigurationError(f"unknown config key: {key}")
    _, parser, _ = SCHEMA[key]
    try:
        return parser(raw)
    except ConfigurationError as err:
        raise ConfigurationError(f"bad value for {key}: {err}") from None


def parse_assignment(text: str) -> tuple[str, Any]:
    """Split one `key=value` string and parse the value."""
    if "=" not in text:
        raise ConfigurationError(f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    key = key.strip()
    return key, parse_value(key, raw)


def read_config_file(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    values: dict[str, Any] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        try:
            key, value = parse_assignment(stripped)
        except ConfigurationError as err:
            raise ConfigurationError(f"{path}:{lineno}: {err}") from None
        values[key] = value
    return values


def load_config(
    file_path: str | Path | None = None,
    overrides: list[str] | None = None,
    seed: int | None = None,
) -> dict[str, Any]:
    cfg = defaults()
    if file_path is not None:
        cfg.update(read_config_file(file_path))
    for item in overrides or []:
        key, value = parse_assignment(item)
        cfg[key] = value
    if seed is not None:
        cfg["seed"] = seed
    return cfg
