"""Run configuration files.

A configuration is a TOML file whose keys may be written flat
(``physical.g_mhz = 1.5``) or as tables.  Frequencies are given in linear
MHz and converted to rad/us once, angles in units of pi::

    physical.gamma_mhz = 4.9
    physical.vartheta_pi = 0.25
    step.dt = 1e-4
    step.t_end = 2.0
    run.seeds = [1, 2, 3]
    sweep.parameter = "vartheta_pi"
    sweep.values = [0.0, 0.05, 0.25, 0.45, 0.5]
    output.dir = "results"

Every key is optional; omitted physical keys take the reference values.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import StepConfig
from .errors import ConfigError, DomainError, ParameterError
from .params import TWO_PI, PhysicalParams

# config key -> (PhysicalParams field, factor applied to the file value)
PHYSICAL_KEYS = {
    "omega_ud_mhz": ("omega_ud", TWO_PI),
    "delta_up_mhz": ("delta_up", TWO_PI),
    "delta_dn_mhz": ("delta_dn", TWO_PI),
    "kappa_mhz": ("kappa", TWO_PI),
    "g_mhz": ("g", TWO_PI),
    "gamma_mhz": ("gamma", TWO_PI),
    "eta": ("eta", 1.0),
    "beta_in": ("beta_in", 1.0),
    "vartheta_pi": ("vartheta", math.pi),
    "n_atoms": ("n_atoms", None),
    "theta_pi": ("theta", math.pi),
    "phi_pi": ("phi", math.pi),
}

STEP_KEYS = {
    "dt": float,
    "t_end": float,
    "renormalize_every": int,
    "frame_shift_mhz": float,
    "record_every": int,
    "snapshot_times": list,
    "measurement_on": bool,
}

RUN_KEYS = {"seeds": list, "noise_files": list, "workers": int, "baseline": bool}
SWEEP_KEYS = {"parameter": str, "values": list}
OUTPUT_KEYS = {"dir": str}
ORACLE_KEYS = {"tolerance": float}

SWEEPABLE = ("vartheta_pi", "beta_in", "eta", "gamma_mhz", "n_atoms")

SECTIONS = {
    "physical": dict.fromkeys(PHYSICAL_KEYS),
    "step": STEP_KEYS,
    "run": RUN_KEYS,
    "sweep": SWEEP_KEYS,
    "output": OUTPUT_KEYS,
    "oracle": ORACLE_KEYS,
}

DEFAULT_SEEDS = (0,)


@dataclass(frozen=True)
class Sweep:
    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class RunConfig:
    """Validated contents of a configuration file.

    ``raw`` keeps the file values after defaults were filled in; it is what
    the manifest records and hashes.
    """

    physical: PhysicalParams
    step: StepConfig
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    noise_files: tuple[Path, ...] = ()
    workers: int = 1
    baseline: bool = False
    sweep: Sweep | None = None
    output_dir: Path = Path("results")
    oracle_tolerance: float = 1e-8
    raw: dict = field(default_factory=dict, compare=False)

    def physical_variants(self) -> list[tuple[float | None, PhysicalParams]]:
        """``(sweep value, params)`` pairs; a single ``(None, physical)`` without a sweep."""
        if self.sweep is None:
            return [(None, self.physical)]
        return [(v, with_physical_value(self.physical, self.sweep.parameter, v)) for v in self.sweep.values]

    def config_hash(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def with_physical_value(p: PhysicalParams, key: str, value) -> PhysicalParams:
    """Copy of ``p`` with one config-file key replaced (file units)."""
    name, factor = PHYSICAL_KEYS[key]
    converted = int(value) if factor is None else float(value) * factor
    return dataclasses.replace(p, **{name: converted})


def _check_type(section: str, key: str, value, kind):
    where = f"{section}.{key}"
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
    elif kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
    elif kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
    elif kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
    return value


def parse_config(data: dict, base_dir: Path | None = None) -> RunConfig:
    """Validate a parsed mapping; relative paths resolve against ``base_dir``."""
    base_dir = Path(".") if base_dir is None else Path(base_dir)
    for section, body in data.items():
        if section not in SECTIONS:
            raise ConfigError(f"{section}: unknown section (expected one of {', '.join(SECTIONS)})")
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a table of keys")
        for key in body:
            if key not in SECTIONS[section]:
                raise ConfigError(f"{section}.{key}: unknown key")

    phys = dict(data.get("physical", {}))
    kwargs = {}
    for key, value in phys.items():
        name, factor = PHYSICAL_KEYS[key]
        if factor is None:
            _check_type("physical", key, value, int)
            kwargs[name] = value
        else:
            _check_type("physical", key, value, float)
            kwargs[name] = float(value) * factor
    try:
        physical = PhysicalParams(**kwargs)
    except ParameterError as exc:
        raise ConfigError(f"physical: {exc}") from exc

    step_in = dict(data.get("step", {}))
    for key, value in step_in.items():
        _check_type("step", key, value, STEP_KEYS[key])
    step_kwargs = {k: v for k, v in step_in.items() if k != "frame_shift_mhz"}
    if "frame_shift_mhz" in step_in:
        step_kwargs["frame_shift_override"] = TWO_PI * float(step_in["frame_shift_mhz"])
    if "snapshot_times" in step_kwargs:
        for t in step_kwargs["snapshot_times"]:
            _check_type("step", "snapshot_times[]", t, float)
        step_kwargs["snapshot_times"] = tuple(float(t) for t in step_kwargs["snapshot_times"])
    try:
        step = StepConfig(**step_kwargs)
    except DomainError as exc:
        raise ConfigError(f"step: {exc}") from exc

    run = dict(data.get("run", {}))
    for key, value in run.items():
        _check_type("run", key, value, RUN_KEYS[key])
    noise_files = tuple((base_dir / str(f)) for f in run.get("noise_files", []))
    if "seeds" in run:
        seeds = run["seeds"]
    else:
        seeds = [] if noise_files else list(DEFAULT_SEEDS)
    for s in seeds:
        _check_type("run", "seeds[]", s, int)
        if not 0 <= s < 2 ** 64:
            raise ConfigError(f"run.seeds: {s} is not an unsigned 64-bit integer")
    if not seeds and not noise_files:
        raise ConfigError("run.seeds: at least one seed or noise file is required")
    workers = run.get("workers", 1)
    if workers < 1:
        raise ConfigError(f"run.workers: must be >= 1, got {workers}")

    sweep = None
    if "sweep" in data:
        sw = data["sweep"]
        for key, value in sw.items():
            _check_type("sweep", key, value, SWEEP_KEYS[key])
        if "parameter" not in sw or "values" not in sw:
            raise ConfigError("sweep: both sweep.parameter and sweep.values are required")
        if sw["parameter"] not in SWEEPABLE:
            raise ConfigError(f"sweep.parameter: {sw['parameter']!r} is not one of {', '.join(SWEEPABLE)}")
        if not sw["values"]:
            raise ConfigError("sweep.values: empty list")
        for v in sw["values"]:
            _check_type("sweep", "values[]", v, float)
            try:
                with_physical_value(physical, sw["parameter"], v)
            except ParameterError as exc:
                raise ConfigError(f"sweep.values: {v!r} is invalid for {sw['parameter']}: {exc}") from exc
        sweep = Sweep(sw["parameter"], tuple(sw["values"]))

    out = dict(data.get("output", {}))
    for key, value in out.items():
        _check_type("output", key, value, OUTPUT_KEYS[key])
    output_dir = base_dir / out.get("dir", "results")

    orc = dict(data.get("oracle", {}))
    for key, value in orc.items():
        _check_type("oracle", key, value, ORACLE_KEYS[key])

    raw = {
        "physical": {k: _file_value(physical, k) for k in PHYSICAL_KEYS},
        "step": {
            "dt": step.dt,
            "t_end": step.t_end,
            "renormalize_every": step.renormalize_every,
            "frame_shift_mhz": step_in.get("frame_shift_mhz"),
            "record_every": step.record_every,
            "snapshot_times": list(step.snapshot_times),
            "measurement_on": step.measurement_on,
        },
        "run": {
            "seeds": list(seeds),
            "noise_files": [str(f) for f in run.get("noise_files", [])],
            "baseline": bool(run.get("baseline", False)),
        },
        "sweep": None if sweep is None else {"parameter": sweep.parameter, "values": list(sweep.values)},
    }
    return RunConfig(
        physical=physical,
        step=step,
        seeds=tuple(int(s) for s in seeds),
        noise_files=noise_files,
        workers=workers,
        baseline=bool(run.get("baseline", False)),
        sweep=sweep,
        output_dir=output_dir,
        oracle_tolerance=float(orc.get("tolerance", 1e-8)),
        raw=raw,
    )


def _file_value(p: PhysicalParams, key: str):
    name, factor = PHYSICAL_KEYS[key]
    value = getattr(p, name)
    return int(value) if factor is None else value / factor


def load_config(path) -> RunConfig:
    """Read and validate a configuration file; errors name the offending key."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data, base_dir=path.parent)
