"""Experiment configuration: dataclasses and the plain-text config format.

A config file is line-oriented ``key = value`` text; ``#`` starts a comment,
blank lines are skipped, unknown or duplicate keys are errors. The full key
schema is documented in the package README. Semantic validation failures
carry the line number of the offending key so the CLI can print
``file:line: message``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .noise import NoiseSpec
from .state import MAX_DENSE_SUBSET, MAX_QUBITS, CapacityError

QUANTITIES = ("entropy", "twist", "berry")
BOUNDARIES = ("pbc", "obc")
INITIALS = ("neel", "singlet")
ESTIMATORS = ("unbiased", "plugin")
SHIFT_MODES = ("none", "zero_at_t0", "valley_to_zero")
MITIGATE_MODES = ("auto", "on", "off")

OUTPUT_ROOT_ENV = "SSHQUENCH_OUT"


class ConfigError(ValueError):
    """Invalid configuration; carries the source line when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class QuenchSpec:
    """Full physical description of one quench experiment."""

    num_sites: int
    boundary: str
    initial: str
    times: tuple[float, ...]
    num_unitaries: int = 100
    num_shots: int = 4096
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 1234

    couplings = (0.0, 1.0)  # fixed: fully dimerized, intercell only

    @property
    def num_cells(self) -> int:
        return self.num_sites // 2


@dataclass(frozen=True)
class RunOptions:
    """Runner behavior that does not alter the physics of the quench."""

    quantities: tuple[str, ...] = ("entropy",)
    subsystem: str = "half"
    estimator: str = "unbiased"
    shift_mode: str = "none"
    mitigate: str = "auto"
    save_shots: bool = False
    threads: int = 1
    exact_probabilities: bool = False
    out_dir: str | None = None

    def mitigation_enabled(self, noise: NoiseSpec) -> bool:
        if self.mitigate == "on":
            return True
        if self.mitigate == "off":
            return False
        return noise.p_layer > 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    spec: QuenchSpec
    options: RunOptions


_KNOWN_KEYS = {
    "L",
    "boundary",
    "initial",
    "t_max",
    "t_points",
    "times",
    "quantities",
    "subsystem",
    "n_unitaries",
    "n_shots",
    "estimator",
    "p_layer",
    "readout_flip",
    "seed",
    "shift_mode",
    "mitigate",
    "save_shots",
    "out",
    "threads",
    "exact_probabilities",
}

_REQUIRED_KEYS = ("L", "initial")


def _parse_bool(raw: str, key: str, line: int) -> bool:
    if raw.lower() in ("true", "yes", "1"):
        return True
    if raw.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be true or false, got {raw!r}", line)


def _parse_int(raw: str, key: str, line: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}", line) from None


def _parse_float(raw: str, key: str, line: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {raw!r}", line) from None


def _parse_choice(raw: str, key: str, line: int, choices: tuple[str, ...]) -> str:
    if raw not in choices:
        raise ConfigError(f"{key} must be one of {', '.join(choices)}; got {raw!r}", line)
    return raw


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        content = rawline.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"expected 'key = value', got {content!r}", lineno)
        key, value = (part.strip() for part in content.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"{key} has no value", lineno)
        entries[key] = (value, lineno)
    for key in _REQUIRED_KEYS:
        if key not in entries:
            raise ConfigError(f"missing required key {key!r}")
    return _build_config(entries)


def parse_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config_text(text, source=str(p))


def _build_times(entries: dict[str, tuple[str, int]]) -> tuple[float, ...]:
    if "times" in entries:
        if "t_max" in entries or "t_points" in entries:
            raise ConfigError(
                "give either an explicit 'times' list or 't_max'/'t_points', not both",
                entries["times"][1],
            )
        raw, line = entries["times"]
        try:
            times = tuple(float(x) for x in raw.split(","))
        except ValueError:
            raise ConfigError("times must be comma-separated numbers", line) from None
    else:
        t_max_raw, t_max_line = entries.get("t_max", ("0.7853981633974483", 0))
        t_points_raw, t_points_line = entries.get("t_points", ("30", 0))
        t_max = _parse_float(t_max_raw, "t_max", t_max_line)
        t_points = _parse_int(t_points_raw, "t_points", t_points_line)
        if t_max <= 0:
            raise ConfigError("t_max must be positive", t_max_line)
        if t_points < 1:
            raise ConfigError("t_points must be >= 1", t_points_line)
        times = tuple(float(t) for t in np.linspace(0.0, t_max, t_points))
        line = t_max_line
    if any(t < 0 for t in times):
        raise ConfigError("times must be nonnegative", line)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("times must be strictly increasing", line)
    return times


def _build_config(entries: dict[str, tuple[str, int]]) -> ExperimentConfig:
    def get(key: str, default: str) -> tuple[str, int]:
        return entries.get(key, (default, 0))

    l_raw, l_line = entries["L"]
    num_sites = _parse_int(l_raw, "L", l_line)
    if num_sites > MAX_QUBITS:
        raise CapacityError(
            f"L = {num_sites} exceeds the dense statevector cap of {MAX_QUBITS}"
        )
    if num_sites < 4 or num_sites % 2:
        raise ConfigError(f"L must be even and >= 4, got {num_sites}", l_line)

    raw, line = get("boundary", "pbc")
    boundary = _parse_choice(raw, "boundary", line, BOUNDARIES)

    raw, line = entries["initial"]
    initial = _parse_choice(raw, "initial", line, INITIALS)

    times = _build_times(entries)

    raw, line = get("n_unitaries", "100")
    num_unitaries = _parse_int(raw, "n_unitaries", line)
    if num_unitaries < 1:
        raise ConfigError("n_unitaries must be >= 1", line)

    raw, line = get("n_shots", "4096")
    num_shots = _parse_int(raw, "n_shots", line)
    if num_shots < 2:
        raise ConfigError("n_shots must be >= 2", line)

    raw, line = get("p_layer", "0")
    p_layer = _parse_float(raw, "p_layer", line)
    raw2, line2 = get("readout_flip", "0")
    readout = _parse_float(raw2, "readout_flip", line2)
    try:
        noise = NoiseSpec(p_layer=p_layer, readout_flip=readout)
    except ValueError as exc:
        raise ConfigError(str(exc), line if "p_layer" in str(exc) else line2) from None

    raw, line = get("seed", "1234")
    seed = _parse_int(raw, "seed", line)

    raw, line = get("quantities", "entropy")
    quantities = tuple(q.strip() for q in raw.split(","))
    for q in quantities:
        if q not in QUANTITIES:
            raise ConfigError(
                f"quantities must be from {', '.join(QUANTITIES)}; got {q!r}", line
            )
    if len(set(quantities)) != len(quantities):
        raise ConfigError("duplicate quantity", line)

    raw, line = get("subsystem", "half")
    subsystem = raw.replace(" ", "")
    _resolve_subsystem_checked(subsystem, num_sites, line)
    if "entropy" in quantities and subsystem in ("half", "bulk") and num_sites % 4:
        raise ConfigError(
            "symmetric-bipartition entropy needs L divisible by 4", l_line
        )

    raw, line = get("estimator", "unbiased")
    estimator = _parse_choice(raw, "estimator", line, ESTIMATORS)
    raw, line = get("shift_mode", "none")
    shift_mode = _parse_choice(raw, "shift_mode", line, SHIFT_MODES)
    raw, line = get("mitigate", "auto")
    mitigate = _parse_choice(raw, "mitigate", line, MITIGATE_MODES)

    raw, line = get("save_shots", "false")
    save_shots = _parse_bool(raw, "save_shots", line)
    raw, line = get("exact_probabilities", "false")
    exact_probabilities = _parse_bool(raw, "exact_probabilities", line)

    raw, line = get("threads", "1")
    threads = _parse_int(raw, "threads", line)
    if threads < 1:
        raise ConfigError("threads must be >= 1", line)

    out_dir = entries["out"][0] if "out" in entries else None

    spec = QuenchSpec(
        num_sites=num_sites,
        boundary=boundary,
        initial=initial,
        times=times,
        num_unitaries=num_unitaries,
        num_shots=num_shots,
        noise=noise,
        seed=seed,
    )
    options = RunOptions(
        quantities=quantities,
        subsystem=subsystem,
        estimator=estimator,
        shift_mode=shift_mode,
        mitigate=mitigate,
        save_shots=save_shots,
        threads=threads,
        exact_probabilities=exact_probabilities,
        out_dir=out_dir,
    )
    return ExperimentConfig(spec, options)


def _resolve_subsystem_checked(
    subsystem: str, num_sites: int, line: int
) -> tuple[int, ...]:
    try:
        return resolve_subsystem(subsystem, num_sites)
    except CapacityError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), line) from None


def resolve_subsystem(subsystem: str, num_sites: int) -> tuple[int, ...]:
    """0-based qubit indices of a subsystem description.

    ``half`` is the first L/2 sites, ``bulk`` the central L/2 sites, and an
    explicit comma list gives 1-based site numbers.
    """
    if subsystem == "half":
        qubits = tuple(range(num_sites // 2))
    elif subsystem == "bulk":
        if num_sites % 4:
            raise ValueError("bulk subsystem needs L divisible by 4")
        qubits = tuple(range(num_sites // 4, 3 * num_sites // 4))
    else:
        try:
            sites = sorted(int(x) for x in subsystem.split(","))
        except ValueError:
            raise ValueError(
                f"subsystem must be 'half', 'bulk', or 1-based sites, got {subsystem!r}"
            ) from None
        if not sites or len(set(sites)) != len(sites):
            raise ValueError("subsystem site list must be nonempty without duplicates")
        if sites[0] < 1 or sites[-1] > num_sites:
            raise ValueError(f"subsystem sites must lie in 1..{num_sites}")
        qubits = tuple(s - 1 for s in sites)
    if len(qubits) > MAX_DENSE_SUBSET:
        raise CapacityError(
            f"subsystem of {len(qubits)} qubits exceeds the dense cap of "
            f"{MAX_DENSE_SUBSET}"
        )
    return qubits


def default_output_dir(config_path: str | Path, options: RunOptions) -> Path:
    if options.out_dir:
        return Path(options.out_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
    return Path(root) / Path(config_path).stem


def with_overrides(
    config: ExperimentConfig,
    seed: int | None = None,
    threads: int | None = None,
    exact_probabilities: bool | None = None,
) -> ExperimentConfig:
    spec, options = config.spec, config.options
    if seed is not None:
        spec = replace(spec, seed=seed)
    if threads is not None:
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        options = replace(options, threads=threads)
    if exact_probabilities is not None:
        options = replace(options, exact_probabilities=exact_probabilities)
    return ExperimentConfig(spec, options)
