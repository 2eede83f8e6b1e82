"""Run configuration in a line-oriented ``key = value`` text format.

    # grid
    n_points = 65536
    domain_half_length = 16384    # x-units
    dt = 0.1                      # time units
    initial_data = gaussian

Comments start with ``#``; unknown keys and malformed values are collected
and reported together.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from ..errors import ConfigurationError
from ..initial_data import KINDS, initial_spectrum
from ..spectral import Grid

DIAGNOSTICS = ("conserved", "linear_decay", "zero_mode", "right", "self_similar", "left", "scattering")


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _parse_names(text):
    return tuple(sorted({v for v in text.replace(",", " ").split()}))


@dataclass(frozen=True)
class RunConfig:
    """Full specification of one experiment.  ``output_dir`` is not hashed."""

    n_points: int = 65536
    domain_half_length: float = 16384.0
    dt: float = 0.1
    t_final: float = 300.0
    snapshot_ratio: float = 2.0 ** 0.25
    sign: int = 1
    epsilon: float = 0.05
    initial_data: str = "gaussian"
    width: float = 1.0
    k0: float = 0.0
    tau0: float = 1.0
    noise: float = 0.0
    seed: int = 0
    data_path: str = ""
    linear: bool = False
    diagnostics: tuple = DIAGNOSTICS
    extra_times: tuple = ()
    dump_times: tuple = ()
    fit_window: tuple = (30.0, 300.0)
    tracked_xi: tuple = (0.5, 1.0, 1.5, 2.0)
    output_dir: str = "runs/default"

    def __post_init__(self):
        # order-free sets: the same selection always hashes the same
        object.__setattr__(self, "diagnostics", tuple(sorted(set(self.diagnostics))))
        problems = self.problems()
        if problems:
            raise ConfigurationError("invalid configuration: " + "; ".join(problems))

    def problems(self):
        out = []
        n = self.n_points
        if n < 16 or n & (n - 1):
            out.append("n_points must be a power of two >= 16")
        for name in ("domain_half_length", "dt", "width"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be positive")
        if self.t_final < 1:
            out.append("t_final must be >= 1")
        if not self.snapshot_ratio > 1:
            out.append("snapshot_ratio must exceed 1")
        if self.sign not in (1, -1):
            out.append("sign must be +1 or -1")
        if self.epsilon < 0:
            out.append("epsilon must be non-negative")
        if self.initial_data not in KINDS:
            out.append(f"initial_data must be one of {', '.join(KINDS)}")
        if self.initial_data == "from_file" and not self.data_path:
            out.append("from_file data needs data_path")
        unknown = set(self.diagnostics) - set(DIAGNOSTICS)
        if unknown:
            out.append(f"unknown diagnostics {sorted(unknown)}")
        if self.dt > 0.5:
            out.append("dt above 0.5 is outside the accuracy range of the integrator")
        return out

    # -- derived objects

    def make_grid(self) -> Grid:
        return Grid(self.n_points, self.domain_half_length)

    def initial_spectrum(self, grid: Grid):
        return initial_spectrum(grid, self.initial_data, self.epsilon, self.width, self.k0,
                                self.tau0, self.noise, self.seed, self.data_path or None)

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    # -- text form

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ", ".join(repr(v) if not isinstance(v, str) else v for v in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def canonical(self) -> str:
        """Sorted ``key = value`` lines of every hashed field."""
        lines = self.to_text().splitlines()
        return "\n".join(sorted(line for line in lines if not line.startswith("output_dir ")))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    @classmethod
    def from_text(cls, text: str, **overrides) -> "RunConfig":
        kinds = {f.name for f in fields(cls)}
        defaults = asdict(cls())
        values, problems = {}, []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                problems.append(f"line {lineno}: expected 'key = value'")
                continue
            key, val = (p.strip() for p in line.split("=", 1))
            if key not in kinds:
                problems.append(f"line {lineno}: unknown key {key!r}")
                continue
            try:
                values[key] = _convert(key, val, defaults[key])
            except ValueError as exc:
                problems.append(f"line {lineno}: {key}: {exc}")
        if problems:
            raise ConfigurationError("invalid configuration: " + "; ".join(problems))
        values.update(overrides)
        return cls(**values)

    @classmethod
    def load(cls, path, **overrides) -> "RunConfig":
        return cls.from_text(Path(path).read_text(), **overrides)

    def save(self, path):
        Path(path).write_text(self.to_text())


def parse_value(key: str, text: str):
    """Typed value of one configuration entry, as read from text."""
    if key not in RunConfig.__dataclass_fields__:
        raise ConfigurationError(f"unknown key {key!r}")
    try:
        return _convert(key, text, getattr(RunConfig(), key))
    except ValueError as exc:
        raise ConfigurationError(f"{key}: {exc}") from exc


def _convert(key, text, default):
    if key == "diagnostics":
        return _parse_names(text)
    if isinstance(default, tuple):
        return _parse_floats(text)
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text
