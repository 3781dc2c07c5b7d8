"""Flat ``dotted.key=value`` experiment configuration."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .representation import (
    EnergyGrid,
    Exponential,
    FromFile,
    Gauss,
    Indicator,
    PhysicsParams,
    TimeGrid,
    make_energy_state,
)


class ConfigError(ValueError):
    """Invalid or incomplete configuration (CLI exit code 2)."""


STATE_KINDS = ("exp", "indicator", "gauss", "file")
CLOCK_KINDS = ("a", "b", "tabulated")
PROFILES = ("default", "strict")


@dataclass
class ExperimentConfig:
    hbar: float = 1.0
    eps_max: float = 40.0
    n: int = 2 ** 14
    tau_min: float = -80.0
    tau_max: float = 80.0
    m: int = 2 ** 14
    state_kind: str = "exp"
    state_beta: float = 1.0
    state_a: float = 0.0
    state_b: float = 1.0
    state_mu: float = 10.0
    state_sigma: float = 1.0
    state_path: str = ""
    clock_kind: str = "a"
    clock_lambda: float = 1.0
    clock_E: float = 1.0
    clock_path: str = ""
    seed: int = 7
    tolerance: str = "default"

    # dotted key <-> field name
    KEYS = {
        "hbar": "hbar",
        "energy.eps_max": "eps_max", "energy.n": "n",
        "time.tau_min": "tau_min", "time.tau_max": "tau_max", "time.m": "m",
        "state.kind": "state_kind", "state.beta": "state_beta",
        "state.a": "state_a", "state.b": "state_b", "state.mu": "state_mu",
        "state.sigma": "state_sigma", "state.path": "state_path",
        "clock.kind": "clock_kind", "clock.lambda": "clock_lambda",
        "clock.E": "clock_E", "clock.path": "clock_path",
        "seed": "seed", "tolerance": "tolerance",
    }

    # --- text form ---------------------------------------------------------
    def set(self, key: str, value: str) -> None:
        key = key.strip()
        if key not in self.KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        name = self.KEYS[key]
        kind = {f.name: f.type for f in fields(self)}[name]
        value = value.strip()
        try:
            if kind == "int":
                conv = int(value)
            elif kind == "float":
                conv = float(value)
            else:
                conv = value
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from None
        setattr(self, name, conv)

    @classmethod
    def parse(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        cfg = dataclasses.replace(base) if base is not None else cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
            k, v = line.split("=", 1)
            cfg.set(k, v)
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.parse(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None

    def dumps(self) -> str:
        lines = []
        for key, name in self.KEYS.items():
            v = getattr(self, name)
            lines.append(f"{key}={v!r}" if isinstance(v, float) else f"{key}={v}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {key: getattr(self, name) for key, name in self.KEYS.items()}

    # --- validation and construction ------------------------------------------
    def validate(self) -> "ExperimentConfig":
        if not self.state_kind:
            raise ConfigError("state.kind is empty")
        if self.state_kind not in STATE_KINDS:
            raise ConfigError(f"state.kind must be one of {STATE_KINDS}, got {self.state_kind!r}")
        if self.clock_kind not in CLOCK_KINDS:
            raise ConfigError(f"clock.kind must be one of {CLOCK_KINDS}, got {self.clock_kind!r}")
        if self.tolerance not in PROFILES:
            raise ConfigError(f"tolerance must be one of {PROFILES}, got {self.tolerance!r}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        try:
            self.params(), self.energy_grid(), self.time_grid()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def params(self) -> PhysicsParams:
        return PhysicsParams(self.hbar)

    def energy_grid(self) -> EnergyGrid:
        return EnergyGrid(self.eps_max, self.n)

    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.tau_min, self.tau_max, self.m)

    def state_spec(self):
        k = self.state_kind
        if k == "exp":
            return Exponential(self.state_beta)
        if k == "indicator":
            return Indicator(self.state_a, self.state_b)
        if k == "gauss":
            return Gauss(self.state_mu, self.state_sigma)
        if k == "file":
            if not self.state_path:
                raise ConfigError("state.kind=file needs state.path")
            return FromFile(self.state_path)
        raise ConfigError(f"state.kind must be one of {STATE_KINDS}, got {k!r}")

    def state(self):
        try:
            return make_energy_state(self.state_spec(), self.energy_grid(), self.params())
        except ConfigError:
            raise
        except (ValueError, OSError) as exc:
            raise ConfigError(f"state: {exc}") from None

    def clock(self, **override):
        from .clock import ExponentialClock, TabulatedClock, TruncatedExponentialClock

        kind = override.get("kind", self.clock_kind)
        lam = override.get("lam", self.clock_lambda)
        E = override.get("E", self.clock_E)
        params = override.get("params", self.params())
        try:
            if kind == "a":
                return ExponentialClock(lam, params)
            if kind == "b":
                return TruncatedExponentialClock(lam, E, params)
            if kind == "tabulated":
                if not self.clock_path:
                    raise ConfigError("clock.kind=tabulated needs clock.path")
                return TabulatedClock.from_csv(self.clock_path, params)
        except ConfigError:
            raise
        except (ValueError, OSError) as exc:
            raise ConfigError(f"clock: {exc}") from None
        raise ConfigError(f"clock.kind must be one of {CLOCK_KINDS}, got {kind!r}")

