"""Simulation configuration: dataclass, validation and the flat ``key = value`` file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .sphere import Mode

__all__ = ["SimConfig", "ConfigError", "parse_config_text", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration; ``fields`` names the offending keys."""

    def __init__(self, fields, message):
        self.fields = tuple([fields] if isinstance(fields, str) else fields)
        super().__init__(f"{', '.join(self.fields)}: {message}")


def _floats(value):
    if isinstance(value, str):
        return tuple(float(v) for v in value.replace(",", " ").split())
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(float(v) for v in value)


def _ints(value):
    if isinstance(value, str):
        return tuple(int(v) for v in value.replace(",", " ").split())
    return tuple(int(v) for v in value)


def _bool(value):
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    return bool(value)


def _modes(value):
    items = value.replace(",", " ").split() if isinstance(value, str) else value
    return tuple(Mode.parse(m) for m in items)


def _rate(value):
    return Fraction(value).limit_denominator(16)


@dataclass(frozen=True)
class SimConfig:
    """One simulated system.  Subchannel indices in ``b_p``/``b_n`` are 0-based.

    ``exh_max_candidates`` bounds the exhaustive engine: above it, the EXH
    multiplication count comes from the closed form and EXH decoding is
    skipped (a single literal metric evaluation is still run as a check).
    """

    n_t: int = 2
    n_r: int = 2
    S: int = 2
    P: int = 2
    M: int = 2
    rate: Fraction = Fraction(2, 3)
    precoder: str | None = None
    b_p: tuple | None = None
    b_n: tuple | None = None
    snr_db: tuple = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    frames: int = 200
    K: int = 1000
    modes: tuple = (Mode.EXH, Mode.CSD, Mode.PSI)
    seed: int = 0
    count_preprocessing: bool = False
    exh_max_candidates: int = 1 << 20
    workers: int = 1
    interleave: bool = True

    FIELD_TYPES = {
        "n_t": int, "n_r": int, "S": int, "P": int, "M": int, "rate": _rate,
        "precoder": str, "b_p": _ints, "b_n": _ints, "snr_db": _floats, "frames": int,
        "K": int, "modes": _modes, "seed": int, "count_preprocessing": _bool,
        "exh_max_candidates": int, "workers": int, "interleave": _bool,
    }
    ALIASES = {"nt": "n_t", "nr": "n_r", "bp": "b_p", "bn": "b_n", "snr": "snr_db",
               "k": "K", "s": "S", "p": "P", "m": "M"}

    def __post_init__(self):
        for name, conv in self.FIELD_TYPES.items():
            value = getattr(self, name)
            if value is None:
                continue
            try:
                object.__setattr__(self, name, conv(value))
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise ConfigError(name, f"cannot parse {value!r} ({exc})") from None
        if self.b_p is None:
            object.__setattr__(self, "b_p", tuple(range(self.P)))
        if self.b_n is None:
            object.__setattr__(self, "b_n", tuple(v for v in range(self.S) if v not in self.b_p))
        self.validate()

    def validate(self):
        if self.n_t < 1 or self.n_r < 1:
            raise ConfigError(("n_t", "n_r"), "antenna counts must be >= 1")
        if not 1 <= self.S <= min(self.n_t, self.n_r):
            raise ConfigError("S", f"must satisfy 1 <= S <= min(n_t, n_r) = {min(self.n_t, self.n_r)}")
        if not 1 <= self.P <= self.S:
            raise ConfigError("P", f"must satisfy 1 <= P <= S = {self.S}")
        if self.M < 2 or self.M % 2:
            raise ConfigError("M", "must be a positive even integer")
        if len(self.b_p) != self.P or len(self.b_n) != self.S - self.P or \
                sorted(self.b_p + self.b_n) != list(range(self.S)) or \
                list(self.b_p) != sorted(set(self.b_p)) or list(self.b_n) != sorted(set(self.b_n)):
            raise ConfigError(("b_p", "b_n"), "must be increasing and partition 0..S-1 "
                              "with P precoded entries")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ConfigError("snr_db", "grid must be strictly increasing")
        if self.frames < 0:
            raise ConfigError("frames", "must be >= 0")
        if self.K < 1:
            raise ConfigError("K", "must be >= 1")
        if not self.modes:
            raise ConfigError("modes", "at least one mode is required")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        from .coding import PUNCTURE_PATTERNS
        if self.rate not in PUNCTURE_PATTERNS:
            raise ConfigError("rate", f"unsupported code rate {self.rate}")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "SimConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            name = cls.ALIASES.get(key, key) if key not in known else key
            if name not in known:
                raise ConfigError(key, "unknown configuration key")
            kwargs[name] = value
        return cls(**kwargs)

    def label(self) -> str:
        return f"{self.n_t}x{self.n_r} S={self.S} P={self.P} {1 << self.M}-QAM R={self.rate}"


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def load_config(path, overrides: dict | None = None) -> SimConfig:
    mapping = parse_config_text(Path(path).read_text()) if path else {}
    mapping.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return SimConfig.from_mapping(mapping)
