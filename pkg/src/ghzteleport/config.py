"""Flat ``dotted.key=value`` run configuration with strict validation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple:
    parts = [t for t in text.replace(";", ",").split(",") if t.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(t) for t in parts)


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        text = text.strip()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


# key -> (parser, default)
KEYS: dict[str, tuple[Callable[[str], object], object]] = {
    "grid.n_points": (int, 64),
    "grid.extent": (_finite, 16.0),
    "resource.mode": (_choice("ideal", "finite"), "ideal"),
    "resource.r": (_finite, 1.0),
    "input.profile": (_choice("gaussian-packet", "random-smooth"), "gaussian-packet"),
    "input.center": (_finite, 0.0),
    "input.width": (_finite, 1.0),
    "input.q": (_finite, 0.0),
    "input.seed": (int, 0),
    "seeds.base": (int, 0),
    "seeds.count": (int, 10),
    "sweep.parameter": (_choice("r", "n_points"), "r"),
    "sweep.values": (_floats, (0.5, 1.0, 2.0, 3.0)),
    "sweep.protocol": (_choice("entangled", "single"), "entangled"),
    "output.format": (_choice("csv", "json"), "json"),
    "output.path": (str, ""),
    "protocol.basis": (_choice("pi123", "triple"), "pi123"),
    "protocol.swap_receivers": (_bool, False),
    "run.workers": (int, 1),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    def as_dict(self) -> dict:
        out = {}
        for k, v in self.values.items():
            out[k] = list(v) if isinstance(v, tuple) else v
        return out

    def with_overrides(self, pairs: Iterable[tuple[str, str]]) -> "RunConfig":
        vals = dict(self.values)
        for key, text in pairs:
            vals[key] = _parse_value(key, text)
        cfg = RunConfig(vals)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        v = self.values
        n = v["grid.n_points"]
        if n < 8 or n & (n - 1):
            raise ConfigError(f"grid.n_points must be a power of two >= 8, got {n}")
        if v["grid.extent"] <= 0:
            raise ConfigError(f"grid.extent must be positive, got {v['grid.extent']}")
        if v["resource.r"] < 0:
            raise ConfigError("resource.r must be non-negative")
        if v["input.width"] <= 0:
            raise ConfigError("input.width must be positive")
        if v["seeds.count"] < 1:
            raise ConfigError("seeds.count must be at least 1")
        if v["seeds.base"] < 0 or v["input.seed"] < 0:
            raise ConfigError("seeds must be non-negative")
        if v["run.workers"] < 1:
            raise ConfigError("run.workers must be at least 1")
        if v["sweep.parameter"] == "n_points":
            for x in v["sweep.values"]:
                if not float(x).is_integer() or int(x) < 8 or int(x) & (int(x) - 1):
                    raise ConfigError(f"sweep over n_points needs powers of two >= 8, got {x}")
        elif any(x < 0 for x in v["sweep.values"]):
            raise ConfigError("sweep over r needs non-negative values")


def _parse_value(key: str, text: str):
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}")
    try:
        return KEYS[key][0](text.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_pairs(text: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def parse_override(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, value = item.split("=", 1)
    return key.strip(), value.strip()


def default_config() -> RunConfig:
    return RunConfig({k: d for k, (_, d) in KEYS.items()})


def load_config(path: str | Path | None = None, overrides: Iterable[tuple[str, str]] = ()) -> RunConfig:
    pairs = parse_pairs(Path(path).read_text()) if path else []
    return default_config().with_overrides(list(pairs) + list(overrides))


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in cfg.values.items():
        if isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        elif isinstance(v, bool):
            v = str(v).lower()
        lines.append(f"{k}={v}")
    return "\n".join(lines) + "\n"
