"""Run configuration: defaults, a key=value file, ISINGSTRIP_* environment variables, then flags."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .precision import MIN_EXTENDED_DIGITS, Precision

ENV_PREFIX = "ISINGSTRIP_"
DOUBLE_ORDER_LIMIT = 9


@dataclass
class Config:
    L: int | None = None
    max_L: int = 4
    b: str = "both"
    x: float | None = None
    u: float = 0.1
    M: int | None = None
    orders: int = 9
    precision: str = "double"
    digits: int = MIN_EXTENDED_DIGITS
    tolerance: float | None = None
    seed: int = 0
    format: str = "json"
    out: str | None = None
    truncation: int = 40
    m_max: int = 10

    def __post_init__(self):
        if self.b not in ("+1", "-1", "both"):
            raise ValueError("b must be +1, -1 or both")
        if self.precision not in ("double", "extended"):
            raise ValueError("precision must be double or extended")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")
        if self.orders < 1:
            raise ValueError("orders must be >= 1")
        self.prec  # validates digits

    @property
    def prec(self) -> Precision:
        return Precision(self.precision, self.digits)

    @property
    def tol(self) -> float:
        return self.prec.default_tolerance if self.tolerance is None else self.tolerance

    @property
    def b_values(self) -> tuple[int, ...]:
        return {"+1": (1,), "-1": (-1,), "both": (1, -1)}[self.b]

    @property
    def L_values(self) -> list[int]:
        return [self.L] if self.L is not None else list(range(1, self.max_L + 1))

    @property
    def effective_orders(self) -> int:
        """Orders above 9 need extended precision; double runs are capped."""
        return self.orders if self.prec.extended else min(self.orders, DOUBLE_ORDER_LIMIT)

    def as_dict(self) -> dict:
        return asdict(self)


_TYPES = {f.name: f.type for f in fields(Config)}
_BY_LOWER = {name.lower(): name for name in _TYPES}


def _convert(name: str, raw: str):
    if name not in _TYPES:
        raise KeyError(f"unknown configuration key {name!r}")
    kind = str(_TYPES[name])
    if raw.lower() in ("none", ""):
        return None
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw


def read_config_file(path: str | Path) -> dict:
    """Lines of ``key = value``; '#' starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _BY_LOWER.get(key.replace("-", "_").lower(), key)
        out[key] = _convert(key, value)
    return out


def read_env(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX) and key != ENV_PREFIX + "CONFIG":
            name = _BY_LOWER.get(key[len(ENV_PREFIX):].lower())
            if name is None:
                raise KeyError(f"unknown environment setting {key}")
            out[name] = _convert(name, value)
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None, environ=None) -> Config:
    environ = os.environ if environ is None else environ
    values: dict = {}
    path = path or environ.get(ENV_PREFIX + "CONFIG")
    if path:
        values.update(read_config_file(path))
    values.update(read_env(environ))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return Config(**values)
