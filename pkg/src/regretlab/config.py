"""Tolerances and the flat key=value configuration format.

Scenario files are plain text, one ``key = value`` pair per line, with dotted
keys for sections (``space.kind = box``). ``#`` starts a comment. The format
is deliberately flat so configs diff cleanly and echo back byte-for-byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Environment variable naming the root directory for all run outputs.
OUTPUT_ROOT_ENV = "REGRETLAB_OUT"
DEFAULT_OUTPUT_ROOT = "runs"


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances used across solvers and consistency checks.

    gradient:     target for solver (projected) gradient residuals.
    stationarity: residual a solve must reach before its result is usable;
                  a line search may stall between the two without failing.
    oracle:       agreement required between independent optimization routes.
    identity:     slack for algebraic identities that should hold to rounding.
    """

    gradient: float = 1e-10
    stationarity: float = 1e-8
    oracle: float = 1e-6
    identity: float = 1e-12


def output_root() -> str:
    return os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)


def parse_flat_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into an ordered dict of strings.

    Raises ConfigError on malformed lines or duplicate keys.
    """
    out: dict[str, str] = {}
    problems: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append((f"line {lineno}", f"expected 'key = value', got {raw!r}"))
            continue
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            problems.append((f"line {lineno}", "empty key"))
            continue
        if key in out:
            problems.append((key, "duplicate key"))
            continue
        out[key] = value
    if problems:
        raise ConfigError(problems)
    return out


def load_flat_config(path: str) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_flat_config(fh.read())


def format_flat_config(items: dict[str, str]) -> str:
    """Render a flat config back to text (the config echo)."""
    return "".join(f"{k} = {v}\n" for k, v in items.items())


class ConfigView:
    """Typed access to a flat config with collected error reporting.

    Getters record problems instead of raising immediately; call
    :meth:`raise_if_problems` once all fields were read so a bad file
    reports every offending key in one pass.
    """

    def __init__(self, items: dict[str, str]):
        self.items = dict(items)
        self.problems: list[tuple[str, str]] = []
        self._seen: set[str] = set()

    def error(self, key: str, message: str) -> None:
        self.problems.append((key, message))

    def raise_if_problems(self) -> None:
        if self.problems:
            raise ConfigError(self.problems)

    def has(self, key: str) -> bool:
        return key in self.items

    def keys_with_prefix(self, prefix: str) -> list[str]:
        return [k for k in self.items if k.startswith(prefix)]

    def mark_consumed(self, key: str) -> None:
        self._seen.add(key)

    def unconsumed(self) -> list[str]:
        return [k for k in self.items if k not in self._seen]

    def get_str(self, key: str, default: str | None = None, choices=None) -> str | None:
        if key not in self.items:
            if default is None and choices is not None:
                return None
            return default
        self._seen.add(key)
        val = self.items[key]
        if choices is not None and val not in choices:
            self.error(key, f"expected one of {sorted(choices)}, got {val!r}")
            return default
        return val

    def get_float(self, key: str, default: float | None = None) -> float | None:
        if key not in self.items:
            return default
        self._seen.add(key)
        try:
            return float(self.items[key])
        except ValueError:
            self.error(key, f"expected a number, got {self.items[key]!r}")
            return default

    def get_int(self, key: str, default: int | None = None) -> int | None:
        if key not in self.items:
            return default
        self._seen.add(key)
        try:
            return int(self.items[key])
        except ValueError:
            self.error(key, f"expected an integer, got {self.items[key]!r}")
            return default

    def get_bool(self, key: str, default: bool | None = None) -> bool | None:
        if key not in self.items:
            return default
        self._seen.add(key)
        val = self.items[key].lower()
        if val in ("1", "true", "yes", "on"):
            return True
        if val in ("0", "false", "no", "off"):
            return False
        self.error(key, f"expected a boolean, got {self.items[key]!r}")
        return default

    def get_vector(self, key: str, default=None) -> np.ndarray | None:
        """Parse a ``;``-joined vector of floats."""
        if key not in self.items:
            return default
        self._seen.add(key)
        raw = self.items[key]
        try:
            return np.array([float(p) for p in raw.split(";") if p.strip() != ""], dtype=float)
        except ValueError:
            self.error(key, f"expected ';'-joined numbers, got {raw!r}")
            return default

    def get_int_list(self, key: str, default=None) -> list[int] | None:
        """Parse a whitespace- or comma-separated list of integers."""
        if key not in self.items:
            return default
        self._seen.add(key)
        raw = self.items[key].replace(",", " ")
        try:
            return [int(p) for p in raw.split()]
        except ValueError:
            self.error(key, f"expected integers, got {self.items[key]!r}")
            return default
