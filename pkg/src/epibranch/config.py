"""Flat key=value run configuration.

Every command declares its options as a list of `Option`s; values come
from defaults, then an optional config file, then command-line overrides,
in that order.  The resolved mapping is echoed into every report so a run
can be reproduced from its own output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError

__all__ = ["Option", "coerce", "parse_kv_text", "render", "resolve"]

_BOOL_WORDS = {
    "true": True, "yes": True, "1": True,
    "false": False, "no": False, "0": False,
}


@dataclass(frozen=True)
class Option:
    """One typed configuration key."""

    name: str
    kind: type
    default: object
    help: str = ""


def parse_kv_text(text: str) -> dict[str, str]:
    """key=value lines; blank lines and # comments are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def coerce(name: str, raw: str, kind: type):
    if kind is bool:
        word = raw.strip().lower()
        if word not in _BOOL_WORDS:
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        return _BOOL_WORDS[word]
    try:
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: expected {kind.__name__}, got {raw!r}") from exc


def resolve(
    options: Sequence[Option],
    *,
    text: str | None = None,
    overrides: Sequence[str] = (),
) -> dict:
    """Defaults, then config-file text, then key=value override strings."""
    known = {opt.name: opt for opt in options}
    config = {opt.name: opt.default for opt in options}

    def apply(pairs: dict[str, str], source: str) -> None:
        for key, raw in pairs.items():
            if key not in known:
                names = ", ".join(sorted(known))
                raise ConfigError(f"{source}: unknown key {key!r} (known: {names})")
            config[key] = coerce(key, raw, known[key].kind)

    if text is not None:
        apply(parse_kv_text(text), "config file")
    joined = "\n".join(overrides)
    apply(parse_kv_text(joined), "command line")
    return config


def render(config: dict) -> str:
    """Sorted key=value lines; floats keep their shortest exact form."""
    return "\n".join(f"{key}={config[key]}" for key in sorted(config))
