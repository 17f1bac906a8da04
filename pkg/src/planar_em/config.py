"""Flat key-value config grammar shared by scene files and sweep plans.

One entry per line::

    stackup.eps_r = 3.660000
    shape.0.layer = TOP_METAL

Keys are dotted identifiers; the dotted prefix acts as the section.
``#`` starts a comment line.  Values are raw strings; typed access goes
through the ``get_*`` helpers.  The EBNF lives in docs/config_grammar.md.
"""

from __future__ import annotations

import re

__all__ = ["ConfigError", "Config", "parse_config", "format_config"]

_KEY_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_\-]*(\.[A-Za-z0-9_][A-Za-z0-9_\-]*)*$")


class ConfigError(ValueError):
    """Malformed config text or a missing/invalid key."""


class Config(dict):
    """Ordered mapping of dotted keys to raw string values."""

    def section(self, prefix: str) -> "Config":
        """Entries under ``prefix.``, with the prefix stripped."""
        p = prefix + "."
        return Config((k[len(p):], v) for k, v in self.items() if k.startswith(p))

    def subsections(self, prefix: str) -> list[str]:
        """Distinct next-level names under ``prefix``, in first-seen order."""
        seen: dict[str, None] = {}
        for k in self.section(prefix):
            seen.setdefault(k.split(".", 1)[0], None)
        return list(seen)

    def _require(self, key):
        if key not in self:
            raise ConfigError(f"missing key: {key}")
        return self[key]

    def get_str(self, key, default=None):
        if key not in self and default is not None:
            return default
        return self._require(key)

    def get_float(self, key, default=None):
        if key not in self and default is not None:
            return float(default)
        raw = self._require(key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None

    def get_int(self, key, default=None):
        if key not in self and default is not None:
            return int(default)
        raw = self._require(key)
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None

    def get_bool(self, key, default=None):
        if key not in self and default is not None:
            return bool(default)
        raw = self._require(key).lower()
        if raw in ("true", "yes", "1", "on"):
            return True
        if raw in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")

    def get_list(self, key, sep=","):
        raw = self._require(key)
        return [item.strip() for item in raw.split(sep) if item.strip()]


def parse_config(text: str) -> Config:
    cfg = Config()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: invalid key {key!r}")
        if key in cfg:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        cfg[key] = value.strip()
    return cfg


def format_config(entries, header: list[str] | None = None) -> str:
    """Render (key, value) pairs; keys keep the given order."""
    lines = [f"# {h}" for h in header or []]
    items = entries.items() if hasattr(entries, "items") else entries
    for key, value in items:
        if not _KEY_RE.match(key):
            raise ConfigError(f"invalid key {key!r}")
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
