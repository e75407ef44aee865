"""Run configuration: a single INI-style file with sections.

Seeds are mandatory wherever randomness is involved; nothing defaults to
wall-clock entropy, so reruns with the same config are reproducible.
"""

from __future__ import annotations

import configparser
import os
from typing import List, Optional

from .errors import ConfigError

_REQUIRED = object()


class RunConfig:
    """Typed access to one parsed config file."""

    def __init__(self, parser: configparser.ConfigParser, path: str):
        self._parser = parser
        self.path = path

    @classmethod
    def load(cls, path) -> "RunConfig":
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls(parser, str(path))

    def has(self, section: str, key: str) -> bool:
        return (self._parser.has_section(section)
                and self._parser.has_option(section, key)
                and self._parser.get(section, key).strip() != "")

    def _raw(self, section: str, key: str, default):
        if not self.has(section, key):
            if default is _REQUIRED:
                raise ConfigError(
                    f"{self.path}: missing required key [{section}] {key}")
            return None
        return self._parser.get(section, key).strip()

    def get_str(self, section: str, key: str, default=_REQUIRED) -> Optional[str]:
        raw = self._raw(section, key, default)
        return raw if raw is not None else (None if default is _REQUIRED else default)

    def get_int(self, section: str, key: str, default=_REQUIRED) -> Optional[int]:
        raw = self._raw(section, key, default)
        if raw is None:
            return None if default is _REQUIRED else default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(
                f"{self.path}: [{section}] {key} must be an integer, got {raw!r}"
            ) from None

    def get_float(self, section: str, key: str, default=_REQUIRED) -> Optional[float]:
        raw = self._raw(section, key, default)
        if raw is None:
            return None if default is _REQUIRED else default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(
                f"{self.path}: [{section}] {key} must be a number, got {raw!r}"
            ) from None

    def get_list(self, section: str, key: str, default=_REQUIRED) -> Optional[List[str]]:
        raw = self._raw(section, key, default)
        if raw is None:
            return None if default is _REQUIRED else default
        return [item.strip() for item in raw.split(",") if item.strip()]

    def get_int_list(self, section: str, key: str, default=_REQUIRED) -> Optional[List[int]]:
        items = self.get_list(section, key, default)
        if items is None or items is default:
            return items
        try:
            return [int(item) for item in items]
        except ValueError:
            raise ConfigError(
                f"{self.path}: [{section}] {key} must be integers") from None
