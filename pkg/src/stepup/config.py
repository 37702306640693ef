"""Hierarchical run configuration, loaded from YAML.

The shipped ``data/default_config.yaml`` documents every key and its units.
User files override any subset of keys; unknown keys raise, so typos fail
loudly instead of silently training with defaults.
"""

import copy
from importlib import resources

import yaml


class ConfigError(ValueError):
    pass


class Config:
    """Read-only attribute/item view over a nested dict."""

    def __init__(self, data: dict):
        object.__setattr__(self, "_data", data)

    def __getattr__(self, key):
        try:
            value = self._data[key]
        except KeyError:
            raise AttributeError(f"no config key {key!r}") from None
        return Config(value) if isinstance(value, dict) else value

    def __getitem__(self, key):
        return getattr(self, key)

    def __setattr__(self, key, value):
        raise TypeError("Config is read-only; use replace()")

    def __contains__(self, key):
        return key in self._data

    def replace(self, **overrides) -> "Config":
        """New Config with top-level keys of this node replaced."""
        data = copy.deepcopy(self._data)
        for key, value in overrides.items():
            if key not in data:
                raise ConfigError(f"unknown config key {key!r}")
            data[key] = value._data if isinstance(value, Config) else value
        return Config(data)

    def to_dict(self) -> dict:
        return copy.deepcopy(self._data)

    def __repr__(self):
        return f"Config({self._data!r})"


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{here!r} must be a mapping")
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = value
    return out


def default_config_text() -> str:
    return resources.files("stepup.data").joinpath("default_config.yaml").read_text()


def default_config() -> Config:
    return Config(yaml.safe_load(default_config_text()))


def load_config(path=None) -> Config:
    """Defaults overlaid with the YAML file at ``path`` (if given)."""
    base = yaml.safe_load(default_config_text())
    if path is None:
        return Config(base)
    with open(path) as fh:
        user = yaml.safe_load(fh) or {}
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return Config(_merge(base, user))
