"""Flat ``key=value`` config files; command-line flags take precedence."""
from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    pass


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped.

    Keys are normalized to use underscores, so ``sigma2``, ``tuned-stepsize``
    and ``tuned_stepsize`` all work.
    """
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(value: str, kind):
    if kind is bool:
        v = value.lower()
        if v in _TRUE:
            return True
        if v in _FALSE:
            return False
        raise ConfigError(f"not a boolean: {value!r}")
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"cannot read {value!r} as {kind.__name__}") from None


def merge(cli: dict, file_values: dict[str, str], schema: dict, defaults: dict) -> dict:
    """CLI values that are not ``None`` win, then the config file, then ``defaults``.

    ``schema`` maps every accepted key to its type; unknown config keys are an error.
    """
    unknown = set(file_values) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = dict(defaults)
    for k, v in file_values.items():
        out[k] = _convert(v, schema[k])
    for k, v in cli.items():
        if k in schema and v is not None:
            out[k] = v
    return out
