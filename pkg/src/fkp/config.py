"""Line-based ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored.  Keys may use
dashes or underscores; they are normalized to underscores.
"""

from __future__ import annotations

import configparser

from .errors import FKPError

_SECTION = "run"


class ConfigError(FKPError):
    pass


def read_config(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str  # keep case: N_list must stay N_list
    try:
        parser.read_string(f"[{_SECTION}]\n{text}", source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return {k.strip().replace("-", "_"): v.strip() for k, v in parser[_SECTION].items()}


def parse_bool(text) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")
