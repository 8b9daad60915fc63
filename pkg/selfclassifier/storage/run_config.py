"""Flat ``key = value`` run configuration files."""

from pathlib import Path
from typing import Dict

from selfclassifier.exceptions import ConfigurationError
from selfclassifier.schemas.config import RunConfig


def parse_flat(text: str, source: str = "<string>") -> Dict[str, str]:
    """
    Parse flat key = value lines.

    Blank lines and ``#`` comments (full-line or trailing) are skipped.

    Raises:
        ConfigurationError: On a line without '=' or a duplicated key
    """
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{number}: empty key")
        if key in values:
            raise ConfigurationError(f"{source}:{number}: duplicate key {key!r}")
        values[key] = value
    return values


def load_run_config(path: str | Path) -> RunConfig:
    """Read and validate a run config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    values = parse_flat(path.read_text(encoding="utf-8"), source=str(path))
    # Empty values mean "use the default" (e.g. data_path =)
    return RunConfig.from_flat({key: value for key, value in values.items() if value != ""})


def _format(value) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(str(item) for item in value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def dump_run_config(cfg: RunConfig) -> str:
    """Render cfg as a flat file that load_run_config reads back to an equal config."""
    return "".join(f"{key} = {_format(value)}\n" for key, value in cfg.to_flat().items())


def write_run_config(cfg: RunConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_run_config(cfg), encoding="utf-8")
    return path
