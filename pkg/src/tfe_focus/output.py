"""Deterministic CSV/JSON writers with the run configuration embedded."""

import json
import math
import os
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import __version__

OUT_DIR_ENV = "TFE_FOCUS_OUT"


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "."))


def fmt(value) -> str:
    """17 significant digits for floats; blanks for None; text otherwise."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def jsonable(obj: Any):
    """Recursively turn numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Path):
        return str(obj)
    return obj


def header_lines(command: str, config: Mapping[str, Any]) -> list:
    lines = [f"# tfe_focus {__version__}", f"# command: {command}"]
    for key in sorted(config):
        lines.append(f"# {key} = {json.dumps(jsonable(config[key]), sort_keys=True)}")
    return lines


def write_csv(path, command: str, config: Mapping[str, Any], columns: Sequence[str],
              rows: Iterable[Sequence], extra_header: Optional[Sequence[str]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = header_lines(command, config)
    for line in extra_header or ():
        lines.append(f"# {line}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path, command: str, config: Mapping[str, Any], results: Any,
               diagnostics: Optional[Mapping[str, Any]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "config": jsonable(dict(config, command=command, version=__version__)),
        "results": jsonable(results),
        "diagnostics": jsonable(diagnostics or {}),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def write_manifest(path, entries: Sequence[Mapping[str, Any]]) -> Path:
    """Plot manifest: one entry per figure-ready data file with its axis columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"version": __version__, "plots": jsonable(list(entries))},
                               indent=2, sort_keys=True) + "\n")
    return path


def write_trajectory(path, traj, config: Mapping[str, Any], command: str = "trajectory") -> Path:
    """Radial trajectory table ``y, f, df, lap, flux, log_scale`` (scaled columns)."""
    return write_csv(path, command, config, traj.COLUMNS, traj.table().tolist(),
                     extra_header=["physical columns are the stored ones times exp(log_scale)"])


def read_config_file(path) -> dict:
    """Read ``key = value`` lines (``#`` comments) or a JSON object.

    Values are parsed as JSON when possible (numbers, lists, booleans) and
    kept as strings otherwise. Dashes in keys become underscores.
    """
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                raw[key] = json.loads(value)
            except json.JSONDecodeError:
                raw[key] = value
    return {k.replace("-", "_"): v for k, v in raw.items()}
