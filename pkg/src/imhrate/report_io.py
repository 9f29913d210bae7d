"""CSV/JSON writers with reproducibility headers.

Every output starts with '#'-prefixed metadata (tool version, exact command
line, seed). No timestamps: the same command with the same seed must produce
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__version__ = "0.1.0"
TOOL = "imhrate"


def meta_lines(command: str, seed=None) -> list[str]:
    lines = [f"# {TOOL} {__version__}", f"# command: {command}"]
    if seed is not None:
        lines.append(f"# seed: {seed}")
    return lines


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path, names, rows, command: str, seed=None) -> Path:
    path = Path(path)
    out = meta_lines(command, seed)
    out.append(",".join(names))
    for row in rows:
        out.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(out) + "\n")
    return path


def write_json(path, payload: dict, command: str, seed=None) -> Path:
    path = Path(path)
    doc = {
        "meta": {"tool": f"{TOOL} {__version__}", "command": command,
                 **({"seed": seed} if seed is not None else {})},
        **payload,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
