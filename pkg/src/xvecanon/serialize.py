"""Text serialization helpers: 17-significant-digit floats, JSON, atomic writes.

Floats are always emitted with 17 significant digits so that parsing the
text back yields the bit-identical IEEE-754 double.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def fmt_float(x) -> str:
    """Format a finite float with 17 significant digits."""
    return format(float(x), ".17g")


def dumps_json(obj, indent: int = 0, _level: int = 0) -> str:
    """Serialize nested dicts/lists/scalars to JSON with 17-digit floats.

    The standard json module offers no hook for float formatting, so this
    small emitter handles the closed set of types used by model files.
    """
    pad = " " * (indent * (_level + 1)) if indent else ""
    end_pad = " " * (indent * _level) if indent else ""
    sep = ",\n" if indent else ", "
    nl = "\n" if indent else ""
    if isinstance(obj, dict):
        items = [
            f"{pad}{json.dumps(str(k))}: {dumps_json(v, indent, _level + 1)}"
            for k, v in obj.items()
        ]
        return "{" + nl + sep.join(items) + nl + end_pad + "}" if items else "{}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = [f"{pad}{dumps_json(v, indent, _level + 1)}" for v in obj]
        return "[" + nl + sep.join(items) + nl + end_pad + "]" if items else "[]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
