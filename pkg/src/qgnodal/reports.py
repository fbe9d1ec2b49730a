"""Deterministic report serialization.

Floats are rendered with 17 significant digits so written values round-trip
exactly; dictionaries keep insertion order; files are written atomically
(temp file + rename) so a failing command never leaves a partial artifact.
"""
from __future__ import annotations

import os
import tempfile
from typing import Any, Iterable, Sequence


def fmt_float(x: float) -> str:
    x = float(x)
    if x != x or x in (float("inf"), float("-inf")):
        # inf appears only where a minimum over an empty set is reported
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return format(x, ".17g")


def _emit(obj: Any, parts: list, indent: int, step: int) -> None:
    pad = " " * indent
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(fmt_float(obj))
    elif isinstance(obj, str):
        parts.append(_quote(obj))
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        inner = " " * (indent + step)
        for i, (k, v) in enumerate(obj.items()):
            parts.append(inner)
            parts.append(_quote(str(k)))
            parts.append(": ")
            _emit(v, parts, indent + step, step)
            parts.append(",\n" if i + 1 < len(obj) else "\n")
        parts.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            parts.append("[]")
            return
        simple = all(isinstance(v, (int, float, str, bool)) or v is None for v in seq)
        if simple and len(seq) <= 8:
            parts.append("[")
            for i, v in enumerate(seq):
                _emit(v, parts, indent, step)
                if i + 1 < len(seq):
                    parts.append(", ")
            parts.append("]")
            return
        parts.append("[\n")
        inner = " " * (indent + step)
        for i, v in enumerate(seq):
            parts.append(inner)
            _emit(v, parts, indent + step, step)
            parts.append(",\n" if i + 1 < len(seq) else "\n")
        parts.append(pad + "]")
    else:
        try:
            import numpy as np
            if isinstance(obj, np.integer):
                parts.append(str(int(obj)))
                return
            if isinstance(obj, np.floating):
                parts.append(fmt_float(float(obj)))
                return
            if isinstance(obj, np.ndarray):
                _emit(obj.tolist(), parts, indent, step)
                return
        except ImportError:
            pass
        raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _quote(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def dumps_json(obj: Any, indent: int = 2) -> str:
    parts: list = []
    _emit(obj, parts, 0, indent)
    parts.append("\n")
    return "".join(parts)


def write_text(path: str, text: str) -> str:
    """Atomically write ``text`` to ``path`` and return the path."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, bool):
                cells.append("true" if cell else "false")
            elif isinstance(cell, float):
                cells.append(fmt_float(cell))
            elif isinstance(cell, int):
                cells.append(str(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    return write_text(path, csv_text(header, rows))
