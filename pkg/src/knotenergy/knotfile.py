"""Plain-text knot files and JSON link manifests.

A knot file starts with a header line ``closed`` or ``open``, followed by one
vertex per line as comma-separated decimals, ended by a blank line or EOF.
Lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .curve import CurveError, LinkSet, PolyCurve


class KnotFileError(ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line


def parse_knot(text: str, path=None) -> PolyCurve:
    lines = text.splitlines()
    header = None
    rows = []
    dim = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if header is None:
            if not line:
                continue
            if line.lower() not in ("closed", "open"):
                raise KnotFileError(f"expected header 'closed' or 'open', got {line!r}", path, lineno)
            header = line.lower()
            continue
        if not line:
            break
        try:
            vals = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise KnotFileError(f"cannot parse vertex {line!r}", path, lineno) from None
        if dim is None:
            dim = len(vals)
            if dim < 2:
                raise KnotFileError("vertices need at least two coordinates", path, lineno)
        elif len(vals) != dim:
            raise KnotFileError(f"expected {dim} coordinates, got {len(vals)}", path, lineno)
        if not all(np.isfinite(vals)):
            raise KnotFileError("non-finite coordinate", path, lineno)
        rows.append(vals)
    if header is None:
        raise KnotFileError("missing header line", path, 1)
    try:
        return PolyCurve(np.array(rows, dtype=float), closed=header == "closed")
    except CurveError as exc:
        raise KnotFileError(str(exc), path) from None


def read_knot(path) -> PolyCurve:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise KnotFileError(f"cannot read file ({exc.strerror})", path) from None
    return parse_knot(text, path)


def format_knot(c: PolyCurve) -> str:
    out = ["closed" if c.closed else "open"]
    out += [",".join(f"{x:.17g}" for x in row) for row in c.vertices]
    return "\n".join(out) + "\n\n"


def write_knot(path, c: PolyCurve):
    Path(path).write_text(format_knot(c))


def read_link(path) -> LinkSet:
    """Read ``{"components": [paths...]}``; paths are relative to the manifest."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise KnotFileError(f"cannot read file ({exc.strerror})", path) from None
    except json.JSONDecodeError as exc:
        raise KnotFileError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    comps = doc.get("components") if isinstance(doc, dict) else None
    if not isinstance(comps, list) or not comps:
        raise KnotFileError("link manifest needs a non-empty 'components' list", path)
    curves = [read_knot(path.parent / p) for p in comps]
    try:
        return LinkSet(tuple(curves))
    except CurveError as exc:
        raise KnotFileError(str(exc), path) from None


def write_link(path, link: LinkSet, stem: str = "component"):
    path = Path(path)
    names = []
    for k, comp in enumerate(link.components):
        name = f"{stem}{k}.knot"
        write_knot(path.parent / name, comp)
        names.append(name)
    path.write_text(json.dumps({"components": names}, indent=2) + "\n")
