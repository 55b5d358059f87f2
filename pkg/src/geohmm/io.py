"""Model, observation and report files.

Models and reports are JSON documents. Observation files are plain text, one
point per line (``re,im`` on the disk, ``a,b,c`` for ``[[a, b], [b, c]]`` on
SPD(2)), optionally followed by a one-based state label, with a ``#`` header
line carrying ``key=value`` metadata.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import GeohmmError
from .hmm import HmmModel
from .learner import LearnReport
from .manifold import ManifoldKind, get_manifold

FLOAT_FMT = "%.17g"


class DataError(GeohmmError, ValueError):
    """Malformed input file."""


def _read_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: line {exc.lineno}: {exc.msg}") from exc


def _write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def save_model(path, model: HmmModel):
    _write_json(path, model.to_dict())


def load_model(path) -> HmmModel:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise DataError(f"{path}: model file must hold a JSON object")
    for key in ("manifold", "P", "pi0", "components"):
        if key not in data:
            raise DataError(f"{path}: missing field '{key}'")
    try:
        ManifoldKind(data["manifold"])
    except ValueError:
        raise DataError(f"{path}: invalid field 'manifold': {data['manifold']!r}") from None
    try:
        return HmmModel.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: invalid field 'components': {exc}") from exc
    except ValueError as exc:
        raise DataError(f"{path}: invalid model: {exc}") from exc


def save_report(path, report: LearnReport):
    _write_json(path, report.to_dict())


def load_report(path) -> LearnReport:
    data = _read_json(path)
    try:
        return LearnReport.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: invalid report: {exc!r}") from exc


def format_header(meta):
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items())


def write_observations(path, kind, observations, states=None, **meta):
    """Write one chain. ``states`` are zero-based and stored one-based."""
    kind = ManifoldKind(kind)
    coords = get_manifold(kind).to_coords(observations)
    header = {"manifold": kind.value, "length": len(coords), **meta}
    lines = [format_header(header)]
    for k, row in enumerate(coords):
        line = ",".join(FLOAT_FMT % v for v in row)
        if states is not None:
            line += ",%d" % (int(states[k]) + 1)
        lines.append(line)
    Path(path).write_text("\n".join(lines) + "\n")


def read_observations(path):
    """Parse an observation file.

    Returns ``(kind, observations, states, meta)``; ``states`` is a zero-based
    array or ``None`` when the file has no state column.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    meta = {}
    rows = []
    linenos = []
    states = []
    kind = None
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
            continue
        if kind is None:
            if "manifold" not in meta:
                raise DataError(f"{path}: line {lineno}: missing '# manifold=...' header")
            try:
                kind = ManifoldKind(meta["manifold"])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: unknown manifold {meta['manifold']!r}") from None
            width = get_manifold(kind).coord_size
        parts = line.split(",")
        if len(parts) not in (width, width + 1):
            raise DataError(f"{path}: line {lineno}: expected {width} values, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts[:width]])
            linenos.append(lineno)
            if len(parts) == width + 1:
                states.append(int(parts[width]) - 1)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: cannot parse {line!r}") from None
    if kind is None:
        raise DataError(f"{path}: no observations")
    if states and len(states) != len(rows):
        raise DataError(f"{path}: state column present on only some lines")
    manifold = get_manifold(kind)
    try:
        obs = manifold.from_coords(np.array(rows))
    except GeohmmError as exc:
        # locate the first offending row so the message can name its line
        for row, lineno in zip(rows, linenos):
            try:
                manifold.from_coords(np.array([row]))
            except GeohmmError as row_exc:
                raise DataError(f"{path}: line {lineno}: {row_exc}") from exc
        raise DataError(f"{path}: {exc}") from exc
    return kind, obs, (np.array(states) if states else None), meta
