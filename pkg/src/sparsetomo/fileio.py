"""Deterministic file output: 16-bit PGM images and fixed-format CSV tables."""

from __future__ import annotations

import csv
import dataclasses
import math
from typing import Sequence

import numpy as np

from .geometry import ParameterError

DEFAULT_WINDOW = (0.01, 0.05)


def window_to_uint16(x: np.ndarray, window: tuple[float, float] = DEFAULT_WINDOW) -> np.ndarray:
    """Map ``[lo, hi]`` linearly onto ``[0, 65535]``, clamping outside.

    Rounding is half-up: ``floor(65535 * t + 0.5)``.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ParameterError(f"window must satisfy lo < hi, got ({lo}, {hi})")
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ParameterError("image must be 2D")
    if not np.all(np.isfinite(x)):
        raise ParameterError("image values must be finite")
    t = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    return np.floor(t * 65535.0 + 0.5).astype(np.uint16)


def write_image(x: np.ndarray, path, window: tuple[float, float] = DEFAULT_WINDOW,
                ascii: bool = False) -> None:
    """Write ``x`` as a 16-bit PGM, binary (P5, big-endian) or plain text (P2)."""
    pix = window_to_uint16(x, window)
    h, w = pix.shape
    if ascii:
        lines = [f"P2\n{w} {h}\n65535\n"]
        lines += [" ".join(str(v) for v in row) + "\n" for row in pix]
        with open(path, "w", newline="\n") as fh:
            fh.writelines(lines)
    else:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
            fh.write(pix.astype(">u2").tobytes())


def read_image(path) -> np.ndarray:
    """Read back a 16-bit PGM written by :func:`write_image`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode("ascii"))
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 65535 or magic not in ("P2", "P5"):
        raise ParameterError(f"{path}: not a 16-bit PGM")
    if magic == "P5":
        body = raw[pos + 1:pos + 1 + 2 * w * h]
        return np.frombuffer(body, dtype=">u2").reshape(h, w).astype(np.uint16)
    return np.array(raw[pos:].split(), dtype=np.uint16).reshape(h, w)


def format_value(v) -> str:
    """CSV cell text: 9 significant digits for floats."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return format(v, ".9g")
    return str(v)


def write_rows(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def write_study_csv(records, path, columns: Sequence[str] | None = None) -> None:
    """Header plus one row per record, columns in a fixed order.

    Records are dataclass instances of one type. ``columns`` defaults to the
    type's ``CSV_COLUMNS`` if it has them, otherwise its fields; with an
    empty list the study-record columns are used.
    """
    from .studies import RECORD_COLUMNS

    records = list(records)
    if records:
        kinds = {type(r) for r in records}
        if len(kinds) != 1:
            raise ParameterError("records must all have the same type")
        if not dataclasses.is_dataclass(records[0]):
            raise ParameterError("records must be dataclass instances")
    if columns is None:
        if not records:
            columns = RECORD_COLUMNS
        else:
            cls = type(records[0])
            columns = getattr(cls, "CSV_COLUMNS", None) or [
                f.name for f in dataclasses.fields(cls) if f.repr]
    rows = ([getattr(r, c) for c in columns] for r in records)
    write_rows(path, columns, rows)
