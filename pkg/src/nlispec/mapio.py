"""Reading and writing angular-wavelength intensity maps.

Three on-disk forms, chosen by file suffix:

  .nlm   native container: the ASCII magic line ``NLIMAP1``, an 8-byte
         little-endian header length, a UTF-8 JSON header holding both
         axes and free-form metadata, then the intensity as row-major
         little-endian float64.  Lossless and compact.

  .csv   text form: ``# meta: <json>`` comment, a header row with the
         angle axis, then one row per wavelength.  All floats printed
         with %.17g, so values survive the round trip bit-exactly.

  .pgm   16-bit binary PGM for eyeballing in an image viewer, with a
         ``<name>.pgm.json`` sidecar carrying axes, metadata and the
         affine intensity scale.  Quantized to 1/65535 of the range.

All writes are atomic (temp file in the destination directory, then
rename), so a crash never leaves a half-written map behind.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import AxisMismatchError, MapFormatError
from .interferometer import MapAxes

_MAGIC = b"NLIMAP1\n"
_PGM_MAXVAL = 65535


@dataclass(frozen=True)
class IntensityMap:
    """One detected map: axes, intensity, and how it was made."""

    axes: MapAxes
    intensity: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.intensity, dtype=float)
        if arr.shape != self.axes.shape:
            raise ValueError(
                f"intensity shape {arr.shape} != axes shape {self.axes.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("intensity must be finite")
        object.__setattr__(self, "intensity", arr)


def require_same_axes(a: IntensityMap, b: IntensityMap, what: str = "maps"):
    if not a.axes.close_to(b.axes):
        raise AxisMismatchError(f"{what} do not share wavelength/angle axes")


def _atomic_write_bytes(path, payload: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header_dict(m: IntensityMap) -> dict:
    return {
        "rows": int(m.axes.shape[0]),
        "cols": int(m.axes.shape[1]),
        "wavelength_nm": m.axes.wavelength_nm.tolist(),
        "angle_rad": m.axes.angle_rad.tolist(),
        "meta": m.meta,
    }


def _axes_from_header(head: dict, source) -> MapAxes:
    try:
        axes = MapAxes(np.asarray(head["wavelength_nm"], dtype=float),
                       np.asarray(head["angle_rad"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise MapFormatError(f"{source}: bad axes in header: {exc}") from None
    if axes.shape != (head.get("rows"), head.get("cols")):
        raise MapFormatError(f"{source}: header rows/cols disagree with axes")
    return axes


# ---------------------------------------------------------------- native

def _save_native(path, m: IntensityMap):
    header = json.dumps(_header_dict(m)).encode("utf-8")
    payload = (_MAGIC + struct.pack("<Q", len(header)) + header
               + m.intensity.astype("<f8").tobytes(order="C"))
    _atomic_write_bytes(path, payload)


def _load_native(path) -> IntensityMap:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(_MAGIC):
        raise MapFormatError(f"{path}: bad magic; not a native map file")
    off = len(_MAGIC)
    if len(blob) < off + 8:
        raise MapFormatError(f"{path}: truncated header length")
    (hlen,) = struct.unpack_from("<Q", blob, off)
    off += 8
    if len(blob) < off + hlen:
        raise MapFormatError(f"{path}: truncated header")
    try:
        head = json.loads(blob[off:off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MapFormatError(f"{path}: unreadable header: {exc}") from None
    off += hlen
    axes = _axes_from_header(head, path)
    expected = axes.shape[0] * axes.shape[1] * 8
    body = blob[off:]
    if len(body) != expected:
        raise MapFormatError(
            f"{path}: expected {expected} data bytes, found {len(body)}"
        )
    data = np.frombuffer(body, dtype="<f8").reshape(axes.shape)
    return IntensityMap(axes, data.astype(float), head.get("meta", {}))


# ---------------------------------------------------------------- csv

def _save_csv(path, m: IntensityMap):
    lines = ["# nlispec map 1", "# meta: " + json.dumps(m.meta)]
    angles = ",".join(f"{a:.17g}" for a in m.axes.angle_rad)
    lines.append("wavelength_nm," + angles)
    for lam, row in zip(m.axes.wavelength_nm, m.intensity):
        lines.append(f"{lam:.17g}," + ",".join(f"{v:.17g}" for v in row))
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _load_csv(path) -> IntensityMap:
    meta = {}
    rows, lams = [], []
    angle = None
    with open(path, encoding="utf-8") as fh:
        for ln, text in enumerate(fh, start=1):
            text = text.strip()
            if not text:
                continue
            if text.startswith("#"):
                body = text.lstrip("#").strip()
                if body.startswith("meta:"):
                    try:
                        meta = json.loads(body[5:])
                    except json.JSONDecodeError as exc:
                        raise MapFormatError(
                            f"{path}:{ln}: bad meta json: {exc}"
                        ) from None
                continue
            cells = text.split(",")
            if angle is None:
                if cells[0] != "wavelength_nm":
                    raise MapFormatError(
                        f"{path}:{ln}: expected header row, got {cells[0]!r}"
                    )
                angle = np.array([float(c) for c in cells[1:]])
                continue
            try:
                values = [float(c) for c in cells]
            except ValueError as exc:
                raise MapFormatError(f"{path}:{ln}: {exc}") from None
            if len(values) != angle.size + 1:
                raise MapFormatError(
                    f"{path}:{ln}: expected {angle.size + 1} cells, "
                    f"got {len(values)}"
                )
            lams.append(values[0])
            rows.append(values[1:])
    if angle is None or not rows:
        raise MapFormatError(f"{path}: no data rows")
    try:
        axes = MapAxes(np.array(lams), angle)
    except ValueError as exc:
        raise MapFormatError(f"{path}: {exc}") from None
    return IntensityMap(axes, np.array(rows), meta)


# ---------------------------------------------------------------- pgm

def _save_pgm(path, m: IntensityMap):
    lo = float(m.intensity.min())
    hi = float(m.intensity.max())
    span = hi - lo
    if span == 0.0:
        levels = np.zeros(m.axes.shape, dtype=">u2")
    else:
        norm = (m.intensity - lo) / span
        levels = np.rint(norm * _PGM_MAXVAL).astype(">u2")
    rows, cols = m.axes.shape
    header = f"P5\n{cols} {rows}\n{_PGM_MAXVAL}\n".encode("ascii")
    _atomic_write_bytes(path, header + levels.tobytes(order="C"))
    side = dict(_header_dict(m), intensity_offset=lo,
                intensity_span=span, maxval=_PGM_MAXVAL)
    _atomic_write_bytes(str(path) + ".json",
                        json.dumps(side, indent=1).encode("utf-8"))


def _load_pgm(path) -> IntensityMap:
    sidecar = str(path) + ".json"
    try:
        with open(sidecar, encoding="utf-8") as fh:
            side = json.load(fh)
    except FileNotFoundError:
        raise MapFormatError(f"{path}: missing sidecar {sidecar}") from None
    except json.JSONDecodeError as exc:
        raise MapFormatError(f"{sidecar}: {exc}") from None
    axes = _axes_from_header(side, sidecar)
    with open(path, "rb") as fh:
        blob = fh.read()
    parts = blob.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise MapFormatError(f"{path}: not a binary 16-bit PGM")
    try:
        cols, rows = (int(t) for t in parts[1].split())
        maxval = int(parts[2])
    except ValueError as exc:
        raise MapFormatError(f"{path}: bad PGM header: {exc}") from None
    if maxval != _PGM_MAXVAL or (rows, cols) != axes.shape:
        raise MapFormatError(f"{path}: PGM header disagrees with sidecar")
    body = parts[3]
    if len(body) != rows * cols * 2:
        raise MapFormatError(f"{path}: truncated pixel data")
    levels = np.frombuffer(body, dtype=">u2").reshape(rows, cols)
    data = (side["intensity_offset"]
            + levels / maxval * side["intensity_span"])
    return IntensityMap(axes, data, side.get("meta", {}))


# ---------------------------------------------------------------- front door

_FORMATS = {
    ".nlm": (_save_native, _load_native),
    ".csv": (_save_csv, _load_csv),
    ".pgm": (_save_pgm, _load_pgm),
}


def _format_for(path):
    ext = os.path.splitext(str(path))[1].lower()
    if ext not in _FORMATS:
        raise MapFormatError(
            f"{path}: unsupported map suffix {ext!r}; use one of "
            + ", ".join(sorted(_FORMATS))
        )
    return _FORMATS[ext]


def save_map(path, m: IntensityMap) -> None:
    """Write a map in the format implied by the file suffix."""
    json.dumps(m.meta)  # fail fast on unserializable metadata
    _format_for(path)[0](str(path), m)


def load_map(path) -> IntensityMap:
    """Read a map written by save_map."""
    if not os.path.exists(str(path)):
        raise FileNotFoundError(str(path))
    return _format_for(path)[1](str(path))
