"""File formats: binary and CSV fields, CSV polylines and tables, OBJ meshes.

Binary field layout (all little-endian)::

    magic    4 bytes   b"LDF1"
    n        uint32    grid dimension
    shape    n x uint64
    nu       uint32    components per node
    periodic n x uint8
    lower    n x float64
    upper    n x float64
    values   prod(shape) * nu x float64, C order, component fastest
"""
from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile

import numpy as np

from .grid import BoxDomain, Field, Polyline

MAGIC = b"LDF1"


def atomic_write(path, data) -> None:
    """Write ``data`` (str or bytes) through a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode, newline="" if mode == "w" else None) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def field_to_bytes(f: Field) -> bytes:
    d = f.domain
    parts = [MAGIC, struct.pack("<I", d.n), struct.pack(f"<{d.n}Q", *d.shape),
             struct.pack("<I", f.nu), struct.pack(f"<{d.n}B", *d.periodic),
             struct.pack(f"<{d.n}d", *d.lower), struct.pack(f"<{d.n}d", *d.upper),
             np.ascontiguousarray(f.values, dtype="<f8").tobytes()]
    return b"".join(parts)


def field_from_bytes(buf: bytes) -> Field:
    if buf[:4] != MAGIC:
        raise ValueError("not a field file (bad magic)")
    off = 4
    (n,) = struct.unpack_from("<I", buf, off)
    off += 4
    shape = struct.unpack_from(f"<{n}Q", buf, off)
    off += 8 * n
    (nu,) = struct.unpack_from("<I", buf, off)
    off += 4
    periodic = struct.unpack_from(f"<{n}B", buf, off)
    off += n
    lower = struct.unpack_from(f"<{n}d", buf, off)
    off += 8 * n
    upper = struct.unpack_from(f"<{n}d", buf, off)
    off += 8 * n
    count = int(np.prod(shape)) * nu
    if len(buf) - off != 8 * count:
        raise ValueError("field file truncated or padded")
    values = np.frombuffer(buf, dtype="<f8", count=count, offset=off).reshape(tuple(shape) + (nu,))
    dom = BoxDomain(lower, upper, shape, tuple(bool(p) for p in periodic))
    return Field(dom, values)


def write_field(f: Field, path) -> None:
    atomic_write(path, field_to_bytes(f))


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        return field_from_bytes(fh.read())


def _fmt(x: float) -> str:
    return repr(float(x))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def field_to_csv(f: Field) -> str:
    d = f.domain
    header = [f"x{k}" for k in range(d.n)] + [f"u{c}" for c in range(f.nu)]
    rows = np.hstack([d.points(), f.flat()])
    return _csv_text(header, ([float(v) for v in r] for r in rows))


def polyline_to_csv(c: Polyline) -> str:
    header = [f"p{k}" for k in range(c.points.shape[1])]
    return _csv_text(header, ([float(v) for v in r] for r in c.points))


def table_to_csv(columns, rows) -> str:
    """Rows are dicts; ``columns`` fixes the order."""
    return _csv_text(columns, ([r.get(c, "") for c in columns] for r in rows))


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def grid_surface_obj(x, y, z) -> str:
    """OBJ text for a height surface over a 2D node grid (quad faces).

    ``x`` and ``y`` are the axis coordinates and ``z`` has shape
    ``(len(x), len(y))``.  Vertex ``(i, j)`` has 1-based index
    ``i * len(y) + j + 1``.
    """
    z = np.asarray(z, float)
    nx, ny = len(x), len(y)
    if z.shape != (nx, ny):
        raise ValueError("height array does not match the axes")
    lines = [f"# {nx}x{ny} grid surface"]
    for i in range(nx):
        for j in range(ny):
            lines.append(f"v {_fmt(x[i])} {_fmt(y[j])} {_fmt(z[i, j])}")
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j + 1
            lines.append(f"f {a} {a + ny} {a + ny + 1} {a + 1}")
    return "\n".join(lines) + "\n"


def parse_obj(text: str):
    """Return ``(vertices, faces)`` from OBJ text (only ``v`` and ``f`` lines)."""
    verts, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(v) for v in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(v.split("/")[0]) for v in parts[1:]])
    return np.array(verts), faces
