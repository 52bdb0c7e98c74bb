"""On-disk formats: snapshot binaries, CSV tables, run manifests.

Snapshot binary layout: magic "SIPFW1\\0", then u8 dimension, u32 grid size
per axis, f64 box length, f64 time, u8 name length plus the ASCII field
name, then the values as row-major little-endian f64 with x1 varying
fastest.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SIPFW1\x00"

# grids at or below this node count also get a CSV sidecar
CSV_SIDECAR_LIMIT = 4096


def write_field_binary(path, name: str, values: np.ndarray, length: float, time: float) -> None:
    values = np.asarray(values, dtype=float)
    dim = values.ndim
    name_bytes = name.encode("ascii")
    header = MAGIC + struct.pack("<B", dim)
    header += struct.pack(f"<{dim}I", *values.shape)
    header += struct.pack("<dd", float(length), float(time))
    header += struct.pack("<B", len(name_bytes)) + name_bytes
    payload = np.ascontiguousarray(values.T, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_field_binary(path):
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a snapshot file (bad magic)")
    offset = len(MAGIC)
    (dim,) = struct.unpack_from("<B", raw, offset)
    offset += 1
    shape = struct.unpack_from(f"<{dim}I", raw, offset)
    offset += 4 * dim
    length, time = struct.unpack_from("<dd", raw, offset)
    offset += 16
    (name_len,) = struct.unpack_from("<B", raw, offset)
    offset += 1
    name = raw[offset : offset + name_len].decode("ascii")
    offset += name_len
    count = int(np.prod(shape))
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
    values = values.reshape(tuple(reversed(shape))).T.copy()
    return {"name": name, "values": values, "length": length, "time": time}


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(cell) for cell in row))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def _format_cell(cell) -> str:
    if isinstance(cell, float):
        return repr(cell)
    return str(cell)


def write_field_csv(path, values: np.ndarray) -> None:
    """Long-format CSV (index columns then value); only sensible for small grids."""
    values = np.asarray(values, dtype=float)
    dim = values.ndim
    header = [f"i{j + 1}" for j in range(dim)] + ["value"]
    rows = []
    for idx in np.ndindex(*values.shape):
        rows.append(list(idx) + [float(values[idx])])
    write_csv(path, header, rows)


def write_manifest(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def snapshot_filename(step: int, name: str) -> str:
    return f"step{step:06d}_{name}.field"


def write_snapshots(outdir, snapshots, length: float, csv_sidecars: bool = True):
    """Write every snapshot field; returns the list of files created."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for snap in snapshots:
        for name in ("u", "v", "m", "w"):
            values = getattr(snap, name)
            fname = snapshot_filename(snap.step, name)
            write_field_binary(outdir / fname, name, values, length, snap.time)
            files.append(fname)
            if csv_sidecars and values.size <= CSV_SIDECAR_LIMIT:
                csv_name = fname.replace(".field", ".csv")
                write_field_csv(outdir / csv_name, values)
                files.append(csv_name)
    return files
