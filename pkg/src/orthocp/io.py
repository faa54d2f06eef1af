"""Tensor file formats.

OTNS binary layout (all little-endian)::

    b"OTNS" | u32 order d | d x u64 shape | prod(shape) x f64, column-major

Small tensors can also be read from JSON nested arrays, where
``data[i][j][k]`` is entry ``(i, j, k)``.
"""
import json
import struct
from pathlib import Path

import numpy as np

from .tensor import MAX_ORDER, as_tensor

MAGIC = b"OTNS"


class FormatError(ValueError):
    pass


def dumps_otns(A):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim > MAX_ORDER:
        raise ValueError(f"order {A.ndim} exceeds {MAX_ORDER}")
    header = MAGIC + struct.pack("<I", A.ndim) + struct.pack(f"<{A.ndim}Q", *A.shape)
    return header + A.ravel(order="F").astype("<f8").tobytes()


def loads_otns(buf):
    buf = bytes(buf)
    if len(buf) < 8 or buf[:4] != MAGIC:
        raise FormatError("not an OTNS file (bad magic)")
    (d,) = struct.unpack_from("<I", buf, 4)
    if d > MAX_ORDER:
        raise FormatError(f"order {d} exceeds {MAX_ORDER}")
    off = 8 + 8 * d
    if len(buf) < off:
        raise FormatError("truncated OTNS header")
    shape = struct.unpack_from(f"<{d}Q", buf, 8)
    count = int(np.prod(shape, dtype=np.int64))
    if len(buf) != off + 8 * count:
        raise FormatError(f"OTNS payload holds {(len(buf) - off) / 8:g} values, "
                          f"shape {shape} needs {count}")
    data = np.frombuffer(buf, dtype="<f8", count=count, offset=off).astype(np.float64)
    if d == 0:
        return data.reshape(())
    return np.asfortranarray(data.reshape(shape, order="F"))


def write_otns(path, A):
    Path(path).write_bytes(dumps_otns(A))


def read_otns(path):
    return loads_otns(Path(path).read_bytes())


def read_json_tensor(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        return as_tensor(np.array(data, dtype=np.float64))
    except ValueError as exc:
        raise FormatError(f"{path}: not a rectangular numeric nested array ({exc})") from exc


def read_tensor(path):
    """Load a tensor by file suffix: ``.json`` as nested arrays, anything else as OTNS."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return read_json_tensor(path)
    return as_tensor(read_otns(path))


def save_instance(path, A, truth=None):
    """Write ``A`` as OTNS and, if given, the ground truth as a JSON sidecar
    (``<path>.json``).  Returns the sidecar path or ``None``."""
    path = Path(path)
    write_otns(path, A)
    if truth is None:
        return None
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(truth.to_dict(), sort_keys=True, indent=1), encoding="utf-8")
    return side
