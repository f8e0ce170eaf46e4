"""CWAV tensor container.

Layout (all integers little-endian)::

    b"CWAV"  u16 version
    repeated until EOF:
        u8 dtype (0 = float32)  u8 rank  u32 dims[rank]  payload (C order, little-endian)

Offsets recorded in the dataset index point at the dtype byte of a record.
"""

import struct

import numpy as np

MAGIC = b"CWAV"
VERSION = 1
DTYPES = {0: np.dtype("<f4")}
DTYPE_CODES = {v: k for k, v in DTYPES.items()}


class ContainerError(ValueError):
    pass


class ShardWriter:
    def __init__(self, path):
        self.path = path
        self._fh = open(path, "wb")
        self._fh.write(MAGIC + struct.pack("<H", VERSION))

    def write(self, array):
        """Append one tensor and return the byte offset of its record."""
        a = np.array(array, dtype="<f4", order="C")  # keeps rank 0
        offset = self._fh.tell()
        self._fh.write(struct.pack("<BB", DTYPE_CODES[a.dtype], a.ndim))
        self._fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
        self._fh.write(a.tobytes())
        return offset

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _read_header(fh):
    head = fh.read(6)
    if len(head) != 6 or head[:4] != MAGIC:
        raise ContainerError("not a CWAV container")
    (version,) = struct.unpack("<H", head[4:])
    if version != VERSION:
        raise ContainerError(f"unsupported CWAV version {version}")


def _read_record(fh):
    head = fh.read(2)
    if not head:
        return None
    if len(head) != 2:
        raise ContainerError("truncated record header")
    code, rank = struct.unpack("<BB", head)
    if code not in DTYPES:
        raise ContainerError(f"unknown dtype code {code}")
    dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
    dtype = DTYPES[code]
    n = int(np.prod(dims)) if rank else 1
    payload = fh.read(n * dtype.itemsize)
    if len(payload) != n * dtype.itemsize:
        raise ContainerError("truncated payload")
    return np.frombuffer(payload, dtype=dtype).reshape(dims)


def read_tensor(path, offset):
    with open(path, "rb") as fh:
        _read_header(fh)
        fh.seek(offset)
        out = _read_record(fh)
    if out is None:
        raise ContainerError(f"no record at offset {offset}")
    return out


def read_all(path):
    out = []
    with open(path, "rb") as fh:
        _read_header(fh)
        while (a := _read_record(fh)) is not None:
            out.append(a)
    return out
