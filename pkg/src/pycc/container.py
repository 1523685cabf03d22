"""Binary model container: magic "PYCCMODL", little-endian, a JSON header
with the tensor directory, then raw per-tensor blobs.

Quantized tensors are stored as u8 codes with {min_val, beta} in their
directory entry; everything else is f32.  Saving is canonical (sorted
tensor names, compact JSON) so save -> load -> save is byte-identical.
"""

import json
import struct

import numpy as np

MAGIC = b"PYCCMODL"
VERSION = 1
_ALIGN = 16

_DTYPES = {"f32": np.dtype("<f4"), "u8": np.dtype("u1")}


class ContainerError(ValueError):
    pass


def _align(n):
    return (n + _ALIGN - 1) // _ALIGN * _ALIGN


def save_container(path, meta: dict, tensors: dict):
    """tensors: name -> ndarray (f32) or dict{codes, min_val, beta} (u8)."""
    directory = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        value = tensors[name]
        entry = {"name": name}
        if isinstance(value, dict):
            codes = np.ascontiguousarray(value["codes"], dtype=_DTYPES["u8"])
            entry.update(dtype="u8", shape=list(codes.shape),
                         min_val=float(value["min_val"]),
                         beta=float(value["beta"]))
            raw = codes.tobytes()
        else:
            arr = np.ascontiguousarray(value, dtype=_DTYPES["f32"])
            entry.update(dtype="f32", shape=list(arr.shape))
            raw = arr.tobytes()
        entry["offset"] = offset
        entry["nbytes"] = len(raw)
        directory.append(entry)
        blobs.append(raw)
        offset = _align(offset + len(raw))

    header = dict(meta)
    header["tensors"] = directory
    header_bytes = json.dumps(header, sort_keys=True,
                              separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        pos = 0
        for raw in blobs:
            fh.write(raw)
            pos += len(raw)
            pad = _align(pos) - pos
            fh.write(b"\x00" * pad)
            pos += pad


def load_container(path):
    """Returns (meta, tensors) where quantized entries stay as dicts."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ContainerError(f"bad magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise ContainerError(f"unsupported container version {version}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        blob = fh.read()
    tensors = {}
    for entry in header["tensors"]:
        dtype = entry["dtype"]
        if dtype not in _DTYPES:
            raise ContainerError(
                f"tensor {entry['name']!r} has unknown dtype {dtype!r}")
        start = entry["offset"]
        raw = blob[start:start + entry["nbytes"]]
        arr = np.frombuffer(raw, dtype=_DTYPES[dtype]).reshape(entry["shape"])
        if dtype == "u8":
            tensors[entry["name"]] = {
                "codes": arr, "min_val": entry["min_val"],
                "beta": entry["beta"]}
        else:
            tensors[entry["name"]] = arr.copy()
    meta = {k: v for k, v in header.items() if k != "tensors"}
    return meta, tensors


def blob_sizes(path):
    """Byte totals per dtype, for size-comparison reports."""
    _, tensors = load_container(path)
    sizes = {"f32": 0, "u8": 0}
    for value in tensors.values():
        if isinstance(value, dict):
            sizes["u8"] += value["codes"].nbytes
        else:
            sizes["f32"] += value.nbytes
    return sizes
