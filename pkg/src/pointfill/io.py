"""Point cloud and weight files.

XYZ   text, one ``x y z`` per line, LF endings, shortest round-trip decimals.
PCF1  ``b"PCF1"``, uint32 LE count N, then N*3 float32 LE (x, y, z per point).
PWT1  ``b"PWT1"``, uint32 LE tensor count, then per tensor: uint16 LE name
      length, UTF-8 name, uint8 rank, rank x uint32 LE dims, row-major
      float32 LE values.

Clouds are float64 in memory; PCF and PWT round to float32 on write.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from pointfill.nn.weights import WeightStore

PCF_MAGIC = b"PCF1"
PWT_MAGIC = b"PWT1"


class FormatError(ValueError):
    """Malformed input file; message names the line or byte offset."""


def _format_of(path, fmt: str | None) -> str:
    if fmt:
        fmt = fmt.lower()
    else:
        suffix = Path(path).suffix.lower()
        fmt = {".xyz": "xyz", ".txt": "xyz", ".pcf": "pcf"}.get(suffix)
        if fmt is None:
            raise FormatError(f"{path}: cannot infer format from suffix {suffix!r}; use .xyz or .pcf")
    if fmt not in ("xyz", "pcf"):
        raise FormatError(f"unknown cloud format {fmt!r}")
    return fmt


def parse_xyz(text: str, source: str = "<xyz>") -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise FormatError(f"{source}:{lineno}: expected 3 values, got {len(tokens)}")
        try:
            vals = [float(t) for t in tokens]
        except ValueError:
            bad = next(t for t in tokens if not _is_float(t))
            raise FormatError(f"{source}:{lineno}: non-numeric token {bad!r}") from None
        if not all(np.isfinite(vals)):
            raise FormatError(f"{source}:{lineno}: non-finite coordinate")
        rows.append(vals)
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def _is_float(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def format_xyz(cloud) -> str:
    pts = np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    return "".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in pts.tolist())


def parse_pcf(data: bytes, source: str = "<pcf>") -> np.ndarray:
    if len(data) < 4 or data[:4] != PCF_MAGIC:
        raise FormatError(f"{source}: bad magic at offset 0 (expected {PCF_MAGIC!r})")
    if len(data) < 8:
        raise FormatError(f"{source}: truncated header at offset 4 (need uint32 count)")
    (n,) = struct.unpack_from("<I", data, 4)
    need = 8 + 12 * n
    if len(data) < need:
        raise FormatError(f"{source}: truncated payload at offset {len(data)}: {n} points need {need} bytes")
    if len(data) > need:
        raise FormatError(f"{source}: {len(data) - need} trailing bytes at offset {need}")
    pts = np.frombuffer(data, dtype="<f4", count=3 * n, offset=8).astype(np.float64).reshape(n, 3)
    if not np.isfinite(pts).all():
        bad = int(np.argwhere(~np.isfinite(pts.reshape(-1)))[0, 0])
        raise FormatError(f"{source}: non-finite value at offset {8 + 4 * bad}")
    return pts


def format_pcf(cloud) -> bytes:
    pts = np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    return PCF_MAGIC + struct.pack("<I", len(pts)) + pts.astype("<f4").tobytes()


def read_cloud(path, fmt: str | None = None) -> np.ndarray:
    """Load a cloud; an empty file parses to a (0, 3) array."""
    fmt = _format_of(path, fmt)
    if fmt == "xyz":
        try:
            text = Path(path).read_bytes().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: not UTF-8 text at offset {exc.start}") from None
        return parse_xyz(text, str(path))
    return parse_pcf(Path(path).read_bytes(), str(path))


def write_cloud(path, cloud, fmt: str | None = None) -> None:
    fmt = _format_of(path, fmt)
    if fmt == "xyz":
        Path(path).write_bytes(format_xyz(cloud).encode("ascii"))
    else:
        Path(path).write_bytes(format_pcf(cloud))


def format_weights(store: WeightStore) -> bytes:
    out = [PWT_MAGIC, struct.pack("<I", len(store))]
    for name in store:
        arr = store[name]
        raw = name.encode("utf-8")
        out.append(struct.pack("<H", len(raw)) + raw + struct.pack("<B", arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(out)


def parse_weights(data: bytes, source: str = "<pwt>") -> WeightStore:
    if data[:4] != PWT_MAGIC:
        raise FormatError(f"{source}: bad magic at offset 0 (expected {PWT_MAGIC!r})")
    pos = 4

    def take(fmt: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise FormatError(f"{source}: truncated at offset {pos}")
        vals = struct.unpack_from(fmt, data, pos)
        pos += size
        return vals

    (count,) = take("<I")
    tensors = {}
    for _ in range(count):
        (name_len,) = take("<H")
        if pos + name_len > len(data):
            raise FormatError(f"{source}: truncated tensor name at offset {pos}")
        try:
            name = data[pos : pos + name_len].decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"{source}: tensor name is not UTF-8 at offset {pos}") from None
        pos += name_len
        (rank,) = take("<B")
        dims = take(f"<{rank}I") if rank else ()
        n = int(np.prod(dims)) if rank else 1
        if pos + 4 * n > len(data):
            raise FormatError(f"{source}: tensor {name}: truncated payload at offset {pos}")
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=pos).astype(np.float64).reshape(dims)
        pos += 4 * n
        if name in tensors:
            raise FormatError(f"{source}: duplicate tensor {name}")
        tensors[name] = arr
    if pos != len(data):
        raise FormatError(f"{source}: {len(data) - pos} trailing bytes at offset {pos}")
    return WeightStore(tensors)


def write_weights(path, store: WeightStore) -> None:
    Path(path).write_bytes(format_weights(store))


def read_weights(path, config=None) -> WeightStore:
    """Load a PWT1 file; with ``config`` the names and shapes are validated."""
    store = parse_weights(Path(path).read_bytes(), str(path))
    return store.validate(config) if config is not None else store
