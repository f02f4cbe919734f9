"""Tensor file I/O and dataset manifests.

Tensors are dense little-endian float32 arrays of rank 1..4, stored in NPY
v1.0 files. The writer emits the same bytes numpy's own writer would for a
C-contiguous ``<f4`` array, so files are interchangeable with ``np.save``.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, IoError, ManifestError

MAGIC = b"\x93NUMPY"
MAX_RANK = 4


def _validate_array(a: np.ndarray, origin: str) -> np.ndarray:
    if a.ndim < 1 or a.ndim > MAX_RANK:
        raise FormatError(f"{origin}: rank {a.ndim} outside supported range 1..{MAX_RANK}")
    if any(d < 1 for d in a.shape):
        raise FormatError(f"{origin}: zero-sized dimension in shape {a.shape}")
    return a


def read_tensor(path) -> np.ndarray:
    """Read an NPY v1.0 file into a float32 array of rank 1..4.

    Raises FormatError on a malformed header or a payload whose length does
    not match the declared shape, and DataError on NaN/Inf payload values.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read tensor file {path}: {exc}") from exc

    if len(raw) < 10 or raw[:6] != MAGIC:
        raise FormatError(f"{path}: not an NPY file (bad magic)")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise FormatError(f"{path}: unsupported NPY version {major}.{minor}")
    (hlen,) = struct.unpack("<H", raw[8:10])
    header_end = 10 + hlen
    if len(raw) < header_end:
        raise FormatError(f"{path}: truncated header")
    try:
        header = ast.literal_eval(raw[10:header_end].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"{path}: unparseable header: {exc}") from exc
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header is not a dict")

    descr = header.get("descr")
    if descr != "<f4":
        raise FormatError(f"{path}: dtype {descr!r} is not '<f4'")
    if header.get("fortran_order") is not False:
        raise FormatError(f"{path}: fortran_order must be False")
    shape = header.get("shape")
    if (
        not isinstance(shape, tuple)
        or not shape
        or not all(isinstance(d, int) and d >= 1 for d in shape)
    ):
        raise FormatError(f"{path}: bad shape {shape!r}")
    if len(shape) > MAX_RANK:
        raise FormatError(f"{path}: rank {len(shape)} outside supported range 1..{MAX_RANK}")

    count = int(np.prod(shape))
    payload = raw[header_end:]
    if len(payload) != 4 * count:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {4 * count} for shape {shape}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(shape)
    if not np.isfinite(data).all():
        raise DataError(f"{path}: payload contains non-finite values")
    return np.ascontiguousarray(data)


def write_tensor(t, path) -> None:
    """Write a float32 array to ``path`` as NPY v1.0, byte-compatible with np.save."""
    a = _validate_array(np.ascontiguousarray(t, dtype="<f4"), "write_tensor")
    header = "{'descr': '<f4', 'fortran_order': False, 'shape': %s, }" % repr(a.shape)
    # Pad so magic + version + length field + header is a multiple of 64.
    unpadded = len(MAGIC) + 2 + 2 + len(header) + 1
    header = header + " " * (-unpadded % 64) + "\n"
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(bytes([1, 0]))
            fh.write(struct.pack("<H", len(header)))
            fh.write(header.encode("latin1"))
            fh.write(a.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write tensor file {path}: {exc}") from exc


@dataclass(frozen=True)
class Preprocessing:
    mean: tuple[float, ...]
    std: tuple[float, ...]
    size: tuple[int, int]


@dataclass(frozen=True)
class Manifest:
    """Dataset description binding tensor files to roles.

    All sample paths are stored resolved; relative paths in the manifest file
    are taken relative to the manifest's own directory.
    """

    id_train: list[Path]
    id_test: list[Path]
    ood_sets: dict[str, list[Path]]
    preprocessing: Preprocessing
    labels: dict = field(default_factory=dict)


def _resolve_paths(entries, base: Path, where: str) -> list[Path]:
    if not isinstance(entries, list):
        raise ManifestError(f"{where} must be a list of paths")
    out = []
    for p in entries:
        resolved = (base / p).resolve()
        if not resolved.is_file():
            raise ManifestError(f"{where}: missing file {resolved}")
        out.append(resolved)
    return out


def load_manifest(path) -> Manifest:
    """Load and validate a manifest JSON file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc

    base = path.parent
    for key in ("id_train", "id_test", "ood_sets", "preprocessing"):
        if key not in doc:
            raise ManifestError(f"{path}: missing key '{key}'")

    id_train = _resolve_paths(doc["id_train"], base, "id_train")
    id_test = _resolve_paths(doc["id_test"], base, "id_test")
    if not isinstance(doc["ood_sets"], dict):
        raise ManifestError(f"{path}: ood_sets must be an object")
    ood_sets = {
        name: _resolve_paths(paths, base, f"ood_sets[{name}]")
        for name, paths in doc["ood_sets"].items()
    }

    pre = doc["preprocessing"]
    mean = pre.get("mean")
    std = pre.get("std")
    size = pre.get("size")
    if not isinstance(mean, list) or not isinstance(std, list) or len(mean) != len(std):
        raise ManifestError(f"{path}: preprocessing mean/std must be lists of equal length")
    if any(not isinstance(v, (int, float)) for v in mean + std):
        raise ManifestError(f"{path}: preprocessing mean/std must be numeric")
    if any(s <= 0 for s in std):
        raise ManifestError(f"{path}: preprocessing std entries must be > 0")
    if not isinstance(size, list) or len(size) != 2 or any(int(v) < 1 for v in size):
        raise ManifestError(f"{path}: preprocessing size must be [H, W] with positive entries")

    return Manifest(
        id_train=id_train,
        id_test=id_test,
        ood_sets=ood_sets,
        preprocessing=Preprocessing(tuple(float(v) for v in mean),
                                    tuple(float(v) for v in std),
                                    (int(size[0]), int(size[1]))),
        labels=doc.get("labels", {}),
    )
