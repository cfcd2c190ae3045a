"""Volumetric grids and the VVOL file format.

Axis order is (z, y, x) everywhere; world coordinates are millimetres with
``pos = origin + index * spacing``.

VVOL is a small text-header format::

    dims z y x
    spacing z y x
    origin z y x
    dtype int16|float32
    <blank line>
    <little-endian raw voxel data, z-major>

Masks are stored as int16 volumes with values {0, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_DTYPES = {"int16": np.dtype("<i2"), "float32": np.dtype("<f4")}


@dataclass
class Volume:
    """3D scalar grid in HU-like units."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise ValidationError("data: expected a 3D array (z, y, x)")
        self.spacing = tuple(float(s) for s in self.spacing)
        self.origin = tuple(float(o) for o in self.origin)
        if len(self.spacing) != 3 or any(s <= 0 for s in self.spacing):
            raise ValidationError("spacing: all components must be > 0")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def index_to_mm(self, idx) -> np.ndarray:
        """Voxel index (or array of indices) to world coordinates in mm."""
        return np.asarray(idx, float) * np.asarray(self.spacing) + np.asarray(self.origin)

    def mm_to_index(self, pos) -> np.ndarray:
        """World position to fractional voxel index."""
        return (np.asarray(pos, float) - np.asarray(self.origin)) / np.asarray(self.spacing)

    def same_geometry(self, other) -> bool:
        return (
            self.dims == other.dims
            and np.allclose(self.spacing, other.spacing)
            and np.allclose(self.origin, other.origin)
        )


@dataclass
class BinaryMask:
    """Boolean grid sharing a Volume's geometry."""

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        self.data = np.asarray(self.data).astype(bool)
        if self.data.ndim != 3:
            raise ValidationError("data: expected a 3D array (z, y, x)")
        self.spacing = tuple(float(s) for s in self.spacing)
        self.origin = tuple(float(o) for o in self.origin)
        if any(s <= 0 for s in self.spacing):
            raise ValidationError("spacing: all components must be > 0")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def count(self) -> int:
        return int(self.data.sum())

    index_to_mm = Volume.index_to_mm
    mm_to_index = Volume.mm_to_index
    same_geometry = Volume.same_geometry

    def like(self, data: np.ndarray) -> "BinaryMask":
        return BinaryMask(data, self.spacing, self.origin)


def _parse_triple(line: str, key: str, cast):
    parts = line.split()
    if len(parts) != 4 or parts[0] != key:
        raise ValidationError(f"malformed VVOL header line: {line!r} (expected '{key} z y x')")
    try:
        return tuple(cast(p) for p in parts[1:])
    except ValueError:
        raise ValidationError(f"malformed VVOL header line: {line!r} (non-numeric value)")


def write_volume(vol: Volume, path, dtype: str | None = None) -> None:
    """Write a volume (or mask via write_mask) to a VVOL file."""
    if dtype is None:
        dtype = "int16" if np.issubdtype(vol.data.dtype, np.integer) else "float32"
    if dtype not in _DTYPES:
        raise ValidationError(f"dtype: must be one of {sorted(_DTYPES)}")
    header = (
        f"dims {vol.dims[0]} {vol.dims[1]} {vol.dims[2]}\n"
        f"spacing {vol.spacing[0]} {vol.spacing[1]} {vol.spacing[2]}\n"
        f"origin {vol.origin[0]} {vol.origin[1]} {vol.origin[2]}\n"
        f"dtype {dtype}\n\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(np.ascontiguousarray(vol.data, dtype=_DTYPES[dtype]).tobytes())


def write_mask(mask: BinaryMask, path) -> None:
    write_volume(Volume(mask.data.astype(np.int16), mask.spacing, mask.origin), path, "int16")


def read_volume(path) -> Volume:
    """Read a VVOL file. Raises ValidationError naming the bad header line."""
    with open(path, "rb") as fh:
        raw = fh.read()
    sep = raw.find(b"\n\n")
    if sep < 0:
        raise ValidationError("malformed VVOL header: missing blank line before data")
    try:
        lines = raw[:sep].decode("utf-8").splitlines()
    except UnicodeDecodeError:
        raise ValidationError("malformed VVOL header: not UTF-8 text")
    if len(lines) != 4:
        raise ValidationError(f"malformed VVOL header: expected 4 lines, got {len(lines)}")
    dims = _parse_triple(lines[0], "dims", int)
    spacing = _parse_triple(lines[1], "spacing", float)
    origin = _parse_triple(lines[2], "origin", float)
    dt_parts = lines[3].split()
    if len(dt_parts) != 2 or dt_parts[0] != "dtype" or dt_parts[1] not in _DTYPES:
        raise ValidationError(f"malformed VVOL header line: {lines[3]!r} (expected 'dtype int16|float32')")
    dtype = _DTYPES[dt_parts[1]]
    body = raw[sep + 2 :]
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(body) != expected:
        raise ValidationError(f"VVOL data size mismatch: expected {expected} bytes, got {len(body)}")
    data = np.frombuffer(body, dtype=dtype).reshape(dims)
    return Volume(data.copy(), spacing, origin)


def read_mask(path) -> BinaryMask:
    vol = read_volume(path)
    vals = np.unique(vol.data)
    if not np.isin(vals, (0, 1)).all():
        raise ValidationError("mask VVOL contains values other than {0, 1}")
    return BinaryMask(vol.data != 0, vol.spacing, vol.origin)
