"""Volume serialization: the native ``.rvol`` container and a NIfTI-1 reader.

rvol layout (all little-endian)::

    offset  size  field
    0       4     magic "RVOL"
    4       4     version (uint32, = 1)
    8       12    dims L, W, H (uint32 x 3)
    20      12    spacing sx, sy, sz (float32 x 3)
    32      1     residual flag (uint8)
    33      3     padding (zero)
    36      4*N   voxels, float32, x-fastest

Only the subset of NIfTI-1 needed to load a single 3D frame is supported:
float32 or int16 data, single ``.nii`` files (optionally gzipped).
Orientation metadata is ignored.
"""

from __future__ import annotations

import gzip
import os
import struct

import numpy as np

from .errors import (
    BadMagic,
    IoFailure,
    MalformedHeader,
    NotThreeDimensional,
    RvolError,
    TruncatedPayload,
    UnsupportedDatatype,
    VersionUnsupported,
)
from .volume import Volume

RVOL_MAGIC = b"RVOL"
RVOL_VERSION = 1
RVOL_HEADER = struct.Struct("<4sI3I3fB3x")


def encode_rvol(v: Volume) -> bytes:
    header = RVOL_HEADER.pack(RVOL_MAGIC, RVOL_VERSION, *v.dims, *v.spacing, int(v.residual))
    return header + np.ascontiguousarray(v.flat(), dtype="<f4").tobytes()


def decode_rvol(buf: bytes) -> Volume:
    if len(buf) < 4 or buf[:4] != RVOL_MAGIC:
        raise BadMagic(f"not an rvol file (magic {bytes(buf[:4])!r})")
    if len(buf) < RVOL_HEADER.size:
        raise TruncatedPayload(f"rvol header needs {RVOL_HEADER.size} bytes, got {len(buf)}")
    magic, version, L, W, H, sx, sy, sz, residual = RVOL_HEADER.unpack_from(buf)
    if version != RVOL_VERSION:
        raise VersionUnsupported(f"rvol version {version} is not supported (expected {RVOL_VERSION})")
    n = L * W * H
    if n == 0:
        raise RvolError(f"rvol dims must be positive, got {(L, W, H)}")
    payload = len(buf) - RVOL_HEADER.size
    if payload < 4 * n:
        raise TruncatedPayload(f"dims {(L, W, H)} need {4 * n} payload bytes, found {payload}")
    if payload > 4 * n:
        raise RvolError(f"{payload - 4 * n} unexpected trailing bytes after rvol payload")
    data = np.frombuffer(buf, dtype="<f4", count=n, offset=RVOL_HEADER.size).astype(np.float32)
    return Volume.from_flat(data, (L, W, H), (sx, sy, sz), bool(residual))


def write_rvol(v: Volume, path) -> None:
    try:
        with open(path, "wb") as f:
            f.write(encode_rvol(v))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_rvol(path) -> Volume:
    try:
        with open(path, "rb") as f:
            buf = f.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return decode_rvol(buf)


# -- NIfTI-1 ------------------------------------------------------------------

NIFTI_HEADER_SIZE = 348
DT_INT16 = 4
DT_FLOAT32 = 16
_DTYPES = {DT_INT16: "i2", DT_FLOAT32: "f4"}


def _nifti_endian(buf):
    for endian in ("<", ">"):
        if struct.unpack_from(endian + "i", buf, 0)[0] == NIFTI_HEADER_SIZE:
            return endian
    raise MalformedHeader(f"sizeof_hdr is {struct.unpack_from('<i', buf, 0)[0]}, expected 348")


def decode_nifti(buf: bytes) -> Volume:
    if len(buf) < NIFTI_HEADER_SIZE:
        raise MalformedHeader(f"file shorter than the 348-byte NIfTI-1 header ({len(buf)} bytes)")
    e = _nifti_endian(buf)
    dim = struct.unpack_from(e + "8h", buf, 40)
    datatype, bitpix = struct.unpack_from(e + "hh", buf, 70)
    pixdim = struct.unpack_from(e + "8f", buf, 76)
    vox_offset, scl_slope, scl_inter = struct.unpack_from(e + "3f", buf, 108)
    magic = buf[344:348]
    if magic != b"n+1\x00":
        if magic == b"ni1\x00":
            raise MalformedHeader("detached .hdr/.img pairs are not supported")
        raise MalformedHeader(f"bad NIfTI-1 magic {magic!r}")
    ndim = dim[0]
    if not 1 <= ndim <= 7:
        raise MalformedHeader(f"dim[0] = {ndim} out of range")
    shape = dim[1:ndim + 1]
    if ndim < 3 or any(n != 1 for n in shape[3:]):
        raise NotThreeDimensional(f"expected a single 3D frame, got dims {tuple(shape)}")
    shape = tuple(int(n) for n in shape[:3])
    if min(shape) < 1:
        raise MalformedHeader(f"non-positive dims {shape}")
    if datatype not in _DTYPES:
        raise UnsupportedDatatype(f"NIfTI datatype code {datatype} is not supported (float32 or int16 only)")
    dtype = np.dtype(e + _DTYPES[datatype])
    offset = int(vox_offset)
    count = int(np.prod(shape))
    if offset < NIFTI_HEADER_SIZE or len(buf) < offset + count * dtype.itemsize:
        raise MalformedHeader(f"voxel data missing: need {count * dtype.itemsize} bytes at offset {offset}")
    raw = np.frombuffer(buf, dtype=dtype, count=count, offset=offset)
    spacing = tuple(float(p) if p > 0 else 1.0 for p in pixdim[1:4])
    if datatype == DT_FLOAT32:
        return Volume.from_flat(raw.astype(np.float32), shape, spacing)
    # int16: apply scl_slope/scl_inter, then min-max normalize to [0, 1]
    data = raw.astype(np.float64)
    if scl_slope != 0 and np.isfinite(scl_slope):
        data = data * scl_slope + scl_inter
    lo, hi = data.min(), data.max()
    data = (data - lo) / (hi - lo) if hi > lo else np.zeros_like(data)
    return Volume.from_flat(data, shape, spacing)


def read_nifti(path) -> Volume:
    try:
        with open(path, "rb") as f:
            buf = f.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if buf[:2] == b"\x1f\x8b":
        try:
            buf = gzip.decompress(buf)
        except OSError as exc:
            raise MalformedHeader(f"corrupt gzip stream in {path}: {exc}") from exc
    return decode_nifti(buf)


def read_volume(path) -> Volume:
    """Load ``.nii``/``.nii.gz`` via the NIfTI reader, anything else as rvol."""
    name = os.fspath(path).lower()
    if name.endswith(".nii") or name.endswith(".nii.gz"):
        return read_nifti(path)
    return read_rvol(path)
