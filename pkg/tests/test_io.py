import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jdac.errors import (
    BadMagic,
    IoFailure,
    MalformedHeader,
    NotThreeDimensional,
    RvolError,
    TruncatedPayload,
    UnsupportedDatatype,
    VersionUnsupported,
)
from jdac.io import decode_rvol, encode_rvol, read_nifti, read_rvol, read_volume, write_rvol
from jdac.volume import Volume


def rvol_header(dims, version=1, magic=b"RVOL", spacing=(1.0, 1.0, 1.0), residual=0):
    return struct.pack("<4sI3I3fB3x", magic, version, *dims, *spacing, residual)


def nifti_bytes(data, datatype=16, dims=None, sizeof_hdr=348, magic=b"n+1\0", slope=0.0, inter=0.0,
                pixdim=(1.0, 1.0, 1.0), endian="<"):
    """Minimal single-file NIfTI-1 writer, field offsets per the public header layout."""
    hdr = bytearray(352)
    shape = data.shape if dims is None else dims
    dim = [len(shape)] + list(shape) + [1] * (7 - len(shape))
    struct.pack_into(endian + "i", hdr, 0, sizeof_hdr)
    struct.pack_into(endian + "8h", hdr, 40, *dim)
    bitpix = {16: 32, 4: 16, 64: 64}[datatype]
    struct.pack_into(endian + "hh", hdr, 70, datatype, bitpix)
    struct.pack_into(endian + "8f", hdr, 76, 1.0, *pixdim, 1.0, 1.0, 1.0, 1.0)
    struct.pack_into(endian + "f", hdr, 108, 352.0)
    struct.pack_into(endian + "ff", hdr, 112, slope, inter)
    hdr[344:348] = magic
    dtype = {16: "f4", 4: "i2", 64: "f8"}[datatype]
    return bytes(hdr) + data.astype(endian + dtype).tobytes(order="F")


class TestRvol:
    def test_round_trip(self, tmp_path, rng):
        v = Volume(rng.random((16, 16, 16)).astype(np.float32), (0.9, 1.0, 1.2))
        write_rvol(v, tmp_path / "a.rvol")
        w = read_rvol(tmp_path / "a.rvol")
        assert np.array_equal(w.data, v.data) and w.spacing == pytest.approx(v.spacing)
        assert not w.residual

    def test_layout(self):
        a = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
        buf = encode_rvol(Volume(a, residual=False))
        assert len(buf) == 36 + 4 * 24
        assert buf[:4] == b"RVOL"
        assert struct.unpack_from("<3I", buf, 8) == (2, 3, 4)
        # x-fastest payload
        assert struct.unpack_from("<2f", buf, 36) == (a[0, 0, 0], a[1, 0, 0])

    def test_residual_flag(self):
        v = Volume(np.full((3, 3, 3), -0.5, dtype=np.float32), residual=True)
        assert v.residual and decode_rvol(encode_rvol(v)).residual

    def test_bad_magic(self):
        with pytest.raises(BadMagic):
            decode_rvol(b"XXXX" + rvol_header((2, 2, 2))[4:] + bytes(32))

    def test_truncated_payload(self):
        payload = np.zeros(16**3, dtype="<f4").tobytes()
        with pytest.raises(TruncatedPayload):
            decode_rvol(rvol_header((64, 64, 64)) + payload)

    def test_truncated_header(self):
        with pytest.raises(TruncatedPayload):
            decode_rvol(rvol_header((2, 2, 2))[:20])

    def test_version(self):
        with pytest.raises(VersionUnsupported):
            decode_rvol(rvol_header((1, 1, 1), version=2) + bytes(4))

    def test_trailing_bytes_and_zero_dims(self):
        with pytest.raises(RvolError):
            decode_rvol(rvol_header((1, 1, 1)) + bytes(8))
        with pytest.raises(RvolError):
            decode_rvol(rvol_header((0, 1, 1)))

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoFailure):
            read_rvol(tmp_path / "nope.rvol")

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6)),
                  elements=st.floats(-1e6, 1e6, width=32)),
           st.booleans())
    def test_round_trip_property(self, a, residual):
        v = Volume(a, residual=residual)
        w = decode_rvol(encode_rvol(v))
        assert w.data.tobytes() == a.tobytes() and w.residual == v.residual

    @settings(max_examples=60, deadline=None)
    @given(st.binary(max_size=80))
    def test_garbage_never_crashes(self, buf):
        try:
            decode_rvol(buf)
        except RvolError:
            pass


class TestNifti:
    def test_float32(self, tmp_path, rng):
        a = rng.random((16, 16, 16)).astype(np.float32)
        p = tmp_path / "a.nii"
        p.write_bytes(nifti_bytes(a, pixdim=(0.8, 0.9, 1.1)))
        v = read_nifti(p)
        np.testing.assert_allclose(v.data, a, atol=1e-7)
        assert v.spacing == pytest.approx((0.8, 0.9, 1.1))

    def test_big_endian(self, tmp_path, rng):
        a = rng.random((4, 5, 6)).astype(np.float32)
        p = tmp_path / "b.nii"
        p.write_bytes(nifti_bytes(a, endian=">"))
        np.testing.assert_allclose(read_nifti(p).data, a, atol=1e-7)

    def test_gzip(self, tmp_path, rng):
        a = rng.random((8, 8, 8)).astype(np.float32)
        p = tmp_path / "a.nii.gz"
        p.write_bytes(gzip.compress(nifti_bytes(a)))
        np.testing.assert_allclose(read_volume(p).data, a, atol=1e-7)

    def test_int16_normalized(self, tmp_path):
        a = np.arange(27, dtype=np.int16).reshape(3, 3, 3) * 10
        p = tmp_path / "i.nii"
        p.write_bytes(nifti_bytes(a, datatype=4, slope=2.0, inter=5.0))
        v = read_nifti(p)
        np.testing.assert_allclose(v.data, a / 260.0, atol=1e-12)

    def test_bad_sizeof_hdr(self, tmp_path):
        p = tmp_path / "x.nii"
        p.write_bytes(nifti_bytes(np.zeros((4, 4, 4)), sizeof_hdr=540))
        with pytest.raises(MalformedHeader):
            read_nifti(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.nii"
        p.write_bytes(nifti_bytes(np.zeros((4, 4, 4)), magic=b"ni1\0"))
        with pytest.raises(MalformedHeader):
            read_nifti(p)

    def test_four_dimensional(self, tmp_path):
        p = tmp_path / "x.nii"
        p.write_bytes(nifti_bytes(np.zeros((4, 4, 4, 2))))
        with pytest.raises(NotThreeDimensional):
            read_nifti(p)

    def test_single_frame_4d_accepted(self, tmp_path):
        p = tmp_path / "x.nii"
        p.write_bytes(nifti_bytes(np.ones((4, 4, 4, 1))))
        assert read_nifti(p).dims == (4, 4, 4)

    def test_unsupported_datatype(self, tmp_path):
        p = tmp_path / "x.nii"
        p.write_bytes(nifti_bytes(np.zeros((4, 4, 4)), datatype=64))
        with pytest.raises(UnsupportedDatatype):
            read_nifti(p)

    def test_short_file(self, tmp_path):
        p = tmp_path / "x.nii"
        p.write_bytes(nifti_bytes(np.zeros((4, 4, 4)))[:300])
        with pytest.raises(MalformedHeader):
            read_nifti(p)
        p.write_bytes(nifti_bytes(np.zeros((4, 4, 4)))[:400])
        with pytest.raises(MalformedHeader):
            read_nifti(p)
