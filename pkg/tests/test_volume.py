import numpy as np
import pytest

from vesseltree.errors import ValidationError
from vesseltree.volume import BinaryMask, Volume, read_mask, read_volume, write_mask, write_volume


def test_vvol_roundtrip_float32(tmp_path):
    rng = np.random.default_rng(0)
    vol = Volume(rng.normal(size=(5, 6, 7)).astype(np.float32), (0.5, 1.0, 1.25), (1, 2, 3))
    path = tmp_path / "v.vvol"
    write_volume(vol, path, "float32")
    back = read_volume(path)
    assert back.dims == (5, 6, 7)
    assert back.spacing == vol.spacing
    assert back.origin == vol.origin
    assert np.array_equal(back.data, vol.data)


def test_vvol_roundtrip_mask(tmp_path):
    m = BinaryMask(np.random.default_rng(1).random((4, 4, 4)) > 0.5, (1, 1, 1))
    path = tmp_path / "m.vvol"
    write_mask(m, path)
    back = read_mask(path)
    assert np.array_equal(back.data, m.data)


def test_mask_rejects_non_binary(tmp_path):
    vol = Volume(np.full((3, 3, 3), 7, np.int16))
    path = tmp_path / "bad.vvol"
    write_volume(vol, path, "int16")
    with pytest.raises(ValidationError, match="values other than"):
        read_mask(path)


@pytest.mark.parametrize(
    "header",
    [
        "dims 3 3\nspacing 1 1 1\norigin 0 0 0\ndtype int16",
        "dims 3 3 3\nspacing 1 1\norigin 0 0 0\ndtype int16",
        "dims 3 3 3\nspacing 1 1 1\norig 0 0 0\ndtype int16",
        "dims 3 3 3\nspacing 1 1 1\norigin 0 0 0\ndtype int8",
        "dims a 3 3\nspacing 1 1 1\norigin 0 0 0\ndtype int16",
    ],
)
def test_vvol_malformed_header_names_line(tmp_path, header):
    path = tmp_path / "bad.vvol"
    body = np.zeros(27, "<i2").tobytes()
    path.write_bytes(header.encode() + b"\n\n" + body)
    with pytest.raises(ValidationError, match="malformed VVOL header"):
        read_volume(path)


def test_vvol_size_mismatch(tmp_path):
    path = tmp_path / "short.vvol"
    path.write_bytes(b"dims 3 3 3\nspacing 1 1 1\norigin 0 0 0\ndtype int16\n\n" + b"\x00" * 10)
    with pytest.raises(ValidationError, match="size mismatch"):
        read_volume(path)


def test_geometry_validation():
    with pytest.raises(ValidationError, match="spacing"):
        Volume(np.zeros((3, 3, 3)), spacing=(0, 1, 1))
    with pytest.raises(ValidationError, match="3D"):
        Volume(np.zeros((3, 3)))


def test_index_mm_transforms():
    vol = Volume(np.zeros((4, 4, 4)), (2.0, 1.0, 0.5), (10.0, 0.0, -1.0))
    mm = vol.index_to_mm([[1, 2, 3]])
    assert np.allclose(mm, [[12.0, 2.0, 0.5]])
    assert np.allclose(vol.mm_to_index(mm[0]), [1, 2, 3])
