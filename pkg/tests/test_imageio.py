"""Image file formats, tone mapping, and error metrics."""

import math

import numpy as np
import pytest

from raylab.imageio import (
    ImageFormatError,
    error_map,
    mse,
    read_pfm,
    relmse,
    tonemap,
    write_pfm,
    write_ppm,
)


def test_pfm_1x1_layout(tmp_path):
    path = tmp_path / "one.pfm"
    img = np.array([[[0.25, 0.5, 1.0]]], dtype=np.float32)
    write_pfm(path, img)
    data = path.read_bytes()
    header = b"PF\n1 1\n-1.0\n"
    assert data[: len(header)] == header, f"header was {data[:len(header)]!r}"
    payload = data[len(header) :]
    assert len(payload) == 12, f"expected 12 payload bytes, got {len(payload)}"
    assert np.frombuffer(payload, dtype="<f4").tolist() == [0.25, 0.5, 1.0]


def test_pfm_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    img = rng.random((64, 64, 3), dtype=np.float32) * 37.5
    img[3, 5] = (0.0, 1e-30, 1e30)
    path = tmp_path / "rt.pfm"
    write_pfm(path, img)
    back = read_pfm(path)
    assert back.dtype == np.float32
    assert back.shape == img.shape
    assert np.array_equal(back.view(np.uint32), img.view(np.uint32)), "bits changed"


def test_pfm_row_order_is_bottom_up(tmp_path):
    img = np.zeros((2, 1, 3), dtype=np.float32)
    img[0, 0] = (1.0, 2.0, 3.0)  # top row
    img[1, 0] = (4.0, 5.0, 6.0)  # bottom row
    path = tmp_path / "rows.pfm"
    write_pfm(path, img)
    payload = path.read_bytes().split(b"\n", 3)[3]
    first_row = np.frombuffer(payload[:12], dtype="<f4")
    assert first_row.tolist() == [4.0, 5.0, 6.0], "file must start with the bottom row"


def test_pfm_truncated_payload_rejected(tmp_path):
    path = tmp_path / "trunc.pfm"
    write_pfm(path, np.ones((4, 4, 3), dtype=np.float32))
    data = path.read_bytes()
    path.write_bytes(data[:-5])
    with pytest.raises(ImageFormatError):
        read_pfm(path)


def test_pfm_bad_header_rejected(tmp_path):
    path = tmp_path / "bad.pfm"
    path.write_bytes(b"Pf\n1 1\n-1.0\n" + b"\x00" * 4)
    with pytest.raises(ImageFormatError):
        read_pfm(path)


def test_ppm_all_zero_image(tmp_path):
    path = tmp_path / "zero.ppm"
    write_ppm(path, tonemap(np.zeros((3, 2, 3), dtype=np.float32)))
    data = path.read_bytes()
    header = b"P6\n2 3\n255\n"
    assert data[: len(header)] == header
    assert data[len(header) :] == b"\x00" * 18


def test_tonemap_anchor_values():
    img = np.array([[[0.0, 1.0, 0.5]]], dtype=np.float32)
    out = tonemap(img)
    assert out.dtype == np.uint8
    expected = round(255.0 * 0.5 ** (1.0 / 2.2))
    assert out[0, 0].tolist() == [0, 255, expected]
    assert expected == 186


def test_tonemap_clamps_range():
    img = np.array([[[-0.25, 2.0, 1e9]]], dtype=np.float32)
    assert tonemap(img)[0, 0].tolist() == [0, 255, 255]


def test_tonemap_rejects_bad_gamma():
    with pytest.raises(ValueError):
        tonemap(np.zeros((1, 1, 3), dtype=np.float32), gamma=0.0)


def test_mse_and_relmse():
    a = np.full((2, 2, 3), 2.0)
    r = np.full((2, 2, 3), 1.0)
    assert mse(a, r) == 1.0
    expected = 1.0 / (1.0 + 1e-2)
    assert abs(relmse(a, r) - expected) < 1e-12, f"relmse {relmse(a, r)}"
    assert relmse(r, r) == 0.0


def test_relmse_stable_near_black():
    a = np.full((1, 1, 3), 0.1)
    r = np.zeros((1, 1, 3))
    assert math.isfinite(relmse(a, r))
    assert abs(relmse(a, r) - 0.01 / 1e-2) < 1e-12


def test_error_map_shape_and_values():
    a = np.zeros((2, 3, 3))
    a[1, 2] = (1.0, 1.0, 1.0)
    r = np.zeros((2, 3, 3))
    m = error_map(a, r)
    assert m.shape == (2, 3)
    assert m[0, 0] == 0.0 and m[1, 2] > 0.0
