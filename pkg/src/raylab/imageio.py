"""Float image I/O: PFM for lossless reference output, PPM for viewing.

Images are numpy arrays of shape (height, width, 3), row-major with the
origin at the top-left.  PFM files are written little-endian (scale -1.0)
with rows bottom-up per the format convention, so a write/read round trip
is bit-exact.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import RaylabError


class ImageFormatError(RaylabError):
    """Malformed image file header or payload."""


def write_pfm(path: str, image: np.ndarray) -> None:
    img = np.asarray(image, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ImageFormatError(f"expected (h, w, 3) image, got shape {img.shape}")
    h, w = img.shape[:2]
    with open(path, "wb") as f:
        f.write(f"PF\n{w} {h}\n-1.0\n".encode("ascii"))
        f.write(img[::-1].astype("<f4").tobytes())


def read_pfm(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"PF":
        raise ImageFormatError(f"not a color PFM file: {path}")
    try:
        dims = parts[1].split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(parts[2])
    except (ValueError, IndexError) as exc:
        raise ImageFormatError(f"bad PFM header in {path}: {exc}") from None
    payload = parts[3]
    expected = w * h * 3 * 4
    if len(payload) < expected:
        raise ImageFormatError(
            f"PFM payload truncated in {path}: {len(payload)} < {expected} bytes"
        )
    dtype = "<f4" if scale < 0.0 else ">f4"
    img = np.frombuffer(payload[:expected], dtype=dtype).reshape(h, w, 3)
    return img[::-1].astype(np.float32)


def tonemap(image: np.ndarray, gamma: float = 2.2) -> np.ndarray:
    """Clamp to [0, 1], gamma-encode, quantize round-to-nearest to 8 bits."""
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    x = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    encoded = np.power(x, 1.0 / gamma)
    return np.rint(encoded * 255.0).astype(np.uint8)


def write_ppm(path: str, image8: np.ndarray) -> None:
    img = np.asarray(image8)
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
        raise ImageFormatError(f"expected uint8 (h, w, 3) image, got {img.dtype} {img.shape}")
    h, w = img.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def mse(image: np.ndarray, reference: np.ndarray) -> float:
    a = np.asarray(image, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    if a.shape != r.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {r.shape}")
    return float(np.mean((a - r) ** 2))


def relmse(image: np.ndarray, reference: np.ndarray) -> float:
    """Squared error normalized by squared reference plus a small constant."""
    a = np.asarray(image, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    if a.shape != r.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {r.shape}")
    return float(np.mean((a - r) ** 2 / (r * r + 1e-2)))


def error_map(image: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Per-pixel relative squared error (channel mean), for diff images."""
    a = np.asarray(image, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    err = (a - r) ** 2 / (r * r + 1e-2)
    return err.mean(axis=-1).astype(np.float32)


def checked_finite(image: np.ndarray) -> bool:
    return bool(np.isfinite(image).all())
