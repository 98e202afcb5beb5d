"""Raster image container and decode/encode helpers.

Pixels live in a uint8 numpy array, shape ``(H, W)`` for grayscale or
``(H, W, 3)`` for RGB. Pillow handles the PNG/JPEG byte formats; everything
downstream works on the arrays.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeFailed, EmptyImage

__all__ = ["ImageBuffer", "decode_image", "encode_png", "load_image", "rgb_to_hsv"]


@dataclass(frozen=True)
class ImageBuffer:
    """Decoded raster image, immutable after construction.

    ``pixels`` is uint8 and row-major: ``(height, width)`` with 1 channel
    or ``(height, width, 3)`` with 3 channels.
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = self.pixels
        if px.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {px.dtype}")
        if px.ndim == 2:
            pass
        elif px.ndim == 3 and px.shape[2] == 3:
            pass
        else:
            raise ValueError(f"pixels must be (H,W) or (H,W,3), got {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise EmptyImage(f"image has zero area: {px.shape}")
        px.setflags(write=False)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    def crop(self, x: int, y: int, w: int, h: int) -> "ImageBuffer":
        """Pixel-exact crop of the rectangle ``(x, y, w, h)``."""
        from .errors import OutOfBounds

        if x < 0 or y < 0 or w < 1 or h < 1 or x + w > self.width or y + h > self.height:
            raise OutOfBounds(f"crop ({x},{y},{w},{h}) outside {self.width}x{self.height}")
        return ImageBuffer(self.pixels[y : y + h, x : x + w].copy())


def decode_image(data: bytes) -> ImageBuffer:
    """Decode PNG or JPEG bytes into an :class:`ImageBuffer`.

    Palette and RGBA inputs are flattened to RGB; 16-bit grayscale is
    scaled down to 8 bits by Pillow's conversion.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.format not in ("PNG", "JPEG"):
                raise DecodeFailed(f"unsupported format: {im.format}")
            if im.mode in ("L",):
                arr = np.asarray(im, dtype=np.uint8)
            elif im.mode in ("RGB",):
                arr = np.asarray(im, dtype=np.uint8)
            else:
                target = "L" if im.mode in ("1", "I", "I;16", "F") else "RGB"
                arr = np.asarray(im.convert(target), dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise DecodeFailed("not a decodable PNG/JPEG image") from exc
    except DecodeFailed:
        raise
    except OSError as exc:
        raise DecodeFailed(f"image decode failed: {exc}") from exc
    if arr.size == 0:
        raise EmptyImage("decoded image has zero area")
    return ImageBuffer(np.ascontiguousarray(arr))


def load_image(path) -> ImageBuffer:
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def encode_png(img: ImageBuffer) -> bytes:
    """Encode to PNG bytes. Deterministic for identical pixel data."""
    mode = "L" if img.channels == 1 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def rgb_to_hsv(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized RGB (H,W,3) uint8 -> (hue deg [0,360), sat [0,1], val [0,1])."""
    rgb = pixels.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    cmax = rgb.max(axis=-1)
    cmin = rgb.min(axis=-1)
    delta = cmax - cmin

    sat = np.zeros_like(cmax)
    nonzero = cmax > 0
    sat[nonzero] = delta[nonzero] / cmax[nonzero]

    hue = np.zeros_like(cmax)
    mask = delta > 0
    rmax = mask & (cmax == r)
    gmax = mask & (cmax == g) & ~rmax
    bmax = mask & ~rmax & ~gmax
    hue[rmax] = 60.0 * (((g[rmax] - b[rmax]) / delta[rmax]) % 6.0)
    hue[gmax] = 60.0 * ((b[gmax] - r[gmax]) / delta[gmax] + 2.0)
    hue[bmax] = 60.0 * ((r[bmax] - g[bmax]) / delta[bmax] + 4.0)
    return hue, sat, cmax
