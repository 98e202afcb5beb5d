"""Panel segmentation: crop kept blocks and normalize them for the network.

After masking, the blocks of interest are exactly the kept components, so
contour tracing reduces to reading their bounding boxes back out. Panels
are cropped pixel-exactly, then grayscaled, bilinearly resized to a square
and scaled to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfBounds
from .image import ImageBuffer
from .roi import RoiFigure, to_grayscale

__all__ = [
    "Panel",
    "NormalizedPanel",
    "find_panel_boxes",
    "extract_panels",
    "normalize_panel",
    "resize_bilinear",
]

DEFAULT_INPUT_SIZE = 64


@dataclass(frozen=True)
class Panel:
    """One segmented block: its provenance, box in the ROI figure, pixels."""

    doi: str
    figure_id: str
    index: int
    bbox: tuple[int, int, int, int]
    pixels: ImageBuffer


@dataclass(frozen=True)
class NormalizedPanel:
    """Network-ready panel: float32 tensor of shape (1, S, S) in [0, 1]."""

    doi: str
    figure_id: str
    index: int
    data: np.ndarray

    @property
    def figure_key(self) -> tuple[str, str]:
        return (self.doi, self.figure_id)


def find_panel_boxes(roi: RoiFigure) -> list[tuple[int, int, int, int]]:
    """Kept-component boxes in reading order: top-to-bottom, left-to-right."""
    return sorted((c.bbox for c in roi.kept), key=lambda b: (b[1], b[0]))


def extract_panels(
    roi: RoiFigure,
    boxes: list[tuple[int, int, int, int]],
    doi: str = "",
    figure_id: str = "",
) -> list[Panel]:
    """Pixel-exact crops, one panel per box, indexed in box order."""
    img = roi.image
    panels: list[Panel] = []
    for k, (x, y, w, h) in enumerate(boxes):
        if x < 0 or y < 0 or x + w > img.width or y + h > img.height:
            raise OutOfBounds(f"box ({x},{y},{w},{h}) outside {img.width}x{img.height}")
        panels.append(Panel(doi=doi, figure_id=figure_id, index=k, bbox=(x, y, w, h), pixels=img.crop(x, y, w, h)))
    return panels


def resize_bilinear(gray: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample of a 2-d array using half-pixel-centered sampling.

    Output pixel (i, j) samples the source at
    ``((i + 0.5) * H/out_h - 0.5, (j + 0.5) * W/out_w - 0.5)``, with
    neighbor indices clamped at the borders. Returns float64.
    """
    src = np.asarray(gray, dtype=np.float64)
    h, w = src.shape
    sy = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    sx = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    y0 = np.floor(sy).astype(int)
    x0 = np.floor(sx).astype(int)
    fy = sy - y0
    fx = sx - x0
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    fy = fy[:, None]
    fx = fx[None, :]
    top = src[np.ix_(y0c, x0c)] * (1 - fx) + src[np.ix_(y0c, x1c)] * fx
    bot = src[np.ix_(y1c, x0c)] * (1 - fx) + src[np.ix_(y1c, x1c)] * fx
    return top * (1 - fy) + bot * fy


def normalize_panel(panel: Panel, size: int = DEFAULT_INPUT_SIZE) -> NormalizedPanel:
    """Grayscale, resize to ``size`` x ``size`` (aspect not preserved), /255."""
    if size < 8:
        raise ValueError("network input size must be >= 8")
    gray = to_grayscale(panel.pixels).pixels
    resized = resize_bilinear(gray, size, size) / 255.0
    data = resized.astype(np.float32)[None, :, :]
    return NormalizedPanel(doi=panel.doi, figure_id=panel.figure_id, index=panel.index, data=data)
