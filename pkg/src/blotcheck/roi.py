"""ROI generation: keep the big rectangular blot blocks, black out the rest.

The figure is grayscaled and binarized (Otsu, inverted: blots are dark on a
light page), small gaps are closed, connected components are labeled, and
only components that look like blots (area, fill ratio, minimum side)
survive. Everything outside the kept bounding boxes becomes black.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConstantImage
from .image import ImageBuffer

__all__ = [
    "Component",
    "RoiFigure",
    "RoiParams",
    "to_grayscale",
    "binarize_otsu",
    "close_mask",
    "connected_components",
    "filter_blocks",
    "apply_mask",
    "extract_roi",
]


@dataclass(frozen=True)
class Component:
    """One connected foreground region."""

    id: int
    pixel_count: int
    bbox: tuple[int, int, int, int]  # (x, y, w, h), tight
    fill_ratio: float


@dataclass(frozen=True)
class RoiFigure:
    """Masked figure plus the components that were kept."""

    image: ImageBuffer
    kept: tuple[Component, ...]


@dataclass(frozen=True)
class RoiParams:
    min_area: int = 400
    min_fill: float = 0.5
    min_side: int = 8
    connectivity: int = 8

    def __post_init__(self) -> None:
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """Luma conversion, round-half-up. Grayscale input is returned as is."""
    if img.channels == 1:
        return img
    rgb = img.pixels.astype(np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return ImageBuffer(np.floor(luma + 0.5).astype(np.uint8))


def binarize_otsu(gray: ImageBuffer, invert: bool = True) -> tuple[np.ndarray, int]:
    """Otsu threshold over the 256-bin histogram; returns (mask, threshold).

    The threshold t splits pixels into {v < t} and {v >= t} and maximizes
    the between-class variance; ties resolve to the lowest t. The argmax is
    computed in exact integer arithmetic, so the result is insensitive to
    summation order. Foreground is ``< t`` when ``invert`` (dark-on-light),
    else ``>= t``.
    """
    if gray.channels != 1:
        raise ValueError("binarize_otsu expects a 1-channel image")
    pixels = gray.pixels
    hist = np.bincount(pixels.ravel(), minlength=256)
    if int(np.count_nonzero(hist)) <= 1:
        raise ConstantImage("all pixels equal; no threshold exists")

    counts = [int(c) for c in hist]
    total_n = sum(counts)
    total_s = sum(v * c for v, c in enumerate(counts))

    # between-class variance, up to the constant 1/N^2:
    #   (S0*N1 - S1*N0)^2 / (N0*N1); compared exactly via cross-multiplication
    best_t = 0
    best_num = -1
    best_den = 1
    n0 = 0
    s0 = 0
    for t in range(256):
        if t > 0:
            n0 += counts[t - 1]
            s0 += (t - 1) * counts[t - 1]
        n1 = total_n - n0
        if n0 == 0 or n1 == 0:
            continue
        s1 = total_s - s0
        num = (s0 * n1 - s1 * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:
            best_num, best_den, best_t = num, den, t

    mask = pixels < best_t if invert else pixels >= best_t
    return mask, best_t


def close_mask(mask: np.ndarray) -> np.ndarray:
    """One pass of 3x3 morphological closing, bridging 1-2 px gaps.

    The mask is padded before closing so objects touching the border are
    not eroded.
    """
    padded = np.pad(mask, 1, mode="constant", constant_values=False)
    closed = ndimage.binary_closing(padded, structure=np.ones((3, 3), bool))
    return closed[1:-1, 1:-1]


def connected_components(mask: np.ndarray, connectivity: int = 8) -> list[Component]:
    """Label maximal connected foreground sets.

    Component ids are 1..n in first-encounter (row-major) order. Each
    carries its pixel count, tight bounding box and fill ratio.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    if mask.dtype != bool:
        mask = mask.astype(bool)
    structure = np.ones((3, 3), int) if connectivity == 8 else None
    labels, n = ndimage.label(mask, structure=structure)
    if n == 0:
        return []

    # renumber so ids follow first encounter in a row-major scan
    flat = labels.ravel()
    nz = np.flatnonzero(flat)
    first_seen, order_idx = np.unique(flat[nz], return_index=True)
    encounter_order = first_seen[np.argsort(nz[order_idx])]
    remap = np.zeros(n + 1, dtype=labels.dtype)
    remap[encounter_order] = np.arange(1, n + 1)
    labels = remap[labels]

    counts = np.bincount(labels.ravel(), minlength=n + 1)
    slices = ndimage.find_objects(labels)
    out: list[Component] = []
    for i, sl in enumerate(slices, start=1):
        ys, xs = sl
        w = xs.stop - xs.start
        h = ys.stop - ys.start
        count = int(counts[i])
        out.append(
            Component(
                id=i,
                pixel_count=count,
                bbox=(xs.start, ys.start, w, h),
                fill_ratio=count / (w * h),
            )
        )
    return out


def filter_blocks(
    components: list[Component],
    min_area: int = 400,
    min_fill: float = 0.5,
    min_side: int = 8,
) -> list[Component]:
    """Keep blot-like components; order preserved, idempotent."""
    return [
        c
        for c in components
        if c.pixel_count >= min_area
        and c.fill_ratio >= min_fill
        and min(c.bbox[2], c.bbox[3]) >= min_side
    ]


def apply_mask(img: ImageBuffer, kept: list[Component]) -> RoiFigure:
    """Black out every pixel outside the kept bounding boxes."""
    out = np.zeros_like(img.pixels)
    for comp in kept:
        x, y, w, h = comp.bbox
        out[y : y + h, x : x + w] = img.pixels[y : y + h, x : x + w]
    return RoiFigure(image=ImageBuffer(out), kept=tuple(kept))


def extract_roi(img: ImageBuffer, params: RoiParams = RoiParams()) -> RoiFigure:
    """Full ROI pipeline on one figure.

    A constant (blank) figure yields an all-black ROI with nothing kept.
    """
    gray = to_grayscale(img)
    try:
        mask, _ = binarize_otsu(gray, invert=True)
    except ConstantImage:
        return apply_mask(gray, [])
    mask = close_mask(mask)
    comps = connected_components(mask, params.connectivity)
    kept = filter_blocks(comps, params.min_area, params.min_fill, params.min_side)
    return apply_mask(gray, kept)
