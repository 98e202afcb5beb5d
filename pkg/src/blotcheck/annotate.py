"""Reviewer-annotation handling: find colored bounding-box rings, strip them.

Blot figures are essentially grayscale, so saturated pixels are reviewer
markup. Rings are found as connected components of the saturated mask that
trace the border of their bounding rectangle while leaving its inside
empty; stripping returns the pixels inside the ring, untouched.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInterior, NotColorImage
from .image import ImageBuffer, rgb_to_hsv
from .roi import connected_components

__all__ = [
    "AnnotationBox",
    "detect_annotation_boxes",
    "strip_annotation_box",
    "label_regions",
    "draw_ring",
    "group_boxes_by_color",
]

MIN_VALUE = 0.3  # ignore saturated-but-near-black pixels
BORDER_OCCUPANCY = 0.8
INTERIOR_OCCUPANCY = 0.1
HUE_GROUP_TOLERANCE = 30.0  # degrees


@dataclass(frozen=True)
class AnnotationBox:
    """A detected rectangular annotation ring."""

    rect: tuple[int, int, int, int]  # (x, y, w, h) of the full ring
    ring_color: tuple[int, int, int]
    ring_thickness: int


def _modal_thickness(comp_mask: np.ndarray) -> int:
    """Ring thickness as the modal downward run length from the top edge.

    Columns over the left/right bars run the full height; the many columns
    crossing only the top bar run exactly the thickness, so the mode is the
    thickness. Ties resolve to the smaller run.
    """
    h, w = comp_mask.shape
    runs: list[int] = []
    for x in range(w):
        if not comp_mask[0, x]:
            continue
        run = 0
        while run < h and comp_mask[run, x]:
            run += 1
        runs.append(run)
    if not runs:
        return 1
    counted = Counter(runs)
    return min(sorted(counted), key=lambda r: (-counted[r], r))


def _hue_distance(h1: float, h2: float) -> float:
    d = abs(h1 - h2) % 360.0
    return min(d, 360.0 - d)


def _pixel_hue(color: tuple[int, int, int]) -> float:
    arr = np.array(color, dtype=np.uint8).reshape(1, 1, 3)
    hue, _, _ = rgb_to_hsv(arr)
    return float(hue[0, 0])


def detect_annotation_boxes(
    img: ImageBuffer,
    min_saturation: float = 0.5,
    color: tuple[int, int, int] | None = None,
) -> list[AnnotationBox]:
    """Find every saturated rectangular ring in the figure.

    An empty result means the figure carries no reviewer markup. When
    ``color`` is given, only rings whose hue is close to it are returned.
    Raises :class:`NotColorImage` for grayscale input.
    """
    if img.channels != 3:
        raise NotColorImage("annotation detection needs a 3-channel image")
    hue, sat, val = rgb_to_hsv(img.pixels)
    mask = (sat >= min_saturation) & (val >= MIN_VALUE)
    if not mask.any():
        return []

    boxes: list[AnnotationBox] = []
    for comp in connected_components(mask, connectivity=8):
        x, y, w, h = comp.bbox
        if w < 4 or h < 4:
            continue
        region = mask[y : y + h, x : x + w]

        border = np.zeros((h, w), bool)
        border[0, :] = border[-1, :] = True
        border[:, 0] = border[:, -1] = True
        if region[border].mean() < BORDER_OCCUPANCY:
            continue

        t = _modal_thickness(region)
        t = max(1, min(t, (min(w, h) - 1) // 2))
        iw, ih = w - 2 * t, h - 2 * t
        if iw < 1 or ih < 1:
            continue
        interior = region[t : t + ih, t : t + iw]
        if interior.mean() > INTERIOR_OCCUPANCY:
            continue

        ring_pixels = img.pixels[y : y + h, x : x + w][region]
        ring_color = tuple(int(round(v)) for v in ring_pixels.mean(axis=0))
        if color is not None:
            if _hue_distance(_pixel_hue(ring_color), _pixel_hue(color)) > HUE_GROUP_TOLERANCE:
                continue
        boxes.append(AnnotationBox(rect=(x, y, w, h), ring_color=ring_color, ring_thickness=t))

    # nested rings: keep outermost only
    def contained(inner: AnnotationBox, outer: AnnotationBox) -> bool:
        ix, iy, iw, ih = inner.rect
        ox, oy, ow, oh = outer.rect
        return (inner is not outer) and ix >= ox and iy >= oy and ix + iw <= ox + ow and iy + ih <= oy + oh

    return [b for b in boxes if not any(contained(b, other) for other in boxes)]


def strip_annotation_box(img: ImageBuffer, box: AnnotationBox) -> ImageBuffer:
    """Crop the ring's interior: the rect shrunk inward by the thickness."""
    x, y, w, h = box.rect
    t = box.ring_thickness
    iw, ih = w - 2 * t, h - 2 * t
    if iw < 1 or ih < 1:
        raise DegenerateInterior(f"ring {box.rect} with thickness {t} has no interior")
    return img.crop(x + t, y + t, iw, ih)


def label_regions(img: ImageBuffer, boxes: list[AnnotationBox]) -> tuple[list[ImageBuffer], bool]:
    """Stripped interiors plus the figure-level duplication flag."""
    return [strip_annotation_box(img, b) for b in boxes], bool(boxes)


def group_boxes_by_color(boxes: list[AnnotationBox]) -> list[list[int]]:
    """Group box indices whose ring hues lie within a common tolerance.

    Reviewer markup uses one color per duplication group, so same-colored
    rings mark copies of each other.
    """
    groups: list[list[int]] = []
    hues = [_pixel_hue(b.ring_color) for b in boxes]
    for i in range(len(boxes)):
        for group in groups:
            if _hue_distance(hues[i], hues[group[0]]) <= HUE_GROUP_TOLERANCE:
                group.append(i)
                break
        else:
            groups.append([i])
    return groups


def draw_ring(
    img: ImageBuffer,
    rect: tuple[int, int, int, int],
    color: tuple[int, int, int],
    thickness: int = 2,
) -> ImageBuffer:
    """Paint a rectangular ring over the image (promoting grayscale to RGB).

    The ring occupies ``rect``; pixels strictly inside the frame keep their
    original values, which is what makes detection + stripping a lossless
    round trip.
    """
    x, y, w, h = rect
    if thickness < 1:
        raise ValueError("thickness must be >= 1")
    if x < 0 or y < 0 or x + w > img.width or y + h > img.height:
        raise ValueError(f"rect {rect} outside image {img.width}x{img.height}")
    if img.channels == 1:
        canvas = np.repeat(img.pixels[:, :, None], 3, axis=2).copy()
    else:
        canvas = img.pixels.copy()
    t = thickness
    col = np.array(color, dtype=np.uint8)
    canvas[y : y + t, x : x + w] = col
    canvas[y + h - t : y + h, x : x + w] = col
    canvas[y : y + h, x : x + t] = col
    canvas[y : y + h, x + w - t : x + w] = col
    return ImageBuffer(canvas)
