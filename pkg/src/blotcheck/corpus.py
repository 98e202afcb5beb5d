"""Figure corpus: manifest loading, cached fetching, synthetic generation.

A corpus is a CSV manifest (``doi,figure_id,source,label,annotation_color``)
pointing at PNG/JPEG files or URLs, optionally accompanied by a
``ground_truth.json`` sidecar recording planted panel boxes and duplicate
pairs. The synthetic generator writes all three pieces and is a pure
function of its spec: identical specs produce identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DuplicateKey, FetchFailed, MalformedManifest
from .image import ImageBuffer, decode_image, encode_png

__all__ = [
    "FigureRecord",
    "SyntheticSpec",
    "GroundTruthEntry",
    "load_manifest",
    "fetch_figure",
    "generate_synthetic_corpus",
    "load_ground_truth",
    "sidecar_path_for",
]

MANIFEST_FIELDS = ["doi", "figure_id", "source", "label", "annotation_color"]
LABELS = ("clean", "duplicated")

# synthetic canvas; generous enough that rejection-sampled placement
# of <= ~8 blocks never runs out of room
CANVAS_W = 480
CANVAS_H = 360
BACKGROUND = 246
EDGE_MARGIN = 10
BLOCK_GAP = 6


@dataclass(frozen=True)
class FigureRecord:
    """One manifest row: a single figure of a single paper."""

    doi: str
    figure_id: str
    source: str
    label: str  # "clean" | "duplicated"
    annotation_color: tuple[int, int, int] | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.doi, self.figure_id)


@dataclass(frozen=True)
class GroundTruthEntry:
    """Sidecar row: planted block boxes and duplicate pairs of one figure."""

    doi: str
    figure_id: str
    blocks: tuple[tuple[int, int, int, int], ...]
    duplicate_pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a generated corpus.

    ``noise_level`` is the std of the texture added to every block;
    ``duplicate_noise`` is the std of the extra perturbation applied to the
    planted copy only.
    """

    n_figures: int
    duplication_rate: float
    blocks_per_figure: tuple[int, int] = (2, 5)
    block_size: tuple[int, int] = (24, 64)
    noise_level: float = 8.0
    duplicate_noise: float = 0.0
    seed: int = 0
    glyph_rows: tuple[int, int] = (1, 3)

    def __post_init__(self) -> None:
        if not 0.0 <= self.duplication_rate <= 1.0:
            raise ValueError("duplication_rate must be in [0, 1]")
        if self.n_figures < 0:
            raise ValueError("n_figures must be >= 0")
        for name in ("blocks_per_figure", "block_size", "glyph_rows"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 1:
                raise ValueError(f"{name} range ({lo}, {hi}) is empty or invalid")


def _parse_color(text: str) -> tuple[int, int, int] | None:
    text = text.strip()
    if not text:
        return None
    if len(text) != 6:
        raise MalformedManifest(f"annotation_color must be RRGGBB hex, got {text!r}")
    try:
        return (int(text[0:2], 16), int(text[2:4], 16), int(text[4:6], 16))
    except ValueError as exc:
        raise MalformedManifest(f"annotation_color must be RRGGBB hex, got {text!r}") from exc


def load_manifest(path: str | os.PathLike) -> list[FigureRecord]:
    """Read a manifest CSV into records, order-preserving.

    Relative ``source`` paths are resolved against the manifest's directory.
    Raises :class:`MalformedManifest` for missing fields or bad values and
    :class:`DuplicateKey` for repeated (doi, figure_id).
    """
    path = Path(path)
    base = path.parent
    records: list[FigureRecord] = []
    seen: set[tuple[str, str]] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if [f.strip() for f in reader.fieldnames] != MANIFEST_FIELDS:
            raise MalformedManifest(
                f"manifest header must be {','.join(MANIFEST_FIELDS)}, got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            if any(row.get(f) is None for f in MANIFEST_FIELDS):
                raise MalformedManifest(f"line {lineno}: missing field")
            doi = row["doi"].strip()
            figure_id = row["figure_id"].strip()
            source = row["source"].strip()
            label = row["label"].strip().lower()
            if not doi or not figure_id or not source:
                raise MalformedManifest(f"line {lineno}: empty required field")
            if label not in LABELS:
                raise MalformedManifest(f"line {lineno}: label must be clean|duplicated, got {label!r}")
            key = (doi, figure_id)
            if key in seen:
                raise DuplicateKey(f"line {lineno}: repeated (doi, figure_id) {key}")
            seen.add(key)
            if not _is_url(source) and not os.path.isabs(source):
                source = str(base / source)
            records.append(
                FigureRecord(
                    doi=doi,
                    figure_id=figure_id,
                    source=source,
                    label=label,
                    annotation_color=_parse_color(row["annotation_color"]),
                )
            )
    return records


def _is_url(source: str) -> bool:
    return source.startswith("http://") or source.startswith("https://")


def _atomic_write(path: Path, data: bytes) -> None:
    # write-temp-then-rename so concurrent fetchers never see partial files
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def fetch_figure(record: FigureRecord, cache_dir: str | os.PathLike | None = None) -> ImageBuffer:
    """Fetch and decode a figure.

    URL sources are cached under ``cache_dir`` keyed by the SHA-256 of the
    source string; a second call is served from disk without refetching.
    Local sources are read directly.
    """
    if _is_url(record.source):
        if cache_dir is None:
            raise FetchFailed("cache_dir required for URL sources")
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        key = hashlib.sha256(record.source.encode("utf-8")).hexdigest()
        cached = cache_dir / f"{key}.img"
        if cached.exists():
            data = cached.read_bytes()
        else:
            try:
                with urllib.request.urlopen(record.source, timeout=30) as resp:
                    data = resp.read()
            except (urllib.error.URLError, OSError, ValueError) as exc:
                raise FetchFailed(f"cannot fetch {record.source}: {exc}") from exc
            _atomic_write(cached, data)
        return decode_image(data)

    try:
        with open(record.source, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FetchFailed(f"cannot read {record.source}: {exc}") from exc
    return decode_image(data)


# ---------------------------------------------------------------------------
# synthetic corpus
# ---------------------------------------------------------------------------


def _rects_clear(rect: tuple[int, int, int, int], placed: list[tuple[int, int, int, int]], gap: int) -> bool:
    x, y, w, h = rect
    for px, py, pw, ph in placed:
        if x < px + pw + gap and px < x + w + gap and y < py + ph + gap and py < y + h + gap:
            return False
    return True


def _place_rect(
    rng: np.random.Generator,
    w: int,
    h: int,
    placed: list[tuple[int, int, int, int]],
    attempts: int = 1000,
) -> tuple[int, int, int, int]:
    for _ in range(attempts):
        x = int(rng.integers(EDGE_MARGIN, CANVAS_W - EDGE_MARGIN - w + 1))
        y = int(rng.integers(EDGE_MARGIN, CANVAS_H - EDGE_MARGIN - h + 1))
        rect = (x, y, w, h)
        if _rects_clear(rect, placed, BLOCK_GAP):
            return rect
    raise RuntimeError("could not place rectangle; canvas too crowded")


def _block_texture(rng: np.random.Generator, w: int, h: int, noise_level: float) -> np.ndarray:
    base = rng.uniform(45.0, 140.0)
    tex = base + rng.normal(0.0, noise_level, size=(h, w))
    return np.clip(np.rint(tex), 0, 210).astype(np.uint8)


def _draw_glyph_row(rng: np.random.Generator, canvas: np.ndarray, placed: list[tuple[int, int, int, int]]) -> None:
    """Scatter a row of text-like marks, each <= 8x8 px, spaced so the
    morphological closing in the ROI step cannot merge them."""
    n_glyphs = int(rng.integers(3, 9))
    widths = rng.integers(3, 9, size=n_glyphs)
    height = int(rng.integers(4, 9))
    gaps = rng.integers(4, 7, size=n_glyphs)
    row_w = int(widths.sum() + gaps[:-1].sum()) if n_glyphs > 1 else int(widths.sum())
    if row_w > CANVAS_W - 2 * EDGE_MARGIN:
        return
    try:
        rx, ry, _, _ = _place_rect(rng, row_w, height, placed, attempts=200)
    except RuntimeError:
        return
    placed.append((rx, ry, row_w, height))
    cx = rx
    for i in range(n_glyphs):
        gw = int(widths[i])
        shade = int(rng.integers(40, 90))
        canvas[ry : ry + height, cx : cx + gw] = shade
        cx += gw + int(gaps[i])


def _render_figure(
    spec: SyntheticSpec, index: int, duplicated: bool
) -> tuple[np.ndarray, list[tuple[int, int, int, int]], list[tuple[int, int]]]:
    rng = np.random.default_rng([spec.seed, 2, index])
    canvas = np.full((CANVAS_H, CANVAS_W), BACKGROUND, dtype=np.uint8)

    lo, hi = spec.blocks_per_figure
    n_blocks = int(rng.integers(lo, hi + 1))
    if duplicated and n_blocks < 2:
        n_blocks = 2

    smin, smax = spec.block_size
    rects: list[tuple[int, int, int, int]] = []
    contents: list[np.ndarray] = []
    n_base = n_blocks - 1 if duplicated else n_blocks
    for _ in range(n_base):
        w = int(rng.integers(smin, smax + 1))
        h = int(rng.integers(smin, smax + 1))
        rect = _place_rect(rng, w, h, rects)
        rects.append(rect)
        contents.append(_block_texture(rng, w, h, spec.noise_level))

    pair: tuple[int, int] | None = None
    if duplicated:
        src = int(rng.integers(0, n_base))
        _, _, w, h = rects[src]
        rect = _place_rect(rng, w, h, rects)
        copy = contents[src].astype(np.float64)
        if spec.duplicate_noise > 0:
            copy = copy + rng.normal(0.0, spec.duplicate_noise, size=copy.shape)
        rects.append(rect)
        contents.append(np.clip(np.rint(copy), 0, 255).astype(np.uint8))
        pair = (src, len(rects) - 1)

    for (x, y, w, h), content in zip(rects, contents):
        canvas[y : y + h, x : x + w] = content

    occupied = list(rects)
    glo, ghi = spec.glyph_rows
    for _ in range(int(rng.integers(glo, ghi + 1))):
        _draw_glyph_row(rng, canvas, occupied)

    # report blocks in reading order (top-to-bottom, then left-to-right) so
    # sidecar indices line up with downstream panel ordering
    order = sorted(range(len(rects)), key=lambda i: (rects[i][1], rects[i][0]))
    inverse = {old: new for new, old in enumerate(order)}
    sorted_rects = [rects[i] for i in order]
    pairs: list[tuple[int, int]] = []
    if pair is not None:
        a, b = inverse[pair[0]], inverse[pair[1]]
        pairs.append((min(a, b), max(a, b)))
    return canvas, sorted_rects, pairs


def generate_synthetic_corpus(spec: SyntheticSpec, out_dir: str | os.PathLike) -> list[FigureRecord]:
    """Write a synthetic corpus: PNG figures, manifest.csv, ground_truth.json.

    Exactly ``round(n_figures * duplication_rate)`` figures contain one
    planted duplicate pair. Output bytes are a pure function of ``spec``.
    """
    out_dir = Path(out_dir)
    img_dir = out_dir / "images"
    img_dir.mkdir(parents=True, exist_ok=True)

    n_dup = int(round(spec.n_figures * spec.duplication_rate))
    pick = np.random.default_rng([spec.seed, 1])
    dup_set = set(pick.permutation(spec.n_figures)[:n_dup].tolist())

    records: list[FigureRecord] = []
    sidecar: list[dict] = []
    rows: list[list[str]] = []
    for i in range(spec.n_figures):
        duplicated = i in dup_set
        canvas, rects, pairs = _render_figure(spec, i, duplicated)
        rel = f"images/fig_{i:04d}.png"
        _atomic_write(out_dir / rel, encode_png(ImageBuffer(canvas)))
        doi = f"10.5555/synthetic.{i:04d}"
        label = "duplicated" if duplicated else "clean"
        rows.append([doi, "1", rel, label, ""])
        records.append(
            FigureRecord(doi=doi, figure_id="1", source=str(out_dir / rel), label=label)
        )
        sidecar.append(
            {
                "doi": doi,
                "figure_id": "1",
                "blocks": [list(r) for r in rects],
                "duplicate_pairs": [list(p) for p in pairs],
            }
        )

    manifest_lines = [",".join(MANIFEST_FIELDS)]
    manifest_lines += [",".join(row) for row in rows]
    _atomic_write(out_dir / "manifest.csv", ("\n".join(manifest_lines) + "\n").encode("utf-8"))
    _atomic_write(
        out_dir / "ground_truth.json",
        (json.dumps(sidecar, indent=2) + "\n").encode("utf-8"),
    )
    return records


def sidecar_path_for(manifest_path: str | os.PathLike) -> Path:
    return Path(manifest_path).parent / "ground_truth.json"


def load_ground_truth(path: str | os.PathLike) -> dict[tuple[str, str], GroundTruthEntry]:
    """Read a sidecar file into a (doi, figure_id) -> entry mapping."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    out: dict[tuple[str, str], GroundTruthEntry] = {}
    for item in raw:
        entry = GroundTruthEntry(
            doi=item["doi"],
            figure_id=item["figure_id"],
            blocks=tuple(tuple(int(v) for v in b) for b in item["blocks"]),
            duplicate_pairs=tuple(tuple(int(v) for v in p) for p in item["duplicate_pairs"]),
        )
        out[(entry.doi, entry.figure_id)] = entry
    return out
