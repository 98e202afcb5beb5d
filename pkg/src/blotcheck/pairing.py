"""Pair dataset assembly: enumerate within-figure pairs, label, balance, split.

Pairs never cross figures. Splitting is by figure so near-identical panels
cannot leak between train and test.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import TooFewFigures, UnknownPanelIndex
from .segment import NormalizedPanel

__all__ = [
    "PairSample",
    "DatasetSplit",
    "enumerate_pairs",
    "label_pairs",
    "balance_pairs",
    "split_by_figure",
]


@dataclass(frozen=True)
class PairSample:
    """Ordered panel pair with its duplication label."""

    a: NormalizedPanel
    b: NormalizedPanel
    label: int
    figure_key: tuple[str, str]

    def __post_init__(self) -> None:
        if self.a.figure_key != self.b.figure_key:
            raise ValueError("pair members must come from the same figure")
        if not self.a.index < self.b.index:
            raise ValueError("pair must be ordered by panel index")
        if self.label not in (0, 1):
            raise ValueError("label must be 0 or 1")


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[PairSample, ...]
    val: tuple[PairSample, ...]
    test: tuple[PairSample, ...]
    seed: int
    fractions: tuple[float, float, float]

    def __iter__(self):
        yield from (("train", self.train), ("val", self.val), ("test", self.test))


def enumerate_pairs(panels: list[NormalizedPanel]) -> list[tuple[int, int]]:
    """All unordered index pairs k < k' over one figure's panels."""
    keys = {p.figure_key for p in panels}
    if len(keys) > 1:
        raise ValueError(f"panels span multiple figures: {sorted(keys)}")
    return list(itertools.combinations(range(len(panels)), 2))


def label_pairs(
    panels: list[NormalizedPanel],
    pairs: list[tuple[int, int]],
    ground_truth,
) -> list[PairSample]:
    """Attach labels: 1 iff the pair is in the duplicate set (unordered)."""
    n = len(panels)
    truth = set()
    for k, k2 in ground_truth:
        if not (0 <= k < n and 0 <= k2 < n):
            raise UnknownPanelIndex(f"pair ({k},{k2}) outside 0..{n - 1}")
        truth.add(frozenset((k, k2)))
    out: list[PairSample] = []
    for k, k2 in pairs:
        label = 1 if frozenset((k, k2)) in truth else 0
        out.append(
            PairSample(a=panels[k], b=panels[k2], label=label, figure_key=panels[k].figure_key)
        )
    return out


def balance_pairs(samples: list[PairSample], max_neg_per_pos: int, seed: int) -> list[PairSample]:
    """Keep all positives, subsample negatives to the given ratio.

    With no positives the input is returned unchanged. Selection is
    uniform without replacement and deterministic for a fixed seed; input
    order is preserved.
    """
    if max_neg_per_pos < 1:
        raise ValueError("max_neg_per_pos must be >= 1")
    pos_idx = [i for i, s in enumerate(samples) if s.label == 1]
    if not pos_idx:
        return list(samples)
    neg_idx = [i for i, s in enumerate(samples) if s.label == 0]
    budget = max_neg_per_pos * len(pos_idx)
    if len(neg_idx) > budget:
        rng = np.random.default_rng(seed)
        chosen = rng.choice(len(neg_idx), size=budget, replace=False)
        neg_idx = [neg_idx[i] for i in sorted(chosen.tolist())]
    keep = sorted(pos_idx + neg_idx)
    return [samples[i] for i in keep]


def split_by_figure(
    samples: list[PairSample],
    fractions: tuple[float, float, float],
    seed: int,
) -> DatasetSplit:
    """Partition figures (not pairs) into train/val/test by fraction.

    Figures are shuffled by seed and assigned by cumulative fraction of
    the figure count; every pair follows its figure. Raises
    :class:`TooFewFigures` when there are fewer figures than splits with
    a positive fraction.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ValueError("fractions must be three non-negative numbers")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")

    figures: list[tuple[str, str]] = []
    seen = set()
    for s in samples:
        if s.figure_key not in seen:
            seen.add(s.figure_key)
            figures.append(s.figure_key)

    wanted = sum(1 for f in fractions if f > 0)
    if len(figures) < wanted:
        raise TooFewFigures(f"{len(figures)} figures cannot fill {wanted} splits")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(figures))
    shuffled = [figures[i] for i in order]

    n = len(figures)
    b1 = int(np.floor(fractions[0] * n))
    b2 = int(np.floor((fractions[0] + fractions[1]) * n))
    counts = [b1, b2 - b1, n - b2]
    # a positive-fraction split must not come out empty when figures suffice
    for i in range(3):
        while fractions[i] > 0 and counts[i] == 0:
            donor = int(np.argmax(counts))
            counts[donor] -= 1
            counts[i] += 1

    assignment: dict[tuple[str, str], int] = {}
    pos = 0
    for split_id, count in enumerate(counts):
        for key in shuffled[pos : pos + count]:
            assignment[key] = split_id
        pos += count

    buckets: tuple[list[PairSample], list[PairSample], list[PairSample]] = ([], [], [])
    for s in samples:
        buckets[assignment[s.figure_key]].append(s)
    return DatasetSplit(
        train=tuple(buckets[0]),
        val=tuple(buckets[1]),
        test=tuple(buckets[2]),
        seed=seed,
        fractions=fractions,
    )
