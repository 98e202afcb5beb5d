"""Pipeline configuration: defaults and the flat key=value config file.

The file format is a flat list of dotted keys, one per line::

    roi.min_area = 400
    split.fractions = [0.8, 0.1, 0.1]
    train.optimizer = "adam"

Values are JSON scalars/arrays; bare words are taken as strings. Lines
starting with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace

from .net.optim import TrainConfig
from .roi import RoiParams

__all__ = ["PipelineConfig", "load_config"]


@dataclass(frozen=True)
class PipelineConfig:
    roi_min_area: int = 400
    roi_min_fill: float = 0.5
    roi_min_side: int = 8
    roi_connectivity: int = 8
    annotate_min_saturation: float = 0.5
    segment_input_size: int = 64
    pairs_max_neg_per_pos: int = 3  # 0 disables balancing
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_seed: int = 0
    train_learning_rate: float = 1e-3
    train_epochs: int = 20
    train_batch_size: int = 32
    train_seed: int = 0
    train_optimizer: str = "adam"
    train_beta1: float = 0.9
    train_beta2: float = 0.999
    train_eps: float = 1e-8
    train_merge_mode: str = "absdiff"
    detect_threshold: float = 0.5

    def roi_params(self) -> RoiParams:
        return RoiParams(
            min_area=self.roi_min_area,
            min_fill=self.roi_min_fill,
            min_side=self.roi_min_side,
            connectivity=self.roi_connectivity,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.train_learning_rate,
            epochs=self.train_epochs,
            batch_size=self.train_batch_size,
            seed=self.train_seed,
            optimizer=self.train_optimizer,
            beta1=self.train_beta1,
            beta2=self.train_beta2,
            eps=self.train_eps,
            merge_mode=self.train_merge_mode,
        )

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Override every stochastic stage with one seed."""
        return replace(self, split_seed=seed, train_seed=seed)

    def to_flat_dict(self) -> dict:
        out = {}
        for f in fields(self):
            key = f.name.replace("_", ".", 1)
            value = getattr(self, f.name)
            out[key] = list(value) if isinstance(value, tuple) else value
        return out


_FIELD_BY_KEY = {f.name.replace("_", ".", 1): f.name for f in fields(PipelineConfig)}


def _parse_value(raw: str):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw.strip("'\"")


def load_config(path: str | os.PathLike | None) -> PipelineConfig:
    """Read a config file over the defaults; ``None`` gives pure defaults."""
    if path is None:
        return PipelineConfig()
    overrides = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith(";"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = line.split("=", 1)
            key = key.strip()
            if key not in _FIELD_BY_KEY:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            value = _parse_value(raw)
            if key == "split.fractions":
                value = tuple(float(v) for v in value)
            overrides[_FIELD_BY_KEY[key]] = value
    return PipelineConfig(**overrides)
