"""Run configuration: one YAML file drives every CLI command.

Sections map onto the module configs (forecast -> ForecastConfig, videogen ->
VideoGenConfig, ...); unknown keys are rejected so typos fail before any
computation starts. CLI flags can override single keys with
``--set section.key=value``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .heatmap_render import HeatmapSpec
from .pose_corrector import CorruptionModel
from .pose_forecaster import ForecastConfig
from .video_generator import VideoGenConfig


class ConfigError(ValueError):
    pass


@dataclass
class PathsConfig:
    manifest: str = "data/manifest.csv"
    checkpoint_dir: str = "checkpoints"
    output_dir: str = "outputs"


@dataclass
class DataConfig:
    subsample_stride: int = 1
    window_hop: int = 16
    augment_flip: bool = True

    def __post_init__(self):
        if self.subsample_stride < 1 or self.window_hop < 1:
            raise ConfigError("subsample_stride and window_hop must be >= 1")


@dataclass
class SynthConfig:
    count: int = 200
    length: int = 160
    frame_size: int = 128
    fps: float = 30.0
    categories: int = 15
    render_frames: bool = False

    def __post_init__(self):
        if self.count < 1 or self.length < 144:
            raise ConfigError("synth needs count >= 1 and length >= 144")
        if self.categories < 1:
            raise ConfigError("synth needs categories >= 1")


@dataclass
class CorrectorTrainConfig:
    drop_prob: float = 0.2
    jitter_sigma: float = 0.01
    epochs: int = 60
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0

    def corruption(self):
        return CorruptionModel(self.drop_prob, self.jitter_sigma, self.seed)


@dataclass
class HeatmapConfig:
    size: int = 128
    sigma: float = 2.0

    def spec(self):
        return HeatmapSpec(self.size, self.size, self.sigma)


@dataclass
class SampleConfig:
    count: int = 100
    sequence: str = ""
    window_start: int = 0
    seed: int = 0


@dataclass
class RenderConfig:
    contact_frames: int = 8
    fps: float = 12.0
    max_samples: int = 4


@dataclass
class EvaluateConfig:
    video_samples: int = 0
    feature_dim: int = 64
    extractor_seed: int = 0


@dataclass
class TrainControl:
    checkpoint_interval: int = 500

    def __post_init__(self):
        if self.checkpoint_interval < 1:
            raise ConfigError("checkpoint_interval must be >= 1")


_SECTIONS = {
    "paths": PathsConfig,
    "data": DataConfig,
    "synth": SynthConfig,
    "forecast": ForecastConfig,
    "videogen": VideoGenConfig,
    "heatmap": HeatmapConfig,
    "corrector": CorrectorTrainConfig,
    "sample": SampleConfig,
    "render": RenderConfig,
    "evaluate": EvaluateConfig,
    "train": TrainControl,
}


@dataclass
class RunConfig:
    seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    data: DataConfig = field(default_factory=DataConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    videogen: VideoGenConfig = field(default_factory=VideoGenConfig)
    heatmap: HeatmapConfig = field(default_factory=HeatmapConfig)
    corrector: CorrectorTrainConfig = field(default_factory=CorrectorTrainConfig)
    sample: SampleConfig = field(default_factory=SampleConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)
    train: TrainControl = field(default_factory=TrainControl)


def _build_section(cls, data, section):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in section {section!r}: {sorted(unknown)}")
    # tuples (channel lists) arrive from YAML as lists
    coerced = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**coerced)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"section {section!r}: {exc}") from None


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    kwargs = {"seed": int(data.get("seed", 0))}
    for section, cls in _SECTIONS.items():
        if section in data:
            kwargs[section] = _build_section(cls, data[section], section)
    return RunConfig(**kwargs)


def load_config(path, overrides=()):
    """Load YAML config and apply dotted-key overrides (`a.b=value`)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        value = yaml.safe_load(raw)
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} conflicts with a scalar section")
        node[parts[-1]] = value
    return config_from_dict(data)
