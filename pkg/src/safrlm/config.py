"""Run configuration: one JSON document drives data, model, and training.

Every key has a default; unknown keys are rejected so a typo cannot silently
fall back to a default. The fully resolved configuration is written next to
each run's outputs, which is enough to replay the run bit for bit.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields

from .data import SyntheticSpec
from .errors import ConfigError

_DEFAULT_SYNTH = {
    "train": {"n_records": 200, "seed": 11, "noise_sigma": 0.1},
    "val": {"n_records": 50, "seed": 12, "noise_sigma": 0.1},
    "test": {"n_records": 50, "seed": 13, "noise_sigma": 0.1},
}


def _check_keys(raw: dict, known, where: str) -> None:
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"unknown config keys under {where!r}: {sorted(unknown)}")


def _section(cls, raw: dict, where: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"config section {where!r} must be an object")
    names = [f.name for f in fields(cls)]
    _check_keys(raw, names, where)
    return cls(**raw)


@dataclass
class ConvConfig:
    kernel_text: int = 1
    stride_text: int = 1
    kernel_audio: int = 1
    stride_audio: int = 1
    out_channels: int = 50

    def validate(self):
        for name in ("kernel_text", "stride_text", "kernel_audio", "stride_audio"):
            if getattr(self, name) < 1:
                raise ConfigError(f"conv.{name} must be >= 1")
        if self.out_channels < 2 or self.out_channels % 2 != 0:
            raise ConfigError("conv.out_channels must be even and >= 2 (Bi-GRU splits directions)")


@dataclass
class AlignConfig:
    gru_depth: int = 1

    def validate(self):
        if self.gru_depth < 1:
            raise ConfigError("align.gru_depth must be >= 1")


@dataclass
class XadjustConfig:
    blocks_per_stage: int = 5
    heads: int = 5
    ff_width: int = 200
    dropout: float = 0.3
    scale_mode: str = "per_head"

    def validate(self, d: int):
        if self.blocks_per_stage < 1:
            raise ConfigError("xadjust.blocks_per_stage must be >= 1")
        if self.heads < 1 or d % self.heads != 0:
            raise ConfigError(f"xadjust.heads must divide conv.out_channels ({d})")
        if self.ff_width < 1:
            raise ConfigError("xadjust.ff_width must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("xadjust.dropout must lie in [0, 1)")
        if self.scale_mode not in ("per_head", "full_dim"):
            raise ConfigError("xadjust.scale_mode must be 'per_head' or 'full_dim'")


@dataclass
class HeadsConfig:
    self_blocks: int = 3
    hidden: int = 200
    dropout: float = 0.3
    loss_weights: tuple = (1.0, 1.0, 1.0)

    def validate(self):
        if self.self_blocks < 1:
            raise ConfigError("heads.self_blocks must be >= 1")
        if self.hidden < 1:
            raise ConfigError("heads.hidden must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("heads.dropout must lie in [0, 1)")
        if len(self.loss_weights) != 3 or any(w < 0 for w in self.loss_weights):
            raise ConfigError("heads.loss_weights must be three non-negative numbers")

    def __post_init__(self):
        self.loss_weights = tuple(float(w) for w in self.loss_weights)


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 12
    epochs: int = 20

    def validate(self):
        if self.learning_rate < 0:
            raise ConfigError("train.learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("train.batch_size must be >= 1")
        if self.epochs < 1:
            raise ConfigError("train.epochs must be >= 1")


@dataclass
class MetricsConfig:
    binarize: str = "geq_zero"

    def validate(self):
        if self.binarize not in ("geq_zero", "exclude_zero"):
            raise ConfigError("metrics.binarize must be 'geq_zero' or 'exclude_zero'")


@dataclass
class EvalConfig:
    seeds: tuple = (0, 1, 2, 3, 4)

    def validate(self):
        if len(self.seeds) < 1:
            raise ConfigError("eval.seeds must hold at least one seed")

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)


@dataclass
class DataConfig:
    source: str = "synthetic"
    train_path: str | None = None
    val_path: str | None = None
    test_path: str | None = None
    d_text: int = 300
    d_audio: int = 74
    synthetic: dict = field(default_factory=lambda: copy.deepcopy(_DEFAULT_SYNTH))

    def validate(self):
        if self.source not in ("synthetic", "jsonl"):
            raise ConfigError("data.source must be 'synthetic' or 'jsonl'")
        if self.d_text < 1 or self.d_audio < 1:
            raise ConfigError("data dims must be >= 1")
        if self.source == "jsonl":
            missing = [k for k in ("train_path", "val_path", "test_path")
                       if getattr(self, k) is None]
            if missing:
                raise ConfigError(f"data.source=jsonl requires {missing}")
        else:
            _check_keys(self.synthetic, ("train", "val", "test"), "data.synthetic")
            for split in ("train", "val", "test"):
                if split not in self.synthetic:
                    raise ConfigError(f"data.synthetic.{split} is required")
                self.split_spec(split).validate()

    def split_spec(self, split: str) -> SyntheticSpec:
        raw = dict(self.synthetic[split])
        raw.setdefault("d_text", self.d_text)
        raw.setdefault("d_audio", self.d_audio)
        spec = SyntheticSpec.from_dict(raw)
        if spec.d_text != self.d_text or spec.d_audio != self.d_audio:
            raise ConfigError(
                f"data.synthetic.{split} dims ({spec.d_text}, {spec.d_audio}) "
                f"conflict with data dims ({self.d_text}, {self.d_audio})"
            )
        return spec


@dataclass
class RunConfig:
    seed: int = 0
    output_dir: str = "runs/run"
    data: DataConfig = field(default_factory=DataConfig)
    conv: ConvConfig = field(default_factory=ConvConfig)
    align: AlignConfig = field(default_factory=AlignConfig)
    xadjust: XadjustConfig = field(default_factory=XadjustConfig)
    heads: HeadsConfig = field(default_factory=HeadsConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    @property
    def d(self) -> int:
        return self.conv.out_channels

    def validate(self) -> "RunConfig":
        self.data.validate()
        self.conv.validate()
        self.align.validate()
        self.xadjust.validate(self.d)
        self.heads.validate()
        self.train.validate()
        self.metrics.validate()
        self.eval.validate()
        return self

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = copy.deepcopy(raw)
        names = [f.name for f in fields(cls)]
        _check_keys(raw, names, "<root>")
        sections = {
            "data": DataConfig, "conv": ConvConfig, "align": AlignConfig,
            "xadjust": XadjustConfig, "heads": HeadsConfig, "train": TrainConfig,
            "metrics": MetricsConfig, "eval": EvalConfig,
        }
        kwargs = {}
        for key, value in raw.items():
            if key in sections:
                kwargs[key] = _section(sections[key], value, key)
            else:
                kwargs[key] = value
        try:
            cfg = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        return cfg.validate()

    def to_dict(self) -> dict:
        def plain(obj):
            if isinstance(obj, tuple):
                return [plain(v) for v in obj]
            if hasattr(obj, "__dataclass_fields__"):
                return {f.name: plain(getattr(obj, f.name)) for f in fields(obj)}
            if isinstance(obj, dict):
                return {k: plain(v) for k, v in obj.items()}
            return obj
        return plain(self)

    def replace(self, **dotted) -> "RunConfig":
        """Copy with dotted-key overrides, e.g. replace(**{'train.epochs': 5})."""
        raw = self.to_dict()
        for key, value in dotted.items():
            _set_dotted(raw, key, value)
        return RunConfig.from_dict(raw)


def _set_dotted(raw: dict, dotted_key: str, value) -> None:
    parts = dotted_key.split(".")
    node = raw
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply CLI 'dotted.key=value' overrides; values parse as JSON when possible."""
    raw = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        key, text = item.split("=", 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        _set_dotted(raw, key.strip(), value)
    return raw


def load_config(path, overrides: list[str] | None = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if overrides:
        raw = apply_overrides(raw, overrides)
    return RunConfig.from_dict(raw)
