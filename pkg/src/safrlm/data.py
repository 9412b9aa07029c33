"""Dataset model: records, JSON-lines persistence, synthetic generation, batching.

A record pairs one text feature sequence with one audio feature sequence and a
scalar sentiment label in [-3, +3]. The two sequences are unaligned: their
lengths are independent and there is no word-level correspondence.

On-disk format is JSON lines, one object per line:

    {"id": "...", "text": [[...] x L_T], "audio": [[...] x L_A], "label": f}

Padding in batches is plain zero padding with per-record length metadata;
padded positions are not masked downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, ValidationError

LABEL_MIN = -3.0
LABEL_MAX = 3.0

# Synthetic label: clip(a*m_T + b*m_A + g*m_T*m_A + eps, -3, +3) where m_T/m_A
# are the means of each modality's first feature channel. The bimodal product
# term makes the label unrecoverable from either modality alone.
SYNTH_ALPHA = 1.5
SYNTH_BETA = 1.5
SYNTH_GAMMA = 1.0


@dataclass
class UtteranceRecord:
    """One sample: unaligned feature matrices plus a scalar label."""

    id: str
    text_features: np.ndarray   # (L_T, d_text)
    audio_features: np.ndarray  # (L_A, d_audio)
    label: float

    def validate(self) -> None:
        for name, feats in (("text", self.text_features), ("audio", self.audio_features)):
            if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
                raise ValidationError(f"record {self.id!r}: {name} features must be a non-empty 2D matrix")
            if not np.all(np.isfinite(feats)):
                raise ValidationError(f"record {self.id!r}: non-finite {name} feature value")
        if not (LABEL_MIN <= self.label <= LABEL_MAX) or not math.isfinite(self.label):
            raise ValidationError(f"record {self.id!r}: label {self.label} outside [{LABEL_MIN}, {LABEL_MAX}]")


@dataclass
class DatasetSplit:
    """Ordered list of records with uniform feature dimensions."""

    records: list[UtteranceRecord]
    role: str = "train"  # train | validation | test

    def __post_init__(self):
        if self.role not in ("train", "validation", "test"):
            raise ValidationError(f"unknown split role {self.role!r}")
        if not self.records:
            raise ValidationError("split must contain at least one record")
        d_text, d_audio = self.feature_dims
        seen: set[str] = set()
        for rec in self.records:
            rec.validate()
            if rec.text_features.shape[1] != d_text or rec.audio_features.shape[1] != d_audio:
                raise ValidationError(
                    f"record {rec.id!r}: feature dims "
                    f"({rec.text_features.shape[1]}, {rec.audio_features.shape[1]}) "
                    f"differ from split dims ({d_text}, {d_audio})"
                )
            if rec.id in seen:
                raise ValidationError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def feature_dims(self) -> tuple[int, int]:
        first = self.records[0]
        return first.text_features.shape[1], first.audio_features.shape[1]

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=np.float64)


@dataclass
class SyntheticSpec:
    """Parameters for the synthetic dataset generator."""

    n_records: int
    l_text: tuple[int, int] = (50, 50)    # inclusive length range
    l_audio: tuple[int, int] = (50, 50)
    d_text: int = 300
    d_audio: int = 74
    seed: int = 0
    noise_sigma: float = 0.0

    def validate(self) -> None:
        if self.n_records < 1:
            raise ValidationError("n_records must be >= 1")
        for name, rng in (("l_text", self.l_text), ("l_audio", self.l_audio)):
            lo, hi = rng
            if lo < 1 or hi < lo:
                raise ValidationError(f"{name} range ({lo}, {hi}) is empty or invalid")
        if self.d_text < 1 or self.d_audio < 1:
            raise ValidationError("feature dimensions must be >= 1")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")

    @classmethod
    def from_dict(cls, raw: dict) -> "SyntheticSpec":
        known = {
            "n_records", "l_text", "l_audio", "d_text", "d_audio", "seed", "noise_sigma",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown synthetic spec keys: {sorted(unknown)}")
        if "n_records" not in raw:
            raise ValidationError("synthetic spec requires n_records")
        kwargs = dict(raw)
        for key in ("l_text", "l_audio"):
            if key in kwargs:
                lo, hi = kwargs[key]
                kwargs[key] = (int(lo), int(hi))
        return cls(**kwargs)


@dataclass
class Batch:
    """Zero-padded batch with per-record lengths."""

    text: np.ndarray          # (B, L_T_max, d_text)
    audio: np.ndarray         # (B, L_A_max, d_audio)
    text_lengths: np.ndarray  # (B,)
    audio_lengths: np.ndarray
    labels: np.ndarray        # (B,)
    ids: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.text.shape[0]


def synthetic_label(text_features: np.ndarray, audio_features: np.ndarray, eps: float = 0.0) -> float:
    """Label formula used by the generator; exposed so tests can recompute it."""
    m_t = float(np.mean(text_features[:, 0]))
    m_a = float(np.mean(audio_features[:, 0]))
    raw = SYNTH_ALPHA * m_t + SYNTH_BETA * m_a + SYNTH_GAMMA * m_t * m_a + eps
    return float(np.clip(raw, LABEL_MIN, LABEL_MAX))


def generate_synthetic(spec: SyntheticSpec, role: str = "train") -> DatasetSplit:
    """Generate a deterministic synthetic split.

    Each record draws from its own generator seeded by (spec.seed, index), so
    the dataset is reproducible record by record. Draw order per record:
    L_T, L_A, text matrix, audio matrix, label noise.
    """
    spec.validate()
    records = []
    for i in range(spec.n_records):
        rng = np.random.default_rng([spec.seed, i])
        l_t = int(rng.integers(spec.l_text[0], spec.l_text[1] + 1))
        l_a = int(rng.integers(spec.l_audio[0], spec.l_audio[1] + 1))
        text = rng.standard_normal((l_t, spec.d_text))
        audio = rng.standard_normal((l_a, spec.d_audio))
        eps = float(rng.normal(0.0, spec.noise_sigma)) if spec.noise_sigma > 0 else 0.0
        records.append(
            UtteranceRecord(
                id=f"syn-{spec.seed}-{i:05d}",
                text_features=text,
                audio_features=audio,
                label=synthetic_label(text, audio, eps),
            )
        )
    return DatasetSplit(records=records, role=role)


def _reject_constant(value):
    raise DataFormatError(f"non-finite literal {value!r} not permitted")


def _matrix_from_json(obj, what: str, line_no: int) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=np.float64)
    except (ValueError, TypeError):
        raise DataFormatError(f"line {line_no}: {what} rows are ragged or non-numeric") from None
    if arr.ndim != 2:
        raise DataFormatError(f"line {line_no}: {what} is not a 2D array")
    return arr


def load_jsonl(path, role: str = "train") -> DatasetSplit:
    """Load a split from a JSON-lines file, validating as it goes.

    Dimensions are fixed by the first record; every later record must match.
    Errors name the offending 1-based line number.
    """
    records = []
    d_text = d_audio = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except FileNotFoundError:
        raise DataFormatError(f"dataset file not found: {path}") from None
    with fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line, parse_constant=_reject_constant)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            except DataFormatError as exc:
                raise DataFormatError(f"line {line_no}: {exc}") from None
            if not isinstance(obj, dict):
                raise DataFormatError(f"line {line_no}: expected a JSON object")
            missing = {"id", "text", "audio", "label"} - set(obj)
            if missing:
                raise DataFormatError(f"line {line_no}: missing keys {sorted(missing)}")
            text = _matrix_from_json(obj["text"], "text", line_no)
            audio = _matrix_from_json(obj["audio"], "audio", line_no)
            try:
                label = float(obj["label"])
            except (TypeError, ValueError):
                raise DataFormatError(f"line {line_no}: label is not a number") from None
            if d_text is None:
                d_text, d_audio = text.shape[1], audio.shape[1]
            if text.shape[1] != d_text:
                raise DataFormatError(
                    f"line {line_no}: text feature dim {text.shape[1]} != {d_text}"
                )
            if audio.shape[1] != d_audio:
                raise DataFormatError(
                    f"line {line_no}: audio feature dim {audio.shape[1]} != {d_audio}"
                )
            if not (LABEL_MIN <= label <= LABEL_MAX) or not math.isfinite(label):
                raise DataFormatError(f"line {line_no}: label {label} outside [-3, +3]")
            if not (np.all(np.isfinite(text)) and np.all(np.isfinite(audio))):
                raise DataFormatError(f"line {line_no}: non-finite feature value")
            records.append(
                UtteranceRecord(id=str(obj["id"]), text_features=text,
                                audio_features=audio, label=label)
            )
    if not records:
        raise DataFormatError(f"dataset file {path} holds no records")
    return DatasetSplit(records=records, role=role)


def save_jsonl(split: DatasetSplit, path) -> None:
    """Write a split in the JSON-lines format. Floats serialize via repr, so a
    load after save reproduces every value exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in split.records:
            obj = {
                "id": rec.id,
                "text": rec.text_features.tolist(),
                "audio": rec.audio_features.tolist(),
                "label": rec.label,
            }
            fh.write(json.dumps(obj) + "\n")


def make_batches(split: DatasetSplit, batch_size: int, shuffle_seed: int | None = None) -> list[Batch]:
    """Partition a split into zero-padded batches.

    Without a shuffle seed the batch order follows the split order; with one,
    a seeded permutation is applied first. The last batch may be smaller.
    """
    if batch_size < 1:
        raise ValidationError("batch_size must be >= 1")
    order = np.arange(len(split))
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(len(split))
    batches = []
    for start in range(0, len(split), batch_size):
        chunk = [split.records[j] for j in order[start:start + batch_size]]
        b = len(chunk)
        lt = max(r.text_features.shape[0] for r in chunk)
        la = max(r.audio_features.shape[0] for r in chunk)
        d_text, d_audio = split.feature_dims
        text = np.zeros((b, lt, d_text), dtype=np.float64)
        audio = np.zeros((b, la, d_audio), dtype=np.float64)
        text_lengths = np.zeros(b, dtype=np.int64)
        audio_lengths = np.zeros(b, dtype=np.int64)
        labels = np.zeros(b, dtype=np.float64)
        ids = []
        for i, rec in enumerate(chunk):
            n_t = rec.text_features.shape[0]
            n_a = rec.audio_features.shape[0]
            text[i, :n_t] = rec.text_features
            audio[i, :n_a] = rec.audio_features
            text_lengths[i] = n_t
            audio_lengths[i] = n_a
            labels[i] = rec.label
            ids.append(rec.id)
        batches.append(Batch(text=text, audio=audio, text_lengths=text_lengths,
                             audio_lengths=audio_lengths, labels=labels, ids=ids))
    return batches
