"""Three levels of multi-source data fusion for spectral regression.

* measurement level: raw blocks concatenated after per-column min-max
  normalisation of the small-magnitude (SIF) blocks, parameters learned
  on training rows only;
* feature level: same splice restricted to each block's CARS consensus
  bands;
* decision level: three per-source predictions combined by a
  threshold-gated average / closest-pair mean / median rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cars import CarsConsensus
from .chemometrics import DataMatrix, DatasetSplit, hstack_matrices
from .errors import DataError, ValidationError

REFLECTANCE_TAG = "R"
SOURCE_TAGS = ("R", "upSIF", "downSIF")
FUSION_LEVELS = ("measurement", "feature", "decision")
NORMALIZATION_MODES = ("minmax", "zscore")


@dataclass(frozen=True)
class SourceBlock:
    """One source's band matrix (R, upSIF or downSIF) for all samples."""

    tag: str
    matrix: DataMatrix

    def __post_init__(self):
        if self.tag not in SOURCE_TAGS:
            raise ValidationError(f"unknown source tag {self.tag!r}, "
                                  f"expected one of {SOURCE_TAGS}")


@dataclass(frozen=True)
class FusionSpec:
    """One fusion experiment: level, source combination, rule threshold.

    ``threshold`` applies to decision level only; ``None`` means 0.1x the
    interquartile range of the training labels, resolved per target at
    run time.
    """

    level: str
    sources: tuple
    normalization: str = "minmax"
    threshold: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if self.level not in FUSION_LEVELS:
            raise ValidationError(f"unknown fusion level {self.level!r}")
        if self.normalization not in NORMALIZATION_MODES:
            raise ValidationError(f"unknown normalization {self.normalization!r}")
        if len(set(self.sources)) != len(self.sources):
            raise ValidationError("duplicate sources in fusion spec")
        for s in self.sources:
            if s not in SOURCE_TAGS:
                raise ValidationError(f"unknown source {s!r}")
        if not self.sources:
            raise ValidationError("fusion spec needs at least one source")
        if self.level == "decision" and len(self.sources) != 3:
            raise ValidationError("decision fusion requires exactly 3 sources")
        if self.threshold is not None and not self.threshold > 0:
            raise ValidationError("decision threshold must be > 0")

    @property
    def model_id(self) -> str:
        return f"{self.level}:{'-'.join(self.sources)}"


@dataclass(frozen=True)
class BlockNormalizer:
    """Per-column affine map learned on training rows only.

    ``transform`` maps training columns into [0,1] (min-max mode) or to
    zero mean / unit sd (z-score); test rows may land outside that range
    and must never trigger a re-fit. Constant columns map to 0.
    """

    offset: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        for name in ("offset", "scale"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            arr.flags.writeable = False

    @classmethod
    def fit(cls, values: np.ndarray, train_indices, mode: str = "minmax") -> "BlockNormalizer":
        train = values[np.asarray(train_indices, dtype=int)]
        if mode == "minmax":
            lo = train.min(axis=0)
            rng = train.max(axis=0) - lo
            return cls(offset=lo, scale=np.where(rng > 0, rng, 1.0))
        if mode == "zscore":
            sd = train.std(axis=0, ddof=1)
            return cls(offset=train.mean(axis=0), scale=np.where(sd > 0, sd, 1.0))
        raise ValidationError(f"unknown normalization {mode!r}")

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.offset) / self.scale


@dataclass(frozen=True)
class FusedMatrix:
    """Fusion output: the spliced matrix plus the per-block normalizers."""

    matrix: DataMatrix
    normalizers: dict   # tag -> BlockNormalizer or None (passed through raw)


def _normalize_blocks(
    blocks: Sequence[SourceBlock],
    split: DatasetSplit,
    mode: str,
    normalize_reflectance: bool,
) -> FusedMatrix:
    if not blocks:
        raise ValidationError("no blocks to fuse")
    tags = [b.tag for b in blocks]
    if len(set(tags)) != len(tags):
        raise ValidationError("duplicate source tags in fusion job")
    pieces = []
    normalizers = {}
    for block in blocks:
        m = block.matrix
        if block.tag == REFLECTANCE_TAG and not normalize_reflectance:
            normalizers[block.tag] = None        # already lives in [0, 1]
            pieces.append(m)
            continue
        norm = BlockNormalizer.fit(m.values, split.train_indices, mode)
        normalizers[block.tag] = norm
        pieces.append(DataMatrix(norm.transform(m.values), m.columns, m.ids))
    return FusedMatrix(matrix=hstack_matrices(pieces), normalizers=normalizers)


def measurement_fuse(
    blocks: Sequence[SourceBlock],
    split: DatasetSplit,
    mode: str = "minmax",
    normalize_reflectance: bool = False,
) -> FusedMatrix:
    """Concatenate raw blocks, normalising SIF-scale blocks on training rows."""
    if len(blocks) < 2:
        raise ValidationError("measurement fusion needs at least 2 blocks")
    return _normalize_blocks(blocks, split, mode, normalize_reflectance)


def feature_fuse(
    blocks: Sequence[SourceBlock],
    consensus_per_block: dict,
    split: DatasetSplit,
    mode: str = "minmax",
    normalize_reflectance: bool = False,
) -> FusedMatrix:
    """Concatenate only each block's CARS-consensus bands.

    ``consensus_per_block`` maps source tag to a :class:`CarsConsensus`
    (or a plain index sequence) computed on training rows only.
    """
    reduced = []
    for block in blocks:
        cons = consensus_per_block.get(block.tag)
        if cons is None:
            raise ValidationError(f"no consensus provided for source {block.tag!r}")
        indices = cons.consensus if isinstance(cons, CarsConsensus) else tuple(cons)
        if indices:
            reduced.append(SourceBlock(block.tag, block.matrix.take_columns(indices)))
    if not reduced:
        raise DataError("every consensus set is empty; nothing to fuse")
    return _normalize_blocks(reduced, split, mode, normalize_reflectance)


def decision_fuse(predictions, threshold: float) -> float:
    """Combine three per-source predictions with the threshold-gated rule.

    With spread = max - min and d the smallest pairwise distance:
    spread <= threshold -> mean of all three; otherwise d <= threshold ->
    mean of the two closest (an exact tie, i.e. equally spaced values,
    returns the median, which both candidate pairs bracket); otherwise ->
    median.
    """
    preds = np.asarray(predictions, dtype=float).ravel()
    if preds.size != 3:
        raise ValidationError(f"decision fusion expects 3 predictions, got {preds.size}")
    if not np.all(np.isfinite(preds)):
        raise ValidationError("decision fusion requires finite predictions")
    if not threshold > 0:
        raise ValidationError("decision threshold must be > 0")
    value, _ = decision_fuse_traced(preds, threshold)
    return value


def decision_fuse_traced(predictions, threshold: float):
    """Like :func:`decision_fuse` but also returns which branch fired."""
    a, b, c = np.sort(np.asarray(predictions, dtype=float).ravel())
    spread = c - a
    if spread <= threshold:
        return float((a + b + c) / 3.0), "average"
    d_low, d_high = b - a, c - b
    if min(d_low, d_high) <= threshold:
        if d_low == d_high:
            return float(b), "closest_pair"
        pair = (a, b) if d_low < d_high else (b, c)
        return float((pair[0] + pair[1]) / 2.0), "closest_pair"
    return float(b), "median"


def default_threshold(train_labels) -> float:
    """Fallback decision threshold: 0.1x the training-label IQR."""
    y = np.asarray(train_labels, dtype=float)
    q1, q3 = np.quantile(y, [0.25, 0.75])
    iqr = q3 - q1
    if iqr <= 0:
        raise DataError("cannot derive a decision threshold from constant labels")
    return 0.1 * float(iqr)
