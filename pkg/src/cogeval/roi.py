"""Decision-wise similarity of 14-region ROI beta vectors.

Series files are line-delimited JSON, one decision per line:
``{"decision": 1, "stage": 1, "roi_betas": {<ROI name>: <beta>, ...}}`` with
exactly the names in :data:`ROI_NAMES`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from cogeval.errors import ParseError, ValidationError

ROI_NAMES = (
    "X_Lateral Occipital Cortex, superior division",
    "X_Lateral Occipital Cortex, inferior division",
    "X_Intracalcarine Cortex",
    "X_Cuneal Cortex",
    "X_Lingual Gyrus",
    "X_Temporal Occipital Fusiform Cortex",
    "X_Occipital Fusiform Gyrus",
    "X_Supracalcarine Cortex",
    "X_Occipital Pole",
    "X_Left Thalamus",
    "X_Left Caudate",
    "X_Left Accumbens",
    "X_Right Thalamus",
    "X_Right Accumbens",
)
N_ROI = len(ROI_NAMES)


@dataclass(frozen=True)
class RoiVector:
    betas: tuple

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        if len(betas) != N_ROI:
            raise ValidationError(f"ROI vector needs {N_ROI} betas, got {len(betas)}")
        if not all(math.isfinite(b) for b in betas):
            raise ValidationError("ROI betas must be finite")
        object.__setattr__(self, "betas", betas)

    @classmethod
    def from_mapping(cls, mapping: Mapping, where=None) -> "RoiVector":
        if not isinstance(mapping, Mapping):
            raise ParseError("roi_betas must be an object", where, "roi_betas")
        unknown = [k for k in mapping if k not in ROI_NAMES]
        if unknown:
            raise ParseError(f"unknown ROI names {unknown}", where, "roi_betas")
        missing = [k for k in ROI_NAMES if k not in mapping]
        if missing:
            raise ParseError(f"missing ROI {missing}", where, "roi_betas")
        values = []
        for name in ROI_NAMES:
            v = mapping[name]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParseError(f"beta must be a finite number, got {v!r}", where, name)
            values.append(float(v))
        return cls(tuple(values))

    def to_mapping(self) -> dict:
        return dict(zip(ROI_NAMES, self.betas))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.betas, dtype=dtype)


def _vec(x) -> np.ndarray:
    a = np.asarray(x.betas if isinstance(x, RoiVector) else x, dtype=float)
    if a.ndim != 1:
        raise ValidationError("expected a one-dimensional beta vector")
    return a


def _pair(a, b) -> tuple:
    a, b = _vec(a), _vec(b)
    if a.shape != b.shape:
        raise ValidationError(f"vector lengths differ: {a.size} vs {b.size}")
    return a, b


def pearson(a, b) -> Optional[float]:
    """Sample correlation, or ``None`` when either vector has zero variance."""
    a, b = _pair(a, b)
    da, db = a - a.mean(), b - b.mean()
    na, nb = math.sqrt(float(da @ da)), math.sqrt(float(db @ db))
    if na == 0.0 or nb == 0.0:
        return None
    return max(-1.0, min(1.0, float(da @ db) / (na * nb)))


def cosine(a, b) -> Optional[float]:
    """Cosine similarity, or ``None`` when either vector has zero norm."""
    a, b = _pair(a, b)
    na, nb = math.sqrt(float(a @ a)), math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        return None
    return max(-1.0, min(1.0, float(a @ b) / (na * nb)))


@dataclass(frozen=True)
class MagnitudeErrors:
    mse: float
    rmse: float
    mae: float
    euclidean: float


def magnitude_errors(a, b) -> MagnitudeErrors:
    a, b = _pair(a, b)
    d = a - b
    sq = float(d @ d)
    mse = sq / d.size
    return MagnitudeErrors(mse, math.sqrt(mse), float(np.abs(d).mean()), math.sqrt(sq))


# --------------------------------------------------------------------------
# Series
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RoiDecision:
    decision: int
    stage: int
    vector: RoiVector

    def to_dict(self) -> dict:
        return {"decision": self.decision, "stage": self.stage, "roi_betas": self.vector.to_mapping()}


class RoiSeries(tuple):
    """Ordered decisions with strictly increasing indices."""

    def __new__(cls, decisions: Iterable[RoiDecision] = ()):
        self = super().__new__(cls, decisions)
        idx = [d.decision for d in self]
        for prev, cur in zip(idx, idx[1:]):
            if cur <= prev:
                raise ValidationError(f"decision indices must increase strictly ({prev} then {cur})")
        return self

    @property
    def indices(self) -> list:
        return [d.decision for d in self]


def dumps_roi_series(series: Iterable[RoiDecision]) -> str:
    return "".join(json.dumps(d.to_dict()) + "\n" for d in series)


def loads_roi_series(text: str) -> RoiSeries:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        where = f"line {lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"not valid JSON: {exc}", where) from None
        if not isinstance(obj, dict):
            raise ParseError("record must be an object", where)
        extra = set(obj) - {"decision", "stage", "roi_betas"}
        if extra:
            raise ParseError(f"unexpected keys {sorted(extra)}", where)
        for key in ("decision", "stage", "roi_betas"):
            if key not in obj:
                raise ParseError("missing key", where, key)
        dec, stage = obj["decision"], obj["stage"]
        if isinstance(dec, bool) or not isinstance(dec, int) or dec < 1:
            raise ParseError(f"must be a positive integer, got {dec!r}", where, "decision")
        where = f"decision {dec}"
        if isinstance(stage, bool) or stage not in (1, 2):
            raise ParseError(f"must be 1 or 2, got {stage!r}", where, "stage")
        out.append(RoiDecision(dec, stage, RoiVector.from_mapping(obj["roi_betas"], where)))
    try:
        return RoiSeries(out)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def save_roi_series(series: Iterable[RoiDecision], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_roi_series(series))


def load_roi_series(path) -> RoiSeries:
    with open(path, encoding="utf-8") as fh:
        return loads_roi_series(fh.read())


@dataclass(frozen=True)
class SimilaritySummary:
    mean_pearson: Optional[float]
    mean_cosine: Optional[float]
    mean_mse: float
    mean_rmse: float
    mean_mae: float
    mean_euclidean: float
    n_decisions: int
    n_undefined_pearson: int = 0
    n_undefined_cosine: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def decision_metrics(model: RoiSeries, reference: RoiSeries) -> list:
    """Per-decision ``(index, pearson, cosine, MagnitudeErrors)`` over aligned series."""
    mi, ri = model.indices, reference.indices
    if mi != ri:
        missing_model = sorted(set(ri) - set(mi))
        missing_ref = sorted(set(mi) - set(ri))
        raise ValidationError(
            f"series are misaligned; missing from model: {missing_model[:20]}, "
            f"missing from reference: {missing_ref[:20]}"
        )
    return [(m.decision, pearson(m.vector, r.vector), cosine(m.vector, r.vector),
             magnitude_errors(m.vector, r.vector)) for m, r in zip(model, reference)]


def summarize(model: RoiSeries, reference: RoiSeries) -> SimilaritySummary:
    rows = decision_metrics(model, reference)
    if not rows:
        raise ValidationError("cannot summarise empty series")
    pears = [p for _, p, _, _ in rows if p is not None]
    coss = [c for _, _, c, _ in rows if c is not None]
    errs = [e for *_, e in rows]

    def mean(xs):
        return math.fsum(xs) / len(xs) if xs else None

    return SimilaritySummary(
        mean(pears), mean(coss),
        mean([e.mse for e in errs]), mean([e.rmse for e in errs]),
        mean([e.mae for e in errs]), mean([e.euclidean for e in errs]),
        len(rows), len(rows) - len(pears), len(rows) - len(coss),
    )


def synthetic_reference(templates: Sequence[RoiVector], n_trials: int = 150, noise: float = 0.3,
                        seed: int = 0) -> RoiSeries:
    """Stand-in human series: stage templates plus Gaussian noise, two decisions per trial."""
    if len(templates) != 2:
        raise ValidationError("need one template per stage")
    rng = np.random.default_rng(seed)
    out = []
    for t in range(n_trials):
        for stage in (1, 2):
            base = np.asarray(templates[stage - 1].betas)
            out.append(RoiDecision(2 * t + stage, stage, RoiVector(tuple(base + rng.normal(0, noise, N_ROI)))))
    return RoiSeries(out)
