"""Decision logs: one record per decision, stored as line-delimited JSON.

Each line holds ``trial``, ``stage`` (1 or 2), ``state``, ``action``,
``prob_assigned`` (probability the model gave to its chosen action, or null),
``reward`` (stage-2 records only) and ``transition_type``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from cogeval.errors import ParseError, ValidationError

RECORD_FIELDS = ("trial", "stage", "state", "action", "prob_assigned", "reward", "transition_type")


@dataclass(frozen=True)
class DecisionRecord:
    trial: int
    stage: int
    state: str
    action: str
    prob_assigned: Optional[float]
    reward: Optional[int] = None
    transition_type: Optional[str] = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in RECORD_FIELDS}


class DecisionLog(tuple):
    """Immutable ordered sequence of :class:`DecisionRecord`."""

    def __new__(cls, records: Iterable[DecisionRecord] = ()):
        return super().__new__(cls, records)

    @property
    def probabilities(self) -> list:
        return [r.prob_assigned for r in self]

    def trials(self) -> list:
        """Group records by trial: list of ``(stage1_record, stage2_record)``."""
        pairs = []
        it = iter(self)
        for first in it:
            second = next(it, None)
            if second is None or first.stage != 1 or second.stage != 2 or first.trial != second.trial:
                raise ValidationError(
                    f"decision log is not a sequence of (stage 1, stage 2) pairs near trial {first.trial}"
                )
            pairs.append((first, second))
        return pairs


def record_from_dict(obj, where) -> DecisionRecord:
    if not isinstance(obj, dict):
        raise ParseError("record must be an object", where)
    for key in ("trial", "stage", "action", "prob_assigned"):
        if key not in obj:
            raise ParseError("missing key", where, key)
    extra = set(obj) - set(RECORD_FIELDS)
    if extra:
        raise ParseError(f"unexpected keys {sorted(extra)}", where)
    trial, stage = obj["trial"], obj["stage"]
    if isinstance(trial, bool) or not isinstance(trial, int) or trial < 1:
        raise ParseError(f"must be a positive integer, got {trial!r}", where, "trial")
    if stage not in (1, 2) or isinstance(stage, bool):
        raise ParseError(f"must be 1 or 2, got {stage!r}", where, "stage")
    prob = obj["prob_assigned"]
    if prob is not None:
        if isinstance(prob, bool) or not isinstance(prob, (int, float)) or not (0.0 <= prob <= 1.0):
            raise ParseError(f"must be a probability, got {prob!r}", where, "prob_assigned")
        prob = float(prob)
    reward = obj.get("reward")
    if reward is not None and (isinstance(reward, bool) or reward not in (0, 1)):
        raise ParseError(f"must be 0, 1 or null, got {reward!r}", where, "reward")
    kind = obj.get("transition_type")
    if kind not in (None, "common", "rare"):
        raise ParseError(f"must be 'common', 'rare' or null, got {kind!r}", where, "transition_type")
    return DecisionRecord(trial, stage, obj.get("state") or ("start" if stage == 1 else ""),
                          str(obj["action"]), prob, reward, kind)


def dumps_log(log: Iterable[DecisionRecord]) -> str:
    return "".join(json.dumps(r.to_dict()) + "\n" for r in log)


def loads_log(text: str) -> DecisionLog:
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"not valid JSON: {exc}", f"line {lineno}") from None
        records.append(record_from_dict(obj, f"line {lineno}"))
    return DecisionLog(records)


def save_log(log: Iterable[DecisionRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_log(log))


def load_log(path) -> DecisionLog:
    with open(path, encoding="utf-8") as fh:
        return loads_log(fh.read())


def check_probabilities(log: Iterable[DecisionRecord]) -> None:
    for i, rec in enumerate(log):
        p = rec.prob_assigned
        if p is None or not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 <= p <= 1.0):
            raise ValidationError(
                f"decision {i} (trial {rec.trial}, stage {rec.stage}): probability {p!r} not in [0, 1]"
            )
