"""Line-delimited JSON protocol for driving an external player through the task.

The controller sends one prompt per decision and waits for one reply::

    -> {"direction": "prompt", "trial": 1, "stage": 1,
        "payload": {"text": "Stage 1", "options": ["S", "C"]}}
    <- {"direction": "reply", "trial": 1, "stage": 1,
        "payload": {"answer": "S", "prob": 0.8, "roi_betas": {...}}}

``prob`` and ``roi_betas`` are optional; a bare ``{"answer": "S"}`` is also
accepted. The stage-2 prompt carries the reached ``state``; the following
stage-1 prompt carries ``previous_reward``. A final prompt with text
``"done"`` closes the session. Rewards always come from the scheme's
``outcome`` block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from cogeval.errors import ValidationError
from cogeval.logs import DecisionLog, DecisionRecord
from cogeval.roi import RoiDecision, RoiSeries, RoiVector
from cogeval.twostep import STAGE1_ACTIONS, STAGE2_ACTIONS, TrialScheme, play, replay_transition

DEFAULT_RETRIES = 3


@dataclass(frozen=True)
class AdapterMessage:
    direction: str
    trial: Optional[int]
    stage: Optional[int]
    payload: dict

    def to_json(self) -> str:
        return json.dumps({"direction": self.direction, "trial": self.trial,
                           "stage": self.stage, "payload": self.payload})


@dataclass(frozen=True)
class Reply:
    answer: str
    prob: Optional[float]
    roi: Optional[RoiVector]


@dataclass(frozen=True)
class AdapterResult:
    log: DecisionLog
    roi: RoiSeries
    aborted: bool
    reason: str = ""


def parse_reply(line: Optional[str], trial: int, stage: int, options: Sequence[str]) -> Reply:
    if line is None or line == "":
        raise EOFError("replier closed the stream")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError:
        raise ValidationError(f"reply is not JSON: {line.strip()[:80]!r}") from None
    if not isinstance(obj, dict):
        raise ValidationError("reply must be a JSON object")
    if "payload" in obj:
        if obj.get("direction", "reply") != "reply":
            raise ValidationError("reply direction must be 'reply'")
        if obj.get("trial", trial) != trial or obj.get("stage", stage) != stage:
            raise ValidationError(f"reply addressed to trial {obj.get('trial')} stage {obj.get('stage')}")
        payload = obj["payload"]
    else:
        payload = obj
    if not isinstance(payload, dict) or "answer" not in payload:
        raise ValidationError("reply payload needs an 'answer'")
    answer = payload["answer"]
    if answer not in options:
        raise ValidationError(f"answer {answer!r} not in {list(options)}")
    prob = payload.get("prob")
    if prob is not None:
        if isinstance(prob, bool) or not isinstance(prob, (int, float)) or not 0.0 <= prob <= 1.0:
            raise ValidationError(f"prob must be a probability, got {prob!r}")
        prob = float(prob)
    roi = payload.get("roi_betas")
    if roi is not None:
        roi = RoiVector.from_mapping(roi, f"trial {trial} stage {stage}")
    return Reply(answer, prob, roi)


def run_session(schemes: Sequence[TrialScheme], send: Callable[[str], None],
                receive: Callable[[], Optional[str]], retries: int = DEFAULT_RETRIES) -> AdapterResult:
    """Serve ``schemes`` one decision at a time; malformed replies are re-prompted up to ``retries`` times."""
    records = []
    rois = []
    previous_reward = None

    def ask(trial, stage, payload, options):
        msg = AdapterMessage("prompt", trial, stage, payload)
        send(msg.to_json())
        attempts = 0
        while True:
            try:
                return parse_reply(receive(), trial, stage, options)
            except ValidationError as exc:
                attempts += 1
                if attempts > retries:
                    raise
                send(AdapterMessage("prompt", trial, stage, {**payload, "error": str(exc)}).to_json())

    def finish(aborted, reason=""):
        return AdapterResult(DecisionLog(records), RoiSeries(rois), aborted, reason)

    for ordinal, scheme in enumerate(schemes):
        try:
            p1 = {"text": "Stage 1", "options": list(STAGE1_ACTIONS)}
            if previous_reward is not None:
                p1["previous_reward"] = previous_reward
            r1 = ask(scheme.trial, 1, p1, STAGE1_ACTIONS)
            reached, kind = replay_transition(r1.answer, scheme)
            options2 = STAGE2_ACTIONS[reached]
            r2 = ask(scheme.trial, 2, {"text": "Stage 2", "state": reached, "options": list(options2)}, options2)
        except (ValidationError, EOFError) as exc:
            return finish(True, f"trial {scheme.trial}: {exc}")
        result = play(scheme, r1.answer, r2.answer)
        previous_reward = result.reward
        records.append(DecisionRecord(scheme.trial, 1, "start", r1.answer, r1.prob, None, kind))
        records.append(DecisionRecord(scheme.trial, 2, reached, r2.answer, r2.prob, result.reward, kind))
        for stage, reply in ((1, r1), (2, r2)):
            if reply.roi is not None:
                rois.append(RoiDecision(2 * ordinal + stage, stage, reply.roi))
    send(AdapterMessage("prompt", None, None, {"text": "done", "previous_reward": previous_reward}).to_json())
    return finish(False)
