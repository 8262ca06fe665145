"""Two-step task simulator and trial-scheme files.

A trial scheme fixes, for one trial, where each first-stage action leads, the
binary outcome of every second-stage action and the latent reward
probabilities that generated those outcomes. Schemes are stored as a JSON
array of objects with the keys ``is_common``, ``planet_if_S``, ``planet_if_C``,
``outcome``, ``probs`` and ``trial``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from cogeval.errors import ParseError, ValidationError

STAGE1_ACTIONS = ("S", "C")
STATES = ("blue", "red")
STAGE2_ACTIONS = {"blue": ("D", "R"), "red": ("G", "V")}
# common destination of each first-stage action
COMMON_STATE = {"S": "blue", "C": "red"}
COMMON, RARE = "common", "rare"

# flat ordering used for latent probability vectors
PROB_KEYS = tuple((s, a) for s in STATES for a in STAGE2_ACTIONS[s])


def other_state(state: str) -> str:
    return "red" if state == "blue" else "blue"


def stage2_actions(state: str) -> tuple:
    try:
        return STAGE2_ACTIONS[state]
    except KeyError:
        raise ValidationError(f"unknown second-stage state {state!r}") from None


@dataclass(frozen=True)
class Narrative:
    """Relabelling of the abstract task for a different cover story.

    Only labels change; transition and reward structure are untouched.
    """

    stage1: Mapping[str, str] = field(default_factory=lambda: {"S": "S", "C": "C"})
    states: Mapping[str, str] = field(default_factory=lambda: {"blue": "blue", "red": "red"})
    stage2: Mapping[str, str] = field(default_factory=lambda: {a: a for a in "DRGV"})

    def __post_init__(self):
        for name, mapping in (("stage1", self.stage1), ("states", self.states), ("stage2", self.stage2)):
            if len(set(mapping.values())) != len(mapping):
                raise ValidationError(f"narrative {name} labels must be distinct")

    def to_label(self, kind: str, token: str) -> str:
        return getattr(self, kind)[token]

    def from_label(self, kind: str, label: str) -> str:
        for token, lab in getattr(self, kind).items():
            if lab == label:
                return token
        raise ValidationError(f"unknown {kind} label {label!r}")


SPACESHIP = Narrative()
MAGIC_CARPET = Narrative(
    stage1={"S": "carpet-1", "C": "carpet-2"},
    states={"blue": "mountain", "red": "desert"},
    stage2={"D": "genie-1", "R": "genie-2", "G": "genie-3", "V": "genie-4"},
)


# --------------------------------------------------------------------------
# Trial schemes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialScheme:
    trial: int
    is_common: bool
    planet_if_S: str
    planet_if_C: str
    outcome: Mapping[str, Mapping[str, int]]
    probs: Mapping[str, Mapping[str, float]]

    def __post_init__(self):
        if not isinstance(self.trial, int) or isinstance(self.trial, bool) or self.trial < 1:
            raise ValidationError(f"trial index must be a positive integer, got {self.trial!r}")
        for name in ("planet_if_S", "planet_if_C"):
            if getattr(self, name) not in STATES:
                raise ValidationError(f"trial {self.trial}: {name} must be one of {STATES}")
        if self.planet_if_S == self.planet_if_C:
            raise ValidationError(f"trial {self.trial}: planet_if_S and planet_if_C must differ")
        for block in ("outcome", "probs"):
            table = getattr(self, block)
            if set(table) != set(STATES):
                raise ValidationError(f"trial {self.trial}: {block} must cover exactly {STATES}")
            for s in STATES:
                if set(table[s]) != set(STAGE2_ACTIONS[s]):
                    raise ValidationError(
                        f"trial {self.trial}: {block}[{s!r}] must cover exactly {STAGE2_ACTIONS[s]}"
                    )
        for s, a in PROB_KEYS:
            if self.outcome[s][a] not in (0, 1) or isinstance(self.outcome[s][a], float):
                raise ValidationError(f"trial {self.trial}: outcome[{s}][{a}] must be 0 or 1")
            p = self.probs[s][a]
            if not (isinstance(p, (int, float)) and 0.0 <= p <= 1.0):
                raise ValidationError(f"trial {self.trial}: probs[{s}][{a}] must lie in [0, 1]")

    def planet_if(self, action: str) -> str:
        if action == "S":
            return self.planet_if_S
        if action == "C":
            return self.planet_if_C
        raise ValidationError(f"unknown first-stage action {action!r}")

    def common_destination(self, action: str) -> str:
        """Where ``action`` leads on a common transition."""
        planet = self.planet_if(action)
        return planet if self.is_common else other_state(planet)

    def to_dict(self) -> dict:
        return {
            "is_common": self.is_common,
            "planet_if_S": self.planet_if_S,
            "planet_if_C": self.planet_if_C,
            "outcome": {s: {a: self.outcome[s][a] for a in STAGE2_ACTIONS[s]} for s in STATES},
            "probs": {s: {a: self.probs[s][a] for a in STAGE2_ACTIONS[s]} for s in STATES},
            "trial": self.trial,
        }


SCHEME_FIELDS = ("is_common", "planet_if_S", "planet_if_C", "outcome", "probs", "trial")


def scheme_from_dict(obj, index: Optional[int] = None) -> TrialScheme:
    where = f"trial {obj.get('trial', '?')}" if isinstance(obj, dict) else f"record {index}"
    if not isinstance(obj, dict):
        raise ParseError("scheme record must be an object", where)
    for key in SCHEME_FIELDS:
        if key not in obj:
            raise ParseError("missing key", where, key)
    extra = set(obj) - set(SCHEME_FIELDS)
    if extra:
        raise ParseError(f"unexpected keys {sorted(extra)}", where)
    trial = obj["trial"]
    if not isinstance(trial, int) or isinstance(trial, bool) or trial < 1:
        raise ParseError(f"must be a positive integer, got {trial!r}", where, "trial")
    where = f"trial {trial}"
    if not isinstance(obj["is_common"], bool):
        raise ParseError("must be a boolean", where, "is_common")
    for key in ("planet_if_S", "planet_if_C"):
        if obj[key] not in STATES:
            raise ParseError(f"must be one of {STATES}, got {obj[key]!r}", where, key)
    if obj["planet_if_S"] == obj["planet_if_C"]:
        raise ParseError("planet_if_S and planet_if_C must differ", where, "planet_if_C")
    tables = {}
    for block in ("outcome", "probs"):
        table = obj[block]
        if not isinstance(table, dict):
            raise ParseError("must be an object", where, block)
        for s in STATES:
            if s not in table or not isinstance(table[s], dict):
                raise ParseError("missing state block", where, f"{block}.{s}")
            extra = set(table[s]) - set(STAGE2_ACTIONS[s])
            if extra:
                raise ParseError(f"unexpected actions {sorted(extra)}", where, f"{block}.{s}")
            for a in STAGE2_ACTIONS[s]:
                if a not in table[s]:
                    raise ParseError("missing key", where, f"{block}.{s}.{a}")
                v = table[s][a]
                if block == "outcome":
                    if isinstance(v, bool) or v not in (0, 1) or isinstance(v, float):
                        raise ParseError(f"must be 0 or 1, got {v!r}", where, f"outcome.{s}.{a}")
                else:
                    if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
                        raise ParseError(f"must lie in [0, 1], got {v!r}", where, f"probs.{s}.{a}")
        extra = set(table) - set(STATES)
        if extra:
            raise ParseError(f"unexpected states {sorted(extra)}", where, block)
        tables[block] = {s: dict(table[s]) for s in STATES}
    return TrialScheme(trial, obj["is_common"], obj["planet_if_S"], obj["planet_if_C"],
                       tables["outcome"], tables["probs"])


def dumps_schemes(schemes: Sequence[TrialScheme]) -> str:
    return json.dumps([s.to_dict() for s in schemes], indent=2) + "\n"


def save_schemes(schemes: Sequence[TrialScheme], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_schemes(schemes))


def loads_schemes(text: str) -> list:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise ParseError("scheme file must hold an array of trial objects")
    return [scheme_from_dict(obj, i) for i, obj in enumerate(data)]


def load_schemes(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return loads_schemes(fh.read())


# --------------------------------------------------------------------------
# Dynamics
# --------------------------------------------------------------------------


def transition(action: str, scheme: TrialScheme, rng: np.random.Generator,
               common_prob: float = 0.7) -> tuple:
    """Sample a live transition for ``action``: ``(reached_state, "common"|"rare")``."""
    if action not in STAGE1_ACTIONS:
        raise ValidationError(f"unknown first-stage action {action!r}")
    if not 0.0 <= common_prob <= 1.0:
        raise ValidationError(f"common_prob must lie in [0, 1], got {common_prob!r}")
    dest = scheme.common_destination(action)
    if rng.random() < common_prob:
        return dest, COMMON
    return other_state(dest), RARE


def replay_transition(action: str, scheme: TrialScheme) -> tuple:
    """Transition recorded in the scheme itself, honoured verbatim."""
    reached = scheme.planet_if(action)
    return reached, COMMON if scheme.is_common else RARE


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    stage1_action: str
    transition_type: str
    reached_state: str
    stage2_action: str
    reward: int

    def to_dict(self) -> dict:
        return {
            "trial": self.trial,
            "stage1_action": self.stage1_action,
            "transition_type": self.transition_type,
            "reached_state": self.reached_state,
            "stage2_action": self.stage2_action,
            "reward": self.reward,
        }


def play(scheme: TrialScheme, stage1_action: str, stage2_action: str) -> TrialRecord:
    """Resolve one trial from stored scheme fields; reward comes from ``outcome`` only."""
    reached, kind = replay_transition(stage1_action, scheme)
    if stage2_action not in STAGE2_ACTIONS[reached]:
        raise ValidationError(
            f"trial {scheme.trial}: action {stage2_action!r} not available in state {reached!r}"
        )
    return TrialRecord(scheme.trial, stage1_action, kind, reached, stage2_action,
                       outcome(reached, stage2_action, scheme))


def save_trial_records(records: Sequence[TrialRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")


def load_trial_records(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(TrialRecord(**json.loads(line)))
            except (json.JSONDecodeError, TypeError) as exc:
                raise ParseError(str(exc), f"line {lineno}") from None
    return out


def outcome(state: str, action: str, scheme: TrialScheme) -> int:
    try:
        return int(scheme.outcome[state][action])
    except KeyError:
        raise ValidationError(
            f"trial {scheme.trial}: no outcome for action {action!r} in state {state!r}"
        ) from None


def reflect(x, lower: float, upper: float):
    """Fold values back into ``[lower, upper]`` by mirror reflection at the edges."""
    width = upper - lower
    y = np.mod(np.asarray(x, dtype=float) - lower, 2.0 * width)
    y = np.where(y > width, 2.0 * width - y, y)
    return lower + y


def drift(probs, sigma: float, bounds: tuple, rng: np.random.Generator) -> np.ndarray:
    """One random-walk step: independent N(0, sigma^2) increments, reflected at ``bounds``."""
    probs = np.asarray(probs, dtype=float)
    if sigma == 0:
        return probs.copy()
    lower, upper = bounds
    return reflect(probs + rng.normal(0.0, sigma, size=probs.shape), lower, upper)


@dataclass(frozen=True)
class SessionConfig:
    n_trials: int = 150
    common_prob: float = 0.7
    drift_sigma: float = 0.025
    drift_bounds: tuple = (0.25, 0.75)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "drift_bounds", tuple(float(b) for b in self.drift_bounds))
        if isinstance(self.n_trials, bool) or not isinstance(self.n_trials, int) or self.n_trials < 1:
            raise ValidationError(f"n_trials must be a positive integer, got {self.n_trials!r}")
        if not 0.5 < self.common_prob < 1.0:
            raise ValidationError(f"common_prob must lie in (0.5, 1), got {self.common_prob!r}")
        if not (math.isfinite(self.drift_sigma) and self.drift_sigma >= 0):
            raise ValidationError(f"drift_sigma must be nonnegative, got {self.drift_sigma!r}")
        if len(self.drift_bounds) != 2:
            raise ValidationError("drift_bounds must be a (lower, upper) pair")
        lower, upper = self.drift_bounds
        if not 0.0 <= lower < upper <= 1.0:
            raise ValidationError(f"drift_bounds must satisfy 0 <= lower < upper <= 1, got {self.drift_bounds}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be a 64-bit nonnegative integer, got {self.seed!r}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "SessionConfig":
        known = {"n_trials", "common_prob", "drift_sigma", "drift_bounds", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "common_prob": self.common_prob,
            "drift_sigma": self.drift_sigma,
            "drift_bounds": list(self.drift_bounds),
            "seed": self.seed,
        }


class Session:
    """Stateful generator of consecutive trial schemes.

    Holds its own random generator; not safe to share between threads.
    """

    def __init__(self, config: SessionConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        lower, upper = config.drift_bounds
        self.probs = self.rng.uniform(lower, upper, size=len(PROB_KEYS))
        self.trial = 1

    def probs_dict(self) -> dict:
        out = {s: {} for s in STATES}
        for (s, a), p in zip(PROB_KEYS, self.probs):
            out[s][a] = float(p)
        return out

    def next_scheme(self) -> TrialScheme:
        cfg = self.config
        is_common = bool(self.rng.random() < cfg.common_prob)
        draws = self.rng.random(len(PROB_KEYS)) < self.probs
        outcome_map = {s: {} for s in STATES}
        for (s, a), hit in zip(PROB_KEYS, draws):
            outcome_map[s][a] = int(hit)
        planet_s = COMMON_STATE["S"] if is_common else COMMON_STATE["C"]
        scheme = TrialScheme(self.trial, is_common, planet_s, other_state(planet_s),
                             outcome_map, self.probs_dict())
        self.probs = drift(self.probs, cfg.drift_sigma, cfg.drift_bounds, self.rng)
        self.trial += 1
        return scheme


def new_session(config: SessionConfig) -> Session:
    return Session(config)


def generate_schemes(config: SessionConfig) -> list:
    session = Session(config)
    return [session.next_scheme() for _ in range(config.n_trials)]
