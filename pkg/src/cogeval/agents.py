"""Reference agents for the two-step task.

The hybrid agent mixes a model-free TD learner with a model-based planner that
values first-stage actions through a fixed transition model. Pure model-free
(``w = 0``), pure model-based (``w = 1``) and uniform-random (``beta = 0``)
agents are special cases.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from cogeval.errors import ValidationError
from cogeval.logs import DecisionLog, DecisionRecord
from cogeval.twostep import (
    COMMON,
    COMMON_STATE,
    RARE,
    STAGE1_ACTIONS,
    STAGE2_ACTIONS,
    STATES,
    TrialScheme,
    other_state,
    play,
    replay_transition,
)

START = "start"
ALL_KEYS = tuple([(START, a) for a in STAGE1_ACTIONS] + [(s, a) for s in STATES for a in STAGE2_ACTIONS[s]])


@dataclass(frozen=True)
class AgentParams:
    alpha: float = 0.5
    beta: float = 5.0
    w: float = 0.5
    perseveration: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ValidationError(f"beta must be a finite nonnegative number, got {self.beta!r}")
        if not 0.0 <= self.w <= 1.0:
            raise ValidationError(f"w must lie in [0, 1], got {self.w!r}")
        if not math.isfinite(self.perseveration):
            raise ValidationError("perseveration must be finite")

    @classmethod
    def from_dict(cls, data: Mapping) -> "AgentParams":
        unknown = set(data) - {"alpha", "beta", "w", "perseveration"}
        if unknown:
            raise ValidationError(f"unknown agent parameters {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "w": self.w, "perseveration": self.perseveration}


@dataclass(frozen=True)
class AgentState:
    q_mf: Mapping = field(default_factory=lambda: {k: 0.0 for k in ALL_KEYS})
    last_stage1_action: Optional[str] = None

    def stage2_values(self) -> dict:
        return {s: [self.q_mf[(s, a)] for a in STAGE2_ACTIONS[s]] for s in STATES}

    def q_mb(self, common_prob: float = 0.7) -> dict:
        return mb_values(self.stage2_values(), common_prob)


def mf_update(state: AgentState, record, reward: int, alpha: float) -> AgentState:
    """TD update of the second-stage value, then a one-step backup to the first stage.

    ``record`` needs ``stage1_action``, ``reached_state`` and ``stage2_action``
    attributes (e.g. a :class:`~cogeval.twostep.TrialRecord`). The backup uses
    the freshly updated second-stage value.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha!r}")
    k1 = (START, record.stage1_action)
    k2 = (record.reached_state, record.stage2_action)
    if k1 not in state.q_mf or k2 not in state.q_mf:
        raise ValidationError(f"unknown state/action pair in {k1} or {k2}")
    q = dict(state.q_mf)
    q[k2] = q[k2] + alpha * (reward - q[k2])
    q[k1] = q[k1] + alpha * (q[k2] - q[k1])
    return AgentState(q, record.stage1_action)


def transition_matrix(common_prob: float) -> dict:
    return {a: {COMMON_STATE[a]: common_prob, other_state(COMMON_STATE[a]): 1.0 - common_prob}
            for a in STAGE1_ACTIONS}


def mb_values(q_stage2: Mapping, transition_model=0.7) -> dict:
    """First-stage values ``sum_s' T(a, s') * max_a' Q(s', a')``.

    ``q_stage2`` maps each second-stage state to its action values.
    ``transition_model`` is either the common-transition probability or a
    mapping ``action -> {state: probability}``.
    """
    if isinstance(transition_model, (int, float)):
        transition_model = transition_matrix(float(transition_model))
    v = {s: max(q_stage2[s]) for s in q_stage2}
    out = {}
    for a, row in transition_model.items():
        if any(p < 0 for p in row.values()) or abs(math.fsum(row.values()) - 1.0) > 1e-9:
            raise ValidationError(f"transition row for {a!r} is not a probability distribution: {row}")
        out[a] = math.fsum(p * v[s] for s, p in row.items())
    return out


def hybrid_values(q_mf_stage1: Sequence[float], q_mb_stage1: Sequence[float], w: float) -> list:
    if not 0.0 <= w <= 1.0:
        raise ValidationError(f"w must lie in [0, 1], got {w!r}")
    if len(q_mf_stage1) != len(q_mb_stage1):
        raise ValidationError("model-free and model-based value vectors differ in length")
    return [w * mb + (1.0 - w) * mf for mf, mb in zip(q_mf_stage1, q_mb_stage1)]


def policy(values: Sequence[float], beta: float, perseveration: float = 0.0,
           last_action: Optional[int] = None) -> list:
    """Softmax choice probabilities with an optional stickiness bonus on ``last_action``."""
    if beta < 0:
        raise ValidationError(f"beta must be nonnegative, got {beta!r}")
    if not all(math.isfinite(v) for v in values):
        raise ValidationError(f"action values must be finite, got {list(values)}")
    logits = [beta * (v + (perseveration if i == last_action else 0.0)) for i, v in enumerate(values)]
    top = max(logits)
    expd = [math.exp(x - top) for x in logits]
    total = math.fsum(expd)
    return [e / total for e in expd]


# --------------------------------------------------------------------------
# Agent and simulation
# --------------------------------------------------------------------------


class HybridAgent:
    """Single-owner mutable wrapper around :class:`AgentState`."""

    def __init__(self, params: AgentParams, common_prob: float = 0.7):
        self.params = params
        self.common_prob = common_prob
        self.state = AgentState()

    def stage1_probs(self) -> list:
        q = self.state.q_mf
        mf = [q[(START, a)] for a in STAGE1_ACTIONS]
        mb_map = self.state.q_mb(self.common_prob)
        net = hybrid_values(mf, [mb_map[a] for a in STAGE1_ACTIONS], self.params.w)
        last = self.state.last_stage1_action
        last_idx = STAGE1_ACTIONS.index(last) if last is not None else None
        return policy(net, self.params.beta, self.params.perseveration, last_idx)

    def stage2_probs(self, state: str) -> list:
        q = self.state.q_mf
        return policy([q[(state, a)] for a in STAGE2_ACTIONS[state]], self.params.beta)

    def learn(self, record, reward: int) -> None:
        self.state = mf_update(self.state, record, reward, self.params.alpha)


@dataclass(frozen=True)
class _Choice:
    stage1_action: str
    reached_state: str
    stage2_action: str


def _draw(probs: Sequence[float], u: float) -> int:
    return 0 if u < probs[0] else 1


def run_agent(params: AgentParams, schemes: Sequence[TrialScheme], seed: int = 0,
              common_prob: float = 0.7) -> DecisionLog:
    """Play ``schemes`` in order; two decision records per trial.

    Transitions and rewards are read from the stored scheme fields.
    """
    if not schemes:
        raise ValidationError("run_agent needs at least one trial scheme")
    for s in schemes:
        if not isinstance(s, TrialScheme):
            raise ValidationError(f"expected TrialScheme, got {type(s).__name__}")
    rng = np.random.default_rng(seed)
    agent = HybridAgent(params, common_prob)
    records = []
    for scheme in schemes:
        p1 = agent.stage1_probs()
        i1 = _draw(p1, rng.random())
        a1 = STAGE1_ACTIONS[i1]
        reached, kind = replay_transition(a1, scheme)
        p2 = agent.stage2_probs(reached)
        i2 = _draw(p2, rng.random())
        a2 = STAGE2_ACTIONS[reached][i2]
        trial = play(scheme, a1, a2)
        records.append(DecisionRecord(scheme.trial, 1, START, a1, p1[i1], None, kind))
        records.append(DecisionRecord(scheme.trial, 2, reached, a2, p2[i2], trial.reward, kind))
        agent.learn(trial, trial.reward)
    return DecisionLog(records)


def replay_probabilities(params: AgentParams, log: DecisionLog, common_prob: float = 0.7) -> list:
    """Probability the agent assigns to each logged choice, learning from logged rewards."""
    agent = HybridAgent(params, common_prob)
    out = []
    for r1, r2 in log.trials():
        if r1.action not in STAGE1_ACTIONS or r2.state not in STATES \
                or r2.action not in STAGE2_ACTIONS[r2.state]:
            raise ValidationError(f"trial {r1.trial}: actions outside the task alphabet")
        if r2.reward is None:
            raise ValidationError(f"trial {r1.trial}: stage-2 record carries no reward")
        p1 = agent.stage1_probs()
        p2 = agent.stage2_probs(r2.state)
        out.append(p1[STAGE1_ACTIONS.index(r1.action)])
        out.append(p2[STAGE2_ACTIONS[r2.state].index(r2.action)])
        agent.learn(_Choice(r1.action, r2.state, r2.action), r2.reward)
    return out


# --------------------------------------------------------------------------
# Stay-probability signature
# --------------------------------------------------------------------------

CELLS = ((True, True), (True, False), (False, True), (False, False))


@dataclass(frozen=True)
class StaySignature:
    """Stay probabilities keyed by ``(previous rewarded?, previous common?)``."""

    probs: Mapping
    counts: Mapping

    def p(self, rewarded: bool, common: bool) -> Optional[float]:
        return self.probs[(rewarded, common)]

    @property
    def reward_effect(self) -> float:
        return 0.5 * (self.p(True, True) + self.p(True, False) - self.p(False, True) - self.p(False, False))

    @property
    def interaction(self) -> float:
        return (self.p(True, True) - self.p(True, False)) - (self.p(False, True) - self.p(False, False))

    def to_dict(self) -> dict:
        def key(c):
            return f"{'rewarded' if c[0] else 'unrewarded'}_{COMMON if c[1] else RARE}"
        return {key(c): {"p_stay": self.probs[c], "n": self.counts[c]} for c in CELLS}


def _trial_outcomes(log: DecisionLog, schemes: Sequence[TrialScheme]) -> list:
    pairs = log.trials()
    if len(pairs) != len(schemes):
        raise ValidationError(f"log covers {len(pairs)} trials but {len(schemes)} schemes were given")
    out = []
    for (r1, r2), scheme in zip(pairs, schemes):
        if r1.trial != scheme.trial:
            raise ValidationError(f"log trial {r1.trial} does not align with scheme trial {scheme.trial}")
        reached, kind = replay_transition(r1.action, scheme)
        if r2.state != reached:
            raise ValidationError(f"trial {r1.trial}: logged state {r2.state!r} but scheme leads to {reached!r}")
        reward = play(scheme, r1.action, r2.action).reward
        out.append((r1.action, reward == 1, kind == COMMON))
    return out


def stay_signature(log: DecisionLog, schemes: Sequence[TrialScheme]) -> StaySignature:
    trials = _trial_outcomes(log, schemes)
    if len(trials) < 2:
        raise ValidationError("stay analysis needs at least two trials")
    stays = {c: 0 for c in CELLS}
    counts = {c: 0 for c in CELLS}
    for (prev_a, rewarded, common), (a, _, _) in zip(trials, trials[1:]):
        counts[(rewarded, common)] += 1
        stays[(rewarded, common)] += int(a == prev_a)
    probs = {c: (stays[c] / counts[c] if counts[c] else None) for c in CELLS}
    return StaySignature(probs, counts)


# --------------------------------------------------------------------------
# Maximum-likelihood fitting
# --------------------------------------------------------------------------

PARAM_NAMES = ("alpha", "beta", "w", "perseveration")
DEFAULT_BOUNDS = {"alpha": (0.01, 1.0), "beta": (0.0, 10.0), "w": (0.0, 1.0), "perseveration": (0.0, 0.0)}


def _encode(log: DecisionLog) -> tuple:
    a1, s2, a2, rew = [], [], [], []
    for r1, r2 in log.trials():
        if r1.action not in STAGE1_ACTIONS or r2.state not in STATES \
                or r2.action not in STAGE2_ACTIONS[r2.state]:
            raise ValidationError(f"trial {r1.trial}: actions outside the task alphabet")
        if r2.reward is None:
            raise ValidationError(f"trial {r1.trial}: stage-2 record carries no reward")
        a1.append(STAGE1_ACTIONS.index(r1.action))
        s2.append(STATES.index(r2.state))
        a2.append(STAGE2_ACTIONS[r2.state].index(r2.action))
        rew.append(float(r2.reward))
    return a1, s2, a2, rew


# index of the common destination of each stage-1 action, in STATES order
_COMMON_IDX = tuple(STATES.index(COMMON_STATE[a]) for a in STAGE1_ACTIONS)


def _nll_scalar(theta: Sequence[float], data: tuple, common_prob: float) -> float:
    """Mean NLL of the hybrid agent; plain-float kernel for the local search."""
    alpha, beta, w, pers = theta
    a1s, s2s, a2s, rews = data
    q1 = [0.0, 0.0]
    q2 = [[0.0, 0.0], [0.0, 0.0]]
    last = -1
    total = 0.0
    rare = 1.0 - common_prob
    for a1, s2, a2, r in zip(a1s, s2s, a2s, rews):
        v0 = max(q2[0])
        v1 = max(q2[1])
        vs = (v0, v1)
        mb0 = common_prob * vs[_COMMON_IDX[0]] + rare * vs[1 - _COMMON_IDX[0]]
        mb1 = common_prob * vs[_COMMON_IDX[1]] + rare * vs[1 - _COMMON_IDX[1]]
        n0 = w * mb0 + (1.0 - w) * q1[0] + (pers if last == 0 else 0.0)
        n1 = w * mb1 + (1.0 - w) * q1[1] + (pers if last == 1 else 0.0)
        # -log softmax of the chosen option for two actions
        d = beta * ((n1 - n0) if a1 == 0 else (n0 - n1))
        total += d + math.log1p(math.exp(-d)) if d > 0 else math.log1p(math.exp(d))
        qs = q2[s2]
        d = beta * ((qs[1] - qs[0]) if a2 == 0 else (qs[0] - qs[1]))
        total += d + math.log1p(math.exp(-d)) if d > 0 else math.log1p(math.exp(d))
        qs[a2] += alpha * (r - qs[a2])
        q1[a1] += alpha * (qs[a2] - q1[a1])
        last = a1
    return total / (2 * len(a1s))


def _softplus(x):
    return np.logaddexp(0.0, x)


def _nll_batch(thetas: np.ndarray, data: tuple, common_prob: float) -> np.ndarray:
    """Mean NLL for many parameter vectors at once (rows of ``thetas``)."""
    alpha, beta, w, pers = (thetas[:, i] for i in range(4))
    g = thetas.shape[0]
    q1 = np.zeros((g, 2))
    q2 = np.zeros((g, 2, 2))
    last = -1
    total = np.zeros(g)
    rows = np.arange(g)
    rare = 1.0 - common_prob
    c0, c1 = _COMMON_IDX
    for a1, s2, a2, r in zip(*data):
        v = q2.max(axis=2)
        mb0 = common_prob * v[:, c0] + rare * v[:, 1 - c0]
        mb1 = common_prob * v[:, c1] + rare * v[:, 1 - c1]
        n0 = w * mb0 + (1.0 - w) * q1[:, 0] + (pers if last == 0 else 0.0)
        n1 = w * mb1 + (1.0 - w) * q1[:, 1] + (pers if last == 1 else 0.0)
        total += _softplus(beta * ((n1 - n0) if a1 == 0 else (n0 - n1)))
        qs = q2[:, s2, :]
        total += _softplus(beta * ((qs[:, 1] - qs[:, 0]) if a2 == 0 else (qs[:, 0] - qs[:, 1])))
        q2[rows, s2, a2] += alpha * (r - q2[rows, s2, a2])
        q1[rows, a1] += alpha * (q2[rows, s2, a2] - q1[rows, a1])
        last = a1
    return total / (2 * len(data[0]))


def mean_nll(params: AgentParams, log: DecisionLog, common_prob: float = 0.7) -> float:
    theta = (params.alpha, params.beta, params.w, params.perseveration)
    return _nll_scalar(theta, _encode(log), common_prob)


@dataclass(frozen=True)
class FitResult:
    params: AgentParams
    mean_nll: float
    grid_best_nll: float
    n_grid: int


def fit_params(log: DecisionLog, schemes: Optional[Sequence[TrialScheme]] = None,
               param_bounds: Optional[Mapping] = None, common_prob: float = 0.7,
               grid_points: int = 11) -> FitResult:
    """Maximum-likelihood hybrid-agent parameters for ``log``.

    Coarse grid search over the bounded box, then bounded Nelder-Mead from the
    best grid point. Parameters whose bounds collapse to a single value are
    held fixed. The returned NLL never exceeds the best grid value.
    """
    if len(log) < 2:
        raise ValidationError("cannot fit a log with fewer than two decisions")
    if schemes is not None:
        _trial_outcomes(log, schemes)
    bounds = dict(DEFAULT_BOUNDS)
    if param_bounds:
        unknown = set(param_bounds) - set(PARAM_NAMES)
        if unknown:
            raise ValidationError(f"unknown parameters in bounds: {sorted(unknown)}")
        bounds.update({k: tuple(map(float, v)) for k, v in param_bounds.items()})
    for name, (lo, hi) in bounds.items():
        if lo > hi:
            raise ValidationError(f"bounds for {name} are inverted: {(lo, hi)}")
    if bounds["alpha"][0] <= 0:
        raise ValidationError("alpha lower bound must be positive")
    data = _encode(log)

    axes = [np.linspace(lo, hi, grid_points) if hi > lo else np.array([lo])
            for lo, hi in (bounds[n] for n in PARAM_NAMES)]
    grid = np.array(list(itertools.product(*axes)))
    grid_nll = _nll_batch(grid, data, common_prob)
    best = int(np.argmin(grid_nll))
    x0 = grid[best]
    best_nll = float(grid_nll[best])

    free = [i for i, n in enumerate(PARAM_NAMES) if bounds[n][1] > bounds[n][0]]
    x_best, f_best = x0.copy(), best_nll
    if free:
        def objective(z):
            theta = x0.copy()
            theta[free] = np.clip(z, [bounds[PARAM_NAMES[i]][0] for i in free],
                                  [bounds[PARAM_NAMES[i]][1] for i in free])
            return _nll_scalar(theta, data, common_prob)

        res = minimize(objective, x0[free], method="Nelder-Mead",
                       bounds=[bounds[PARAM_NAMES[i]] for i in free],
                       options={"xatol": 1e-4, "fatol": 1e-6, "maxiter": 2000})
        if res.fun < f_best:
            x_best = x0.copy()
            x_best[free] = np.clip(res.x, [bounds[PARAM_NAMES[i]][0] for i in free],
                                   [bounds[PARAM_NAMES[i]][1] for i in free])
            f_best = _nll_scalar(x_best, data, common_prob)
    params = AgentParams(*(float(v) for v in x_best))
    return FitResult(params, float(f_best), best_nll, len(grid))
