"""Decision-level negative log-likelihood and Welch two-sample t-tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy import special, stats

from cogeval.errors import ValidationError
from cogeval.logs import DecisionRecord

DEFAULT_CLAMP = 1e-12


def z_quantile(confidence: float = 0.95) -> float:
    if not 0.0 < confidence < 1.0:
        raise ValidationError(f"confidence must lie in (0, 1), got {confidence!r}")
    return float(stats.norm.ppf(0.5 + confidence / 2.0))


# --------------------------------------------------------------------------
# NLL
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NllSummary:
    total_nll: float
    mean_nll: float
    n_decisions: int
    ci95_halfwidth: float
    sd: float
    n_clamped: int = 0
    clamp: float = DEFAULT_CLAMP


def _probabilities(log) -> list:
    probs = []
    for i, item in enumerate(log):
        p = item.prob_assigned if isinstance(item, DecisionRecord) else item
        where = f"decision {i}"
        if isinstance(item, DecisionRecord):
            where += f" (trial {item.trial}, stage {item.stage})"
        if p is None or isinstance(p, bool):
            raise ValidationError(f"{where}: no probability recorded")
        p = float(p)
        if not (0.0 <= p <= 1.0):
            raise ValidationError(f"{where}: probability {p!r} outside [0, 1]")
        probs.append(p)
    return probs


def nll_terms(log, clamp: float = DEFAULT_CLAMP) -> np.ndarray:
    """Per-decision ``-log p`` with ``p`` floored at ``clamp``.

    ``log`` is a decision log or any iterable of probabilities.
    """
    if not 0.0 < clamp <= 1.0:
        raise ValidationError(f"clamp must lie in (0, 1], got {clamp!r}")
    probs = np.asarray(_probabilities(log), dtype=float)
    if probs.size == 0:
        raise ValidationError("NLL needs at least one decision")
    # -log(1) is -0.0 in IEEE arithmetic; normalise to +0.0
    return -np.log(np.maximum(probs, clamp)) + 0.0


def nll(log, clamp: float = DEFAULT_CLAMP) -> NllSummary:
    probs = _probabilities(log)
    terms = nll_terms(probs, clamp)
    n = terms.size
    total = math.fsum(terms)
    mean = total / n
    sd = float(np.std(terms, ddof=1)) if n > 1 else 0.0
    half = z_quantile(0.95) * sd / math.sqrt(n)
    n_clamped = sum(1 for p in probs if p < clamp)
    return NllSummary(total, mean, n, half, sd, n_clamped, clamp)


def sd_from_ci(halfwidth: float, n: int, confidence: float = 0.95) -> float:
    """Standard deviation implied by a normal-approximation CI half-width."""
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ValidationError(f"n must be an integer >= 2, got {n!r}")
    if not halfwidth >= 0:
        raise ValidationError(f"half-width must be nonnegative, got {halfwidth!r}")
    return halfwidth * math.sqrt(n) / z_quantile(confidence)


def ci_from_sd(sd: float, n: int, confidence: float = 0.95) -> float:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ValidationError(f"n must be an integer >= 2, got {n!r}")
    if not sd >= 0:
        raise ValidationError(f"sd must be nonnegative, got {sd!r}")
    return z_quantile(confidence) * sd / math.sqrt(n)


# --------------------------------------------------------------------------
# Student t and Welch
# --------------------------------------------------------------------------


def t_cdf(x: float, df: float) -> float:
    """Cumulative distribution of Student's t with ``df`` degrees of freedom."""
    if not df > 0:
        raise ValidationError(f"degrees of freedom must be positive, got {df!r}")
    if math.isnan(x):
        return math.nan
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    if math.isinf(df):
        return float(special.ndtr(x))
    return float(special.stdtr(df, x))


@dataclass(frozen=True)
class BaselineSpec:
    """A reference model known only through its mean and CI half-width."""

    mean: float
    ci95_halfwidth: float
    n: int = 300

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"baseline n must be an integer >= 2, got {self.n!r}")
        if not self.ci95_halfwidth >= 0:
            raise ValidationError(f"baseline half-width must be nonnegative, got {self.ci95_halfwidth!r}")
        if not math.isfinite(self.mean):
            raise ValidationError("baseline mean must be finite")

    @property
    def sd(self) -> float:
        return sd_from_ci(self.ci95_halfwidth, self.n)

    def moments(self) -> tuple:
        return self.mean, self.sd ** 2, int(self.n)


@dataclass(frozen=True)
class WelchResult:
    mean_delta: float
    t_statistic: float
    df: float
    p_value: float
    degenerate: bool = False


Sample = Union[Sequence[float], np.ndarray, BaselineSpec]


def _moments(sample) -> tuple:
    if isinstance(sample, BaselineSpec):
        return sample.moments()
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValidationError("Welch test needs samples with at least two values")
    if not np.all(np.isfinite(x)):
        raise ValidationError("samples must be finite")
    return float(x.mean()), float(x.var(ddof=1)), int(x.size)


def welch(sample_a: Sample, sample_b: Sample) -> WelchResult:
    """Two-sided Welch test of ``mean(a) - mean(b)``.

    Either side may be a :class:`BaselineSpec`, whose variance is inferred from
    its CI half-width. With zero variance on both sides the result is flagged
    degenerate: ``p = 1`` for equal means, ``p = 0`` otherwise.
    """
    ma, va, na = _moments(sample_a)
    mb, vb, nb = _moments(sample_b)
    delta = ma - mb
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    if se2 == 0.0:
        df = float(na + nb - 2)
        if delta == 0.0:
            return WelchResult(0.0, 0.0, df, 1.0, True)
        return WelchResult(delta, math.copysign(math.inf, delta), df, 0.0, True)
    t = delta / math.sqrt(se2)
    df = se2 ** 2 / ((sa ** 2 / (na - 1) if sa else 0.0) + (sb ** 2 / (nb - 1) if sb else 0.0))
    p = min(1.0, 2.0 * t_cdf(-abs(t), df))
    return WelchResult(delta, t, df, p)


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    baseline: str
    mean_delta: float
    t_statistic: float
    df: float
    p_value: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "baseline": self.baseline,
            "delta_nll": self.mean_delta,
            "t": self.t_statistic,
            "df": self.df,
            "p": self.p_value,
            "degenerate": self.degenerate,
        }


def compare_all(samples: Mapping[str, Sample], baselines: Mapping[str, Sample]) -> list:
    """Welch test of every model against every baseline, models outer, baselines inner.

    Row order follows the mapping order of the inputs.
    """
    if not samples:
        raise ValidationError("no model samples supplied")
    if not baselines:
        raise ValidationError("no baselines supplied")
    rows = []
    for model, sample in samples.items():
        if sample is None:
            raise ValidationError(f"model {model!r} has no sample")
        for base, ref in baselines.items():
            if ref is None:
                raise ValidationError(f"baseline {base!r} has no data")
            res = welch(sample, ref)
            rows.append(ComparisonRow(model, base, res.mean_delta, res.t_statistic, res.df,
                                      res.p_value, res.degenerate))
    return rows


def format_p(p: float) -> str:
    if p < 1e-12:
        return "<1e-12"
    if p < 1e-3:
        return f"{p:.2e}"
    return f"{p:.4f}"


def comparison_markdown(rows: Iterable[ComparisonRow]) -> str:
    """Wide table: one line per model, a (Delta NLL, p) column pair per baseline."""
    rows = list(rows)
    models = list(dict.fromkeys(r.model for r in rows))
    bases = list(dict.fromkeys(r.baseline for r in rows))
    lookup = {(r.model, r.baseline): r for r in rows}
    header = "| Model | " + " | ".join(f"{b} Δ NLL | {b} p" for b in bases) + " |"
    sep = "|---|" + "---|---|" * len(bases)
    lines = [header, sep]
    for m in models:
        cells = []
        for b in bases:
            r = lookup.get((m, b))
            cells += [f"{r.mean_delta:+.4f}", format_p(r.p_value)] if r else ["", ""]
        lines.append(f"| {m} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
