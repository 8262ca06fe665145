"""Minimal Cognitive Grid scoring.

All quantities are computed at full double precision; rounding happens only
when a report is rendered (see :func:`display`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_DOWN, Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from cogeval.errors import ValidationError

WEIGHT_TOL = 1e-9
DEFAULT_EPSILON = 0.01
GENERALITY_LEVELS = (0.0, 0.5, 1.0)
COGNITIVE_DOMAINS = ("quantitative", "fluid", "visual", "language")


def _check_weight_sum(weights: Sequence[float], what: str) -> None:
    total = math.fsum(weights)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValidationError(f"{what} must sum to 1, got {total!r}")


def _unit(x: float, what: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"{what} must lie in [0, 1], got {x!r}")
    return x


def parse_fraction(value) -> float:
    """Accept numbers or strings such as ``"1/3"``; return a float."""
    if isinstance(value, bool):
        raise ValidationError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse {value!r} as a fraction") from exc
    raise ValidationError(f"expected a number or fraction string, got {value!r}")


# --------------------------------------------------------------------------
# Functional / Structural Ratio
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Constraint:
    id: str
    weight: float
    structural: bool
    description: str = ""

    @property
    def functional(self) -> int:
        return 1 - int(self.structural)


@dataclass(frozen=True)
class ConstraintSet:
    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValidationError("constraint set needs at least one entry")
        ids = [c.id for c in entries]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ValidationError(f"duplicate constraint ids: {dupes}")
        for c in entries:
            if not isinstance(c.structural, bool):
                raise ValidationError(f"constraint {c.id}: structural flag must be boolean")
            _unit(c.weight, f"constraint {c.id} weight")
        _check_weight_sum([c.weight for c in entries], "constraint weights")

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "ConstraintSet":
        entries = []
        for i, rec in enumerate(records):
            try:
                entries.append(
                    Constraint(
                        id=str(rec["id"]),
                        weight=parse_fraction(rec["weight"]),
                        structural=rec["structural"],
                        description=rec.get("description", ""),
                    )
                )
            except KeyError as exc:
                raise ValidationError(f"constraint #{i + 1} is missing {exc.args[0]!r}") from None
        return cls(tuple(entries))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def structural_scores(constraints: ConstraintSet) -> tuple:
    """Return ``(S, F)``: weighted structural score and its complement."""
    s = math.fsum(c.weight * int(c.structural) for c in constraints)
    f = math.fsum(c.weight * c.functional for c in constraints)
    return s, f


def fsr(structural: float, functional: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """Raw functional-to-structural ratio ``F / (S + epsilon)``."""
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon!r}")
    _unit(structural, "structural score")
    _unit(functional, "functional score")
    if abs(structural + functional - 1.0) > WEIGHT_TOL:
        raise ValidationError(
            f"functional score must equal 1 - structural score, got S={structural!r}, F={functional!r}"
        )
    return functional / (structural + epsilon)


def normalize_fsr(raw: float) -> float:
    """Map a raw ratio onto a structurality index in (0, 1].

    Equivalent to ``I / (1 + I)`` with ``I = 1 / raw``; ``raw == 0`` gives 1.
    """
    raw = float(raw)
    if math.isnan(raw) or raw < 0:
        raise ValidationError(f"raw FSR must be nonnegative, got {raw!r}")
    return 1.0 / (1.0 + raw)


@dataclass(frozen=True)
class FsrResult:
    structural_score: float
    functional_score: float
    raw_ratio: float
    normalized: float
    epsilon: float


def score_fsr(constraints: ConstraintSet, epsilon: float = DEFAULT_EPSILON) -> FsrResult:
    s, f = structural_scores(constraints)
    raw = fsr(s, f, epsilon)
    return FsrResult(s, f, raw, normalize_fsr(raw), epsilon)


# --------------------------------------------------------------------------
# Generality
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainScores:
    quantitative: float
    fluid: float
    visual: float
    language: float
    sensorimotor: float

    def __post_init__(self):
        for name in (*COGNITIVE_DOMAINS, "sensorimotor"):
            value = getattr(self, name)
            if isinstance(value, bool) or float(value) not in GENERALITY_LEVELS:
                raise ValidationError(f"domain score {name}={value!r} not in {{0, 0.5, 1}}")
            object.__setattr__(self, name, float(value))

    @property
    def cognitive(self) -> tuple:
        return tuple(getattr(self, d) for d in COGNITIVE_DOMAINS)


def generality(scores: DomainScores) -> float:
    cognitive_mean = math.fsum(scores.cognitive) / len(COGNITIVE_DOMAINS)
    return 0.5 * cognitive_mean + 0.5 * scores.sensorimotor


# --------------------------------------------------------------------------
# Performance match
# --------------------------------------------------------------------------


def accuracy_score(deltas: Sequence[float]) -> float:
    """``1 / (1 + |mean(deltas)|)``; signed deltas cancel before the absolute value."""
    deltas = [float(d) for d in deltas]
    if not deltas:
        raise ValidationError("accuracy needs at least one benchmark delta")
    if not all(math.isfinite(d) for d in deltas):
        raise ValidationError("accuracy deltas must be finite")
    return 1.0 / (1.0 + abs(math.fsum(deltas) / len(deltas)))


def error_pattern_score(indicators: Sequence[Optional[int]]) -> Optional[float]:
    """Map mean +1/-1 indicators onto [0, 1].

    ``None`` entries mark benchmarks without error data and are skipped. When
    nothing is left the score is unavailable and ``None`` is returned.
    """
    present = []
    for e in indicators:
        if e is None:
            continue
        if isinstance(e, bool) or e not in (1, -1):
            raise ValidationError(f"error indicator must be +1, -1 or missing, got {e!r}")
        present.append(int(e))
    if not present:
        return None
    mean = sum(present) / len(present)
    return (mean + 1.0) / 2.0


TimingInput = Union[float, Sequence[Sequence[float]]]


def timing_score(timing: TimingInput) -> float:
    """Execution-time match.

    ``timing`` is either a list of ``(t_model, t_human)`` pairs in seconds or a
    single empirical estimate in [0, 1], which is returned unchanged.
    """
    if isinstance(timing, (int, float)) and not isinstance(timing, bool):
        return _unit(timing, "empirical timing estimate")
    pairs = list(timing)
    if not pairs:
        raise ValidationError("timing needs at least one (model, human) pair")
    scores = []
    for i, pair in enumerate(pairs):
        t_model, t_human = (float(v) for v in pair)
        if not t_human > 0:
            raise ValidationError(f"timing pair {i}: human time must be positive, got {t_human!r}")
        if t_model < 0:
            raise ValidationError(f"timing pair {i}: model time must be nonnegative, got {t_model!r}")
        scores.append(1.0 / (1.0 + abs(t_model - t_human) / t_human))
    return math.fsum(scores) / len(scores)


@dataclass(frozen=True)
class PerformanceInputs:
    nll_deltas: Optional[tuple] = None
    error_indicators: Optional[tuple] = None
    timing: Optional[TimingInput] = None
    weights: tuple = (1 / 3, 1 / 3, 1 / 3)
    baseline: float = 0.0

    def __post_init__(self):
        if len(self.weights) != 3:
            raise ValidationError("performance weights are (alpha, beta, gamma)")
        for w in self.weights:
            _unit(w, "performance weight")
        _check_weight_sum(self.weights, "performance weights (alpha, beta, gamma)")


@dataclass(frozen=True)
class PerformanceResult:
    accuracy: Optional[float]
    error_pattern: Optional[float]
    timing: Optional[float]
    weights: tuple  # renormalized over available sub-metrics; 0 for missing
    score: float
    mean_delta: Optional[float] = None
    baseline: float = 0.0


def score_performance(inputs: PerformanceInputs) -> PerformanceResult:
    acc = accuracy_score(inputs.nll_deltas) if inputs.nll_deltas else None
    err = error_pattern_score(inputs.error_indicators) if inputs.error_indicators else None
    tim = timing_score(inputs.timing) if inputs.timing is not None else None
    subs = (acc, err, tim)
    available = [(w, v) for w, v in zip(inputs.weights, subs) if v is not None]
    if not available:
        raise ValidationError("performance match needs at least one available sub-metric")
    total = math.fsum(w for w, _ in available)
    if total <= 0:
        raise ValidationError("available performance sub-metrics all carry zero weight")
    weights = tuple(w / total if v is not None else 0.0 for w, v in zip(inputs.weights, subs))
    score = math.fsum(w * v for w, v in zip(weights, subs) if v is not None)
    mean_delta = None
    if inputs.nll_deltas:
        mean_delta = math.fsum(inputs.nll_deltas) / len(inputs.nll_deltas)
    return PerformanceResult(acc, err, tim, weights, min(1.0, score), mean_delta, inputs.baseline)


def performance_match(inputs: PerformanceInputs) -> float:
    return score_performance(inputs).score


# --------------------------------------------------------------------------
# Unified plausibility score
# --------------------------------------------------------------------------

DEFAULT_PLAUSIBILITY_WEIGHTS = (0.5, 0.25, 0.25)


def plausibility(fsr_norm: float, generality_score: float, performance: float,
                 lam: float = 0.5, mu: float = 0.25, nu: float = 0.25) -> float:
    for name, v in (("FSR'", fsr_norm), ("generality", generality_score),
                    ("performance match", performance), ("lambda", lam), ("mu", mu), ("nu", nu)):
        _unit(v, name)
    _check_weight_sum((lam, mu, nu), "plausibility weights (lambda, mu, nu)")
    return lam * fsr_norm + mu * generality_score + nu * performance


@dataclass(frozen=True)
class PlausibilityResult:
    fsr: FsrResult
    generality: float
    performance: PerformanceResult
    weights: tuple
    score: float
    domains: DomainScores
    constraints: ConstraintSet
    model: str = "model"
    task: str = ""

    @property
    def fsr_normalized(self) -> float:
        return self.fsr.normalized

    @property
    def performance_match(self) -> float:
        return self.performance.score


# --------------------------------------------------------------------------
# Declarative bundles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Bundle:
    constraints: ConstraintSet
    domains: DomainScores
    performance: PerformanceInputs
    epsilon: float = DEFAULT_EPSILON
    weights: tuple = DEFAULT_PLAUSIBILITY_WEIGHTS
    model: str = "model"
    task: str = ""


class BundleError(ValidationError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid scoring bundle:\n" + "\n".join(f"  - {e}" for e in self.errors))


def bundle_from_dict(data: Mapping) -> Bundle:
    """Build a :class:`Bundle`, collecting every validation problem before raising."""
    errors = []

    def attempt(label, fn):
        try:
            return fn()
        except ValidationError as exc:
            errors.append(f"{label}: {exc}")
        except (KeyError, TypeError) as exc:
            errors.append(f"{label}: malformed ({exc})")
        return None

    if not isinstance(data, Mapping):
        raise BundleError(["bundle must be a JSON object"])

    constraints = attempt("constraints", lambda: ConstraintSet.from_records(data["constraints"]))

    def _domains():
        g = data["generality"]
        return DomainScores(**{k: g[k] for k in (*COGNITIVE_DOMAINS, "sensorimotor")})

    domains = attempt("generality", _domains)

    def _perf():
        p = data.get("performance", {})
        deltas = p.get("nll_deltas")
        indicators = p.get("error_indicators")
        weights = p.get("weights", [1 / 3, 1 / 3, 1 / 3])
        return PerformanceInputs(
            nll_deltas=tuple(float(d) for d in deltas) if deltas is not None else None,
            error_indicators=tuple(indicators) if indicators is not None else None,
            timing=p.get("timing"),
            weights=tuple(parse_fraction(w) for w in weights),
            baseline=float(p.get("baseline", 0.0)),
        )

    perf = attempt("performance", _perf)

    def _eps():
        eps = parse_fraction(data.get("epsilon", DEFAULT_EPSILON))
        if not eps > 0:
            raise ValidationError(f"epsilon must be positive, got {eps!r}")
        return eps

    eps = attempt("epsilon", _eps)

    def _weights():
        w = data.get("weights", {})
        if isinstance(w, Mapping):
            w = (w.get("lambda", 0.5), w.get("mu", 0.25), w.get("nu", 0.25))
        w = tuple(parse_fraction(v) for v in w)
        if len(w) != 3:
            raise ValidationError("plausibility weights are (lambda, mu, nu)")
        for v in w:
            _unit(v, "plausibility weight")
        _check_weight_sum(w, "plausibility weights (lambda, mu, nu)")
        return w

    weights = attempt("weights", _weights)
    if errors:
        raise BundleError(errors)
    return Bundle(constraints, domains, perf, eps, weights,
                  model=str(data.get("model", "model")), task=str(data.get("task", "")))


def load_bundle(path) -> Bundle:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BundleError([f"not valid JSON: {exc}"]) from None
    return bundle_from_dict(data)


def score_bundle(bundle: Bundle) -> PlausibilityResult:
    fsr_res = score_fsr(bundle.constraints, bundle.epsilon)
    g = generality(bundle.domains)
    perf = score_performance(bundle.performance)
    p = plausibility(fsr_res.normalized, g, perf.score, *bundle.weights)
    return PlausibilityResult(fsr_res, g, perf, bundle.weights, p, bundle.domains,
                              bundle.constraints, bundle.model, bundle.task)


# --------------------------------------------------------------------------
# Report tables
# --------------------------------------------------------------------------


def display(value: Optional[float], places: int = 2) -> str:
    """Fixed-point string for reports; exact ties round toward zero (0.375 -> 0.37)."""
    if value is None:
        return "/"
    quantum = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_DOWN))


@dataclass
class Table:
    name: str
    title: str
    columns: list
    rows: list = field(default_factory=list)  # each row: list of cell values


def mcg_tables(result: PlausibilityResult) -> list:
    """The four-table layout: FSR, generality, performance match, overall score."""
    f = result.fsr
    ids = [c.id for c in result.constraints]
    t1 = Table("fsr", "Functional/Structural Ratio",
               ["Constraint", *ids, "S_M", "F_M", "F/S + eps", "FSR_M"])
    t1.rows.append(["Weight", *[c.weight for c in result.constraints],
                    f.structural_score, f.functional_score, f.raw_ratio, f.normalized])
    t1.rows.append(["Structural", *[float(c.structural) for c in result.constraints],
                    None, None, None, None])
    t1.rows.append(["Functional", *[float(c.functional) for c in result.constraints],
                    None, None, None, None])

    d = result.domains
    t2 = Table("generality", "Generality",
               ["Model", "Quant. Know.", "Fluid Reas.", "Vis. Proc.", "Lan. & Verb.", "Sens./Mot.", "G_M"])
    t2.rows.append([result.model, d.quantitative, d.fluid, d.visual, d.language, d.sensorimotor,
                    result.generality])

    p = result.performance
    abs_delta = abs(p.mean_delta) if p.mean_delta is not None else None
    t3 = Table("performance", "Performance Match",
               ["Model", "Task", "Baseline", "|Delta| NLL", "Accuracy", "Error Patt.", "Resp. Times", "PM_M"])
    t3.rows.append([result.model, result.task, p.baseline, abs_delta, p.accuracy, p.error_pattern,
                    p.timing, p.score])

    t4 = Table("plausibility", "Overall cognitive plausibility",
               ["Model", "FSR_M", "G_M", "PM_M", "P_M"])
    t4.rows.append([result.model, f.normalized, result.generality, p.score, result.score])
    return [t1, t2, t3, t4]


def mcg_summary(result: PlausibilityResult) -> dict:
    """Flat mapping of every scored quantity, full precision."""
    f = result.fsr
    p = result.performance
    return {
        "model": result.model,
        "S_M": f.structural_score,
        "F_M": f.functional_score,
        "FSR_raw": f.raw_ratio,
        "FSR_norm": f.normalized,
        "epsilon": f.epsilon,
        "G_M": result.generality,
        "A_M": p.accuracy,
        "E_M": p.error_pattern,
        "T_M": p.timing,
        "PM_weights": list(p.weights),
        "PM_M": p.score,
        "weights": list(result.weights),
        "P_M": result.score,
    }
