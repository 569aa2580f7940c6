"""Simple trading strategies, gains and arbitrage verdicts.

A strategy is an ordered list of legs (entry rule, exit rule, weight);
gains are sums of weight * (X_exit - X_entry) over legs. The riskless
account is the numeraire (identically 1), so cash positions contribute
no gain and are not represented.

A gain profile counts as an arbitrage when it is non-negative on every
(positive-weight) path and strictly positive on enough paths: exact
ensembles use tolerance zero and a single hit, Monte Carlo ensembles a
small noise floor and a minimum hit count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .ensemble import PathEnsemble
from .errors import ConstraintViolationError, ParameterError, StructuralError
from .grid import TimeGrid
from .stopping import (
    Deterministic,
    EventPredicate,
    StoppingRule,
    ValueAboveAt,
    ValueBelowAt,
    WholeSpace,
    evaluate_events,
    resolve_indices,
)

ARBITRAGE = "ARBITRAGE"
NO_ARBITRAGE_EVIDENCE = "NO_ARBITRAGE_EVIDENCE"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Constant:
    """Fixed position size."""

    c: float


@dataclass(frozen=True)
class IndicatorTimes:
    """c on the event, 0 off it; the event must be known at entry."""

    event: EventPredicate
    c: float


@dataclass(frozen=True)
class PartialSumSign:
    """c where the summed gain of the given legs is strictly negative.

    Decided by the time those legs have exited, so usable as an entry
    weight for any leg starting at or after them.
    """

    legs: tuple["Leg", ...]
    c: float


WeightRule = Union[Constant, IndicatorTimes, PartialSumSign]


@dataclass(frozen=True)
class Leg:
    entry: StoppingRule
    exit: StoppingRule
    weight: WeightRule


@dataclass(frozen=True)
class SimpleStrategy:
    legs: tuple[Leg, ...]
    shortsale_restricted: bool = False


def weight_values(rule: WeightRule, values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Per-path weight of one leg."""
    n = values.shape[0]
    if isinstance(rule, Constant):
        return np.full(n, rule.c)
    if isinstance(rule, IndicatorTimes):
        return np.where(evaluate_events(rule.event, values, grid), rule.c, 0.0)
    if isinstance(rule, PartialSumSign):
        total = np.zeros(n)
        for leg in rule.legs:
            total += _leg_gain(leg, values, grid)
        return np.where(total < 0.0, rule.c, 0.0)
    raise ParameterError(f"unknown weight rule {rule!r}")


def _leg_indices(leg: Leg, values: np.ndarray, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    entry = resolve_indices(leg.entry, values, grid)
    exit_ = resolve_indices(leg.exit, values, grid)
    bad = entry > exit_
    if bad.any():
        raise StructuralError(
            f"leg exits before it enters on path {int(np.argmax(bad))}"
        )
    return entry, exit_


def _leg_gain(leg: Leg, values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    entry, exit_ = _leg_indices(leg, values, grid)
    rows = np.arange(values.shape[0])
    w = weight_values(leg.weight, values, grid)
    return w * (values[rows, exit_] - values[rows, entry])


def strategy_gain(strategy: SimpleStrategy, ensemble: PathEnsemble) -> np.ndarray:
    """Per-path total gain; validates leg ordering and non-overlap."""
    values, grid = ensemble.values, ensemble.grid
    gains = np.zeros(ensemble.n_paths)
    prev_exit = None
    for j, leg in enumerate(strategy.legs):
        entry, exit_ = _leg_indices(leg, values, grid)
        if prev_exit is not None:
            bad = prev_exit > entry
            if bad.any():
                raise StructuralError(
                    f"legs {j - 1} and {j} overlap on path {int(np.argmax(bad))}"
                )
        rows = np.arange(values.shape[0])
        w = weight_values(leg.weight, values, grid)
        gains += w * (values[rows, exit_] - values[rows, entry])
        prev_exit = exit_
    return gains


def is_strictly_positive_class(
    samples: np.ndarray, weights: np.ndarray, tol_zero: float = 0.0
) -> bool:
    """Non-negative a.s. and positive with positive probability."""
    samples = np.asarray(samples, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    carried = weights > 0
    if np.any(samples[carried] < -tol_zero):
        return False
    return bool(np.any(carried & (samples > tol_zero)))


@dataclass(frozen=True)
class Tolerances:
    """Noise floor for `gain == 0` and minimum count of positive paths."""

    tol_zero: float = 0.0
    min_hits: int = 1

    @classmethod
    def for_ensemble(cls, ensemble: PathEnsemble) -> "Tolerances":
        """Exact ensembles: zero/1. Monte Carlo: 1e-9 * price scale, 0.1% hits."""
        if ensemble.seed_info.exact:
            return cls(0.0, 1)
        scale = max(1.0, float(np.max(np.abs(ensemble.values[:, 0]))))
        return cls(1e-9 * scale, max(1, math.ceil(1e-3 * ensemble.n_paths)))


@dataclass(frozen=True)
class ArbitrageReport:
    min_gain: float
    frac_positive: float
    frac_negative: float
    verdict: str
    tol_zero: float
    min_hits: int
    n_paths: int
    pos_hits: int
    neg_hits: int
    grid_slack: float | None = None


def _validate_shortsale(strategy: SimpleStrategy, values: np.ndarray, grid: TimeGrid) -> None:
    for j, leg in enumerate(strategy.legs):
        w = weight_values(leg.weight, values, grid)
        if np.any(w < 0):
            raise ConstraintViolationError(
                f"leg {j} takes a negative weight on path "
                f"{int(np.argmax(w < 0))} despite the short-sale restriction"
            )


def arbitrage_verdict(
    strategy: SimpleStrategy,
    ensemble: PathEnsemble,
    tolerances: Tolerances | None = None,
) -> ArbitrageReport:
    """Classify the strategy's gain profile on the ensemble."""
    tol = tolerances if tolerances is not None else Tolerances.for_ensemble(ensemble)
    if strategy.shortsale_restricted:
        _validate_shortsale(strategy, ensemble.values, ensemble.grid)
    gains = strategy_gain(strategy, ensemble)
    return verdict_from_gains(gains, ensemble.weights, tol)


def verdict_from_gains(
    gains: np.ndarray, weights: np.ndarray, tol: Tolerances
) -> ArbitrageReport:
    carried = weights > 0
    min_gain = float(gains[carried].min()) if carried.any() else 0.0
    pos = carried & (gains > tol.tol_zero)
    neg = carried & (gains < -tol.tol_zero)
    pos_hits = int(pos.sum())
    neg_hits = int(neg.sum())
    frac_positive = float(weights[pos].sum())
    frac_negative = float(weights[neg].sum())
    if min_gain >= -tol.tol_zero and pos_hits >= tol.min_hits:
        verdict = ARBITRAGE
    elif neg_hits > 0 or pos_hits == 0:
        verdict = NO_ARBITRAGE_EVIDENCE
    else:
        verdict = INCONCLUSIVE
    return ArbitrageReport(
        min_gain=min_gain,
        frac_positive=frac_positive,
        frac_negative=frac_negative,
        verdict=verdict,
        tol_zero=tol.tol_zero,
        min_hits=tol.min_hits,
        n_paths=int(gains.shape[0]),
        pos_hits=pos_hits,
        neg_hits=neg_hits,
    )


# ---------------------------------------------------------------------------
# single-leg search

Candidate = tuple[StoppingRule, StoppingRule, EventPredicate]


@dataclass(frozen=True)
class SearchResult:
    strategy: SimpleStrategy | None
    report: ArbitrageReport | None
    n_candidates: int
    n_skipped: int
    all_reports: tuple[tuple[SimpleStrategy, ArbitrageReport], ...] = ()


def search_single_leg(
    ensemble: PathEnsemble,
    rule_family: Sequence[Candidate],
    shortsale_restricted: bool,
    tolerances: Tolerances | None = None,
    return_all: bool = False,
) -> SearchResult:
    """Scan one-leg candidates; best = max min-gain among sign-positive ones.

    Long-only (+1) weights under the short-sale restriction, both signs
    otherwise. Candidates whose exit can precede their entry on some
    path are skipped.
    """
    family = list(rule_family)
    if not family:
        raise ParameterError("rule family is empty")
    tol = tolerances if tolerances is not None else Tolerances.for_ensemble(ensemble)
    signs = (1.0,) if shortsale_restricted else (1.0, -1.0)

    best: tuple[SimpleStrategy, ArbitrageReport] | None = None
    collected: list[tuple[SimpleStrategy, ArbitrageReport]] = []
    n_candidates = 0
    n_skipped = 0

    for entry, exit_, event in family:
        for sign in signs:
            n_candidates += 1
            leg = Leg(entry, exit_, IndicatorTimes(event, sign))
            strat = SimpleStrategy((leg,), shortsale_restricted)
            try:
                gains = strategy_gain(strat, ensemble)
            except StructuralError:
                n_skipped += 1
                continue
            report = verdict_from_gains(gains, ensemble.weights, tol)
            if return_all:
                collected.append((strat, report))
            if best is None:
                best = (strat, report)
                continue
            cur_key = (best[1].frac_positive > 0, best[1].min_gain)
            new_key = (report.frac_positive > 0, report.min_gain)
            if new_key > cur_key:
                best = (strat, report)

    if best is None:
        raise ParameterError("no structurally valid candidate in the family")
    return SearchResult(
        strategy=best[0],
        report=best[1],
        n_candidates=n_candidates,
        n_skipped=n_skipped,
        all_reports=tuple(collected),
    )


def default_single_leg_family(ensemble: PathEnsemble, size: int = 50) -> list[Candidate]:
    """Data-aware candidate family of at least `size` non-degenerate legs.

    Entries and exits at deterministic grid fractions (entry strictly
    before exit), events cut at the empirical median of the entry-time
    value so both the event and its complement carry mass.
    """
    grid = ensemble.grid
    horizon = grid.horizon
    entry_fracs = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    exit_fracs = (0.6, 0.75, 0.9, 1.0)
    candidates: list[Candidate] = []
    for ef in entry_fracs:
        t_entry = ef * horizon
        entry = Deterministic(t_entry)
        events: list[EventPredicate] = [WholeSpace()]
        if ef > 0:
            # at t = 0 every path sits at x0, so only the trivial event is non-degenerate
            col = grid.first_index_at_or_after(t_entry)
            cut = float(np.median(ensemble.values[:, col]))
            events += [ValueBelowAt(entry, cut), ValueAboveAt(entry, cut)]
        for xf in exit_fracs:
            exit_ = Deterministic(xf * horizon)
            for event in events:
                candidates.append((entry, exit_, event))
    if len(candidates) < size:
        raise ParameterError(
            f"default family tops out at {len(candidates)} candidates, {size} requested"
        )
    return candidates
