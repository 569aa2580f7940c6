"""Constructive bridges between drawdown violations and arbitrage.

Three algorithms, each refusing inputs that fail its premise:

* extract_from_violation: a verified guaranteed-drop witness becomes a
  short position entered on the witness event and closed at the first
  drop past half the witness depth. Gains exceed epsilon/2 on the event
  and are exactly zero off it.
* find_violation_witness: a verified short-side arbitrage leg is turned
  into a guaranteed-drop witness by localizing on {entry value < level,
  exit strictly later} and racing a barrier hit against the exit; the
  drop from barrier back below the level certifies a depth of
  barrier_gap, so the witness uses epsilon = barrier_gap / 2.
* reduce_to_single_leg: on exact finite ensembles, a multi-leg
  restricted arbitrage collapses to an indicator position on a single
  leg: the first leg index whose cumulative gain is already an
  arbitrage, conditioned on either "this leg is active" or "the gain so
  far is negative", whichever the case analysis selects.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .drawdown import DrawdownProbe, drawdown_probe
from .ensemble import PathEnsemble
from .errors import InternalConsistencyError, ParameterError, RefusalError
from .stopping import (
    And,
    EarliestOf,
    EventPredicate,
    FirstDrop,
    HitAboveAfter,
    Restricted,
    StoppingRule,
    StrictlyLater,
    ValueBelowAt,
    evaluate_events,
)
from .strategies import (
    ARBITRAGE,
    ArbitrageReport,
    Constant,
    IndicatorTimes,
    Leg,
    PartialSumSign,
    SimpleStrategy,
    Tolerances,
    WeightRule,
    arbitrage_verdict,
    is_strictly_positive_class,
    strategy_gain,
    weight_values,
)

EXACT = Tolerances(0.0, 1)


@dataclass(frozen=True)
class ViolationWitness:
    """(entry rule, event, horizon, epsilon) with an observed zero count
    of shallow-drawdown paths on a positively weighted event."""

    tau: StoppingRule
    event: EventPredicate
    horizon: float
    epsilon: float


def _check_witness(ensemble: PathEnsemble, witness: ViolationWitness) -> None:
    probe = DrawdownProbe(witness.tau, witness.event, witness.horizon, (witness.epsilon,))
    row = drawdown_probe(ensemble, probe, min_count=1).rows[0]
    if row.p_event <= 0.0:
        raise RefusalError("witness event holds on no carried path")
    if row.p_hat != 0.0:
        raise RefusalError(
            f"witness does not violate on this ensemble: p_hat = {row.p_hat}"
        )


def extract_from_violation(
    ensemble: PathEnsemble, witness: ViolationWitness
) -> tuple[SimpleStrategy, ArbitrageReport]:
    """Build the short strategy certified by a guaranteed-drop witness.

    Entry: the witness rule on the event, the horizon off it. Exit: the
    first grid point after entry where the path has dropped more than
    epsilon/2, on the event; the horizon off it. Weight: -1 on the
    event. The attached report always carries verdict ARBITRAGE and the
    observed one-step increment bound as `grid_slack`.
    """
    _check_witness(ensemble, witness)
    horizon = witness.horizon
    entry = Restricted(witness.tau, witness.event, horizon, cap=horizon)
    drop = FirstDrop(entry, witness.epsilon / 2.0, cap=horizon)
    exit_ = Restricted(drop, witness.event, horizon, cap=horizon)
    strategy = SimpleStrategy(
        (Leg(entry, exit_, IndicatorTimes(witness.event, -1.0)),),
        shortsale_restricted=False,
    )
    report = arbitrage_verdict(strategy, ensemble, EXACT)
    slack = float(np.max(np.abs(np.diff(ensemble.values, axis=1))))
    report = replace(report, grid_slack=slack)
    if report.verdict != ARBITRAGE:
        raise InternalConsistencyError(
            "extracted strategy failed its own verdict; the witness check is broken"
        )
    return strategy, report


def find_violation_witness(
    ensemble: PathEnsemble,
    entry_rule: StoppingRule,
    exit_rule: StoppingRule,
    level_grid: list[float] | tuple[float, ...],
    horizon: float,
    barrier_gap: float = 1.0,
) -> ViolationWitness | None:
    """Search level candidates for a witness implied by a short-leg arbitrage.

    The input leg (-1 between entry and exit) must verify as an exact
    arbitrage, i.e. the entry value dominates the exit value on every
    carried path with a strict drop somewhere. Returns None when no
    level in the grid localizes a barrier crossing before exit; on
    ensembles of true martingale character that is the expected outcome.
    """
    if horizon < exit_rule.cap:
        raise ParameterError("horizon must cover the exit rule's cap")
    short_leg = SimpleStrategy(
        (Leg(entry_rule, exit_rule, Constant(-1.0)),), shortsale_restricted=False
    )
    base = arbitrage_verdict(short_leg, ensemble, EXACT)
    if base.verdict != ARBITRAGE:
        raise RefusalError(f"input leg is not an exact arbitrage: {base.verdict}")

    for level in level_grid:
        localized = And(
            ValueBelowAt(entry_rule, float(level)),
            StrictlyLater(exit_rule, entry_rule),
        )
        entry_on = Restricted(entry_rule, localized, horizon, cap=horizon)
        exit_on = Restricted(exit_rule, localized, horizon, cap=horizon)
        barrier = HitAboveAfter(entry_on, float(level) + barrier_gap, cap=horizon)
        race = EarliestOf(barrier, exit_on, cap=horizon)
        event = And(localized, StrictlyLater(exit_on, race))
        mask = evaluate_events(event, ensemble.values, ensemble.grid)
        if float(ensemble.weights[mask].sum()) <= 0.0:
            continue
        witness = ViolationWitness(race, event, horizon, barrier_gap / 2.0)
        probe = DrawdownProbe(witness.tau, witness.event, horizon, (witness.epsilon,))
        row = drawdown_probe(ensemble, probe, min_count=1).rows[0]
        if row.p_hat != 0.0:
            raise InternalConsistencyError(
                "constructed witness fails its zero-count property"
            )
        return witness
    return None


def _indicator_of_positive(weight: WeightRule) -> WeightRule:
    """Weight rule for the event {weight > 0} of an existing rule."""
    if isinstance(weight, Constant):
        return Constant(1.0) if weight.c > 0 else Constant(0.0)
    if isinstance(weight, IndicatorTimes):
        return IndicatorTimes(weight.event, 1.0) if weight.c > 0 else Constant(0.0)
    if isinstance(weight, PartialSumSign):
        return PartialSumSign(weight.legs, 1.0) if weight.c > 0 else Constant(0.0)
    raise ParameterError(f"unknown weight rule {weight!r}")


def reduce_to_single_leg(
    ensemble: PathEnsemble, strategy: SimpleStrategy
) -> tuple[SimpleStrategy, ArbitrageReport]:
    """Collapse an exact multi-leg restricted arbitrage to one indicator leg.

    Only exact finite ensembles are accepted: the case analysis
    manipulates almost-sure statements that are fragile under Monte
    Carlo noise. The selected leg k is the first whose cumulative gain
    is non-negative everywhere and positive somewhere with an active
    weight; the output holds 1 on {leg k active} when the earlier gain
    vanishes identically and on {earlier gain < 0} otherwise.
    """
    if not ensemble.seed_info.exact:
        raise RefusalError("reduction requires an exact finite ensemble")
    if not strategy.shortsale_restricted:
        raise RefusalError("reduction applies to short-sale restricted strategies")
    base = arbitrage_verdict(strategy, ensemble, EXACT)
    if base.verdict != ARBITRAGE:
        raise RefusalError(f"input strategy is not an exact arbitrage: {base.verdict}")

    values, grid, weights = ensemble.values, ensemble.grid, ensemble.weights
    carried = weights > 0
    rows = np.arange(values.shape[0])

    legs = []
    for leg in strategy.legs:
        w = weight_values(leg.weight, values, grid)
        if np.any(w[carried] != 0.0):
            legs.append((leg, w))
    if not legs:
        raise RefusalError("strategy has no active leg")

    leg_gains = []
    for leg, w in legs:
        gains = strategy_gain(SimpleStrategy((leg,), False), ensemble)
        leg_gains.append(gains)

    running = np.zeros(values.shape[0])
    k = None
    for l, ((leg, w), gains) in enumerate(zip(legs, leg_gains)):
        running = running + gains
        active = np.any(carried & (w > 0))
        nonneg = not np.any(running[carried] < 0.0)
        positive = bool(np.any(carried & (running > 0.0)))
        if active and nonneg and positive:
            k = l
            break
    if k is None:
        raise InternalConsistencyError(
            "no leg index satisfies the cumulative-arbitrage conditions; "
            "this contradicts the verified input arbitrage"
        )

    earlier = np.zeros(values.shape[0])
    for gains in leg_gains[:k]:
        earlier = earlier + gains

    leg_k = legs[k][0]
    if np.any(earlier[carried] < 0.0):
        weight = PartialSumSign(tuple(leg for leg, _ in legs[:k]), 1.0)
    else:
        # minimality of k forces the earlier gain to vanish a.s. here
        weight = _indicator_of_positive(leg_k.weight)

    reduced = SimpleStrategy((Leg(leg_k.entry, leg_k.exit, weight),), shortsale_restricted=True)
    out_gains = strategy_gain(reduced, ensemble)
    if not is_strictly_positive_class(out_gains, weights, 0.0):
        raise InternalConsistencyError("reduced leg is not strictly positive")
    report = arbitrage_verdict(reduced, ensemble, EXACT)
    return reduced, report
