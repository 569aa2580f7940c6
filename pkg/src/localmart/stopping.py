"""Bounded stopping rules and events, evaluated on discrete paths.

Rules resolve to grid indices by scanning path values; every rule
carries a `cap` time so resolution is bounded. Conditions are evaluated
at grid points only, inclusively for level hits (X >= level) and
strictly for drops (X_t - X_base < -eps), matching the first-time-below
infimum they discretize. First-passage undershoot between grid points
is an accepted discretization effect.

Resolution and event evaluation read path values only up to the
resolved index, so adaptedness holds by construction; the test suite
fuzzes path suffixes to confirm it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ParameterError
from .grid import TimeGrid


# ---------------------------------------------------------------------------
# stopping rules


@dataclass(frozen=True)
class Deterministic:
    """Resolve at the first grid point at or after time t."""

    t: float
    cap: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.t < 0:
            raise ParameterError("deterministic time must be >= 0")
        if self.cap is None:
            object.__setattr__(self, "cap", self.t)


@dataclass(frozen=True)
class HitAbove:
    """First grid point with X >= level, else the cap."""

    level: float
    cap: float


@dataclass(frozen=True)
class HitBelow:
    """First grid point with X <= level, else the cap."""

    level: float
    cap: float


@dataclass(frozen=True)
class FirstDrop:
    """First grid point at or after `base` with X_t - X_base < -eps."""

    base: "StoppingRule"
    eps: float
    cap: float


@dataclass(frozen=True)
class Restricted:
    """Resolve as `base` on the event, at `fallback_t` off it."""

    base: "StoppingRule"
    event: "EventPredicate"
    fallback_t: float
    cap: float


@dataclass(frozen=True)
class HitAboveAfter:
    """First grid point at or after `base` with X >= level, else the cap."""

    base: "StoppingRule"
    level: float
    cap: float


@dataclass(frozen=True)
class EarliestOf:
    """Pointwise minimum of two rules (still a stopping rule)."""

    first: "StoppingRule"
    second: "StoppingRule"
    cap: float


@dataclass(frozen=True)
class PrefixStop:
    """Stop when the path's initial values match one of the prefixes.

    Used to express stopping rules read off finite trees: each prefix is
    the exact value history root -> stop node. Paths matching no prefix
    resolve at the cap.
    """

    prefixes: tuple[tuple[float, ...], ...]
    cap: float


StoppingRule = Union[
    Deterministic, HitAbove, HitBelow, FirstDrop, Restricted,
    HitAboveAfter, EarliestOf, PrefixStop,
]


# ---------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class WholeSpace:
    pass


@dataclass(frozen=True)
class ValueBelowAt:
    """{X at the rule's resolution < k}."""

    rule: StoppingRule
    k: float


@dataclass(frozen=True)
class ValueAboveAt:
    """{X at the rule's resolution > k}."""

    rule: StoppingRule
    k: float


@dataclass(frozen=True)
class StrictlyLater:
    """{later resolves strictly after earlier}; measurable at `earlier`."""

    later: StoppingRule
    earlier: StoppingRule


@dataclass(frozen=True)
class And:
    a: "EventPredicate"
    b: "EventPredicate"


@dataclass(frozen=True)
class Or:
    a: "EventPredicate"
    b: "EventPredicate"


@dataclass(frozen=True)
class Not:
    a: "EventPredicate"


EventPredicate = Union[WholeSpace, ValueBelowAt, ValueAboveAt, StrictlyLater, And, Or, Not]


# ---------------------------------------------------------------------------
# evaluation


def _first_true(mask: np.ndarray, start: np.ndarray, cap_idx: int) -> np.ndarray:
    """First column >= start (per row) and <= cap_idx where mask holds."""
    cols = np.arange(mask.shape[1])
    valid = mask.copy()
    valid[:, cap_idx + 1 :] = False
    valid &= cols[None, :] >= start[:, None]
    hit = valid.any(axis=1)
    return np.where(hit, np.argmax(valid, axis=1), cap_idx)


def resolve_indices(rule: StoppingRule, values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Vectorized resolution: one grid index per path row."""
    n = values.shape[0]
    cap_idx = grid.cap_index(rule.cap)

    if isinstance(rule, Deterministic):
        k = min(grid.first_index_at_or_after(rule.t), cap_idx)
        return np.full(n, k, dtype=np.intp)
    if isinstance(rule, HitAbove):
        return _first_true(values >= rule.level, np.zeros(n, dtype=np.intp), cap_idx)
    if isinstance(rule, HitBelow):
        return _first_true(values <= rule.level, np.zeros(n, dtype=np.intp), cap_idx)
    if isinstance(rule, FirstDrop):
        base_idx = resolve_indices(rule.base, values, grid)
        base_val = values[np.arange(n), base_idx]
        mask = values - base_val[:, None] < -rule.eps
        return np.minimum(_first_true(mask, base_idx, cap_idx), cap_idx)
    if isinstance(rule, HitAboveAfter):
        base_idx = resolve_indices(rule.base, values, grid)
        return np.minimum(_first_true(values >= rule.level, base_idx, cap_idx), cap_idx)
    if isinstance(rule, Restricted):
        on_event = evaluate_events(rule.event, values, grid)
        base_idx = resolve_indices(rule.base, values, grid)
        fb = grid.first_index_at_or_after(rule.fallback_t)
        return np.minimum(np.where(on_event, base_idx, fb), cap_idx)
    if isinstance(rule, EarliestOf):
        a = resolve_indices(rule.first, values, grid)
        b = resolve_indices(rule.second, values, grid)
        return np.minimum(np.minimum(a, b), cap_idx)
    if isinstance(rule, PrefixStop):
        idx = np.full(n, cap_idx, dtype=np.intp)
        unmatched = np.ones(n, dtype=bool)
        for prefix in rule.prefixes:
            m = len(prefix)
            if m > values.shape[1]:
                continue
            match = unmatched & (values[:, :m] == np.asarray(prefix)).all(axis=1)
            idx[match] = min(m - 1, cap_idx)
            unmatched &= ~match
        return idx
    raise ParameterError(f"unknown stopping rule {rule!r}")


def resolve_stopping_time(rule: StoppingRule, values: np.ndarray, grid: TimeGrid) -> int:
    """Single-path resolution; returns the resolved grid index."""
    return int(resolve_indices(rule, np.asarray(values, dtype=np.float64)[None, :], grid)[0])


def evaluate_events(pred: EventPredicate, values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Vectorized event evaluation: one boolean per path row."""
    n = values.shape[0]
    if isinstance(pred, WholeSpace):
        return np.ones(n, dtype=bool)
    if isinstance(pred, ValueBelowAt):
        idx = resolve_indices(pred.rule, values, grid)
        return values[np.arange(n), idx] < pred.k
    if isinstance(pred, ValueAboveAt):
        idx = resolve_indices(pred.rule, values, grid)
        return values[np.arange(n), idx] > pred.k
    if isinstance(pred, StrictlyLater):
        return resolve_indices(pred.later, values, grid) > resolve_indices(pred.earlier, values, grid)
    if isinstance(pred, And):
        return evaluate_events(pred.a, values, grid) & evaluate_events(pred.b, values, grid)
    if isinstance(pred, Or):
        return evaluate_events(pred.a, values, grid) | evaluate_events(pred.b, values, grid)
    if isinstance(pred, Not):
        return ~evaluate_events(pred.a, values, grid)
    raise ParameterError(f"unknown event predicate {pred!r}")


def evaluate_event(pred: EventPredicate, values: np.ndarray, grid: TimeGrid) -> bool:
    """Single-path event evaluation."""
    return bool(evaluate_events(pred, np.asarray(values, dtype=np.float64)[None, :], grid)[0])


def anchor_indices(pred: EventPredicate, values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Per-path index up to which the event is decided (for adaptedness tests)."""
    n = values.shape[0]
    if isinstance(pred, WholeSpace):
        return np.zeros(n, dtype=np.intp)
    if isinstance(pred, (ValueBelowAt, ValueAboveAt)):
        return resolve_indices(pred.rule, values, grid)
    if isinstance(pred, StrictlyLater):
        return np.minimum(
            resolve_indices(pred.earlier, values, grid),
            resolve_indices(pred.later, values, grid),
        )
    if isinstance(pred, (And, Or)):
        return np.maximum(anchor_indices(pred.a, values, grid), anchor_indices(pred.b, values, grid))
    if isinstance(pred, Not):
        return anchor_indices(pred.a, values, grid)
    raise ParameterError(f"unknown event predicate {pred!r}")
