"""Shallow-drawdown persistence probes.

A probe asks: after the entry rule resolves, and on a chosen event,
does the path stay above its entry value minus epsilon up to the
horizon with positive probability? Diffusive martingales do; processes
that admit a guaranteed drop do not. The estimate is one-sided: a scan
can suspect a violation (an observed zero count over a well-populated
event) but can never certify the property over all stopping rules, of
which any probe family is a strict subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import PathEnsemble
from .errors import GridError, ParameterError
from .stopping import EventPredicate, StoppingRule, evaluate_events, resolve_indices

CONSISTENT = "CONSISTENT"
VIOLATION_SUSPECTED = "VIOLATION_SUSPECTED"
UNDERPOWERED = "UNDERPOWERED"

ONE_SIDED_NOTE = (
    "one-sided estimate: probes can suspect a violation but cannot certify "
    "the property over all stopping rules"
)

# rows processed per block when forming running minima
_BLOCK_ROWS = 16384


@dataclass(frozen=True)
class DrawdownProbe:
    """(entry rule, event, horizon, epsilons) to test in one pass."""

    tau: StoppingRule
    event: EventPredicate
    horizon: float
    epsilons: tuple[float, ...]

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if not eps:
            raise ParameterError("probe needs at least one epsilon")
        if any(e <= 0 for e in eps):
            raise ParameterError("epsilons must be strictly positive")
        if self.horizon < self.tau.cap:
            raise ParameterError("probe horizon must cover the entry rule's cap")
        object.__setattr__(self, "epsilons", eps)


@dataclass(frozen=True)
class EpsilonRow:
    epsilon: float
    p_hat: float
    p_event: float
    n_event: int
    n_joint: int
    ci_low: float
    ci_high: float
    verdict: str


@dataclass(frozen=True)
class DrawdownReport:
    rows: tuple[EpsilonRow, ...]
    n_paths: int
    min_count: int
    note: str = ONE_SIDED_NOTE

    @property
    def verdict(self) -> str:
        if any(r.verdict == VIOLATION_SUSPECTED for r in self.rows):
            return VIOLATION_SUSPECTED
        if all(r.verdict == UNDERPOWERED for r in self.rows):
            return UNDERPOWERED
        return CONSISTENT


def wilson_interval(successes: float, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _running_min_after_entry(
    values: np.ndarray, entry_idx: np.ndarray, t_idx: int
) -> np.ndarray:
    """Per path: min of (X_t - X_entry) over grid points in [entry, t_idx]."""
    n = values.shape[0]
    out = np.empty(n)
    cols = np.arange(t_idx + 1)
    for lo in range(0, n, _BLOCK_ROWS):
        hi = min(lo + _BLOCK_ROWS, n)
        block = values[lo:hi, : t_idx + 1]
        entry = entry_idx[lo:hi]
        rel = block - block[np.arange(hi - lo), entry][:, None]
        rel = np.where(cols[None, :] >= entry[:, None], rel, np.inf)
        out[lo:hi] = rel.min(axis=1)
    return out


def drawdown_probe(
    ensemble: PathEnsemble, probe: DrawdownProbe, min_count: int | None = None
) -> DrawdownReport:
    """Estimate P(event and post-entry drawdown stays < epsilon) per epsilon.

    VIOLATION_SUSPECTED needs an exactly-zero joint count over at least
    `min_count` event paths (default 100 for Monte Carlo ensembles, 1
    for exact ones).
    """
    grid = ensemble.grid
    if probe.horizon > grid.horizon + 1e-12:
        raise GridError(f"probe horizon {probe.horizon} is beyond the grid")
    if min_count is None:
        min_count = 1 if ensemble.seed_info.exact else 100

    t_idx = grid.index_at_or_before(probe.horizon)
    entry_idx = resolve_indices(probe.tau, ensemble.values, ensemble.grid)
    on_event = evaluate_events(probe.event, ensemble.values, ensemble.grid)
    run_min = _running_min_after_entry(ensemble.values, entry_idx, t_idx)

    w = ensemble.weights
    p_event = float(w[on_event].sum())
    n_event = int(on_event.sum())
    n = ensemble.n_paths

    rows = []
    for eps in probe.epsilons:
        joint = on_event & (run_min > -eps)
        p_hat = float(w[joint].sum())
        n_joint = int(joint.sum())
        ci_low, ci_high = wilson_interval(p_hat * n, n)
        if p_event <= 0.0 or n_event < min_count:
            verdict = UNDERPOWERED
        elif p_hat == 0.0:
            verdict = VIOLATION_SUSPECTED
        else:
            verdict = CONSISTENT
        rows.append(
            EpsilonRow(
                epsilon=eps,
                p_hat=p_hat,
                p_event=p_event,
                n_event=n_event,
                n_joint=n_joint,
                ci_low=ci_low,
                ci_high=ci_high,
                verdict=verdict,
            )
        )
    return DrawdownReport(rows=tuple(rows), n_paths=n, min_count=min_count)


def drawdown_scan(
    ensemble: PathEnsemble,
    probes: list[DrawdownProbe] | tuple[DrawdownProbe, ...],
    min_count: int | None = None,
) -> tuple[list[DrawdownReport], str]:
    """Run every probe; overall verdict flags if any probe does."""
    if not probes:
        raise ParameterError("probe list is empty")
    reports = [drawdown_probe(ensemble, p, min_count=min_count) for p in probes]
    overall = (
        VIOLATION_SUSPECTED
        if any(r.verdict == VIOLATION_SUSPECTED for r in reports)
        else CONSISTENT
    )
    return reports, overall
