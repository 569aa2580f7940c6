"""Time grids shared by all simulated and exact ensembles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError

# slack for float comparisons against grid times
_TIME_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing times starting at 0; the last point is the horizon."""

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size < 2:
            raise GridError("grid needs at least 2 points")
        if pts[0] != 0.0:
            raise GridError("grid must start at t = 0")
        if not np.all(np.diff(pts) > 0):
            raise GridError("grid times must be strictly increasing")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def regular(cls, horizon: float, n_points: int) -> "TimeGrid":
        """Evenly spaced grid with `n_points` points on [0, horizon]."""
        if horizon <= 0:
            raise GridError("horizon must be positive")
        return cls(np.linspace(0.0, horizon, n_points))

    @property
    def horizon(self) -> float:
        return float(self.points[-1])

    @property
    def n_times(self) -> int:
        return int(self.points.size)

    def index_at_or_before(self, t: float) -> int:
        """Largest index k with points[k] <= t (up to float slack)."""
        if t < -_TIME_TOL:
            raise GridError(f"time {t} is negative")
        k = int(np.searchsorted(self.points, t + _TIME_TOL, side="right")) - 1
        if k < 0:
            raise GridError(f"time {t} precedes the grid")
        return k

    def first_index_at_or_after(self, t: float) -> int:
        """Smallest index k with points[k] >= t (up to float slack)."""
        k = int(np.searchsorted(self.points, t - _TIME_TOL, side="left"))
        if k >= self.points.size:
            raise GridError(f"time {t} is beyond the horizon {self.horizon}")
        return k

    def cap_index(self, cap: float) -> int:
        """Grid index at which a rule capped at `cap` must have resolved."""
        if cap > self.horizon + _TIME_TOL:
            raise GridError(f"cap {cap} exceeds grid horizon {self.horizon}")
        return self.index_at_or_before(cap)

    def __repr__(self) -> str:  # points elided: they can be huge
        return f"TimeGrid(n={self.n_times}, horizon={self.horizon})"
