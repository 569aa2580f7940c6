"""Path ensembles: the discrete carrier of sample paths and weights."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError
from .grid import TimeGrid

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class SeedInfo:
    """Provenance of an ensemble: how its randomness was derived.

    `exact` marks ensembles that enumerate a finite probability space
    with exact weights (lattice exports) rather than Monte Carlo draws.
    """

    master_seed: int
    scenario: str
    scheme: str = "exact"
    exact: bool = False


@dataclass(frozen=True)
class PathEnsemble:
    """n_paths sample paths on a shared grid with per-path probabilities."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    seed_info: SeedInfo

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if vals.ndim != 2:
            raise ParameterError("values must be an n_paths x n_times matrix")
        if vals.shape[1] != self.grid.n_times:
            raise ParameterError(
                f"values have {vals.shape[1]} columns, grid has {self.grid.n_times} times"
            )
        if w.shape != (vals.shape[0],):
            raise ParameterError("weights must have one entry per path")
        if np.any(w < 0):
            raise ParameterError("weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > _WEIGHT_TOL:
            raise ParameterError(f"weights sum to {w.sum()}, expected 1")
        vals.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "weights", w)

    @property
    def n_paths(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_times(self) -> int:
        return int(self.values.shape[1])

    def with_values(self, values: np.ndarray, scheme: str | None = None) -> "PathEnsemble":
        """Same grid/weights/provenance, new value matrix (for transforms)."""
        info = self.seed_info
        if scheme is not None:
            info = replace(info, scheme=scheme)
        return PathEnsemble(self.grid, values, self.weights, info)

    def __repr__(self) -> str:
        return (
            f"PathEnsemble(n_paths={self.n_paths}, {self.grid!r}, "
            f"scenario={self.seed_info.scenario!r})"
        )


def uniform_weights(n_paths: int) -> np.ndarray:
    return np.full(n_paths, 1.0 / n_paths)
