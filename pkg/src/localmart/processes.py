"""Model zoo and path simulation.

Exact schemes (Gaussian increments at grid points) are used wherever the
model admits them: arithmetic Brownian motion, driftless geometric
Brownian motion, integer-dimension Bessel processes and their
reciprocals, the time-changed pinned Brownian motion, and the
exp(-|B|^(1/(2n+1))) transform. The CEV diffusion and non-integer
Bessel dimensions use Euler stepping with full truncation; the active
scheme is recorded in the ensemble's seed_info.

Simulation of path i draws only from the counter-based stream derived
from (master_seed, scenario id, i), so ensembles are bit-identical for
any worker count and any batching of paths. `substeps` refines each
grid interval internally (Euler bias control) while storing values at
the requested grid only.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np

from .ensemble import PathEnsemble, SeedInfo, uniform_weights
from .errors import DomainError, ParameterError
from .grid import TimeGrid
from .rng import PathStreams

# target elements per draw buffer (~128 MB of float64)
_CHUNK_TARGET = 16_000_000


@dataclass(frozen=True)
class BrownianMotion:
    """dX = sigma dB from x0; may take either sign."""

    x0: float
    sigma: float

    nonnegative = False

    def validate(self) -> None:
        if self.sigma < 0:
            raise ParameterError("sigma must be >= 0")

    def scenario_id(self) -> str:
        return f"brownian_motion(x0={self.x0!r},sigma={self.sigma!r})"


@dataclass(frozen=True)
class DriftlessGBM:
    """dX = sigma X dB from x0 > 0; simulated exactly in log space."""

    x0: float
    sigma: float

    nonnegative = True

    def validate(self) -> None:
        if self.x0 <= 0:
            raise ParameterError("x0 must be > 0")
        if self.sigma < 0:
            raise ParameterError("sigma must be >= 0")

    def scenario_id(self) -> str:
        return f"driftless_gbm(x0={self.x0!r},sigma={self.sigma!r})"


@dataclass(frozen=True)
class CEV:
    """dX = a X dt + b X^rho dB from x0 > 0, absorbed at zero.

    Euler scheme with full truncation: the diffusion is evaluated at
    max(x, 0)^rho and any step landing at or below zero absorbs the
    path at exactly 0.
    """

    x0: float
    a: float
    b: float
    rho: float

    nonnegative = True

    def validate(self) -> None:
        if self.rho <= 0:
            raise ParameterError("rho must be > 0")
        if self.x0 <= 0:
            raise ParameterError("x0 must be > 0")

    def scenario_id(self) -> str:
        return f"cev(x0={self.x0!r},a={self.a!r},b={self.b!r},rho={self.rho!r})"


@dataclass(frozen=True)
class Bessel:
    """Bessel process of dimension delta > 2 from x0 > 0.

    Integer delta: exact, as the norm of a delta-dimensional Brownian
    motion started at (x0, 0, ..., 0). Non-integer delta: Euler on the
    squared process (drift delta, diffusion 2 sqrt(max(y, 0))) with the
    square root taken at the end.
    """

    x0: float
    delta: float

    nonnegative = True

    def validate(self) -> None:
        if self.delta <= 2:
            raise ParameterError("delta must be > 2")
        if self.x0 <= 0:
            raise ParameterError("x0 must be > 0")

    def scenario_id(self) -> str:
        return f"bessel(x0={self.x0!r},delta={self.delta!r})"


@dataclass(frozen=True)
class InverseBessel3:
    """Reciprocal of a 3-dimensional Bessel process, X_0 = x0 > 0.

    Shares the 3-dimensional Gaussian driver with Bessel(x0=1/x0,
    delta=3): simulating both with the same master seed and applying
    x -> 1/x to the Bessel paths reproduces these values exactly.
    """

    x0: float = 1.0

    nonnegative = True

    def validate(self) -> None:
        if self.x0 <= 0:
            raise ParameterError("x0 must be > 0")

    def scenario_id(self) -> str:
        # deliberately the delegate's id: the driver is shared
        return self._delegate().scenario_id()

    def _delegate(self) -> Bessel:
        return Bessel(x0=1.0 / self.x0, delta=3.0)


@dataclass(frozen=True)
class PinnedBM:
    """Brownian motion from x0 on the accelerated clock tan(pi t / 2).

    Defined on [0, 1]: the clock runs to infinity as t -> 1, the path is
    absorbed when it hits zero, and the value at t = 1 is exactly 0 on
    every path. On grids with horizon < 1 no pinning applies. The grid
    resolution controls how much of the exploding clock is sampled.
    """

    x0: float = 1.0

    nonnegative = True

    def validate(self) -> None:
        if self.x0 <= 0:
            raise ParameterError("x0 must be > 0")

    def scenario_id(self) -> str:
        return f"pinned_bm(x0={self.x0!r})"


@dataclass(frozen=True)
class AbsBMTransform:
    """X = exp(-|B|^(1/(2n+1))) for a standard Brownian motion B.

    Bounded in (0, 1], not a semimartingale for n >= 1.
    """

    n: int = 1

    nonnegative = True

    def validate(self) -> None:
        if self.n < 0 or int(self.n) != self.n:
            raise ParameterError("n must be a non-negative integer")

    def scenario_id(self) -> str:
        return f"abs_bm_transform(n={int(self.n)!r})"


ProcessSpec = Union[
    BrownianMotion,
    DriftlessGBM,
    CEV,
    Bessel,
    InverseBessel3,
    PinnedBM,
    AbsBMTransform,
]


def _refined_times(grid: TimeGrid, substeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Internal stepping times and the columns where grid points live."""
    if substeps < 1:
        raise ParameterError("substeps must be >= 1")
    pts = grid.points
    if substeps == 1:
        return pts, np.arange(pts.size)
    segs = [pts[:1]]
    for k in range(pts.size - 1):
        segs.append(np.linspace(pts[k], pts[k + 1], substeps + 1)[1:])
    internal = np.concatenate(segs)
    out_cols = np.arange(0, internal.size, substeps)
    return internal, out_cols


def _driver_shape(spec: ProcessSpec, n_steps: int) -> tuple[int, ...]:
    """Per-path draw shape; part of the reproducibility contract."""
    if isinstance(spec, (Bessel, InverseBessel3)):
        base = spec._delegate() if isinstance(spec, InverseBessel3) else spec
        if float(base.delta).is_integer():
            return (n_steps, int(base.delta))
    return (n_steps,)


def _draw_increments(
    streams: PathStreams, lo: int, hi: int, shape: tuple[int, ...]
) -> np.ndarray:
    out = np.empty((hi - lo,) + shape)
    for i in range(lo, hi):
        out[i - lo] = streams.rng(i).standard_normal(shape)
    return out


def _bessel_norms(x0: float, dim: int, times: np.ndarray, z: np.ndarray) -> np.ndarray:
    sddt = np.sqrt(np.diff(times))
    coords = np.cumsum(z * sddt[None, :, None], axis=1)
    coords[:, :, 0] += x0
    norms = np.sqrt(np.sum(coords * coords, axis=2))
    first = np.full((z.shape[0], 1), x0)
    return np.concatenate([first, norms], axis=1)


def _simulate_chunk(
    spec: ProcessSpec,
    times: np.ndarray,
    out_cols: np.ndarray,
    streams: PathStreams,
    lo: int,
    hi: int,
    out: np.ndarray,
) -> None:
    m = hi - lo

    if isinstance(spec, PinnedBM):
        pinned = times[-1] >= 1.0 - 1e-12
        sim_times = times[:-1] if pinned else times
        clock = np.tan(0.5 * np.pi * sim_times)
        z = _draw_increments(streams, lo, hi, (clock.size - 1,))
        w = spec.x0 + np.cumsum(z * np.sqrt(np.diff(clock))[None, :], axis=1)
        path = np.empty((m, times.size))
        path[:, 0] = spec.x0
        path[:, 1 : clock.size] = w
        if pinned:
            path[:, -1] = 0.0
        # absorb at the first nonpositive value, exactly 0 afterwards
        hit = np.minimum.accumulate(path, axis=1) <= 0.0
        path[hit] = 0.0
        out[lo:hi] = path[:, out_cols]
        return

    n_steps = times.size - 1
    dt = np.diff(times)
    sddt = np.sqrt(dt)
    z = _draw_increments(streams, lo, hi, _driver_shape(spec, n_steps))

    if isinstance(spec, BrownianMotion):
        path = np.empty((m, times.size))
        path[:, 0] = spec.x0
        path[:, 1:] = spec.x0 + spec.sigma * np.cumsum(z * sddt[None, :], axis=1)
        out[lo:hi] = path[:, out_cols]
    elif isinstance(spec, DriftlessGBM):
        logret = spec.sigma * z * sddt[None, :] - 0.5 * spec.sigma**2 * dt[None, :]
        path = np.empty((m, times.size))
        path[:, 0] = spec.x0
        path[:, 1:] = spec.x0 * np.exp(np.cumsum(logret, axis=1))
        out[lo:hi] = path[:, out_cols]
    elif isinstance(spec, CEV):
        x = np.full(m, spec.x0)
        path = np.empty((m, times.size))
        path[:, 0] = spec.x0
        for k in range(n_steps):
            step = spec.a * x * dt[k] + spec.b * np.maximum(x, 0.0) ** spec.rho * sddt[k] * z[:, k]
            x = np.where(x > 0.0, x + step, 0.0)
            x = np.where(x > 0.0, x, 0.0)
            path[:, k + 1] = x
        out[lo:hi] = path[:, out_cols]
    elif isinstance(spec, (Bessel, InverseBessel3)):
        base = spec._delegate() if isinstance(spec, InverseBessel3) else spec
        if float(base.delta).is_integer():
            path = _bessel_norms(base.x0, int(base.delta), times, z)
        else:
            y = np.full(m, base.x0**2)
            path = np.empty((m, times.size))
            path[:, 0] = base.x0
            for k in range(n_steps):
                y = y + base.delta * dt[k] + 2.0 * np.sqrt(np.maximum(y, 0.0)) * sddt[k] * z[:, k]
                y = np.maximum(y, 0.0)
                path[:, k + 1] = np.sqrt(y)
        if isinstance(spec, InverseBessel3):
            path = path**-1.0
        out[lo:hi] = path[:, out_cols]
    elif isinstance(spec, AbsBMTransform):
        w = np.cumsum(z * sddt[None, :], axis=1)
        path = np.empty((m, times.size))
        path[:, 0] = 0.0
        path[:, 1:] = w
        path = np.exp(-np.abs(path) ** (1.0 / (2 * spec.n + 1)))
        out[lo:hi] = path[:, out_cols]
    else:
        raise ParameterError(f"unknown process spec {spec!r}")


def _scheme_name(spec: ProcessSpec) -> str:
    if isinstance(spec, CEV):
        return "cev_euler_full_truncation"
    if isinstance(spec, Bessel) and not float(spec.delta).is_integer():
        return "squared_bessel_euler_full_truncation"
    if isinstance(spec, InverseBessel3):
        return "exact_bessel3_reciprocal"
    if isinstance(spec, PinnedBM):
        return "pinned_bm_clocked_exact"
    return "exact_gaussian_increments"


def simulate_ensemble(
    spec: ProcessSpec,
    grid: TimeGrid,
    n_paths: int,
    master_seed: int,
    substeps: int = 1,
    workers: int | None = None,
) -> PathEnsemble:
    """Simulate `n_paths` paths of `spec` on `grid`.

    Bit-identical output for identical (spec, grid, n_paths, master_seed,
    substeps) regardless of `workers` (default: LOCALMART_THREADS or 1).
    """
    spec.validate()
    if n_paths < 1:
        raise ParameterError("n_paths must be >= 1")
    if isinstance(spec, PinnedBM) and grid.horizon > 1.0 + 1e-12:
        raise DomainError("pinned Brownian motion is defined on [0, 1]")

    if workers is None:
        workers = int(os.environ.get("LOCALMART_THREADS", "1") or "1")
    workers = max(1, workers)

    times, out_cols = _refined_times(grid, substeps)
    sid = spec.scenario_id()
    values = np.empty((n_paths, grid.n_times))

    dim = _driver_shape(spec, max(times.size - 1, 1))
    per_path = max(1, int(np.prod(dim)))
    chunk = max(1, min(n_paths, _CHUNK_TARGET // per_path))
    bounds = [(lo, min(lo + chunk, n_paths)) for lo in range(0, n_paths, chunk)]

    def work(span: tuple[int, int]) -> None:
        streams = PathStreams(master_seed, sid)
        _simulate_chunk(spec, times, out_cols, streams, span[0], span[1], values)

    if workers == 1 or len(bounds) == 1:
        for span in bounds:
            work(span)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, bounds))

    info = SeedInfo(master_seed, sid, scheme=_scheme_name(spec), exact=False)
    return PathEnsemble(grid, values, uniform_weights(n_paths), info)


def realized_quadratic_variation(ensemble: PathEnsemble) -> PathEnsemble:
    """Cumulative sum of squared increments per path; 0 at t = 0."""
    diffs = np.diff(ensemble.values, axis=1)
    qv = np.empty_like(ensemble.values)
    qv[:, 0] = 0.0
    np.cumsum(diffs * diffs, axis=1, out=qv[:, 1:])
    return ensemble.with_values(qv, scheme=ensemble.seed_info.scheme + "+qv")
