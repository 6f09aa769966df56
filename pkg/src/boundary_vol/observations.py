"""Observations above a boundary path and their bin-wise minima.

Two observation schemes are supported:

* a Poisson point process of intensity ``n * lam`` on the region above the
  path, sampled on a finite vertical band;
* equidistant regression-type data ``Y_i = X_{i/n} + eps_i`` with
  nonnegative iid noise.

The bin-minimum sampler :func:`sample_bin_minima_direct` skips the point
process and draws each bin minimum from its exact conditional law given
the path.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ._kernels import SortedRows
from .errors import ConfigError, DataError
from .grids import Grids
from .paths import SamplePath
from .rng import generator

#: Minimum path nodes per bin for the direct sampler.
MIN_NODES_PER_BIN = 100
#: Largest tolerated probability that the band truncation changes a bin minimum.
BAND_TAIL_MAX = 1e-6


def bin_width(n: float, lam: float, K: float) -> float:
    """Target bin width ``K^(2/3) (n lam)^(-2/3)``."""
    if n <= 0 or lam <= 0 or K <= 0:
        raise ConfigError("n, lam and K must be positive")
    return K ** (2.0 / 3.0) * (n * lam) ** (-2.0 / 3.0)


def _bins_of(h: float) -> int:
    b = int(round(1.0 / h))
    if b < 1 or abs(b * h - 1.0) > 1e-9:
        raise ConfigError(f"1/h must be a positive integer, got 1/h = {1.0 / h}")
    return b


@dataclass(frozen=True)
class NoiseSpec:
    """Law of the one-sided noise.

    Parameters
    ----------
    family : {"exponential", "uniform", "custom"}
        ``uniform`` is uniform on ``[0, 1/rate]``. ``custom`` needs ``cdf``
        and ``ppf`` callables.
    rate : float
        Density of the noise at ``0+``.
    """

    family: str
    rate: float
    cdf: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    ppf: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in ("exponential", "uniform", "custom"):
            raise ConfigError(f"unknown noise family {self.family!r}")
        if not self.rate > 0:
            raise ConfigError("noise rate must be positive")
        if self.family == "custom" and (self.cdf is None or self.ppf is None):
            raise ConfigError("custom noise needs both cdf and ppf")
        x = 1e-6 / self.rate
        ratio = float(self.F(np.array([x]))[0]) / (self.rate * x)
        if not 0.9 <= ratio <= 1.1:
            raise ConfigError(f"noise cdf is not linear with slope rate at 0+ (ratio {ratio:.4f})")

    def F(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "exponential":
            return -np.expm1(-self.rate * np.maximum(x, 0.0))
        if self.family == "uniform":
            return np.clip(self.rate * x, 0.0, 1.0)
        return np.asarray(self.cdf(x), dtype=float)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.family == "exponential":
            return rng.exponential(1.0 / self.rate, size)
        if self.family == "uniform":
            return rng.uniform(0.0, 1.0 / self.rate, size)
        return np.asarray(self.ppf(rng.random(size)), dtype=float)

    def to_dict(self) -> dict:
        return {"family": self.family, "rate": self.rate}


@dataclass
class PPPObservations:
    """Point-process observations on the band above a boundary."""

    t: np.ndarray
    y: np.ndarray
    intensity_rate: float
    band_height: float
    boundary_ref: str = ""
    n: float = 0.0
    lam: float = 1.0
    boundary_times: np.ndarray | None = None
    boundary_values: np.ndarray | None = None

    def __post_init__(self):
        order = np.argsort(self.t, kind="stable")
        self.t = np.asarray(self.t, dtype=float)[order]
        self.y = np.asarray(self.y, dtype=float)[order]

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self, path: str | Path) -> None:
        _write_csv(path, ["t", "y"], zip(self.t, self.y))

    @classmethod
    def from_csv(cls, path: str | Path, n: float, lam: float = 1.0) -> "PPPObservations":
        cols = _read_csv(path, ("t", "y"))
        return cls(t=cols["t"], y=cols["y"], intensity_rate=n * lam, band_height=math.nan, n=n, lam=lam)


@dataclass
class RegressionObservations:
    """Equidistant observations ``y_values[i]`` at times ``i/n``."""

    y_values: np.ndarray
    noise_spec: NoiseSpec | None = None
    boundary_ref: str = ""

    @property
    def n(self) -> int:
        return len(self.y_values) - 1

    def to_csv(self, path: str | Path) -> None:
        _write_csv(path, ["i", "y"], enumerate(self.y_values))

    @classmethod
    def from_csv(cls, path: str | Path, noise: NoiseSpec | None = None) -> "RegressionObservations":
        cols = _read_csv(path, ("i", "y"))
        idx = cols["i"]
        if not np.array_equal(idx, np.arange(len(idx))):
            raise DataError("regression CSV indices must be 0, 1, 2, ...")
        return cls(y_values=cols["y"], noise_spec=noise)


@dataclass
class BinMinima:
    """Minima over the bins ``[k h, (k+1) h)``.

    ``n`` and ``lam`` describe the observation intensity that produced the
    minima; ``obs_per_bin`` is set for regression data only. ``grids``
    optionally pins the bin and block layout used by the estimators.
    """

    values: np.ndarray
    h: float
    bins_empty: int = 0
    n: float = 0.0
    lam: float = 1.0
    model: str = "ppp"
    obs_per_bin: int | None = None
    empty_mask: np.ndarray | None = None
    grids: Grids | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if len(self.values) != _bins_of(self.h):
            raise ConfigError("number of minima must equal 1/h")

    def __len__(self) -> int:
        return len(self.values)


def _bin_rows(path: SamplePath, h: float) -> tuple[np.ndarray, int]:
    bins = _bins_of(h)
    m = path.m
    if m % bins:
        raise ConfigError(f"path grid ({m} steps) is not a multiple of the bin count {bins}")
    q = m // bins
    return path.x_values[:-1].reshape(bins, q), q


def sample_ppp(
    path: SamplePath,
    n: float,
    lam: float,
    h: float,
    band_multiplier: float = 50.0,
    seed: int = 0,
    replication: int = 0,
) -> PPPObservations:
    """Sample the point process on the band ``X_t <= y <= X_t + c/(n lam h)``.

    The boundary is treated as constant between grid nodes (left value).
    The band is a truncation of the infinite upper region; the call fails
    when the truncation could change some bin minimum with probability
    above ``BAND_TAIL_MAX``.

    Raises
    ------
    ConfigError
        If ``n * lam <= 0``, ``band_multiplier < 10`` or the band is too low.
    """
    rate = n * lam
    if not rate > 0:
        raise ConfigError("n * lam must be positive")
    if band_multiplier < 10:
        raise ConfigError("band_multiplier must be at least 10")
    rows, q = _bin_rows(path, h)
    m = path.m
    band = band_multiplier / (rate * h)

    # P(bin minimum above min_t(X_t + band)) = exp(-rate * area below that level)
    level = rows.min(axis=1, keepdims=True) + band
    area = np.maximum(level - rows, 0.0).sum(axis=1) / m
    worst = float(np.max(np.exp(-rate * area)))
    if worst > BAND_TAIL_MAX:
        raise ConfigError(
            f"band too low: a bin minimum exceeds the band with probability {worst:.2e}; "
            "increase band_multiplier"
        )

    rng = generator(seed, "ppp", replication)
    count = rng.poisson(rate * band)
    t = np.sort(rng.random(count))
    node = np.minimum((t * m).astype(np.int64), m - 1)
    y = path.x_values[node] + band * rng.random(count)
    return PPPObservations(
        t=t,
        y=y,
        intensity_rate=rate,
        band_height=band,
        boundary_ref=path.path_id,
        n=n,
        lam=lam,
        boundary_times=path.times,
        boundary_values=path.x_values,
    )


def invert_bin_survival(
    rows: np.ndarray, rate_dt: float, energy: np.ndarray
) -> np.ndarray:
    """Levels ``z`` with ``rate_dt * sum_i (z - rows_i)_+ = energy`` per row.

    With ``energy = -log(u)`` this inverts the conditional survival
    ``exp(-rate * integral (z - X_t)_+ dt)`` of a bin minimum. The area is
    piecewise linear in ``z``, so the root is found exactly from the
    sorted node values.
    """
    return SortedRows(rows).invert(np.asarray(energy, dtype=float), rate_dt)


def sample_bin_minima_direct(
    path: SamplePath,
    n: float,
    lam: float,
    h: float,
    seed: int = 0,
    replication: int = 0,
    u: np.ndarray | None = None,
) -> BinMinima:
    """Draw every bin minimum from its exact conditional law given the path.

    Parameters
    ----------
    u : array, optional
        Uniforms to invert instead of fresh draws; ``u = 1`` returns the
        path minimum over the bin.

    Raises
    ------
    ConfigError
        If a bin holds fewer than ``MIN_NODES_PER_BIN`` path nodes.
    """
    rows, q = _bin_rows(path, h)
    if q < MIN_NODES_PER_BIN:
        raise ConfigError(f"each bin needs at least {MIN_NODES_PER_BIN} path nodes, got {q}")
    if u is None:
        energy = generator(seed, "binmin", replication).standard_exponential(rows.shape[0])
    else:
        u = np.broadcast_to(np.asarray(u, dtype=float), (rows.shape[0],))
        if np.any((u <= 0) | (u > 1)):
            raise ConfigError("u must lie in (0, 1]")
        energy = -np.log(u)
    z = invert_bin_survival(rows, n * lam / path.m, energy)
    return BinMinima(values=z, h=h, n=n, lam=lam, model="ppp")


def sample_regression(
    path: SamplePath, n: int, noise: NoiseSpec, seed: int = 0, replication: int = 0
) -> RegressionObservations:
    """``Y_i = X_{i/n} + eps_i`` for ``i = 0..n``.

    Raises
    ------
    ConfigError
        If the path grid does not contain the times ``i/n``.
    """
    n = int(n)
    if n < 1:
        raise ConfigError("n must be positive")
    if path.m % n:
        raise ConfigError(f"path grid ({path.m} steps) must be a multiple of n = {n}")
    x = path.x_values[:: path.m // n]
    eps = noise.sample(generator(seed, "regression", replication), n + 1)
    return RegressionObservations(y_values=x + eps, noise_spec=noise, boundary_ref=path.path_id)


def extract_bin_minima(
    obs: PPPObservations | RegressionObservations, h: float, obs_per_bin: int | None = None
) -> BinMinima:
    """Minimum observation in each bin.

    Regression data use the index sets ``{k N, ..., (k+1) N - 1}`` with
    ``N = obs_per_bin`` (default ``n h``); trailing observations beyond
    ``N / h`` are ignored. An empty point-process bin gets the band top
    ``min_t (X_t + band)`` over the bin, or NaN when the boundary is not
    attached, and is counted in ``bins_empty``.
    """
    bins = _bins_of(h)
    if isinstance(obs, RegressionObservations):
        y = np.asarray(obs.y_values, dtype=float)
        if obs_per_bin is None:
            N = int(round(obs.n * h))
            if abs(N - obs.n * h) > 1e-9:
                raise ConfigError("n h must be an integer; pass obs_per_bin explicitly")
        else:
            N = int(obs_per_bin)
        if N < 1 or N * bins > len(y):
            raise ConfigError(f"{bins} bins of {N} observations exceed the {len(y)} available")
        vals = y[: N * bins].reshape(bins, N).min(axis=1)
        rate = obs.noise_spec.rate if obs.noise_spec is not None else 1.0
        return BinMinima(
            values=vals, h=h, n=N * bins, lam=rate, model="regression", obs_per_bin=N
        )

    k = np.minimum((obs.t * bins).astype(np.int64), bins - 1)
    vals = np.full(bins, np.inf)
    np.minimum.at(vals, k, obs.y)
    empty = ~np.isfinite(vals)
    if np.any(empty):
        if obs.boundary_values is not None:
            m = len(obs.boundary_values) - 1
            rows = obs.boundary_values[:-1].reshape(bins, m // bins)
            vals[empty] = rows[empty].min(axis=1) + obs.band_height
        else:
            vals[empty] = np.nan
    return BinMinima(
        values=vals,
        h=h,
        bins_empty=int(empty.sum()),
        n=obs.n,
        lam=obs.lam,
        model="ppp",
        empty_mask=empty,
    )


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for a, b in rows:
            w.writerow([repr(a.item() if hasattr(a, "item") else a), repr(float(b))])


def _read_csv(path, names) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in names):
            raise DataError(f"{path}: expected columns {names}")
        cols: dict[str, list[float]] = {c: [] for c in names}
        for lineno, row in enumerate(reader, start=2):
            try:
                for c in names:
                    cols[c].append(float(row[c]))
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not cols[names[0]]:
        raise DataError(f"{path}: no observations")
    return {c: np.asarray(v) for c, v in cols.items()}


# -- centred bin minima in unit scaling ---------------------------------------

def centred_minima_ppp(sigma: float, K: float, cfg, stream: str = "centred_ppp") -> np.ndarray:
    """Draws of ``h^{-1/2} (m_k - X_{kh})`` for the point-process model.

    Uses a unit bin with boundary ``sigma W`` on ``cfg.time_grid`` nodes
    and the exact survival inversion; ``cfg`` is an ``MCConfig``.
    """
    from ._kernels import brownian_rows
    from .rng import map_blocks, ordered_concat

    if not (sigma > 0 and K > 0):
        raise ConfigError("sigma and K must be positive")
    m = cfg.time_grid

    def work(block: int, size: int) -> np.ndarray:
        rng = generator(cfg.seed, stream, block)
        w = brownian_rows(rng, size, m, 1.0 / m)[:, :-1]
        return SortedRows(w).invert(rng.standard_exponential(size), K / m, scale=sigma)

    return ordered_concat(map_blocks(work, cfg.replications, cfg.threads, 250))


def centred_minima_regression(
    sigma: float, K: float, n: int, noise: NoiseSpec, cfg, stream: str = "centred_reg"
) -> np.ndarray:
    """Draws of ``h^{-1/2} (m_k - X_{kh})`` for regression data with ``n`` observations.

    The bin holds ``N = round(n h)`` observations, ``h`` from
    :func:`bin_width`, and the bin width is then taken as ``N / n``.
    """
    from ._kernels import brownian_rows
    from .rng import map_blocks, ordered_concat

    if not (sigma >= 0 and K > 0):
        raise ConfigError("sigma must be nonnegative and K positive")
    N = max(1, int(round(n * bin_width(n, noise.rate, K))))
    scale = math.sqrt(n / N)

    def work(block: int, size: int) -> np.ndarray:
        rng = generator(cfg.seed, stream, block)
        w = brownian_rows(rng, size, N - 1, 1.0 / N) if N > 1 else np.zeros((size, 1))
        e = noise.sample(rng, (size, N)) * scale
        return (sigma * w + e).min(axis=1)

    return ordered_concat(map_blocks(work, cfg.replications, cfg.threads, 250))


def empirical_survival(samples: np.ndarray, thresholds) -> list[tuple[float, float]]:
    """``(P(sample > x), standard error)`` for each threshold."""
    samples = np.asarray(samples, dtype=float)
    out = []
    for x in np.atleast_1d(thresholds):
        p = float(np.mean(samples > x))
        out.append((p, math.sqrt(max(p * (1.0 - p), 0.0) / len(samples))))
    return out
