"""Calibration and inversion of the moment function.

``Psi(sigma^2) = h^{-1} E[(m_k - m_{k-1})^2]`` for adjacent bin minima
over a boundary with constant volatility ``sigma``. With the bin width
scaled to 1 the problem is free of ``n``: the boundary is ``sigma W`` on
``[0, 2]`` and each bin minimum has survival ``exp(-K int (z - sigma W)_+)``.

For the point-process model the scale-free form also gives
``Psi_K(v) = v J(K sqrt(v))``, so a table calibrated at one ``K`` serves
any other ``K'`` through
``Psi_{K'}(s2) = (K/K')^2 Psi_K((K'/K)^2 s2)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import interpolate, optimize

from ._kernels import SortedRows, brownian_rows
from .errors import CalibrationError, ConfigError, DomainError
from .excursion import MCConfig, MCEstimate
from .grids import Grids, resolve_grids
from .observations import NoiseSpec
from .rng import generator, map_blocks, ordered_concat

#: Replications per random-number block in the two-bin simulations.
PAIR_BLOCK = 250


def default_grid(lo: float, hi: float, per_decade: int = 60) -> np.ndarray:
    """Log-spaced grid on ``[lo, hi]`` with ``per_decade`` points per decade."""
    if not 0 < lo < hi:
        raise ConfigError("need 0 < lo < hi")
    count = max(2, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
    return np.geomspace(lo, hi, count)


@dataclass(frozen=True)
class TwoBinSamples:
    """Centred minima right (``R``) and left (``L``) of the shared bin edge.

    Arrays have one row per replication and one column per ``sigma``.
    """

    sigmas: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def diff_sq(self) -> np.ndarray:
        return (self.right - self.left) ** 2

    def psi(self) -> tuple[np.ndarray, np.ndarray]:
        d2 = self.diff_sq
        return d2.mean(axis=0), d2.std(axis=0, ddof=1) / math.sqrt(d2.shape[0])

    def psi_variance_form(self) -> np.ndarray:
        """``Var(R) + Var(L)``; equals ``Psi`` because ``R`` and ``L`` are independent and equal in law."""
        return self.right.var(axis=0, ddof=1) + self.left.var(axis=0, ddof=1)


def two_bin_ppp(K: float, sigmas, cfg: MCConfig, stream: str = "two_bin_ppp") -> TwoBinSamples:
    """Simulate the unit-bin two-bin problem for the point-process model.

    Paths and exponential draws are shared across ``sigmas`` (common random
    numbers). ``cfg.antithetic`` is not used here.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    if not K > 0 or np.any(sigmas <= 0):
        raise ConfigError("K and every sigma must be positive")
    m = cfg.time_grid

    def work(block: int, size: int):
        rng = generator(cfg.seed, stream, block)
        w = brownian_rows(rng, size, 2 * m, 1.0 / m)
        centre = w[:, m : m + 1]
        energy = rng.standard_exponential((2, size))
        right = SortedRows(w[:, m : 2 * m] - centre).invert_many(energy[0], K / m, sigmas)
        left = SortedRows(w[:, :m] - centre).invert_many(energy[1], K / m, sigmas)
        return np.stack([right, left])

    parts = map_blocks(work, cfg.replications, cfg.threads, PAIR_BLOCK)
    both = ordered_concat([p.transpose(1, 0, 2) for p in parts])
    return TwoBinSamples(sigmas, both[:, 0, :], both[:, 1, :])


def two_bin_regression(
    obs_per_bin: int, h: float, sigmas, noise: NoiseSpec, cfg: MCConfig, stream: str = "two_bin_reg"
) -> TwoBinSamples:
    """Two-bin problem for regression data, in units of ``sqrt(h)``.

    Each bin holds ``obs_per_bin`` equidistant observations
    ``sigma W_i + eps_i / sqrt(h)``. ``sigma = 0`` is allowed.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    N = int(obs_per_bin)
    if N < 1 or np.any(sigmas < 0):
        raise ConfigError("obs_per_bin must be positive and sigmas nonnegative")
    scale = 1.0 / math.sqrt(h)

    def work(block: int, size: int):
        rng = generator(cfg.seed, stream, block)
        w = brownian_rows(rng, size, 2 * N, 1.0 / N)
        w = w[:, : 2 * N] - w[:, N : N + 1]
        e = noise.sample(rng, (size, 2 * N)) * scale
        out = np.empty((2, size, len(sigmas)))
        for j, s in enumerate(sigmas):
            y = s * w + e
            out[0, :, j] = y[:, N:].min(axis=1)
            out[1, :, j] = y[:, :N].min(axis=1)
        return out

    parts = map_blocks(work, cfg.replications, cfg.threads, PAIR_BLOCK)
    both = ordered_concat([p.transpose(1, 0, 2) for p in parts])
    return TwoBinSamples(sigmas, both[:, 0, :], both[:, 1, :])


@dataclass(frozen=True)
class Inversion:
    sigma_sq: float
    clamped: bool


@dataclass(frozen=True)
class PsiTable:
    """Calibrated moment function on a grid of ``sigma^2`` values.

    The interpolant is a monotone cubic (PCHIP) in ``(log sigma^2, log Psi)``;
    its inverse is solved segment-wise so that forward and inverse maps are
    consistent to rounding.

    Raises
    ------
    CalibrationError
        If the values are not positive and strictly increasing.
    """

    K: float
    sigma_sq_grid: np.ndarray
    psi_values: np.ndarray
    std_errors: np.ndarray
    model: str = "ppp"
    n: int | None = None
    bins: int | None = None
    obs_per_bin: int | None = None
    noise: dict | None = None
    mc_config: dict = field(default_factory=dict)
    variance_form: np.ndarray | None = None

    def __post_init__(self):
        grid = np.asarray(self.sigma_sq_grid, dtype=float)
        vals = np.asarray(self.psi_values, dtype=float)
        errs = np.asarray(self.std_errors, dtype=float)
        object.__setattr__(self, "sigma_sq_grid", grid)
        object.__setattr__(self, "psi_values", vals)
        object.__setattr__(self, "std_errors", errs)
        if self.model not in ("ppp", "regression"):
            raise ConfigError(f"unknown model {self.model!r}")
        if grid.ndim != 1 or len(grid) < 2 or len(vals) != len(grid) or len(errs) != len(grid):
            raise ConfigError("grid, values and errors must be 1-d of equal length >= 2")
        if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ConfigError("sigma^2 grid must be positive and strictly increasing")
        if np.any(vals <= 0):
            raise CalibrationError("Psi must be positive on the grid")
        bad = np.flatnonzero(np.diff(vals) <= 0)
        if len(bad):
            i = int(bad[0])
            raise CalibrationError(
                f"Psi is not increasing between sigma^2 = {grid[i]:.4g} and {grid[i + 1]:.4g}; "
                "increase K or the number of replications, or coarsen the grid"
            )
        lx, ly = np.log(grid), np.log(vals)
        object.__setattr__(self, "_lx", lx)
        object.__setattr__(self, "_ly", ly)
        object.__setattr__(self, "_pchip", interpolate.PchipInterpolator(lx, ly, extrapolate=False))

    # scale maps between the calibrated K and the effective K of the data
    def _factor(self, k_eff: float | None) -> float:
        if k_eff is None or k_eff == self.K:
            return 1.0
        if self.model != "ppp":
            raise ConfigError("K rescaling applies to point-process tables only")
        return k_eff / self.K

    def psi(self, sigma_sq: float, k_eff: float | None = None) -> float:
        """Interpolated ``Psi(sigma_sq)``, optionally at another ``K``.

        Raises
        ------
        DomainError
            If the argument maps outside the calibrated grid.
        """
        f = self._factor(k_eff)
        arg = f * f * float(sigma_sq)
        lo, hi = self.sigma_sq_grid[0], self.sigma_sq_grid[-1]
        if not lo * (1 - 1e-12) <= arg <= hi * (1 + 1e-12):
            raise DomainError(f"sigma^2 = {sigma_sq} is outside the calibrated range")
        arg = min(max(arg, lo), hi)
        return float(np.exp(self._pchip(math.log(arg)))) / (f * f)

    @property
    def psi_range(self) -> tuple[float, float]:
        return float(self.psi_values[0]), float(self.psi_values[-1])

    def invert(self, v: float, k_eff: float | None = None) -> Inversion:
        """``Psi^{-1}(v)``, clamped to the grid ends with a flag."""
        f = self._factor(k_eff)
        target = f * f * float(v)
        lo, hi = self.psi_range
        if not target > lo:
            return Inversion(float(self.sigma_sq_grid[0]) / (f * f), True)
        if target >= hi:
            return Inversion(float(self.sigma_sq_grid[-1]) / (f * f), target > hi)
        ly = math.log(target)
        # log rounding can place a target just below hi on the last node
        i = min(int(np.searchsorted(self._ly, ly, side="right")) - 1, len(self._ly) - 2)
        a, b = self._lx[i], self._lx[i + 1]
        if ly == self._ly[i]:
            root = a
        elif ly == self._ly[i + 1]:
            root = b
        else:
            root = optimize.brentq(lambda u: float(self._pchip(u)) - ly, a, b, xtol=1e-15, rtol=1e-15)
        return Inversion(math.exp(root) / (f * f), False)

    def to_dict(self) -> dict:
        doc = {
            "model": self.model,
            "K": self.K,
            "grid": self.sigma_sq_grid.tolist(),
            "values": self.psi_values.tolist(),
            "std_errors": self.std_errors.tolist(),
            "mc_config": dict(self.mc_config),
        }
        if self.model == "regression":
            doc.update(n=self.n, bins=self.bins, obs_per_bin=self.obs_per_bin, noise=self.noise)
        if self.variance_form is not None:
            doc["variance_form"] = np.asarray(self.variance_form).tolist()
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @property
    def table_id(self) -> str:
        return hashlib.sha1(self.to_json().encode()).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, doc: dict) -> "PsiTable":
        try:
            return cls(
                K=float(doc["K"]),
                sigma_sq_grid=np.asarray(doc["grid"], dtype=float),
                psi_values=np.asarray(doc["values"], dtype=float),
                std_errors=np.asarray(doc["std_errors"], dtype=float),
                model=doc.get("model", "ppp"),
                n=doc.get("n"),
                bins=doc.get("bins"),
                obs_per_bin=doc.get("obs_per_bin"),
                noise=doc.get("noise"),
                mc_config=doc.get("mc_config", {}),
                variance_form=None if doc.get("variance_form") is None else np.asarray(doc["variance_form"]),
            )
        except KeyError as exc:
            raise ConfigError(f"Psi table is missing field {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "PsiTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


def calibrate_psi_ppp(K: float, sigma_sq_grid, cfg: MCConfig) -> PsiTable:
    """Tabulate ``Psi`` for the point-process model at constant ``K``.

    Raises
    ------
    CalibrationError
        If the simulated values are not strictly increasing.
    """
    grid = np.asarray(sigma_sq_grid, dtype=float)
    if np.any(grid <= 0):
        raise ConfigError("sigma^2 grid must be positive")
    sims = two_bin_ppp(K, np.sqrt(grid), cfg)
    vals, errs = sims.psi()
    return PsiTable(
        K=float(K),
        sigma_sq_grid=grid,
        psi_values=vals,
        std_errors=errs,
        model="ppp",
        mc_config=cfg.to_dict(),
        variance_form=sims.psi_variance_form(),
    )


def calibrate_psi_regression(
    K: float,
    n: int,
    sigma_sq_grid,
    noise: NoiseSpec,
    cfg: MCConfig,
    kappa: float = 1.0,
    grids: Grids | None = None,
) -> PsiTable:
    """Tabulate ``Psi_n`` for regression data with ``n`` observations.

    The bin layout comes from :func:`resolve_grids` (or ``grids``); the
    table records it and only matches data resolved to the same layout.
    """
    if grids is None:
        grids = resolve_grids(n, noise.rate, K, kappa, model="regression")
    if grids.model != "regression":
        raise ConfigError("regression calibration needs a regression layout")
    grid = np.asarray(sigma_sq_grid, dtype=float)
    if np.any(grid <= 0):
        raise ConfigError("sigma^2 grid must be positive")
    sims = two_bin_regression(grids.obs_per_bin, grids.h, np.sqrt(grid), noise, cfg)
    vals, errs = sims.psi()
    return PsiTable(
        K=float(K),
        sigma_sq_grid=grid,
        psi_values=vals,
        std_errors=errs,
        model="regression",
        n=int(grids.n_used),
        bins=int(grids.bins),
        obs_per_bin=int(grids.obs_per_bin),
        noise=noise.to_dict(),
        mc_config=cfg.to_dict(),
        variance_form=sims.psi_variance_form(),
    )


def invert_psi(table: PsiTable, v: float, k_eff: float | None = None) -> Inversion:
    """``Psi^{-1}(v)`` with a clamp flag; see :meth:`PsiTable.invert`."""
    return table.invert(v, k_eff)


def psi_slope(K: float, sigma: float, cfg: MCConfig, delta: float = 0.05) -> MCEstimate:
    """Central difference of ``sigma -> Psi(sigma^2)`` with common random numbers."""
    if not 0 < delta < sigma:
        raise ConfigError("need 0 < delta < sigma")
    sims = two_bin_ppp(K, np.array([sigma - delta, sigma + delta]), cfg, stream="psi_slope")
    d2 = sims.diff_sq
    per_rep = (d2[:, 1] - d2[:, 0]) / (2.0 * delta)
    se = float(per_rep.std(ddof=1)) / math.sqrt(len(per_rep))
    return MCEstimate(float(per_rep.mean()), se, cfg.replications, cfg.time_grid)


@dataclass(frozen=True)
class BConstants:
    b1: MCEstimate
    b2: MCEstimate


def b_constants(points: int, cfg: MCConfig) -> BConstants:
    """``E[M^2]/2`` and ``E[M]`` for ``M = max_{0 <= i < points} W_{i/points}``.

    Their limits as ``points -> inf`` are 1/2 and ``sqrt(2/pi)``.
    """
    N = int(points)
    if N < 2:
        raise ConfigError("points must be at least 2")

    def work(block: int, size: int):
        rng = generator(cfg.seed, "b_constants", N, block)
        return brownian_rows(rng, size, N - 1, 1.0 / N).max(axis=1)

    M = ordered_concat(map_blocks(work, cfg.replications, cfg.threads, PAIR_BLOCK))
    R = len(M)
    half_sq = 0.5 * M * M
    return BConstants(
        MCEstimate(float(half_sq.mean()), float(half_sq.std(ddof=1)) / math.sqrt(R), R, N),
        MCEstimate(float(M.mean()), float(M.std(ddof=1)) / math.sqrt(R), R, N),
    )
