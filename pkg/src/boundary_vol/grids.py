"""Bin and block layout for the estimator.

Bins have width ``h = 1/B`` with target ``K^(2/3) (n lam)^(-2/3)``; blocks
hold ``r_inv`` bins (an even number), with target ``r_inv = n^(1/3) / kappa``.
Both targets are rounded to admissible integers; a rounding that moves a
quantity by more than ``ROUNDING_TOLERANCE`` of its target is rejected.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConfigError

ROUNDING_TOLERANCE = 0.25
MIN_BINS_PER_BLOCK = 4
MIN_BLOCKS = 2


@dataclass(frozen=True)
class Grids:
    """Resolved layout.

    Attributes
    ----------
    bins : int
        Number of bins ``1/h``.
    bins_per_block : int
        Even number of bins in a block.
    blocks : int
        Number of blocks, ``bins / bins_per_block``.
    k_eff : float
        The constant ``K`` implied by the rounded bin width:
        ``n lam h^{3/2}`` for the point process, ``lam N h^{1/2}`` for
        regression data with ``N`` observations per bin.
    obs_per_bin, n_used : int or None
        Regression data only: observations per bin and the number used
        (``bins * obs_per_bin``, trailing observations are dropped).
    """

    n: float
    lam: float
    K: float
    kappa: float
    model: str
    h_target: float
    bins: int
    r_inv_target: float
    bins_per_block: int
    blocks: int
    k_eff: float
    obs_per_bin: int | None = None
    n_used: int | None = None

    @property
    def h(self) -> float:
        return 1.0 / self.bins

    @property
    def block_length(self) -> float:
        return self.bins_per_block / self.bins

    def to_dict(self) -> dict:
        d = asdict(self)
        d["h"] = self.h
        d["bin_rounding"] = self.bins * self.h_target - 1.0
        d["block_rounding"] = self.bins_per_block / self.r_inv_target - 1.0
        return d


def resolve_grids(n: float, lam: float, K: float, kappa: float, model: str = "ppp") -> Grids:
    """Round the bin and block targets to an admissible layout.

    ``bins_per_block`` is the even integer nearest to ``n^(1/3)/kappa`` (at
    least 4) and ``bins`` the multiple of it nearest to the target bin
    count.

    Examples
    --------
    >>> g = resolve_grids(1e6, 1.0, 1.0, 1.0)
    >>> g.bins, g.bins_per_block, g.blocks
    (10000, 100, 100)
    """
    if model not in ("ppp", "regression"):
        raise ConfigError(f"unknown model {model!r}")
    if not (n > 0 and lam > 0 and K > 0 and kappa > 0):
        raise ConfigError("n, lam, K and kappa must be positive")
    h_target = K ** (2.0 / 3.0) * (n * lam) ** (-2.0 / 3.0)
    bins_target = 1.0 / h_target
    r_target = n ** (1.0 / 3.0) / kappa
    r_inv = max(MIN_BINS_PER_BLOCK, 2 * int(round(r_target / 2.0)))
    if abs(r_inv / r_target - 1.0) > ROUNDING_TOLERANCE:
        raise ConfigError(
            f"block size {r_target:.3g} bins cannot be rounded to an even integer >= "
            f"{MIN_BINS_PER_BLOCK} within {ROUNDING_TOLERANCE:.0%}; increase n or decrease kappa"
        )
    blocks = int(round(bins_target / r_inv))
    if blocks < MIN_BLOCKS:
        raise ConfigError(
            f"only {bins_target:.3g} bins for blocks of {r_inv}; need at least {MIN_BLOCKS} blocks"
        )
    bins = blocks * r_inv
    if abs(bins / bins_target - 1.0) > ROUNDING_TOLERANCE:
        raise ConfigError(f"bin count {bins} is more than {ROUNDING_TOLERANCE:.0%} from target {bins_target:.3g}")
    h = 1.0 / bins
    if model == "ppp":
        return Grids(n, lam, K, kappa, model, h_target, bins, r_target, r_inv, blocks, n * lam * h**1.5)
    N = int(n) // bins
    if N < 1:
        raise ConfigError(f"{int(n)} observations cannot fill {bins} bins")
    return Grids(
        n, lam, K, kappa, model, h_target, bins, r_target, r_inv, blocks,
        lam * N * math.sqrt(h), obs_per_bin=N, n_used=N * bins,
    )
