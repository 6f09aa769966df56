"""Integrated-volatility estimators built on bin minima.

Bins are paired as ``(0, 1), (2, 3), ...``; a block of ``r_inv`` bins holds
``r_inv / 2`` pairs. Per block

``S_l = mean over the block's pairs of (m_{2j+1} - m_{2j})^2 / h``,

``sigma2_l = Psi^{-1}(S_l)`` and the estimate is
``sum_l min(sigma2_l, cap) * (block length)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .grids import Grids, resolve_grids
from .observations import BinMinima
from .psi import PsiTable


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator settings.

    Parameters
    ----------
    K, kappa, lam : float
        Bin constant, block constant and observation rate.
    model : {"ppp", "regression"}
    tau_abs : float, optional
        Cap on every block's ``sigma^2``.
    tau_adaptive : bool
        Cap derived from a first untruncated pass, see :func:`adaptive_threshold`.
    tau_scale : {"bin", "block"}
        How the adaptive increment bound becomes a ``sigma^2`` cap: divided
        by the bin width (``"bin"``) or by the block length (``"block"``).
    allow_empty_bins : bool
        Accept point-process minima with empty-bin fallbacks.
    """

    K: float
    kappa: float = 1.0
    lam: float = 1.0
    model: str = "ppp"
    tau_abs: float | None = None
    tau_adaptive: bool = False
    tau_scale: str = "bin"
    allow_empty_bins: bool = False
    psi_table_ref: str | None = None

    def __post_init__(self):
        if not (self.K > 0 and self.kappa > 0 and self.lam > 0):
            raise ConfigError("K, kappa and lam must be positive")
        if self.model not in ("ppp", "regression"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.tau_abs is not None and not self.tau_abs > 0:
            raise ConfigError("tau_abs must be positive")
        if self.tau_abs is not None and self.tau_adaptive:
            raise ConfigError("choose either tau_abs or tau_adaptive")
        if self.tau_scale not in ("bin", "block"):
            raise ConfigError("tau_scale must be 'bin' or 'block'")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IVEstimate:
    """Estimate with per-block diagnostics.

    ``block_sigma_sq`` holds the untruncated local values; ``iv`` applies
    ``sigma_sq_cap`` when set.
    """

    iv: float
    iv_untruncated: float
    block_sigma_sq: np.ndarray
    block_length: float
    truncated_blocks: tuple[int, ...]
    clamped_blocks: tuple[int, ...]
    sigma_sq_cap: float | None
    tau: float | None
    grids: dict
    config: dict
    table_id: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "iv": self.iv,
            "iv_untruncated": self.iv_untruncated,
            "block_sigma_sq": np.asarray(self.block_sigma_sq).tolist(),
            "block_length": self.block_length,
            "truncated_blocks": list(self.truncated_blocks),
            "clamped_blocks": list(self.clamped_blocks),
            "sigma_sq_cap": self.sigma_sq_cap,
            "tau": self.tau,
            "grids": self.grids,
            "config": self.config,
            "table_id": self.table_id,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def adaptive_threshold(pre_estimate: float, h: float) -> float:
    """Increment bound ``2 log(1/h) h * pre_estimate``.

    Examples
    --------
    >>> round(adaptive_threshold(1.0, 0.01), 4)
    0.0921
    """
    if not pre_estimate > 0:
        raise ConfigError("pre_estimate must be positive")
    if not 0 < h < 1:
        raise ConfigError("h must lie in (0, 1)")
    return 2.0 * math.log(1.0 / h) * h * pre_estimate


def _layout(minima: BinMinima, cfg: EstimatorConfig) -> Grids:
    grids = getattr(minima, "grids", None)
    if grids is None:
        grids = resolve_grids(minima.n, cfg.lam, cfg.K, cfg.kappa, cfg.model)
    if grids.bins != len(minima.values):
        raise ConfigError(f"{len(minima.values)} minima do not match the resolved {grids.bins} bins")
    return grids


def _check_inputs(minima: BinMinima, cfg: EstimatorConfig, table: PsiTable, grids: Grids) -> float | None:
    if table.model != cfg.model or minima.model != cfg.model:
        raise ConfigError(f"model mismatch: config {cfg.model}, table {table.model}, data {minima.model}")
    if minima.bins_empty and not cfg.allow_empty_bins:
        raise DataError(f"{minima.bins_empty} empty bins; set allow_empty_bins to accept fallbacks")
    if cfg.model == "regression":
        if table.obs_per_bin != grids.obs_per_bin or table.bins != grids.bins:
            raise ConfigError(
                f"table calibrated for {table.bins} bins of {table.obs_per_bin} observations, "
                f"data resolved to {grids.bins} bins of {grids.obs_per_bin}"
            )
        return None
    return grids.k_eff


def _pair_statistics(values: np.ndarray, h: float) -> np.ndarray:
    return (values[1::2] - values[0::2]) ** 2 / h


def _finish(
    sigma_sq: np.ndarray, clamped: list[int], length: float, h: float, cfg: EstimatorConfig,
    grids: Grids, table: PsiTable,
) -> IVEstimate:
    iv_raw = float(np.sum(sigma_sq * length))
    cap, tau = None, None
    if cfg.tau_abs is not None:
        cap = float(cfg.tau_abs)
    elif cfg.tau_adaptive:
        tau = adaptive_threshold(iv_raw, h)
        cap = tau / (h if cfg.tau_scale == "bin" else length)
    if cap is None:
        capped, truncated = sigma_sq, ()
    else:
        capped = np.minimum(sigma_sq, cap)
        truncated = tuple(int(i) for i in np.flatnonzero(sigma_sq > cap))
    return IVEstimate(
        iv=float(np.sum(capped * length)),
        iv_untruncated=iv_raw,
        block_sigma_sq=sigma_sq,
        block_length=length,
        truncated_blocks=truncated,
        clamped_blocks=tuple(clamped),
        sigma_sq_cap=cap,
        tau=tau,
        grids=grids.to_dict(),
        config=cfg.to_dict(),
        table_id=table.table_id,
    )


def estimate_iv(
    minima: BinMinima, cfg: EstimatorConfig, table: PsiTable, grids: Grids | None = None
) -> IVEstimate:
    """Block-wise estimate of ``int_0^1 sigma_t^2 dt``.

    Raises
    ------
    ConfigError
        On a model or layout mismatch between data, config and table.
    DataError
        If empty bins are present and not allowed, or a block has no
        usable pair.
    """
    grids = grids or _layout(minima, cfg)
    k_eff = _check_inputs(minima, cfg, table, grids)
    stats = _pair_statistics(minima.values, grids.h).reshape(grids.blocks, grids.bins_per_block // 2)
    sigma_sq = np.empty(grids.blocks)
    clamped = []
    for l, row in enumerate(stats):
        row = row[np.isfinite(row)]
        if not len(row):
            raise DataError(f"block {l} has no usable pair of minima")
        inv = table.invert(float(row.mean()), k_eff)
        sigma_sq[l] = inv.sigma_sq
        if inv.clamped:
            clamped.append(l)
    return _finish(sigma_sq, clamped, grids.block_length, grids.h, cfg, grids, table)


def estimate_iv_parametric(
    minima: BinMinima, cfg: EstimatorConfig, table: PsiTable, grids: Grids | None = None
) -> IVEstimate:
    """Single global inversion over all pairs; suited to constant volatility."""
    grids = grids or _layout(minima, cfg)
    k_eff = _check_inputs(minima, cfg, table, grids)
    stats = _pair_statistics(minima.values, grids.h)
    stats = stats[np.isfinite(stats)]
    if not len(stats):
        raise DataError("no usable pair of minima")
    inv = table.invert(float(stats.mean()), k_eff)
    return _finish(np.array([inv.sigma_sq]), [0] if inv.clamped else [], 1.0, grids.h, cfg, grids, table)
