"""Monte Carlo estimators of exponential moments of Brownian areas.

``H(x) = integral_0^1 (W_t + x)_+ dt`` drives the law of a centred bin
minimum: ``P(R > x sigma) = E exp(-K sigma H(x))``. The second-moment
decomposition of the adjacent-minimum difference combines these
survival functions with first-passage densities; :func:`lambda_functionals`
evaluates it path by path so that all parts share the same randomness.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special

from ._kernels import SortedRows, brownian_rows
from .errors import ConfigError
from .rng import generator, map_blocks, ordered_concat

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
#: Base paths per random-number block; bounds memory at large ``time_grid``.
PATH_BLOCK = 500


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo sizing.

    Parameters
    ----------
    replications : int
        Number of Brownian paths, at least 100.
    time_grid : int
        Riemann steps on [0, 1], at least 1000.
    seed : int
    antithetic : bool
        Pair every path ``W`` with ``-W``; ``replications`` then counts both.
    threads : int
        Worker threads; results do not depend on it.
    """

    replications: int = 20000
    time_grid: int = 10000
    seed: int = 0
    antithetic: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.replications < 100:
            raise ConfigError("replications must be at least 100")
        if self.time_grid < 1000:
            raise ConfigError("time_grid must be at least 1000")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k != "threads"}


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    replications: int
    time_grid: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, config: MCConfig | None = None) -> str:
        doc = self.to_dict()
        if config is not None:
            doc["config"] = config.to_dict()
        return json.dumps(doc, sort_keys=True)


def _summarise(samples: np.ndarray, cfg: MCConfig) -> MCEstimate:
    n = len(samples)
    sd = float(np.std(samples, ddof=1)) if n > 1 else 0.0
    return MCEstimate(float(np.mean(samples)), sd / math.sqrt(n), cfg.replications, cfg.time_grid)


def _path_blocks(cfg: MCConfig, stream: str, fn) -> np.ndarray:
    """Apply ``fn(paths)`` to Brownian node values block by block.

    ``paths`` has shape ``(rows, m)`` (left nodes, ``W_0 = 0`` included).
    With antithetic sampling ``fn`` sees ``W`` and ``-W`` stacked and the
    returned per-path values (scalars or rows) are averaged in pairs, so
    the output holds one independent sample per base path.
    """
    m = cfg.time_grid
    base = cfg.replications // 2 if cfg.antithetic else cfg.replications

    def work(block: int, size: int) -> np.ndarray:
        rng = generator(cfg.seed, stream, block)
        w = brownian_rows(rng, size, m, 1.0 / m)[:, :-1]
        if not cfg.antithetic:
            return fn(w)
        vals = fn(np.concatenate([w, -w], axis=0))
        return 0.5 * (vals[:size] + vals[size:])

    return ordered_concat(map_blocks(work, base, cfg.threads, PATH_BLOCK))


def mc_exp_area(x: float, theta: float, cfg: MCConfig) -> MCEstimate:
    """Estimate ``E exp(-theta H(x))`` with ``H(x) = integral (W_t + x)_+ dt``.

    Examples
    --------
    >>> est = mc_exp_area(-10.0, 1.0, MCConfig(replications=200, time_grid=1000))
    >>> round(est.value, 6)
    1.0
    """
    if not theta > 0:
        raise ConfigError("theta must be positive")

    def fn(w):
        return np.exp(-theta * np.maximum(w + x, 0.0).mean(axis=1))

    return _summarise(_path_blocks(cfg, "exp_area", fn), cfg)


def mc_exp_area_t_samples(x: float, theta: float, t: np.ndarray, cfg: MCConfig) -> np.ndarray:
    """Per-path samples of ``exp(-theta integral_0^t (x + W_s)_+ ds)`` for many horizons.

    Brownian scaling maps horizon ``t`` onto the unit path:
    ``integral_0^t (x + W_s)_+ ds = t^{3/2} H(x / sqrt(t))`` in law, so a
    single set of paths serves every ``t``. Returns shape ``(paths, len(t))``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ConfigError("horizons must be positive")
    levels = x / np.sqrt(t)
    weight = theta * t**1.5

    def fn(w):
        return np.exp(-weight[None, :] * SortedRows(w).area_plus(levels))

    return _path_blocks(cfg, "exp_area_t", fn)


def mc_exp_area_t(x: float, theta: float, t: float, cfg: MCConfig) -> MCEstimate:
    """Estimate ``E exp(-theta integral_0^t (x + W_s)_+ ds)``."""
    return _summarise(mc_exp_area_t_samples(x, theta, np.array([t]), cfg)[:, 0], cfg)


def survival_R(x: float, sigma: float, K: float, cfg: MCConfig) -> MCEstimate:
    """``P(R > x sigma)`` for the centred bin minimum ``R`` in unit scaling."""
    if not (sigma > 0 and K > 0):
        raise ConfigError("sigma and K must be positive")
    return mc_exp_area(x, K * sigma, cfg)


def mc_I(c: float, s: float, cfg: MCConfig) -> MCEstimate:
    """Estimate ``E exp(-c (1-s)^{3/2} integral_0^1 (W_t)_- dt)``."""
    if not 0.0 <= s <= 1.0:
        raise ConfigError("s must lie in [0, 1]")
    if c < 0:
        raise ConfigError("c must be nonnegative")
    a = c * (1.0 - s) ** 1.5

    def fn(w):
        return np.exp(-a * np.maximum(-w, 0.0).mean(axis=1))

    return _summarise(_path_blocks(cfg, "neg_area", fn), cfg)


def _simpson_weights(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    if n < 3 or n % 2 == 0:
        raise ConfigError("quad_points must be odd and at least 3")
    x = np.linspace(a, b, n)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return x, w * (b - a) / (3.0 * (n - 1))


def area_tail_bound(x_max: float, c: float, power: int) -> float:
    """Upper bound on ``integral_{x_max}^inf x^power E exp(-c H(x)) dx``.

    Uses ``H(x) >= x + integral W``: on ``{integral W >= -x/2}`` the
    integrand is at most ``exp(-c x / 2)``, and ``integral W`` is centred
    normal with variance 1/3.
    """

    def f(x):
        return x**power * (0.5 * special.erfc(x * math.sqrt(3.0) / 2.0 / math.sqrt(2.0)) + math.exp(-c * x / 2.0))

    val, _ = integrate.quad(f, x_max, np.inf, limit=200)
    return float(val)


def default_x_max(c: float) -> float:
    return 8.0 * c ** (-1.0 / 3.0) + 5.0


@dataclass(frozen=True)
class LambdaResult:
    """Outcome of :func:`lambda_functionals`.

    ``psi_tilde = 2 sigma^2 (2 lambda1 - lambda2^2)``; ``integral_I`` is
    ``integral_0^1 I(c, s) ds``.
    """

    lambda1: MCEstimate
    lambda2: MCEstimate
    psi_tilde: MCEstimate
    integral_I: MCEstimate
    x_max: float
    quad_points: int
    tail_bound: float

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1.to_dict(),
            "lambda2": self.lambda2.to_dict(),
            "psi_tilde": self.psi_tilde.to_dict(),
            "integral_I": self.integral_I.to_dict(),
            "x_max": self.x_max,
            "quad_points": self.quad_points,
            "tail_bound": self.tail_bound,
        }


def lambda_functionals(
    sigma: float,
    K: float,
    cfg: MCConfig,
    x_max: float | None = None,
    quad_points: int = 401,
    s_points: int = 201,
) -> LambdaResult:
    """Evaluate ``Lambda_1``, ``Lambda_2`` and ``2 sigma^2 (2 Lambda_1 - Lambda_2^2)``.

    With ``c = K sigma``:

    * ``Lambda_1 = int_0^inf x E e^{-c H(x)} dx + 1/2 - 1/2 int_0^1 I(c, s) ds``
    * ``Lambda_2 = sqrt(2/pi) - int_0^inf E e^{-c H(x)} dx - int_0^1 I(c, s) (2 pi s)^{-1/2} ds``

    Only ``Lambda_2^2`` enters ``Psi``; the sign is fixed so that
    ``Lambda_2 -> sqrt(2/pi)`` as ``c -> inf``.

    The last integral is computed as ``sqrt(2/pi) int_0^1 I(c, u^2) du``.
    The x-integrals use composite Simpson on ``[0, x_max]`` and every
    quadrature acts on the same simulated paths, so standard errors
    follow from the per-path covariance by the delta method.

    Raises
    ------
    ConfigError
        If the analytic tail bound beyond ``x_max`` exceeds 1e-4; the
        message suggests a sufficient ``x_max``.
    """
    if not (sigma > 0 and K > 0):
        raise ConfigError("sigma and K must be positive")
    c = K * sigma
    if x_max is None:
        x_max = default_x_max(c)
    tail = max(area_tail_bound(x_max, c, 0), area_tail_bound(x_max, c, 1))
    if tail >= 1e-4:
        suggestion = x_max
        while max(area_tail_bound(suggestion, c, 0), area_tail_bound(suggestion, c, 1)) >= 1e-4:
            suggestion *= 1.5
        raise ConfigError(
            f"x_max = {x_max:.4g} leaves a tail of up to {tail:.2e}; use x_max >= {suggestion:.4g}"
        )
    xs, wx = _simpson_weights(quad_points, 0.0, x_max)
    us, wu = _simpson_weights(s_points, 0.0, 1.0)
    ds_decay = (1.0 - us) ** 1.5            # (1 - s)^{3/2} on the s grid
    du_decay = (1.0 - us**2) ** 1.5          # (1 - u^2)^{3/2} on the u grid

    def fn(w):
        surv = np.exp(-c * SortedRows(w).area_plus(xs))
        neg = np.maximum(-w, 0.0).mean(axis=1)
        i_flat = np.exp(-c * np.outer(neg, ds_decay)) @ wu
        i_weighted = np.exp(-c * np.outer(neg, du_decay)) @ wu
        return np.column_stack([surv @ (wx * xs), surv @ wx, i_flat, i_weighted])

    samples = _path_blocks(cfg, "lambda", fn)
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    cov = np.cov(samples, rowvar=False) / n

    g1 = np.array([1.0, 0.0, -0.5, 0.0])
    g2 = -np.array([0.0, 1.0, 0.0, SQRT_2_OVER_PI])
    lam1 = float(mean @ g1) + 0.5
    lam2 = float(mean @ g2) + SQRT_2_OVER_PI
    se1 = math.sqrt(max(g1 @ cov @ g1, 0.0))
    se2 = math.sqrt(max(g2 @ cov @ g2, 0.0))
    psi = 2.0 * sigma**2 * (2.0 * lam1 - lam2**2)
    grad = 2.0 * sigma**2 * (2.0 * g1 - 2.0 * lam2 * g2)
    se_psi = math.sqrt(max(grad @ cov @ grad, 0.0))
    se_i = math.sqrt(max(cov[2, 2], 0.0))
    R, m = cfg.replications, cfg.time_grid
    return LambdaResult(
        lambda1=MCEstimate(lam1, se1, R, m),
        lambda2=MCEstimate(lam2, se2, R, m),
        psi_tilde=MCEstimate(psi, se_psi, R, m),
        integral_I=MCEstimate(float(mean[2]), se_i, R, m),
        x_max=float(x_max),
        quad_points=quad_points,
        tail_bound=tail,
    )



def mc_double_laplace(
    x: float, theta: float, s: float, cfg: MCConfig, points: int = 201, cutoff: float = 1e-6
) -> MCEstimate:
    """Estimate ``int_0^inf e^{-st} E exp(-theta int_0^t (x + W_u)_+ du) dt``.

    The ``t``-integral is truncated at ``t*`` with ``e^{-s t*} = cutoff``
    (dropped mass below ``cutoff / s``) and computed by Simpson's rule in
    ``v = sqrt(t)`` on the same paths for every node.
    """
    if not (s > 0 and theta > 0):
        raise ConfigError("s and theta must be positive")
    t_star = -math.log(cutoff) / s
    v, wv = _simpson_weights(points, 0.0, math.sqrt(t_star))
    v, wv = v[1:], wv[1:]  # the v = 0 node has zero weight 2 v
    weights = wv * 2.0 * v * np.exp(-s * v * v)
    samples = mc_exp_area_t_samples(x, theta, v * v, cfg) @ weights
    return _summarise(samples, cfg)


def mc_exp_area_curve(xs, theta: float, cfg: MCConfig) -> list[MCEstimate]:
    """:func:`mc_exp_area` at several levels on one set of paths.

    The estimates are correlated across levels.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if not theta > 0:
        raise ConfigError("theta must be positive")

    def fn(w):
        return np.column_stack([np.exp(-theta * np.maximum(w + x, 0.0).mean(axis=1)) for x in xs])

    samples = _path_blocks(cfg, "exp_area_curve", fn)
    return [_summarise(samples[:, j], cfg) for j in range(len(xs))]
