"""Boundary path simulation.

Paths live on the unit horizon with a uniform grid of ``m`` steps. The
Itô simulator evolves the price ``X`` and its volatility ``sigma`` jointly
with an Euler-Maruyama scheme, adds compound-Poisson jumps (finite
activity) to either component, and clips ``sigma`` at a positive floor.

Coefficient specifications accept plain floats, :class:`PiecewiseConstant`
objects or callables. Price drift callables have signature
``a(t, x, sigma)``; volatility coefficient callables have signature
``f(t, sigma, w)`` where ``w`` is the current level of the driving
Brownian motion ``W``.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Union

import numpy as np

from .errors import ConfigError, DomainError, NumericError
from .rng import generator


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous step function on [0, 1].

    ``values[j]`` applies on ``[breakpoints[j-1], breakpoints[j])``.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ConfigError("need len(values) == len(breakpoints) + 1")
        if any(b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise ConfigError("breakpoints must be strictly increasing")

    def __call__(self, t):
        idx = np.searchsorted(np.asarray(self.breakpoints), t, side="right")
        return np.asarray(self.values, dtype=float)[idx]

    def bound(self) -> float:
        return max(abs(v) for v in self.values)


Coefficient = Union[float, PiecewiseConstant, Callable[..., float]]
JumpSizes = Union[float, Callable[[np.random.Generator, int], np.ndarray]]


@dataclass(frozen=True)
class JumpSpec:
    """Compound-Poisson jump component.

    ``sizes`` is either a constant jump size or ``sampler(rng, k)``
    returning ``k`` sizes.
    """

    intensity: float = 0.0
    sizes: JumpSizes = 0.0

    def __post_init__(self):
        if not (self.intensity >= 0.0 and math.isfinite(self.intensity)):
            raise ConfigError("jump intensity must be finite and >= 0")

    def draw(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Jump times on [0, 1] via exponential gaps, and their sizes."""
        times = []
        if self.intensity > 0.0:
            t = rng.exponential(1.0 / self.intensity)
            while t < 1.0:
                times.append(t)
                t += rng.exponential(1.0 / self.intensity)
        times = np.asarray(times, dtype=float)
        if callable(self.sizes):
            sizes = np.asarray(self.sizes(rng, len(times)), dtype=float)
        else:
            sizes = np.full(len(times), float(self.sizes))
        return times, sizes


@dataclass(frozen=True)
class VolModel:
    """Volatility dynamics ``d sigma = a~ dt + s~ dW + e~ dW_perp + jumps``."""

    sigma0: float = 1.0
    drift_tilde: Coefficient = 0.0
    sigma_tilde: Coefficient = 0.0
    eta_tilde: Coefficient = 0.0
    sigma_minus: float = 1e-3

    def __post_init__(self):
        if not self.sigma0 > 0.0:
            raise ConfigError("sigma0 must be positive")
        if not self.sigma_minus > 0.0:
            raise ConfigError("sigma_minus must be positive")

    @property
    def is_constant(self) -> bool:
        """True when sigma never moves (apart from jumps)."""
        return all(
            not callable(c) and float(c) == 0.0
            for c in (self.drift_tilde, self.sigma_tilde, self.eta_tilde)
        )


@dataclass(frozen=True)
class PathConfig:
    grid_points: int
    drift: Coefficient = 0.0
    vol_model: VolModel = field(default_factory=VolModel)
    jumps_x: JumpSpec = field(default_factory=JumpSpec)
    jumps_sigma: JumpSpec = field(default_factory=JumpSpec)
    seed: int = 0
    x0: float = 0.0
    drift_bound: float = 100.0

    def __post_init__(self):
        if int(self.grid_points) != self.grid_points or self.grid_points < 2:
            raise ConfigError("grid_points must be an integer >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if isinstance(self.drift, PiecewiseConstant):
            if self.drift.bound() > self.drift_bound:
                raise ConfigError("piecewise drift exceeds drift_bound")
        elif not callable(self.drift) and abs(float(self.drift)) > self.drift_bound:
            raise ConfigError("drift exceeds drift_bound")


@dataclass
class SamplePath:
    """A discretised realisation of ``(X_t, sigma_t)`` on [0, 1]."""

    times: np.ndarray
    x_values: np.ndarray
    sigma_values: np.ndarray
    jump_times_x: np.ndarray = field(default_factory=lambda: np.empty(0))
    jump_times_sigma: np.ndarray = field(default_factory=lambda: np.empty(0))
    clip_count: int = 0
    config: PathConfig | None = None

    @property
    def m(self) -> int:
        return len(self.times) - 1

    @property
    def path_id(self) -> str:
        h = hashlib.sha1(np.ascontiguousarray(self.x_values).tobytes())
        h.update(np.ascontiguousarray(self.sigma_values).tobytes())
        return h.hexdigest()[:16]

    def integrated_variance(self) -> float:
        """Left Riemann sum of ``sigma_t^2`` over the grid."""
        dt = np.diff(self.times)
        return float(np.sum(self.sigma_values[:-1] ** 2 * dt))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "sigma"])
            for row in zip(self.times, self.x_values, self.sigma_values):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> "SamplePath":
        data = np.genfromtxt(path, delimiter=",", names=True)
        return cls(
            times=np.asarray(data["t"], dtype=float),
            x_values=np.asarray(data["x"], dtype=float),
            sigma_values=np.asarray(data["sigma"], dtype=float),
        )


def _is_callback(c: Coefficient) -> bool:
    return callable(c) and not isinstance(c, PiecewiseConstant)


def _coef_array(c: Coefficient, t: np.ndarray) -> np.ndarray:
    if isinstance(c, PiecewiseConstant):
        return c(t)
    return np.full(t.shape, float(c))


def _snap(times: np.ndarray, m: int) -> np.ndarray:
    # a jump snapped to node 0 would move X_0, so the earliest node is 1
    return np.clip(np.rint(times * m).astype(np.int64), 1, m)


def simulate_brownian(m: int, seed: int, replication: int = 0) -> SamplePath:
    """Standard Brownian motion on ``m`` uniform steps, ``sigma == 1``."""
    if int(m) != m or m < 2:
        raise ConfigError("m must be an integer >= 2")
    rng = generator(seed, "brownian", replication)
    dw = rng.standard_normal(m) * math.sqrt(1.0 / m)
    x = np.concatenate(([0.0], np.cumsum(dw)))
    return SamplePath(
        times=np.linspace(0.0, 1.0, m + 1),
        x_values=x,
        sigma_values=np.ones(m + 1),
    )


def simulate_ito(config: PathConfig, replication: int = 0) -> SamplePath:
    """Euler-Maruyama path of the jump-diffusion described by ``config``.

    Jump times are drawn exactly on [0, 1] and snapped to the nearest grid
    node. ``sigma`` is clipped at ``vol_model.sigma_minus``; the number of
    clipped nodes is stored in ``clip_count``. Runs are bit-identical for
    equal ``(config, replication)``.
    """
    m = int(config.grid_points)
    vm = config.vol_model
    dt = 1.0 / m
    t = np.linspace(0.0, 1.0, m + 1)
    seed = config.seed

    dw = generator(seed, "ito", replication, "W").standard_normal(m) * math.sqrt(dt)
    needs_perp = callable(vm.eta_tilde) or float(vm.eta_tilde) != 0.0
    dw_perp = (
        generator(seed, "ito", replication, "Wperp").standard_normal(m) * math.sqrt(dt)
        if needs_perp
        else np.zeros(m)
    )
    jx_t, jx_s = config.jumps_x.draw(generator(seed, "ito", replication, "jx"))
    js_t, js_s = config.jumps_sigma.draw(generator(seed, "ito", replication, "js"))
    jump_x = np.zeros(m + 1)
    np.add.at(jump_x, _snap(jx_t, m), jx_s)
    jump_s = np.zeros(m + 1)
    np.add.at(jump_s, _snap(js_t, m), js_s)

    sigma, clips = _simulate_sigma(vm, t, dw, dw_perp, jump_s)

    if _is_callback(config.drift):
        x = np.empty(m + 1)
        x[0] = config.x0
        for i in range(m):
            a = config.drift(t[i], x[i], sigma[i])
            if not math.isfinite(a):
                raise NumericError(f"non-finite drift at step {i}")
            if abs(a) > config.drift_bound:
                raise ConfigError(f"drift {a} exceeds drift_bound at step {i}")
            x[i + 1] = x[i] + a * dt + sigma[i] * dw[i] + jump_x[i + 1]
    else:
        a = _coef_array(config.drift, t[:-1])
        incr = a * dt + sigma[:-1] * dw + jump_x[1:]
        x = np.concatenate(([config.x0], config.x0 + np.cumsum(incr)))
    if not np.all(np.isfinite(x)):
        bad = int(np.argmax(~np.isfinite(x)))
        raise NumericError(f"non-finite X at step {bad}")

    return SamplePath(
        times=t,
        x_values=x,
        sigma_values=sigma,
        jump_times_x=np.sort(jx_t),
        jump_times_sigma=np.sort(js_t),
        clip_count=clips,
        config=config,
    )


def _simulate_sigma(vm: VolModel, t, dw, dw_perp, jump_s) -> tuple[np.ndarray, int]:
    m = len(dw)
    dt = 1.0 / m
    floor = vm.sigma_minus
    coefs = (vm.drift_tilde, vm.sigma_tilde, vm.eta_tilde)
    if not any(_is_callback(c) for c in coefs):
        incr = (
            _coef_array(vm.drift_tilde, t[:-1]) * dt
            + _coef_array(vm.sigma_tilde, t[:-1]) * dw
            + _coef_array(vm.eta_tilde, t[:-1]) * dw_perp
            + jump_s[1:]
        )
        sigma = np.concatenate(([vm.sigma0], vm.sigma0 + np.cumsum(incr)))
        if sigma.min() >= floor:
            return sigma, 0
        return _clip_loop(vm.sigma0, incr, floor)

    w = np.concatenate(([0.0], np.cumsum(dw)))
    sigma = np.empty(m + 1)
    sigma[0] = vm.sigma0
    clips = 0
    for i in range(m):
        s = sigma[i]
        vals = []
        for c in coefs:
            v = c(t[i], s, w[i]) if _is_callback(c) else (
                c(t[i]) if isinstance(c, PiecewiseConstant) else float(c))
            if not math.isfinite(v):
                raise NumericError(f"non-finite volatility coefficient at step {i}")
            vals.append(v)
        nxt = s + vals[0] * dt + vals[1] * dw[i] + vals[2] * dw_perp[i] + jump_s[i + 1]
        if nxt < floor:
            nxt = floor
            clips += 1
        sigma[i + 1] = nxt
    return sigma, clips


def _clip_loop(sigma0: float, incr: np.ndarray, floor: float) -> tuple[np.ndarray, int]:
    sigma = np.empty(len(incr) + 1)
    sigma[0] = sigma0
    clips = 0
    s = sigma0
    for i, d in enumerate(incr):
        s = s + d
        if s < floor:
            s = floor
            clips += 1
        sigma[i + 1] = s
    return sigma, clips


def inject_jumps(path: SamplePath, times, sizes) -> SamplePath:
    """Copy of ``path`` with deterministic price jumps added at ``times``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    sizes = np.broadcast_to(np.asarray(sizes, dtype=float), times.shape)
    bump = np.zeros(path.m + 1)
    np.add.at(bump, _snap(times, path.m), sizes)
    return SamplePath(
        times=path.times,
        x_values=path.x_values + np.cumsum(bump),
        sigma_values=path.sigma_values,
        jump_times_x=np.sort(np.concatenate((path.jump_times_x, times))),
        jump_times_sigma=path.jump_times_sigma,
        clip_count=path.clip_count,
        config=path.config,
    )


def inject_sigma_jump(path: SamplePath, time: float, size: float) -> SamplePath:
    """Copy of ``path`` whose volatility jumps by ``size`` at ``time``.

    The diffusion increments after the jump are rescaled by
    ``sigma_new / sigma_old``, which is exact for paths without drift or
    price jumps.
    """
    if not 0.0 < time < 1.0:
        raise ConfigError("jump time must lie in (0, 1)")
    step = np.where(path.times >= time, float(size), 0.0)
    sigma = path.sigma_values + step
    if np.any(sigma <= 0):
        raise ConfigError("volatility jump makes sigma non-positive")
    dx = np.diff(path.x_values) * (sigma[:-1] / path.sigma_values[:-1])
    x = np.concatenate(([path.x_values[0]], path.x_values[0] + np.cumsum(dx)))
    return SamplePath(
        times=path.times,
        x_values=x,
        sigma_values=sigma,
        jump_times_x=path.jump_times_x,
        jump_times_sigma=np.sort(np.append(path.jump_times_sigma, time)),
        clip_count=path.clip_count,
        config=path.config,
    )


def first_passage_prob(x: float, l: float) -> float:
    """``P(T_x <= l)`` for the first passage of standard BM to level ``x < 0``.

    Equals ``2 (1 - Phi(|x| / sqrt(l)))``, computed as ``erfc`` to keep
    full relative accuracy in the tail.
    """
    if not x < 0.0:
        raise DomainError("level x must be negative")
    if not 0.0 < l <= 1.0:
        raise DomainError("time l must lie in (0, 1]")
    return math.erfc(abs(x) / math.sqrt(2.0 * l))


# -- configuration documents -------------------------------------------------

def _coef_from(doc: Any) -> Coefficient:
    if isinstance(doc, Mapping):
        return PiecewiseConstant(tuple(doc["breakpoints"]), tuple(doc["values"]))
    return float(doc)


def _jumps_from(doc: Mapping | None) -> JumpSpec:
    if not doc:
        return JumpSpec()
    size = doc.get("size", 0.0)
    if isinstance(size, Mapping):
        if "normal" in size:
            mu, sd = (float(v) for v in size["normal"])
            sizes = lambda rng, k, mu=mu, sd=sd: rng.normal(mu, sd, k)  # noqa: E731
        else:
            raise ConfigError(f"unknown jump size law {sorted(size)}")
    else:
        sizes = float(size)
    return JumpSpec(intensity=float(doc.get("intensity", 0.0)), sizes=sizes)


def path_config_from_dict(doc: Mapping) -> PathConfig:
    """Build a :class:`PathConfig` from a key-value document.

    Schema::

        grid_points: int             # required
        seed: int
        x0: float
        drift: float | {breakpoints: [...], values: [...]}
        drift_bound: float
        vol: {sigma0, drift_tilde, sigma_tilde, eta_tilde, sigma_minus}
        jumps_x / jumps_sigma: {intensity: float,
                                size: float | {normal: [mean, sd]}}
    """
    vol = doc.get("vol", {})
    vm = VolModel(
        sigma0=float(vol.get("sigma0", 1.0)),
        drift_tilde=_coef_from(vol.get("drift_tilde", 0.0)),
        sigma_tilde=_coef_from(vol.get("sigma_tilde", 0.0)),
        eta_tilde=_coef_from(vol.get("eta_tilde", 0.0)),
        sigma_minus=float(vol.get("sigma_minus", 1e-3)),
    )
    try:
        return PathConfig(
            grid_points=int(doc["grid_points"]),
            drift=_coef_from(doc.get("drift", 0.0)),
            vol_model=vm,
            jumps_x=_jumps_from(doc.get("jumps_x")),
            jumps_sigma=_jumps_from(doc.get("jumps_sigma")),
            seed=int(doc.get("seed", 0)),
            x0=float(doc.get("x0", 0.0)),
            drift_bound=float(doc.get("drift_bound", 100.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing key {exc}") from None
