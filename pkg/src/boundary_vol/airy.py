"""Airy ``Ai``, Scorer ``Gi``, the Airy integral ``AI`` and the Laplace kernel ``zeta``.

Evaluation strategy (double precision, supported range ``[-20, 200]``):

* ``x <= 0``: Taylor stepping of the defining ODEs ``y'' = x y`` (Ai) and
  ``y'' = x y - 1/pi`` (Gi) from exact values at 0, through cached anchor
  points every 0.25. Both solutions are oscillatory there, so stepping
  errors stay at rounding level.
* ``0 < x <= 2``: a single Taylor step from 0 (the Maclaurin series).
* ``2 < x <= 8`` (Ai) or ``2 < x <= 14`` (Gi): integral representations
  with exponentially damped integrands, by adaptive quadrature.
* beyond: asymptotic expansions. The Gi series is only accurate to about
  ``exp(-2 x^{3/2} / 3)``, hence its later switch.

``Gi`` follows the convention ``Gi'' - x Gi = -1/pi`` fixed by its
integral definition ``(1/pi) int_0^inf sin(t^3/3 + x t) dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError

X_MIN = -20.0
X_MAX = 200.0
_ANCHOR_STEP = 0.25
_SERIES_EDGE = 2.0
_ASYMPTOTIC_EDGE = 8.0
_GI_ASYMPTOTIC_EDGE = 14.0
_QUAD = dict(limit=400, epsabs=1e-15, epsrel=1e-13)

AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)
GI0 = 3.0 ** (-7.0 / 6.0) / math.gamma(2.0 / 3.0)
GIP0 = 3.0 ** (-5.0 / 6.0) / math.gamma(1.0 / 3.0)


def _check(x: float) -> float:
    x = float(x)
    if not (X_MIN <= x <= X_MAX):
        raise DomainError(f"argument {x} outside the supported range [{X_MIN}, {X_MAX}]")
    return x


def _taylor(x0: float, y: float, dy: float, forcing: float, d: float) -> tuple[float, float]:
    """Value and slope at ``x0 + d`` of the solution of ``y'' = x y + forcing``."""
    a = [y, dy, 0.5 * (x0 * y + forcing)]
    val = y + dy * d + a[2] * d * d
    der = dy + 2.0 * a[2] * d
    pw = d * d
    small = 0
    for k in range(1, 200):
        nxt = (x0 * a[k] + a[k - 1]) / ((k + 2) * (k + 1))
        a.append(nxt)
        pw_next = pw * d
        term = nxt * pw_next
        val += term
        der += (k + 2) * nxt * pw
        pw = pw_next
        scale = max(abs(val), abs(der), 1e-300)
        small = small + 1 if abs(term) < 1e-18 * scale and abs((k + 2) * nxt * pw) < 1e-17 * scale else 0
        if small >= 3:
            return val, der
    raise NumericError("Taylor step did not converge")


@lru_cache(maxsize=None)
def _anchors() -> tuple[np.ndarray, np.ndarray]:
    """``(Ai, Ai', Gi, Gi')`` at ``x = -j * _ANCHOR_STEP``."""
    count = int(round(-X_MIN / _ANCHOR_STEP)) + 1
    ai = np.empty((count, 2))
    gi = np.empty((count, 2))
    ai[0] = AI0, AIP0
    gi[0] = GI0, GIP0
    for j in range(1, count):
        x0 = -(j - 1) * _ANCHOR_STEP
        ai[j] = _taylor(x0, ai[j - 1, 0], ai[j - 1, 1], 0.0, -_ANCHOR_STEP)
        gi[j] = _taylor(x0, gi[j - 1, 0], gi[j - 1, 1], -1.0 / math.pi, -_ANCHOR_STEP)
    return ai, gi


def _negative_axis(x: float, which: int) -> tuple[float, float]:
    ai, gi = _anchors()
    table, forcing = (ai, 0.0) if which == 0 else (gi, -1.0 / math.pi)
    j = int(round(-x / _ANCHOR_STEP))
    x0 = -j * _ANCHOR_STEP
    return _taylor(x0, table[j, 0], table[j, 1], forcing, x - x0)


def _zeta_of(x: float) -> float:
    return 2.0 / 3.0 * x**1.5


def _ai_asymptotic(x: float) -> tuple[float, float]:
    z = _zeta_of(x)
    pre = math.exp(-z) / (2.0 * math.sqrt(math.pi))
    u, sa, sd = 1.0, 1.0, 1.0
    last = math.inf
    for k in range(1, 60):
        u_next = u * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        v_next = -(6 * k + 1) / (6 * k - 1) * u_next
        term = u_next / z**k
        if abs(term) >= last:
            break
        sign = -1.0 if k % 2 else 1.0
        sa += sign * term
        sd += sign * v_next / z**k
        last = abs(term)
        u = u_next
        if abs(term) < 1e-17:
            break
    return pre * x**-0.25 * sa, -pre * x**0.25 * sd


def _ai_integral(x: float) -> tuple[float, float]:
    rx = math.sqrt(x)
    damp = math.exp(-_zeta_of(x)) / math.pi
    top = math.sqrt(45.0 / rx)
    i0, _ = integrate.quad(lambda t: math.cos(t**3 / 3.0) * math.exp(-rx * t * t), 0.0, top, **_QUAD)
    i2, _ = integrate.quad(lambda t: t * t * math.cos(t**3 / 3.0) * math.exp(-rx * t * t), 0.0, top, **_QUAD)
    ai = damp * i0
    aip = -rx * ai - damp * i2 / (2.0 * rx)
    return ai, aip


def _ai_pair(x: float) -> tuple[float, float]:
    if x <= 0.0:
        return _negative_axis(x, 0)
    if x <= _SERIES_EDGE:
        return _taylor(0.0, AI0, AIP0, 0.0, x)
    if x <= _ASYMPTOTIC_EDGE:
        return _ai_integral(x)
    return _ai_asymptotic(x)


def airy_ai(x: float) -> float:
    """Airy function ``Ai(x)`` on ``[-20, 200]``.

    Examples
    --------
    >>> round(airy_ai(0.0), 12)
    0.355028053888
    """
    return _ai_pair(_check(x))[0]


def airy_ai_prime(x: float) -> float:
    """Derivative ``Ai'(x)`` on ``[-20, 200]``."""
    return _ai_pair(_check(x))[1]


def _gi_asymptotic(x: float) -> tuple[float, float]:
    # Gi(x) ~ (1/(pi x)) sum_k (3k)! / (k! (3 x^3)^k)
    val, der = 1.0 / x, -1.0 / x**2
    coef = 1.0
    last = math.inf
    for k in range(1, 40):
        coef *= (3 * k) * (3 * k - 1) * (3 * k - 2) / (3.0 * k)
        term = coef / x ** (3 * k + 1)
        if term >= last:
            break
        val += term
        der -= (3 * k + 1) * coef / x ** (3 * k + 2)
        last = term
        if term < 1e-17 * val:
            break
    return val / math.pi, der / math.pi


def _gi_integral(x: float) -> tuple[float, float]:
    a = 0.5 * math.sqrt(3.0) * x
    top = min(90.0 / x, 45.0 ** (1.0 / 3.0) * 1.5)

    def damp(u):
        return math.exp(-u**3 / 3.0 - 0.5 * x * u)

    g, _ = integrate.quad(lambda u: damp(u) * math.sin(a * u + math.pi / 6.0), 0.0, top, **_QUAD)
    gp, _ = integrate.quad(lambda u: u * damp(u) * math.cos(a * u + math.pi / 3.0), 0.0, top, **_QUAD)
    return g / math.pi, gp / math.pi


def _gi_pair(x: float) -> tuple[float, float]:
    if x <= 0.0:
        return _negative_axis(x, 1)
    if x <= _SERIES_EDGE:
        return _taylor(0.0, GI0, GIP0, -1.0 / math.pi, x)
    if x <= _GI_ASYMPTOTIC_EDGE:
        return _gi_integral(x)
    return _gi_asymptotic(x)


def scorer_gi(x: float) -> float:
    """Scorer function ``Gi(x)`` on ``[-20, 200]``.

    Examples
    --------
    >>> round(scorer_gi(0.0), 9)
    0.204975562
    """
    return _gi_pair(_check(x))[0]


def scorer_gi_prime(x: float) -> float:
    """Derivative ``Gi'(x)`` on ``[-20, 200]``."""
    return _gi_pair(_check(x))[1]


_AI_TAIL_START = 12.0


def _ai_tail(x: float) -> float:
    """``int_x^inf Ai`` for large ``x`` from the leading asymptotic terms."""
    z = _zeta_of(x)
    return math.exp(-z) / (2.0 * math.sqrt(math.pi) * x**0.75) * (1.0 - 41.0 / (72.0 * z))


def airy_integral_AI(x: float) -> float:
    """``AI(x) = int_x^inf Ai(y) dy`` for ``x`` in ``[-20, 200]``.

    Adaptive quadrature of :func:`airy_ai` up to 12 plus an asymptotic
    tail, which is below 1e-12 there.
    """
    x = _check(x)
    upper = max(x, _AI_TAIL_START)
    body = 0.0
    if x < upper:
        pts = [p for p in np.arange(math.ceil(x), upper, 1.0) if p > x]
        body, _ = integrate.quad(airy_ai, x, upper, points=pts or None, limit=400, epsabs=1e-14, epsrel=1e-13)
    return body + _ai_tail(upper)


@dataclass(frozen=True)
class ZetaParams:
    """Arguments of the Laplace kernel: ``s > 0``, real ``x``, ``theta > 0``."""

    s: float
    x: float
    theta: float

    def __post_init__(self):
        if not (self.s > 0 and self.theta > 0):
            raise DomainError("s and theta must be positive")


CONTINUITY_TOL = 1e-7


def _zeta_parts(s: float, theta: float):
    y0 = theta ** (-2.0 / 3.0) * s
    ai, aip = _ai_pair(_check(y0))
    gi, gip = _gi_pair(y0)
    t13 = theta ** (1.0 / 3.0)
    t23 = theta ** (2.0 / 3.0)
    rs = math.sqrt(s)
    denom = rs * ai - t13 * aip
    if abs(denom) < 1e-12:
        raise NumericError(f"denominator sqrt(s) Ai - theta^(1/3) Ai' = {denom:.3e} is too small")
    coef_plus = (math.pi * (t13 * gip - rs * gi) + t23 / rs) / denom
    coef_minus = (t23 / rs * ai + t13 * airy_integral_AI(y0)) / denom - t23 / s
    return coef_plus, coef_minus, y0


def zeta_plus(s: float, x: float, theta: float) -> float:
    b, _, y0 = _zeta_parts(s, theta)
    y = math.sqrt(2.0) * theta ** (1.0 / 3.0) * x + y0
    ai, _ = _ai_pair(_check(y))
    gi, _ = _gi_pair(y)
    return b * ai + math.pi * gi


def zeta_minus(s: float, x: float, theta: float) -> float:
    _, a, _ = _zeta_parts(s, theta)
    t23 = theta ** (2.0 / 3.0)
    return a * math.exp(math.sqrt(2.0 * s) * x) + t23 / s


def zeta(params: ZetaParams) -> float:
    """Laplace kernel with ``int_0^inf e^{-st} E exp(-sqrt(2) theta int_0^t (x+W)_+) dt = theta^{-2/3} zeta``.

    The two branches are evaluated at ``x = 0`` on every call and must
    agree to ``CONTINUITY_TOL``.

    Raises
    ------
    NumericError
        On a vanishing denominator or a failed continuity check.
    """
    s, x, theta = params.s, params.x, params.theta
    gap = abs(zeta_minus(s, 0.0, theta) - zeta_plus(s, 0.0, theta))
    if gap > CONTINUITY_TOL:
        raise NumericError(f"zeta branches disagree at x = 0 by {gap:.3e}")
    return zeta_minus(s, x, theta) if x < 0 else zeta_plus(s, x, theta)
