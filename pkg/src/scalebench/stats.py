"""Welch's unequal-variance t-test.

The two-sided p-value uses the identity
``P(|T_nu| >= |t|) = I_x(nu/2, 1/2)`` with ``x = nu / (nu + t^2)``, where
``I_x`` is the regularized incomplete beta function, evaluated with a
modified-Lentz continued fraction (converges well below 1e-10 absolute
for the degrees of freedom that occur here).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

_LENTZ_TINY = 1e-300
_LENTZ_EPS = 1e-15
_LENTZ_MAX_ITER = 500


@dataclass(frozen=True)
class WelchResult:
    t_stat: float
    dof: float
    p_value: float
    significant: bool
    alpha: float


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _LENTZ_TINY:
        d = _LENTZ_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _LENTZ_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _LENTZ_TINY:
            d = _LENTZ_TINY
        c = 1.0 + aa / c
        if abs(c) < _LENTZ_TINY:
            c = _LENTZ_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _LENTZ_TINY:
            d = _LENTZ_TINY
        c = 1.0 + aa / c
        if abs(c) < _LENTZ_TINY:
            c = _LENTZ_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _LENTZ_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0,1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the continued fraction on the side where it converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_sf_two_sided(t: float, dof: float) -> float:
    """P(|T_dof| >= |t|) for the Student t distribution."""
    if dof <= 0:
        raise ValueError(f"dof must be positive, got {dof}")
    if math.isinf(t):
        return 0.0
    x = dof / (dof + t * t)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x)


def _mean_and_var(sample) -> tuple[float, float]:
    n = len(sample)
    mean = sum(sample) / n
    var = sum((v - mean) ** 2 for v in sample) / (n - 1)
    return mean, var


def welch_t_test(a, b, alpha: float = 0.05) -> WelchResult:
    """Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.

    Degenerate convention when both samples have zero variance: p = 1 if
    the means are equal (t = 0), else p = 0 (t = +/-inf); dof falls back
    to n_a + n_b - 2 in that case.
    """
    if len(a) < 2 or len(b) < 2:
        raise ValueError("both samples need at least two observations")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    mean_a, var_a = _mean_and_var(a)
    mean_b, var_b = _mean_and_var(b)
    n_a, n_b = len(a), len(b)
    sa, sb = var_a / n_a, var_b / n_b

    if sa + sb == 0.0:
        if mean_a == mean_b:
            t, p = 0.0, 1.0
        else:
            t = math.inf if mean_a > mean_b else -math.inf
            p = 0.0
        dof = float(n_a + n_b - 2)
        return WelchResult(t, dof, p, p < alpha, alpha)

    t = (mean_a - mean_b) / math.sqrt(sa + sb)
    denom = sa * sa / (n_a - 1) + sb * sb / (n_b - 1)
    if denom == 0.0:  # squares of sub-normal variances can underflow
        dof = float(n_a + n_b - 2)
    else:
        dof = (sa + sb) ** 2 / denom
    p = student_t_sf_two_sided(t, dof)
    return WelchResult(t, dof, p, p < alpha, alpha)
