"""Student's t-tests, one-way ANOVA and the regularized incomplete beta function."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

from .errors import DomainError

DEFAULT_THRESHOLD = 0.05
DEGENERATE_VARIANCE = "DegenerateVariance"

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXITER = 10_000


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: tuple[float, ...]
    p_value: float
    significant: bool
    note: str | None = None

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        d = asdict(self)
        d["df"] = list(self.df)
        return d


def _result(statistic: float, df: tuple[float, ...], p: float, threshold: float, note: str | None = None) -> TestResult:
    p = min(1.0, max(0.0, p))
    return TestResult(float(statistic), df, p, p < threshold, note)


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise DomainError(f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}")


def reg_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), the regularized incomplete beta function."""
    if not (a > 0 and b > 0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"shape parameters must be positive and finite, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    # the fraction converges fast only on this side of the mode; reflect otherwise
    if x < (a + 1.0) / (a + b + 2.0):
        return min(1.0, front * _betacf(a, b, x) / a)
    return max(0.0, 1.0 - front * _betacf(b, a, 1.0 - x) / b)


def t_two_sided_p(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return reg_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def f_upper_p(f: float, df1: float, df2: float) -> float:
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    return reg_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def _ss(xs: Sequence[float], m: float) -> float:
    return math.fsum((x - m) ** 2 for x in xs)


def t_test_two_sample(xs: Sequence[float], ys: Sequence[float], threshold: float = DEFAULT_THRESHOLD) -> TestResult:
    """Pooled-variance two-sided Student's t-test."""
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    if len(xs) < 2 or len(ys) < 2:
        raise DomainError("each sample needs at least two observations")
    nx, ny = len(xs), len(ys)
    mx, my = _mean(xs), _mean(ys)
    df = nx + ny - 2
    pooled = (_ss(xs, mx) + _ss(ys, my)) / df
    diff = mx - my
    if pooled == 0.0:
        if diff == 0.0:
            return _result(0.0, (df,), 1.0, threshold)
        return _result(math.copysign(math.inf, diff), (df,), 0.0, threshold, DEGENERATE_VARIANCE)
    t = diff / math.sqrt(pooled * (1.0 / nx + 1.0 / ny))
    return _result(t, (df,), t_two_sided_p(t, df), threshold)


def t_test_one_sample(xs: Sequence[float], mu: float, threshold: float = DEFAULT_THRESHOLD) -> TestResult:
    """Two-sided one-sample t-test of ``xs`` against the reference value ``mu``."""
    xs = [float(x) for x in xs]
    if len(xs) < 2:
        raise DomainError("the sample needs at least two observations")
    n = len(xs)
    m = _mean(xs)
    df = n - 1
    var = _ss(xs, m) / df
    diff = m - float(mu)
    if var == 0.0:
        if diff == 0.0:
            return _result(0.0, (df,), 1.0, threshold)
        return _result(math.copysign(math.inf, diff), (df,), 0.0, threshold, DEGENERATE_VARIANCE)
    t = diff / math.sqrt(var / n)
    return _result(t, (df,), t_two_sided_p(t, df), threshold)


def anova_one_way(groups: Sequence[Sequence[float]], threshold: float = DEFAULT_THRESHOLD) -> TestResult:
    """One-way ANOVA F test across ``groups``."""
    groups = [[float(x) for x in g] for g in groups]
    if len(groups) < 2:
        raise DomainError("ANOVA needs at least two groups")
    if any(len(g) < 2 for g in groups):
        raise DomainError("every ANOVA group needs at least two observations")
    k = len(groups)
    n = sum(len(g) for g in groups)
    means = [_mean(g) for g in groups]
    grand = math.fsum(math.fsum(g) for g in groups) / n
    ss_between = math.fsum(len(g) * (m - grand) ** 2 for g, m in zip(groups, means))
    ss_within = math.fsum(_ss(g, m) for g, m in zip(groups, means))
    df1, df2 = k - 1, n - k
    if ss_within == 0.0:
        if ss_between == 0.0:
            return _result(0.0, (df1, df2), 1.0, threshold)
        return _result(math.inf, (df1, df2), 0.0, threshold, DEGENERATE_VARIANCE)
    f = (ss_between / df1) / (ss_within / df2)
    return _result(f, (df1, df2), f_upper_p(f, df1, df2), threshold)
