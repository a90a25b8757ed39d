"""Group-comparison and correlation statistics.

The pipeline mirrors standard practice for small behavioral samples:
screen each variable with Shapiro-Wilk normality and Levene homogeneity
tests, then compare groups with a pooled-variance t test when the
screening passes and a Wilcoxon rank-sum test otherwise; correlate with
Pearson's r when both variables screen normal and Spearman's rho
otherwise. Post-hoc power for the two-sample t test uses the noncentral
t distribution.

Test statistics are computed from scratch (Shapiro-Wilk follows the
Royston polynomial approximation valid for 3 <= n <= 5000; the exact
rank-sum null distribution is counted by dynamic programming; the
noncentral t CDF is evaluated by adaptive quadrature). Classical
distribution functions (central t and F tails and quantiles) come from
scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy import integrate
from scipy import stats as sps
from scipy.special import ndtri

__all__ = [
    "TestResult",
    "PowerResult",
    "shapiro_wilk",
    "levene",
    "t_test_unpaired",
    "wilcoxon_rank_sum",
    "exact_rank_sum_counts",
    "pearson_r",
    "spearman_rho",
    "t_from_r",
    "cohens_d",
    "noncentral_t_cdf",
    "power_two_sample_t",
    "auto_compare",
    "auto_correlate",
]

#: Combined sample size up to which the tie-free rank-sum p-value is exact.
EXACT_RANK_SUM_LIMIT = 12


@dataclass(frozen=True)
class TestResult:
    """Outcome of one statistical test.

    ``screening`` carries the normality/homogeneity p-values when the
    result came out of one of the auto-routing entry points. ``degenerate``
    marks results whose sampling distribution collapsed (e.g. a perfect
    correlation, where the t transform diverges and p is reported as 0).
    """

    method: str
    statistic: float
    p_value: float
    n: tuple[int, ...]
    df: Optional[float] = None
    effect_size: Optional[float] = None
    screening: Optional[dict[str, float]] = None
    degenerate: bool = False

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


@dataclass(frozen=True)
class PowerResult:
    d: float
    delta: float
    t_crit: float
    df: int
    alpha: float
    power: float


def _as_1d(values: Sequence[float], name: str, minimum: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if len(arr) < minimum:
        raise ValueError(f"{name} needs at least {minimum} values, got {len(arr)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _midranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing the mean of their rank positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


# ---------------------------------------------------------------------------
# Shapiro-Wilk normality test (Royston's polynomial approximation).
# ---------------------------------------------------------------------------

_SW_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_SMALL_MU = (0.5440, -0.39978, 0.025054, -0.0006714)
_SW_SMALL_SIG = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_BIG_MU = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_BIG_SIG = (-0.4803, -0.082676, 0.0030302)


def _poly(coeffs: tuple[float, ...], x: float) -> float:
    return sum(c * x**i for i, c in enumerate(coeffs))


def _shapiro_weights(n: int) -> np.ndarray:
    m = ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    ssq = float(m @ m)
    rsn = 1.0 / math.sqrt(n)
    a = m / math.sqrt(ssq)
    a_n = a[-1] + _poly(_SW_C1, rsn)
    if n > 5:
        a_n1 = a[-2] + _poly(_SW_C2, rsn)
        phi = (ssq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
            1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2
        )
        a = m / math.sqrt(phi)
        a[-2], a[1] = a_n1, -a_n1
    else:
        phi = (ssq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
        a = m / math.sqrt(phi)
    a[-1], a[0] = a_n, -a_n
    return a


def shapiro_wilk(samples: Sequence[float]) -> TestResult:
    """W statistic and p-value for the hypothesis of normality.

    Valid for 3 <= n <= 5000. The p-value comes from the normalizing
    transforms of W fitted by Royston, which is what mainstream statistics
    software computes.
    """
    x = _as_1d(samples, "samples", minimum=3)
    n = len(x)
    if n > 5000:
        raise ValueError(f"samples supports at most 5000 values, got {n}")
    x = np.sort(x)
    if x[0] == x[-1]:
        raise ValueError("samples have zero variance")
    if n == 3:
        w_stat = (math.sqrt(0.5) * (x[2] - x[0])) ** 2 / float(np.sum((x - x.mean()) ** 2))
        w_stat = min(w_stat, 1.0)
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w_stat)) - math.asin(math.sqrt(0.75)))
        return TestResult("shapiro_wilk", float(w_stat), min(max(p, 0.0), 1.0), n=(n,))
    a = _shapiro_weights(n)
    w_stat = float(a @ x) ** 2 / float(np.sum((x - x.mean()) ** 2))
    w_stat = min(w_stat, 1.0)
    if w_stat == 1.0:
        # Data indistinguishable from the normal scores themselves.
        return TestResult("shapiro_wilk", 1.0, 1.0, n=(n,))
    if n <= 11:
        gamma = -2.273 + 0.459 * n
        if gamma - math.log(1.0 - w_stat) <= 0.0:
            return TestResult("shapiro_wilk", w_stat, 0.0, n=(n,))
        ws = -math.log(gamma - math.log(1.0 - w_stat))
        mu = _poly(_SW_SMALL_MU, float(n))
        sigma = math.exp(_poly(_SW_SMALL_SIG, float(n)))
    else:
        ws = math.log(1.0 - w_stat)
        logn = math.log(float(n))
        mu = _poly(_SW_BIG_MU, logn)
        sigma = math.exp(_poly(_SW_BIG_SIG, logn))
    p = _norm_sf((ws - mu) / sigma)
    return TestResult("shapiro_wilk", w_stat, min(max(p, 0.0), 1.0), n=(n,))


# ---------------------------------------------------------------------------
# Levene homogeneity test (mean-centered) and the t test family.
# ---------------------------------------------------------------------------


def levene(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Equality-of-variances F test on absolute deviations from group means.

    This is the classic mean-centered form. The reported df is the
    denominator n1 + n2 - 2; the numerator df is 1 for two groups.
    """
    xa = _as_1d(a, "a", minimum=2)
    xb = _as_1d(b, "b", minimum=2)
    za = np.abs(xa - xa.mean())
    zb = np.abs(xb - xb.mean())
    n1, n2 = len(za), len(zb)
    grand = (za.sum() + zb.sum()) / (n1 + n2)
    between = n1 * (za.mean() - grand) ** 2 + n2 * (zb.mean() - grand) ** 2
    within = float(np.sum((za - za.mean()) ** 2) + np.sum((zb - zb.mean()) ** 2))
    df = n1 + n2 - 2
    if between == 0.0:
        return TestResult("levene", 0.0, 1.0, n=(n1, n2), df=float(df))
    if within == 0.0:
        return TestResult("levene", math.inf, 0.0, n=(n1, n2), df=float(df), degenerate=True)
    f_stat = float(between / (within / df))
    p = float(sps.f.sf(f_stat, 1, df))
    return TestResult("levene", f_stat, p, n=(n1, n2), df=float(df))


def cohens_d(a: Sequence[float], b: Sequence[float]) -> float:
    """Standardized mean difference using the (n-1)-weighted pooled SD."""
    xa = _as_1d(a, "a", minimum=2)
    xb = _as_1d(b, "b", minimum=2)
    n1, n2 = len(xa), len(xb)
    pooled_var = (
        (n1 - 1) * np.var(xa, ddof=1) + (n2 - 1) * np.var(xb, ddof=1)
    ) / (n1 + n2 - 2)
    if pooled_var == 0.0:
        if xa.mean() == xb.mean():
            return 0.0
        raise ValueError("zero pooled variance with unequal means")
    return float((xa.mean() - xb.mean()) / math.sqrt(pooled_var))


def t_test_unpaired(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Pooled-variance Student t test, two-tailed, with Cohen's d attached."""
    xa = _as_1d(a, "a", minimum=2)
    xb = _as_1d(b, "b", minimum=2)
    n1, n2 = len(xa), len(xb)
    df = n1 + n2 - 2
    pooled_var = (
        (n1 - 1) * np.var(xa, ddof=1) + (n2 - 1) * np.var(xb, ddof=1)
    ) / df
    if pooled_var == 0.0:
        if xa.mean() == xb.mean():
            return TestResult("t_test", 0.0, 1.0, n=(n1, n2), df=float(df), effect_size=0.0)
        raise ValueError("zero pooled variance with unequal means")
    se = math.sqrt(pooled_var * (1.0 / n1 + 1.0 / n2))
    t_stat = float((xa.mean() - xb.mean()) / se)
    p = float(2.0 * sps.t.sf(abs(t_stat), df))
    d = float((xa.mean() - xb.mean()) / math.sqrt(pooled_var))
    return TestResult("t_test", t_stat, min(p, 1.0), n=(n1, n2), df=float(df), effect_size=d)


# ---------------------------------------------------------------------------
# Wilcoxon rank-sum test: exact null distribution by dynamic programming
# for small tie-free samples, tie-corrected normal approximation otherwise.
# ---------------------------------------------------------------------------


def _rank_sum_distribution(n_total: int, n_first: int) -> list[int]:
    """counts[s] = number of n_first-subsets of ranks {1..n_total} summing to s."""
    max_sum = n_first * (2 * n_total - n_first + 1) // 2
    counts = [[0] * (max_sum + 1) for _ in range(n_first + 1)]
    counts[0][0] = 1
    for rank in range(1, n_total + 1):
        for k in range(min(rank, n_first), 0, -1):
            row, prev = counts[k], counts[k - 1]
            for s in range(max_sum, rank - 1, -1):
                if prev[s - rank]:
                    row[s] += prev[s - rank]
    return counts[n_first]


def exact_rank_sum_counts(
    a: Sequence[float], b: Sequence[float]
) -> tuple[int, int, int]:
    """Exact tail counts of the rank-sum null distribution.

    Returns ``(n_le, n_ge, n_total)``: how many of the C(n1+n2, n1) equally
    likely rank assignments give a first-group rank sum <= (resp. >=) the
    observed one. Requires tie-free data.
    """
    xa = _as_1d(a, "a", minimum=1)
    xb = _as_1d(b, "b", minimum=1)
    combined = np.concatenate([xa, xb])
    if len(np.unique(combined)) != len(combined):
        raise ValueError("exact rank-sum counts require tie-free data")
    ranks = _midranks(combined)
    w_obs = int(round(ranks[: len(xa)].sum()))
    dist = _rank_sum_distribution(len(combined), len(xa))
    n_le = int(sum(dist[: w_obs + 1]))
    n_ge = int(sum(dist[w_obs:]))
    n_total = math.comb(len(combined), len(xa))
    return n_le, n_ge, n_total


def wilcoxon_rank_sum(
    a: Sequence[float], b: Sequence[float], method: str = "auto"
) -> TestResult:
    """Rank-sum comparison of two independent groups, two-tailed.

    The statistic is the midrank sum of the first group. With
    ``method="auto"`` the p-value is exact (full null enumeration via
    dynamic programming) for tie-free data with n1+n2 <= 12 and otherwise
    uses the normal approximation with tie and continuity corrections.
    ``"exact"``/``"approx"`` force one branch.
    """
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    xa = _as_1d(a, "a", minimum=1)
    xb = _as_1d(b, "b", minimum=1)
    n1, n2 = len(xa), len(xb)
    combined = np.concatenate([xa, xb])
    n = n1 + n2
    ranks = _midranks(combined)
    w_stat = float(ranks[:n1].sum())
    has_ties = len(np.unique(combined)) != n

    use_exact = method == "exact" or (method == "auto" and not has_ties and n <= EXACT_RANK_SUM_LIMIT)
    if use_exact:
        n_le, n_ge, n_total = exact_rank_sum_counts(xa, xb)
        p = min(1.0, 2.0 * min(n_le, n_ge) / n_total)
        return TestResult("wilcoxon", w_stat, p, n=(n1, n2))

    mu = n1 * (n + 1) / 2.0
    tie_term = 0.0
    if has_ties:
        _, tie_counts = np.unique(combined, return_counts=True)
        tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0.0:
        return TestResult("wilcoxon", w_stat, 1.0, n=(n1, n2))
    z = max(abs(w_stat - mu) - 0.5, 0.0) / math.sqrt(var)
    p = min(1.0, 2.0 * _norm_sf(z))
    return TestResult("wilcoxon", w_stat, p, n=(n1, n2))


# ---------------------------------------------------------------------------
# Correlation.
# ---------------------------------------------------------------------------


def t_from_r(r: float, n: int) -> float:
    """Significance transform of a correlation: t = r*sqrt(n-2)/sqrt(1-r^2)."""
    if not (-1.0 <= r <= 1.0):
        raise ValueError(f"correlation {r} outside [-1, 1]")
    if n < 3:
        raise ValueError("need n >= 3")
    if abs(r) == 1.0:
        return math.copysign(math.inf, r)
    return r * math.sqrt(n - 2) / math.sqrt(1.0 - r * r)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("zero variance in a correlation input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def _correlation_result(method: str, r: float, n: int) -> TestResult:
    df = float(n - 2)
    if abs(r) == 1.0:
        # Perfect (anti)correlation: the t transform diverges.
        stat = math.copysign(math.inf, r)
        return TestResult(method, stat, 0.0, n=(n,), df=df, effect_size=r, degenerate=True)
    t_stat = t_from_r(r, n)
    p = float(2.0 * sps.t.sf(abs(t_stat), n - 2))
    return TestResult(method, t_stat, min(p, 1.0), n=(n,), df=df, effect_size=r)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Pearson correlation; the statistic is the t transform, the effect
    size is r itself."""
    xv = _as_1d(x, "x", minimum=3)
    yv = _as_1d(y, "y", minimum=3)
    if len(xv) != len(yv):
        raise ValueError(f"length mismatch: {len(xv)} vs {len(yv)}")
    return _correlation_result("pearson", _pearson(xv, yv), len(xv))


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Spearman rank correlation: Pearson on midranks, p via the t
    approximation with n-2 degrees of freedom."""
    xv = _as_1d(x, "x", minimum=3)
    yv = _as_1d(y, "y", minimum=3)
    if len(xv) != len(yv):
        raise ValueError(f"length mismatch: {len(xv)} vs {len(yv)}")
    return _correlation_result("spearman", _pearson(_midranks(xv), _midranks(yv)), len(xv))


# ---------------------------------------------------------------------------
# Power analysis via the noncentral t distribution.
# ---------------------------------------------------------------------------


def _chi2_logpdf(x: float, df: float) -> float:
    half = df / 2.0
    return (half - 1.0) * math.log(x) - x / 2.0 - math.lgamma(half) - half * math.log(2.0)


def noncentral_t_cdf(t: float, df: float, delta: float) -> float:
    """CDF of the noncentral t distribution, by adaptive quadrature.

    Uses the scale-mixture representation T = (Z + delta) / sqrt(V/df)
    with V chi-square distributed, integrating the normal CDF against the
    chi-square density to an absolute tolerance well below 1e-8.
    """
    if df <= 0:
        raise ValueError("df must be positive")
    sqrt_df = math.sqrt(df)

    def integrand(v: float) -> float:
        if v <= 0.0:
            return 0.0
        z = t * math.sqrt(v) / sqrt_df - delta
        return (1.0 - _norm_sf(z)) * math.exp(_chi2_logpdf(v, df))

    # Split at the chi-square mean so the adaptive rule sees the peak.
    left, _ = integrate.quad(integrand, 0.0, df, epsabs=1e-11, epsrel=1e-11, limit=200)
    right, _ = integrate.quad(integrand, df, np.inf, epsabs=1e-11, epsrel=1e-11, limit=200)
    return min(1.0, max(0.0, left + right))


def power_two_sample_t(d: float, n1: int, n2: int, alpha: float) -> PowerResult:
    """Post-hoc power of the two-tailed pooled t test at effect size d.

    The noncentrality parameter is d*sqrt(n1*n2/(n1+n2)); power is the
    probability that |T'| exceeds the two-tailed critical t, including the
    (tiny, for positive d) lower-tail term.
    """
    if n1 < 2 or n2 < 2:
        raise ValueError("each group needs n >= 2")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    delta = d * math.sqrt(n1 * n2 / (n1 + n2))
    df = n1 + n2 - 2
    t_crit = float(sps.t.ppf(1.0 - alpha / 2.0, df))
    power = (1.0 - noncentral_t_cdf(t_crit, df, delta)) + noncentral_t_cdf(-t_crit, df, delta)
    return PowerResult(
        d=d, delta=delta, t_crit=t_crit, df=df, alpha=alpha, power=min(1.0, max(0.0, power))
    )


# ---------------------------------------------------------------------------
# Screened routing: parametric when normality and homogeneity hold.
# ---------------------------------------------------------------------------


def auto_compare(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> TestResult:
    """Compare two groups, choosing the test by screening.

    Runs Shapiro-Wilk on each group and Levene across them at the same
    alpha as the final test; all three passing selects the pooled t test,
    anything failing selects the rank-sum test. The screening p-values are
    attached to the result.
    """
    xa = _as_1d(a, "a", minimum=3)
    xb = _as_1d(b, "b", minimum=3)
    screening = {
        "shapiro_a": shapiro_wilk(xa).p_value,
        "shapiro_b": shapiro_wilk(xb).p_value,
        "levene": levene(xa, xb).p_value,
    }
    if all(p > alpha for p in screening.values()):
        result = t_test_unpaired(xa, xb)
    else:
        result = wilcoxon_rank_sum(xa, xb)
    return replace(result, screening=screening)


def auto_correlate(x: Sequence[float], y: Sequence[float], alpha: float = 0.05) -> TestResult:
    """Correlate two variables, choosing Pearson or Spearman by screening.

    Pearson when both variables pass Shapiro-Wilk at alpha, Spearman
    otherwise; the screening p-values are attached to the result.
    """
    xv = _as_1d(x, "x", minimum=3)
    yv = _as_1d(y, "y", minimum=3)
    if len(xv) != len(yv):
        raise ValueError(f"length mismatch: {len(xv)} vs {len(yv)}")
    screening = {
        "shapiro_x": shapiro_wilk(xv).p_value,
        "shapiro_y": shapiro_wilk(yv).p_value,
    }
    if all(p > alpha for p in screening.values()):
        result = pearson_r(xv, yv)
    else:
        result = spearman_rho(xv, yv)
    return replace(result, screening=screening)
