"""Nonparametric statistical battery and the distribution kernels it needs.

The paired permutation test flips signs of paired differences and uses
the paired t statistic. When all 2^n sign patterns fit inside the
resample budget they are enumerated and the p-value is exact; otherwise
r random patterns are drawn and the add-one-smoothed estimate
(count + 1) / (r + 1) keeps p away from zero. All tests are two-sided.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.stats import rankdata


class StatError(ValueError):
    """Statistical test preconditions violated."""


@dataclass(frozen=True)
class RngSpec:
    """Seed plus algorithm name, recorded in outputs for reproducibility.

    ``stream(label)`` derives an independent generator from (seed, label)
    so parallel tests produce schedule-independent results.
    """

    seed: int
    algorithm: str = "pcg64"

    def stream(self, label: str) -> np.random.Generator:
        key = zlib.crc32(label.encode("utf-8"))
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(key,))
        )


DEFAULT_RNG = RngSpec(seed=20240915)


@dataclass(frozen=True)
class StatResult:
    test: str  # "perm_paired" | "pearson" | "kruskal_wallis"
    statistic: float
    p_value: float
    n: int
    corrected: bool = False
    n_comparisons: int = 1
    note: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise StatError(f"p_value {self.p_value} outside [0, 1]")
        if self.corrected and self.n_comparisons < 1:
            raise StatError("corrected result needs n_comparisons >= 1")


def _paired_t(d: np.ndarray, axis: int = -1) -> np.ndarray:
    n = d.shape[axis]
    mean = d.mean(axis=axis)
    sd = d.std(axis=axis, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = mean / (sd / np.sqrt(n))
        # zero spread with nonzero mean is a legitimate +/- infinity
        t = np.where(sd == 0, np.sign(mean) * np.inf, t)
    return t


def _all_sign_patterns(n: int) -> np.ndarray:
    codes = np.arange(2**n, dtype=np.int64)[:, None]
    return ((codes >> np.arange(n)) & 1) * 2 - 1


def perm_paired(
    a,
    b,
    r: int = 1000,
    rng: RngSpec = DEFAULT_RNG,
    method: str = "auto",
    stream: str = "perm_paired",
) -> StatResult:
    """Two-sided paired sign-flip permutation test on d = a - b.

    method="auto" enumerates all sign patterns exactly whenever
    2^n <= r, and samples r patterns otherwise. ``stream`` names the
    random stream derived from (rng.seed, stream), so distinct tests run
    on independent sign patterns regardless of execution order.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise StatError(f"paired samples must be equal-length 1D, got {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise StatError(f"need n >= 2 pairs, got {n}")
    if method not in ("auto", "exact", "sample"):
        raise StatError(f"method must be auto/exact/sample, got {method!r}")
    d = a - b
    if np.all(d == 0):
        return StatResult(
            test="perm_paired",
            statistic=0.0,
            p_value=1.0,
            n=n,
            note="degenerate: all paired differences are zero",
        )
    t_obs = float(_paired_t(d))
    exact = method == "exact" or (method == "auto" and 2**n <= r)
    if exact and n > 20:
        raise StatError(
            f"exact enumeration of 2^{n} sign patterns is infeasible; use sampling"
        )
    if exact:
        signs = _all_sign_patterns(n)
        t_perm = _paired_t(signs * d, axis=1)
        count = int(np.count_nonzero(np.abs(t_perm) >= abs(t_obs)))
        p = count / signs.shape[0]
        note = f"exact enumeration of {signs.shape[0]} sign patterns"
    else:
        gen = rng.stream(stream)
        signs = gen.integers(0, 2, size=(r, n)) * 2 - 1
        t_perm = _paired_t(signs * d, axis=1)
        count = int(np.count_nonzero(np.abs(t_perm) >= abs(t_obs)))
        p = (count + 1) / (r + 1)
        note = f"sampled {r} sign patterns"
    return StatResult(
        test="perm_paired",
        statistic=t_obs,
        p_value=float(p),
        n=n,
        note=note,
        extra={"seed": rng.seed, "algorithm": rng.algorithm, "exact": exact},
    )


def student_t_sf(t: float, df: int) -> float:
    """Upper-tail probability of Student's t via regularized incomplete beta."""
    if df < 1:
        raise StatError(f"df must be >= 1, got {df}")
    t = float(t)
    if np.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    half_tail = 0.5 * special.betainc(df / 2.0, 0.5, x)
    return half_tail if t >= 0 else 1.0 - half_tail


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail probability of chi-square: Q(df/2, x/2)."""
    if df < 1:
        raise StatError(f"df must be >= 1, got {df}")
    if x < 0:
        raise StatError(f"chi-square statistic must be >= 0, got {x}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def pearson(x, y) -> StatResult:
    """Product-moment correlation with parametric two-sided p-value.

    p maps r through t = r * sqrt((n-2) / (1-r^2)) onto Student's t with
    n - 2 degrees of freedom.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise StatError(f"samples must be equal-length 1D, got {x.shape} vs {y.shape}")
    n = x.size
    if n < 3:
        raise StatError(f"correlation needs n >= 3, got {n}")
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(xm @ xm)
    syy = float(ym @ ym)
    if sxx == 0 or syy == 0:
        raise StatError("zero variance in at least one variable")
    r = float(np.clip(xm @ ym / np.sqrt(sxx * syy), -1.0, 1.0))
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = abs(r) * np.sqrt((n - 2) / (1.0 - r * r))
        p = 2.0 * student_t_sf(t, n - 2)
    return StatResult(test="pearson", statistic=r, p_value=min(p, 1.0), n=n)


def kruskal_wallis(groups) -> StatResult:
    """Rank-based one-way analysis of variance with midrank tie correction."""
    groups = [np.asarray(g, dtype=float) for g in groups]
    if len(groups) < 2:
        raise StatError(f"need >= 2 groups, got {len(groups)}")
    if any(g.ndim != 1 or g.size == 0 for g in groups):
        raise StatError("every group must be a nonempty 1D sample")
    pooled = np.concatenate(groups)
    n_total = pooled.size
    if n_total < 3:
        raise StatError(f"need >= 3 observations in total, got {n_total}")
    if np.all(pooled == pooled[0]):
        return StatResult(
            test="kruskal_wallis",
            statistic=0.0,
            p_value=1.0,
            n=n_total,
            note="degenerate: all values identical",
        )
    ranks = rankdata(pooled, method="average")
    h = 0.0
    offset = 0
    for g in groups:
        r_sum = ranks[offset : offset + g.size].sum()
        h += r_sum * r_sum / g.size
        offset += g.size
    h = 12.0 / (n_total * (n_total + 1)) * h - 3.0 * (n_total + 1)
    _, counts = np.unique(pooled, return_counts=True)
    ties = float(np.sum(counts**3 - counts))
    h /= 1.0 - ties / (n_total**3 - n_total)
    return StatResult(
        test="kruskal_wallis",
        statistic=float(h),
        p_value=chi_square_sf(max(h, 0.0), len(groups) - 1),
        n=n_total,
    )


def bonferroni(p_values) -> list[float]:
    """Multiply each p by the family size and clamp at 1."""
    ps = list(p_values)
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise StatError(f"p-value {p} outside [0, 1]")
    m = len(ps)
    return [min(1.0, p * m) for p in ps]
