"""Sample-based risk estimators: PoF, quantile, superquantile, buffered PoF.

All estimators consume a :class:`SampleSet` of limit-state (or objective)
evaluations with uniform weights 1/m.  Two independent characterizations are
provided for the superquantile (tail-sum and minimization form) and for the
buffered PoF (descending tail-average scan and ratio minimization); tests
cross-check them against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

__all__ = [
    "SampleSet",
    "RiskSpec",
    "RiskEstimate",
    "estimate_pof",
    "estimate_quantile",
    "estimate_superquantile",
    "estimate_superquantile_minform",
    "estimate_bpof_alg2",
    "estimate_bpof_minform",
    "analytic_threepoint",
    "threepoint_superquantile",
    "sample_threepoint",
    "bootstrap_std_error",
]

THREE_POINT_VALUES = np.array([-1.0, 0.0, 1.0])
THREE_POINT_PROBS = np.array([0.8, 0.1, 0.1])


@dataclass(frozen=True)
class SampleSet:
    """A batch of scalar evaluations with implied uniform weight 1/m."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("SampleSet must contain at least one value")
        if not np.all(np.isfinite(v)):
            raise ValueError("SampleSet values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class RiskSpec:
    """Tagged risk-measure description.

    kind is one of "pof", "quantile", "superquantile", "bpof"; ``level`` is
    the probability level alpha for quantile kinds and the threshold t for
    PoF kinds.
    """

    kind: str
    level: float

    def __post_init__(self):
        if self.kind not in ("pof", "quantile", "superquantile", "bpof"):
            raise ValueError(f"unknown risk kind {self.kind!r}")
        if self.kind in ("quantile", "superquantile") and not 0.0 < self.level < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class RiskEstimate:
    """Point estimate with optional standard error and auxiliary minimizer.

    ``aux`` carries the quantile anchor gamma* for the superquantile and the
    buffer threshold lambda* for the buffered PoF.
    """

    value: float
    m: int
    std_error: Optional[float] = None
    aux: Optional[float] = None
    certified: Optional[bool] = None  # set by adaptive estimators only


def evaluate(s: SampleSet, spec: RiskSpec) -> RiskEstimate:
    """Dispatch a RiskSpec to the matching estimator."""
    if spec.kind == "pof":
        return estimate_pof(s, spec.level)
    if spec.kind == "quantile":
        return estimate_quantile(s, spec.level)
    if spec.kind == "superquantile":
        return estimate_superquantile(s, spec.level)
    return estimate_bpof_alg2(s, spec.level)


def estimate_pof(s: SampleSet, t: float) -> RiskEstimate:
    """Fraction of samples strictly exceeding t, with binomial std error."""
    m = s.m
    p = float(np.count_nonzero(s.values > t)) / m
    se = float(np.sqrt(p * (1.0 - p) / m))
    return RiskEstimate(value=p, m=m, std_error=se)


def _quantile_index(m: int, alpha: float) -> int:
    # index into the descending order statistics, 1-based
    return int(np.ceil(m * (1.0 - alpha)))


def estimate_quantile(s: SampleSet, alpha: float) -> RiskEstimate:
    """k-th largest sample with k = ceil(m (1 - alpha))."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    desc = np.sort(s.values)[::-1]
    k = _quantile_index(s.m, alpha)
    return RiskEstimate(value=float(desc[k - 1]), m=s.m)


def estimate_superquantile(s: SampleSet, alpha: float) -> RiskEstimate:
    """Quantile plus the normalized hinge sum above it.

    value = Q + (1 / (m (1-alpha))) * sum_i [g_i - Q]+, aux = Q.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    q = estimate_quantile(s, alpha).value
    # accumulate over sorted values so the reduction order is deterministic
    excess = np.sort(np.maximum(s.values - q, 0.0))
    value = q + float(np.sum(excess)) / (s.m * (1.0 - alpha))
    return RiskEstimate(value=value, m=s.m, aux=q)


def estimate_superquantile_minform(s: SampleSet, alpha: float) -> RiskEstimate:
    """min over gamma of gamma + (1/(m(1-alpha))) sum [g_i - gamma]+.

    The minimizer is attained at a sample point, so the scan is exact over
    the order statistics.  Agrees with :func:`estimate_superquantile`.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    v = np.sort(s.values)  # ascending
    m = s.m
    # hinge sums at gamma = v[j]: sum_{i>j} (v[i] - v[j])
    suffix = np.cumsum(v[::-1])[::-1]  # suffix[j] = sum_{i >= j} v[i]
    counts = m - np.arange(m)
    hinge = suffix - counts * v  # sum over i >= j of (v[i] - v[j])
    obj = v + hinge / (m * (1.0 - alpha))
    j = int(np.argmin(obj))
    return RiskEstimate(value=float(obj[j]), m=m, aux=float(v[j]))


def estimate_bpof_alg2(s: SampleSet, t: float) -> RiskEstimate:
    """Buffered PoF via the descending tail-average scan.

    Grows the tail average over the k largest values until it falls below t
    and returns (k-1)/m.  Returns 0 when t is at or above the sample max
    (no buffer exists beyond the worst observed outcome) and 1 when even
    the full-sample mean is at least t.  Implemented with a prefix-sum pass
    over the sorted sample; equivalent to the literal loop.
    """
    v = np.sort(s.values)[::-1]
    m = s.m
    if v[0] <= t:
        return RiskEstimate(value=0.0, m=m, aux=None)
    prefix_mean = np.cumsum(v) / np.arange(1, m + 1)
    if prefix_mean[-1] >= t:
        return RiskEstimate(value=1.0, m=m, aux=None)
    # prefix_mean is non-increasing; first index (0-based) where mean < t
    k = int(np.searchsorted(-prefix_mean, -t, side="right")) + 1
    # k is the 1-based count at which the tail average first drops below t
    value = (k - 1) / m
    lam = float(v[k - 2]) if k >= 2 else None
    return RiskEstimate(value=value, m=m, aux=lam)


def estimate_bpof_minform(s: SampleSet, t: float) -> RiskEstimate:
    """Buffered PoF via min over lam < t of mean[(g - lam)+] / (t - lam).

    The empirical objective is piecewise smooth with sign-constant slope on
    each piece, so the exact minimum is attained at a sample value below t;
    the scan enumerates those breakpoints.  Agrees with the tail-average
    scan to within 1/m.
    """
    v = np.sort(s.values)
    m = s.m
    if v[-1] <= t:
        return RiskEstimate(value=0.0, m=m, aux=None)
    if float(np.mean(v)) >= t:
        return RiskEstimate(value=1.0, m=m, aux=None)

    cand = np.unique(v[v < t])
    if cand.size == 0:
        # only possible through rounding in the mean when every sample
        # effectively sits at t; all mass is at or beyond the threshold
        return RiskEstimate(value=1.0, m=m, aux=None)
    # hinge sums at lam = cand[j] via suffix sums over the full sorted sample
    idx = np.searchsorted(v, cand, side="right")
    suffix = np.concatenate([np.cumsum(v[::-1])[::-1], [0.0]])
    counts = m - idx
    hinge = suffix[idx] - counts * cand
    ratio = hinge / (m * (t - cand))
    j = int(np.argmin(ratio))
    return RiskEstimate(value=float(min(ratio[j], 1.0)), m=m, aux=float(cand[j]))


def analytic_threepoint(t: float) -> Tuple[float, float]:
    """Closed-form (PoF, bPoF) of the three-point law P(-1)=0.8, P(0)=P(1)=0.1."""
    if t < -1.0:
        pof = 1.0
    elif t < 0.0:
        pof = 0.2
    elif t < 1.0:
        pof = 0.1
    else:
        pof = 0.0

    if t < -0.7:
        bpof = 1.0
    elif t < 0.5:
        bpof = 0.3 / (t + 1.0)
    elif t < 1.0:
        bpof = 0.1 / t
    else:
        bpof = 0.0
    return pof, bpof


def threepoint_superquantile(alpha: float) -> float:
    """Closed-form superquantile of the three-point law (used as test oracle)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 1.0:
        return 1.0
    # tail expectation of the worst (1 - alpha) mass
    tail = 1.0 - alpha
    acc = 0.0
    remaining = tail
    for x, p in ((1.0, 0.1), (0.0, 0.1), (-1.0, 0.8)):
        take = min(p, remaining)
        acc += take * x
        remaining -= take
        if remaining <= 0:
            break
    return acc / tail


def sample_threepoint(m: int, seed: int, stream_id: int = 0) -> SampleSet:
    """Draws from the three-point law, stream-separated like sample_batch."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
    rng = np.random.Generator(np.random.PCG64(ss))
    vals = rng.choice(THREE_POINT_VALUES, size=m, p=THREE_POINT_PROBS)
    return SampleSet(vals)


def bootstrap_std_error(s: SampleSet, spec: RiskSpec, replicates: int = 200,
                        seed: int = 0) -> float:
    """Nonparametric bootstrap std error of a risk estimate."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    vals = np.empty(replicates)
    for r in range(replicates):
        resample = rng.choice(s.values, size=s.m, replace=True)
        vals[r] = evaluate(SampleSet(resample), spec).value
    return float(np.std(vals, ddof=1))
