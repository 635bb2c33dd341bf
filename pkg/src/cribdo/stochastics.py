"""Seedable, stream-separated random-variate generation.

All sampling goes through a Gaussian copula: i.i.d. standard normals are
correlated through a symmetric square root of the correlation matrix and
then pushed through each marginal transform.  Identical (seed, stream_id)
always reproduce the same draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "DistributionSpec",
    "CorrelationSpec",
    "RandomBatch",
    "sample_batch",
    "truncated_normal_icdf",
    "normal",
    "lognormal",
    "truncated_normal",
    "lognormal_log_params",
]

_PSD_TOL = 1e-12


@dataclass(frozen=True)
class DistributionSpec:
    """Marginal distribution of one random input.

    ``mean`` and ``std_dev`` are always in natural units of the variable
    itself; for ``"lognormal"`` the log-space parameters are derived by
    moment matching.  ``truncation`` (lo, hi) applies to ``"truncated_normal"``
    only and is also in natural units.
    """

    kind: str  # "normal" | "lognormal" | "truncated_normal"
    mean: float
    std_dev: float
    truncation: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.kind not in ("normal", "lognormal", "truncated_normal"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not self.std_dev > 0:
            raise ValueError("std_dev must be positive")
        if self.kind == "lognormal" and not self.mean > 0:
            raise ValueError("lognormal mean must be positive")
        if self.kind == "truncated_normal":
            if self.truncation is None:
                raise ValueError("truncated_normal requires a truncation interval")
            lo, hi = self.truncation
            if not lo < hi:
                raise ValueError("truncation interval must satisfy lo < hi")
            a = (lo - self.mean) / self.std_dev
            b = (hi - self.mean) / self.std_dev
            if ndtr(b) - ndtr(a) <= 0.0:
                raise ValueError("truncation interval carries zero probability mass")
        elif self.truncation is not None:
            raise ValueError("truncation only applies to truncated_normal")


def normal(mean: float, std_dev: float) -> DistributionSpec:
    return DistributionSpec("normal", mean, std_dev)


def lognormal(mean: float, std_dev: float) -> DistributionSpec:
    return DistributionSpec("lognormal", mean, std_dev)


def truncated_normal(mean: float, std_dev: float, lo: float, hi: float) -> DistributionSpec:
    return DistributionSpec("truncated_normal", mean, std_dev, (lo, hi))


def lognormal_log_params(mean: float, std_dev: float) -> Tuple[float, float]:
    """Log-space (mu, sigma) matching a variable-space mean and std."""
    var = std_dev**2
    sigma2 = np.log1p(var / mean**2)
    mu = np.log(mean**2 / np.sqrt(mean**2 + var))
    return float(mu), float(np.sqrt(sigma2))


@dataclass(frozen=True)
class CorrelationSpec:
    """Correlation matrix applied to the underlying Gaussian components."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(m, m.T, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(m), 1.0, atol=1e-12):
            raise ValueError("correlation matrix must have unit diagonal")
        w = np.linalg.eigvalsh(m)
        if w.min() < -_PSD_TOL:
            raise ValueError(f"correlation matrix is not PSD (min eigenvalue {w.min():.3e})")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @staticmethod
    def identity(n: int) -> "CorrelationSpec":
        return CorrelationSpec(np.eye(n))

    def sqrt_factor(self) -> np.ndarray:
        """Symmetric PSD square root of the matrix."""
        w, v = np.linalg.eigh(self.matrix)
        w = np.clip(w, 0.0, None)
        return (v * np.sqrt(w)) @ v.T


@dataclass(frozen=True)
class RandomBatch:
    """A frozen m-by-n matrix of realizations plus its provenance."""

    draws: np.ndarray
    seed: int
    stream_id: int
    specs: Tuple[DistributionSpec, ...] = field(default=(), compare=False)

    @property
    def m(self) -> int:
        return self.draws.shape[0]

    def column(self, j: int) -> np.ndarray:
        return self.draws[:, j]


def _rng(seed: int, stream_id: int) -> np.random.Generator:
    # SeedSequence spawn keys give deterministic, non-overlapping streams.
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id,))
    return np.random.Generator(np.random.PCG64(ss))


def truncated_normal_icdf(u, mean: float, std_dev: float, lo: float, hi: float):
    """Inverse CDF of a normal restricted to [lo, hi].

    Strictly increasing in ``u`` on (0, 1); output always lies in [lo, hi].
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("u must lie strictly inside (0, 1)")
    a = (lo - mean) / std_dev
    b = (hi - mean) / std_dev
    fa, fb = ndtr(a), ndtr(b)
    x = mean + std_dev * ndtri(fa + u_arr * (fb - fa))
    x = np.clip(x, lo, hi)
    return float(x) if np.isscalar(u) else x


def _marginal_transform(spec: DistributionSpec, u_std_normal: np.ndarray) -> np.ndarray:
    if spec.kind == "normal":
        return spec.mean + spec.std_dev * u_std_normal
    if spec.kind == "lognormal":
        mu, sigma = lognormal_log_params(spec.mean, spec.std_dev)
        return np.exp(mu + sigma * u_std_normal)
    # truncated normal via probability transform of the Gaussian component
    lo, hi = spec.truncation
    p = np.clip(ndtr(u_std_normal), 1e-16, 1.0 - 1e-16)
    return truncated_normal_icdf(p, spec.mean, spec.std_dev, lo, hi)


def sample_batch(
    specs: Sequence[DistributionSpec],
    corr: Optional[CorrelationSpec],
    m: int,
    seed: int,
    stream_id: int = 0,
) -> RandomBatch:
    """Draw an m-by-len(specs) batch of correlated realizations.

    The Gaussian components are correlated with a symmetric factorization of
    ``corr``; each column then follows its marginal spec.  Deterministic in
    (seed, stream_id, m, specs).
    """
    specs = tuple(specs)
    if not specs:
        raise ValueError("spec list must not be empty")
    if m < 1:
        raise ValueError("m must be at least 1")
    n = len(specs)
    if corr is None:
        corr = CorrelationSpec.identity(n)
    if corr.dim != n:
        raise ValueError(f"correlation dimension {corr.dim} != number of components {n}")

    rng = _rng(seed, stream_id)
    u = rng.standard_normal((m, n))
    if not np.allclose(corr.matrix, np.eye(n)):
        u = u @ corr.sqrt_factor().T

    draws = np.empty((m, n))
    for j, spec in enumerate(specs):
        draws[:, j] = _marginal_transform(spec, u[:, j])
    draws.setflags(write=False)
    return RandomBatch(draws=draws, seed=seed, stream_id=stream_id, specs=specs)
