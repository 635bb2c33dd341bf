"""Short column structural design benchmark.

A rectangular cross-section (w, h) under random axial force F, bending
moment M (correlated 0.5), and lognormal yield stress Y.  Failure when

    g = 4 M / (w h^2 Y) + F^2 / (w^2 h^2 Y^2) > t = 1.

Two model variants: the natural (w, h) parameterization, and the log-space
reformulation (x1, x2) = (ln w, ln h) in which both the area objective
e^{x1 + x2} and the limit state are convex.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from ..stochastics import CorrelationSpec, DistributionSpec, RandomBatch, lognormal, normal, sample_batch

__all__ = [
    "SHORT_COLUMN_SPECS",
    "SHORT_COLUMN_CORRELATION",
    "THRESHOLD",
    "short_column_limit_state",
    "short_column_convex_forms",
    "ShortColumnModel",
    "ShortColumnConvexModel",
]

# F (axial force), M (bending moment), Y (yield stress)
SHORT_COLUMN_SPECS = (
    normal(500.0, 100.0),
    normal(2000.0, 400.0),
    lognormal(5.0, 0.5),
)
SHORT_COLUMN_CORRELATION = CorrelationSpec(np.array([
    [1.0, 0.5, 0.0],
    [0.5, 1.0, 0.0],
    [0.0, 0.0, 1.0],
]))
THRESHOLD = 1.0

_W_BOUNDS = (5.0, 15.0)
_H_BOUNDS = (15.0, 25.0)


def short_column_limit_state(d, z) -> np.ndarray:
    """g = 4M/(w h^2 Y) + F^2/(w^2 h^2 Y^2); vectorized over rows of z."""
    w, h = float(d[0]), float(d[1])
    if w <= 0 or h <= 0:
        raise ValueError("w and h must be positive")
    z = np.atleast_2d(np.asarray(z, dtype=float))
    f, m, y = z[:, 0], z[:, 1], z[:, 2]
    if np.any(y <= 0):
        raise ValueError("yield stress must be positive")
    return 4.0 * m / (w * h**2 * y) + f**2 / (w**2 * h**2 * y**2)


def short_column_convex_forms(x, z) -> Tuple[np.ndarray, np.ndarray]:
    """(objective, limit state) in log variables; identical to the natural form.

    objective = e^{x1 + x2}; limit state = (4M/Y) e^{-x1-2x2} + (F^2/Y^2) e^{-2x1-2x2}.
    """
    x1, x2 = float(x[0]), float(x[1])
    z = np.atleast_2d(np.asarray(z, dtype=float))
    f, m, y = z[:, 0], z[:, 1], z[:, 2]
    obj = np.exp(x1 + x2)
    g = (4.0 * m / y) * np.exp(-x1 - 2.0 * x2) + (f**2 / y**2) * np.exp(-2.0 * x1 - 2.0 * x2)
    return np.full(z.shape[0], obj), g


class _ShortColumnBase:
    threshold = THRESHOLD
    specs = SHORT_COLUMN_SPECS
    correlation = SHORT_COLUMN_CORRELATION

    def sample(self, m: int, seed: int, stream_id: int = 0) -> RandomBatch:
        return sample_batch(self.specs, self.correlation, m, seed, stream_id)

    def mean_z(self) -> np.ndarray:
        return np.array([s.mean for s in self.specs])


class ShortColumnModel(_ShortColumnBase):
    """Natural (w, h) parameterization; objective is the cross-section area."""

    is_convex = False

    def __init__(self):
        self.design_bounds = np.array([_W_BOUNDS, _H_BOUNDS])

    def g_values(self, design, draws) -> np.ndarray:
        return short_column_limit_state(design, draws)

    def f_values(self, design, draws) -> np.ndarray:
        area = float(design[0]) * float(design[1])
        return np.full(np.atleast_2d(draws).shape[0], area)

    def initial_design(self) -> np.ndarray:
        return self.design_bounds.mean(axis=1)


class ShortColumnConvexModel(_ShortColumnBase):
    """Log-space (x1, x2) = (ln w, ln h) reformulation, convex in the design."""

    is_convex = True

    def __init__(self):
        self.design_bounds = np.log(np.array([_W_BOUNDS, _H_BOUNDS]))

    def g_values(self, design, draws) -> np.ndarray:
        return short_column_convex_forms(design, draws)[1]

    def f_values(self, design, draws) -> np.ndarray:
        return short_column_convex_forms(design, draws)[0]

    def g_grads(self, design, draws) -> np.ndarray:
        x1, x2 = float(design[0]), float(design[1])
        z = np.atleast_2d(np.asarray(draws, dtype=float))
        f, m, y = z[:, 0], z[:, 1], z[:, 2]
        t1 = (4.0 * m / y) * np.exp(-x1 - 2.0 * x2)
        t2 = (f**2 / y**2) * np.exp(-2.0 * x1 - 2.0 * x2)
        return np.column_stack([-t1 - 2.0 * t2, -2.0 * t1 - 2.0 * t2])

    def f_grads(self, design, draws) -> np.ndarray:
        x1, x2 = float(design[0]), float(design[1])
        a = np.exp(x1 + x2)
        n = np.atleast_2d(draws).shape[0]
        return np.full((n, 2), a)

    def initial_design(self) -> np.ndarray:
        return self.design_bounds.mean(axis=1)

    def to_natural(self, x) -> np.ndarray:
        return np.exp(np.asarray(x, dtype=float))

    def from_natural(self, d) -> np.ndarray:
        return np.log(np.asarray(d, dtype=float))
