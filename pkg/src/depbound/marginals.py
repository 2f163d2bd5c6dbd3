"""Univariate marginals with the generalized-inverse machinery.

Every distribution exposes the same four operations: a right-continuous cdf,
its left-continuous version, the generalized inverse ``quantile(p) =
inf{x : F(x) > p}``, and a grid discretization consumed by the rearrangement
solver.  Evaluators accept scalars or numpy arrays and are pure, so marginal
objects can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Marginal",
    "Pareto2",
    "EmpiricalSamples",
    "QuantileTable",
    "ScaledMarginal",
    "DiscretizedMarginal",
    "discretize",
    "scale",
    "empirical_from_simulation",
]


def _check_prob(p):
    """Validate quantile arguments: p must lie in [0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0.0):
        raise ValueError("probability must be >= 0")
    if np.any(p >= 1.0):
        raise ValueError("quantile undefined at 1 for unbounded support")
    return p


def _match(x, out):
    """Return a scalar when the input was a scalar."""
    return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out


class Marginal:
    """Interface shared by all univariate laws in this package."""

    def cdf(self, x):
        raise NotImplementedError

    def left_cdf(self, x):
        """Left-continuous version of the cdf, F(x-)."""
        raise NotImplementedError

    def quantile(self, p):
        """Generalized inverse inf{x : F(x) > p}, defined for p in [0, 1)."""
        raise NotImplementedError


class Pareto2(Marginal):
    """Pareto law with fixed shape 2 and support x >= 0: F(x) = 1 - (1+x)^-2."""

    def cdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _match(x, np.where(xa < 0.0, 0.0, 1.0 - (1.0 + np.maximum(xa, 0.0)) ** -2))

    def left_cdf(self, x):
        return self.cdf(x)

    def quantile(self, p):
        pa = _check_prob(p)
        return _match(p, (1.0 - pa) ** -0.5 - 1.0)

    def __repr__(self):
        return "Pareto2()"


class EmpiricalSamples(Marginal):
    """Empirical law of a sample: right-continuous steps of height 1/n."""

    def __init__(self, samples):
        xs = np.sort(np.asarray(samples, dtype=float))
        if xs.size == 0:
            raise ValueError("empirical marginal needs at least one sample")
        if not np.all(np.isfinite(xs)):
            raise ValueError("samples must be finite")
        self.samples = xs
        self.n = xs.size
        # F(samples[k]) = (k+1)/n; kept as the exact grid the quantile inverts
        self._cum = np.arange(1, self.n + 1) / self.n

    def cdf(self, x):
        return _match(x, np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right") / self.n)

    def left_cdf(self, x):
        return _match(x, np.searchsorted(self.samples, np.asarray(x, dtype=float), side="left") / self.n)

    def quantile(self, p):
        pa = _check_prob(p)
        idx = np.searchsorted(self._cum, pa, side="right")
        return _match(p, self.samples[idx])

    def __repr__(self):
        return f"EmpiricalSamples(n={self.n})"


class QuantileTable(Marginal):
    """Law given by a probability grid and matching quantile values.

    The inverse is piecewise constant and right-continuous, which keeps the
    generalized-inverse identities exact on the grid (no interpolation).
    """

    def __init__(self, probs, quantiles):
        ps = np.asarray(probs, dtype=float)
        qs = np.asarray(quantiles, dtype=float)
        if ps.ndim != 1 or ps.shape != qs.shape or ps.size == 0:
            raise ValueError("probability and quantile grids must be equal-length 1-d arrays")
        if np.any(ps < 0.0) or np.any(ps > 1.0):
            raise ValueError("probability grid must lie in [0, 1]")
        if np.any(np.diff(ps) <= 0.0):
            raise ValueError("probability grid must be strictly increasing")
        if np.any(np.diff(qs) < 0.0):
            raise ValueError("quantile values must be nondecreasing")
        self.probs = ps
        self.quantiles = qs

    def cdf(self, x):
        idx = np.searchsorted(self.quantiles, np.asarray(x, dtype=float), side="right") - 1
        out = np.where(idx >= 0, self.probs[np.maximum(idx, 0)], 0.0)
        return _match(x, out)

    def left_cdf(self, x):
        idx = np.searchsorted(self.quantiles, np.asarray(x, dtype=float), side="left") - 1
        out = np.where(idx >= 0, self.probs[np.maximum(idx, 0)], 0.0)
        return _match(x, out)

    def quantile(self, p):
        pa = _check_prob(p)
        idx = np.minimum(np.searchsorted(self.probs, pa, side="left"), self.probs.size - 1)
        return _match(p, self.quantiles[idx])

    def __repr__(self):
        return f"QuantileTable(nodes={self.probs.size})"


class ScaledMarginal(Marginal):
    """Law of a * X for a base marginal X and a > 0."""

    def __init__(self, base, factor):
        if factor <= 0.0:
            raise ValueError("ScaledMarginal expects a strictly positive factor")
        if isinstance(base, ScaledMarginal):
            factor *= base.factor
            base = base.base
        self.base = base
        self.factor = float(factor)

    def cdf(self, x):
        return self.base.cdf(np.asarray(x, dtype=float) / self.factor)

    def left_cdf(self, x):
        return self.base.left_cdf(np.asarray(x, dtype=float) / self.factor)

    def quantile(self, p):
        q = self.base.quantile(p)
        return _match(p, self.factor * np.asarray(q, dtype=float))

    def __repr__(self):
        return f"ScaledMarginal({self.factor!r} * {self.base!r})"


def scale(m: Marginal, a: float) -> Marginal:
    """Law of a * X for a >= 0; a = 0 collapses to the point mass at zero."""
    if a < 0.0:
        raise ValueError("scale weight must be nonnegative")
    if a == 0.0:
        return EmpiricalSamples([0.0])
    if a == 1.0:
        return m
    return ScaledMarginal(m, a)


def empirical_from_simulation(samples) -> EmpiricalSamples:
    """Empirical marginal from simulated draws (e.g. partial maxima)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("cannot build an empirical marginal from an empty sample")
    return EmpiricalSamples(samples)


@dataclass(frozen=True)
class DiscretizedMarginal:
    """Quantile grid of one marginal over a probability sub-interval."""

    values: np.ndarray
    part: str                      # lower | midpoint | upper
    prange: tuple                  # (a, b) within [0, 1]

    def __post_init__(self):
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("discretization needs at least one value")
        if np.any(np.diff(self.values) < 0.0):
            raise ValueError("discretized values must be sorted ascending")


_PART_OFFSET = {"lower": 0.0, "midpoint": 0.5, "upper": 1.0}


def discretize(m: Marginal, n: int, part: str = "midpoint",
               prange=(0.0, 1.0), quantile_clip: float = 1e-9) -> DiscretizedMarginal:
    """Quantile grid of ``m`` on [a, b]: values[j] = quantile(a + (b-a)(j+o)/n).

    The offset o is 0 (lower), 0.5 (midpoint) or 1 (upper); the upper part is
    clipped at 1 - quantile_clip so unbounded supports stay finite.
    """
    if n < 1:
        raise ValueError("discretization needs n >= 1")
    if part not in _PART_OFFSET:
        raise ValueError(f"unknown discretization part {part!r}")
    a, b = float(prange[0]), float(prange[1])
    if not (0.0 <= a < b <= 1.0):
        raise ValueError("probability range must satisfy 0 <= a < b <= 1")
    offset = _PART_OFFSET[part]
    probs = a + (b - a) * (np.arange(n) + offset) / n
    probs = np.minimum(probs, 1.0 - quantile_clip)
    return DiscretizedMarginal(values=np.asarray(m.quantile(probs), dtype=float),
                               part=part, prange=(a, b))
