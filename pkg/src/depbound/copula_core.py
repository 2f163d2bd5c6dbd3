"""Copulas and quasi-copulas: evaluation, volumes, survival functions, envelopes.

The common currency is an evaluable d-variate function on the unit cube.
Everything here is pure; empirical objects build their caches lazily and are
then safe to evaluate concurrently.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

__all__ = [
    "QuasiCopulaFn",
    "SurvivalFn",
    "Box",
    "EmpiricalCopula",
    "StudentTCopula",
    "frechet_lower",
    "frechet_upper",
    "lower_frechet",
    "upper_frechet",
    "independence",
    "volume",
    "survival",
    "survival_function",
    "reflected_survival",
    "min_convolution",
    "max_convolution",
    "check_quasicopula",
    "QuasiCopulaCheck",
    "pointwise_leq_on_grid",
    "sample_t_copula",
    "empirical_copula_eval",
]


def _points(u, dim):
    """Normalize a point or batch of points to shape (k, dim)."""
    pts = np.asarray(u, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {pts.shape}")
    return pts, single


class QuasiCopulaFn:
    """Evaluable d-variate function on [0,1]^d, callable on points or batches."""

    def __init__(self, dim, fn, label=""):
        if dim < 2:
            raise ValueError("dimension must be at least 2")
        self.dim = int(dim)
        self._fn = fn
        self.label = label

    def __call__(self, u):
        pts, single = _points(u, self.dim)
        out = np.asarray(self._fn(pts), dtype=float)
        return float(out[0]) if single else out

    def __repr__(self):
        return f"QuasiCopulaFn(dim={self.dim}, label={self.label!r})"


class SurvivalFn(QuasiCopulaFn):
    """Same calling convention, marks a (quasi-)survival function."""

    def __repr__(self):
        return f"SurvivalFn(dim={self.dim}, label={self.label!r})"


def frechet_lower(u):
    """W_d(u) = max(sum u_i - d + 1, 0), the lower Frechet-Hoeffding bound."""
    pts = np.asarray(u, dtype=float)
    d = pts.shape[-1]
    out = np.maximum(pts.sum(axis=-1) - d + 1.0, 0.0)
    return float(out) if pts.ndim == 1 else out


def frechet_upper(u):
    """M_d(u) = min_i u_i, the upper Frechet-Hoeffding bound."""
    pts = np.asarray(u, dtype=float)
    out = pts.min(axis=-1)
    return float(out) if pts.ndim == 1 else out


def lower_frechet(dim):
    return QuasiCopulaFn(dim, lambda p: np.maximum(p.sum(axis=1) - dim + 1.0, 0.0), label=f"W_{dim}")


def upper_frechet(dim):
    return QuasiCopulaFn(dim, lambda p: p.min(axis=1), label=f"M_{dim}")


def independence(dim):
    return QuasiCopulaFn(dim, lambda p: p.prod(axis=1), label=f"Pi_{dim}")


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [a_1,b_1] x ... x [a_d,b_d] with a <= b componentwise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box corners must be 1-d arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("box needs lower <= upper componentwise")

    @property
    def dim(self):
        return self.lower.size


def volume(f, box: Box) -> float:
    """f-volume of the box: the 2^d-corner inclusion-exclusion sum.

    The sign of a corner is (-1)^(number of lower coordinates chosen), so a
    d-increasing f yields nonnegative volumes.
    """
    d = box.dim
    bits = np.array(list(itertools.product((0, 1), repeat=d)), dtype=bool)
    corners = np.where(bits, box.upper, box.lower)
    signs = np.where((d - bits.sum(axis=1)) % 2 == 0, 1.0, -1.0)
    vals = np.asarray(f(corners), dtype=float)
    return float(signs @ vals)


def survival(c, u):
    """Mass of the upper orthant [u, 1]: P(U_1 > u_1, ..., U_d > u_d)."""
    if isinstance(c, EmpiricalCopula):
        return c.survival_eval(u)
    if isinstance(c, StudentTCopula):
        return c.backend.survival_eval(u)
    pts = np.asarray(u, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    d = pts.shape[1]
    acc = np.zeros(pts.shape[0])
    for bits in itertools.product((0, 1), repeat=d):
        mask = np.array(bits, dtype=bool)
        corner = np.where(mask, 1.0, pts)
        sign = 1.0 if (d - sum(bits)) % 2 == 0 else -1.0
        acc += sign * np.asarray(c(corner), dtype=float)
    return float(acc[0]) if single else acc


def survival_function(c) -> SurvivalFn:
    """Wrap the survival evaluation of c as a callable object."""
    dim = c.dim
    return SurvivalFn(dim, lambda pts: survival(c, pts), label=f"survival({getattr(c, 'label', c)})")


def reflected_survival(c) -> QuasiCopulaFn:
    """v -> survival(c, 1 - v); for a copula this is its survival copula."""
    dim = c.dim
    return QuasiCopulaFn(dim, lambda pts: survival(c, 1.0 - pts),
                         label=f"survival_copula({getattr(c, 'label', c)})")


def min_convolution(q, qp) -> QuasiCopulaFn:
    """Pointwise minimum of two quasi-copulas (again a quasi-copula)."""
    if q.dim != qp.dim:
        raise ValueError("dimension mismatch in convolution")
    return QuasiCopulaFn(q.dim, lambda pts: np.minimum(q(pts), qp(pts)),
                         label=f"min({q.label},{qp.label})")


def max_convolution(q, qp) -> QuasiCopulaFn:
    """Pointwise maximum of two quasi-copulas (again a quasi-copula)."""
    if q.dim != qp.dim:
        raise ValueError("dimension mismatch in convolution")
    return QuasiCopulaFn(q.dim, lambda pts: np.maximum(q(pts), qp(pts)),
                         label=f"max({q.label},{qp.label})")


@dataclass(frozen=True)
class QuasiCopulaCheck:
    """Worst grid violation per axiom; all ~0 for a genuine quasi-copula."""

    grounded: float        # |Q| at points with a zero coordinate
    margin: float          # |Q(1,..,t,..,1) - t|
    monotone: float        # most negative axis increment, as a positive number
    lipschitz: float       # largest axis increment above the grid step
    grid_resolution: int
    tol: float

    @property
    def ok(self):
        return max(self.grounded, self.margin, self.monotone, self.lipschitz) <= self.tol

    @property
    def worst(self):
        return max(self.grounded, self.margin, self.monotone, self.lipschitz)


def _lattice(dim, resolution):
    axis = np.linspace(0.0, 1.0, resolution + 1)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return axis, np.stack(mesh, axis=-1).reshape(-1, dim)


def check_quasicopula(f, grid_resolution: int = 16, tol: float = 1e-9) -> QuasiCopulaCheck:
    """Check groundedness, margins, monotonicity and the Lipschitz bound on a lattice."""
    if grid_resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    d = f.dim
    axis, pts = _lattice(d, grid_resolution)
    vals = np.asarray(f(pts), dtype=float).reshape((grid_resolution + 1,) * d)
    step = 1.0 / grid_resolution

    zero_mask = (pts == 0.0).any(axis=1)
    grounded = float(np.abs(np.asarray(f(pts[zero_mask]), dtype=float)).max()) if zero_mask.any() else 0.0

    margin = 0.0
    for i in range(d):
        edge = np.ones((axis.size, d))
        edge[:, i] = axis
        margin = max(margin, float(np.abs(np.asarray(f(edge), dtype=float) - axis).max()))

    monotone = 0.0
    lipschitz = 0.0
    for i in range(d):
        diffs = np.diff(vals, axis=i)
        monotone = max(monotone, float(np.maximum(-diffs, 0.0).max()))
        lipschitz = max(lipschitz, float(np.maximum(diffs - step, 0.0).max()))

    return QuasiCopulaCheck(grounded=grounded, margin=margin, monotone=monotone,
                            lipschitz=lipschitz, grid_resolution=grid_resolution, tol=tol)


def pointwise_leq_on_grid(q, qp, grid_resolution: int = 16, tol: float = 1e-12) -> bool:
    """True iff q <= qp + tol at every point of the inclusive lattice."""
    if q.dim != qp.dim:
        raise ValueError("dimension mismatch")
    _, pts = _lattice(q.dim, grid_resolution)
    return bool(np.all(np.asarray(q(pts)) <= np.asarray(qp(pts)) + tol))


class EmpiricalCopula:
    """Rank-transformed sample matrix evaluated as the empirical copula.

    ``eval`` counts the fraction of rank rows dominated componentwise.  A
    sorted row-max (row-min) cache accelerates evaluation at diagonal points,
    which is the hot path when bounding max/min aggregations.
    """

    def __init__(self, ranks, label="empirical"):
        r = np.asarray(ranks, dtype=float)
        if r.ndim != 2 or r.shape[1] < 2:
            raise ValueError("rank matrix must be (n, d) with d >= 2")
        if np.any(r < 0.0) or np.any(r > 1.0):
            raise ValueError("ranks must lie in [0, 1]")
        self.ranks = r
        self.label = label
        self._rowmax = None
        self._rowmin = None

    @classmethod
    def from_samples(cls, samples, label="empirical"):
        """Rank-transform columns to {1/n, ..., n/n}; ties get average ranks."""
        x = np.asarray(samples, dtype=float)
        if x.ndim != 2 or x.shape[1] < 2:
            raise ValueError("sample matrix must be (n, d) with d >= 2")
        ranks = stats.rankdata(x, axis=0, method="average") / x.shape[0]
        return cls(ranks, label=label)

    @property
    def dim(self):
        return self.ranks.shape[1]

    @property
    def n(self):
        return self.ranks.shape[0]

    def _rowmax_sorted(self):
        if self._rowmax is None:
            self._rowmax = np.sort(self.ranks.max(axis=1))
        return self._rowmax

    def _rowmin_sorted(self):
        if self._rowmin is None:
            self._rowmin = np.sort(self.ranks.min(axis=1))
        return self._rowmin

    def __call__(self, u):
        pts, single = _points(u, self.dim)
        out = np.empty(pts.shape[0])
        diag = np.all(pts == pts[:, :1], axis=1)
        if diag.any():
            rm = self._rowmax_sorted()
            out[diag] = np.searchsorted(rm, pts[diag, 0], side="right") / self.n
        for i in np.nonzero(~diag)[0]:
            out[i] = np.all(self.ranks <= pts[i], axis=1).mean()
        return float(out[0]) if single else out

    def survival_eval(self, u):
        """P(all ranks > u componentwise)."""
        pts, single = _points(u, self.dim)
        out = np.empty(pts.shape[0])
        diag = np.all(pts == pts[:, :1], axis=1)
        if diag.any():
            rm = self._rowmin_sorted()
            out[diag] = 1.0 - np.searchsorted(rm, pts[diag, 0], side="right") / self.n
        for i in np.nonzero(~diag)[0]:
            out[i] = np.all(self.ranks > pts[i], axis=1).mean()
        return float(out[0]) if single else out

    def _histogram(self, axes):
        # Right-closed binning: cell i along an axis collects ranks in
        # (a_{i-1} + eps, a_i + eps], so cumulative counts mean "rank <= a_i".
        edges = [np.concatenate(([-1.0], np.asarray(ax, dtype=float) + 1e-12)) for ax in axes]
        hist, _ = np.histogramdd(self.ranks, bins=edges)
        return hist

    def eval_on_grid(self, axes):
        """Copula values on the cartesian product of the given axis grids."""
        if len(axes) != self.dim:
            raise ValueError("one axis grid per dimension required")
        counts = self._histogram(axes)
        for ax in range(self.dim):
            counts = np.cumsum(counts, axis=ax)
        return counts / self.n

    def survival_on_grid(self, axes):
        """Survival values P(all ranks > a) on the cartesian product grid."""
        if len(axes) != self.dim:
            raise ValueError("one axis grid per dimension required")
        # extra top cell per axis so mass above the last grid value is kept
        edges = [np.concatenate(([-1.0], np.asarray(ax, dtype=float) + 1e-12, [2.0]))
                 for ax in axes]
        counts, _ = np.histogramdd(self.ranks, bins=edges)
        for ax in range(self.dim):
            counts = np.flip(np.cumsum(np.flip(counts, axis=ax), axis=ax), axis=ax)
        # rank > a_i componentwise <=> cell index >= i+1 along every axis
        return counts[(slice(1, None),) * self.dim] / self.n

    def save_csv(self, path):
        np.savetxt(path, self.ranks, delimiter=",", fmt="%.17g")

    @classmethod
    def load_csv(cls, path, label="empirical"):
        return cls(np.loadtxt(path, delimiter=",", ndmin=2), label=label)

    def __repr__(self):
        return f"EmpiricalCopula(n={self.n}, d={self.dim}, label={self.label!r})"


def empirical_copula_eval(e: EmpiricalCopula, u):
    """Fraction of rank-transformed rows <= u componentwise."""
    return e(u)


def sample_t_copula(d: int, rho: float, nu: float, n: int, seed: int,
                    label=None) -> EmpiricalCopula:
    """Draw n points from the equicorrelated Student-t copula, rank-transformed.

    The normal layer uses the one-factor representation
    Z_i = sqrt(rho) Z_0 + sqrt(1-rho) eps_i, the mixing variable is a
    chi-square(nu) drawn via gamma sampling, and the t cdf is the regularized
    incomplete beta (scipy's stdtr).  Deterministic given the seed.
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    if n < 1:
        raise ValueError("need at least one sample")
    if nu <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    if not (0.0 <= rho < 1.0):
        raise ValueError("equicorrelation must lie in [0, 1): the one-factor sampler "
                         "does not cover negative rho, and rho >= 1 is degenerate")
    rng = np.random.default_rng(seed)
    z = np.sqrt(rho) * rng.standard_normal(n)[:, None] \
        + np.sqrt(1.0 - rho) * rng.standard_normal((n, d))
    w = rng.gamma(nu / 2.0, 2.0, size=n)          # chi-square(nu)
    t = z * np.sqrt(nu / w)[:, None]
    u = special.stdtr(nu, t)
    return EmpiricalCopula.from_samples(u, label=label or f"t(d={d},rho={rho},nu={nu},n={n},seed={seed})")


@dataclass
class StudentTCopula:
    """Equicorrelated t-copula evaluated through a seeded empirical backend."""

    dim: int
    rho: float
    nu: float
    n_samples: int = 10 ** 6
    seed: int = 0
    _backend: EmpiricalCopula = field(default=None, repr=False, compare=False)

    @property
    def backend(self) -> EmpiricalCopula:
        if self._backend is None:
            self._backend = sample_t_copula(self.dim, self.rho, self.nu,
                                            self.n_samples, self.seed)
        return self._backend

    @property
    def label(self):
        return f"t(d={self.dim},rho={self.rho},nu={self.nu})"

    def __call__(self, u):
        return self.backend(u)
