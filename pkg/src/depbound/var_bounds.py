"""Distribution-function bounds for aggregations and their inversion to VaR.

The sum case needs an optimization over the hyperplane x_1 + ... + x_d = s;
this is done by a coarse lattice (or random multistart in high dimension)
followed by pairwise golden-section polish that preserves the coordinate sum.
Reported values are certified one-sided: they are exact evaluations of the
objective at the best point found, so the lower bound never overstates the
supremum and the upper bound never understates the infimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HyperplaneSearch",
    "StandardSumBounds",
    "standard_bounds_sum",
    "improved_standard_lower",
    "improved_standard_upper",
    "max_min_aggregation_bounds",
    "BoundFunction",
    "VarInterval",
    "invert_to_var",
    "LevelUnattainableError",
]

_AGGREGATIONS = ("sum", "max", "min")

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class HyperplaneSearch:
    """Search budget for suprema/infima over the plane sum(x) = s."""

    coarse_resolution: int = None      # per-axis lattice points; default by dimension
    multistarts: int = 256             # random starts when the lattice is too large
    polish_rounds: int = 3
    golden_iterations: int = 48
    top_candidates: int = 3
    box_quantile_eps: float = 1e-9
    seed: int = 0

    def resolution(self, d):
        if self.coarse_resolution is not None:
            return self.coarse_resolution
        return 64 if d <= 3 else 16


def _search_box(marginals, eps):
    lo = np.array([m.quantile(0.0) for m in marginals])
    hi = np.array([m.quantile(1.0 - eps) for m in marginals])
    return lo, hi


def _polish(objective, start, lo, hi, cfg, maximize):
    """Pairwise mass transfers along e_i - e_j with golden-section line search."""
    x = start.copy()
    best = objective(x[None, :])[0]
    sign = 1.0 if maximize else -1.0
    d = x.size
    for _ in range(cfg.polish_rounds):
        improved = False
        for i in range(d):
            for j in range(i + 1, d):
                t_lo = max(lo[i] - x[i], x[j] - hi[j])
                t_hi = min(hi[i] - x[i], x[j] - lo[j])
                if t_hi <= t_lo:
                    continue
                a, b = t_lo, t_hi
                c1 = b - _GOLDEN * (b - a)
                c2 = a + _GOLDEN * (b - a)
                for _ in range(cfg.golden_iterations):
                    pts = np.array([x + c1 * _shift(d, i, j), x + c2 * _shift(d, i, j)])
                    f1, f2 = sign * objective(pts)
                    if f1 >= f2:
                        b, c2 = c2, c1
                        c1 = b - _GOLDEN * (b - a)
                    else:
                        a, c1 = c1, c2
                        c2 = a + _GOLDEN * (b - a)
                t = 0.5 * (a + b)
                cand = x + t * _shift(d, i, j)
                val = objective(cand[None, :])[0]
                if sign * val > sign * best + 1e-15:
                    x, best = cand, val
                    improved = True
        if not improved:
            break
    return best, x


def _shift(d, i, j):
    e = np.zeros(d)
    e[i] = 1.0
    e[j] = -1.0
    return e


def _hyperplane_points(d, s, lo, hi, cfg):
    """Coarse candidate points on sum(x) = s: lattice for small d, else random."""
    k = cfg.resolution(d)
    if k ** (d - 1) <= 70000:
        axes = [np.linspace(lo[i], hi[i], k) for i in range(d - 1)]
        mesh = np.meshgrid(*axes, indexing="ij")
        head = np.stack(mesh, axis=-1).reshape(-1, d - 1)
    else:
        rng = np.random.default_rng(cfg.seed)
        head = lo[:d - 1] + (hi[:d - 1] - lo[:d - 1]) * rng.random((cfg.multistarts, d - 1))
    last = s - head.sum(axis=1)
    return np.column_stack([head, last])


def _optimize_on_hyperplane(objective, marginals, s, cfg, maximize):
    d = len(marginals)
    lo, hi = _search_box(marginals, cfg.box_quantile_eps)
    pts = _hyperplane_points(d, s, lo, hi, cfg)
    vals = objective(pts)
    order = np.argsort(vals)
    picks = order[-cfg.top_candidates:] if maximize else order[:cfg.top_candidates]
    best_val, best_pt = (-np.inf, None) if maximize else (np.inf, None)
    # the polish box is padded so the last coordinate may sit outside the
    # quantile box (the objective saturates there)
    pad_lo = np.minimum(lo, pts[picks, :].min(axis=0))
    pad_hi = np.maximum(hi, pts[picks, :].max(axis=0))
    for idx in picks:
        val, pt = _polish(objective, pts[idx], pad_lo, pad_hi, cfg, maximize)
        if (maximize and val > best_val) or (not maximize and val < best_val):
            best_val, best_pt = val, pt
    return float(best_val), best_pt, pts.shape[0]


@dataclass(frozen=True)
class StandardSumBounds:
    """Marginals-only bounds on P(X_1 + ... + X_d <= s), with search metadata."""

    lower: float
    upper: float
    details: dict = field(default_factory=dict, compare=False)

    def __iter__(self):
        return iter((self.lower, self.upper))


def standard_bounds_sum(marginals, s, search: HyperplaneSearch = None) -> StandardSumBounds:
    """Lower/upper bounds on the df of the sum from the marginals alone.

    lower = max(sup over sum(u) = s of F_1^-(u_1) + sum_i>=2 F_i(u_i) - d + 1, 0)
    upper = min(inf over sum(u) = s of sum_i F_i^-(u_i), 1)
    """
    if len(marginals) < 2:
        raise ValueError("need at least two marginals")
    cfg = search or HyperplaneSearch()
    d = len(marginals)

    def obj_lower(pts):
        total = marginals[0].left_cdf(pts[:, 0]).copy()
        for i in range(1, d):
            total += marginals[i].cdf(pts[:, i])
        return total - d + 1.0

    def obj_upper(pts):
        total = marginals[0].left_cdf(pts[:, 0]).copy()
        for i in range(1, d):
            total += marginals[i].left_cdf(pts[:, i])
        return total

    lo_val, lo_pt, n1 = _optimize_on_hyperplane(obj_lower, marginals, s, cfg, maximize=True)
    hi_val, hi_pt, n2 = _optimize_on_hyperplane(obj_upper, marginals, s, cfg, maximize=False)
    return StandardSumBounds(
        lower=max(lo_val, 0.0),
        upper=min(hi_val, 1.0),
        details={"evaluations": int(n1 + n2),
                 "best_point_lower": None if lo_pt is None else lo_pt.tolist(),
                 "best_point_upper": None if hi_pt is None else hi_pt.tolist()},
    )


def _cdf_matrix(marginals, pts):
    return np.column_stack([m.cdf(pts[:, i]) for i, m in enumerate(marginals)])


def improved_standard_lower(kind, marginals, q_lower, s, search: HyperplaneSearch = None) -> float:
    """Lower bound on P(phi(X) < s) from a lower bound q_lower on the copula.

    For the sum the supremum over {phi < s} equals the supremum on the
    boundary plane (the objective is componentwise nondecreasing and the
    marginals left-continuous); for the max it is attained at
    (F_1(s), ..., F_d(s)) exactly.
    """
    if kind not in _AGGREGATIONS:
        raise ValueError(f"unknown aggregation {kind!r}")
    if kind == "min":
        raise ValueError("use the survival variant for the minimum")
    d = len(marginals)
    if kind == "max":
        u = np.array([m.cdf(s) for m in marginals])
        return float(q_lower(u))
    cfg = search or HyperplaneSearch()

    def objective(pts):
        return np.asarray(q_lower(_cdf_matrix(marginals, pts)), dtype=float)

    val, _, _ = _optimize_on_hyperplane(objective, marginals, s, cfg, maximize=True)
    return float(max(val, 0.0))


def improved_standard_upper(kind, marginals, upper_obj, s, search: HyperplaneSearch = None) -> float:
    """Upper bound on P(phi(X) < s).

    For the sum and the min, ``upper_obj`` is a lower bound on the survival
    function and the bound is inf 1 - S(F(x)); for the max, ``upper_obj`` is
    an upper bound on the copula itself evaluated at (F_1(s), ..., F_d(s)).
    """
    if kind not in _AGGREGATIONS:
        raise ValueError(f"unknown aggregation {kind!r}")
    u = np.array([m.cdf(s) for m in marginals])
    if kind == "max":
        return float(upper_obj(u))
    if kind == "min":
        return float(1.0 - upper_obj(u))
    cfg = search or HyperplaneSearch()

    def objective(pts):
        return 1.0 - np.asarray(upper_obj(_cdf_matrix(marginals, pts)), dtype=float)

    val, _, _ = _optimize_on_hyperplane(objective, marginals, s, cfg, maximize=False)
    return float(min(val, 1.0))


def max_min_aggregation_bounds(kind, marginals, lower_obj, upper_obj, s):
    """Distribution-function bounds for max/min aggregation.

    max: (Q_lower(F(s)), Q_upper(F(s))) for a quasi-copula pair.
    min: (1 - S_upper(F(s)), 1 - S_lower(F(s))) for a quasi-survival pair.
    """
    u = np.array([m.cdf(s) for m in marginals])
    if kind == "max":
        return float(lower_obj(u)), float(upper_obj(u))
    if kind == "min":
        return float(1.0 - upper_obj(u)), float(1.0 - lower_obj(u))
    raise ValueError("max_min_aggregation_bounds handles 'max' and 'min' only")


@dataclass
class BoundFunction:
    """A nondecreasing map s -> bound on P(phi(X) <= s), invertible to VaR."""

    fn: object
    direction: str                       # lower_df | upper_df
    bracket: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.direction not in ("lower_df", "upper_df"):
            raise ValueError("direction must be lower_df or upper_df")

    def __call__(self, s):
        return float(self.fn(s))


@dataclass(frozen=True)
class VarInterval:
    level: float
    low: float
    high: float

    def __post_init__(self):
        if not (0.0 < self.level < 1.0):
            raise ValueError("level must lie in (0, 1)")
        if self.low > self.high + 1e-9:
            raise ValueError("interval needs low <= high")

    @property
    def spread(self):
        return self.high - self.low


class LevelUnattainableError(RuntimeError):
    """The bound function never exceeds the level on the expanded bracket."""


def invert_to_var(bound: BoundFunction, alpha: float, tol: float = 1e-9) -> float:
    """inf{s : B(s) > alpha} by bracketing bisection with doubling expansion."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("level must lie in (0, 1)")
    lo, hi = float(bound.bracket[0]), float(bound.bracket[1])
    if bound(lo) > alpha:
        return lo
    span = max(hi - lo, tol, 1e-12)
    expansions = 0
    while bound(hi) <= alpha:
        expansions += 1
        if expansions > 60:
            raise LevelUnattainableError(f"level {alpha} unattainable on bracket")
        span *= 2.0
        hi = lo + span
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bound(mid) > alpha:
            hi = mid
        else:
            lo = mid
    return float(hi)
