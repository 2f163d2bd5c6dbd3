"""Improved Frechet-Hoeffding bounds from point prescriptions and distance balls.

Three information models are covered:

* the copula is known on a finite point set (``Prescription``),
* its survival function is known on a finite point set,
* the copula lies within ``radius`` of a reference model under a statistical
  distance that is monotone in the lower orthant order and min/max-stable
  (Kolmogorov-Smirnov, Cramer-von Mises, and L^p all qualify).

For the Kolmogorov-Smirnov ball the bounds have a closed form
(``ks_ball_bounds``); the generic route (``distance_ball_lower`` /
``distance_ball_upper``) bisects over the value at the evaluation point,
exploiting the monotonicity of the distance in that value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .copula_core import (
    EmpiricalCopula,
    QuasiCopulaFn,
    StudentTCopula,
    frechet_lower,
    frechet_upper,
    survival,
)

__all__ = [
    "PrescriptionInfeasibleError",
    "Prescription",
    "improved_fh_lower",
    "improved_fh_upper",
    "improved_fh_bound_fns",
    "improved_fh_survival",
    "DistanceSpec",
    "distance_eval",
    "DistanceBall",
    "ks_ball_bounds",
    "ks_ball_bound_fns",
    "distance_ball_lower",
    "distance_ball_upper",
    "distance_ball_survival",
    "survival_ks_ball_bounds",
]


class PrescriptionInfeasibleError(ValueError):
    """No quasi-copula can match the prescribed values."""


@dataclass(frozen=True)
class Prescription:
    """Finite point set with prescribed (quasi-)copula values.

    Consistency is enforced eagerly: every value must sit inside the
    Frechet-Hoeffding envelope at its point, and every pair of points must be
    compatible with monotonicity and the Lipschitz property (equivalently,
    the induced lower bound may not exceed the induced upper bound at any
    prescribed point).
    """

    dim: int
    points: np.ndarray = None
    values: np.ndarray = None

    def __post_init__(self):
        pts = np.zeros((0, self.dim)) if self.points is None else np.atleast_2d(
            np.asarray(self.points, dtype=float))
        vals = np.zeros(0) if self.values is None else np.atleast_1d(
            np.asarray(self.values, dtype=float))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        if pts.shape[0] != vals.shape[0]:
            raise ValueError("need one value per prescribed point")
        if pts.size and (pts.shape[1] != self.dim or np.any(pts < 0) or np.any(pts > 1)):
            raise ValueError("prescribed points must lie in the unit cube")
        if pts.size:
            w = frechet_lower(pts)
            m = frechet_upper(pts)
            if np.any(vals < w - 1e-12) or np.any(vals > m + 1e-12):
                raise PrescriptionInfeasibleError(
                    "prescription infeasible: a value escapes the Frechet-Hoeffding envelope")
            lo = improved_fh_lower(self, pts)
            hi = improved_fh_upper(self, pts)
            if np.any(lo > hi + 1e-12):
                raise PrescriptionInfeasibleError(
                    "prescription infeasible: prescribed values are mutually incompatible")

    @property
    def size(self):
        return self.points.shape[0]

    @classmethod
    def empty(cls, dim):
        return cls(dim=dim)

    @classmethod
    def from_copula(cls, c, points):
        """Pin the values of a reference model on the given points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(dim=pts.shape[1], points=pts, values=np.asarray(c(pts), dtype=float))

    def check_probe_grid(self, grid_resolution=8, tol=1e-12):
        """Extra feasibility probe on a uniform lattice."""
        axis = np.linspace(0.0, 1.0, grid_resolution + 1)
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        pts = np.stack(mesh, axis=-1).reshape(-1, self.dim)
        if np.any(improved_fh_lower(self, pts) > improved_fh_upper(self, pts) + tol):
            raise PrescriptionInfeasibleError(
                "prescription infeasible: bounds cross on the probe grid")


def _plus_sums(points, u):
    """For each u row and prescription point x: sum_i (x_i - u_i)^+ and (u_i - x_i)^+."""
    diff = points[None, :, :] - u[:, None, :]
    return np.maximum(diff, 0.0).sum(axis=2), np.maximum(-diff, 0.0).sum(axis=2)


def improved_fh_lower(p: Prescription, u):
    """max(W_d(u), max over x in S of Q*(x) - sum_i (x_i - u_i)^+)."""
    pts = np.atleast_2d(np.asarray(u, dtype=float))
    single = np.asarray(u).ndim == 1
    out = frechet_lower(pts)
    if p.size:
        x_minus_u, _ = _plus_sums(p.points, pts)
        out = np.maximum(out, (p.values[None, :] - x_minus_u).max(axis=1))
    out = np.maximum(out, 0.0)
    return float(out[0]) if single else out


def improved_fh_upper(p: Prescription, u):
    """min(M_d(u), min over x in S of Q*(x) + sum_i (u_i - x_i)^+)."""
    pts = np.atleast_2d(np.asarray(u, dtype=float))
    single = np.asarray(u).ndim == 1
    out = frechet_upper(pts)
    if p.size:
        _, u_minus_x = _plus_sums(p.points, pts)
        out = np.minimum(out, (p.values[None, :] + u_minus_x).min(axis=1))
    return float(out[0]) if single else out


def improved_fh_bound_fns(p: Prescription):
    """The improved envelope as a pair of callable quasi-copulas."""
    lo = QuasiCopulaFn(p.dim, lambda pts: improved_fh_lower(p, pts), label="fh_lower_improved")
    hi = QuasiCopulaFn(p.dim, lambda pts: improved_fh_upper(p, pts), label="fh_upper_improved")
    return lo, hi


def improved_fh_survival(p: Prescription, u):
    """Envelope for survival functions prescribed on a point set.

    ``p`` holds survival values at its points; the bound reflects the points
    through x -> 1-x and evaluates the copula-side envelope at 1-u.
    """
    reflected = Prescription(dim=p.dim, points=1.0 - p.points if p.size else None,
                             values=p.values if p.size else None)
    v = 1.0 - np.asarray(u, dtype=float)
    return improved_fh_lower(reflected, v), improved_fh_upper(reflected, v)


# ---------------------------------------------------------------------------
# statistical distances and distance balls


@dataclass(frozen=True)
class DistanceSpec:
    """Statistical distance: 'ks' (lattice sup), 'cvm' (integrated squared
    difference) or 'lp' (p-th root of the integrated p-th power)."""

    kind: str = "ks"
    p: float = 2.0
    grid_resolution: int = 32

    def __post_init__(self):
        if self.kind not in ("ks", "cvm", "lp"):
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if self.kind == "lp" and self.p < 1.0:
            raise ValueError("lp distance needs p >= 1")
        if self.grid_resolution < 2:
            raise ValueError("integration grid must have resolution >= 2")


def _distance_mesh(spec: DistanceSpec, dim: int, extra_points=None):
    """Evaluation mesh: inclusive lattice for KS, cell midpoints otherwise."""
    g = spec.grid_resolution
    if spec.kind == "ks":
        axis = np.linspace(0.0, 1.0, g + 1)
    else:
        axis = (np.arange(g) + 0.5) / g
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack(mesh, axis=-1).reshape(-1, dim)
    if spec.kind == "ks" and extra_points is not None:
        extra = np.atleast_2d(np.asarray(extra_points, dtype=float))
        pts = np.vstack([pts, extra])
    return axis, pts


def _distance_from_values(spec: DistanceSpec, a, b):
    """Distance from function values tabulated on the spec's mesh."""
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    if spec.kind == "ks":
        return float(diff.max())
    if spec.kind == "cvm":
        return float(np.mean(diff ** 2))
    return float(np.mean(diff ** spec.p) ** (1.0 / spec.p))


def distance_eval(spec: DistanceSpec, q, qp, extra_points=None) -> float:
    """Evaluate the distance between two evaluable d-variate functions."""
    if q.dim != qp.dim:
        raise ValueError("dimension mismatch in distance evaluation")
    _, pts = _distance_mesh(spec, q.dim, extra_points)
    return _distance_from_values(spec, q(pts), qp(pts))


@dataclass(frozen=True)
class DistanceBall:
    """All quasi-copulas within ``radius`` of ``reference`` under ``distance``."""

    reference: object                 # evaluable with .dim
    distance: DistanceSpec
    radius: float

    def __post_init__(self):
        if self.radius < 0.0:
            raise ValueError("ball radius must be nonnegative")

    @property
    def dim(self):
        return self.reference.dim


def ks_ball_bounds(ball: DistanceBall, u):
    """Closed-form envelope for the Kolmogorov-Smirnov ball:
    (max(C*(u)-delta, W_d(u)), min(C*(u)+delta, M_d(u)))."""
    if ball.distance.kind != "ks":
        raise ValueError("closed form only available for the KS distance")
    ref = np.asarray(ball.reference(u), dtype=float)
    lo = np.maximum(ref - ball.radius, frechet_lower(u))
    hi = np.minimum(ref + ball.radius, frechet_upper(u))
    if np.ndim(lo) == 0:
        return float(lo), float(hi)
    return lo, hi


def ks_ball_bound_fns(ball: DistanceBall):
    """The KS-ball envelope as a pair of callable quasi-copulas."""
    d = ball.dim

    def lo(pts):
        return np.maximum(np.asarray(ball.reference(pts), dtype=float) - ball.radius,
                          frechet_lower(pts))

    def hi(pts):
        return np.minimum(np.asarray(ball.reference(pts), dtype=float) + ball.radius,
                          frechet_upper(pts))

    return (QuasiCopulaFn(d, lo, label=f"ks_ball_lower(delta={ball.radius})"),
            QuasiCopulaFn(d, hi, label=f"ks_ball_upper(delta={ball.radius})"))


def survival_ks_ball_bounds(ball: DistanceBall, u):
    """Reflected closed form for a KS ball around the survival function:
    (max(S*(u)-delta, W_d(1-u)), min(S*(u)+delta, M_d(1-u)))."""
    if ball.distance.kind != "ks":
        raise ValueError("closed form only available for the KS distance")
    u = np.asarray(u, dtype=float)
    s = survival(ball.reference, u)
    lo = np.maximum(np.asarray(s) - ball.radius, frechet_lower(1.0 - u))
    hi = np.minimum(np.asarray(s) + ball.radius, frechet_upper(1.0 - u))
    if np.ndim(lo) == 0:
        return float(lo), float(hi)
    return lo, hi


def _reference_on_mesh(reference, spec: DistanceSpec, dim, extra_points=None):
    """Tabulate the reference on the distance mesh, fast for empirical models."""
    axis, pts = _distance_mesh(spec, dim, extra_points)
    backend = reference.backend if isinstance(reference, StudentTCopula) else reference
    if hasattr(backend, "eval_on_grid"):
        grid_vals = np.asarray(backend.eval_on_grid([axis] * dim), dtype=float).reshape(-1)
        if pts.shape[0] > axis.size ** dim:
            extra = pts[axis.size ** dim:]
            grid_vals = np.concatenate([grid_vals, np.asarray(backend(extra), dtype=float)])
        return pts, grid_vals
    return pts, np.asarray(reference(pts), dtype=float)


def _single_point_upper(mesh, u, alpha):
    """Upper improved-FH bound for the one-point prescription {u -> alpha}."""
    excess = np.maximum(mesh - u[None, :], 0.0).sum(axis=1)
    return np.minimum(mesh.min(axis=1), alpha + excess)


def _single_point_lower(mesh, u, alpha):
    """Lower improved-FH bound for the one-point prescription {u -> alpha}."""
    d = mesh.shape[1]
    deficit = np.maximum(u[None, :] - mesh, 0.0).sum(axis=1)
    return np.maximum(np.maximum(mesh.sum(axis=1) - d + 1.0, 0.0), alpha - deficit)


_BISECTION_CAP = 60


def distance_ball_lower(ball: DistanceBall, u, tol: float = 1e-6) -> float:
    """Smallest admissible value at u over the ball, by bisection.

    The map alpha -> D(upper-envelope(u->alpha) ^ C*, C*) is decreasing and
    continuous, so the minimal alpha with distance <= radius is found by
    bisection over [W_d(u), M_d(u)].  The mesh always contains u itself, where
    the envelope kinks.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    u = np.asarray(u, dtype=float)
    spec, delta = ball.distance, ball.radius
    mesh, ref_vals = _reference_on_mesh(ball.reference, spec, ball.dim, extra_points=u)

    def dist_at(alpha):
        env = np.minimum(_single_point_upper(mesh, u, alpha), ref_vals)
        return _distance_from_values(spec, env, ref_vals)

    lo, hi = frechet_lower(u), frechet_upper(u)
    if dist_at(lo) <= delta:
        return float(lo)
    bad, good = lo, hi           # dist(good) <= delta always (envelope above C*)
    for _ in range(_BISECTION_CAP):
        if good - bad <= tol:
            break
        mid = 0.5 * (bad + good)
        if dist_at(mid) <= delta:
            good = mid
        else:
            bad = mid
    return float(0.5 * (bad + good))


def distance_ball_upper(ball: DistanceBall, u, tol: float = 1e-6) -> float:
    """Largest admissible value at u over the ball, by bisection (mirror case)."""
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    u = np.asarray(u, dtype=float)
    spec, delta = ball.distance, ball.radius
    mesh, ref_vals = _reference_on_mesh(ball.reference, spec, ball.dim, extra_points=u)

    def dist_at(alpha):
        env = np.maximum(_single_point_lower(mesh, u, alpha), ref_vals)
        return _distance_from_values(spec, env, ref_vals)

    lo, hi = frechet_lower(u), frechet_upper(u)
    if dist_at(hi) <= delta:
        return float(hi)
    good, bad = lo, hi           # dist(good) <= delta always
    for _ in range(_BISECTION_CAP):
        if bad - good <= tol:
            break
        mid = 0.5 * (good + bad)
        if dist_at(mid) <= delta:
            good = mid
        else:
            bad = mid
    return float(0.5 * (bad + good))


class _ReflectedReference:
    """v -> survival(C*, 1-v), the reference seen from the survival side."""

    def __init__(self, reference):
        self.reference = reference
        self.dim = reference.dim
        self.label = f"reflected({getattr(reference, 'label', reference)})"

    def __call__(self, v):
        return survival(self.reference, 1.0 - np.asarray(v, dtype=float))

    def _empirical(self):
        base = self.reference
        if isinstance(base, StudentTCopula):
            base = base.backend
        return base if isinstance(base, EmpiricalCopula) else None

    def eval_on_grid(self, axes):
        emp = self._empirical()
        if emp is not None:
            rev_axes = [np.flip(1.0 - np.asarray(ax, dtype=float)) for ax in axes]
            tensor = emp.survival_on_grid(rev_axes)
            return np.flip(tensor, axis=tuple(range(self.dim)))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack(mesh, axis=-1).reshape(-1, self.dim)
        return np.asarray(self(pts), dtype=float).reshape([len(a) for a in axes])


def distance_ball_survival(ball: DistanceBall, u, tol: float = 1e-6):
    """(lower, upper) bounds on survival values over a distance ball.

    Works in reflected coordinates: the ball around the survival reference
    S*(1-.) is a plain quasi-copula ball, evaluated at 1-u.
    """
    reflected = DistanceBall(reference=_ReflectedReference(ball.reference),
                             distance=ball.distance, radius=ball.radius)
    v = 1.0 - np.asarray(u, dtype=float)
    return (distance_ball_lower(reflected, v, tol=tol),
            distance_ball_upper(reflected, v, tol=tol))
