"""Deterministic reachable-set over-approximation.

Two engines: contraction-ball propagation (a nominal trajectory with an
exponentially evolving ball radius) and interval embedding systems (a
doubled-up ODE in lower/upper bounds driven by an inclusion function),
optionally in transformed coordinates so the embedding runs on a
cooperative system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import (SystemModel, Trajectory, _grid_index, integrate_ode,
                       system_jacobian, time_grid)
from .errors import OrderViolationError, UnsoundInclusionError
from .sets import Ellipsoid, IntervalBox, WeightedNorm, _as_vector


@dataclass(frozen=True, eq=False)
class InclusionFunction:
    """Componentwise interval bound on the vector field.

    fn(t, x_lo, x_hi, u_lo, u_hi) returns (F_lo, F_hi) with
    F_lo <= f(t, z, w) <= F_hi for every z in [x_lo, x_hi] and
    w in [u_lo, u_hi].
    """

    fn: Callable
    state_dim: int
    input_dim: int = 0
    kind: str = "custom"

    def __call__(self, t, x_lo, x_hi, u_lo=None, u_hi=None):
        lo, hi = self.fn(t, x_lo, x_hi, u_lo, u_hi)
        return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def endpoint_inclusion(sys: SystemModel, domain_box: IntervalBox | None = None,
                       n_samples: int = 1024) -> InclusionFunction:
    """Inclusion function that evaluates the drift at the interval
    endpoints, valid only for cooperative dynamics.

    When a domain box is given, cooperativity is checked on it by sampling
    and an UnsoundInclusionError is raised on failure.  Systems with inputs
    are rejected: endpoint evaluation would additionally require monotone
    dependence on the input.
    """
    if sys.input_dim > 0:
        raise UnsoundInclusionError(
            "endpoint inclusion functions are only supported for systems "
            "without exogenous inputs"
        )
    if domain_box is not None:
        report = monotone_check(sys, domain_box, n_samples=n_samples)
        if not report.passed:
            raise UnsoundInclusionError(
                f"drift is not cooperative on the declared box: worst "
                f"off-diagonal violation {report.worst_violation:g} at "
                f"{report.worst_point}"
            )
    empty = np.zeros(0)

    def fn(t, x_lo, x_hi, u_lo, u_hi):
        return (sys.drift(t, x_lo, empty), sys.drift(t, x_hi, empty))

    return InclusionFunction(fn=fn, state_dim=sys.state_dim, input_dim=0,
                             kind="endpoint")


@dataclass(frozen=True)
class MonotoneReport:
    passed: bool
    worst_violation: float
    worst_point: np.ndarray
    n_samples: int


def monotone_check(sys: SystemModel, box: IntervalBox, n_samples: int = 1024,
                   tol: float = 1e-9) -> MonotoneReport:
    """Sample Jacobians over the box and report the worst negative
    off-diagonal entry (cooperativity / Metzler check)."""
    from .certify import _sobol_points  # local import to avoid a cycle

    pts = _sobol_points(box.dim, n_samples, seed=0)
    worst, worst_x = 0.0, box.center
    mask = ~np.eye(sys.state_dim, dtype=bool)
    for p in pts:
        x = box.lo + p * (box.hi - box.lo)
        J = system_jacobian(sys, 0.0, x)
        v = -float(np.min(J[mask]))
        if v > worst:
            worst, worst_x = v, x
    return MonotoneReport(passed=worst <= tol, worst_violation=worst,
                          worst_point=worst_x, n_samples=n_samples)


def transform_system(T, sys: SystemModel) -> SystemModel:
    """Coordinate change y = Tx: drift becomes T f(t, T^{-1} y, u) and
    diffusion T sigma(t, T^{-1} y, u)."""
    T = np.asarray(T, dtype=float)
    n = sys.state_dim
    if T.shape != (n, n):
        raise ValueError(f"transform shape {T.shape} does not match state dim {n}")
    if abs(np.linalg.det(T)) <= 1e-12:
        raise ValueError("transform is singular (|det| <= 1e-12)")
    Tinv = np.linalg.inv(T)

    def back(y):
        y = np.asarray(y, dtype=float)
        return y @ Tinv.T if y.ndim > 1 else Tinv @ y

    def drift(t, y, u):
        f = np.asarray(sys.drift(t, back(y), u), dtype=float)
        return f @ T.T if f.ndim > 1 else T @ f

    def diffusion(t, y, u):
        g = np.asarray(sys.diffusion(t, back(y), u), dtype=float)
        return T @ g if g.ndim == 2 else np.einsum("ij,bjm->bim", T, g)

    jac = None
    if sys.jacobian is not None:
        def jac(t, y, u):
            return T @ np.asarray(sys.jacobian(t, back(y), u), dtype=float) @ Tinv

    return SystemModel(
        state_dim=n, input_dim=sys.input_dim, noise_dim=sys.noise_dim,
        drift=drift, diffusion=diffusion, jacobian=jac,
        vectorized=sys.vectorized,
    )


@dataclass(frozen=True, eq=False)
class EmbeddingTrajectory:
    """Paired lower/upper bound trajectories with lo <= hi at every step."""

    times: np.ndarray
    lo_states: np.ndarray
    hi_states: np.ndarray

    def __post_init__(self):
        if np.any(self.lo_states > self.hi_states):
            raise ValueError("embedding trajectory requires lo <= hi throughout")

    @property
    def dim(self) -> int:
        return self.lo_states.shape[1]

    def index_of(self, t: float) -> int:
        return _grid_index(self.times, t)

    def box_at(self, t: float) -> IntervalBox:
        k = self.index_of(t)
        return IntervalBox(self.lo_states[k], self.hi_states[k])


def embed_integrate(inc: InclusionFunction, x0_lo, x0_hi, u_lo=None, u_hi=None,
                    *, t_end: float, dt: float) -> EmbeddingTrajectory:
    """RK4 integration of the 2n-dimensional embedding system.

    Order violations (lo > hi after a step) are hard errors carrying the
    offending time and component: clamping would hide an unsound inclusion
    function.  Inputs are constant interval bounds.
    """
    lo = _as_vector(x0_lo, inc.state_dim, "x0_lo")
    hi = _as_vector(x0_hi, inc.state_dim, "x0_hi")
    if np.any(lo > hi):
        raise ValueError("initial box requires x0_lo <= x0_hi")
    if inc.input_dim > 0:
        u_lo = _as_vector(u_lo, inc.input_dim, "u_lo")
        u_hi = _as_vector(u_hi, inc.input_dim, "u_hi")
        if np.any(u_lo > u_hi):
            raise ValueError("input box requires u_lo <= u_hi")
    times = time_grid(t_end, dt)
    K = len(times) - 1
    los = np.empty((K + 1, inc.state_dim))
    his = np.empty((K + 1, inc.state_dim))
    los[0], his[0] = lo, hi

    def rhs(t, a, b):
        fl, fh = inc(t, a, b, u_lo, u_hi)
        return fl, fh

    for k in range(K):
        t = times[k]
        l1, h1 = rhs(t, lo, hi)
        l2, h2 = rhs(t + 0.5 * dt, lo + 0.5 * dt * l1, hi + 0.5 * dt * h1)
        l3, h3 = rhs(t + 0.5 * dt, lo + 0.5 * dt * l2, hi + 0.5 * dt * h2)
        l4, h4 = rhs(t + dt, lo + dt * l3, hi + dt * h3)
        lo = lo + (dt / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
        hi = hi + (dt / 6.0) * (h1 + 2.0 * h2 + 2.0 * h3 + h4)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise OrderViolationError(times[k + 1], int(np.argmax(~np.isfinite(lo))))
        bad = lo > hi
        if np.any(bad):
            raise OrderViolationError(times[k + 1], int(np.argmax(bad)))
        los[k + 1], his[k + 1] = lo, hi
    return EmbeddingTrajectory(times=times, lo_states=los, hi_states=his)


def _radius_growth(c: float, t: float) -> float:
    """(e^{ct} - 1)/c, continued by t at c = 0."""
    if c == 0.0:
        return t
    return math.expm1(c * t) / c


@dataclass(frozen=True, eq=False)
class ContractionTube:
    """Nominal trajectory with a ball radius that evolves as
    r_t = e^{ct} r1 + ell * (e^{ct} - 1)/c * r2 around it."""

    nominal: Trajectory
    c: float
    ell: float
    r1: float
    r2: float
    norm: WeightedNorm

    def radius(self, t: float) -> float:
        return (math.exp(self.c * t) * self.r1
                + self.ell * _radius_growth(self.c, t) * self.r2)

    def ball_at(self, t: float) -> Ellipsoid:
        k = self.nominal.index_of(t)
        return Ellipsoid(center=self.nominal.states[k],
                         radius=self.radius(self.nominal.times[k]),
                         norm=self.norm)


def contraction_tube(sys: SystemModel, x_star0, u_star=None, *, c: float,
                     ell: float, r1: float, r2: float, t_end: float,
                     dt: float, norm) -> ContractionTube:
    """Reachable tube around a nominal trajectory under incremental
    input-to-state bounds.

    Any trajectory starting within r1 of the nominal initial state (in the
    given norm) with inputs within r2 of the nominal input stays inside
    the ball of radius r_t around the nominal state.
    """
    if r1 < 0 or r2 < 0:
        raise ValueError("radii must be nonnegative")
    if r2 > 0 and ell is None:
        raise ValueError("an input gain ell is required when r2 > 0")
    norm = norm if isinstance(norm, WeightedNorm) else WeightedNorm(norm)
    nominal = integrate_ode(sys, x_star0, u_star, t_end=t_end, dt=dt)
    return ContractionTube(nominal=nominal, c=float(c), ell=float(ell),
                           r1=float(r1), r2=float(r2), norm=norm)
