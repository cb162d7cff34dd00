"""Assembly of probabilistic reachable sets.

A probabilistic reachable set is the Minkowski sum of a deterministic
over-approximation at time t with the origin-centered deviation ball of
radius rho(t, delta): the stochastic state lies in it with probability at
least 1 - delta.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import radius as deviation_radius
from .certify import ContractionCertificate
from .dynamics import SystemModel, time_grid
from .errors import UnsoundInclusionError
from .reach import (ContractionTube, EmbeddingTrajectory, InclusionFunction,
                    contraction_tube, embed_integrate, monotone_check,
                    transform_system)
from .sets import (DeterministicSet, Ellipsoid, IntervalBox, MinkowskiSet,
                   Parallelotope, polygon_outline)


@dataclass(frozen=True, eq=False)
class ProbReachSet:
    """Deterministic base set at time t plus the deviation ball."""

    t: float
    delta: float
    base: DeterministicSet
    noise_ball: Ellipsoid

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ValueError(f"delta must be in (0, 1], got {self.delta}")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def rho(self) -> float:
        return self.noise_ball.radius

    def as_minkowski(self) -> MinkowskiSet:
        return MinkowskiSet(base=self.base, noise_ball=self.noise_ball)

    def contains(self, x, tol: float = 1e-9):
        return self.as_minkowski().contains(x, tol=tol)

    def excess(self, x) -> np.ndarray:
        return self.as_minkowski().excess(x)

    def support(self, d) -> float:
        return self.as_minkowski().support(d)

    def outline(self, n_dirs: int = 64) -> np.ndarray:
        return polygon_outline(self.as_minkowski(), n_dirs)


def _require_times_on_grid(times, t_end: float, dt: float) -> list[float]:
    out = []
    for t in times:
        k = int(round(t / dt))
        if t > t_end + 1e-9 or k < 0 or abs(k * dt - t) > 1e-9:
            raise ValueError(
                f"requested time {t} is not on the integration grid "
                f"(dt={dt}, t_end={t_end})"
            )
        out.append(float(t))
    time_grid(t_end, dt)  # validates t_end/dt alignment as well
    return out


def _noise_ball(cert: ContractionCertificate, t: float, delta: float,
                rho_scale: float = 1.0) -> Ellipsoid:
    rho = deviation_radius(cert.c_P, cert.d_P, t, delta) * rho_scale
    return Ellipsoid(center=np.zeros(cert.norm.dim), radius=rho,
                     norm=cert.norm)


@dataclass(frozen=True, eq=False)
class ContractionReachResult:
    sets: tuple
    tube: ContractionTube


def prob_reach_contraction(sys: SystemModel, cert: ContractionCertificate,
                           x_star0, u_star=None, *, r1: float, r2: float,
                           delta: float, times, dt: float,
                           t_end: float | None = None,
                           rho_scale: float = 1.0) -> ContractionReachResult:
    """Contraction-ball base sets plus deviation balls.

    Requires a complete certificate: the input-to-state constants (c, ell)
    drive the deterministic tube, (c_P, d_P) the stochastic radius.
    """
    if cert.c is None or cert.ell is None:
        raise ValueError(
            "certificate is missing the input-to-state constants (c, ell); "
            "for input-free systems use c = c_P and ell = 0"
        )
    t_end = float(t_end if t_end is not None else max(times))
    times = _require_times_on_grid(times, t_end, dt)
    tube = contraction_tube(sys, x_star0, u_star, c=cert.c, ell=cert.ell,
                            r1=r1, r2=r2, t_end=t_end, dt=dt, norm=cert.norm)
    sets = tuple(
        ProbReachSet(t=t, delta=delta, base=tube.ball_at(t),
                     noise_ball=_noise_ball(cert, t, delta, rho_scale))
        for t in times
    )
    return ContractionReachResult(sets=sets, tube=tube)


@dataclass(frozen=True, eq=False)
class IntervalReachResult:
    sets: tuple
    embedding: EmbeddingTrajectory
    transform: np.ndarray | None


def prob_reach_interval(sys: SystemModel, cert: ContractionCertificate,
                        inc: InclusionFunction, x0_lo, x0_hi,
                        u_lo=None, u_hi=None, *, delta: float, times,
                        dt: float, transform=None,
                        t_end: float | None = None,
                        rho_scale: float = 1.0,
                        monotone_samples: int = 1024) -> IntervalReachResult:
    """Interval-embedding base sets plus deviation balls.

    Without a transform the initial box, the inclusion function and the
    resulting boxes all live in state coordinates.  With a transform T the
    embedding runs in transformed coordinates (the initial box and inc are
    transformed-space objects) and each base set is the parallelotope
    preimage of the embedding box; cooperativity of the transformed drift
    is checked on the initial box first.
    """
    t_end = float(t_end if t_end is not None else max(times))
    times = _require_times_on_grid(times, t_end, dt)
    if transform is not None:
        T = np.asarray(transform, dtype=float)
        sys_t = transform_system(T, sys)
        box = IntervalBox(x0_lo, x0_hi)
        report = monotone_check(sys_t, box, n_samples=monotone_samples)
        if not report.passed:
            raise UnsoundInclusionError(
                f"transformed drift is not cooperative on the initial box: "
                f"worst off-diagonal violation {report.worst_violation:g} "
                f"at {report.worst_point}"
            )
    else:
        T = None
    emb = embed_integrate(inc, x0_lo, x0_hi, u_lo, u_hi, t_end=t_end, dt=dt)

    def base_at(t: float) -> DeterministicSet:
        box = emb.box_at(t)
        if T is None:
            return box
        return Parallelotope(transform=T, box=box)

    sets = tuple(
        ProbReachSet(t=t, delta=delta, base=base_at(t),
                     noise_ball=_noise_ball(cert, t, delta, rho_scale))
        for t in times
    )
    return IntervalReachResult(sets=sets, embedding=emb, transform=T)
