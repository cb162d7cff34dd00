"""Monte Carlo validation of probabilistic reachable sets.

Simulates stochastic trajectories from a declared initial set and
measures, per checkpoint time, the fraction that lie inside the
corresponding probabilistic reachable set.  Paths are keyed by
(seed, path index), so reports are deterministic and independent of how
paths are batched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import InputSignal, SystemModel, em_batch, sampler_rng, time_grid

_CHUNK = 1024


@dataclass(frozen=True)
class CoverageRow:
    t: float
    n_paths: int
    n_inside: int
    coverage: float
    target: float
    slack: float
    passed: bool
    worst_excess: float


@dataclass(frozen=True)
class CoverageReport:
    rows: tuple
    n_paths: int
    n_diverged: int
    seed: int
    passed: bool

    def row_at(self, t: float) -> CoverageRow:
        for r in self.rows:
            if abs(r.t - t) <= 1e-9:
                return r
        raise KeyError(f"no coverage row at t={t}")


def binomial_slack(delta: float, n_paths: int) -> float:
    """Three binomial standard errors at the 1 - delta target."""
    return 3.0 * np.sqrt(delta * (1.0 - delta) / n_paths)


def monte_carlo_coverage(sys: SystemModel, sets, sampler, u=None, *,
                         n_paths: int, dt: float, seed: int,
                         input_sampler=None,
                         keep_endpoints: bool = False):
    """Coverage of each probabilistic reachable set by simulated paths.

    sampler is the initial set (anything with .sample(rng, n)) or a
    callable (rng, n) -> (n, dim); initial conditions are drawn uniformly
    from it.  input_sampler, when given, draws one constant input per path
    from the declared input set.  Divergent paths are counted separately
    and treated as outside every set.

    Returns the CoverageReport, and with keep_endpoints=True also a dict
    {t: (n_paths, n) endpoint states} for plotting.
    """
    if n_paths < 100:
        raise ValueError(f"need at least 100 paths, got {n_paths}")
    sets = list(sets)
    if not sets:
        raise ValueError("no sets to validate")
    t_end = max(s.t for s in sets)
    times = time_grid(t_end, dt)
    checkpoints = []
    for s in sets:
        k = int(round(s.t / dt))
        if abs(k * dt - s.t) > 1e-9:
            raise ValueError(f"set time {s.t} is not on the simulation grid")
        checkpoints.append(k)
    checkpoints = np.array(checkpoints)

    draw = sampler.sample if hasattr(sampler, "sample") else sampler
    rng = sampler_rng(seed)
    X0 = np.asarray(draw(rng, n_paths), dtype=float)
    if X0.shape != (n_paths, sys.state_dim):
        raise ValueError(
            f"sampler returned shape {X0.shape}, expected "
            f"({n_paths}, {sys.state_dim})"
        )
    U_const = None
    if input_sampler is not None:
        draw_u = (input_sampler.sample if hasattr(input_sampler, "sample")
                  else input_sampler)
        U_const = np.asarray(draw_u(rng, n_paths), dtype=float)
    u = u if u is not None else InputSignal.zero(sys.input_dim)

    endpoint_states = np.empty((n_paths, len(sets), sys.state_dim))
    diverged = np.zeros(n_paths, dtype=bool)
    for start in range(0, n_paths, _CHUNK):
        stop = min(start + _CHUNK, n_paths)
        uc = None if U_const is None else U_const[start:stop]
        states, dead = em_batch(
            sys, X0[start:stop], u, times, seed, path_offset=start,
            U_const=uc, checkpoints=checkpoints, raise_on_divergence=False,
        )
        endpoint_states[start:stop] = states
        diverged[start:stop] = dead

    rows = []
    alive = ~diverged
    for j, s in enumerate(sets):
        pts = endpoint_states[alive, j, :]
        excess = s.excess(pts)
        inside = int(np.sum(excess <= 1e-9))
        coverage = inside / n_paths
        target = 1.0 - s.delta
        slack = binomial_slack(s.delta, n_paths)
        rows.append(CoverageRow(
            t=s.t, n_paths=n_paths, n_inside=inside, coverage=coverage,
            target=target, slack=slack,
            passed=bool(coverage >= target - slack),
            worst_excess=float(excess.max(initial=0.0)),
        ))
    report = CoverageReport(
        rows=tuple(rows), n_paths=n_paths, n_diverged=int(diverged.sum()),
        seed=seed, passed=bool(all(r.passed for r in rows)),
    )
    if keep_endpoints:
        endpoints = {s.t: endpoint_states[:, j, :] for j, s in enumerate(sets)}
        return report, endpoints
    return report
