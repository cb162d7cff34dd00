"""System models, fixed-step RK4 integration and Euler-Maruyama simulation.

Noise is generated by a counter-based scheme: each (seed, path_index) pair
keys an independent Philox stream, and Gaussians are produced from it by
Box-Muller.  Paths are therefore reproducible and independent of execution
order, which is what makes Monte Carlo reports deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError
from .sets import AnySet, _as_vector

_GRID_TOL = 1e-9


def _grid_index(times: np.ndarray, t: float) -> int:
    if len(times) == 1:
        k = 0
    else:
        k = int(round((t - times[0]) / (times[1] - times[0])))
    if k < 0 or k >= len(times) or abs(times[k] - t) > _GRID_TOL:
        raise ValueError(f"time {t} is not on the integration grid")
    return k


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Controlled stochastic system dX = f(t,X,u) dt + sigma(t,X,u) dW.

    drift maps (t, x, u) to the state derivative and diffusion to an
    (n, m) matrix.  With vectorized=True both must also accept stacked
    states of shape (B, n) (and stacked inputs (B, p)), returning stacked
    results; diffusion may return a constant (n, m) matrix either way.
    jacobian, when given, is the analytic state Jacobian of the drift.
    """

    state_dim: int
    input_dim: int
    noise_dim: int
    drift: Callable
    diffusion: Callable
    jacobian: Callable | None = None
    vectorized: bool = False

    def __post_init__(self):
        for name, d in (("state_dim", self.state_dim),
                        ("noise_dim", self.noise_dim)):
            if d < 1:
                raise ValueError(f"{name} must be >= 1, got {d}")
        if self.input_dim < 0:
            raise ValueError("input_dim must be >= 0")

    def drift_batch(self, t: float, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        """Drift on a (B, n) batch, falling back to a row loop when the
        callables are not vectorized."""
        if self.vectorized:
            return np.asarray(self.drift(t, X, U), dtype=float)
        return np.stack([
            np.asarray(self.drift(t, X[i], U[i]), dtype=float)
            for i in range(X.shape[0])
        ])

    def diffusion_batch(self, t: float, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        """Diffusion on a (B, n) batch; returns (n, m) if constant, else (B, n, m)."""
        if self.vectorized:
            return np.asarray(self.diffusion(t, X, U), dtype=float)
        out = np.asarray(self.diffusion(t, X[0], U[0]), dtype=float)
        if out.ndim == 2 and X.shape[0] > 1:
            rest = [np.asarray(self.diffusion(t, X[i], U[i]), dtype=float)
                    for i in range(1, X.shape[0])]
            return np.stack([out] + rest)
        return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-stamped states on a strictly increasing grid."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.states, dtype=float)
        if t.ndim != 1 or x.ndim != 2 or t.shape[0] != x.shape[0]:
            raise ValueError("times and states must have matching lengths")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", x)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def index_of(self, t: float) -> int:
        return _grid_index(self.times, t)

    def at(self, t: float) -> np.ndarray:
        return self.states[self.index_of(t)]


@dataclass(frozen=True, eq=False)
class InputSignal:
    """Input function of time together with its declared containing set."""

    fn: Callable[[float], np.ndarray]
    dim: int
    container: AnySet | None = None

    @classmethod
    def constant(cls, value, container: AnySet | None = None) -> "InputSignal":
        v = np.asarray(value, dtype=float).reshape(-1)
        vv = v.copy()
        return cls(fn=lambda t: vv, dim=v.shape[0], container=container)

    @classmethod
    def zero(cls, dim: int = 0) -> "InputSignal":
        z = np.zeros(dim)
        return cls(fn=lambda t: z, dim=dim)

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.fn(t), dtype=float)

    def check_containment(self, times, tol: float = 1e-9) -> bool:
        """Sampled values lie in the declared containing set (vacuously
        true when no container was declared)."""
        if self.container is None:
            return True
        return all(bool(self.container.contains(self(t), tol=tol))
                   for t in times)


def _resolve_input(sys: SystemModel, u) -> InputSignal:
    if u is None:
        return InputSignal.zero(sys.input_dim)
    if not isinstance(u, InputSignal):
        return InputSignal.constant(u)
    if u.dim != sys.input_dim:
        raise ValueError(
            f"input dimension {u.dim} does not match system input_dim "
            f"{sys.input_dim}"
        )
    return u


def time_grid(t_end: float, dt: float) -> np.ndarray:
    """Grid {0, dt, ..., t_end}; t_end must be an integer multiple of dt."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_end < 0:
        raise ValueError(f"t_end must be nonnegative, got {t_end}")
    K = int(round(t_end / dt))
    if abs(K * dt - t_end) > _GRID_TOL * max(1.0, abs(t_end)):
        raise ValueError(f"t_end={t_end} is not a multiple of dt={dt}")
    return np.arange(K + 1) * dt


def integrate_ode(sys: SystemModel, x0, u=None, *, t_end: float,
                  dt: float) -> Trajectory:
    """Classical fixed-step RK4 for the associated deterministic system."""
    u = _resolve_input(sys, u)
    x0 = _as_vector(x0, sys.state_dim, "x0")
    times = time_grid(t_end, dt)
    X = rk4_batch(sys, x0[None, :], u, times)
    return Trajectory(times=times, states=X[0])


def rk4_batch(sys: SystemModel, X0: np.ndarray, u: InputSignal,
              times: np.ndarray, U_const: np.ndarray | None = None) -> np.ndarray:
    """RK4 on a (B, n) batch of initial states sharing the input signal,
    or with per-path constant inputs U_const of shape (B, p).

    Returns states of shape (B, K+1, n); raises DivergenceError on the
    first non-finite state.
    """
    B, n = X0.shape
    K = len(times) - 1
    dt = times[1] - times[0] if K > 0 else 0.0
    out = np.empty((B, K + 1, n))
    out[:, 0] = X0
    X = X0.copy()

    def uval(t):
        if U_const is not None:
            return U_const
        v = u(t)
        return np.broadcast_to(v, (B, v.shape[0]))

    for k in range(K):
        t = times[k]
        k1 = sys.drift_batch(t, X, uval(t))
        k2 = sys.drift_batch(t + 0.5 * dt, X + 0.5 * dt * k1, uval(t + 0.5 * dt))
        k3 = sys.drift_batch(t + 0.5 * dt, X + 0.5 * dt * k2, uval(t + 0.5 * dt))
        k4 = sys.drift_batch(t + dt, X + dt * k3, uval(t + dt))
        X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(X)):
            raise DivergenceError(times[k + 1])
        out[:, k + 1] = X
    return out


_SAMPLER_STREAM = np.uint64(2**64 - 1)


def path_normals(seed: int, path_index: int, n_steps: int, m: int) -> np.ndarray:
    """Standard normals for one path: Philox keyed by (seed, path_index),
    Box-Muller on consecutive uniform pairs.  Step k consumes positions
    [2km, 2(k+1)m) of the stream, so the draw for any (seed, path, step)
    is fixed regardless of scheduling."""
    if not (0 <= seed < 2**64 - 1):
        raise ValueError("seed must be in [0, 2^64 - 1)")
    key = np.array([seed, path_index], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    u = gen.random(2 * n_steps * m)
    u1 = np.maximum(u[0::2], np.finfo(float).tiny)
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u[1::2])
    return z.reshape(n_steps, m)


def sampler_rng(seed: int) -> np.random.Generator:
    """Dedicated stream for initial-condition sampling, distinct from every
    path stream."""
    key = np.array([seed, _SAMPLER_STREAM], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def em_batch(sys: SystemModel, X0: np.ndarray, u: InputSignal,
             times: np.ndarray, seed: int, path_offset: int = 0,
             U_const: np.ndarray | None = None,
             checkpoints: np.ndarray | None = None,
             raise_on_divergence: bool = True):
    """Euler-Maruyama on a batch of paths with counter-based noise.

    Path i uses the (seed, path_offset + i) noise stream.  When
    checkpoints (grid indices) are given, only those states are stored and
    divergent paths are flagged instead of raising; the returned array has
    shape (B, len(checkpoints), n) plus a (B,) divergence mask.  Otherwise
    the full (B, K+1, n) history is returned.
    """
    B, n = X0.shape
    K = len(times) - 1
    dt = times[1] - times[0] if K > 0 else 0.0
    sq = np.sqrt(dt)
    m = sys.noise_dim

    noise = np.empty((B, K, m))
    for i in range(B):
        noise[i] = path_normals(seed, path_offset + i, K, m)

    full = checkpoints is None
    if full:
        out = np.empty((B, K + 1, n))
        out[:, 0] = X0
    else:
        cps = {int(k): j for j, k in enumerate(checkpoints)}
        out = np.full((B, len(checkpoints), n), np.nan)
        if 0 in cps:
            out[:, cps[0]] = X0
    alive = np.ones(B, dtype=bool)
    X = X0.copy()

    def uval(t):
        if U_const is not None:
            return U_const
        v = u(t)
        return np.broadcast_to(v, (B, v.shape[0]))

    for k in range(K):
        t = times[k]
        f = sys.drift_batch(t, X, uval(t))
        g = sys.diffusion_batch(t, X, uval(t))
        if g.ndim == 2:
            dW = noise[:, k, :] @ g.T
        else:
            dW = np.einsum("bnm,bm->bn", g, noise[:, k, :])
        X = X + f * dt + sq * dW
        bad = ~np.all(np.isfinite(X), axis=1)
        if np.any(bad & alive):
            if raise_on_divergence and full:
                raise DivergenceError(times[k + 1])
            alive &= ~bad
            X[~alive] = 0.0  # stop propagating junk; paths stay flagged
        if full:
            out[:, k + 1] = np.where(alive[:, None], X, np.nan)
        elif k + 1 in cps:
            out[:, cps[k + 1]] = np.where(alive[:, None], X, np.nan)
    return out, ~alive


def simulate_sde(sys: SystemModel, x0, u=None, *, t_end: float, dt: float,
                 seed: int, path_index: int = 0) -> Trajectory:
    """Euler-Maruyama simulation on the same grid as integrate_ode.

    Identical (seed, path_index, inputs, dt) give bitwise-identical output.
    """
    u = _resolve_input(sys, u)
    x0 = _as_vector(x0, sys.state_dim, "x0")
    times = time_grid(t_end, dt)
    X, _ = em_batch(sys, x0[None, :], u, times, seed, path_offset=path_index)
    return Trajectory(times=times, states=X[0])


def jacobian_fd(sys: SystemModel, t: float, x, u=None) -> np.ndarray:
    """Central finite-difference state Jacobian of the drift,
    step 1e-6 * (1 + |x_i|) per coordinate."""
    x = _as_vector(x, sys.state_dim, "x")
    uv = _resolve_input(sys, u)(t)
    J = np.empty((sys.state_dim, sys.state_dim))
    for i in range(sys.state_dim):
        h = 1e-6 * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fp = np.asarray(sys.drift(t, xp, uv), dtype=float)
        fm = np.asarray(sys.drift(t, xm, uv), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise ArithmeticError(
                f"drift not finite near x while differencing coordinate {i}"
            )
        J[:, i] = (fp - fm) / (2.0 * h)
    return J


def input_jacobian_fd(sys: SystemModel, t: float, x, u=None) -> np.ndarray:
    """Central finite-difference input Jacobian of the drift."""
    x = _as_vector(x, sys.state_dim, "x")
    uv = _resolve_input(sys, u)(t)
    J = np.empty((sys.state_dim, sys.input_dim))
    for j in range(sys.input_dim):
        h = 1e-6 * (1.0 + abs(uv[j]))
        up, um = uv.copy(), uv.copy()
        up[j] += h
        um[j] -= h
        fp = np.asarray(sys.drift(t, x, up), dtype=float)
        fm = np.asarray(sys.drift(t, x, um), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise ArithmeticError(
                f"drift not finite near u while differencing coordinate {j}"
            )
        J[:, j] = (fp - fm) / (2.0 * h)
    return J


def system_jacobian(sys: SystemModel, t: float, x, u=None) -> np.ndarray:
    """Analytic Jacobian when available, finite differences otherwise."""
    if sys.jacobian is not None:
        uv = _resolve_input(sys, u)(t)
        return np.asarray(sys.jacobian(t, np.asarray(x, dtype=float), uv),
                          dtype=float)
    return jacobian_fd(sys, t, x, u)
