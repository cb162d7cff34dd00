"""Set representations and weighted-norm calculus.

Provides weighted l2 norms and their matrix measures, the set types used
by the reachability engines (ellipsoidal balls, axis-aligned interval
boxes, parallelotopes) and Minkowski sums of a deterministic set with a
noise ball, together with membership tests, support functions and 2-D
polygon outlines.

All types are immutable after construction; operations are pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

DEFAULT_TOL = 1e-9
_SYM_TOL = 1e-10


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _as_vector(v, n: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} has dimension {v.shape[0]}, expected {n}")
    return v


@dataclass(frozen=True, eq=False)
class WeightedNorm:
    """Symmetric positive definite weight matrix P defining ||v|| = sqrt(v'Pv).

    The square root makes the quantity an actual norm (homogeneous of
    degree one); squared values v'Pv appear wherever mean-square bounds
    are evaluated.
    """

    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {P.shape}")
        if not np.all(np.isfinite(P)):
            raise ValueError("weight matrix has non-finite entries")
        if np.max(np.abs(P - P.T)) > _SYM_TOL:
            raise ValueError("weight matrix is not symmetric within 1e-10")
        # symmetrize exactly so downstream eigendecompositions are clean
        P = 0.5 * (P + P.T)
        if np.linalg.eigvalsh(P)[0] <= 0.0:
            raise ValueError("weight matrix is not positive definite")
        object.__setattr__(self, "P", _freeze(P))

    @classmethod
    def identity(cls, n: int) -> "WeightedNorm":
        return cls(np.eye(n))

    @property
    def dim(self) -> int:
        return self.P.shape[0]

    @cached_property
    def _eig(self):
        w, V = np.linalg.eigh(self.P)
        return w, V

    @cached_property
    def sqrt_matrix(self) -> np.ndarray:
        w, V = self._eig
        return _freeze(V @ np.diag(np.sqrt(w)) @ V.T)

    @cached_property
    def inv_sqrt_matrix(self) -> np.ndarray:
        w, V = self._eig
        return _freeze(V @ np.diag(w**-0.5) @ V.T)

    @cached_property
    def inv_matrix(self) -> np.ndarray:
        w, V = self._eig
        return _freeze(V @ np.diag(1.0 / w) @ V.T)

    def value(self, v: np.ndarray) -> np.ndarray | float:
        """sqrt(v'Pv) for a single vector or a (..., n) batch."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise ValueError(
                f"vector dimension {v.shape[-1]} does not match weight matrix "
                f"dimension {self.dim}"
            )
        q = np.einsum("...i,ij,...j->...", v, self.P, v)
        out = np.sqrt(np.maximum(q, 0.0))
        return float(out) if out.ndim == 0 else out

    def dual_value(self, d: np.ndarray) -> float:
        """sqrt(d'P^{-1}d), the support of the unit ball in direction d."""
        d = _as_vector(d, self.dim, "direction")
        return float(np.sqrt(max(d @ self.inv_matrix @ d, 0.0)))

    def same_as(self, other: "WeightedNorm") -> bool:
        return self.dim == other.dim and np.allclose(
            self.P, other.P, rtol=1e-12, atol=1e-14
        )


def as_weighted_norm(P) -> WeightedNorm:
    return P if isinstance(P, WeightedNorm) else WeightedNorm(P)


def weighted_norm(v, norm) -> float:
    """P-weighted l2 norm sqrt(v'Pv); zero exactly when v = 0."""
    norm = as_weighted_norm(norm)
    v = _as_vector(v, norm.dim)
    return float(norm.value(v))


def matrix_measure(A, norm=None) -> float:
    """Matrix measure of A for the P-weighted l2 norm.

    Equals the largest generalized eigenvalue of (A'P + PA, 2P), i.e. the
    smallest c with A'P + PA <= 2cP.  For P = I this is the largest
    eigenvalue of the symmetric part of A.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if norm is None:
        return float(np.linalg.eigvalsh(0.5 * (A + A.T))[-1])
    norm = as_weighted_norm(norm)
    if norm.dim != A.shape[0]:
        raise ValueError(
            f"matrix dimension {A.shape[0]} does not match weight matrix "
            f"dimension {norm.dim}"
        )
    S = A.T @ norm.P + norm.P @ A
    return float(scipy.linalg.eigh(S, 2.0 * norm.P, eigvals_only=True)[-1])


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Ball {x : ||x - center|| <= radius} in a weighted l2 norm."""

    center: np.ndarray
    radius: float
    norm: WeightedNorm

    def __post_init__(self):
        c = _as_vector(self.center, self.norm.dim, "center")
        if not np.all(np.isfinite(c)):
            raise ValueError("center has non-finite entries")
        if not (self.radius >= 0.0):
            raise ValueError(f"radius must be nonnegative, got {self.radius}")
        object.__setattr__(self, "center", _freeze(c))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.norm.dim

    def contains(self, x, tol: float = DEFAULT_TOL):
        x = np.asarray(x, dtype=float)
        return self.norm.value(x - self.center) <= self.radius + tol

    def support(self, d) -> float:
        d = _as_vector(d, self.dim, "direction")
        return float(d @ self.center) + self.radius * self.norm.dual_value(d)

    def distance_in(self, x: np.ndarray, metric: WeightedNorm):
        """Distance from x (single or batch) to this set in the given metric.

        Closed form when the metric matches this ball's norm; otherwise a
        projected-gradient solve in whitened coordinates, where the ball
        projection is a radial scaling.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if metric.same_as(self.norm):
            d = np.maximum(self.norm.value(x - self.center) - self.radius, 0.0)
            return d if d.shape[0] > 1 else float(d[0])
        # whitened coordinates: a = center + Q^{-1/2} z with ||z||_2 <= radius
        Qih = self.norm.inv_sqrt_matrix
        diff = x - self.center
        Z = np.zeros_like(diff)  # start at the center
        H = Qih @ metric.P @ Qih
        L = 2.0 * np.linalg.eigvalsh(H)[-1]
        step = 1.0 / L
        for _ in range(_PG_ITERS):
            R = diff - Z @ Qih  # residual x - a
            grad = -2.0 * R @ metric.P @ Qih
            Z = Z - step * grad
            nz = np.linalg.norm(Z, axis=1, keepdims=True)
            scale = np.minimum(1.0, self.radius / np.maximum(nz, 1e-300))
            Z = Z * scale
        d = metric.value(diff - Z @ Qih)
        d = np.atleast_1d(d)
        return d if d.shape[0] > 1 else float(d[0])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Uniform samples from the ball (volume measure)."""
        z = rng.standard_normal((size, self.dim))
        z /= np.maximum(np.linalg.norm(z, axis=1, keepdims=True), 1e-300)
        r = rng.random(size) ** (1.0 / self.dim)
        return self.center + (self.radius * r[:, None] * z) @ self.norm.inv_sqrt_matrix.T


@dataclass(frozen=True, eq=False)
class IntervalBox:
    """Axis-aligned box [lo, hi] with componentwise ordering lo <= hi."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lo, name="lo")
        hi = _as_vector(self.hi, lo.shape[0], "hi")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds have non-finite entries")
        if np.any(lo > hi):
            raise ValueError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", _freeze(lo))
        object.__setattr__(self, "hi", _freeze(hi))

    @classmethod
    def centered(cls, halfwidth) -> "IntervalBox":
        h = _as_vector(halfwidth, name="halfwidth")
        return cls(-h, h)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def halfwidth(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    def contains(self, x, tol: float = DEFAULT_TOL):
        x = np.asarray(x, dtype=float)
        inside = np.logical_and(x >= self.lo - tol, x <= self.hi + tol)
        return np.all(inside, axis=-1)

    def support(self, d) -> float:
        d = _as_vector(d, self.dim, "direction")
        return float(np.sum(np.maximum(d * self.lo, d * self.hi)))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def distance_in(self, x: np.ndarray, metric: WeightedNorm):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        offdiag = metric.P - np.diag(np.diag(metric.P))
        if np.max(np.abs(offdiag)) == 0.0:
            # separable quadratic: componentwise clipping is the projection
            d = metric.value(x - self.clip(x))
        else:
            d = _box_qp_distance(x, np.eye(self.dim), self, metric)
        d = np.atleast_1d(d)
        return d if d.shape[0] > 1 else float(d[0])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random((size, self.dim))
        return self.lo + u * (self.hi - self.lo)

    def corners(self) -> np.ndarray:
        n = self.dim
        out = np.empty((2**n, n))
        for i in range(2**n):
            mask = [(i >> j) & 1 for j in range(n)]
            out[i] = np.where(mask, self.hi, self.lo)
        return out


@dataclass(frozen=True, eq=False)
class Parallelotope:
    """Linear preimage {x : Tx in box} of an interval box under a
    nonsingular transform T."""

    transform: np.ndarray
    box: IntervalBox

    def __post_init__(self):
        T = np.asarray(self.transform, dtype=float)
        n = self.box.dim
        if T.shape != (n, n):
            raise ValueError(
                f"transform shape {T.shape} does not match box dimension {n}"
            )
        if abs(np.linalg.det(T)) <= 1e-12:
            raise ValueError("transform is singular (|det| <= 1e-12)")
        object.__setattr__(self, "transform", _freeze(T))

    @cached_property
    def inv_transform(self) -> np.ndarray:
        return _freeze(np.linalg.inv(self.transform))

    @property
    def dim(self) -> int:
        return self.box.dim

    def contains(self, x, tol: float = DEFAULT_TOL):
        x = np.asarray(x, dtype=float)
        y = x @ self.transform.T
        return self.box.contains(y, tol=tol)

    def support(self, d) -> float:
        d = _as_vector(d, self.dim, "direction")
        return self.box.support(self.inv_transform.T @ d)

    def distance_in(self, x: np.ndarray, metric: WeightedNorm):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = _box_qp_distance(x, self.inv_transform, self.box, metric)
        d = np.atleast_1d(d)
        return d if d.shape[0] > 1 else float(d[0])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # uniform on the box maps to uniform on the parallelotope
        y = self.box.sample(rng, size)
        return y @ self.inv_transform.T


DeterministicSet = Ellipsoid | IntervalBox | Parallelotope


@dataclass(frozen=True, eq=False)
class MinkowskiSet:
    """Minkowski sum of a deterministic base set and an origin-centered
    noise ball: membership holds iff x decomposes as base point + ball point.

    Membership is decided by projecting x onto the base in the ball's
    metric and comparing the residual distance with the ball radius;
    supports add, support(d) = support_base(d) + support_ball(d).
    """

    base: DeterministicSet
    noise_ball: Ellipsoid

    def __post_init__(self):
        if self.base.dim != self.noise_ball.dim:
            raise ValueError("base and noise ball dimensions differ")
        if np.any(np.abs(self.noise_ball.center) > 0.0):
            raise ValueError("noise ball must be centered at the origin")

    @property
    def dim(self) -> int:
        return self.base.dim

    def contains(self, x, tol: float = DEFAULT_TOL):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        d = self.base.distance_in(x, self.noise_ball.norm)
        out = np.atleast_1d(d) <= self.noise_ball.radius + tol
        return bool(out[0]) if single else out

    def excess(self, x) -> np.ndarray:
        """How far outside the set each point is (0 for members), measured
        in the noise ball's norm."""
        d = np.atleast_1d(self.base.distance_in(np.atleast_2d(x), self.noise_ball.norm))
        return np.maximum(d - self.noise_ball.radius, 0.0)

    def support(self, d) -> float:
        return self.base.support(d) + self.noise_ball.support(d)


AnySet = DeterministicSet | MinkowskiSet


def membership(S: AnySet, x, tol: float = DEFAULT_TOL) -> bool:
    """Exact membership for boxes, parallelotopes and ellipsoids; projection
    based (tolerance 1e-9) for Minkowski sums."""
    x = _as_vector(x, S.dim, "point")
    return bool(S.contains(x, tol=tol))


def support(S: AnySet, d) -> float:
    return S.support(d)


_PG_ITERS = 200


def _box_qp_distance(x: np.ndarray, M: np.ndarray, box: IntervalBox,
                     metric: WeightedNorm) -> np.ndarray:
    """min_y ||x - My||_P over y in box, by projected gradient (batched).

    Convex with gradient Lipschitz constant 2*lmax(M'PM); 200 iterations at
    step 1/L are ample at the conditioning this package targets.
    """
    H = M.T @ metric.P @ M
    L = 2.0 * np.linalg.eigvalsh(H)[-1]
    step = 1.0 / L
    PM = metric.P @ M
    # start from the box clip of the exact preimage
    Y = box.clip(x @ np.linalg.inv(M).T)
    for _ in range(_PG_ITERS):
        R = x - Y @ M.T
        grad = -2.0 * R @ PM
        Y = box.clip(Y - step * grad)
    return np.asarray(metric.value(x - Y @ M.T))


def interval_sin(lo: float, hi: float) -> tuple[float, float]:
    """Exact range of sin over [lo, hi], handling interior extrema."""
    if not (lo <= hi):
        raise ValueError(f"malformed interval [{lo}, {hi}]")
    if hi - lo >= 2.0 * math.pi:
        return (-1.0, 1.0)
    s_lo, s_hi = math.sin(lo), math.sin(hi)
    out_lo, out_hi = min(s_lo, s_hi), max(s_lo, s_hi)
    # peak pi/2 + 2k*pi inside the interval
    k = math.ceil((lo - math.pi / 2) / (2.0 * math.pi))
    if math.pi / 2 + 2.0 * math.pi * k <= hi:
        out_hi = 1.0
    # trough -pi/2 + 2k*pi inside the interval
    k = math.ceil((lo + math.pi / 2) / (2.0 * math.pi))
    if -math.pi / 2 + 2.0 * math.pi * k <= hi:
        out_lo = -1.0
    return (out_lo, out_hi)


def interval_cos(lo: float, hi: float) -> tuple[float, float]:
    return interval_sin(lo + math.pi / 2, hi + math.pi / 2)


def polygon_outline(S: AnySet, n_dirs: int) -> np.ndarray:
    """Outer polygon of a 2-D set from n_dirs supporting half-planes.

    Directions are equally spaced angles; the polygon is the intersection
    of the half-planes d_k . x <= support(d_k), so every point of the set
    lies inside it.  Vertices are returned counterclockwise without
    repeating the closing vertex.
    """
    if S.dim != 2:
        raise ValueError(f"polygon outlines require dimension 2, got {S.dim}")
    if n_dirs < 3:
        raise ValueError(f"need at least 3 directions, got {n_dirs}")
    thetas = 2.0 * math.pi * np.arange(n_dirs) / n_dirs
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    hs = np.array([S.support(d) for d in dirs])
    R = 2.0 * np.max(np.abs(hs)) + 1.0
    poly = [np.array([R, R]), np.array([-R, R]),
            np.array([-R, -R]), np.array([R, -R])]
    for d, h in zip(dirs, hs):
        poly = _clip_halfplane(poly, d, h)
        if len(poly) < 3:
            break
    return np.array(poly)


def _clip_halfplane(poly, d, h):
    """Sutherland-Hodgman clip of a CCW polygon against d . x <= h."""
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        pin, qin = d @ p <= h, d @ q <= h
        if pin:
            out.append(p)
        if pin != qin:
            dp = q - p
            denom = d @ dp
            t = (h - d @ p) / denom
            out.append(p + t * dp)
    return out
