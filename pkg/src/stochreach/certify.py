"""Contraction certificates: construction, verification, and search.

A certificate is a weight matrix P with a contraction rate c_P such that
A'P + PA <= 2 c_P P holds for every vertex A of a convex hull enclosing
the system Jacobian, plus a diffusion trace bound d_P.  Optimal rates are
found by bisection on c_P with an inner feasibility search over P.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .dynamics import SystemModel, input_jacobian_fd, system_jacobian
from .errors import CertificateInfeasibleError
from .sets import IntervalBox, WeightedNorm, as_weighted_norm, matrix_measure

PROVEN = "PROVEN"
SAMPLED = "SAMPLED"
USER = "USER"

_EPS_PD = 1e-8  # ridge keeping the factorized candidate positive definite


@dataclass(frozen=True, eq=False)
class VertexHull:
    """Vertices {A_i} whose convex hull encloses the Jacobian."""

    vertices: tuple

    def __post_init__(self):
        vs = tuple(np.asarray(A, dtype=float) for A in self.vertices)
        if not vs:
            raise ValueError("hull needs at least one vertex")
        n = vs[0].shape[0]
        for A in vs:
            if A.shape != (n, n):
                raise ValueError("all hull vertices must be square and same size")
            if not np.all(np.isfinite(A)):
                raise ValueError("hull vertex has non-finite entries")
        object.__setattr__(self, "vertices", vs)

    @property
    def dim(self) -> int:
        return self.vertices[0].shape[0]


@dataclass(frozen=True, eq=False)
class ContractionCertificate:
    """(P, c_P, d_P) plus the optional input-to-state constants (c, ell)."""

    norm: WeightedNorm
    c_P: float
    d_P: float
    c: float | None = None
    ell: float | None = None
    provenance: str = USER
    margins: tuple = ()

    def __post_init__(self):
        if self.d_P < 0:
            raise ValueError(f"d_P must be nonnegative, got {self.d_P}")
        if self.ell is not None and self.ell < 0:
            raise ValueError(f"ell must be nonnegative, got {self.ell}")
        if self.provenance not in (PROVEN, SAMPLED, USER):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def with_gains(self, c: float, ell: float) -> "ContractionCertificate":
        return ContractionCertificate(
            norm=self.norm, c_P=self.c_P, d_P=self.d_P, c=c, ell=ell,
            provenance=self.provenance, margins=self.margins,
        )


def compute_dP(sigma, norm) -> float:
    """Diffusion trace bound tr(sigma' P sigma) for a constant diffusion
    matrix; for state-dependent diffusion pass a bounding matrix valid on
    the operating domain."""
    norm = as_weighted_norm(norm)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim == 1:
        sigma = sigma[:, None]
    if sigma.ndim != 2 or sigma.shape[0] != norm.dim:
        raise ValueError(
            f"diffusion shape {sigma.shape} does not match weight dimension "
            f"{norm.dim}"
        )
    return float(np.trace(sigma.T @ norm.P @ sigma))


def vertex_margins(hull: VertexHull, norm: WeightedNorm, c_P: float) -> np.ndarray:
    """Largest eigenvalue of A'P + PA - 2 c_P P for every hull vertex."""
    P = norm.P
    return np.array([
        np.linalg.eigvalsh(A.T @ P + P @ A - 2.0 * c_P * P).max()
        for A in hull.vertices
    ])


@dataclass(frozen=True)
class VerificationReport:
    margins: tuple
    c_P: float
    tol: float
    passed: bool

    @property
    def worst_margin(self) -> float:
        return max(self.margins)


def verify_certificate(hull: VertexHull, norm, c_P: float,
                       tol: float = 1e-6) -> VerificationReport:
    """Check the vertex inequalities A_i'P + PA_i <= 2 c_P P up to tol.

    Passing certifies the contraction rate c_P on the whole convex hull of
    the vertices; failure is reported, not raised.
    """
    norm = as_weighted_norm(norm)
    if norm.dim != hull.dim:
        raise ValueError("hull and weight matrix dimensions differ")
    margins = vertex_margins(hull, norm, c_P)
    return VerificationReport(
        margins=tuple(float(m) for m in margins),
        c_P=float(c_P),
        tol=float(tol),
        passed=bool(np.all(margins <= tol)),
    )


# ---------------------------------------------------------------------------
# rate search: bisection on c_P, subgradient feasibility search over P
# ---------------------------------------------------------------------------

def _normalized_objective(L: np.ndarray, hull: VertexHull, c: float):
    """Worst vertex margin for P = (LL' + eps I) / P_nn and its subgradient
    with respect to L.

    The margin is the top eigenvalue of M_i(W) = A_i'W + WA_i - 2cW with W
    the normalized candidate; its gradient in W is the symmetric outer
    product built from the top eigenvector, chained through the
    normalization and the Cholesky-style factorization.
    """
    n = hull.dim
    P = L @ L.T + _EPS_PD * np.eye(n)
    s = P[n - 1, n - 1]
    W = P / s
    worst, active = -np.inf, None
    for A in hull.vertices:
        M = A.T @ W + W @ A - 2.0 * c * W
        lam, V = np.linalg.eigh(M)
        if lam[-1] > worst:
            worst, active = lam[-1], (A, V[:, -1])
    A, v = active
    Av = A @ v
    G_W = np.outer(Av, v) + np.outer(v, Av) - 2.0 * c * np.outer(v, v)
    e = np.zeros(n)
    e[n - 1] = 1.0
    G_P = G_W / s - (np.sum(G_W * P) / s**2) * np.outer(e, e)
    grad_L = np.tril(2.0 * G_P @ L)
    return float(worst), grad_L, W


def _feasibility_search(hull: VertexHull, c: float, *, restarts: int,
                        iters: int, seed: int, warm: np.ndarray | None):
    """Best normalized candidate at fixed rate c.

    Subgradient descent with normalized diminishing steps, restarted from
    the warm start (previous feasible P), the identity, and random
    lower-triangular factors; restart selection is by best value, ties by
    restart index, so results are deterministic.
    """
    n = hull.dim
    rng = np.random.default_rng(seed)
    inits = []
    if warm is not None:
        inits.append(np.linalg.cholesky(warm + _EPS_PD * np.eye(n)))
    inits.append(np.eye(n))
    while len(inits) < restarts:
        L = np.tril(rng.standard_normal((n, n)))
        d = np.diag_indices(n)
        L[d] = np.abs(L[d]) + 0.5
        inits.append(L)

    best_val, best_W = np.inf, None
    for L0 in inits[:restarts]:
        L = L0.copy()
        val, grad, W = _normalized_objective(L, hull, c)
        if val < best_val:
            best_val, best_W = val, W
        for k in range(iters):
            gnorm = np.linalg.norm(grad)
            if gnorm < 1e-14:
                break
            step = 0.5 / (1.0 + k / 50.0)
            L = L - step * (np.linalg.norm(L) + 1e-12) * grad / gnorm
            val, grad, W = _normalized_objective(L, hull, c)
            if val < best_val:
                best_val, best_W = val, W
            if best_val < -1e-9:
                return best_val, best_W
        if best_val < -1e-9:
            break
    return best_val, best_W


@dataclass(frozen=True)
class SearchOptions:
    c_range: tuple | None = None  # (lo, hi); lo presumed infeasible, hi checked
    resolution: float = 1e-3
    restarts: int = 10
    inner_iters: int = 400
    seed: int = 0


def search_certificate(hull: VertexHull,
                       options: SearchOptions | None = None,
                       sigma=None) -> ContractionCertificate:
    """Minimize the certified contraction rate over weight matrices.

    Bisection on c_P; at each candidate rate an inner subgradient search
    looks for a feasible normalized P.  The default bracket is
    [max spectral abscissa of the vertices, max identity-norm matrix
    measure]: rates below the abscissa are infeasible for every P, and the
    upper end is feasible with P = I by construction.  Raises
    CertificateInfeasibleError when the upper end of a user bracket cannot
    be certified.

    When sigma is given, d_P is computed for the returned weight matrix;
    otherwise d_P is 0 and should be filled in by the caller.
    """
    opt = options or SearchOptions()
    n = hull.dim

    default_hi = max(matrix_measure(A) for A in hull.vertices)
    if opt.c_range is not None:
        lo, hi = float(opt.c_range[0]), float(opt.c_range[1])
        if not lo < hi:
            raise ValueError(f"bisection range must satisfy lo < hi, got {opt.c_range}")
        val, W = _feasibility_search(hull, hi, restarts=opt.restarts,
                                     iters=opt.inner_iters, seed=opt.seed,
                                     warm=np.eye(n) if hi >= default_hi else None)
        if hi >= default_hi and val > 0.0:
            # P = I is feasible at hi by construction even if the search
            # missed it (its margin there is exactly zero up to rounding)
            val, W = 0.0, np.eye(n)
        if val > 1e-9 or W is None:
            raise CertificateInfeasibleError(lo, hi)
        P_best, c_best = W, hi
    else:
        lo = max(np.linalg.eigvals(A).real.max() for A in hull.vertices)
        hi = default_hi
        P_best, c_best = np.eye(n), hi
        if hi <= lo:
            lo = hi - max(1e-3, abs(hi) * 1e-3)

    it, warm = 0, P_best
    while hi - lo > opt.resolution and it < 200:
        mid = 0.5 * (lo + hi)
        val, W = _feasibility_search(hull, mid, restarts=opt.restarts,
                                     iters=opt.inner_iters,
                                     seed=opt.seed + 1 + it, warm=warm)
        if val < 0.0:
            hi, P_best, c_best, warm = mid, W, mid, W
        else:
            lo = mid
        it += 1

    norm = WeightedNorm(P_best)
    margins = vertex_margins(hull, norm, c_best)
    d_P = compute_dP(sigma, norm) if sigma is not None else 0.0
    return ContractionCertificate(
        norm=norm, c_P=float(c_best), d_P=d_P, provenance=PROVEN,
        margins=tuple(float(m) for m in margins),
    )


@dataclass(frozen=True)
class GainEstimate:
    """Sampled input-to-state constants; an empirical sup, not a proof."""

    c: float
    ell: float
    argmax_state: np.ndarray
    argmax_input: np.ndarray | None
    n_samples: int
    provenance: str = SAMPLED


def _sobol_points(dim: int, n: int, seed: int) -> np.ndarray:
    sampler = qmc.Sobol(d=dim, scramble=False, seed=seed)
    m = max(int(np.ceil(np.log2(max(n, 2)))), 1)
    pts = sampler.random_base2(m)
    return pts[:n]


def estimate_gains(sys: SystemModel, state_box: IntervalBox,
                   input_box: IntervalBox | None, norm,
                   n_samples: int = 256,
                   safety: float = 1.05) -> GainEstimate:
    """Empirical sup of the Jacobian matrix measure and the induced norm of
    the input Jacobian over a Sobol grid, inflated by a safety factor.

    The result is flagged SAMPLED: it dominates every sample but is not a
    certificate.  The input-space norm is the Euclidean one, so the induced
    norm is the spectral norm of P^{1/2} D_u f.
    """
    if n_samples < 100:
        raise ValueError(f"need at least 100 samples, got {n_samples}")
    norm = as_weighted_norm(norm)
    with_input = sys.input_dim > 0 and input_box is not None
    dim = state_box.dim + (input_box.dim if with_input else 0)
    pts = _sobol_points(dim, n_samples, seed=0)

    sqrtP = norm.sqrt_matrix
    best_c, best_ell = -np.inf, 0.0
    arg_x, arg_u = state_box.center, None
    for p in pts:
        x = state_box.lo + p[:state_box.dim] * (state_box.hi - state_box.lo)
        if with_input:
            q = p[state_box.dim:]
            uv = input_box.lo + q * (input_box.hi - input_box.lo)
        else:
            uv = None
        J = system_jacobian(sys, 0.0, x, uv)
        mu = matrix_measure(J, norm)
        if mu > best_c:
            best_c, arg_x = mu, x
        if with_input:
            B = input_jacobian_fd(sys, 0.0, x, uv)
            ind = np.linalg.norm(sqrtP @ B, ord=2)
            if ind > best_ell:
                best_ell, arg_u = ind, uv
    # the safe direction for a rate estimate is upward: c must dominate
    # every sampled measure, so the margin is added, never subtracted
    c = best_c + (safety - 1.0) * abs(best_c)
    ell = best_ell * safety
    return GainEstimate(
        c=float(c), ell=float(ell), argmax_state=arg_x, argmax_input=arg_u,
        n_samples=n_samples,
    )
