"""Built-in benchmark systems and the declarative drift vocabulary.

Drifts are declared per state component as sums of terms (constants,
linear state/input terms, sines, cosines, pairwise products).  From the
terms we derive a vectorized drift, an analytic Jacobian, and a natural
interval inclusion function, so declared systems work with every engine
in the package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certify import VertexHull
from .dynamics import SystemModel
from .reach import InclusionFunction
from .sets import interval_cos, interval_sin

_KINDS = ("const", "linear", "sin", "cos", "product", "input")


@dataclass(frozen=True)
class Term:
    """One additive drift term; var indices are zero-based."""

    kind: str
    coef: float
    var: int | None = None
    var2: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.kind != "const" and self.var is None:
            raise ValueError(f"term kind {self.kind!r} needs a variable index")
        if self.kind == "product" and self.var2 is None:
            raise ValueError("product terms need two variable indices")


def _check_terms(drift_terms, n, p):
    for i, comp in enumerate(drift_terms):
        for term in comp:
            lim = p if term.kind == "input" else n
            for v in (term.var, term.var2):
                if v is not None and not (0 <= v < lim):
                    raise ValueError(
                        f"component {i}: variable index {v} out of range"
                    )
            if term.kind == "product" and term.var2 is None:
                raise ValueError("product terms need two variable indices")


def _eval_terms(terms, x, u):
    """Sum of one component's terms; x is (n,) or (B, n)."""
    acc = 0.0
    for t in terms:
        if t.kind == "const":
            acc = acc + t.coef
        elif t.kind == "linear":
            acc = acc + t.coef * x[..., t.var]
        elif t.kind == "sin":
            acc = acc + t.coef * np.sin(x[..., t.var])
        elif t.kind == "cos":
            acc = acc + t.coef * np.cos(x[..., t.var])
        elif t.kind == "product":
            acc = acc + t.coef * x[..., t.var] * x[..., t.var2]
        else:  # input
            acc = acc + t.coef * u[..., t.var]
    return acc


def _interval_eval_terms(terms, xlo, xhi, ulo, uhi):
    """Natural interval extension of one component's terms."""
    lo, hi = 0.0, 0.0
    for t in terms:
        if t.kind == "const":
            a = b = t.coef
        elif t.kind == "linear":
            a, b = t.coef * xlo[t.var], t.coef * xhi[t.var]
        elif t.kind == "sin":
            s_lo, s_hi = interval_sin(xlo[t.var], xhi[t.var])
            a, b = t.coef * s_lo, t.coef * s_hi
        elif t.kind == "cos":
            s_lo, s_hi = interval_cos(xlo[t.var], xhi[t.var])
            a, b = t.coef * s_lo, t.coef * s_hi
        elif t.kind == "product":
            cands = [xlo[t.var] * xlo[t.var2], xlo[t.var] * xhi[t.var2],
                     xhi[t.var] * xlo[t.var2], xhi[t.var] * xhi[t.var2]]
            a, b = t.coef * min(cands), t.coef * max(cands)
        else:  # input
            a, b = t.coef * ulo[t.var], t.coef * uhi[t.var]
        if a > b:
            a, b = b, a
        lo, hi = lo + a, hi + b
    return lo, hi


def _term_jacobian(drift_terms, n, x):
    J = np.zeros((n, n))
    for i, comp in enumerate(drift_terms):
        for t in comp:
            if t.kind == "linear":
                J[i, t.var] += t.coef
            elif t.kind == "sin":
                J[i, t.var] += t.coef * np.cos(x[t.var])
            elif t.kind == "cos":
                J[i, t.var] -= t.coef * np.sin(x[t.var])
            elif t.kind == "product":
                J[i, t.var] += t.coef * x[t.var2]
                J[i, t.var2] += t.coef * x[t.var]
    return J


@dataclass(frozen=True, eq=False)
class TermSystem:
    """A system declared through drift terms, with its derived pieces."""

    model: SystemModel
    drift_terms: tuple
    diffusion_matrix: np.ndarray

    def natural_inclusion(self) -> InclusionFunction:
        terms = self.drift_terms
        n, p = self.model.state_dim, self.model.input_dim

        def fn(t, xlo, xhi, ulo, uhi):
            lo = np.empty(n)
            hi = np.empty(n)
            for i in range(n):
                lo[i], hi[i] = _interval_eval_terms(terms[i], xlo, xhi, ulo, uhi)
            return lo, hi

        return InclusionFunction(fn=fn, state_dim=n, input_dim=p, kind="natural")


def build_term_system(drift_terms, diffusion, input_dim: int = 0) -> TermSystem:
    """Assemble a SystemModel (vectorized, with analytic Jacobian) from
    per-component term lists and a constant diffusion matrix."""
    terms = tuple(tuple(comp) for comp in drift_terms)
    n = len(terms)
    sigma = np.asarray(diffusion, dtype=float)
    if sigma.ndim == 1:
        sigma = sigma[:, None]
    if sigma.shape[0] != n:
        raise ValueError(
            f"diffusion has {sigma.shape[0]} rows, expected state dim {n}"
        )
    _check_terms(terms, n, input_dim)

    def drift(t, x, u):
        x = np.asarray(x, dtype=float)
        cols = [np.broadcast_to(_eval_terms(c, x, u), x[..., 0].shape)
                for c in terms]
        return np.stack(cols, axis=-1)

    def diffusion_fn(t, x, u):
        return sigma

    def jacobian(t, x, u):
        return _term_jacobian(terms, n, np.asarray(x, dtype=float))

    model = SystemModel(
        state_dim=n, input_dim=input_dim, noise_dim=sigma.shape[1],
        drift=drift, diffusion=diffusion_fn, jacobian=jacobian,
        vectorized=True,
    )
    return TermSystem(model=model, drift_terms=terms, diffusion_matrix=sigma)


def pendulum(g_over_l: float = 10.0, k1: float = -20.0, k2: float = -20.0,
             sigma: float = 0.1) -> TermSystem:
    """Feedback-stabilized inverted pendulum benchmark.

    Angle and angular velocity dynamics with a linear stabilizing feedback
    folded into the drift and additive noise on the velocity:

        dX1 = X2 dt
        dX2 = (g_over_l sin X1 + k1 X1 + k2 X2) dt + sigma dW
    """
    return build_term_system(
        drift_terms=[
            [Term("linear", 1.0, var=1)],
            [Term("sin", g_over_l, var=0),
             Term("linear", k1, var=0),
             Term("linear", k2, var=1)],
        ],
        diffusion=[[0.0], [sigma]],
    )


def pendulum_hull(g_over_l: float = 10.0, k1: float = -20.0,
                  k2: float = -20.0) -> VertexHull:
    """Jacobian hull for the pendulum: the cosine entry ranges over
    [-1, 1], so the Jacobian stays in the hull of the two extreme
    matrices everywhere."""
    A1 = np.array([[0.0, 1.0], [g_over_l + k1, k2]])
    A2 = np.array([[0.0, 1.0], [-g_over_l + k1, k2]])
    return VertexHull(vertices=(A1, A2))


def ornstein_uhlenbeck(a: float = -1.0, sigma: float = 0.5) -> TermSystem:
    """Scalar linear SDE dX = aX dt + sigma dW."""
    return build_term_system(
        drift_terms=[[Term("linear", a, var=0)]],
        diffusion=[[sigma]],
    )


def linear_system(A, B=None, sigma=None) -> TermSystem:
    """Linear drift Ax (+ Bu) with constant diffusion, via linear terms."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    B = None if B is None else np.asarray(B, dtype=float)
    p = 0 if B is None else B.shape[1]
    terms = []
    for i in range(n):
        comp = [Term("linear", float(A[i, j]), var=j)
                for j in range(n) if A[i, j] != 0.0]
        if B is not None:
            comp += [Term("input", float(B[i, j]), var=j)
                     for j in range(p) if B[i, j] != 0.0]
        terms.append(comp)
    if sigma is None:
        sigma = np.zeros((n, 1))
    return build_term_system(terms, sigma, input_dim=p)


BUILTIN_SYSTEMS = {
    "pendulum": pendulum,
}
