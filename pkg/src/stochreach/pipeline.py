"""Experiment pipelines: certify, reach, validate.

Pure functions from a validated ExperimentConfig to result objects; the
service endpoints and the CLI are thin wrappers around these.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import serialize
from .certify import (PROVEN, USER, ContractionCertificate, SearchOptions,
                      VerificationReport, VertexHull, compute_dP,
                      search_certificate, verify_certificate)
from .config import ExperimentConfig
from .dynamics import InputSignal
from .errors import CertificateInfeasibleError
from .probreach import (ContractionReachResult, IntervalReachResult,
                        prob_reach_contraction, prob_reach_interval)
from .reach import endpoint_inclusion, transform_system
from .sets import Ellipsoid, IntervalBox, Parallelotope, WeightedNorm
from .systems import BUILTIN_SYSTEMS, Term, TermSystem, build_term_system, pendulum_hull
from .validate import monte_carlo_coverage


def build_system(cfg: ExperimentConfig) -> TermSystem:
    sc = cfg.system
    if sc.builtin is not None:
        if sc.builtin not in BUILTIN_SYSTEMS:
            raise ValueError(
                f"unknown builtin system {sc.builtin!r}; "
                f"available: {sorted(BUILTIN_SYSTEMS)}"
            )
        kwargs = {} if sc.sigma is None else {"sigma": sc.sigma}
        return BUILTIN_SYSTEMS[sc.builtin](**kwargs)
    terms = [
        [Term(kind=t.kind, coef=t.coef,
              var=None if t.var is None else t.var - 1,
              var2=None if t.var2 is None else t.var2 - 1)
         for t in comp.terms]
        for comp in sc.drift
    ]
    return build_term_system(terms, sc.diffusion, input_dim=sc.input_dim)


def _resolve_hull(cfg: ExperimentConfig) -> VertexHull | None:
    hc = cfg.certificate.hull
    if hc is None:
        return None
    if hc == "builtin":
        if cfg.system.builtin == "pendulum":
            return pendulum_hull()
        return None
    return VertexHull(vertices=tuple(np.asarray(A, dtype=float) for A in hc))


@dataclass(frozen=True, eq=False)
class CertifyOutcome:
    certificate: ContractionCertificate
    verification: VerificationReport | None
    system: TermSystem
    config_hash: str


def run_certify(cfg: ExperimentConfig) -> CertifyOutcome:
    """Resolve the experiment certificate: verify a user-supplied weight
    matrix against the hull, or search for one.

    A user weight matrix that fails verification is rejected as
    infeasible rather than silently accepted.
    """
    ts = build_system(cfg)
    cc = cfg.certificate
    hull = _resolve_hull(cfg)
    chash = serialize.config_hash(cfg.model_dump(mode="json"))

    if cc.mode == "search":
        if hull is None:
            raise ValueError("certificate search needs hull vertices")
        opts = SearchOptions(
            c_range=cc.search.c_range, resolution=cc.search.resolution,
            restarts=cc.search.restarts, inner_iters=cc.search.inner_iters,
            seed=cc.search.seed,
        )
        cert = search_certificate(hull, opts, sigma=ts.diffusion_matrix)
        report = verify_certificate(hull, cert.norm, cert.c_P, tol=cc.tol)
    else:
        norm = WeightedNorm(np.asarray(cc.P, dtype=float))
        report = None
        provenance = USER
        if hull is not None:
            report = verify_certificate(hull, norm, cc.c_P, tol=cc.tol)
            if not report.passed:
                raise CertificateInfeasibleError(
                    cc.c_P, cc.c_P,
                    message=(
                        f"user weight matrix fails vertex verification at "
                        f"c_P={cc.c_P:g}: worst margin {report.worst_margin:g} "
                        f"> tol {cc.tol:g}"
                    ),
                )
            provenance = PROVEN
        cert = ContractionCertificate(
            norm=norm, c_P=float(cc.c_P),
            d_P=0.0, provenance=provenance,
            margins=() if report is None else report.margins,
        )

    d_P = cc.d_P if cc.d_P is not None else compute_dP(ts.diffusion_matrix,
                                                       cert.norm)
    c = cc.c if cc.c is not None else cert.c_P
    if cc.ell is not None:
        ell = cc.ell
    elif ts.model.input_dim == 0:
        ell = 0.0
    else:
        ell = None
    cert = ContractionCertificate(
        norm=cert.norm, c_P=cert.c_P, d_P=float(d_P), c=c, ell=ell,
        provenance=cert.provenance, margins=cert.margins,
    )
    return CertifyOutcome(certificate=cert, verification=report, system=ts,
                          config_hash=chash)


@dataclass(frozen=True, eq=False)
class ReachOutcome:
    certify: CertifyOutcome
    results: dict  # method name -> ContractionReachResult | IntervalReachResult
    config_hash: str


def _contraction_radius(cfg: ExperimentConfig, norm: WeightedNorm) -> float:
    con = cfg.contraction
    if con.radius is not None:
        return float(con.radius)
    return float(norm.value(np.asarray(con.radius_point, dtype=float)))


def run_reach(cfg: ExperimentConfig,
              certify_outcome: CertifyOutcome | None = None) -> ReachOutcome:
    out = certify_outcome if certify_outcome is not None else run_certify(cfg)
    cert, ts = out.certificate, out.system
    run = cfg.run
    t_end = run.t_end if run.t_end is not None else max(run.times)
    delta = run.delta
    if run.delta_mode == "bonferroni":
        delta = run.delta / len(run.times)
    results = {}
    for method in cfg.methods():
        if method == "contraction":
            con = cfg.contraction
            u_star = (InputSignal.constant(con.u_star)
                      if con.u_star is not None else None)
            results[method] = prob_reach_contraction(
                ts.model, cert, np.asarray(con.center, dtype=float), u_star,
                r1=_contraction_radius(cfg, cert.norm), r2=con.r2,
                delta=delta, times=run.times, dt=run.dt, t_end=t_end,
                rho_scale=cfg.validation.rho_scale,
            )
        else:
            iv = cfg.interval
            T = iv.transform
            if iv.inclusion == "natural":
                inc = ts.natural_inclusion()
            elif T is not None:
                inc = endpoint_inclusion(transform_system(T, ts.model))
            else:
                box = IntervalBox(np.asarray(iv.y_lo), np.asarray(iv.y_hi))
                inc = endpoint_inclusion(ts.model, domain_box=box)
            results[method] = prob_reach_interval(
                ts.model, cert, inc, np.asarray(iv.y_lo, dtype=float),
                np.asarray(iv.y_hi, dtype=float), iv.u_lo, iv.u_hi,
                delta=delta, times=run.times, dt=run.dt, transform=T,
                t_end=t_end, rho_scale=cfg.validation.rho_scale,
            )
    return ReachOutcome(certify=out, results=results,
                        config_hash=out.config_hash)


@dataclass(frozen=True, eq=False)
class ValidateOutcome:
    reach: ReachOutcome
    reports: dict      # method -> CoverageReport
    endpoints: dict    # method -> {t: states}
    config_hash: str

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())


def _initial_sampler(cfg: ExperimentConfig, method: str, cert_norm):
    """The set the reach computation used, exposed as the default
    validation sampling set."""
    if method == "contraction":
        con = cfg.contraction
        return Ellipsoid(center=np.asarray(con.center, dtype=float),
                         radius=_contraction_radius(cfg, cert_norm),
                         norm=cert_norm)
    iv = cfg.interval
    box = IntervalBox(np.asarray(iv.y_lo, dtype=float),
                      np.asarray(iv.y_hi, dtype=float))
    if iv.transform is None:
        return box
    return Parallelotope(transform=np.asarray(iv.transform, dtype=float),
                         box=box)


def run_validate(cfg: ExperimentConfig,
                 reach_outcome: ReachOutcome | None = None) -> ValidateOutcome:
    out = reach_outcome if reach_outcome is not None else run_reach(cfg)
    cert = out.certify.certificate
    ts = out.certify.system
    reports, endpoints = {}, {}
    for method, result in out.results.items():
        sampler = _initial_sampler(cfg, method, cert.norm)
        u, input_sampler = None, None
        if method == "contraction" and cfg.contraction.u_star is not None:
            u = InputSignal.constant(cfg.contraction.u_star)
        if method == "interval" and cfg.interval.u_lo is not None:
            # constant per-path inputs drawn uniformly from the input box
            input_sampler = IntervalBox(np.asarray(cfg.interval.u_lo),
                                        np.asarray(cfg.interval.u_hi))
        report, ends = monte_carlo_coverage(
            ts.model, result.sets, sampler, u,
            n_paths=cfg.run.n_paths, dt=cfg.run.dt, seed=cfg.run.seed,
            input_sampler=input_sampler, keep_endpoints=True,
        )
        reports[method] = report
        endpoints[method] = ends
    return ValidateOutcome(reach=out, reports=reports, endpoints=endpoints,
                           config_hash=out.config_hash)


def pendulum_demo_config(method: str = "both", delta: float = 0.01,
                         n_paths: int = 2000, seed: int = 7,
                         dt: float = 1e-3) -> ExperimentConfig:
    """The packaged pendulum experiment: verified weight matrix, both
    reach engines, and Monte Carlo validation at t = 1, 2, 4."""
    w = math.pi / 10.0
    return ExperimentConfig.model_validate({
        "title": "inverted-pendulum-99pct",
        "system": {"builtin": "pendulum"},
        "certificate": {
            "mode": "verify",
            "P": [[35.68, 2.21], [2.21, 1.27]],
            "c_P": -0.5,
            "tol": 0.05,
        },
        "contraction": {
            "center": [0.0, 0.0],
            "radius_point": [w, 0.2],
            "r2": 0.0,
        },
        "interval": {
            "transform": [[1.0, 0.2], [1.0, 0.0]],
            "y_lo": [-1.04 * w, -w],
            "y_hi": [1.04 * w, w],
            "inclusion": "endpoint",
        },
        "run": {
            "method": method,
            "times": [1.0, 2.0, 4.0],
            "dt": dt,
            "delta": delta,
            "n_paths": n_paths,
            "seed": seed,
        },
    })
