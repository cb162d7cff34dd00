"""FastAPI service wrapping the reachability pipelines.

Stateless endpoints: every request carries a full experiment config and
returns the computed documents.  Domain failures map to structured error
codes so thin clients can translate them into exit codes.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, pipeline, serialize
from ..config import ExperimentConfig
from ..errors import (CertificateInfeasibleError, DivergenceError,
                      OrderViolationError, UnsoundInclusionError)
from .models import (CertifyResponse, HealthResponse, MethodReach,
                     MethodValidation, ReachResponse, ValidateResponse)

app = FastAPI(title="stochreach", version=__version__)


@app.exception_handler(CertificateInfeasibleError)
async def _infeasible(request: Request, exc: CertificateInfeasibleError):
    return JSONResponse(status_code=422, content={
        "code": "infeasible_certificate", "detail": str(exc)})


@app.exception_handler(UnsoundInclusionError)
async def _unsound(request: Request, exc: UnsoundInclusionError):
    return JSONResponse(status_code=422, content={
        "code": "unsound_inclusion", "detail": str(exc)})


@app.exception_handler(OrderViolationError)
async def _order(request: Request, exc: OrderViolationError):
    return JSONResponse(status_code=422, content={
        "code": "unsound_inclusion", "detail": str(exc)})


@app.exception_handler(DivergenceError)
async def _diverged(request: Request, exc: DivergenceError):
    return JSONResponse(status_code=422, content={
        "code": "divergence", "detail": str(exc)})


@app.exception_handler(ValueError)
async def _bad_value(request: Request, exc: ValueError):
    return JSONResponse(status_code=400, content={
        "code": "invalid_argument", "detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(version=__version__)


def _certificate_doc(out: pipeline.CertifyOutcome) -> dict:
    doc = serialize.certificate_to_dict(out.certificate, out.verification)
    doc["config_hash"] = out.config_hash
    return doc


def _stem(method: str, t: float) -> str:
    return f"{method}_t{t:g}"


def _method_reach(method: str, result, chash: str, n_dirs: int) -> MethodReach:
    sets, polygons = [], {}
    for s in result.sets:
        doc = serialize.prob_set_to_dict(s)
        doc["config_hash"] = chash
        sets.append(doc)
        if s.dim == 2:
            polygons[_stem(method, s.t)] = serialize.polygon_to_csv(
                s.outline(n_dirs), hash_comment=chash)
    emb = None
    if hasattr(result, "embedding"):
        emb = serialize.embedding_to_csv(result.embedding, hash_comment=chash)
    return MethodReach(sets=sets, polygons=polygons, embedding_csv=emb)


@app.post("/certify", response_model=CertifyResponse)
def certify(cfg: ExperimentConfig) -> CertifyResponse:
    out = pipeline.run_certify(cfg)
    return CertifyResponse(certificate=_certificate_doc(out),
                           config_hash=out.config_hash)


@app.post("/reach", response_model=ReachResponse)
def reach(cfg: ExperimentConfig, n_dirs: int = 64) -> ReachResponse:
    out = pipeline.run_reach(cfg)
    methods = {
        m: _method_reach(m, r, out.config_hash, n_dirs)
        for m, r in out.results.items()
    }
    return ReachResponse(certificate=_certificate_doc(out.certify),
                         methods=methods, config_hash=out.config_hash)


@app.post("/validate", response_model=ValidateResponse)
def validate(cfg: ExperimentConfig, n_dirs: int = 64) -> ValidateResponse:
    out = pipeline.run_validate(cfg)
    chash = out.config_hash
    methods = {
        m: _method_reach(m, r, chash, n_dirs)
        for m, r in out.reach.results.items()
    }
    validation = {}
    for m, report in out.reports.items():
        doc = serialize.coverage_to_dict(report)
        doc["config_hash"] = chash
        doc["delta_mode"] = cfg.run.delta_mode
        ends = {}
        if cfg.validation.dump_endpoints:
            ends = {
                f"endpoints_{_stem(m, t)}": serialize.endpoints_to_csv(
                    states, hash_comment=chash)
                for t, states in out.endpoints[m].items()
            }
        validation[m] = MethodValidation(report=doc, endpoints=ends)
    return ValidateResponse(
        certificate=_certificate_doc(out.reach.certify), methods=methods,
        validation=validation, passed=out.passed, config_hash=chash,
    )
