"""Request/response models for the reachability service.

Requests are ExperimentConfig documents; responses carry the JSON-ready
reports plus pre-rendered CSV artifacts keyed by file stem, so clients
can persist them without re-deriving formats.
"""
from __future__ import annotations

from pydantic import BaseModel, ConfigDict

from ..config import ExperimentConfig  # noqa: F401  (re-exported for clients)


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class CertifyResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    certificate: dict
    config_hash: str


class MethodReach(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sets: list[dict]
    polygons: dict[str, str]          # file stem -> polygon CSV
    embedding_csv: str | None = None  # interval method only


class ReachResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    certificate: dict
    methods: dict[str, MethodReach]
    config_hash: str


class MethodValidation(BaseModel):
    model_config = ConfigDict(extra="forbid")

    report: dict
    endpoints: dict[str, str]  # file stem -> endpoint CSV


class ValidateResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    certificate: dict
    methods: dict[str, MethodReach]
    validation: dict[str, MethodValidation]
    passed: bool
    config_hash: str


class ErrorBody(BaseModel):
    code: str
    detail: str
