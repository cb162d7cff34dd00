"""Experiment configuration schema.

Configs arrive either as TOML files (CLI) or JSON bodies (service); both
validate against the same pydantic models.  Unknown keys are hard errors.
Variable indices in drift terms are one-based, matching the x1..xn column
names used in CSV outputs.
"""
from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TermConfig(_Strict):
    kind: Literal["const", "linear", "sin", "cos", "product", "input"]
    coef: float
    var: int | None = None
    var2: int | None = None


class DriftComponent(_Strict):
    terms: list[TermConfig]


class SystemConfig(_Strict):
    builtin: str | None = None
    sigma: float | None = None  # noise scale override for builtins
    drift: list[DriftComponent] | None = None
    diffusion: list[list[float]] | None = None
    input_dim: int = 0

    @model_validator(mode="after")
    def _one_source(self):
        if self.builtin is None and self.drift is None:
            raise ValueError("system needs either a builtin name or drift terms")
        if self.builtin is not None and self.drift is not None:
            raise ValueError("give either a builtin name or drift terms, not both")
        if self.builtin is None and self.diffusion is None:
            raise ValueError("declared systems need a constant diffusion matrix")
        return self


class SearchConfig(_Strict):
    c_range: tuple[float, float] | None = None
    resolution: float = 1e-3
    restarts: int = 10
    inner_iters: int = 400
    seed: int = 0


class CertificateConfig(_Strict):
    mode: Literal["verify", "search"] = "verify"
    P: list[list[float]] | None = None
    c_P: float | None = None
    d_P: float | None = None  # override for state-dependent diffusion bounds
    c: float | None = None
    ell: float | None = None
    hull: Literal["builtin"] | list[list[list[float]]] | None = "builtin"
    tol: float = 1e-6
    search: SearchConfig = Field(default_factory=SearchConfig)

    @model_validator(mode="after")
    def _mode_fields(self):
        if self.mode == "verify" and (self.P is None or self.c_P is None):
            raise ValueError("verify mode needs both P and c_P")
        return self


class ContractionConfig(_Strict):
    center: list[float]
    radius: float | None = None
    radius_point: list[float] | None = None
    r2: float = 0.0
    u_star: list[float] | None = None

    @model_validator(mode="after")
    def _radius_source(self):
        if (self.radius is None) == (self.radius_point is None):
            raise ValueError("give exactly one of radius or radius_point")
        return self


class IntervalConfig(_Strict):
    transform: list[list[float]] | None = None
    y_lo: list[float]
    y_hi: list[float]
    u_lo: list[float] | None = None
    u_hi: list[float] | None = None
    inclusion: Literal["endpoint", "natural"] = "endpoint"

    @model_validator(mode="after")
    def _natural_untransformed(self):
        if self.inclusion == "natural" and self.transform is not None:
            raise ValueError(
                "natural inclusion functions are built in state coordinates; "
                "drop the transform or use the endpoint inclusion"
            )
        return self


class RunConfig(_Strict):
    method: Literal["contraction", "interval", "both"] = "both"
    times: list[float]
    dt: float = 1e-3
    t_end: float | None = None
    delta: float = 0.01
    # pointwise: each checkpoint set holds with probability 1 - delta on
    # its own; bonferroni: delta is split across checkpoints so the sets
    # hold simultaneously with probability 1 - delta (union bound)
    delta_mode: Literal["pointwise", "bonferroni"] = "pointwise"
    n_paths: int = 2000
    seed: int = 0


class ValidationConfig(_Strict):
    rho_scale: float = 1.0  # diagnostic shrink/inflate of the noise ball
    dump_endpoints: bool = True


class ExperimentConfig(_Strict):
    title: str = ""
    system: SystemConfig
    certificate: CertificateConfig
    contraction: ContractionConfig | None = None
    interval: IntervalConfig | None = None
    run: RunConfig
    validation: ValidationConfig = Field(default_factory=ValidationConfig)

    @model_validator(mode="after")
    def _methods_have_sections(self):
        m = self.run.method
        if m in ("contraction", "both") and self.contraction is None:
            raise ValueError(f"method {m!r} needs a [contraction] section")
        if m in ("interval", "both") and self.interval is None:
            raise ValueError(f"method {m!r} needs an [interval] section")
        return self

    def methods(self) -> list[str]:
        return ["contraction", "interval"] if self.run.method == "both" \
            else [self.run.method]
