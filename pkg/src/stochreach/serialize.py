"""Deterministic serialization of results.

JSON documents are emitted with sorted keys and floats printed with 17
significant digits, so identical inputs produce byte-identical files.
CSV emitters cover trajectories, embeddings, polygon outlines and
endpoint dumps.
"""
from __future__ import annotations

import hashlib
import math

import numpy as np

from .certify import ContractionCertificate, VerificationReport
from .probreach import ProbReachSet
from .reach import EmbeddingTrajectory
from .sets import Ellipsoid, IntervalBox, Parallelotope, WeightedNorm
from .validate import CoverageReport


def format_float(x: float) -> str:
    """Fixed 17-significant-digit format; round-trips any double."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.17g}"


def canonical_json(obj) -> str:
    """JSON text with sorted keys and the fixed float format."""
    out = []
    _emit(obj, out)
    return "".join(out)


def _emit(obj, out):
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, dict):
        out.append("{")
        for i, k in enumerate(sorted(obj)):
            if i:
                out.append(", ")
            _emit(str(k), out)
            out.append(": ")
            _emit(obj[k], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, v in enumerate(seq):
            if i:
                out.append(", ")
            _emit(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize object of type {type(obj)!r}")


def config_hash(config_dict: dict) -> str:
    """Stable hash of a configuration document."""
    return hashlib.sha256(canonical_json(config_dict).encode()).hexdigest()[:16]


def _matrix(a) -> list:
    return [[float(v) for v in row] for row in np.asarray(a, dtype=float)]


def _vector(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float)]


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------

def certificate_to_dict(cert: ContractionCertificate,
                        report: VerificationReport | None = None) -> dict:
    doc = {
        "P": _matrix(cert.norm.P),
        "c_P": float(cert.c_P),
        "d_P": float(cert.d_P),
        "c": None if cert.c is None else float(cert.c),
        "ell": None if cert.ell is None else float(cert.ell),
        "provenance": cert.provenance,
        "margins": [float(m) for m in cert.margins],
    }
    if report is not None:
        doc["verification"] = {
            "margins": [float(m) for m in report.margins],
            "tol": report.tol,
            "passed": report.passed,
        }
    return doc


def certificate_from_dict(doc: dict) -> ContractionCertificate:
    return ContractionCertificate(
        norm=WeightedNorm(np.asarray(doc["P"], dtype=float)),
        c_P=float(doc["c_P"]),
        d_P=float(doc["d_P"]),
        c=None if doc.get("c") is None else float(doc["c"]),
        ell=None if doc.get("ell") is None else float(doc["ell"]),
        provenance=doc.get("provenance", "USER"),
        margins=tuple(doc.get("margins", ())),
    )


def base_to_dict(base) -> dict:
    if isinstance(base, Ellipsoid):
        return {"kind": "ellipsoid", "center": _vector(base.center),
                "radius": float(base.radius), "P": _matrix(base.norm.P)}
    if isinstance(base, IntervalBox):
        return {"kind": "interval", "lo": _vector(base.lo),
                "hi": _vector(base.hi)}
    if isinstance(base, Parallelotope):
        return {"kind": "parallelotope", "T": _matrix(base.transform),
                "lo": _vector(base.box.lo), "hi": _vector(base.box.hi)}
    raise TypeError(f"unknown base set type {type(base)!r}")


def base_from_dict(doc: dict):
    kind = doc["kind"]
    if kind == "ellipsoid":
        return Ellipsoid(center=np.asarray(doc["center"], dtype=float),
                         radius=float(doc["radius"]),
                         norm=WeightedNorm(np.asarray(doc["P"], dtype=float)))
    if kind == "interval":
        return IntervalBox(np.asarray(doc["lo"], dtype=float),
                           np.asarray(doc["hi"], dtype=float))
    if kind == "parallelotope":
        return Parallelotope(
            transform=np.asarray(doc["T"], dtype=float),
            box=IntervalBox(np.asarray(doc["lo"], dtype=float),
                            np.asarray(doc["hi"], dtype=float)),
        )
    raise ValueError(f"unknown base set kind {kind!r}")


def prob_set_to_dict(s: ProbReachSet) -> dict:
    return {
        "t": float(s.t),
        "delta": float(s.delta),
        "rho": float(s.rho),
        "base": base_to_dict(s.base),
        "noise_P": _matrix(s.noise_ball.norm.P),
    }


def prob_set_from_dict(doc: dict) -> ProbReachSet:
    norm = WeightedNorm(np.asarray(doc["noise_P"], dtype=float))
    ball = Ellipsoid(center=np.zeros(norm.dim), radius=float(doc["rho"]),
                     norm=norm)
    return ProbReachSet(t=float(doc["t"]), delta=float(doc["delta"]),
                        base=base_from_dict(doc["base"]), noise_ball=ball)


def coverage_to_dict(report: CoverageReport) -> dict:
    return {
        "n_paths": report.n_paths,
        "n_diverged": report.n_diverged,
        "seed": report.seed,
        "passed": report.passed,
        "rows": [
            {
                "t": r.t, "n_paths": r.n_paths, "n_inside": r.n_inside,
                "coverage": r.coverage, "target": r.target, "slack": r.slack,
                "passed": r.passed, "worst_excess": r.worst_excess,
            }
            for r in report.rows
        ],
    }


# ---------------------------------------------------------------------------
# CSV emitters
# ---------------------------------------------------------------------------

def _csv_lines(header: str, rows, hash_comment: str | None) -> str:
    lines = []
    if hash_comment:
        lines.append(f"# config_hash={hash_comment}")
    lines.append(header)
    lines.extend(rows)
    return "\n".join(lines) + "\n"


def trajectory_to_csv(traj, hash_comment: str | None = None) -> str:
    n = traj.states.shape[1]
    header = "t," + ",".join(f"x{i+1}" for i in range(n))
    rows = [
        ",".join(format_float(v) for v in (t, *xs))
        for t, xs in zip(traj.times, traj.states)
    ]
    return _csv_lines(header, rows, hash_comment)


def embedding_to_csv(emb: EmbeddingTrajectory,
                     hash_comment: str | None = None) -> str:
    n = emb.dim
    header = ("t," + ",".join(f"lo{i+1}" for i in range(n)) + ","
              + ",".join(f"hi{i+1}" for i in range(n)))
    rows = [
        ",".join(format_float(v) for v in (t, *lo, *hi))
        for t, lo, hi in zip(emb.times, emb.lo_states, emb.hi_states)
    ]
    return _csv_lines(header, rows, hash_comment)


def polygon_to_csv(vertices: np.ndarray,
                   hash_comment: str | None = None) -> str:
    rows = [
        format_float(float(x)) + "," + format_float(float(y))
        for x, y in vertices
    ]
    return _csv_lines("x,y", rows, hash_comment)


def endpoints_to_csv(states: np.ndarray,
                     hash_comment: str | None = None) -> str:
    """One row per simulated path at a checkpoint; divergent (non-finite)
    paths are skipped."""
    n = states.shape[1]
    header = ",".join(f"x{i+1}" for i in range(n))
    rows = [
        ",".join(format_float(float(v)) for v in row)
        for row in states if np.all(np.isfinite(row))
    ]
    return _csv_lines(header, rows, hash_comment)
