"""Command-line front end.

A thin client over the reachability service: commands build an experiment
config (TOML file plus flag overrides), post it to the service -- an
in-process ASGI instance by default, or a remote one via --server -- and
write the returned documents to the output directory.

Exit codes: 0 ok, 1 usage/config error, 2 infeasible certificate,
3 unsound inclusion function, 4 coverage failure.
"""
from __future__ import annotations

import asyncio
import sys
from pathlib import Path

import click
import httpx
import tomli
from pydantic import ValidationError

from . import serialize
from .config import ExperimentConfig
from .pipeline import pendulum_demo_config

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_UNSOUND = 3
EXIT_COVERAGE = 4

_ERROR_EXITS = {
    "infeasible_certificate": EXIT_INFEASIBLE,
    "unsound_inclusion": EXIT_UNSOUND,
}


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.post(path, json=payload)

    async def go():
        from .service.app import app
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, timeout=600.0,
                                     base_url="http://stochreach.internal") as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _handle_error(resp: httpx.Response):
    try:
        body = resp.json()
    except Exception:
        body = {}
    detail = body.get("detail", resp.text)
    if isinstance(detail, list):  # pydantic validation errors
        detail = "; ".join(
            f"{'>'.join(str(p) for p in e.get('loc', []))}: {e.get('msg', '')}"
            for e in detail
        )
    code = _ERROR_EXITS.get(body.get("code", ""), EXIT_USAGE)
    _fail(detail, code)


def _load_config(path: str, overrides: dict) -> dict:
    try:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    except FileNotFoundError:
        _fail(f"config file not found: {path}", EXIT_USAGE)
    except tomli.TOMLDecodeError as e:
        _fail(f"invalid TOML in {path}: {e}", EXIT_USAGE)
    return _apply_overrides(doc, overrides)


def _apply_overrides(doc: dict, overrides: dict) -> dict:
    run = doc.setdefault("run", {})
    for key in ("seed", "method", "delta", "n_paths"):
        if overrides.get(key) is not None:
            run[key] = overrides[key]
    # fail early with a readable message instead of a service 422
    try:
        ExperimentConfig.model_validate(doc)
    except ValidationError as e:
        _fail(str(e), EXIT_USAGE)
    return doc


def _write(out_dir: Path, name: str, content: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(content)
    click.echo(f"wrote {out_dir / name}")


def _write_reach_files(out_dir: Path, body: dict):
    for method, payload in body["methods"].items():
        for doc in payload["sets"]:
            _write(out_dir, f"set_{method}_t{doc['t']:g}.json",
                   serialize.canonical_json(doc) + "\n")
        for stem, csv_text in payload["polygons"].items():
            _write(out_dir, f"polygon_{stem}.csv", csv_text)
        if payload.get("embedding_csv"):
            _write(out_dir, f"embedding_{method}.csv", payload["embedding_csv"])


def _write_validation_files(out_dir: Path, body: dict):
    for method, payload in body["validation"].items():
        _write(out_dir, f"coverage_{method}.json",
               serialize.canonical_json(payload["report"]) + "\n")
        for stem, csv_text in payload["endpoints"].items():
            _write(out_dir, f"{stem}.csv", csv_text)


_common = [
    click.option("--out", "out_dir", default="out", show_default=True,
                 help="Output directory."),
    click.option("--seed", type=int, default=None, help="Override run.seed."),
    click.option("--method",
                 type=click.Choice(["contraction", "interval", "both"]),
                 default=None, help="Override run.method."),
    click.option("--delta", type=float, default=None,
                 help="Override run.delta."),
    click.option("--paths", "n_paths", type=int, default=None,
                 help="Override run.n_paths."),
    click.option("--server", default=None,
                 help="Remote service URL (default: run in-process)."),
]


def _with_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Probabilistic reachable sets for stochastic control systems."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(), help="Experiment config (TOML).")
@_with_common
def certify(config_path, out_dir, seed, method, delta, n_paths, server):
    """Verify or search a contraction certificate and write it as JSON."""
    overrides = {"seed": seed, "method": method, "delta": delta,
                 "n_paths": n_paths}
    doc = _load_config(config_path, overrides)
    resp = _post(server, "/certify", doc)
    if resp.status_code != 200:
        _handle_error(resp)
    body = resp.json()
    _write(Path(out_dir), "certificate.json",
           serialize.canonical_json(body["certificate"]) + "\n")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(), help="Experiment config (TOML).")
@_with_common
def reach(config_path, out_dir, seed, method, delta, n_paths, server):
    """Compute probabilistic reachable sets; write JSON + polygon CSVs."""
    overrides = {"seed": seed, "method": method, "delta": delta,
                 "n_paths": n_paths}
    doc = _load_config(config_path, overrides)
    resp = _post(server, "/reach", doc)
    if resp.status_code != 200:
        _handle_error(resp)
    body = resp.json()
    out = Path(out_dir)
    _write(out, "certificate.json",
           serialize.canonical_json(body["certificate"]) + "\n")
    _write_reach_files(out, body)


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(), help="Experiment config (TOML).")
@_with_common
def validate(config_path, out_dir, seed, method, delta, n_paths, server):
    """Monte Carlo coverage check of the probabilistic reachable sets.

    Exit code mirrors the report: 0 when every checkpoint meets its
    coverage target, 4 otherwise.
    """
    overrides = {"seed": seed, "method": method, "delta": delta,
                 "n_paths": n_paths}
    doc = _load_config(config_path, overrides)
    resp = _post(server, "/validate", doc)
    if resp.status_code != 200:
        _handle_error(resp)
    body = resp.json()
    out = Path(out_dir)
    _write(out, "certificate.json",
           serialize.canonical_json(body["certificate"]) + "\n")
    _write_reach_files(out, body)
    _write_validation_files(out, body)
    for method_name, payload in body["validation"].items():
        for row in payload["report"]["rows"]:
            status = "pass" if row["passed"] else "FAIL"
            click.echo(
                f"{method_name} t={row['t']:g}: coverage "
                f"{row['coverage']:.4f} target {row['target']:.4f} "
                f"(slack {row['slack']:.4f}) [{status}]"
            )
    if not body["passed"]:
        sys.exit(EXIT_COVERAGE)


@main.command("demo-pendulum")
@_with_common
def demo_pendulum(out_dir, seed, method, delta, n_paths, server):
    """Run the built-in stabilized-pendulum experiment end to end."""
    cfg = pendulum_demo_config(
        method=method or "both", delta=delta if delta is not None else 0.01,
        n_paths=n_paths if n_paths is not None else 2000,
        seed=seed if seed is not None else 7,
    )
    doc = cfg.model_dump(mode="json")
    resp = _post(server, "/validate", doc)
    if resp.status_code != 200:
        _handle_error(resp)
    body = resp.json()
    out = Path(out_dir)
    _write(out, "config.json", serialize.canonical_json(doc) + "\n")
    _write(out, "certificate.json",
           serialize.canonical_json(body["certificate"]) + "\n")
    _write_reach_files(out, body)
    _write_validation_files(out, body)
    click.echo("pass" if body["passed"] else "coverage FAIL")
    if not body["passed"]:
        sys.exit(EXIT_COVERAGE)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the reachability service."""
    import uvicorn

    uvicorn.run("stochreach.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
