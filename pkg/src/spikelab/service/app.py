"""HTTP service exposing the spikelab commands.

Configuration and input errors map to 400; numerical failures map to 422 with
a detail starting with ``numerical:``.
"""

from __future__ import annotations

import json
from importlib.metadata import PackageNotFoundError, version

from fastapi import FastAPI, HTTPException

from ..errors import ConfigError, NumericalError
from ..harness import commands
from ..harness.presets import load_preset, preset_names
from .schemas import (
    CommandResponse,
    CritvalsRequest,
    Health,
    NullRequest,
    PowerRequest,
    PresetList,
    ScenarioRequest,
    TestRequest,
)

__all__ = ["app"]

app = FastAPI(title="spikelab", description="Inference for principal components of spiked covariance matrices.")


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _call(fn, *args) -> CommandResponse:
    try:
        result = fn(*args)
    except ConfigError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except NumericalError as exc:
        raise HTTPException(status_code=422, detail=f"numerical: {exc}") from exc
    return CommandResponse(artifacts=result.artifacts, summary=result.summary)


def _scenario(req: ScenarioRequest):
    return commands.with_overrides(req.config, req.seed, req.reps)


@app.get("/health", response_model=Health)
def health() -> Health:
    return Health(status="ok", version=_version())


@app.get("/presets", response_model=PresetList)
def presets() -> PresetList:
    return PresetList(names=preset_names())


@app.get("/presets/{name}")
def preset(name: str) -> dict:
    try:
        return json.loads(load_preset(name).to_json())
    except ConfigError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc


@app.post("/simulate-null", response_model=CommandResponse)
def simulate_null(req: NullRequest) -> CommandResponse:
    return _call(lambda: commands.simulate_null(_scenario(req), req.threads, req.dump_first))


@app.post("/power", response_model=CommandResponse)
def power(req: PowerRequest) -> CommandResponse:
    return _call(lambda: commands.power(_scenario(req), req.phi, req.threads))


@app.post("/ecdf", response_model=CommandResponse)
def ecdf(req: ScenarioRequest) -> CommandResponse:
    return _call(lambda: commands.ecdf(_scenario(req), req.threads))


@app.post("/test", response_model=CommandResponse)
def test(req: TestRequest) -> CommandResponse:
    hyp = req.hypothesis.model_dump_json()
    return _call(lambda: commands.test_data(req.data_csv, hyp))


@app.post("/critvals", response_model=CommandResponse)
def critvals(req: CritvalsRequest) -> CommandResponse:
    return _call(lambda: commands.critvals(req.U_csv, req.q, req.draws, req.seed))
