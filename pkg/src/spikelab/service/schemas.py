"""Request and response bodies of the HTTP service."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field

from ..harness.config import ScenarioConfig
from ..harness.io import TestHypothesisConfig

__all__ = [
    "ScenarioRequest",
    "NullRequest",
    "PowerRequest",
    "TestRequest",
    "CritvalsRequest",
    "CommandResponse",
    "PresetList",
    "Health",
]


class ScenarioRequest(BaseModel):
    """A scenario config with optional overrides of seed, replication count, and threads."""

    config: ScenarioConfig
    seed: int | None = Field(default=None, ge=0, lt=2**64)
    reps: int | None = Field(default=None, ge=1)
    threads: int | None = Field(default=None, ge=1)


class NullRequest(ScenarioRequest):
    dump_first: bool = False


class PowerRequest(ScenarioRequest):
    phi: list[float] | None = None


class TestRequest(BaseModel):
    """Data matrix as CSV text (M rows, N columns) plus the hypothesis to test."""

    __test__ = False
    data_csv: str
    hypothesis: TestHypothesisConfig


class CritvalsRequest(BaseModel):
    """Covariance U as CSV text (optional header row) and the normalizer q."""

    U_csv: str
    q: float = Field(gt=0)
    draws: int = Field(default=20000, ge=1000)
    seed: int = Field(default=0, ge=0, lt=2**64)


class CommandResponse(BaseModel):
    """Produced files keyed by relative path, plus a summary of the run."""

    artifacts: dict[str, str]
    summary: dict[str, Any]


class PresetList(BaseModel):
    names: list[str]


class Health(BaseModel):
    status: str
    version: str
