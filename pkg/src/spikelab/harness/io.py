"""File formats: data matrices as CSV, standalone hypothesis JSON, labeled covariance CSV."""

from __future__ import annotations

import csv
import io
import json
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..errors import ConfigError
from ..inference import DEFAULT_DRAWS, DEFAULT_LEVELS, Hypothesis
from ..model import standard_basis
from ..spectral import SpikePartition
from .config import format_validation_error

__all__ = [
    "TestHypothesisConfig",
    "matrix_to_csv",
    "parse_matrix_csv",
    "parse_hypothesis",
    "parse_covariance_csv",
]


def matrix_to_csv(A: NDArray[np.float64]) -> str:
    """Row-major dense CSV without header, full precision."""
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(A), delimiter=",", fmt="%.17g")
    return buf.getvalue()


def parse_matrix_csv(text: str, source: str = "<csv>", header: bool | None = False) -> tuple[list[str] | None, NDArray[np.float64]]:
    """Parse a numeric CSV. ``header=None`` accepts an optional non-numeric first row."""
    rows: list[list[float]] = []
    labels: list[str] | None = None
    width = None
    for lineno, fields in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if lineno == 1 and header is not False:
            try:
                [float(f) for f in fields]
            except ValueError:
                labels = [f.strip() for f in fields]
                continue
            if header is True:
                raise ConfigError(f"{source}: line 1: expected a header row")
        vals = []
        for col, f in enumerate(fields, start=1):
            try:
                vals.append(float(f))
            except ValueError:
                raise ConfigError(f"{source}: line {lineno}, field {col}: cannot parse {f.strip()!r} as a number") from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ConfigError(f"{source}: line {lineno}: expected {width} fields, found {len(vals)}")
        rows.append(vals)
    if not rows:
        raise ConfigError(f"{source}: no numeric rows")
    A = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(A)):
        raise ConfigError(f"{source}: non-finite entries")
    return labels, A


class TestHypothesisConfig(BaseModel):
    """Hypothesis file for testing a data matrix; indices are 1-based.

    ``partition`` lists multiplicity group sizes of all declared spikes.
    ``directions`` gives the declared spike directions, needed by the
    orthogonality test when I does not cover every spike.
    """

    __test__ = False
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["equality", "orthogonality"]
    Z0: list[int] | dict[Literal["vectors"], list[list[float]]]
    I: list[int] = Field(min_length=1)
    partition: list[int] = Field(min_length=1)
    directions: Literal["standard-basis"] | list[list[float]] | None = None
    kappa4: float = 0.0
    draws: int = Field(default=DEFAULT_DRAWS, ge=1000)
    seed: int = Field(default=0, ge=0, lt=2**64)
    stream: int = Field(default=0, ge=0)
    levels: list[float] = list(DEFAULT_LEVELS)

    @field_validator("partition")
    @classmethod
    def _sizes(cls, v: list[int]) -> list[int]:
        if any(s < 1 for s in v):
            raise ValueError("group sizes must be positive")
        return v

    def build(self, M: int) -> tuple[Hypothesis, SpikePartition]:
        if isinstance(self.Z0, list):
            if any(j < 1 or j > M for j in self.Z0) or len(set(self.Z0)) != len(self.Z0):
                raise ConfigError(f"field 'Z0': basis indices must be distinct and lie in 1..{M}")
            Z = np.zeros((M, len(self.Z0)))
            Z[[j - 1 for j in self.Z0], np.arange(len(self.Z0))] = 1.0
        else:
            Z = np.array(self.Z0["vectors"], dtype=np.float64).T
        if Z.shape[0] != M:
            raise ConfigError(f"field 'Z0': vectors must have length M = {M}")
        partition = SpikePartition.from_sizes(self.partition)
        V = None
        if self.directions == "standard-basis":
            V = standard_basis(M, partition.r)
        elif self.directions is not None:
            V = np.array(self.directions, dtype=np.float64).T
        return Hypothesis(self.kind, Z, tuple(i - 1 for i in self.I), V), partition


def parse_hypothesis(text: str, source: str = "<hypothesis>") -> TestHypothesisConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return TestHypothesisConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {format_validation_error(exc)}") from exc


def parse_covariance_csv(text: str, source: str = "<U>") -> NDArray[np.float64]:
    _, U = parse_matrix_csv(text, source, header=None)
    if U.shape[0] != U.shape[1]:
        raise ConfigError(f"{source}: covariance must be square, got {U.shape[0]} x {U.shape[1]}")
    return U
