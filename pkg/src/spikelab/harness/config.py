"""Experiment configuration: JSON schema, validation, and conversion to library objects.

Spike, basis, and index numbers in JSON are 1-based (``Z0: [1, 2]`` means
e_1, e_2); the library API is 0-based.
"""

from __future__ import annotations

import json
import math
from typing import Any, Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError
from ..inference import Hypothesis
from ..model import GAUSSIAN, TWO_POINT, EntryLaw, SpikedModel, cumulants, standard_basis
from ..spectral import SpikePartition

__all__ = [
    "LawConfig",
    "SpikeConfig",
    "ModelConfig",
    "HypothesisConfig",
    "AlternativeConfig",
    "OutputsConfig",
    "ScenarioConfig",
    "parse_config",
    "load_config",
    "format_validation_error",
]

_Strict = ConfigDict(extra="forbid", frozen=True)


class LawConfig(BaseModel):
    """Explicit two-point law: value_hi with probability prob_hi, else value_lo."""

    model_config = _Strict
    kind: Literal["two_point"]
    value_hi: float
    value_lo: float
    prob_hi: float


class SpikeConfig(BaseModel):
    model_config = _Strict
    d: float = Field(gt=0)
    multiplicity: int = Field(default=1, ge=1)


class ModelConfig(BaseModel):
    model_config = _Strict
    N: int = Field(gt=0)
    y: float = Field(gt=0)
    spikes: list[SpikeConfig] = Field(min_length=1)
    directions: Literal["standard-basis"] | list[list[float]] = "standard-basis"
    law: Literal["gaussian", "two_point"] | LawConfig = "gaussian"

    @field_validator("spikes", mode="before")
    @classmethod
    def _pairs(cls, v: Any) -> Any:
        if isinstance(v, list):
            return [{"d": s[0], "multiplicity": s[1]} if isinstance(s, (list, tuple)) else s for s in v]
        return v

    @property
    def M(self) -> int:
        return int(math.floor(self.y * self.N + 0.5))

    @property
    def rank(self) -> int:
        return sum(s.multiplicity for s in self.spikes)

    def entry_law(self) -> EntryLaw:
        if self.law == "gaussian":
            return GAUSSIAN
        if self.law == "two_point":
            return TWO_POINT
        return EntryLaw("two_point", self.law.value_hi, self.law.value_lo, self.law.prob_hi)

    def directions_matrix(self) -> NDArray[np.float64]:
        if self.directions == "standard-basis":
            return standard_basis(self.M, self.rank)
        V = np.array(self.directions, dtype=np.float64)
        # rows of the JSON list are the direction vectors
        return V.T

    def build(self, directions: NDArray[np.float64] | None = None) -> SpikedModel:
        V = self.directions_matrix() if directions is None else directions
        return SpikedModel.build(self.M, self.N, [(s.d, s.multiplicity) for s in self.spikes], V, self.entry_law())


class HypothesisConfig(BaseModel):
    """Z0 as 1-based basis indices or as an explicit list of basis vectors (``{"vectors": [...]}``)."""

    model_config = _Strict
    kind: Literal["equality", "orthogonality"]
    Z0: list[int] | dict[Literal["vectors"], list[list[float]]]
    I: list[int] = Field(min_length=1)
    partition: list[int] | None = None
    kappa4: float | None = None

    @field_validator("I")
    @classmethod
    def _one_based(cls, v: list[int]) -> list[int]:
        if any(i < 1 for i in v) or len(set(v)) != len(v):
            raise ValueError("indices are 1-based and must be distinct")
        return v

    def z0_matrix(self, M: int) -> NDArray[np.float64]:
        if isinstance(self.Z0, list):
            if not self.Z0 or any(j < 1 or j > M for j in self.Z0) or len(set(self.Z0)) != len(self.Z0):
                raise ConfigError(f"field 'hypothesis.Z0': basis indices must be distinct and lie in 1..{M}")
            Z = np.zeros((M, len(self.Z0)))
            Z[[j - 1 for j in self.Z0], np.arange(len(self.Z0))] = 1.0
            return Z
        Z = np.array(self.Z0["vectors"], dtype=np.float64).T
        if Z.ndim != 2 or Z.shape[0] != M:
            raise ConfigError(f"field 'hypothesis.Z0.vectors': each vector must have length M = {M}")
        return Z


class AlternativeConfig(BaseModel):
    """Rotations e_a -> cos(phi) e_a + sin(phi) e_b for each 1-based pair (a, b).

    ``target = "model"`` rotates the spike direction equal to e_a; ``"hypothesis"``
    rotates the Z0 column equal to e_a.
    """

    model_config = _Strict
    pairs: list[tuple[int, int]] = Field(min_length=1)
    target: Literal["model", "hypothesis"] | None = None


class OutputsConfig(BaseModel):
    model_config = _Strict
    typeI: str = "typeI.csv"
    power: str = "power.csv"
    ecdf: str = "ecdf.csv"


class ScenarioConfig(BaseModel):
    model_config = _Strict
    name: str
    model: ModelConfig
    hypothesis: HypothesisConfig
    alternative: AlternativeConfig | None = None
    reps: int = Field(ge=1)
    level: float = Field(default=0.1, gt=0, lt=1)
    seed: int = Field(ge=0, lt=2**64)
    mixture_draws: int = Field(default=20000, ge=1000)
    sampler: Literal["dense", "reduced"] = "dense"
    phi_grid: list[float] | None = None
    outputs: OutputsConfig = OutputsConfig()

    @model_validator(mode="after")
    def _consistency(self) -> "ScenarioConfig":
        M, r = self.model.M, self.model.rank
        if M < r:
            raise ValueError(f"M = round(y N) = {M} is smaller than the number of spikes {r}")
        if self.sampler == "reduced" and self.model.entry_law().kind != "gaussian":
            raise ValueError("the reduced sampler requires Gaussian entries")
        sizes = self.partition_sizes()
        if sum(sizes) != r:
            raise ValueError(f"hypothesis.partition sizes sum to {sum(sizes)}, expected {r}")
        if max(self.hypothesis.I) > r:
            raise ValueError(f"hypothesis.I refers to spike {max(self.hypothesis.I)} but only {r} are declared")
        if self.phi_grid is not None and any(not 0.0 <= p <= math.pi / 2 + 1e-12 for p in self.phi_grid):
            raise ValueError("phi_grid values must lie in [0, pi/2]")
        return self

    def partition_sizes(self) -> list[int]:
        if self.hypothesis.partition is not None:
            return list(self.hypothesis.partition)
        return [s.multiplicity for s in self.model.spikes]

    def partition(self) -> SpikePartition:
        return SpikePartition.from_sizes(self.partition_sizes())

    def kappa4(self) -> float:
        if self.hypothesis.kappa4 is not None:
            return self.hypothesis.kappa4
        return cumulants(self.model.entry_law())[1]

    def alternative_target(self) -> str:
        if self.alternative is not None and self.alternative.target is not None:
            return self.alternative.target
        return "model" if self.hypothesis.kind == "equality" else "hypothesis"

    def rotated(self, phi: float) -> tuple[SpikedModel, Hypothesis]:
        """Population model and hypothesis at rotation angle phi (phi = 0 is the null)."""
        M = self.model.M
        V = self.model.directions_matrix().copy()
        Z = self.hypothesis.z0_matrix(M)
        if self.alternative is not None and phi != 0.0:
            c, s = math.cos(phi), math.sin(phi)
            target = V if self.alternative_target() == "model" else Z
            for a, b in self.alternative.pairs:
                if not (1 <= a <= M and 1 <= b <= M):
                    raise ConfigError(f"field 'alternative.pairs': axes must lie in 1..{M}")
                hits = [j for j in range(target.shape[1]) if abs(target[a - 1, j] - 1.0) < 1e-12]
                if len(hits) != 1:
                    raise ConfigError(f"field 'alternative.pairs': no {self.alternative_target()} vector equals e_{a}")
                col = np.zeros(M)
                col[a - 1], col[b - 1] = c, s
                target[:, hits[0]] = col
        model = self.model.build(V)
        I = tuple(i - 1 for i in self.hypothesis.I)
        directions = model.directions if self.hypothesis.kind == "orthogonality" else None
        return model, Hypothesis(self.hypothesis.kind, Z, I, directions)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", exclude_none=True), indent=2) + "\n"


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"field '{loc}': {err['msg']}")
    return "; ".join(lines)


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        cfg = ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {format_validation_error(exc)}") from exc
    try:
        cfg.rotated(0.0)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return cfg


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    return parse_config(text, path)
