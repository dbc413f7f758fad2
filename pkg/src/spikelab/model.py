"""Spiked population covariance and synthetic data generation.

The population covariance is ``Sigma = I + sum_i d_i v_i v_i^T`` and the data
matrix ``X`` has i.i.d. entries of mean 0 and variance ``1/N``. The sample
covariance is ``Q = Sigma^{1/2} X X^T Sigma^{1/2}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError
from .tolerances import TOL

__all__ = [
    "EntryLaw",
    "GAUSSIAN",
    "TWO_POINT",
    "SpikedModel",
    "cumulants",
    "standard_basis",
    "sample_data",
    "sqrt_sigma_apply",
    "sample_covariance",
    "population_covariance",
]

MAX_RANK = 32


@dataclass(frozen=True, slots=True)
class EntryLaw:
    """Standardized entry law. ``two_point`` takes value_hi w.p. prob_hi, else value_lo."""

    kind: Literal["gaussian", "two_point"] = "gaussian"
    value_hi: float = 0.0
    value_lo: float = 0.0
    prob_hi: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == "gaussian":
            return
        if self.kind != "two_point":
            raise ConfigError(f"unsupported entry law {self.kind!r}; use 'gaussian' or 'two_point'")
        p = self.prob_hi
        if not 0.0 < p < 1.0:
            raise ConfigError(f"prob_hi must lie in (0, 1), got {p!r}")
        mean = p * self.value_hi + (1.0 - p) * self.value_lo
        var = p * self.value_hi**2 + (1.0 - p) * self.value_lo**2
        if abs(mean) > TOL.moment_law or abs(var - 1.0) > TOL.moment_law:
            raise ConfigError(f"two-point law must have mean 0 and variance 1 (mean={mean!r}, var={var!r})")


GAUSSIAN = EntryLaw()
TWO_POINT = EntryLaw("two_point", math.sqrt(2.0), -1.0 / math.sqrt(2.0), 1.0 / 3.0)


def cumulants(law: EntryLaw) -> tuple[float, float]:
    """Third and fourth cumulants (kappa3, kappa4) of the unit-variance law."""
    if law.kind == "gaussian":
        return 0.0, 0.0
    # A standardized two-point law is fixed by p alone (a b = -1, a^2 = (1-p)/p),
    # so the cumulants are written in p to avoid rounding in a and b.
    p = law.prob_hi
    pq = p * (1.0 - p)
    k3 = (1.0 - 2.0 * p) / math.sqrt(pq) * math.copysign(1.0, law.value_hi)
    k4 = 1.0 / pq - 6.0
    return float(k3), float(k4)


def standard_basis(M: int, r: int) -> NDArray[np.float64]:
    if r > M:
        raise ConfigError(f"cannot place {r} standard-basis directions in dimension {M}")
    V = np.zeros((M, r))
    V[np.arange(r), np.arange(r)] = 1.0
    return V


@dataclass(frozen=True)
class SpikedModel:
    """Population description. ``spikes`` is a list of (d, multiplicity), descending in d."""

    M: int
    N: int
    spikes: tuple[tuple[float, int], ...]
    directions: NDArray[np.float64] = field(repr=False)
    law: EntryLaw = GAUSSIAN

    @classmethod
    def build(
        cls,
        M: int,
        N: int,
        spikes: Sequence[tuple[float, int]] | Sequence[float],
        directions: NDArray[np.float64] | Literal["standard-basis"] = "standard-basis",
        law: EntryLaw = GAUSSIAN,
    ) -> "SpikedModel":
        pairs = tuple((float(s[0]), int(s[1])) if isinstance(s, (tuple, list)) else (float(s), 1) for s in spikes)
        r = sum(m for _, m in pairs)
        if isinstance(directions, str):
            if directions != "standard-basis":
                raise ConfigError(f"unknown directions token {directions!r}")
            V = standard_basis(M, r)
        else:
            V = np.array(directions, dtype=np.float64)
        return cls(int(M), int(N), pairs, V, law)

    def __post_init__(self) -> None:
        if self.M < 1 or self.N < 1:
            raise ConfigError(f"M and N must be positive, got M={self.M}, N={self.N}")
        for d, m in self.spikes:
            if not (math.isfinite(d) and d > 0.0) or m < 1:
                raise ConfigError(f"invalid spike (d={d!r}, multiplicity={m!r})")
        ds = [d for d, _ in self.spikes]
        if any(a <= b for a, b in zip(ds, ds[1:])):
            raise ConfigError("spikes must be strictly descending in d (use multiplicity for ties)")
        r = self.rank
        if r > MAX_RANK:
            raise ConfigError(f"at most {MAX_RANK} spike directions are supported, got {r}")
        if r > min(self.M, self.N):
            raise ConfigError(f"rank {r} exceeds min(M, N) = {min(self.M, self.N)}")
        V = self.directions
        if V.shape != (self.M, r):
            raise ConfigError(f"directions must have shape ({self.M}, {r}), got {V.shape}")
        gram = V.T @ V
        if np.max(np.abs(gram - np.eye(r)), initial=0.0) > TOL.orthonormal:
            raise ConfigError("spike directions are not orthonormal")
        V.setflags(write=False)

    @property
    def rank(self) -> int:
        return sum(m for _, m in self.spikes)

    @property
    def y(self) -> float:
        return self.M / self.N

    @property
    def d_per_index(self) -> NDArray[np.float64]:
        return np.repeat([d for d, _ in self.spikes], [m for _, m in self.spikes]).astype(np.float64)

    def with_directions(self, directions: NDArray[np.float64]) -> "SpikedModel":
        return SpikedModel(self.M, self.N, self.spikes, np.array(directions, dtype=np.float64), self.law)


def sample_data(model: SpikedModel, rng: np.random.Generator) -> NDArray[np.float64]:
    """Draw X (M x N) with i.i.d. standardized entries scaled by 1/sqrt(N)."""
    shape = (model.M, model.N)
    law = model.law
    if law.kind == "gaussian":
        Z = rng.standard_normal(shape)
    else:
        Z = np.where(rng.random(shape) < law.prob_hi, law.value_hi, law.value_lo)
    Z *= 1.0 / math.sqrt(model.N)
    return Z


def sqrt_sigma_apply(model: SpikedModel, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """Return Sigma^{1/2} X via the rank-r update I + V diag(sqrt(1+d) - 1) V^T."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != model.M:
        raise ConfigError(f"data must have {model.M} rows, got shape {X.shape}")
    V = model.directions
    scale = np.sqrt(1.0 + model.d_per_index) - 1.0
    return X + V @ (scale[:, None] * (V.T @ X))


def sample_covariance(model: SpikedModel, X: NDArray[np.float64]) -> NDArray[np.float64]:
    Y = sqrt_sigma_apply(model, X)
    Q = Y @ Y.T
    return 0.5 * (Q + Q.T)


def population_covariance(model: SpikedModel) -> NDArray[np.float64]:
    V = model.directions
    return np.eye(model.M) + (V * model.d_per_index) @ V.T
