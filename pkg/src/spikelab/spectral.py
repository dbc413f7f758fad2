"""Sample eigendecomposition, spectral projections, and plug-in spike estimates.

Index sets in this module are 0-based: the top sample eigenvalue is index 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from . import mp_law
from .errors import ConfigError, NumericalError, SubcriticalError
from .tolerances import TOL

__all__ = [
    "SampleSpectrum",
    "SpikePartition",
    "SpikeEstimates",
    "sym_eig",
    "top_spectrum",
    "canonical_signs",
    "generalized_component",
    "projection_trace",
    "estimate_spikes",
    "auto_partition",
    "extra_spike_flag",
    "spectrum_to_csv",
]


@dataclass(frozen=True)
class SampleSpectrum:
    """Descending eigenvalues ``mu`` and the leading eigenvectors ``xi`` (M x k, k <= len(mu))."""

    mu: NDArray[np.float64]
    xi: NDArray[np.float64]
    y_n: float
    n_samples: int

    def __post_init__(self) -> None:
        if self.mu.ndim != 1 or self.xi.ndim != 2:
            raise ConfigError("mu must be 1-D and xi 2-D")
        if self.xi.shape[1] > self.mu.shape[0]:
            raise ConfigError("more eigenvectors than eigenvalues")
        if np.any(np.diff(self.mu) > 0):
            raise ConfigError("eigenvalues must be non-increasing")
        self.mu.setflags(write=False)
        self.xi.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.xi.shape[0]

    @property
    def n_vectors(self) -> int:
        return self.xi.shape[1]


def canonical_signs(vecs: NDArray[np.float64]) -> NDArray[np.float64]:
    """Flip columns so that the first entry of largest magnitude is positive."""
    if vecs.size == 0:
        return vecs
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.where(vecs[idx, np.arange(vecs.shape[1])] < 0, -1.0, 1.0)
    return vecs * signs


def sym_eig(Q: NDArray[np.float64], n_samples: int | None = None) -> SampleSpectrum:
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {Q.shape}")
    scale = float(np.max(np.abs(Q), initial=0.0))
    if np.max(np.abs(Q - Q.T), initial=0.0) > TOL.symmetric_rel * max(scale, 1e-300):
        raise ConfigError("matrix is not symmetric")
    try:
        w, V = scipy.linalg.eigh(0.5 * (Q + Q.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    M = Q.shape[0]
    n = M if n_samples is None else int(n_samples)
    return SampleSpectrum(w[::-1].copy(), canonical_signs(V[:, ::-1]), M / n, n)


def top_spectrum(Y: NDArray[np.float64], k: int) -> SampleSpectrum:
    """Leading ``k`` eigenpairs of Q = Y Y^T from the data matrix Y (M x N).

    Eigenvalues ``mu`` carry one extra entry (the (k+1)-th) when available so
    that callers can inspect the first non-outlier. The smaller of the two Gram
    matrices is decomposed; when M > N the eigenvectors are mapped back through Y.
    """
    Y = np.asarray(Y, dtype=np.float64)
    M, N = Y.shape
    n_min = min(M, N)
    if not 1 <= k <= n_min:
        raise ConfigError(f"k must lie in [1, {n_min}], got {k}")
    kk = min(k + 1, n_min)
    try:
        if M <= N:
            G = Y @ Y.T
            w, V = scipy.linalg.eigh(G, subset_by_index=[M - kk, M - 1])
            w, V = w[::-1], V[:, ::-1]
            xi = V[:, :k]
        else:
            G = Y.T @ Y
            w, U = scipy.linalg.eigh(G, subset_by_index=[N - kk, N - 1])
            w, U = w[::-1], U[:, ::-1]
            if np.any(w[:k] <= 0):
                raise NumericalError("non-positive leading eigenvalue")
            xi = (Y @ U[:, :k]) / np.sqrt(w[:k])
            # one re-orthonormalization step against rounding in the dual map
            xi, _ = np.linalg.qr(xi)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    return SampleSpectrum(np.ascontiguousarray(w), canonical_signs(np.ascontiguousarray(xi)), M / N, N)


def _check_indices(spec: SampleSpectrum, I: Iterable[int]) -> list[int]:
    idx = sorted(int(i) for i in I)
    if not idx or idx[0] < 0 or idx[-1] >= spec.n_vectors or len(set(idx)) != len(idx):
        raise ConfigError(f"index set {idx} out of range for {spec.n_vectors} eigenvectors")
    return idx


def generalized_component(spec: SampleSpectrum, I: Iterable[int], w: NDArray[np.float64]) -> float:
    """<w, P_I w> = sum over t in I of <w, xi_t>^2 for a unit vector w."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != spec.dim:
        raise ConfigError(f"w has length {w.shape[0]}, expected {spec.dim}")
    if abs(float(w @ w) - 1.0) > TOL.basis:
        raise ConfigError("w must be a unit vector")
    idx = _check_indices(spec, I)
    c = spec.xi[:, idx].T @ w
    return float(c @ c)


def projection_trace(spec: SampleSpectrum, I: Iterable[int], Z: NDArray[np.float64]) -> float:
    """trace(Z^T P_I Z) for a basis matrix Z; independent of the basis chosen for span(Z)."""
    idx = _check_indices(spec, I)
    C = spec.xi[:, idx].T @ np.asarray(Z, dtype=np.float64)
    return float(np.sum(C * C))


@dataclass(frozen=True)
class SpikePartition:
    """Disjoint groups of 0-based indices covering 0..r*-1; each group shares one spike."""

    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        flat = [i for g in self.groups for i in g]
        if not self.groups or any(len(g) == 0 for g in self.groups):
            raise ConfigError("partition groups must be non-empty")
        if sorted(flat) != list(range(len(flat))):
            raise ConfigError(f"partition groups must be disjoint and cover 0..{len(flat) - 1}")
        for g in self.groups:
            if list(g) != list(range(g[0], g[0] + len(g))):
                raise ConfigError(f"group {g} is not a run of consecutive indices")

    @classmethod
    def singletons(cls, r: int) -> "SpikePartition":
        return cls(tuple((i,) for i in range(r)))

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "SpikePartition":
        groups, start = [], 0
        for s in sizes:
            groups.append(tuple(range(start, start + int(s))))
            start += int(s)
        return cls(tuple(groups))

    @property
    def r(self) -> int:
        return sum(len(g) for g in self.groups)

    def group_of(self, i: int) -> tuple[int, ...]:
        for g in self.groups:
            if i in g:
                return g
        raise ConfigError(f"index {i} not covered by the partition")


@dataclass(frozen=True)
class SpikeEstimates:
    per_group: tuple[float, ...]
    per_index: NDArray[np.float64]


def estimate_spikes(spec: SampleSpectrum, partition: SpikePartition) -> SpikeEstimates:
    """Singleton groups get gamma(mu_i); a multiple group gets gamma of its mean eigenvalue."""
    if partition.r > spec.mu.shape[0]:
        raise ConfigError("partition covers more indices than there are eigenvalues")
    per_group = []
    per_index = np.empty(partition.r)
    for g in partition.groups:
        try:
            d = mp_law.gamma_shrink(float(np.mean(spec.mu[list(g)])), spec.y_n)
            for t in g:
                mp_law.gamma_shrink(float(spec.mu[t]), spec.y_n)
        except SubcriticalError as exc:
            raise SubcriticalError(f"subcritical spike in group {g}: test invalid ({exc})") from exc
        per_group.append(d)
        per_index[list(g)] = d
    per_index.setflags(write=False)
    return SpikeEstimates(tuple(per_group), per_index)


def auto_partition(
    spec: SampleSpectrum, r_star: int, gap_factor: float = 3.0, delta_gap: float = 0.1
) -> SpikePartition:
    """Group consecutive leading eigenvalues whose shrunk gaps fall below the separation scale."""
    if r_star < 1 or r_star > spec.mu.shape[0]:
        raise ConfigError(f"r* must lie in [1, {spec.mu.shape[0]}]")
    y, N = spec.y_n, spec.n_samples
    dh = [mp_law.gamma_shrink(float(m), y) for m in spec.mu[:r_star]]
    groups: list[list[int]] = [[0]]
    for t in range(r_star - 1):
        d = dh[t]
        scale = gap_factor * math.sqrt(d) / math.sqrt(d - math.sqrt(y)) * N ** (-0.5 + delta_gap)
        if abs(d - dh[t + 1]) < scale:
            groups[-1].append(t + 1)
        else:
            groups.append([t + 1])
    return SpikePartition(tuple(tuple(g) for g in groups))


def extra_spike_flag(spec: SampleSpectrum, r: int) -> bool:
    """True when the first eigenvalue beyond the declared r looks like an outlier too."""
    if spec.mu.shape[0] <= r:
        return False
    lam_plus = mp_law.spectral_edges(spec.y_n).lambda_plus
    return bool(spec.mu[r] > lam_plus + spec.n_samples ** (-2.0 / 3.0 + TOL.extra_spike_exp))


def spectrum_to_csv(spec: SampleSpectrum, path: str) -> None:
    """One row per retained eigenpair: index, mu, then the eigenvector entries."""
    k = spec.n_vectors
    rows = np.column_stack([np.arange(k), spec.mu[:k], spec.xi.T])
    header = ",".join(["index", "mu"] + [f"xi_{j}" for j in range(spec.dim)])
    np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.17g")
