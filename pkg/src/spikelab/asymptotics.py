"""Closed-form limiting covariances of spiked eigenvalues and generalized components.

Index sets are 0-based over the r declared spike directions (columns of V).
Spike strengths are passed per index (``d_all[k]`` for column ``k``); bulk
directions carry strength 0 and are handled through the residual of the
projection onto span(V), never by looping over M coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from . import mp_law
from .errors import ConfigError, NotPSDError, OverlappingSpikesError
from .tolerances import TOL

__all__ = [
    "LimitCovariance",
    "VarsigmaVector",
    "V1Spec",
    "QuadraticFormReference",
    "moment_sum",
    "varsigma",
    "cov_AB",
    "cov_C_joint",
    "c_matrix",
    "v1",
    "v1_alpha",
    "v1_all_equal_printed",
    "v1_all_equal",
    "q_and_U",
    "simulate_quadratic_form",
    "psd_sqrt",
]

_ZERO_OVERLAP = 1e-12


@dataclass(frozen=True)
class LimitCovariance:
    """Symmetric covariance with named coordinates."""

    labels: tuple[str, ...]
    mat: NDArray[np.float64]

    def __post_init__(self) -> None:
        n = len(self.labels)
        if self.mat.shape != (n, n):
            raise ConfigError(f"matrix shape {self.mat.shape} does not match {n} labels")
        if not np.allclose(self.mat, self.mat.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(self.mat), initial=0.0)))):
            raise ConfigError("covariance matrix is not symmetric")
        self.mat.setflags(write=False)

    def __getitem__(self, key: tuple[str, str]) -> float:
        a, b = key
        return float(self.mat[self.labels.index(a), self.labels.index(b)])

    def min_eigenvalue(self) -> float:
        if not self.labels:
            return 0.0
        return float(np.linalg.eigvalsh(self.mat)[0])

    def is_psd(self) -> bool:
        tr = float(np.trace(self.mat))
        return self.min_eigenvalue() >= -TOL.psd_rel * max(abs(tr), 1e-300)

    def to_csv(self, path: str) -> None:
        np.savetxt(path, self.mat, delimiter=",", header=",".join(self.labels), comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path: str) -> "LimitCovariance":
        with open(path) as fh:
            header = fh.readline().strip()
        mat = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(tuple(header.split(",")), mat)


def moment_sum(pattern: Sequence[int], vectors: Sequence[NDArray[np.float64]]) -> float:
    """s_{k1..kt}(a1..at) = sum_j prod_i a_i(j)^{k_i}."""
    if len(pattern) != len(vectors) or not vectors:
        raise ConfigError("pattern and vector list must have equal, non-zero length")
    arrs = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    n = arrs[0].shape[0]
    if any(a.shape[0] != n for a in arrs):
        raise ConfigError("all vectors must have the same length")
    prod = np.ones(n)
    for k, a in zip(pattern, arrs):
        prod = prod * a ** int(k)
    return float(np.sum(prod))


@dataclass(frozen=True)
class VarsigmaVector:
    vec: NDArray[np.float64]
    norm: float
    normalized: NDArray[np.float64]


def _as_V(V: NDArray[np.float64], d_all: Sequence[float]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    V = np.asarray(V, dtype=np.float64)
    d = np.asarray(d_all, dtype=np.float64).ravel()
    if V.ndim != 2 or V.shape[1] != d.shape[0]:
        raise ConfigError(f"directions shape {V.shape} does not match {d.shape[0]} spike strengths")
    return V, d


def varsigma(
    d_i: float,
    d_all: Sequence[float],
    V: NDArray[np.float64],
    I: Iterable[int],
    w: NDArray[np.float64],
) -> VarsigmaVector:
    """Weighted projection of w onto spike directions outside I plus the bulk residual.

    Directions outside I with strength equal to d_i contribute nothing when w
    is orthogonal to them and raise otherwise.
    """
    V, d = _as_V(V, d_all)
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != V.shape[0]:
        raise ConfigError("w and directions have different lengths")
    excl = set(int(i) for i in I)
    overlaps = V.T @ w
    vec = w - V @ overlaps
    for j in range(V.shape[1]):
        if j in excl:
            continue
        c = overlaps[j]
        if d[j] == d_i:
            if abs(c) > _ZERO_OVERLAP:
                raise OverlappingSpikesError(f"direction {j} shares strength {d_i} with the target group")
            continue
        vec = vec + (d_i * math.sqrt(d[j] + 1.0) / (d_i - d[j]) * c) * V[:, j]
    norm = float(np.linalg.norm(vec))
    normalized = vec / norm if norm > 0.0 else np.zeros_like(vec)
    return VarsigmaVector(vec, norm, normalized)


def _pieces(d_i: float, y: float, d_all: Sequence[float], V: NDArray[np.float64], I: Sequence[int], w: NDArray[np.float64]):
    V, d = _as_V(V, d_all)
    I = sorted(int(t) for t in I)
    if not I or I[0] < 0 or I[-1] >= V.shape[1]:
        raise ConfigError(f"index set {I} out of range")
    w = np.asarray(w, dtype=np.float64).ravel()
    if abs(float(w @ w) - 1.0) > TOL.basis:
        raise ConfigError("w must be a unit vector")
    Ic = [j for j in range(V.shape[1]) if j not in I]
    wI = V[:, I] @ (V[:, I].T @ w)
    vs = varsigma(d_i, d, V, I, w)
    return V, I, Ic, w, wI, vs, mp_law.aux_funcs(d_i, y)


def cov_AB(
    d_i: float,
    y: float,
    d_all: Sequence[float],
    V: NDArray[np.float64],
    I: Sequence[int],
    w: NDArray[np.float64],
) -> tuple[LimitCovariance, LimitCovariance]:
    """The matrices A and B for the group I with common strength d_i and direction w.

    Coordinates: w_I, varsigma_I, v_t (t in I ascending), v_j (j outside I ascending).
    The limiting covariance of (Theta, Lambda, Delta_t, Pi_j) is A + kappa4 (d^2-y)/d^2 B.
    """
    V, I, Ic, w, wI, vs, aux = _pieces(d_i, y, d_all, V, I, w)
    f, g, h, l = aux
    s0 = vs.normalized
    nwI2 = float(wI @ wI)
    labels = ("Theta", "Lambda") + tuple(f"Delta_{t}" for t in I) + tuple(f"Pi_{j}" for j in Ic)
    n = len(labels)
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    rt = {t: 2 + k for k, t in enumerate(I)}
    rj = {j: 2 + len(I) + k for k, j in enumerate(Ic)}
    sh = math.sqrt(h)

    def put(M_: NDArray[np.float64], a: int, b: int, val: float) -> None:
        M_[a, b] = val
        M_[b, a] = val

    put(A, 0, 0, 2 * y * h * h * (1 + y * h * h) * nwI2 * nwI2)
    put(A, 1, 1, g * g * nwI2)
    for t in I:
        vt = V[:, t]
        put(A, rt[t], rt[t], h)
        put(A, 1, rt[t], g * sh * float(wI @ vt))
    for j in Ic:
        vj = V[:, j]
        put(A, rj[j], rj[j], l * l * nwI2)
        put(A, 1, rj[j], g * l * float(s0 @ vj) * nwI2)
        for t in I:
            put(A, rt[t], rj[j], sh * l * float(wI @ V[:, t]) * float(s0 @ vj))

    s = moment_sum
    put(B, 0, 0, f * f * s([4], [wI]))
    put(B, 1, 1, g * g * s([2, 2], [s0, wI]))
    put(B, 0, 1, f * g * s([1, 3], [s0, wI]))
    for t1 in I:
        v1 = V[:, t1]
        for t2 in I:
            if t2 >= t1:
                put(B, rt[t1], rt[t2], h * s([1, 1, 2], [v1, V[:, t2], s0]))
        put(B, 0, rt[t1], f * sh * s([1, 1, 2], [v1, s0, wI]))
        put(B, 1, rt[t1], g * sh * s([1, 1, 2], [v1, wI, s0]))
    for j1 in Ic:
        vj = V[:, j1]
        for j2 in Ic:
            if j2 >= j1:
                put(B, rj[j1], rj[j2], l * l * s([1, 1, 2], [vj, V[:, j2], wI]))
        put(B, 0, rj[j1], f * l * s([1, 3], [vj, wI]))
        put(B, 1, rj[j1], g * l * s([1, 1, 2], [vj, s0, wI]))
        for t in I:
            put(B, rt[t], rj[j1], sh * l * s([1, 1, 1, 1], [V[:, t], vj, wI, s0]))
    return LimitCovariance(labels, A), LimitCovariance(labels, B)


def cov_C_joint(
    d_i: float,
    y: float,
    kappa4: float,
    d_all: Sequence[float],
    V: NDArray[np.float64],
    I: Sequence[int],
    w: NDArray[np.float64],
) -> LimitCovariance:
    """Joint covariance of the eigenvalue block Phi with (Theta, Lambda, Delta_t, Pi_j).

    For a single index I = {i} the Phi block is the scalar Phi_i of the outlier
    expansion mu_i = theta(d_i) + sqrt((d_i^2 - y)/N) Phi_i. For a multiple group
    it holds the upper-triangular entries Phi_{lk}, l <= k.
    """
    A, B = cov_AB(d_i, y, d_all, V, I, w)
    V, I, Ic, w, wI, vs, aux = _pieces(d_i, y, d_all, V, I, w)
    f, g, h, l = aux
    s0 = vs.normalized
    rho2 = 1.0 - y / (d_i * d_i)
    e = 1.0 + 1.0 / d_i
    pairs = [(a, b) for ai, a in enumerate(I) for b in I[ai:]]
    phi_labels = tuple(f"Phi_{a}_{b}" if len(I) > 1 else f"Phi_{a}" for a, b in pairs)
    p = len(pairs)
    n = p + len(A.labels)
    C = np.zeros((n, n))
    C[p:, p:] = A.mat + kappa4 * rho2 * B.mat
    s = moment_sum
    for x, (l1, k1) in enumerate(pairs):
        vl, vk = V[:, l1], V[:, k1]
        for z, (l2, k2) in enumerate(pairs):
            val = kappa4 * rho2 * e * e * s([1, 1, 1, 1], [vl, vk, V[:, l2], V[:, k2]])
            if (l1, k1) == (l2, k2):
                val += (2.0 if l1 == k1 else 1.0) * e * e
            C[x, z] = val
        row = np.zeros(n - p)
        row[0] = 2 * y * h * h * e * float(wI @ vl) * float(wI @ vk) + kappa4 * rho2 * e * f * s([1, 1, 2], [vl, vk, wI])
        row[1] = kappa4 * rho2 * e * g * s([1, 1, 1, 1], [vl, vk, s0, wI])
        for m, t in enumerate(I):
            row[2 + m] = kappa4 * rho2 * e * math.sqrt(h) * s([1, 1, 1, 1], [vl, vk, V[:, t], s0])
        for m, j in enumerate(Ic):
            row[2 + len(I) + m] = kappa4 * rho2 * e * l * s([1, 1, 1, 1], [vl, vk, V[:, j], wI])
        C[x, p:] = row
        C[p:, x] = row
    return LimitCovariance(phi_labels + A.labels, C)


def _s22_table(V: NDArray[np.float64] | None, s22: NDArray[np.float64] | None, n: int, kappa4: float) -> NDArray[np.float64]:
    if s22 is not None:
        S = np.asarray(s22, dtype=np.float64)
        if S.shape != (n, n):
            raise ConfigError(f"s22 table must be {n} x {n}")
        return S
    if V is not None:
        V = np.asarray(V, dtype=np.float64)
        if V.ndim != 2 or V.shape[1] != n:
            raise ConfigError(f"directions must have {n} columns")
        V2 = V * V
        return V2.T @ V2
    if kappa4 != 0.0:
        raise ConfigError("kappa4 != 0 requires spike directions or their s_{2,2} table")
    return np.zeros((n, n))


def c_matrix(
    d: Sequence[float],
    y: float,
    kappa4: float = 0.0,
    V: NDArray[np.float64] | None = None,
    s22: NDArray[np.float64] | None = None,
) -> LimitCovariance:
    """Joint covariance of (Phi_i, Theta_i) over the indices of a target set, Phi block first."""
    d = np.asarray(d, dtype=np.float64).ravel()
    n = d.shape[0]
    S = _s22_table(V, s22, n, kappa4)
    e = np.array([1.0 + 1.0 / x for x in d])
    rho = np.array([math.sqrt(1.0 - y / (x * x)) for x in d])
    aux = [mp_law.aux_funcs(x, y) for x in d]
    f = np.array([a.f for a in aux])
    h = np.array([a.h for a in aux])
    eye = np.eye(n)
    cpp = eye * (2.0 * e * e) + kappa4 * np.outer(rho * e, rho * e) * S
    ctt = eye * (2.0 * y * h * h * (1.0 + y * h * h)) + kappa4 * np.outer(rho * f, rho * f) * S
    cpt = eye * (2.0 * y * h * h * e) + kappa4 * np.outer(rho * e, rho * f) * S
    C = np.block([[cpp, cpt], [cpt.T, ctt]])
    labels = tuple(f"Phi_{k}" for k in range(n)) + tuple(f"Theta_{k}" for k in range(n))
    return LimitCovariance(labels, 0.5 * (C + C.T))


def v1_alpha(d: Sequence[float], y: float) -> NDArray[np.float64]:
    d = np.asarray(d, dtype=np.float64).ravel()
    a_phi = [-y * (x * x + 2 * x + y) / ((x + y) ** 2 * math.sqrt(x * x - y)) for x in d]
    a_theta = [1.0 / math.sqrt(x * x - y) for x in d]
    return np.array(a_phi + a_theta)


@dataclass(frozen=True)
class V1Spec:
    alpha: NDArray[np.float64]
    C: LimitCovariance
    value: float


def v1(
    d: Sequence[float],
    y: float,
    kappa4: float = 0.0,
    V: NDArray[np.float64] | None = None,
    s22: NDArray[np.float64] | None = None,
) -> V1Spec:
    """Variance of sqrt(N) * T built index by index: alpha^T C alpha."""
    for x in np.ravel(d):
        mp_law.aux_funcs(float(x), y)  # supercritical guard
    C = c_matrix(d, y, kappa4, V, s22)
    alpha = v1_alpha(d, y)
    value = float(alpha @ C.mat @ alpha)
    return V1Spec(alpha, C, value)


def _all_equal_parts(d: float, y: float) -> tuple[float, float, float, float]:
    aux = mp_law.aux_funcs(d, y)
    yh2 = y * aux.h * aux.h
    K = y * (d * d + 2 * d + y) * (1 + d) / ((d + y) ** 2 * d)
    kap = (aux.f / d - K / d) ** 2
    return yh2, K, kap, 1.0 / (d * d - y)


def v1_all_equal_printed(d: float, y: float, n: int, kappa4: float = 0.0, s22_sum: float = 0.0) -> float:
    """Closed form for |I| = n equal spikes, exactly as it is usually stated.

    It scales the eigenvalue part of the variance by 1/n^2 instead of 1/n and so
    agrees with ``v1`` only for n = 1; ``v1_all_equal`` is the consistent version.
    """
    yh2, K, kap, b2 = _all_equal_parts(d, y)
    return 2 * b2 * (yh2 * n - K) ** 2 + 2 * b2 * (yh2 * n + yh2 * yh2 * (n - n * n)) + kappa4 * kap * s22_sum


def v1_all_equal(d: float, y: float, n: int, kappa4: float = 0.0, s22_sum: float = 0.0) -> float:
    """Closed form for |I| = n equal spikes consistent with the per-index construction."""
    yh2, K, kap, b2 = _all_equal_parts(d, y)
    return 2 * b2 * n * ((yh2 - K) ** 2 + yh2) + kappa4 * kap * s22_sum


def q_and_U(
    d_all: Sequence[float],
    V: NDArray[np.float64],
    I: Sequence[int],
    Z0: NDArray[np.float64],
    y: float,
    kappa4: float = 0.0,
) -> tuple[float, LimitCovariance]:
    """Normalizer q and covariance U of the orthogonality statistic N * T2.

    ``V`` holds all r spike directions (r0 = r). Coordinates of U are ordered
    (i, j) with i over I and j over the columns of Z0, i varying slowest.
    """
    V, d = _as_V(V, d_all)
    I = sorted(int(t) for t in I)
    if not I or I[0] < 0 or I[-1] >= V.shape[1]:
        raise ConfigError(f"index set {I} out of range")
    Z0 = np.asarray(Z0, dtype=np.float64)
    if Z0.ndim != 2 or Z0.shape[0] != V.shape[0]:
        raise ConfigError("Z0 must be an M x |J| basis matrix")
    J = Z0.shape[1]
    sig = {}
    for i in I:
        for j in range(J):
            sig[i, j] = varsigma(float(d[i]), d, V, I, Z0[:, j])
    aux = {i: mp_law.aux_funcs(float(d[i]), y) for i in I}
    # q: sum over k outside I of h d_i (d_k+1)/(d_i-d_k)^2 <u,v_k>^2, which is h ||varsigma||^2 / d_i
    q = max(aux[i].h * sig[i, j].norm ** 2 / float(d[i]) for i in I for j in range(J))
    coords = [(i, j) for i in I for j in range(J)]
    n = len(coords)
    U = np.zeros((n, n))
    for a, (i1, j1) in enumerate(coords):
        s1 = sig[i1, j1]
        c1 = math.sqrt((d[i1] ** 2 - y) * aux[i1].h) / d[i1]
        for b, (i2, j2) in enumerate(coords):
            if b < a:
                continue
            s2 = sig[i2, j2]
            val = 0.0
            if i1 == i2:
                val += aux[i1].h * float(s1.normalized @ s2.normalized)
            if kappa4 != 0.0:
                c2 = math.sqrt((d[i2] ** 2 - y) * aux[i2].h) / d[i2]
                val += kappa4 * c1 * c2 * moment_sum([1, 1, 1, 1], [V[:, i1], V[:, i2], s1.normalized, s2.normalized])
            val *= s1.norm * s2.norm / math.sqrt(d[i1] * d[i2])
            U[a, b] = U[b, a] = val
    labels = tuple(f"Delta_{i}_{j}" for i, j in coords)
    return float(q), LimitCovariance(labels, U)


def psd_sqrt(mat: NDArray[np.float64]) -> NDArray[np.float64]:
    """Symmetric square root, clipping negative eigenvalues that are within tolerance."""
    w, Q = np.linalg.eigh(0.5 * (mat + mat.T))
    tr = float(np.sum(np.abs(w)))
    if w.size and w[0] < -TOL.psd_rel * max(tr, 1e-300):
        raise NotPSDError(f"matrix has eigenvalue {w[0]:.3g} below tolerance")
    w = np.clip(w, 0.0, None)
    return (Q * np.sqrt(w)) @ Q.T


@dataclass(frozen=True)
class QuadraticFormReference:
    """Sorted draws of g^T U g / q with g standard normal."""

    samples: NDArray[np.float64]
    seed: int | None = None

    @property
    def draws(self) -> int:
        return int(self.samples.shape[0])

    def quantile(self, p: float) -> float:
        return float(np.quantile(self.samples, p))

    def p_value(self, x: float) -> float:
        """Upper-tail probability with the (+1)/(B+1) correction."""
        count = self.draws - int(np.searchsorted(self.samples, x, side="left"))
        return (count + 1.0) / (self.draws + 1.0)

    def cdf(self, x: NDArray[np.float64] | float) -> NDArray[np.float64]:
        return np.searchsorted(self.samples, x, side="right") / self.draws


def simulate_quadratic_form(
    U: LimitCovariance | NDArray[np.float64], q: float, draws: int, rng: np.random.Generator, seed: int | None = None
) -> QuadraticFormReference:
    mat = U.mat if isinstance(U, LimitCovariance) else np.asarray(U, dtype=np.float64)
    if draws < 1000:
        raise ConfigError(f"at least 1000 draws are required, got {draws}")
    if not (math.isfinite(q) and q > 0.0):
        raise ConfigError(f"q must be positive, got {q!r}")
    R = psd_sqrt(mat)
    G = rng.standard_normal((draws, mat.shape[0]))
    X = G @ R
    samples = np.sort(np.einsum("ij,ij->i", X, X) / q)
    return QuadraticFormReference(samples, seed)
