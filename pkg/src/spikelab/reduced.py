"""Exact low-cost sampler of the leading sample eigenpairs for Gaussian data.

When every spike direction and every probe direction lives on a small set K
of k coordinates, the remaining M - k rows of the data are pure noise. Their
Gram matrix is rotation invariant, so the nonzero spectrum of Q equals that of

    diag(lambda) + B^T B,    B = Sigma_K^{1/2} G / sqrt(N),  G a k x N Gaussian,

where lambda are Wishart eigenvalues. Because B is rotation invariant too, the
noise may enter as the tridiagonal chi-model matrix T in place of diag(lambda),
so no full eigendecomposition is needed. The leading eigenvalues solve a k x k
secular equation and the K-coordinates of each sample eigenvector follow in
closed form. Coordinates outside K are
kept only through their Gram matrix, represented isometrically in r extra
coordinates, which is all that projections onto directions in span(K) need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.typing import NDArray
from scipy.optimize import brentq

from .errors import ConfigError, NumericalError
from .model import SpikedModel
from .spectral import SampleSpectrum, canonical_signs

__all__ = ["ReducedSample", "active_coordinates", "wishart_eigenvalues", "wishart_tridiagonal", "sample_reduced"]


def active_coordinates(model: SpikedModel, probes: Sequence[NDArray[np.float64]] = ()) -> tuple[int, ...]:
    """Rows on which any spike direction or probe vector is nonzero."""
    mats = [model.directions] + [np.asarray(p, dtype=np.float64).reshape(model.M, -1) for p in probes]
    mask = np.zeros(model.M, dtype=bool)
    for A in mats:
        mask |= np.any(A != 0.0, axis=1)
    return tuple(int(i) for i in np.flatnonzero(mask))


def wishart_tridiagonal(m: int, n: int, rng: np.random.Generator) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Diagonal and off-diagonal of an n x n tridiagonal T = C^T C with the law of G^T G, G m x n Gaussian.

    C is the upper bidiagonal of the chi model; T equals G^T G up to an
    independent Haar rotation.
    """
    if m < 1 or n < 1:
        raise ConfigError("Wishart dimensions must be positive")
    p = min(m, n)
    a = np.zeros(n)
    b = np.zeros(max(n - 1, 0))
    a[:p] = np.sqrt(rng.chisquare(m - np.arange(p)))
    nb = min(m, n - 1)
    b[:nb] = np.sqrt(rng.chisquare(n - 1 - np.arange(nb)))
    td = a * a
    td[1:] += b * b
    te = a[:-1] * b
    return td, te


def wishart_eigenvalues(m: int, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Eigenvalues of G^T G (n x n) for an m x n standard Gaussian G, descending."""
    td, te = wishart_tridiagonal(m, n, rng)
    return np.clip(scipy.linalg.eigvalsh_tridiagonal(td, te)[::-1], 0.0, None)


@dataclass(frozen=True)
class ReducedSample:
    """Leading spectrum in reduced coordinates: the K rows followed by r residual coordinates."""

    spectrum: SampleSpectrum
    coords: tuple[int, ...]
    M: int
    used_fallback: bool

    def embed(self, w: NDArray[np.float64]) -> NDArray[np.float64]:
        """Map vectors (M or M x c) supported on K into the reduced coordinates."""
        w = np.asarray(w, dtype=np.float64)
        vec = w.ndim == 1
        W = w.reshape(self.M, -1)
        mask = np.ones(self.M, dtype=bool)
        mask[list(self.coords)] = False
        if np.any(W[mask] != 0.0):
            raise ConfigError("vector has mass outside the active coordinates")
        extra = self.spectrum.dim - len(self.coords)
        out = np.vstack([W[list(self.coords)], np.zeros((extra, W.shape[1]))])
        return out[:, 0] if vec else out


class _Resolvent:
    """Solves (mu - T) X = B^T for tridiagonal T through a banded solver."""

    def __init__(self, td: NDArray[np.float64], te: NDArray[np.float64], B: NDArray[np.float64]) -> None:
        self.td, self.te, self.Bt = td, te, np.ascontiguousarray(B.T)
        self.B = B
        n = td.shape[0]
        self.ab = np.zeros((3, n))
        self.ab[0, 1:] = -te
        self.ab[2, :-1] = -te

    def solve(self, mu: float) -> NDArray[np.float64]:
        self.ab[1] = mu - self.td
        return scipy.linalg.solve_banded((1, 1), self.ab, self.Bt, check_finite=False)

    def F(self, mu: float) -> NDArray[np.float64]:
        S = self.B @ self.solve(mu)
        return np.eye(self.B.shape[0]) - 0.5 * (S + S.T)


def _outlier_roots(res: _Resolvent, top: float, r: int) -> list[float] | None:
    scale = float(np.sum(res.B * res.B))

    def eig_j(mu: float, j: int) -> float:
        return float(np.linalg.eigvalsh(res.F(mu))[j])

    hi = top + scale + 1.0
    roots = []
    for j in range(r):
        lo = top + 1e-10 * max(1.0, top)
        if eig_j(lo, j) >= 0.0 or eig_j(hi, j) <= 0.0:
            return None
        roots.append(brentq(eig_j, lo, hi, args=(j,), xtol=1e-14 * hi, rtol=4 * np.finfo(float).eps, maxiter=200))
        hi = roots[-1]
    return roots


def sample_reduced(
    model: SpikedModel, r: int, rng: np.random.Generator, probes: Sequence[NDArray[np.float64]] = ()
) -> ReducedSample:
    """Draw the top ``r`` eigenpairs of Q exactly in law, for Gaussian entries."""
    if model.law.kind != "gaussian":
        raise ConfigError("the reduced sampler requires Gaussian entries")
    coords = active_coordinates(model, probes)
    k = len(coords)
    M, N = model.M, model.N
    if not 1 <= r <= k or k >= M:
        raise ConfigError(f"need 1 <= r <= k < M, got r={r}, k={k}, M={M}")
    VK = model.directions[list(coords)]
    s = np.sqrt(1.0 + model.d_per_index) - 1.0
    G = rng.standard_normal((k, N)) / math.sqrt(N)
    B = G + VK @ (s[:, None] * (VK.T @ G))
    td, te = wishart_tridiagonal(M - k, N, rng)
    td, te = td / N, te / N
    res = _Resolvent(td, te, B)
    top = float(scipy.linalg.eigvalsh_tridiagonal(td, te, select="i", select_range=(N - 1, N - 1))[0])
    roots = _outlier_roots(res, top, r)
    fallback = roots is None
    XK = np.empty((k, r))
    if not fallback:
        mu = np.array(roots)
        for j, m in enumerate(mu):
            w, Vf = np.linalg.eigh(res.F(m))
            c = Vf[:, j]
            t = res.solve(m) @ c
            XK[:, j] = c / (math.sqrt(m) * float(np.linalg.norm(t)))
    else:
        H = np.diag(td) + np.diag(te, 1) + np.diag(te, -1) + B.T @ B
        w, U = scipy.linalg.eigh(H, subset_by_index=[N - r, N - 1])
        mu, U = w[::-1], U[:, ::-1]
        if np.any(mu <= 0):
            raise NumericalError("non-positive leading eigenvalue")
        XK = (B @ U) / np.sqrt(mu)
    R = np.eye(r) - XK.T @ XK
    R = 0.5 * (R + R.T)
    ev, EV = np.linalg.eigh(R)
    if ev[0] < -1e-8:
        raise NumericalError("residual Gram matrix is not positive semi-definite")
    # isometric residual coordinates: rows C with C^T C = R
    C = (EV * np.sqrt(np.clip(ev, 0.0, None))).T
    xi = np.vstack([XK, C])
    spec = SampleSpectrum(np.ascontiguousarray(mu, dtype=np.float64), canonical_signs(xi), M / N, N)
    return ReducedSample(spec, coords, M, fallback)
