"""Marchenko-Pastur edges, Stieltjes transforms, and the spike maps built on them.

All maps are closed forms in the aspect ratio ``y = M/N``. A spike strength
``d`` is supercritical when ``d > sqrt(y)``; the outlier it produces sits at
``theta(d)`` and ``gamma_shrink`` inverts that map.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError, NumericalError, SubcriticalError
from .tolerances import TOL

__all__ = [
    "SpectralEdges",
    "AuxValues",
    "check_ratio",
    "spectral_edges",
    "theta",
    "theta_prime",
    "gamma_shrink",
    "vartheta",
    "vartheta_prime",
    "aux_funcs",
    "stieltjes_m1",
    "stieltjes_m2",
    "stieltjes_m1_prime",
    "stieltjes_m2_prime",
]


@dataclass(frozen=True, slots=True)
class SpectralEdges:
    lambda_minus: float
    lambda_plus: float


class AuxValues(NamedTuple):
    f: float
    g: float
    h: float
    l: float


def check_ratio(y: float) -> float:
    y = float(y)
    if not math.isfinite(y) or y <= 0.0:
        raise ConfigError(f"aspect ratio must be positive and finite, got {y!r}")
    return y


def spectral_edges(y: float) -> SpectralEdges:
    y = check_ratio(y)
    s = math.sqrt(y)
    return SpectralEdges((1.0 - s) ** 2, (1.0 + s) ** 2)


def _edge_guard(y: float) -> float:
    return TOL.edge_rel * (1.0 + math.sqrt(y)) ** 2


def _check_spike(d: float, y: float) -> tuple[float, float]:
    y = check_ratio(y)
    d = float(d)
    if not math.isfinite(d):
        raise ConfigError(f"spike strength must be finite, got {d!r}")
    if d - math.sqrt(y) <= _edge_guard(y):
        raise SubcriticalError(f"subcritical spike: d={d:.6g} <= sqrt(y)={math.sqrt(y):.6g}")
    return d, y


def theta(d: float, y: float) -> float:
    """Outlier location 1 + d + y + y/d of a supercritical spike."""
    d, y = _check_spike(d, y)
    return 1.0 + d + y + y / d


def theta_prime(d: float, y: float) -> float:
    d, y = _check_spike(d, y)
    return 1.0 - y / (d * d)


def gamma_shrink(x: float, y: float) -> float:
    """Inverse of ``theta``: the spike strength implied by a sample outlier ``x``."""
    y = check_ratio(y)
    x = float(x)
    lam_plus = (1.0 + math.sqrt(y)) ** 2
    if not math.isfinite(x) or x - lam_plus <= _edge_guard(y):
        raise SubcriticalError(f"eigenvalue not separated from bulk: x={x:.6g}, lambda_+={lam_plus:.6g}")
    b = x - y - 1.0
    disc = b * b - 4.0 * y
    if disc < 0.0:
        raise NumericalError(f"negative discriminant {disc!r} above the bulk edge")
    # (x - y - 1) > 2 sqrt(y) > 0 here, so the sum form has no cancellation
    return 0.5 * (b + math.sqrt(disc))


def vartheta(d: float, y: float) -> float:
    """First-order squared overlap (d^2 - y) / (d (d + y)) between sample and population spike."""
    d, y = _check_spike(d, y)
    return (d * d - y) / (d * (d + y))


def vartheta_prime(d: float, y: float) -> float:
    d, y = _check_spike(d, y)
    return y * (d * d + 2.0 * d + y) / (d * d * (d + y) ** 2)


def aux_funcs(d: float, y: float) -> AuxValues:
    d, y = _check_spike(d, y)
    f = y * (1.0 + d) / (d * (d + y)) * (1.0 + d * (1.0 + d) / (d + y))
    g = 2.0 * math.sqrt((d + 1.0) * (d + math.sqrt(y))) / (d + y)
    h = (d + 1.0) / (d + y)
    l = (1.0 + d) / math.sqrt(d * (d + y))
    return AuxValues(f, g, h, l)


def _check_z(z: complex, y: float) -> tuple[complex, float, SpectralEdges]:
    y = check_ratio(y)
    z = complex(z)
    edges = spectral_edges(y)
    if z == 0:
        raise ConfigError("Stieltjes transform evaluated at z = 0")
    if z.imag == 0.0 and edges.lambda_minus <= z.real <= edges.lambda_plus:
        raise ConfigError(f"z={z.real:.6g} lies inside the bulk support")
    return z, y, edges


def _root_term(z: complex, edges: SpectralEdges) -> complex:
    # i*sqrt((l+ - z)(z - l-)) written as a product of principal roots: analytic off
    # [l-, l+], positive for real z > l+, and ~ z at infinity so that m ~ -1/z.
    return cmath.sqrt(z - edges.lambda_plus) * cmath.sqrt(z - edges.lambda_minus)


def stieltjes_m1(z: complex, y: float) -> complex:
    z, y, edges = _check_z(z, y)
    return (1.0 - y - z + _root_term(z, edges)) / (2.0 * z * y)


def stieltjes_m2(z: complex, y: float) -> complex:
    z, y, edges = _check_z(z, y)
    return (y - 1.0 - z + _root_term(z, edges)) / (2.0 * z)


def stieltjes_m1_prime(z: complex, y: float) -> complex:
    """dm1/dz from differentiating z y m^2 + (z - (1 - y)) m + 1 = 0."""
    m = stieltjes_m1(z, y)
    z = complex(z)
    return -(y * m * m + m) / (2.0 * z * y * m + z - (1.0 - y))


def stieltjes_m2_prime(z: complex, y: float) -> complex:
    """dm2/dz from differentiating z m^2 + (z + (1 - y)) m + 1 = 0."""
    m = stieltjes_m2(z, y)
    z = complex(z)
    return -(m * m + m) / (2.0 * z * m + z + (1.0 - y))
