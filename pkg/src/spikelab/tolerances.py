"""Numeric tolerances shared by every module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class Tolerances:
    edge_rel: float = 1e-9          # guard below which d - sqrt(y) or x - lambda_+ is subcritical
    orthonormal: float = 1e-10      # column orthonormality of spike directions
    basis: float = 1e-8             # orthonormality of hypothesis bases, unit-norm checks
    symmetric_rel: float = 1e-10    # relative asymmetry accepted by sym_eig
    psd_rel: float = 1e-8           # eigenvalue floor -psd_rel * trace
    moment_law: float = 1e-12       # mean/variance checks for entry laws
    eps0: float = 0.05              # exponent slack in the separation diagnostics
    extra_spike_exp: float = 0.1    # mu_{r+1} > lambda_+ + N^(-2/3 + extra_spike_exp) warns


TOL = Tolerances()
