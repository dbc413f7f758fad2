"""Adaptive tests on sample eigenspaces: equality Z_I = Z0 and orthogonality Z_I _|_ Z0.

Index sets are 0-based; the largest sample eigenvalue pairs with the first
declared spike.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Literal, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.stats import norm

from . import asymptotics, mp_law
from .errors import ConfigError, NumericalError
from .rng import Purpose, stream
from .spectral import (
    SampleSpectrum,
    SpikePartition,
    estimate_spikes,
    extra_spike_flag,
    projection_trace,
)
from .tolerances import TOL

__all__ = [
    "Hypothesis",
    "TestReport",
    "GroupDiagnostic",
    "test_equality",
    "test_orthogonality",
    "run_test",
    "check_assumption_separation",
    "DEFAULT_LEVELS",
    "DEFAULT_DRAWS",
]

DEFAULT_LEVELS = (0.01, 0.05, 0.1)
DEFAULT_DRAWS = 20000


@dataclass(frozen=True)
class Hypothesis:
    """Null hypothesis on the sample eigenspace of the index group ``I``.

    ``directions`` (M x r, one column per declared spike) is required for the
    orthogonality test whenever I does not cover every declared spike, and for
    any test with kappa4 != 0.
    """

    kind: Literal["equality", "orthogonality"]
    Z0: NDArray[np.float64]
    I: tuple[int, ...]
    directions: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("equality", "orthogonality"):
            raise ConfigError(f"unknown hypothesis kind {self.kind!r}")
        Z = np.asarray(self.Z0, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] < 1:
            raise ConfigError("Z0 must be an M x |J| matrix with |J| >= 1")
        if np.max(np.abs(Z.T @ Z - np.eye(Z.shape[1]))) > TOL.basis:
            raise ConfigError("Z0 columns are not orthonormal")
        I = tuple(sorted(int(i) for i in self.I))
        if not I or I[0] < 0 or len(set(I)) != len(I):
            raise ConfigError(f"invalid index set {self.I}")
        object.__setattr__(self, "Z0", Z)
        object.__setattr__(self, "I", I)
        if self.directions is not None:
            V = np.asarray(self.directions, dtype=np.float64)
            if V.ndim != 2 or V.shape[0] != Z.shape[0]:
                raise ConfigError("directions must be an M x r matrix")
            object.__setattr__(self, "directions", V)

    @property
    def J(self) -> int:
        return int(self.Z0.shape[1])


@dataclass(frozen=True)
class GroupDiagnostic:
    group: tuple[int, ...]
    leakage: float
    leakage_bound: float
    min_gap: float
    gap_bound: float

    @property
    def status(self) -> str:
        ok = self.leakage < self.leakage_bound and self.min_gap >= self.gap_bound
        return "pass" if ok else "warn"


def check_assumption_separation(
    d_hat: Sequence[float],
    partition: SpikePartition,
    y: float,
    N: int,
    eps0: float = TOL.eps0,
) -> list[GroupDiagnostic]:
    """Leakage bound and non-overlap gap per group, with one estimate per group in ``d_hat``."""
    if len(d_hat) != len(partition.groups):
        raise ConfigError("one spike estimate per group is required")
    out = []
    for gi, g in enumerate(partition.groups):
        di = float(d_hat[gi])
        others = [float(d_hat[k]) for k in range(len(d_hat)) if k != gi]
        mult = [len(partition.groups[k]) for k in range(len(d_hat)) if k != gi]
        leak = sum(m * di * dj / (di - dj) ** 2 if dj != di else math.inf for dj, m in zip(others, mult)) / N
        leak_bound = N ** (-eps0) / (math.sqrt(N) * (di * di - y))
        gap = min((abs(di - dj) for dj in others), default=math.inf)
        gap_bound = di**1.5 / math.sqrt(max(di - math.sqrt(y), 1e-300)) * N ** (-0.5 + eps0)
        out.append(GroupDiagnostic(tuple(g), leak, leak_bound, gap, gap_bound))
    return out


@dataclass(frozen=True)
class TestReport:
    kind: str
    statistic: float
    p_value: float
    reference: dict[str, Any]
    estimates: tuple[float, ...]
    decisions: dict[float, bool]
    diagnostics: dict[str, Any] = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this class

    def reject(self, level: float) -> bool:
        return self.p_value < level

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "reference": dict(self.reference),
            "estimates": list(self.estimates),
            "diagnostics": self.diagnostics,
            "decisions": {repr(float(k)): v for k, v in sorted(self.decisions.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _levels(levels: Sequence[float]) -> tuple[float, ...]:
    out = tuple(sorted(set(float(a) for a in levels)))
    if any(not 0.0 < a < 1.0 for a in out):
        raise ConfigError(f"levels must lie in (0, 1), got {out}")
    return out


def _common(spec: SampleSpectrum, hyp: Hypothesis, partition: SpikePartition) -> tuple[np.ndarray, dict[str, Any]]:
    if hyp.Z0.shape[0] != spec.dim:
        raise ConfigError(f"Z0 has {hyp.Z0.shape[0]} rows, spectrum has dimension {spec.dim}")
    if hyp.I[-1] >= partition.r:
        raise ConfigError(f"index set {hyp.I} is not covered by the partition of {partition.r} spikes")
    for g in partition.groups:
        s = set(g) & set(hyp.I)
        if s and s != set(g):
            raise ConfigError(f"index set {hyp.I} splits the multiplicity group {g}")
    est = estimate_spikes(spec, partition)
    diag = check_assumption_separation(est.per_group, partition, spec.y_n, spec.n_samples)
    targets = [d for d in diag if set(d.group) <= set(hyp.I)]
    diagnostics = {
        "separation": [
            {"group": [i + 1 for i in d.group], "status": d.status, "leakage": d.leakage,
             "leakage_bound": d.leakage_bound, "min_gap": d.min_gap, "gap_bound": d.gap_bound}
            for d in targets
        ],
        "extra_spike": extra_spike_flag(spec, partition.r),
    }
    warn = diagnostics["extra_spike"] or any(d.status == "warn" for d in targets)
    diagnostics["status"] = "warn" if warn else "ok"
    return est.per_index, diagnostics


def test_equality(
    spec: SampleSpectrum,
    hyp: Hypothesis,
    partition: SpikePartition,
    kappa4: float = 0.0,
    levels: Sequence[float] = DEFAULT_LEVELS,
) -> TestReport:
    """Two-sided test of Z_I = span(Z0) with the pivotal statistic sqrt(N) T / sqrt(V1)."""
    if hyp.kind != "equality":
        raise ConfigError("hypothesis kind must be 'equality'")
    if hyp.J != len(hyp.I):
        raise ConfigError(f"rank of Z0 ({hyp.J}) differs from |I| ({len(hyp.I)})")
    d_hat, diagnostics = _common(spec, hyp, partition)
    d_I = [float(d_hat[i]) for i in hyp.I]
    y = spec.y_n
    T = projection_trace(spec, hyp.I, hyp.Z0) - sum(mp_law.vartheta(d, y) for d in d_I)
    if kappa4 != 0.0:
        V = hyp.directions[:, list(hyp.I)] if hyp.directions is not None else hyp.Z0
        spec_v1 = asymptotics.v1(d_I, y, kappa4, V=V)
    else:
        spec_v1 = asymptotics.v1(d_I, y)
    if not spec_v1.value > 0.0:
        raise NumericalError(f"non-positive variance V1 = {spec_v1.value!r}")
    stat = math.sqrt(spec.n_samples) * T / math.sqrt(spec_v1.value)
    p = float(min(1.0, 2.0 * norm.sf(abs(stat))))
    lv = _levels(levels)
    return TestReport(
        "equality", float(stat), p, {"type": "std_normal"}, tuple(float(d) for d in d_hat),
        {a: p < a for a in lv}, diagnostics,
    )


def _target_directions(spec: SampleSpectrum, hyp: Hypothesis, r: int, kappa4: float) -> NDArray[np.float64]:
    if hyp.directions is not None:
        if hyp.directions.shape[1] != r:
            raise ConfigError(f"directions must have {r} columns, one per declared spike")
        return hyp.directions
    if len(hyp.I) != r:
        raise ConfigError("directions of the spikes outside I are required when I does not cover every spike")
    if kappa4 != 0.0:
        raise ConfigError("kappa4 != 0 requires spike directions for the fourth-moment terms")
    # Under the null span(v_I) is orthogonal to Z0; the projected sample vectors
    # stand in for v_I. Only their orthogonality to Z0 enters when kappa4 = 0.
    Z = hyp.Z0
    X = spec.xi[:, list(hyp.I)]
    X = X - Z @ (Z.T @ X)
    Qm, _ = np.linalg.qr(X)
    return Qm


def test_orthogonality(
    spec: SampleSpectrum,
    hyp: Hypothesis,
    partition: SpikePartition,
    kappa4: float = 0.0,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    stream_index: int = 0,
    levels: Sequence[float] = DEFAULT_LEVELS,
) -> TestReport:
    """Upper-tail test of Z_I _|_ span(Z0) with N T2 / q against a simulated chi-square mixture."""
    if hyp.kind != "orthogonality":
        raise ConfigError("hypothesis kind must be 'orthogonality'")
    if draws < 1000:
        raise ConfigError(f"at least 1000 mixture draws are required, got {draws}")
    d_hat, diagnostics = _common(spec, hyp, partition)
    r = partition.r
    V = _target_directions(spec, hyp, r, kappa4)
    q, U = asymptotics.q_and_U(d_hat, V, hyp.I, hyp.Z0, spec.y_n, kappa4)
    if not q > 0.0:
        raise NumericalError(f"non-positive normalizer q = {q!r}")
    T2 = projection_trace(spec, hyp.I, hyp.Z0)
    stat = spec.n_samples * T2 / q
    ref = asymptotics.simulate_quadratic_form(U, q, draws, stream(seed, stream_index, Purpose.MIXTURE), seed)
    p = ref.p_value(stat)
    lv = _levels(levels)
    diagnostics = dict(diagnostics, q=q)
    return TestReport(
        "orthogonality", float(stat), float(p),
        {"type": "simulated_mixture", "draws": int(draws), "seed": int(seed), "stream": int(stream_index)},
        tuple(float(d) for d in d_hat), {a: p < a for a in lv}, diagnostics,
    )


def run_test(
    spec: SampleSpectrum,
    hyp: Hypothesis,
    partition: SpikePartition,
    kappa4: float = 0.0,
    draws: int = DEFAULT_DRAWS,
    seed: int = 0,
    stream_index: int = 0,
    levels: Sequence[float] = DEFAULT_LEVELS,
) -> TestReport:
    if hyp.kind == "equality":
        return test_equality(spec, hyp, partition, kappa4, levels)
    return test_orthogonality(spec, hyp, partition, kappa4, draws, seed, stream_index, levels)

