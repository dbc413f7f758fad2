"""Monte Carlo execution: null size, power curves, and ECDF calibration runs.

Replication ``k`` always draws from the streams keyed by (seed, k), so results
do not depend on the worker count or on the rotation angle being evaluated.
"""

from __future__ import annotations

import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.stats import chi2, norm

from .. import asymptotics
from ..errors import ConfigError, NumericalError
from ..inference import Hypothesis, TestReport, run_test
from ..model import SpikedModel, sample_data, sqrt_sigma_apply
from ..reduced import sample_reduced
from ..rng import Purpose, stream
from ..spectral import SampleSpectrum, top_spectrum
from .config import ScenarioConfig

__all__ = [
    "ExperimentResult",
    "PowerPoint",
    "EcdfResult",
    "DEFAULT_PHI_GRID",
    "resolve_threads",
    "draw_spectrum",
    "replicate",
    "run_null",
    "run_power",
    "power_csv",
    "reference_cdf",
    "run_ecdf",
    "ks_distance",
    "fmt",
]

DEFAULT_PHI_GRID = (0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2)


def fmt(x: float) -> str:
    return "%.17g" % x


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("SPIKELAB_THREADS")
        if env is None:
            return 1
        try:
            threads = int(env)
        except ValueError as exc:
            raise ConfigError(f"SPIKELAB_THREADS must be an integer, got {env!r}") from exc
    if threads < 1:
        raise ConfigError(f"thread count must be positive, got {threads}")
    return threads


@dataclass(frozen=True)
class Outcome:
    statistic: float
    decision: bool
    valid: bool


@dataclass(frozen=True)
class ExperimentResult:
    statistics: NDArray[np.float64]
    decisions: NDArray[np.bool_]
    valid: NDArray[np.bool_]
    wall_seconds: float = field(default=0.0, compare=False)

    @property
    def reps(self) -> int:
        return int(self.valid.shape[0])

    @property
    def reps_valid(self) -> int:
        return int(np.sum(self.valid))

    @property
    def invalid(self) -> int:
        return self.reps - self.reps_valid

    @property
    def rate(self) -> float:
        n = self.reps_valid
        return float(np.sum(self.decisions & self.valid)) / n if n else math.nan

    @property
    def se(self) -> float:
        n = self.reps_valid
        p = self.rate
        return math.sqrt(p * (1.0 - p) / n) if n else math.nan

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("rep,statistic,decision,valid\n")
        for k in range(self.reps):
            buf.write(f"{k},{fmt(self.statistics[k])},{int(self.decisions[k])},{int(self.valid[k])}\n")
        return buf.getvalue()

    def summary(self) -> dict[str, float | int]:
        return {"reps": self.reps, "reps_valid": self.reps_valid, "invalid": self.invalid,
                "rate": self.rate, "se": self.se}


def draw_spectrum(
    cfg: ScenarioConfig, model: SpikedModel, hyp: Hypothesis, rep: int
) -> tuple[SampleSpectrum, Hypothesis, NDArray[np.float64] | None]:
    """Sample one replication; returns the spectrum, the hypothesis in matching coordinates, and Y (dense only)."""
    rng = stream(cfg.seed, rep, Purpose.DATA)
    r = cfg.partition().r
    if cfg.sampler == "dense":
        Y = sqrt_sigma_apply(model, sample_data(model, rng))
        return top_spectrum(Y, r), hyp, Y
    red = sample_reduced(model, r, rng, [hyp.Z0])
    dirs = red.embed(hyp.directions) if hyp.directions is not None else None
    return red.spectrum, Hypothesis(hyp.kind, red.embed(hyp.Z0), hyp.I, dirs), None


def replicate(cfg: ScenarioConfig, model: SpikedModel, hyp: Hypothesis, rep: int) -> tuple[Outcome, TestReport | None]:
    try:
        spec, h, _ = draw_spectrum(cfg, model, hyp, rep)
        report = run_test(spec, h, cfg.partition(), cfg.kappa4(), cfg.mixture_draws, cfg.seed, rep, (cfg.level,))
    except NumericalError:
        return Outcome(math.nan, False, False), None
    return Outcome(report.statistic, report.reject(cfg.level), True), report


def _parallel(fn: Callable[[int], Outcome], reps: int, threads: int) -> list[Outcome]:
    threads = max(1, min(threads, reps))
    if threads == 1:
        return [fn(k) for k in range(reps)]
    # static contiguous blocks; each replication owns its streams, so the split is irrelevant to results
    bounds = [reps * t // threads for t in range(threads + 1)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        blocks = pool.map(lambda t: [fn(k) for k in range(bounds[t], bounds[t + 1])], range(threads))
        return [o for block in blocks for o in block]


def _run(cfg: ScenarioConfig, phi: float, threads: int | None) -> ExperimentResult:
    model, hyp = cfg.rotated(phi)
    t0 = time.perf_counter()
    outs = _parallel(lambda k: replicate(cfg, model, hyp, k)[0], cfg.reps, resolve_threads(threads))
    return ExperimentResult(
        np.array([o.statistic for o in outs]),
        np.array([o.decision for o in outs], dtype=bool),
        np.array([o.valid for o in outs], dtype=bool),
        time.perf_counter() - t0,
    )


def run_null(cfg: ScenarioConfig, threads: int | None = None) -> ExperimentResult:
    return _run(cfg, 0.0, threads)


@dataclass(frozen=True)
class PowerPoint:
    phi: float
    result: ExperimentResult


def power_csv(points: Sequence[PowerPoint]) -> str:
    buf = io.StringIO()
    buf.write("phi,rate,se,reps_valid\n")
    for p in points:
        buf.write(f"{fmt(p.phi)},{fmt(p.result.rate)},{fmt(p.result.se)},{p.result.reps_valid}\n")
    return buf.getvalue()


def run_power(cfg: ScenarioConfig, phi_grid: Sequence[float] | None = None, threads: int | None = None) -> list[PowerPoint]:
    if cfg.alternative is None:
        raise ConfigError("field 'alternative': a power run needs an alternative rotation")
    grid = list(phi_grid if phi_grid is not None else (cfg.phi_grid or DEFAULT_PHI_GRID))
    if any(not 0.0 <= p <= math.pi / 2 + 1e-12 for p in grid):
        raise ConfigError("phi values must lie in [0, pi/2]")
    return [PowerPoint(float(p), _run(cfg, float(p), threads)) for p in grid]


def ks_distance(sorted_x: NDArray[np.float64], cdf: NDArray[np.float64]) -> float:
    """Two-sided KS distance between the ECDF of sorted_x and a continuous reference evaluated there."""
    n = sorted_x.shape[0]
    if n == 0:
        return math.nan
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


@dataclass(frozen=True)
class EcdfResult:
    statistics: NDArray[np.float64]
    reference_cdf: NDArray[np.float64]
    reference: str
    ks: float
    experiment: ExperimentResult

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("statistic,reference_cdf\n")
        for x, f in zip(self.statistics, self.reference_cdf):
            buf.write(f"{fmt(x)},{fmt(f)}\n")
        return buf.getvalue()


def reference_cdf(cfg: ScenarioConfig, x: NDArray[np.float64]) -> tuple[NDArray[np.float64], str]:
    """Limiting null CDF of the configured statistic at the true population parameters."""
    if cfg.hypothesis.kind == "equality":
        return norm.cdf(x), "std_normal"
    model, hyp = cfg.rotated(0.0)
    q, U = asymptotics.q_and_U(model.d_per_index, model.directions, hyp.I, hyp.Z0, model.y, cfg.kappa4())
    lam = np.linalg.eigvalsh(U.mat) / q
    lam = lam[lam > 1e-12 * max(1.0, float(np.max(np.abs(lam))))]
    if lam.size and np.ptp(lam) <= 1e-12 * lam[0]:
        return chi2.cdf(x / lam[0], df=lam.size), f"scaled_chi2_{lam.size}"
    ref = asymptotics.simulate_quadratic_form(U, q, cfg.mixture_draws, stream(cfg.seed, 0, Purpose.AUX), cfg.seed)
    return ref.cdf(x), "simulated_mixture"


def run_ecdf(cfg: ScenarioConfig, threads: int | None = None) -> EcdfResult:
    res = run_null(cfg, threads)
    x = np.sort(res.statistics[res.valid])
    F, name = reference_cdf(cfg, x)
    F = np.asarray(F, dtype=np.float64)
    return EcdfResult(x, F, name, ks_distance(x, F), res)

