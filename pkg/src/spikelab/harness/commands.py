"""Command layer shared by the CLI and the HTTP service.

Each command returns the files it produces as text keyed by relative path,
plus a JSON-ready summary. Writing files is left to the caller, so local and
remote execution emit identical bytes.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..asymptotics import simulate_quadratic_form
from ..errors import ConfigError
from ..inference import run_test
from ..rng import Purpose, stream
from ..spectral import top_spectrum
from .config import ScenarioConfig
from .io import matrix_to_csv, parse_covariance_csv, parse_hypothesis, parse_matrix_csv
from .runner import draw_spectrum, fmt, power_csv, replicate, run_ecdf, run_null, run_power

__all__ = [
    "CommandResult",
    "with_overrides",
    "simulate_null",
    "power",
    "ecdf",
    "test_data",
    "critvals",
    "write_artifacts",
    "CRITVAL_LEVELS",
]

CRITVAL_LEVELS = (0.9, 0.95, 0.99)


@dataclass(frozen=True)
class CommandResult:
    artifacts: dict[str, str]
    summary: dict[str, Any] = field(default_factory=dict)


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def with_overrides(cfg: ScenarioConfig, seed: int | None = None, reps: int | None = None) -> ScenarioConfig:
    update: dict[str, Any] = {}
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError(f"--seed must lie in [0, 2^64), got {seed}")
        update["seed"] = seed
    if reps is not None:
        if reps < 1:
            raise ConfigError(f"--reps must be positive, got {reps}")
        update["reps"] = reps
    return cfg.model_copy(update=update) if update else cfg


def _dump_first(cfg: ScenarioConfig) -> dict[str, str]:
    if cfg.sampler != "dense":
        raise ConfigError("--dump-first needs the full data matrix; set \"sampler\": \"dense\"")
    model, hyp = cfg.rotated(0.0)
    _, _, Y = draw_spectrum(cfg, model, hyp, 0)
    assert Y is not None
    h: dict[str, Any] = {
        "kind": cfg.hypothesis.kind,
        "Z0": cfg.hypothesis.Z0 if isinstance(cfg.hypothesis.Z0, list) else {"vectors": cfg.hypothesis.Z0["vectors"]},
        "I": list(cfg.hypothesis.I),
        "partition": cfg.partition_sizes(),
        "kappa4": cfg.kappa4(),
        "draws": cfg.mixture_draws,
        "seed": cfg.seed,
        "stream": 0,
        "levels": [cfg.level],
    }
    if cfg.hypothesis.kind == "orthogonality":
        h["directions"] = cfg.model.directions
    _, report = replicate(cfg, model, hyp, 0)
    out = {"first_data.csv": matrix_to_csv(Y), "first_hypothesis.json": _dumps(h)}
    if report is not None:
        out["first_report.json"] = report.to_json() + "\n"
    return out


def simulate_null(cfg: ScenarioConfig, threads: int | None = None, dump_first: bool = False) -> CommandResult:
    res = run_null(cfg, threads)
    summary = {"name": cfg.name, "level": cfg.level, "seed": cfg.seed, **res.summary()}
    artifacts = {cfg.outputs.typeI: res.to_csv(), "summary.json": _dumps(summary)}
    if dump_first:
        artifacts.update(_dump_first(cfg))
    return CommandResult(artifacts, summary)


def power(cfg: ScenarioConfig, phi: Sequence[float] | None = None, threads: int | None = None) -> CommandResult:
    points = run_power(cfg, phi, threads)
    rows = [{"phi": p.phi, "rate": p.result.rate, "se": p.result.se, "reps_valid": p.result.reps_valid,
             "invalid": p.result.invalid} for p in points]
    summary = {"name": cfg.name, "level": cfg.level, "seed": cfg.seed, "reps": cfg.reps, "points": rows}
    return CommandResult({cfg.outputs.power: power_csv(points), "power_summary.json": _dumps(summary)}, summary)


def ecdf(cfg: ScenarioConfig, threads: int | None = None) -> CommandResult:
    res = run_ecdf(cfg, threads)
    summary = {"name": cfg.name, "seed": cfg.seed, "reference": res.reference, "ks": res.ks,
               **res.experiment.summary()}
    return CommandResult({cfg.outputs.ecdf: res.to_csv(), "ecdf_summary.json": _dumps(summary)}, summary)


def test_data(data_text: str, hypothesis_text: str, data_source: str = "<data>", hyp_source: str = "<hypothesis>") -> CommandResult:
    _, Y = parse_matrix_csv(data_text, data_source)
    hc = parse_hypothesis(hypothesis_text, hyp_source)
    M, N = Y.shape
    hyp, partition = hc.build(M)
    if partition.r > min(M, N):
        raise ConfigError(f"{hyp_source}: {partition.r} spikes declared for a {M} x {N} data matrix")
    spec = top_spectrum(Y, partition.r)
    report = run_test(spec, hyp, partition, hc.kappa4, hc.draws, hc.seed, hc.stream, hc.levels)
    return CommandResult({"report.json": report.to_json() + "\n"}, report.to_dict())


def critvals(
    U_text: str, q: float, draws: int, seed: int, levels: Sequence[float] = CRITVAL_LEVELS, source: str = "<U>"
) -> CommandResult:
    U = parse_covariance_csv(U_text, source)
    if not (math.isfinite(q) and q > 0):
        raise ConfigError(f"--q must be positive, got {q}")
    ref = simulate_quadratic_form(U, q, draws, stream(seed, 0, Purpose.MIXTURE), seed)
    rows = [(float(p), ref.quantile(float(p))) for p in levels]
    text = "probability,critical_value\n" + "".join(f"{fmt(p)},{fmt(c)}\n" for p, c in rows)
    summary = {"draws": draws, "seed": seed, "q": q, "quantiles": {repr(p): c for p, c in rows},
               "mean": float(np.mean(ref.samples))}
    return CommandResult({"critvals.csv": text}, summary)


def write_artifacts(result: CommandResult, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in sorted(result.artifacts.items()):
        path = os.path.join(out_dir, name)
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths
