"""Built-in experiment presets for the standard simulation scenarios.

Scenarios I and II test equality of the leading two-dimensional eigenspace
with span(e_1, e_2); Scenarios A and B test its orthogonality to
span(e_3, e_4). The single-spike presets reproduce the ECDF calibration runs.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Callable

from ..errors import ConfigError
from .config import ScenarioConfig

__all__ = [
    "DEFAULT_SEED",
    "scenario_one",
    "scenario_two",
    "scenario_a",
    "scenario_b",
    "single_spike_equality",
    "single_spike_orthogonality",
    "PRESETS",
    "preset_names",
    "load_preset",
    "builtin_json",
]

DEFAULT_SEED = 20240601
ECDF_RATIO = 1.0


def _num(x: float) -> str:
    return f"{x:g}"


def _law_tag(law: str) -> str:
    return "" if law == "gaussian" else "_twopoint"


def _sampler(law: str) -> str:
    return "reduced" if law == "gaussian" else "dense"


def _equality_pair(name: str, spikes: list[dict], N: int, y: float, law: str, reps: int, seed: int) -> ScenarioConfig:
    return ScenarioConfig.model_validate({
        "name": name,
        "model": {"N": N, "y": y, "spikes": spikes, "directions": "standard-basis", "law": law},
        "hypothesis": {"kind": "equality", "Z0": [1, 2], "I": [1, 2]},
        "alternative": {"pairs": [[1, 4], [2, 5]], "target": "model"},
        "reps": reps, "level": 0.1, "seed": seed, "sampler": _sampler(law),
    })


def _orthogonality_pair(name: str, spikes: list[dict], N: int, y: float, law: str, reps: int, seed: int) -> ScenarioConfig:
    return ScenarioConfig.model_validate({
        "name": name,
        "model": {"N": N, "y": y, "spikes": spikes, "directions": "standard-basis", "law": law},
        "hypothesis": {"kind": "orthogonality", "Z0": [3, 4], "I": [1, 2]},
        "alternative": {"pairs": [[3, 1], [4, 2]], "target": "hypothesis"},
        "reps": reps, "level": 0.1, "seed": seed, "sampler": _sampler(law),
    })


def scenario_one(d: float, N: int, y: float, law: str = "gaussian", reps: int = 2000, seed: int = DEFAULT_SEED) -> ScenarioConfig:
    """Three simple spikes d+7, 7, 5; H0: leading two-dimensional eigenspace is span(e_1, e_2)."""
    spikes = [{"d": d + 7}, {"d": 7.0}, {"d": 5.0}]
    return _equality_pair(f"scenario1{_law_tag(law)}_N{N}_y{_num(y)}_d{_num(d)}", spikes, N, y, law, reps, seed)


def scenario_two(d: float, N: int, y: float, law: str = "gaussian", reps: int = 2000, seed: int = DEFAULT_SEED) -> ScenarioConfig:
    """Double spike d+5 plus a simple spike 5; same null as scenario one."""
    spikes = [{"d": d + 5, "multiplicity": 2}, {"d": 5.0}]
    return _equality_pair(f"scenario2{_law_tag(law)}_N{N}_y{_num(y)}_d{_num(d)}", spikes, N, y, law, reps, seed)


def scenario_a(d: float, N: int, y: float, law: str = "gaussian", reps: int = 2000, seed: int = DEFAULT_SEED) -> ScenarioConfig:
    """Spikes d+7, 7, 5; H0: leading two-dimensional eigenspace is orthogonal to span(e_3, e_4)."""
    spikes = [{"d": d + 7}, {"d": 7.0}, {"d": 5.0}]
    return _orthogonality_pair(f"scenarioA{_law_tag(law)}_N{N}_y{_num(y)}_d{_num(d)}", spikes, N, y, law, reps, seed)


def scenario_b(d: float, N: int, y: float, law: str = "gaussian", reps: int = 2000, seed: int = DEFAULT_SEED) -> ScenarioConfig:
    spikes = [{"d": d + 5, "multiplicity": 2}, {"d": 5.0}]
    return _orthogonality_pair(f"scenarioB{_law_tag(law)}_N{N}_y{_num(y)}_d{_num(d)}", spikes, N, y, law, reps, seed)


def single_spike_equality(d: float, N: int = 500, y: float = ECDF_RATIO, reps: int = 8000, seed: int = DEFAULT_SEED) -> ScenarioConfig:
    """Sigma = diag(d+1, 1, ..., 1); equality test of the top eigenvector against e_1."""
    return ScenarioConfig.model_validate({
        "name": f"single_spike_equality_N{N}_y{_num(y)}_d{_num(d)}",
        "model": {"N": N, "y": y, "spikes": [{"d": d}], "directions": "standard-basis", "law": "gaussian"},
        "hypothesis": {"kind": "equality", "Z0": [1], "I": [1]},
        "reps": reps, "level": 0.1, "seed": seed, "sampler": "reduced",
    })


def single_spike_orthogonality(d: float, N: int = 500, y: float = ECDF_RATIO, reps: int = 8000, seed: int = DEFAULT_SEED) -> ScenarioConfig:
    """Sigma = diag(d+1, 1, ..., 1); orthogonality test of the top eigenvector against e_3."""
    return ScenarioConfig.model_validate({
        "name": f"single_spike_orthogonality_N{N}_y{_num(y)}_d{_num(d)}",
        "model": {"N": N, "y": y, "spikes": [{"d": d}], "directions": "standard-basis", "law": "gaussian"},
        "hypothesis": {"kind": "orthogonality", "Z0": [3], "I": [1]},
        "reps": reps, "level": 0.1, "seed": seed, "sampler": "reduced",
    })


def _catalogue() -> dict[str, Callable[[], ScenarioConfig]]:
    out: dict[str, Callable[[], ScenarioConfig]] = {}

    def add(fn: Callable[[], ScenarioConfig]) -> None:
        out[fn().name] = fn

    for N, y, d in ((500, 0.1, 2.0), (500, 1.0, 10.0), (200, 0.1, 100.0), (500, 0.1, 50.0)):
        add(lambda N=N, y=y, d=d: scenario_one(d, N, y))
    add(lambda: scenario_one(10.0, 500, 0.1, law="two_point"))
    for N, y, d in ((500, 1.0, 50.0), (500, 10.0, 50.0)):
        add(lambda N=N, y=y, d=d: scenario_two(d, N, y))
    add(lambda: scenario_a(5.0, 500, 1.0))
    add(lambda: scenario_b(5.0, 500, 1.0))
    for d in (2.0, 5.0, 10.0, 50.0):
        add(lambda d=d: single_spike_equality(d))
        add(lambda d=d: single_spike_orthogonality(d))
    return out


PRESETS = _catalogue()


def preset_names() -> list[str]:
    return sorted(PRESETS)


def load_preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}") from None


def builtin_json(name: str) -> str:
    """Text of the preset JSON file shipped with the package."""
    path = resources.files("spikelab") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"no shipped preset file for {name!r}")
    text = path.read_text()
    json.loads(text)
    return text
