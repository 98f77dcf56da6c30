"""Run configuration: versioned JSON, dotted overrides, derived seeds.

A run is described by one JSON file (``config_version`` 1). Relative paths
resolve against the config file's directory and referenced files must exist
at load time. All randomness flows from the single top-level ``seed``,
split into per-component streams, so a config file fully determines a run.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .evolution import EvoConfig
from .providers import file_source, synthetic_source
from .space import SpaceSpec, load_space, nasbench201_space

CONFIG_VERSION = 1

# Stream tags hashed together with the master seed, one per consumer.
PROVIDER_STREAM = 1
EVO_STREAM = 2
SAMPLING_STREAM = 3
ESTIMATE_STREAM = 4


def component_seed(master: int, stream: int) -> int:
    """Derive an independent per-component seed from the master seed."""
    ss = np.random.SeedSequence([int(master), int(stream)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ProviderSettings:
    kind: str
    b: int = 128
    m: int = 32
    seed: int | None = None
    plan: dict = field(default_factory=dict)
    layer_plans: dict = field(default_factory=dict)
    manifest: Path | None = None


@dataclass(frozen=True)
class EstimateSettings:
    d: int
    m: int
    n: int


@dataclass(frozen=True)
class RunConfig:
    seed: int
    space_name: str | None
    space_path: Path | None
    provider: ProviderSettings | None
    k: int
    measure: str
    degenerate: str
    T: int
    evo: EvoConfig
    benchmark: Path | None
    estimate: EstimateSettings | None
    profiles_count: int
    top_k: int
    output_dir: Path

    def space(self) -> SpaceSpec:
        if self.space_name is not None:
            return nasbench201_space()
        if self.space_path is not None:
            return load_space(self.space_path)
        raise ConfigError("config has no 'space' entry")

    def source(self, space: SpaceSpec):
        p = self.provider
        if p is None:
            raise ConfigError("config has no 'provider' section")
        if p.kind == "files":
            return file_source(p.manifest)
        plan: dict = dict(p.plan)
        for layer_key, ops in p.layer_plans.items():
            index = _layer_index(space, layer_key)
            for op, dim in ops.items():
                plan[(index, str(op))] = dim
        if not plan:
            raise ConfigError("synthetic provider needs a 'plan' (op -> dimension)")
        seed = p.seed if p.seed is not None else component_seed(self.seed, PROVIDER_STREAM)
        return synthetic_source(space, seed=seed, b=p.b, m=p.m, profile_plan=plan)


def _layer_index(space: SpaceSpec, key) -> int:
    for i, layer in enumerate(space.layers):
        if layer.name == str(key):
            return i
    try:
        index = int(key)
    except (TypeError, ValueError):
        raise ConfigError(f"unknown layer {key!r} in layer_plans") from None
    if not 0 <= index < space.num_layers:
        raise ConfigError(f"layer index {index} outside 0..{space.num_layers - 1}")
    return index


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``dotted.key=value`` pairs onto the raw config dictionary."""
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        target = raw
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = target.setdefault(part, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r} descends into non-mapping {part!r}")
            target = nxt
        target[parts[-1]] = parsed
    return raw


_TOP_KEYS = {
    "config_version",
    "seed",
    "space",
    "provider",
    "k",
    "measure",
    "degenerate",
    "T",
    "evo",
    "benchmark",
    "estimate",
    "profiles",
    "rank_eval",
    "output_dir",
}


def _resolve_existing(base: Path, value, what: str) -> Path:
    path = (base / str(value)).resolve() if not Path(str(value)).is_absolute() else Path(str(value))
    if not path.is_file():
        raise ConfigError(f"{what} {str(value)!r} does not exist")
    return path


def load_run_config(path, overrides=()) -> RunConfig:
    """Parse, override, and validate a run config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} does not exist")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    raw = apply_overrides(raw, overrides)

    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if raw.get("config_version") != CONFIG_VERSION:
        raise ConfigError(
            f"config_version must be {CONFIG_VERSION}, got {raw.get('config_version')!r}"
        )

    base = path.parent
    seed = int(raw.get("seed", 0))

    space_name = None
    space_path = None
    space_value = raw.get("space")
    if space_value is not None:
        if str(space_value) == "nasbench201":
            space_name = "nasbench201"
        else:
            space_path = _resolve_existing(base, space_value, "space file")

    provider = None
    if "provider" in raw:
        p = raw["provider"]
        if not isinstance(p, dict):
            raise ConfigError("'provider' must be an object")
        kind = p.get("kind")
        if kind not in ("synthetic", "files"):
            raise ConfigError(f"provider.kind must be 'synthetic' or 'files', got {kind!r}")
        manifest = None
        if kind == "files":
            if "manifest" not in p:
                raise ConfigError("files provider needs a 'manifest' path")
            manifest = _resolve_existing(base, p["manifest"], "manifest")
        provider = ProviderSettings(
            kind=kind,
            b=int(p.get("b", 128)),
            m=int(p.get("m", 32)),
            seed=None if p.get("seed") is None else int(p["seed"]),
            plan={str(k): int(v) for k, v in p.get("plan", {}).items()},
            layer_plans={
                str(lk): {str(ok): int(ov) for ok, ov in lv.items()}
                for lk, lv in p.get("layer_plans", {}).items()
            },
            manifest=manifest,
        )
        if provider.b < 2:
            raise ConfigError(f"provider.b must be >= 2, got {provider.b}")
        if provider.m < 1:
            raise ConfigError(f"provider.m must be >= 1, got {provider.m}")

    k = int(raw.get("k", 20))
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    measure = str(raw.get("measure", "euclidean"))
    if measure not in ("euclidean", "pearson"):
        raise ConfigError(f"measure must be 'euclidean' or 'pearson', got {measure!r}")
    degenerate = str(raw.get("degenerate", "error"))
    if degenerate not in ("error", "clamp"):
        raise ConfigError(f"degenerate must be 'error' or 'clamp', got {degenerate!r}")
    T = int(raw.get("T", 2))
    if T < 0:
        raise ConfigError(f"T must be >= 0, got {T}")

    evo_raw = raw.get("evo", {})
    if not isinstance(evo_raw, dict):
        raise ConfigError("'evo' must be an object")
    try:
        evo = EvoConfig(
            population_size=int(evo_raw.get("population_size", 50)),
            epochs=int(evo_raw.get("epochs", 50)),
            mutation_rate=float(evo_raw.get("mutation_rate", 0.1)),
            crossover_rate=float(evo_raw.get("crossover_rate", 0.9)),
            seed=component_seed(seed, EVO_STREAM),
            tournament_size=int(evo_raw.get("tournament_size", 5)),
        )
    except ValueError as exc:
        raise ConfigError(f"evo settings: {exc}") from exc

    benchmark = None
    if raw.get("benchmark") is not None:
        benchmark = _resolve_existing(base, raw["benchmark"], "benchmark")

    estimate = None
    if "estimate" in raw:
        e = raw["estimate"]
        if not isinstance(e, dict):
            raise ConfigError("'estimate' must be an object")
        estimate = EstimateSettings(d=int(e.get("d", 5)), m=int(e.get("m", 100)), n=int(e.get("n", 2000)))
        if estimate.d < 1 or estimate.d > estimate.m:
            raise ConfigError(f"estimate.d must be in 1..{estimate.m}, got {estimate.d}")
        if estimate.n < estimate.d + 2:
            raise ConfigError(f"estimate.n must be >= d + 2, got {estimate.n}")

    profiles_count = int(raw.get("profiles", {}).get("count", 4)) if isinstance(raw.get("profiles", {}), dict) else 0
    if profiles_count < 1:
        raise ConfigError(f"profiles.count must be >= 1, got {profiles_count}")
    top_k = int(raw.get("rank_eval", {}).get("top_k", 50)) if isinstance(raw.get("rank_eval", {}), dict) else 0
    if top_k < 2:
        raise ConfigError(f"rank_eval.top_k must be >= 2, got {top_k}")

    out_value = raw.get("output_dir", "out")
    out_path = Path(str(out_value))
    output_dir = out_path if out_path.is_absolute() else (base / out_path).resolve()

    return RunConfig(
        seed=seed,
        space_name=space_name,
        space_path=space_path,
        provider=provider,
        k=k,
        measure=measure,
        degenerate=degenerate,
        T=T,
        evo=evo,
        benchmark=benchmark,
        estimate=estimate,
        profiles_count=profiles_count,
        top_k=top_k,
        output_dir=output_dir,
    )
