"""Run configuration: JSON file + command-line overrides, with a stable digest."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path


@dataclass
class EmbeddingConfig:
    provider: str = "hash"  # "hash" or "http"
    endpoint: str = ""
    model: str = ""
    auth_env: str = ""
    max_in_flight: int = 8
    dim: int = 256
    batch_size: int = 64
    requests_per_second: float | None = None


@dataclass
class LLMConfig:
    provider: str = "fixture"  # "fixture" or "http"
    endpoint: str = ""
    model: str = ""
    auth_env: str = ""
    style: str = "completion"
    max_tokens: int = 256
    max_in_flight: int = 8
    fixture_dir: str = ""
    requests_per_second: float | None = None


@dataclass
class RetrievalConfig:
    n_cand: int = 100
    budget: int = 10
    clubsuit: float = 1.0
    contextual: bool = True
    entropy: bool = True
    coverage: bool = True


@dataclass
class GraphConfig:
    same_table_weight: float = 0.01
    fk_weight: float = 0.01


@dataclass
class EvalConfig:
    budgets: list[int] = field(default_factory=lambda: [3, 5, 10, 20, 30, 50, 100])
    resolve_per_budget: bool = False
    max_in_flight: int = 1


@dataclass
class RunConfig:
    catalog: str = ""
    prefix_db: bool = False
    descriptions: bool = True
    index_dir: str = "index"
    cache_dir: str = ".cache"
    prompt: str = "spider"  # builtin library name or a template file path
    n_shots: int | None = None
    temperature: float | None = None
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    llm: LLMConfig = field(default_factory=LLMConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    # directory the relative paths above are resolved against; not part of the digest
    base_dir: str = field(default=".", compare=False)

    def path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


def _fill(cls, data: dict, where: str):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ValueError(f"unknown config key '{where}{key}'")
        default = known[key].default_factory() if callable(known[key].default_factory) else known[key].default
        if is_dataclass(default) and isinstance(value, dict):
            value = _fill(type(default), value, f"{where}{key}.")
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(data: dict, base_dir: str | Path = ".") -> RunConfig:
    cfg = _fill(RunConfig, data, "")
    cfg.base_dir = str(base_dir)
    return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    return config_from_dict(json.loads(path.read_text(encoding="utf-8")), base_dir=path.parent)


def apply_override(cfg: RunConfig, dotted: str, raw: str) -> None:
    """``retrieval.budget=20`` style override; the value is parsed as JSON when possible."""
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    target = cfg
    parts = dotted.split(".")
    for p in parts[:-1]:
        target = getattr(target, p)
    if not hasattr(target, parts[-1]):
        raise ValueError(f"unknown config key {dotted!r}")
    setattr(target, parts[-1], value)
