"""Pipeline configuration: a YAML file with ${ENV_VAR} interpolation.

Secrets never live in the file: credential values are interpolated from the
environment, and the chat backend additionally reads its API key from the
variable named by `backend.api_key_env`.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .cleaning import DEFAULT_CAPTION_KEYWORDS

_ENV_RE = re.compile(r"\$\{(\w+)\}")


class ConfigError(Exception):
    pass


@dataclass
class BackendConfig:
    kind: str = "mock"  # mock | http
    url: str = ""
    model: str = "mock-rules"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    api_key_env: str = "SDGLENS_API_KEY"
    max_in_flight: int = 4
    max_attempts: int = 5
    min_interval: float = 0.0


@dataclass
class RobustnessConfig:
    runs: int = 3
    sample_size: int = 50
    seed: int = 13


@dataclass
class PipelineConfig:
    manifest: str
    output_dir: str
    strategy: str = "similarity"  # similarity | llm
    caption_keywords: list[str] = field(default_factory=lambda: list(DEFAULT_CAPTION_KEYWORDS))
    descriptions_path: str | None = None
    cache_dir: str | None = None  # default: <output_dir>/cache
    backend: BackendConfig = field(default_factory=BackendConfig)
    robustness: RobustnessConfig = field(default_factory=RobustnessConfig)
    parse_tolerance: float = 0.02
    corrected_prompts: bool = False
    sentiment_backend: str = "mock"  # mock | remote
    similarity_backend: str = "tfidf"  # tfidf | remote
    segmenter: str = "heuristic"  # heuristic | remote
    model_service_url: str = ""

    def resolved_cache_dir(self) -> Path:
        return Path(self.cache_dir) if self.cache_dir else Path(self.output_dir) / "cache"


def _interpolate(value):
    if isinstance(value, str):
        def sub(match: re.Match) -> str:
            name = match.group(1)
            if name not in os.environ:
                raise ConfigError(f"environment variable not set: {name}")
            return os.environ[name]

        return _ENV_RE.sub(sub, value)
    if isinstance(value, list):
        return [_interpolate(v) for v in value]
    if isinstance(value, dict):
        return {k: _interpolate(v) for k, v in value.items()}
    return value


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping: {path}")
    raw = _interpolate(raw)

    known = {
        "manifest",
        "output_dir",
        "strategy",
        "caption_keywords",
        "descriptions_path",
        "cache_dir",
        "backend",
        "robustness",
        "parse_tolerance",
        "corrected_prompts",
        "sentiment_backend",
        "similarity_backend",
        "segmenter",
        "model_service_url",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    for key in ("manifest", "output_dir"):
        if key not in raw or not isinstance(raw[key], str) or not raw[key]:
            raise ConfigError(f"config requires a non-empty '{key}'")

    backend = BackendConfig(**raw.get("backend", {}) or {})
    robustness = RobustnessConfig(**raw.get("robustness", {}) or {})
    config = PipelineConfig(
        manifest=raw["manifest"],
        output_dir=raw["output_dir"],
        strategy=raw.get("strategy", "similarity"),
        caption_keywords=list(raw.get("caption_keywords", DEFAULT_CAPTION_KEYWORDS)),
        descriptions_path=raw.get("descriptions_path"),
        cache_dir=raw.get("cache_dir"),
        backend=backend,
        robustness=robustness,
        parse_tolerance=float(raw.get("parse_tolerance", 0.02)),
        corrected_prompts=bool(raw.get("corrected_prompts", False)),
        sentiment_backend=raw.get("sentiment_backend", "mock"),
        similarity_backend=raw.get("similarity_backend", "tfidf"),
        segmenter=raw.get("segmenter", "heuristic"),
        model_service_url=raw.get("model_service_url", ""),
    )
    # Relative paths in the config are taken relative to the config file.
    base = path.parent
    config.manifest = _resolve(base, config.manifest)
    config.output_dir = _resolve(base, config.output_dir)
    if config.cache_dir:
        config.cache_dir = _resolve(base, config.cache_dir)
    if config.descriptions_path:
        config.descriptions_path = _resolve(base, config.descriptions_path)
    validate_config(config)
    return config


def _resolve(base: Path, value: str) -> str:
    if value.startswith(("http://", "https://")) or Path(value).is_absolute():
        return value
    return str(base / value)


def validate_config(config: PipelineConfig) -> None:
    if config.strategy not in ("similarity", "llm"):
        raise ConfigError(f"strategy must be 'similarity' or 'llm': {config.strategy}")
    if config.backend.kind not in ("mock", "http"):
        raise ConfigError(f"backend.kind must be 'mock' or 'http': {config.backend.kind}")
    if config.strategy == "llm" and config.backend.kind == "http" and not config.backend.url:
        raise ConfigError("strategy 'llm' with an http backend requires backend.url")
    if not 0.0 <= config.backend.temperature <= 2.0:
        raise ConfigError(f"backend.temperature must be in [0, 2]: {config.backend.temperature}")
    if not 0.0 <= config.parse_tolerance <= 1.0:
        raise ConfigError(f"parse_tolerance must be in [0, 1]: {config.parse_tolerance}")
    if config.sentiment_backend not in ("mock", "remote"):
        raise ConfigError(f"sentiment_backend must be 'mock' or 'remote': {config.sentiment_backend}")
    if config.similarity_backend not in ("tfidf", "remote"):
        raise ConfigError(f"similarity_backend must be 'tfidf' or 'remote': {config.similarity_backend}")
    if config.segmenter not in ("heuristic", "remote"):
        raise ConfigError(f"segmenter must be 'heuristic' or 'remote': {config.segmenter}")
    for name in ("sentiment_backend", "similarity_backend", "segmenter"):
        if getattr(config, name) == "remote" and not config.model_service_url:
            raise ConfigError(f"{name} 'remote' requires model_service_url")
    if not config.manifest.startswith(("http://", "https://")) and not Path(config.manifest).exists():
        raise ConfigError(f"manifest path does not exist: {config.manifest}")
    if config.descriptions_path and not Path(config.descriptions_path).exists():
        raise ConfigError(f"descriptions path does not exist: {config.descriptions_path}")
    if config.robustness.runs < 2:
        raise ConfigError("robustness.runs must be at least 2")
    if config.robustness.sample_size < 2:
        raise ConfigError("robustness.sample_size must be at least 2")
