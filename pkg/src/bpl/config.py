"""Run configuration: an INI file with ``[features]``, ``[bpl]`` and
``[grounding]`` sections. Every key is optional; missing keys take the
defaults below. Resolved configs are embedded in output headers.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional


@dataclass
class FeatureConfig:
    lexicon: str = ""  # empty -> bundled lexicon.tsv
    markers: str = ""  # empty -> bundled markers.txt
    credibility_table: str = ""  # empty -> bundled credibility.tsv
    recency_sidecar: str = ""  # optional CSV/TSV of id, recency
    multifc_repetition_constant: float = 200.0
    liar_gamma_scale: float = 20.0


@dataclass
class BplConfig:
    alpha: float = 1.0
    lambda_mix: float = 0.5
    clamp_low: float = 0.05
    clamp_high: float = 0.95
    speaker_eps: float = 1e-12
    # empty -> level-2 deception probability 1 - gamma per claim
    level2_pi: str = ""
    apply_depth_cap: bool = False


@dataclass
class GroundingConfig:
    mode: str = "feature"  # feature | stub | http
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "BPL_API_KEY"
    template_dir: str = ""  # empty -> bundled prompts/
    max_retries: int = 3
    backoff_seconds: float = 1.0
    timeout_seconds: float = 60.0
    max_in_flight: int = 4
    cache_path: str = ""
    stub_seed: int = 0


@dataclass
class Config:
    features: FeatureConfig = field(default_factory=FeatureConfig)
    bpl: BplConfig = field(default_factory=BplConfig)
    grounding: GroundingConfig = field(default_factory=GroundingConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


def _coerce(kind, raw: str):
    if kind is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw.strip()


_SECTIONS = {"features": FeatureConfig, "bpl": BplConfig, "grounding": GroundingConfig}


def load_config(path: Optional[str | Path] = None, overrides: Optional[dict] = None) -> Config:
    """Read an INI config (if given) and apply ``{"section.key": value}`` overrides."""
    cfg = Config()
    parser = configparser.ConfigParser()
    if path is not None:
        if not Path(path).exists():
            raise FileNotFoundError(f"config file not found: {path}")
        parser.read(path, encoding="utf-8")
    for section, cls in _SECTIONS.items():
        target = getattr(cfg, section)
        types = {f.name: f.type for f in fields(cls)}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in types:
                    raise ValueError(f"unknown config key [{section}] {key}")
                setattr(target, key, _coerce(type(getattr(target, key)), raw))
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        target = getattr(cfg, section, None)
        if target is None or not hasattr(target, key):
            raise ValueError(f"unknown config key {dotted}")
        if value is not None:
            setattr(target, key, _coerce(type(getattr(target, key)), str(value)))
    validate(cfg)
    return cfg


def validate(cfg: Config) -> None:
    b = cfg.bpl
    if b.alpha <= 0:
        raise ValueError("bpl.alpha must be > 0")
    if not 0.0 <= b.lambda_mix <= 1.0:
        raise ValueError("bpl.lambda_mix must be in [0, 1]")
    if not 0.0 < b.clamp_low <= b.clamp_high < 1.0:
        raise ValueError("bpl clamp band must satisfy 0 < low <= high < 1")
    if b.level2_pi and not 0.0 <= float(b.level2_pi) <= 1.0:
        raise ValueError("bpl.level2_pi must be in [0, 1]")
    if cfg.grounding.mode not in ("feature", "stub", "http"):
        raise ValueError(f"grounding.mode must be feature|stub|http, got {cfg.grounding.mode!r}")
    if cfg.features.liar_gamma_scale <= 0 or cfg.features.multifc_repetition_constant <= 0:
        raise ValueError("feature proxy constants must be > 0")
