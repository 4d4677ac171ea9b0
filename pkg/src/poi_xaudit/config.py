"""Run configuration: a flat ``key = value`` file plus command-line overrides."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path

from .compressor import CompressorConfig
from .errors import ConfigError
from .ingest import BBox
from .recommender import ModelConfig
from .synth import SynthConfig

# keys that locate files; they do not change results and stay out of the hash
PATH_KEYS = ("data", "out")


@dataclass(frozen=True)
class RunConfig:
    data: str = ""
    out: str = "run"
    seed: int = 0
    # ingest
    min_len: int = 10
    lat_min: float = 40.40
    lat_max: float = 41.00
    lon_min: float = -74.30
    lon_max: float = -73.60
    # recommender
    d_emb: int = 50
    t_max: int = 100
    epochs: int = 10
    lr: float = 3e-3
    prefix_targets: bool = True
    # compressor
    compressor_epochs: int = 100
    compressor_lr: float = 1e-3
    # audits
    trials: int = 10
    random_trials: int = 30
    n_random: int = 10
    closest_k: int = 10
    threshold: float = 0.05
    workers: int = 1
    # synthetic data
    synth_users: int = 200
    synth_min_len: int = 20
    synth_max_len: int = 40

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        for name in ("trials", "random_trials", "n_random", "closest_k", "workers", "epochs", "compressor_epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.min_len < 3:
            raise ConfigError("min_len must be at least 3")
        if self.d_emb < 2 or self.t_max < 2:
            raise ConfigError("d_emb and t_max must be at least 2")

    @property
    def bbox(self) -> BBox:
        return BBox(self.lat_min, self.lat_max, self.lon_min, self.lon_max)

    def model_config(self, seed: int | None = None) -> ModelConfig:
        return ModelConfig(
            d_emb=self.d_emb,
            t_max=self.t_max,
            epochs=self.epochs,
            lr=self.lr,
            seed=self.seed if seed is None else seed,
            prefix_targets=self.prefix_targets,
        )

    def compressor_config(self, seed: int | None = None) -> CompressorConfig:
        return CompressorConfig(epochs=self.compressor_epochs, lr=self.compressor_lr, seed=self.seed if seed is None else seed)

    def synth_config(self) -> SynthConfig:
        return SynthConfig(n_users=self.synth_users, min_len=self.synth_min_len, max_len=self.synth_max_len, seed=self.seed, bbox=self.bbox)

    def results_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in PATH_KEYS:
            d.pop(k)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.results_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    f = _FIELDS.get(key)
    if f is None:
        raise ConfigError(f"unknown config key {key!r}")
    kind = f.type if isinstance(f.type, str) else f.type.__name__
    try:
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config_text(text: str) -> dict:
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, raw)
    return values


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Config file values, then overrides (flags win); unset overrides are ignored."""
    values: dict = {}
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {path} not found")
        values.update(parse_config_text(p.read_text(encoding="utf-8")))
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        values[k] = _coerce(k, v) if isinstance(v, str) and k not in PATH_KEYS else v
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
