"""Configuration: every architectural and training hyperparameter.

Configs live in flat INI-style files with one section per concern
(``[model]``, ``[train]``, ``[data]``, ``[codebook]``).  Two presets ship
with the package: ``paper`` (full-scale constants) and ``desk`` (toy
dimensions at which every test runs in seconds).
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .errors import ConfigError

PRESET_NAMES = ("paper", "desk")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; the single source of truth for shapes."""

    frames: int = 17
    height: int = 256
    width: int = 256
    patch_t: int = 4
    patch_h: int = 8
    patch_w: int = 8
    d_model: int = 512
    n_heads: int = 8
    d_latent: int = 256
    spatial_layers: int = 8
    temporal_layers: int = 4
    l_spatial: int = 256
    l_temporal: int = 1024
    ff_mult: int = 4
    d_text: int = 512
    gcn_hidden: int = 512

    @property
    def grid_h(self) -> int:
        return self.height // self.patch_h

    @property
    def grid_w(self) -> int:
        return self.width // self.patch_w

    @property
    def grid_t(self) -> int:
        """Temporal tube groups covering frames 2..T."""
        return (self.frames - 1) // self.patch_t

    @property
    def n_patches(self) -> int:
        return self.grid_h * self.grid_w

    def validate(self) -> None:
        for name in ("frames", "height", "width", "patch_t", "patch_h",
                     "patch_w", "d_model", "n_heads", "d_latent",
                     "spatial_layers", "temporal_layers", "l_spatial",
                     "l_temporal", "ff_mult", "d_text", "gcn_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"model.{name}", "must be >= 1")
        if (self.frames - 1) % self.patch_t != 0:
            raise ConfigError(
                "model.frames",
                f"frames-1 = {self.frames - 1} not divisible by patch_t = {self.patch_t}",
            )
        if self.height % self.patch_h != 0:
            raise ConfigError(
                "model.height",
                f"{self.height} not divisible by patch_h = {self.patch_h}")
        if self.width % self.patch_w != 0:
            raise ConfigError(
                "model.width",
                f"{self.width} not divisible by patch_w = {self.patch_w}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                "model.n_heads",
                f"d_model = {self.d_model} not divisible by n_heads = {self.n_heads}")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization schedule, loss weights and reproducibility knobs."""

    max_lr: float = 1e-4
    min_lr: float = 1e-5
    warmup_steps: int = 10_000
    total_steps: int = 1_000_000
    beta1: float = 0.9
    beta2: float = 0.99
    weight_decay: float = 1e-4
    ema_decay: float = 0.999
    batch_size: int = 8
    seed: int = 0
    w_l2: float = 1.0
    w_vq: float = 1.0
    w_perceptual: float = 0.0
    w_adversarial: float = 0.0
    # Recorded for fidelity with the full-scale recipe; inert while the
    # adversarial hook is the zero function.
    disc_start_step: int = 20_000

    def validate(self) -> None:
        if not (0.0 <= self.min_lr <= self.max_lr):
            raise ConfigError("train.min_lr", "need 0 <= min_lr <= max_lr")
        if not (0 <= self.warmup_steps <= self.total_steps):
            raise ConfigError("train.warmup_steps",
                              "need 0 <= warmup_steps <= total_steps")
        if self.total_steps < 1:
            raise ConfigError("train.total_steps", "must be >= 1")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ConfigError(f"train.{name}", "must lie in [0, 1)")
        if not (0.0 <= self.ema_decay <= 1.0):
            raise ConfigError("train.ema_decay", "must lie in [0, 1]")
        if self.weight_decay < 0:
            raise ConfigError("train.weight_decay", "must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("train.batch_size", "must be >= 1")
        for name in ("w_l2", "w_vq", "w_perceptual", "w_adversarial"):
            if getattr(self, name) < 0:
                raise ConfigError(f"train.{name}", "must be >= 0")


@dataclass(frozen=True)
class DataConfig:
    """Synthetic corpus parameters (shape types, colors, velocities)."""

    n_clips: int = 8
    seed: int = 0
    shapes: tuple[str, ...] = ("square", "circle", "cross")
    colors: tuple[str, ...] = ("red", "green", "blue", "yellow")
    # name:pixels-per-frame pairs; speed 0 renders a static clip
    speeds: tuple[tuple[str, int], ...] = (("quickly", 2), ("slowly", 1))
    shape_size: int = 0  # 0 = auto (height // 4)

    def validate(self) -> None:
        if self.n_clips < 1:
            raise ConfigError("data.n_clips", "must be >= 1")
        if not self.shapes:
            raise ConfigError("data.shapes", "need at least one shape")
        if not self.colors:
            raise ConfigError("data.colors", "need at least one color")
        if not self.speeds:
            raise ConfigError("data.speeds", "need at least one speed")
        for name, px in self.speeds:
            if px < 0:
                raise ConfigError("data.speeds", f"negative speed for {name!r}")


@dataclass(frozen=True)
class CodebookConfig:
    min_freq: int = 5
    window: int = 5

    def validate(self) -> None:
        if self.min_freq < 1:
            raise ConfigError("codebook.min_freq", "must be >= 1")
        if self.window < 1:
            raise ConfigError("codebook.window", "must be >= 1")


@dataclass(frozen=True)
class Config:
    """Full run configuration: one object per artifact directory."""

    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    codebook: CodebookConfig = field(default_factory=CodebookConfig)

    def validate(self) -> None:
        self.model.validate()
        self.train.validate()
        self.data.validate()
        self.codebook.validate()

    def with_seed(self, seed: int) -> "Config":
        return replace(self, train=replace(self.train, seed=seed),
                       data=replace(self.data, seed=seed))


def _format_value(value) -> str:
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):  # speeds: name:px pairs
            return " ".join(f"{n}:{p}" for n, p in value)
        return " ".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _parse_value(raw: str, template, section: str, name: str):
    kind = type(template)
    try:
        if kind is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            if template and isinstance(template[0], tuple):
                pairs = []
                for item in raw.split():
                    word, _, px = item.partition(":")
                    pairs.append((word, int(px)))
                return tuple(pairs)
            return tuple(raw.split())
        return raw
    except ValueError as exc:
        raise ConfigError(f"{section}.{name}", f"cannot parse {raw!r}") from exc


_SECTIONS = {
    "model": ModelConfig,
    "train": TrainConfig,
    "data": DataConfig,
    "codebook": CodebookConfig,
}


def config_to_text(cfg: Config) -> str:
    out = io.StringIO()
    for section, _ in _SECTIONS.items():
        obj = getattr(cfg, section)
        out.write(f"[{section}]\n")
        for f in fields(obj):
            out.write(f"{f.name} = {_format_value(getattr(obj, f.name))}\n")
        out.write("\n")
    return out.getvalue()


def config_from_text(text: str) -> Config:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"unparseable config: {exc}") from exc
    parts = {}
    for section, cls in _SECTIONS.items():
        defaults = cls()
        known = {f.name for f in fields(cls)}
        values = {}
        if parser.has_section(section):
            for name, raw in parser.items(section):
                if name not in known:
                    raise ConfigError(f"{section}.{name}", "unknown field")
                values[name] = _parse_value(raw, getattr(defaults, name),
                                            section, name)
        parts[section] = replace(defaults, **values)
    cfg = Config(**parts)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> Config:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    return config_from_text(text)


def save_config(cfg: Config, path: str | Path) -> None:
    Path(path).write_text(config_to_text(cfg), encoding="utf-8")


def load_preset(name: str) -> Config:
    if name not in PRESET_NAMES:
        raise ConfigError("preset", f"unknown preset {name!r}; "
                          f"choose from {PRESET_NAMES}")
    text = (resources.files("decotok") / "presets" / f"{name}.ini").read_text()
    return config_from_text(text)


def config_hash(cfg: Config) -> str:
    """Content hash of the serialized config; identifies a run's inputs."""
    return hashlib.sha256(config_to_text(cfg).encode("utf-8")).hexdigest()
