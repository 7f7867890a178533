"""Synthetic moving-shapes corpus.

Each clip shows one colored shape translating across a black background
with toroidal wrap-around, paired with a templated caption such as
``the/OTHER red/ADJ square/NOUN moves/VERB quickly/ADV leftward/ADV``.
The templates guarantee that all four content POS classes occur, so the
POS-partitioned codebook machinery is exercised without an external
tagger.  Generation is a pure function of ``(seed, spec, dims)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import torch

from .captions import CaptionCorpus, Token
from .config import Config, DataConfig
from .errors import ValidationError
from .video import VideoClip, denormalize_frames, normalize_frames

PALETTE: dict[str, tuple[int, int, int]] = {
    "red": (200, 40, 40),
    "green": (40, 200, 40),
    "blue": (40, 40, 220),
    "yellow": (220, 210, 40),
    "purple": (160, 40, 200),
    "cyan": (40, 200, 200),
    "orange": (230, 130, 30),
    "white": (230, 230, 230),
}

SHAPES = ("square", "circle", "cross")
MOTION_VERBS = ("moves", "slides", "drifts", "glides")
STATIC_VERB = "rests"
STATIC_ADVERB = "still"
DIRECTIONS: dict[str, tuple[int, int]] = {
    # (dy, dx) in row/column order
    "leftward": (0, -1),
    "rightward": (0, 1),
    "upward": (-1, 0),
    "downward": (1, 0),
}


@dataclass(frozen=True)
class MotionSpec:
    """Declares the shape types, colors and velocities of a corpus."""

    shapes: tuple[str, ...]
    colors: tuple[str, ...]
    speeds: tuple[tuple[str, int], ...]

    @classmethod
    def from_config(cls, data: DataConfig) -> "MotionSpec":
        spec = cls(shapes=data.shapes, colors=data.colors, speeds=data.speeds)
        spec.validate()
        return spec

    def validate(self) -> None:
        for s in self.shapes:
            if s not in SHAPES:
                raise ValidationError(f"unknown shape {s!r}; known: {SHAPES}")
        for c in self.colors:
            if c not in PALETTE:
                raise ValidationError(
                    f"unknown color {c!r}; known: {tuple(PALETTE)}")


def _shape_mask(shape: str, size: int) -> np.ndarray:
    mask = np.zeros((size, size), dtype=bool)
    if shape == "square":
        mask[:] = True
    elif shape == "circle":
        c = (size - 1) / 2.0
        yy, xx = np.mgrid[0:size, 0:size]
        mask = (yy - c) ** 2 + (xx - c) ** 2 <= (size / 2.0) ** 2
    elif shape == "cross":
        arm = max(size // 3, 1)
        lo = (size - arm) // 2
        mask[lo:lo + arm, :] = True
        mask[:, lo:lo + arm] = True
    else:
        raise ValidationError(f"unknown shape {shape!r}")
    return mask


def render_clip(shape: str, color: str, velocity: tuple[int, int],
                start: tuple[int, int], frames: int, height: int, width: int,
                shape_size: int) -> np.ndarray:
    """Raster one clip as uint8 (T, H, W, 3); position wraps toroidally."""
    mask = _shape_mask(shape, shape_size)
    stamp = np.zeros((height, width, 3), dtype=np.uint8)
    stamp[:shape_size, :shape_size][mask] = PALETTE[color]
    dy, dx = velocity
    y0, x0 = start
    out = np.empty((frames, height, width, 3), dtype=np.uint8)
    for t in range(frames):
        out[t] = np.roll(stamp, ((y0 + dy * t) % height, (x0 + dx * t) % width),
                         axis=(0, 1))
    return out


def _caption(color: str, shape: str, verb: str, speed_word: str,
             direction: str, static: bool) -> list[Token]:
    tokens = [Token("the", "other"), Token(color, "adjective"),
              Token(shape, "noun")]
    if static:
        tokens += [Token(STATIC_VERB, "verb"), Token(STATIC_ADVERB, "adverb")]
    else:
        tokens += [Token(verb, "verb"), Token(speed_word, "adverb"),
                   Token(direction, "adverb")]
    return tokens


def synthesize_corpus(seed: int, n_clips: int, spec: MotionSpec,
                      frames: int, height: int, width: int,
                      shape_size: int = 0,
                      ) -> list[tuple[VideoClip, list[Token]]]:
    """Generate ``n_clips`` (clip, caption) pairs, deterministic per seed."""
    spec.validate()
    size = shape_size or max(height // 4, 2)
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_clips):
        shape = spec.shapes[rng.integers(len(spec.shapes))]
        color = spec.colors[rng.integers(len(spec.colors))]
        speed_word, speed_px = spec.speeds[rng.integers(len(spec.speeds))]
        direction = list(DIRECTIONS)[rng.integers(len(DIRECTIONS))]
        verb = MOTION_VERBS[rng.integers(len(MOTION_VERBS))]
        start = (int(rng.integers(height)), int(rng.integers(width)))
        dy, dx = DIRECTIONS[direction]
        raw = render_clip(shape, color, (dy * speed_px, dx * speed_px),
                          start, frames, height, width, size)
        clip = VideoClip(frames=normalize_frames(raw), clip_id=f"synth{i:04d}")
        caption = _caption(color, shape, verb, speed_word, direction,
                           static=speed_px == 0)
        out.append((clip, caption))
    return out


def corpus_from_config(cfg: Config, frames: int | None = None,
                       ) -> list[tuple[VideoClip, list[Token]]]:
    spec = MotionSpec.from_config(cfg.data)
    return synthesize_corpus(cfg.data.seed, cfg.data.n_clips, spec,
                             frames if frames is not None else cfg.model.frames,
                             cfg.model.height, cfg.model.width,
                             cfg.data.shape_size)


def caption_corpus(pairs: list[tuple[VideoClip, list[Token]]]) -> CaptionCorpus:
    return CaptionCorpus(records=[(c.clip_id, list(t)) for c, t in pairs])


def corpus_checksum(pairs: list[tuple[VideoClip, list[Token]]]) -> str:
    """Digest over raw pixels and captions; equal checksums = equal corpora."""
    h = hashlib.sha256()
    for clip, caption in pairs:
        h.update(clip.clip_id.encode())
        h.update(denormalize_frames(clip.frames).tobytes())
        h.update(" ".join(f"{t.word}/{t.pos}" for t in caption).encode())
    return h.hexdigest()
