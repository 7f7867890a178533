"""Video clips and their on-disk container.

A clip is a ``(T, H, W, 3)`` float tensor normalized to ``[-0.5, 0.5]``.
The container is a minimal self-describing binary (no codecs, bit-exact
round trips): magic ``SWTV``, version byte, little-endian ``u32`` T/H/W,
then ``T*H*W*3`` row-major uint8 RGB samples.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .config import ModelConfig
from .errors import FormatError, ValidationError

MAGIC = b"SWTV"
VERSION = 1
_HEADER = struct.Struct("<4sBIII")


@dataclass
class VideoClip:
    """One unit of tokenization: normalized frames plus metadata."""

    frames: torch.Tensor  # (T, H, W, 3) float32 in [-0.5, 0.5]
    frame_rate: float = 8.0
    clip_id: str = "clip"

    @property
    def shape(self) -> tuple[int, int, int]:
        t, h, w, _ = self.frames.shape
        return t, h, w

    def validate(self, config: ModelConfig | None = None) -> None:
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise ValidationError(
                f"clip {self.clip_id!r}: expected (T, H, W, 3), "
                f"got {tuple(self.frames.shape)}")
        lo = float(self.frames.min()) if self.frames.numel() else 0.0
        hi = float(self.frames.max()) if self.frames.numel() else 0.0
        if lo < -0.5 - 1e-6 or hi > 0.5 + 1e-6:
            raise ValidationError(
                f"clip {self.clip_id!r}: pixel values [{lo:.4f}, {hi:.4f}] "
                "outside the normalized range [-0.5, 0.5]")
        if config is not None:
            t, h, w = self.shape
            if (t - 1) % config.patch_t != 0:
                raise ValidationError(
                    f"clip {self.clip_id!r}: T-1 = {t - 1} not divisible by "
                    f"patch_t = {config.patch_t}")
            if h % config.patch_h != 0 or w % config.patch_w != 0:
                raise ValidationError(
                    f"clip {self.clip_id!r}: resolution {h}x{w} not divisible "
                    f"by patch {config.patch_h}x{config.patch_w}")


def normalize_frames(raw: np.ndarray) -> torch.Tensor:
    """uint8 (T, H, W, 3) -> float32 in [-0.5, 0.5] via pixel/255 - 0.5."""
    if raw.dtype != np.uint8:
        raise ValidationError(f"expected uint8 frames, got {raw.dtype}")
    return torch.from_numpy(raw.astype(np.float32) / 255.0 - 0.5)


def denormalize_frames(frames: torch.Tensor) -> np.ndarray:
    """Inverse of :func:`normalize_frames`; exact on round trips."""
    arr = (frames.detach().cpu().numpy() + 0.5) * 255.0
    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


def load_clip(path: str | Path, config: ModelConfig | None = None) -> VideoClip:
    """Read one container file, validating shape against the patch kernel."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, t, h, w = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + t * h * w * 3
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload is {len(blob) - _HEADER.size} bytes, "
            f"expected {expected - _HEADER.size}")
    raw = np.frombuffer(blob, dtype=np.uint8, offset=_HEADER.size)
    raw = raw.reshape(t, h, w, 3)
    clip = VideoClip(frames=normalize_frames(raw), clip_id=path.stem)
    clip.validate(config)
    return clip


def save_clip(clip: VideoClip, path: str | Path) -> None:
    t, h, w = clip.shape
    raw = denormalize_frames(clip.frames)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, t, h, w))
        fh.write(raw.tobytes())
