"""Dependency-free portable pixmap (P6) output for reconstruction grids.

A grid is 3 rows of T columns of H x W tiles: originals on top,
reconstructions in the middle, absolute error maps at the bottom
(brighter = larger error).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ValidationError
from .video import VideoClip, denormalize_frames


def write_ppm(pixels: np.ndarray, path: str | Path) -> None:
    """pixels: (H, W, 3) uint8."""
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValidationError(f"expected (H, W, 3) uint8, got "
                              f"{pixels.shape} {pixels.dtype}")
    header = f"P6\n{pixels.shape[1]} {pixels.shape[0]}\n255\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(pixels.tobytes())


def reconstruction_grid(original: VideoClip, reconstructed: VideoClip,
                        ) -> np.ndarray:
    """(3*H, T*W, 3) uint8 grid of original / reconstruction / |error|."""
    if original.frames.shape != reconstructed.frames.shape:
        raise ValidationError("clip shapes differ")
    orig = denormalize_frames(original.frames)
    recon = denormalize_frames(reconstructed.frames)
    err_f = np.abs(original.frames.numpy() - reconstructed.frames.numpy())
    err = np.clip(np.rint(err_f * 255.0), 0, 255).astype(np.uint8)
    rows = [np.concatenate(list(arr), axis=1) for arr in (orig, recon, err)]
    return np.concatenate(rows, axis=0)


def save_reconstruction_grid(original: VideoClip, reconstructed: VideoClip,
                             path: str | Path) -> None:
    write_ppm(reconstruction_grid(original, reconstructed), path)
