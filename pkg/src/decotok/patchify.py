"""Patch embedding and its inverse.

The first frame is embedded with a 2D ``p_h x p_w`` kernel, the remaining
frames with a 3D ``p_t x p_h x p_w`` tube kernel; both are plain affine
maps over non-overlapping blocks.  Extraction order is row-major
``(tube, row, col)`` and the flattened vector layout is
``(p_t, p_h, p_w, channel)`` -- fixed so token ordering is reproducible.
Learnable additive positional embeddings (separate spatial and temporal
tables) are applied after projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
from einops import rearrange

from .config import ModelConfig
from .errors import ValidationError


@dataclass
class PatchGrid:
    """Embedded patches: (B, t', h, w, D) with kind spatial (t'=1) or temporal."""

    data: torch.Tensor
    kind: str  # "spatial" | "temporal"

    def __post_init__(self):
        if self.kind not in ("spatial", "temporal"):
            raise ValidationError(f"bad grid kind {self.kind!r}")
        if self.kind == "spatial" and self.data.shape[1] != 1:
            raise ValidationError(
                f"spatial grid must have t'=1, got {self.data.shape[1]}")


def require_kind(grid: PatchGrid, kind: str) -> None:
    if grid.kind != kind:
        raise ValidationError(f"expected a {kind} grid, got {grid.kind}")


class PatchKernel(nn.Module):
    """Holds the two projection kernels and both positional tables."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        p = cfg.patch_h * cfg.patch_w * 3
        self.spatial_proj = nn.Linear(p, cfg.d_model)
        self.temporal_proj = nn.Linear(cfg.patch_t * p, cfg.d_model)
        self.pos_spatial = nn.Parameter(
            torch.zeros(1, 1, cfg.grid_h, cfg.grid_w, cfg.d_model))
        self.pos_temporal = nn.Parameter(
            torch.zeros(1, cfg.grid_t, cfg.grid_h, cfg.grid_w, cfg.d_model))

    def _check_hw(self, x: torch.Tensor) -> None:
        _, _, h, w, c = x.shape
        if c != 3:
            raise ValidationError(f"expected RGB input, got {c} channels")
        if h % self.cfg.patch_h != 0 or w % self.cfg.patch_w != 0:
            raise ValidationError(
                f"resolution {h}x{w} not divisible by patch "
                f"{self.cfg.patch_h}x{self.cfg.patch_w}")

    def spatial_content(self, frame1: torch.Tensor) -> torch.Tensor:
        """Affine patch embedding of the first frame, no positions.

        frame1: (B, 1, H, W, 3) -> (B, 1, H/p_h, W/p_w, D)
        """
        if frame1.shape[1] != 1:
            raise ValidationError(
                f"spatial kernel expects a single frame, got {frame1.shape[1]}")
        self._check_hw(frame1)
        blocks = rearrange(frame1, "b t (h ph) (w pw) c -> b t h w (ph pw c)",
                           ph=self.cfg.patch_h, pw=self.cfg.patch_w)
        return self.spatial_proj(blocks)

    def temporal_content(self, rest: torch.Tensor) -> torch.Tensor:
        """Tube embedding of frames 2..T, no positions.

        rest: (B, T-1, H, W, 3) -> (B, (T-1)/p_t, H/p_h, W/p_w, D)
        """
        if rest.shape[1] % self.cfg.patch_t != 0:
            raise ValidationError(
                f"{rest.shape[1]} residual frames not divisible by "
                f"patch_t = {self.cfg.patch_t}")
        self._check_hw(rest)
        tubes = rearrange(
            rest, "b (t pt) (h ph) (w pw) c -> b t h w (pt ph pw c)",
            pt=self.cfg.patch_t, ph=self.cfg.patch_h, pw=self.cfg.patch_w)
        return self.temporal_proj(tubes)

    def add_spatial_positions(self, grid: torch.Tensor) -> torch.Tensor:
        return grid + self.pos_spatial

    def add_temporal_positions(self, grid: torch.Tensor) -> torch.Tensor:
        return grid + self.pos_temporal


def patchify_spatial(frame1: torch.Tensor, kernel: PatchKernel) -> PatchGrid:
    """First-frame patch embedding including positional embeddings."""
    return PatchGrid(kernel.add_spatial_positions(kernel.spatial_content(frame1)),
                     kind="spatial")


def patchify_temporal(rest: torch.Tensor, kernel: PatchKernel) -> PatchGrid:
    """Tube embedding of frames 2..T including positional embeddings."""
    return PatchGrid(kernel.add_temporal_positions(kernel.temporal_content(rest)),
                     kind="temporal")


class PixelDecoder(nn.Module):
    """Learned unprojection from the latent grids back to pixel blocks."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        p = cfg.patch_h * cfg.patch_w * 3
        self.spatial_out = nn.Linear(cfg.d_model, p)
        self.temporal_out = nn.Linear(cfg.d_model, cfg.patch_t * p)

    def decode_spatial(self, grid: torch.Tensor) -> torch.Tensor:
        """(B, 1, h, w, D) -> (B, 1, H, W, 3), block (i,j) at pixels
        [i*p_h:(i+1)*p_h, j*p_w:(j+1)*p_w]."""
        blocks = self.spatial_out(grid)
        return rearrange(blocks, "b t h w (ph pw c) -> b t (h ph) (w pw) c",
                         ph=self.cfg.patch_h, pw=self.cfg.patch_w, c=3)

    def decode_temporal(self, grid: torch.Tensor) -> torch.Tensor:
        """(B, t', h, w, D) -> (B, T-1, H, W, 3) via per-position tubes."""
        tubes = self.temporal_out(grid)
        return rearrange(tubes, "b t h w (pt ph pw c) -> b (t pt) (h ph) (w pw) c",
                         pt=self.cfg.patch_t, ph=self.cfg.patch_h,
                         pw=self.cfg.patch_w, c=3)


def unpatchify_spatial(grid: PatchGrid, decoder: PixelDecoder) -> torch.Tensor:
    """Inverse spatial arrangement of a spatial grid (layout law above)."""
    require_kind(grid, "spatial")
    return decoder.decode_spatial(grid.data)
