"""Decoupled spatial/temporal query autoencoding.

Appearance is compressed by letting a bank of learnable spatial queries
cross-attend to the first frame's patches; motion is compressed by
letting temporal queries read the frame-wise residual between the first
frame's patch content and each temporal tube.  Decoding runs spatial
first (patch queries attend to the quantized spatial tokens), then tiles
the reconstructed first-frame grid along time as the input stream of the
temporal decoder, which fuses in the quantized temporal tokens.  A final
linear unprojection returns to pixel blocks/tubes.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from .blocks import DecoderBlock, EncoderBlock
from .config import ModelConfig
from .errors import ValidationError
from .patchify import PatchGrid, PatchKernel, PixelDecoder, require_kind
from .quantizer import (LanguageQuantizer, LatentTokens, QuantizedTokens,
                        require_quantized)
from .video import VideoClip

SPATIAL_PREFIXES = ("patches.spatial_proj", "patches.pos_spatial",
                    "spatial_encoder.", "spatial_decoder.",
                    "spatial_to_latent.", "spatial_from_latent.",
                    "pixel_decoder.spatial_out")
TEMPORAL_PREFIXES = ("patches.temporal_proj", "patches.pos_temporal",
                     "temporal_encoder.", "temporal_decoder.",
                     "temporal_to_latent.", "temporal_from_latent.",
                     "pixel_decoder.temporal_out")


class QueryEncoder(nn.Module):
    """Compresses a patch stream into a fixed-size bank of query tokens."""

    def __init__(self, d_model: int, n_heads: int, ff_mult: int,
                 n_blocks: int, n_queries: int, axis: str):
        super().__init__()
        self.queries = nn.Parameter(torch.zeros(n_queries, d_model))
        self.blocks = nn.ModuleList(
            EncoderBlock(d_model, n_heads, ff_mult, axis)
            for _ in range(n_blocks))
        self.out_norm = nn.LayerNorm(d_model)

    def forward(self, stream: torch.Tensor) -> torch.Tensor:
        b = stream.shape[0]
        queries = self.queries.unsqueeze(0).expand(b, -1, -1)
        for block in self.blocks:
            stream, queries = block(stream, queries)
        return self.out_norm(queries)


class QueryDecoder(nn.Module):
    """Expands quantized memory tokens back into a patch grid.

    The output stream starts from a learnable per-position embedding
    (optionally added onto a tiled base grid) and reads the memory via
    cross-attention in every block.  Memory tokens get their own
    positional table so token order is information-bearing.
    """

    def __init__(self, d_model: int, n_heads: int, ff_mult: int,
                 n_blocks: int, axis: str, t_steps: int, n_positions: int,
                 n_memory: int):
        super().__init__()
        self.t_steps = t_steps
        self.n_positions = n_positions
        self.stream_embed = nn.Parameter(
            torch.zeros(1, t_steps, n_positions, d_model))
        self.memory_pos = nn.Parameter(torch.zeros(1, n_memory, d_model))
        self.blocks = nn.ModuleList(
            DecoderBlock(d_model, n_heads, ff_mult, axis)
            for _ in range(n_blocks))
        self.out_norm = nn.LayerNorm(d_model)

    def forward(self, memory: torch.Tensor,
                base: torch.Tensor | None = None) -> torch.Tensor:
        b = memory.shape[0]
        if base is None:
            stream = self.stream_embed.expand(b, -1, -1, -1)
        else:
            stream = base + self.stream_embed
        memory = memory + self.memory_pos
        for block in self.blocks:
            stream = block(stream, memory)
        return self.out_norm(stream)


def compute_residual(v_s: PatchGrid, v_t: PatchGrid) -> PatchGrid:
    """Frame-wise residual: first-frame content minus each tube, with the
    spatial grid broadcast along the temporal axis."""
    require_kind(v_s, "spatial")
    require_kind(v_t, "temporal")
    if v_s.data.shape[2:] != v_t.data.shape[2:]:
        raise ValidationError(
            f"spatial dims differ: {tuple(v_s.data.shape[2:])} vs "
            f"{tuple(v_t.data.shape[2:])}")
    return PatchGrid(v_s.data - v_t.data, kind="temporal")


def tile_spatial(v_s_tilde: PatchGrid, t_steps: int) -> torch.Tensor:
    """Replicate the reconstructed first-frame grid t' times along time.

    The result is constant along the temporal axis; the temporal decoder
    breaks that symmetry with its own positional embeddings.
    """
    require_kind(v_s_tilde, "spatial")
    return v_s_tilde.data.expand(-1, t_steps, -1, -1, -1)


@dataclass
class ModelOutput:
    """Everything the training loss needs from one forward pass."""

    frames: torch.Tensor  # (B, T, H, W, 3), unclamped
    z_s: torch.Tensor
    q_s: QuantizedTokens
    z_t: torch.Tensor | None
    q_t: QuantizedTokens | None


class VideoTokenizer(nn.Module):
    """Full tokenizer: patchify, dual query autoencoders, quantizer."""

    name = "decoupled"

    def __init__(self, cfg: ModelConfig, quantizer: LanguageQuantizer):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.patches = PatchKernel(cfg)
        self.pixel_decoder = PixelDecoder(cfg)
        self.spatial_encoder = QueryEncoder(
            cfg.d_model, cfg.n_heads, cfg.ff_mult, cfg.spatial_layers,
            cfg.l_spatial, axis="space")
        self.temporal_encoder = QueryEncoder(
            cfg.d_model, cfg.n_heads, cfg.ff_mult, cfg.temporal_layers,
            cfg.l_temporal, axis="time")
        self.spatial_decoder = QueryDecoder(
            cfg.d_model, cfg.n_heads, cfg.ff_mult, cfg.spatial_layers,
            axis="space", t_steps=1, n_positions=cfg.n_patches,
            n_memory=cfg.l_spatial)
        self.temporal_decoder = QueryDecoder(
            cfg.d_model, cfg.n_heads, cfg.ff_mult, cfg.temporal_layers,
            axis="time", t_steps=cfg.grid_t, n_positions=cfg.n_patches,
            n_memory=cfg.l_temporal)
        self.spatial_to_latent = nn.Linear(cfg.d_model, cfg.d_latent)
        self.spatial_from_latent = nn.Linear(cfg.d_latent, cfg.d_model)
        self.temporal_to_latent = nn.Linear(cfg.d_model, cfg.d_latent)
        self.temporal_from_latent = nn.Linear(cfg.d_latent, cfg.d_model)
        self.quantizer = quantizer

    @property
    def token_budget(self) -> int:
        return self.cfg.l_spatial + self.cfg.l_temporal

    # ---------------------------------------------------------------- encode

    def encode_spatial(self, grid: PatchGrid) -> LatentTokens:
        require_kind(grid, "spatial")
        self._check_grid(grid.data, t_steps=1)
        stream = grid.data.reshape(grid.data.shape[0], 1, self.cfg.n_patches,
                                   self.cfg.d_model)
        out = self.spatial_encoder(stream)
        return LatentTokens(self.spatial_to_latent(out), kind="spatial")

    def encode_temporal(self, grid: PatchGrid) -> LatentTokens:
        require_kind(grid, "temporal")
        self._check_grid(grid.data, t_steps=self.cfg.grid_t)
        stream = grid.data.reshape(grid.data.shape[0], self.cfg.grid_t,
                                   self.cfg.n_patches, self.cfg.d_model)
        out = self.temporal_encoder(stream)
        return LatentTokens(self.temporal_to_latent(out), kind="temporal")

    # ---------------------------------------------------------------- decode

    def decode_spatial(self, zq_s: QuantizedTokens) -> PatchGrid:
        require_quantized(zq_s)
        memory = self.spatial_from_latent(zq_s.values)
        out = self.spatial_decoder(memory)  # (B, 1, n, D)
        b = out.shape[0]
        data = out.reshape(b, 1, self.cfg.grid_h, self.cfg.grid_w,
                           self.cfg.d_model)
        return PatchGrid(data, kind="spatial")

    def decode_temporal(self, v_s_tilde: PatchGrid,
                        zq_t: QuantizedTokens) -> PatchGrid:
        require_quantized(zq_t)
        require_kind(v_s_tilde, "spatial")
        b = v_s_tilde.data.shape[0]
        tiled = tile_spatial(v_s_tilde, self.cfg.grid_t)
        stream = tiled.reshape(b, self.cfg.grid_t, self.cfg.n_patches,
                               self.cfg.d_model)
        memory = self.temporal_from_latent(zq_t.values)
        out = self.temporal_decoder(memory, base=stream)
        data = out.reshape(b, self.cfg.grid_t, self.cfg.grid_h,
                           self.cfg.grid_w, self.cfg.d_model)
        return PatchGrid(data, kind="temporal")

    def pixel_decode(self, v_s_tilde: PatchGrid, v_tilde: PatchGrid,
                     clamp: bool = True) -> torch.Tensor:
        """Unproject both grids and assemble the T-frame clip."""
        require_kind(v_s_tilde, "spatial")
        require_kind(v_tilde, "temporal")
        if v_s_tilde.data.shape[2:] != v_tilde.data.shape[2:]:
            raise ValidationError("inconsistent grid shapes")
        frame1 = self.pixel_decoder.decode_spatial(v_s_tilde.data)
        rest = self.pixel_decoder.decode_temporal(v_tilde.data)
        frames = torch.cat([frame1, rest], dim=1)
        return frames.clamp(-0.5, 0.5) if clamp else frames

    # --------------------------------------------------------------- pipeline

    def _check_grid(self, data: torch.Tensor, t_steps: int) -> None:
        expected = (t_steps, self.cfg.grid_h, self.cfg.grid_w, self.cfg.d_model)
        if tuple(data.shape[1:]) != expected:
            raise ValidationError(
                f"grid shape {tuple(data.shape[1:])} does not match the "
                f"configured {expected}")

    def _check_frames(self, frames: torch.Tensor) -> None:
        t, h, w = frames.shape[1], frames.shape[2], frames.shape[3]
        if (t, h, w) != (self.cfg.frames, self.cfg.height, self.cfg.width):
            raise ValidationError(
                f"clip shape ({t},{h},{w}) does not match the configured "
                f"({self.cfg.frames},{self.cfg.height},{self.cfg.width})")

    def forward(self, frames: torch.Tensor, clamp: bool = False) -> ModelOutput:
        """frames: (B, T, H, W, 3) normalized; returns the full round trip."""
        self._check_frames(frames)
        content_s = self.patches.spatial_content(frames[:, :1])
        content_t = self.patches.temporal_content(frames[:, 1:])
        # Residual of content, before positional embedding.
        delta = compute_residual(PatchGrid(content_s, "spatial"),
                                 PatchGrid(content_t, "temporal"))
        enc_s = PatchGrid(self.patches.add_spatial_positions(content_s),
                          "spatial")
        enc_t = PatchGrid(self.patches.add_temporal_positions(delta.data),
                          "temporal")
        z_s = self.encode_spatial(enc_s)
        z_t = self.encode_temporal(enc_t)
        projected = self.quantizer.projected_codebook()
        q_s = self.quantizer.quantize(z_s, projected)
        q_t = self.quantizer.quantize(z_t, projected)
        v_s_tilde = self.decode_spatial(q_s)
        v_tilde = self.decode_temporal(v_s_tilde, q_t)
        out = self.pixel_decode(v_s_tilde, v_tilde, clamp=clamp)
        return ModelOutput(frames=out, z_s=z_s.values, q_s=q_s,
                           z_t=z_t.values, q_t=q_t)

    def forward_image(self, frames: torch.Tensor,
                      clamp: bool = False) -> ModelOutput:
        """Spatial-branch-only round trip for single-frame inputs."""
        if frames.shape[1] != 1:
            raise ValidationError(
                f"image mode expects T=1, got T={frames.shape[1]}")
        content_s = self.patches.spatial_content(frames)
        enc_s = PatchGrid(self.patches.add_spatial_positions(content_s),
                          "spatial")
        z_s = self.encode_spatial(enc_s)
        projected = self.quantizer.projected_codebook()
        q_s = self.quantizer.quantize(z_s, projected)
        v_s_tilde = self.decode_spatial(q_s)
        frame = self.pixel_decoder.decode_spatial(v_s_tilde.data)
        if clamp:
            frame = frame.clamp(-0.5, 0.5)
        return ModelOutput(frames=frame, z_s=z_s.values, q_s=q_s,
                           z_t=None, q_t=None)

    # -------------------------------------------------------------- inference

    @torch.no_grad()
    def tokenize(self, clip: VideoClip) -> tuple[list[int], list[int]]:
        """Clip -> (spatial indices, temporal indices), deterministic for
        fixed weights.  Indices are 0-based within each sub-book."""
        clip.validate(self.cfg)
        out = self.forward(clip.frames.unsqueeze(0))
        return (out.q_s.indices[0].tolist(), out.q_t.indices[0].tolist())

    @torch.no_grad()
    def reconstruct(self, clip: VideoClip) -> VideoClip:
        clip.validate(self.cfg)
        out = self.forward(clip.frames.unsqueeze(0), clamp=True)
        return VideoClip(frames=out.frames[0], frame_rate=clip.frame_rate,
                         clip_id=clip.clip_id)

    @torch.no_grad()
    def encode_image(self, clip: VideoClip) -> list[int]:
        out = self.forward_image(clip.frames.unsqueeze(0))
        return out.q_s.indices[0].tolist()

    @torch.no_grad()
    def reconstruct_image(self, clip: VideoClip) -> VideoClip:
        out = self.forward_image(clip.frames.unsqueeze(0), clamp=True)
        return VideoClip(frames=out.frames[0], frame_rate=clip.frame_rate,
                         clip_id=clip.clip_id)

    @torch.no_grad()
    def decode_from_indices(self, spatial_indices: list[int],
                            temporal_indices: list[int] | None,
                            ) -> torch.Tensor:
        """Regenerate pixels from codebook indices alone.

        Returns (T, H, W, 3) clamped frames; the single source of clip
        content is the index sequences, proving they are sufficient.
        """
        if len(spatial_indices) != self.cfg.l_spatial:
            raise ValidationError(
                f"expected {self.cfg.l_spatial} spatial indices, "
                f"got {len(spatial_indices)}")
        projected = self.quantizer.projected_codebook()
        s_idx = torch.tensor([spatial_indices], dtype=torch.long)
        emb_s = self.quantizer.embed_indices(s_idx, "spatial", projected)
        q_s = QuantizedTokens(values=emb_s, embeddings=emb_s, indices=s_idx,
                              kind="spatial")
        v_s_tilde = self.decode_spatial(q_s)
        if temporal_indices is None:
            frame = self.pixel_decoder.decode_spatial(v_s_tilde.data)
            return frame.clamp(-0.5, 0.5)[0]
        if len(temporal_indices) != self.cfg.l_temporal:
            raise ValidationError(
                f"expected {self.cfg.l_temporal} temporal indices, "
                f"got {len(temporal_indices)}")
        t_idx = torch.tensor([temporal_indices], dtype=torch.long)
        emb_t = self.quantizer.embed_indices(t_idx, "temporal", projected)
        q_t = QuantizedTokens(values=emb_t, embeddings=emb_t, indices=t_idx,
                              kind="temporal")
        v_tilde = self.decode_temporal(v_s_tilde, q_t)
        return self.pixel_decode(v_s_tilde, v_tilde, clamp=True)[0]

    # ------------------------------------------------------------- parameters

    def parameter_groups(self) -> dict[str, list[str]]:
        """Parameter names by branch: spatial / temporal / shared."""
        groups = {"spatial": [], "temporal": [], "shared": []}
        for name, _ in self.named_parameters():
            if name.startswith(SPATIAL_PREFIXES):
                groups["spatial"].append(name)
            elif name.startswith(TEMPORAL_PREFIXES):
                groups["temporal"].append(name)
            else:
                groups["shared"].append(name)
        return groups

    def branch_parameters(self, *branches: str) -> list[nn.Parameter]:
        groups = self.parameter_groups()
        wanted = {n for b in branches for n in groups[b]}
        params = dict(self.named_parameters())
        return [params[n] for n in sorted(wanted)]


def init_weights(model: nn.Module, seed: int) -> None:
    """Deterministic initialization: truncated normal (0.02) projections,
    zero biases, normal (0.02) query banks and positional tables, unit
    LayerNorm gains."""
    embed_markers = ("queries", "pos_spatial", "pos_temporal", "stream_embed",
                     "memory_pos")
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        for name, param in model.named_parameters():
            base = name.rsplit(".", 1)[-1]
            if any(m in name for m in embed_markers):
                nn.init.normal_(param, std=0.02)
            elif base == "bias" or param.ndim == 1:
                nn.init.zeros_(param) if base == "bias" else nn.init.ones_(param)
            else:
                nn.init.trunc_normal_(param, std=0.02)
