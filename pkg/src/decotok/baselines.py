"""Token-compression baselines for ablation runs.

Three strategies share one tokenize/reconstruct contract and comparable
token budgets:

* ``decoupled`` -- the full model (separate spatial/temporal queries);
* ``coupled``   -- one transformer over the flattened patch sequence
  concatenated with holistic queries, quantized against a single
  unpartitioned codebook, decoded from learnable patch queries plus the
  quantized tokens;
* ``downsample`` -- 1D linear interpolation of the flattened patch
  sequence down to the budget and back, no attention at all.

At full scale the budgets are 1280 / 1024 / 1280; the coupled strategy
keeps that 1024:1280 proportion at any scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from .blocks import FeedForward, MultiHeadAttention
from .config import Config, ModelConfig
from .errors import ValidationError
from .graph import CooccurrenceGraph
from .metrics import compute_metrics
from .model import ModelOutput, VideoTokenizer, init_weights
from .patchify import PatchKernel, PixelDecoder
from .quantizer import LanguageQuantizer, LatentTokens
from .training import Trainer
from .video import VideoClip
from .vocab import Vocabulary

STRATEGY_VARIANTS = ("decoupled", "coupled", "downsample")

# Table-scale reference budgets: coupled uses 1024 tokens where the
# decoupled/downsample strategies use 1280.
COUPLED_BUDGET_RATIO = 1024 / 1280


def coupled_budget(cfg: ModelConfig) -> int:
    return max(1, round((cfg.l_spatial + cfg.l_temporal) * COUPLED_BUDGET_RATIO))


class PlainBlock(nn.Module):
    """Pre-norm self-attention + feed-forward over one flat sequence."""

    def __init__(self, d_model: int, n_heads: int, ff_mult: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.attn = MultiHeadAttention(d_model, n_heads)
        self.norm2 = nn.LayerNorm(d_model)
        self.ff = FeedForward(d_model, ff_mult)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.attn(h, h)
        return x + self.ff(self.norm2(x))


class _StrategyMixin:
    """The tokenize/reconstruct contract shared with the main model."""

    @torch.no_grad()
    def tokenize(self, clip: VideoClip) -> tuple[list[int], None]:
        out = self.forward(clip.frames.unsqueeze(0))
        return out.q_s.indices[0].tolist(), None

    @torch.no_grad()
    def reconstruct(self, clip: VideoClip) -> VideoClip:
        out = self.forward(clip.frames.unsqueeze(0), clamp=True)
        return VideoClip(frames=out.frames[0], frame_rate=clip.frame_rate,
                         clip_id=clip.clip_id)


class _PatchFlattener(nn.Module):
    """Shared front/back end: patchify to one flat sequence and back."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.patches = PatchKernel(cfg)
        self.pixel_decoder = PixelDecoder(cfg)
        self.n_tokens = (1 + cfg.grid_t) * cfg.n_patches

    def flatten(self, frames: torch.Tensor) -> torch.Tensor:
        b = frames.shape[0]
        v_s = self.patches.add_spatial_positions(
            self.patches.spatial_content(frames[:, :1]))
        v_t = self.patches.add_temporal_positions(
            self.patches.temporal_content(frames[:, 1:]))
        flat = torch.cat([v_s.reshape(b, -1, self.cfg.d_model),
                          v_t.reshape(b, -1, self.cfg.d_model)], dim=1)
        return flat

    def unflatten_decode(self, seq: torch.Tensor, clamp: bool) -> torch.Tensor:
        b = seq.shape[0]
        cfg = self.cfg
        n = cfg.n_patches
        grid_s = seq[:, :n].reshape(b, 1, cfg.grid_h, cfg.grid_w, cfg.d_model)
        grid_t = seq[:, n:].reshape(b, cfg.grid_t, cfg.grid_h, cfg.grid_w,
                                    cfg.d_model)
        frame1 = self.pixel_decoder.decode_spatial(grid_s)
        rest = self.pixel_decoder.decode_temporal(grid_t)
        frames = torch.cat([frame1, rest], dim=1)
        return frames.clamp(-0.5, 0.5) if clamp else frames


class DownsampleTokenizer(nn.Module, _StrategyMixin):
    """Pure 1D-interpolation compression of the flat patch sequence."""

    name = "downsample"

    def __init__(self, cfg: ModelConfig, quantizer: LanguageQuantizer):
        super().__init__()
        self.cfg = cfg
        self.token_budget = cfg.l_spatial + cfg.l_temporal
        self.core = _PatchFlattener(cfg)
        self.to_latent = nn.Linear(cfg.d_model, cfg.d_latent)
        self.from_latent = nn.Linear(cfg.d_latent, cfg.d_model)
        self.quantizer = quantizer

    @staticmethod
    def _resample(seq: torch.Tensor, length: int) -> torch.Tensor:
        return F.interpolate(seq.transpose(1, 2), size=length, mode="linear",
                             align_corners=True).transpose(1, 2)

    def forward(self, frames: torch.Tensor, clamp: bool = False) -> ModelOutput:
        flat = self.core.flatten(frames)
        z = self.to_latent(self._resample(flat, self.token_budget))
        q = self.quantizer.quantize(LatentTokens(z, kind="any"))
        seq = self._resample(self.from_latent(q.values), self.core.n_tokens)
        out = self.core.unflatten_decode(seq, clamp)
        return ModelOutput(frames=out, z_s=z, q_s=q, z_t=None, q_t=None)


class CoupledTokenizer(nn.Module, _StrategyMixin):
    """Holistic-query compression over the flattened patch sequence."""

    name = "coupled"

    def __init__(self, cfg: ModelConfig, quantizer: LanguageQuantizer):
        super().__init__()
        self.cfg = cfg
        self.token_budget = coupled_budget(cfg)
        self.core = _PatchFlattener(cfg)
        n_blocks = cfg.spatial_layers + cfg.temporal_layers
        self.queries = nn.Parameter(torch.zeros(self.token_budget, cfg.d_model))
        self.patch_queries = nn.Parameter(
            torch.zeros(self.core.n_tokens, cfg.d_model))
        self.encoder = nn.ModuleList(
            PlainBlock(cfg.d_model, cfg.n_heads, cfg.ff_mult)
            for _ in range(n_blocks))
        self.decoder = nn.ModuleList(
            PlainBlock(cfg.d_model, cfg.n_heads, cfg.ff_mult)
            for _ in range(n_blocks))
        self.enc_norm = nn.LayerNorm(cfg.d_model)
        self.dec_norm = nn.LayerNorm(cfg.d_model)
        self.to_latent = nn.Linear(cfg.d_model, cfg.d_latent)
        self.from_latent = nn.Linear(cfg.d_latent, cfg.d_model)
        self.quantizer = quantizer

    def forward(self, frames: torch.Tensor, clamp: bool = False) -> ModelOutput:
        b = frames.shape[0]
        flat = self.core.flatten(frames)
        seq = torch.cat([flat, self.queries.unsqueeze(0).expand(b, -1, -1)],
                        dim=1)
        for block in self.encoder:
            seq = block(seq)
        z = self.to_latent(self.enc_norm(seq[:, -self.token_budget:]))
        q = self.quantizer.quantize(LatentTokens(z, kind="any"))
        mem = self.from_latent(q.values)
        dec = torch.cat([self.patch_queries.unsqueeze(0).expand(b, -1, -1),
                         mem], dim=1)
        for block in self.decoder:
            dec = block(dec)
        out = self.core.unflatten_decode(
            self.dec_norm(dec[:, :self.core.n_tokens]), clamp)
        return ModelOutput(frames=out, z_s=z, q_s=q, z_t=None, q_t=None)


def make_strategy(variant: str, cfg: ModelConfig, vocab: Vocabulary,
                  embeddings: torch.Tensor, graph: CooccurrenceGraph,
                  seed: int = 0) -> nn.Module:
    """Build one freshly initialized strategy with its own quantizer."""
    quantizer = LanguageQuantizer(vocab, embeddings, graph, cfg.d_latent,
                                  hidden=cfg.gcn_hidden)
    if variant == "decoupled":
        model = VideoTokenizer(cfg, quantizer)
    elif variant == "coupled":
        model = CoupledTokenizer(cfg, quantizer)
    elif variant == "downsample":
        model = DownsampleTokenizer(cfg, quantizer)
    else:
        raise ValidationError(f"unknown strategy {variant!r}; "
                              f"known: {STRATEGY_VARIANTS}")
    init_weights(model, seed)
    return model


@dataclass
class AblationRow:
    strategy: str
    tokens: int
    l2: float
    psnr: float
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "tokens": self.tokens,
                "l2": self.l2, "psnr": self.psnr, "warnings": self.warnings}


def _final_l2(model: nn.Module, clips: list[VideoClip]) -> tuple[float, float]:
    model.eval()
    reports = []
    with torch.no_grad():
        for clip in clips:
            out = model.forward(clip.frames.unsqueeze(0), clamp=True)
            recon = VideoClip(frames=out.frames[0], clip_id=clip.clip_id)
            reports.append(compute_metrics(clip, recon))
    l2 = sum(r.l2 for r in reports) / len(reports)
    psnr = sum(r.psnr for r in reports) / len(reports)
    return l2, psnr


def run_ablation(strategies: list[nn.Module], clips: list[VideoClip],
                 cfg: Config, n_steps: int) -> list[AblationRow]:
    """Train each strategy identically and report final reconstruction
    metrics over the corpus."""
    expected = {
        "decoupled": cfg.model.l_spatial + cfg.model.l_temporal,
        "coupled": coupled_budget(cfg.model),
        "downsample": cfg.model.l_spatial + cfg.model.l_temporal,
    }
    rows = []
    for model in strategies:
        warnings = []
        budget = model.token_budget
        want = expected.get(model.name, budget)
        if budget != want:
            warnings.append(
                f"token budget {budget} differs from the reference {want}")
        trainer = Trainer(model, cfg, clips, mode="video")
        trainer.train(n_steps)
        l2, psnr = _final_l2(model, clips)
        rows.append(AblationRow(strategy=model.name, tokens=budget, l2=l2,
                                psnr=psnr, warnings=warnings))
    return rows
