"""Optimization loop: schedule, EMA, loss assembly, image finetuning.

The optimizer is AdamW (decoupled weight decay); the learning rate ramps
linearly to ``max_lr`` over the warmup, then follows a cosine from
``max_lr`` down to ``min_lr``.  Perceptual and adversarial losses are
pluggable hooks defaulting to zero, so the full loss composition is
structurally present while desk-scale runs use L2 + VQ only.

Training mutates weights and must be externally serialized (single
logical writer); everything is driven by an explicitly seeded generator
so runs are reproducible and resumable bit-for-bit on one thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import torch

from .config import Config, TrainConfig
from .errors import NumericsError, ValidationError
from .model import VideoTokenizer
from .quantizer import vq_loss
from .video import VideoClip

LossHook = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


def _zero_hook(original: torch.Tensor, recon: torch.Tensor) -> torch.Tensor:
    return original.new_zeros(())


def lr_at(step: int, cfg: TrainConfig) -> float:
    """Learning rate at a 0-based schedule position in [0, total_steps]."""
    if not 0 <= step <= cfg.total_steps:
        raise ValidationError(
            f"step {step} outside [0, {cfg.total_steps}]")
    if step < cfg.warmup_steps:
        return cfg.max_lr * step / cfg.warmup_steps
    denom = max(cfg.total_steps - cfg.warmup_steps, 1)
    progress = (step - cfg.warmup_steps) / denom
    return cfg.min_lr + 0.5 * (cfg.max_lr - cfg.min_lr) * (
        1.0 + math.cos(math.pi * progress))


def ema_update(shadow: dict[str, torch.Tensor],
               live: dict[str, torch.Tensor], decay: float) -> None:
    """shadow <- decay * shadow + (1 - decay) * live, elementwise."""
    if shadow.keys() != live.keys():
        raise ValidationError("EMA shadow and live parameter trees differ")
    with torch.no_grad():
        for name, s in shadow.items():
            s.mul_(decay).add_(live[name], alpha=1.0 - decay)


@dataclass(frozen=True)
class LossBreakdown:
    step: int
    lr: float
    l2: float
    vq: float
    perceptual: float
    adversarial: float

    @property
    def total(self) -> float:
        # Reported total is exactly the sum of the reported terms.
        return self.l2 + self.vq + self.perceptual + self.adversarial

    def log_line(self) -> str:
        return (f"{self.step}\t{self.lr:.8g}\t{self.l2:.8g}\t{self.vq:.8g}"
                f"\t{self.total:.8g}")


class Trainer:
    """Single-writer optimization loop over an in-memory clip corpus.

    mode "video" trains the full model on T-frame clips; mode "image"
    restricts updates to the spatial branch plus the codebook projector
    and runs the single-frame pipeline (temporal parameters stay
    bit-identical).
    """

    def __init__(self, model: VideoTokenizer, cfg: Config,
                 clips: list[VideoClip], mode: str = "video",
                 perceptual_hook: LossHook | None = None,
                 adversarial_hook: LossHook | None = None,
                 vq_beta: float = 0.25):
        if mode not in ("video", "image"):
            raise ValidationError(f"unknown trainer mode {mode!r}")
        if not clips:
            raise ValidationError("empty training corpus")
        for clip in clips:
            if mode == "image" and clip.frames.shape[0] != 1:
                raise ValidationError(
                    f"image mode rejects clip {clip.clip_id!r} with "
                    f"T={clip.frames.shape[0]}")
        self.model = model
        self.cfg = cfg
        self.train_cfg = cfg.train
        self.clips = clips
        self.mode = mode
        self.vq_beta = vq_beta
        self.perceptual_hook = perceptual_hook or _zero_hook
        self.adversarial_hook = adversarial_hook or _zero_hook
        if mode == "image":
            params = model.branch_parameters("spatial", "shared")
        else:
            params = [p for _, p in sorted(model.named_parameters())]
        self._param_names = self._names_for(params)
        self.optimizer = torch.optim.AdamW(
            params, lr=cfg.train.max_lr,
            betas=(cfg.train.beta1, cfg.train.beta2),
            weight_decay=cfg.train.weight_decay, eps=1e-8)
        self.generator = torch.Generator().manual_seed(cfg.train.seed)
        self.step_count = 0
        self.ema = {name: p.detach().clone()
                    for name, p in model.named_parameters()}

    def _names_for(self, params: list[torch.nn.Parameter]) -> list[str]:
        by_id = {id(p): n for n, p in self.model.named_parameters()}
        return [by_id[id(p)] for p in params]

    def _sample_batch(self) -> torch.Tensor:
        n = len(self.clips)
        idx = torch.randint(0, n, (self.train_cfg.batch_size,),
                            generator=self.generator)
        return torch.stack([self.clips[i].frames for i in idx.tolist()])

    def train_step(self, frames: torch.Tensor | None = None) -> LossBreakdown:
        """One optimizer update; raises NumericsError on non-finite loss."""
        tc = self.train_cfg
        if frames is None:
            frames = self._sample_batch()
        self.model.train()
        if self.mode == "image":
            out = self.model.forward_image(frames)
        else:
            out = self.model.forward(frames)
        l2 = torch.mean((out.frames - frames) ** 2)
        q_s = out.q_s.embeddings
        z_t = out.z_t
        q_t = out.q_t.embeddings if out.q_t is not None else None
        vq = vq_loss(out.z_s, q_s, z_t, q_t, beta=self.vq_beta)
        perceptual = self.perceptual_hook(frames, out.frames)
        adversarial = self.adversarial_hook(frames, out.frames)
        total = (tc.w_l2 * l2 + tc.w_vq * vq
                 + tc.w_perceptual * perceptual
                 + tc.w_adversarial * adversarial)
        if not torch.isfinite(total):
            raise NumericsError(
                f"non-finite loss at step {self.step_count + 1}",
                diagnostics=self._diagnostics(l2, vq))
        self.step_count += 1
        lr = lr_at(min(self.step_count, tc.total_steps), tc)
        for group in self.optimizer.param_groups:
            group["lr"] = lr
        self.optimizer.zero_grad(set_to_none=True)
        total.backward()
        self.optimizer.step()
        ema_update(self.ema, dict(self.model.named_parameters()),
                   tc.ema_decay)
        return LossBreakdown(
            step=self.step_count, lr=lr,
            l2=float(tc.w_l2 * l2.detach()),
            vq=float(tc.w_vq * vq.detach()),
            perceptual=float(tc.w_perceptual * perceptual.detach()),
            adversarial=float(tc.w_adversarial * adversarial.detach()))

    def train(self, n_steps: int,
              log_fn: Callable[[LossBreakdown], None] | None = None,
              ) -> list[LossBreakdown]:
        history = []
        for _ in range(n_steps):
            breakdown = self.train_step()
            history.append(breakdown)
            if log_fn is not None:
                log_fn(breakdown)
        return history

    def _diagnostics(self, l2: torch.Tensor, vq: torch.Tensor) -> dict:
        norms = {name: float(p.detach().norm())
                 for name, p in self.model.named_parameters()}
        return {"step": self.step_count, "l2": float(l2), "vq": float(vq),
                "param_norms": norms}

    # ------------------------------------------------------------ state I/O

    def state_entries(self) -> dict:
        """Flat named state for the checkpoint writer."""
        entries: dict = {
            "meta/step": self.step_count,
            "meta/mode": self.mode,
            "meta/rng": self.generator.get_state().numpy().tobytes(),
        }
        for name, p in self.model.named_parameters():
            entries[f"param/{name}"] = p.detach()
        for name, s in self.ema.items():
            entries[f"ema/{name}"] = s
        for name, param in zip(self._param_names,
                               self.optimizer.param_groups[0]["params"]):
            state = self.optimizer.state.get(param)
            if not state:
                continue
            entries[f"adam/{name}/step"] = state["step"].detach()
            entries[f"adam/{name}/exp_avg"] = state["exp_avg"].detach()
            entries[f"adam/{name}/exp_avg_sq"] = state["exp_avg_sq"].detach()
        return entries

    def load_state_entries(self, entries: dict) -> None:
        import numpy as np

        self.step_count = int(entries["meta/step"])
        rng = np.frombuffer(entries["meta/rng"], dtype=np.uint8)
        self.generator.set_state(torch.from_numpy(rng.copy()))
        params = dict(self.model.named_parameters())
        with torch.no_grad():
            for name, p in params.items():
                p.copy_(entries[f"param/{name}"])
            for name in self.ema:
                self.ema[name].copy_(entries[f"ema/{name}"])
        for name, param in zip(self._param_names,
                               self.optimizer.param_groups[0]["params"]):
            key = f"adam/{name}/step"
            if key not in entries:
                continue
            self.optimizer.state[param] = {
                "step": entries[key].clone(),
                "exp_avg": entries[f"adam/{name}/exp_avg"].clone(),
                "exp_avg_sq": entries[f"adam/{name}/exp_avg_sq"].clone(),
            }


def finetune_image(model: VideoTokenizer, images: list[VideoClip],
                   cfg: Config, n_steps: int,
                   log_fn=None) -> Trainer:
    """Finetune the spatial branch on single-frame clips; temporal
    parameters are excluded from the optimizer and stay bit-identical."""
    trainer = Trainer(model, cfg, images, mode="image")
    trainer.train(n_steps, log_fn=log_fn)
    return trainer
