"""Attention building blocks.

Every block is self-attention -> feed-forward -> cross-attention, each
sublayer pre-normalized with a residual connection.  Self-attention on a
patch stream runs over a configurable axis: spatial blocks attend over
the h*w positions of each time step, temporal blocks over the time steps
of each position.  Cross-attention always sees the flattened stream.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from .errors import ValidationError


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        if d_model % n_heads != 0:
            raise ValidationError(
                f"d_model = {d_model} not divisible by n_heads = {n_heads}")
        self.n_heads = n_heads
        self.head_dim = d_model // n_heads
        self.scale = self.head_dim ** -0.5
        self.q_proj = nn.Linear(d_model, d_model)
        self.k_proj = nn.Linear(d_model, d_model)
        self.v_proj = nn.Linear(d_model, d_model)
        self.out_proj = nn.Linear(d_model, d_model)

    def forward(self, q_in: torch.Tensor, kv_in: torch.Tensor) -> torch.Tensor:
        b, lq, d = q_in.shape
        lk = kv_in.shape[1]
        q = self.q_proj(q_in).view(b, lq, self.n_heads, self.head_dim).transpose(1, 2)
        k = self.k_proj(kv_in).view(b, lk, self.n_heads, self.head_dim).transpose(1, 2)
        v = self.v_proj(kv_in).view(b, lk, self.n_heads, self.head_dim).transpose(1, 2)
        attn = torch.softmax(q @ k.transpose(-2, -1) * self.scale, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, lq, d)
        return self.out_proj(out)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, mult: int):
        super().__init__()
        self.fc1 = nn.Linear(d_model, mult * d_model)
        self.fc2 = nn.Linear(mult * d_model, d_model)
        self.act = nn.GELU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc2(self.act(self.fc1(x)))


def _attend_axis(attn: MultiHeadAttention, norm: nn.LayerNorm,
                 stream: torch.Tensor, axis: str) -> torch.Tensor:
    """Residual self-attention over one axis of a (B, t, n, D) stream."""
    b, t, n, d = stream.shape
    if axis == "space":
        flat = norm(stream.reshape(b * t, n, d))
        out = attn(flat, flat)
        return stream + out.reshape(b, t, n, d)
    if axis == "time":
        flat = norm(stream.permute(0, 2, 1, 3).reshape(b * n, t, d))
        out = attn(flat, flat)
        return stream + out.reshape(b, n, t, d).permute(0, 2, 1, 3)
    raise ValidationError(f"unknown attention axis {axis!r}")


class EncoderBlock(nn.Module):
    """Patch stream evolves by self-attention/FF; the query bank reads
    from it by cross-attention once per block."""

    def __init__(self, d_model: int, n_heads: int, ff_mult: int, axis: str):
        super().__init__()
        self.axis = axis
        self.norm_self = nn.LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, n_heads)
        self.norm_ff = nn.LayerNorm(d_model)
        self.ff = FeedForward(d_model, ff_mult)
        self.norm_q = nn.LayerNorm(d_model)
        self.norm_kv = nn.LayerNorm(d_model)
        self.cross_attn = MultiHeadAttention(d_model, n_heads)

    def forward(self, stream: torch.Tensor, queries: torch.Tensor,
                ) -> tuple[torch.Tensor, torch.Tensor]:
        stream = _attend_axis(self.self_attn, self.norm_self, stream, self.axis)
        stream = stream + self.ff(self.norm_ff(stream))
        b, t, n, d = stream.shape
        kv = stream.reshape(b, t * n, d)
        queries = queries + self.cross_attn(self.norm_q(queries), self.norm_kv(kv))
        return stream, queries


class DecoderBlock(nn.Module):
    """Output stream evolves by self-attention/FF and reads the quantized
    memory tokens by cross-attention; the memory itself is fixed."""

    def __init__(self, d_model: int, n_heads: int, ff_mult: int, axis: str):
        super().__init__()
        self.axis = axis
        self.norm_self = nn.LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, n_heads)
        self.norm_ff = nn.LayerNorm(d_model)
        self.ff = FeedForward(d_model, ff_mult)
        self.norm_q = nn.LayerNorm(d_model)
        self.norm_mem = nn.LayerNorm(d_model)
        self.cross_attn = MultiHeadAttention(d_model, n_heads)

    def forward(self, stream: torch.Tensor, memory: torch.Tensor) -> torch.Tensor:
        stream = _attend_axis(self.self_attn, self.norm_self, stream, self.axis)
        stream = stream + self.ff(self.norm_ff(stream))
        b, t, n, d = stream.shape
        flat = stream.reshape(b, t * n, d)
        out = flat + self.cross_attn(self.norm_q(flat), self.norm_mem(memory))
        return out.reshape(b, t, n, d)
