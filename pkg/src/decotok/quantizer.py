"""Language-codebook quantization.

The codebook holds frozen text embeddings of vocabulary entries; a
trainable two-hidden-layer graph convolution projects them into the
visual latent space over the caption co-occurrence graph.  Spatial
tokens search only the noun/adjective span, temporal tokens only the
verb/adverb span, by exact nearest neighbour with lowest-index ties.
The quantized forward value is the projected entry bit-for-bit, while
the backward pass treats quantization as identity on the continuous
token (straight-through).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from .errors import ValidationError
from .graph import CooccurrenceGraph
from .vocab import Vocabulary

KINDS = ("spatial", "temporal", "any")


@dataclass
class LatentTokens:
    """A batch of query tokens in quantization space: (B, L, d_latent)."""

    values: torch.Tensor
    kind: str
    quantized: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"bad token kind {self.kind!r}")
        if self.values.ndim != 3:
            raise ValidationError(
                f"expected (B, L, d) tokens, got {tuple(self.values.shape)}")


@dataclass
class QuantizedTokens:
    """Nearest codebook entries for a batch of tokens.

    ``values`` carries the straight-through forward value (equal to the
    selected projected entries), ``embeddings`` the same entries with the
    autograd path into the projector, ``indices`` the 0-based positions
    within the sub-book that was searched.
    """

    values: torch.Tensor
    embeddings: torch.Tensor
    indices: torch.Tensor
    kind: str
    quantized: bool = field(default=True)


def require_quantized(tokens) -> None:
    if not getattr(tokens, "quantized", False):
        raise ValidationError("operation requires quantized tokens")


class GraphProjector(nn.Module):
    """Two GCN hidden layers then a linear map into the latent space."""

    def __init__(self, d_text: int, d_latent: int, hidden: int = 512):
        super().__init__()
        self.fc1 = nn.Linear(d_text, hidden)
        self.fc2 = nn.Linear(hidden, hidden)
        self.out = nn.Linear(hidden, d_latent)
        self.act = nn.ReLU()

    def forward(self, raw: torch.Tensor, adj_norm: torch.Tensor) -> torch.Tensor:
        h1 = self.act(self.fc1(torch.sparse.mm(adj_norm, raw)))
        h2 = self.act(self.fc2(torch.sparse.mm(adj_norm, h1)))
        return self.out(h2)


class LanguageQuantizer(nn.Module):
    """Codebook + projector + partitioned nearest-neighbour search."""

    def __init__(self, vocab: Vocabulary, raw_embeddings: torch.Tensor,
                 graph: CooccurrenceGraph, d_latent: int, hidden: int = 512):
        super().__init__()
        if raw_embeddings.shape[0] != len(vocab):
            raise ValidationError(
                f"{raw_embeddings.shape[0]} embedding rows for a vocabulary "
                f"of {len(vocab)} entries")
        if graph.n_nodes != len(vocab):
            raise ValidationError("graph built over a different vocabulary")
        self.vocab = vocab
        self.spatial_range = vocab.spatial_range
        self.temporal_range = vocab.temporal_range
        # Frozen by construction: a buffer receives no gradient updates.
        self.register_buffer("raw_embeddings", raw_embeddings.float().clone())
        self.register_buffer("adj_norm", graph.normalized_adjacency())
        self.projector = GraphProjector(raw_embeddings.shape[1], d_latent,
                                        hidden=hidden)

    def projected_codebook(self) -> torch.Tensor:
        """Project all entries; gradients flow to the projector only."""
        return self.projector(self.raw_embeddings, self.adj_norm)

    def _span(self, kind: str) -> range:
        if kind == "spatial":
            return self.spatial_range
        if kind == "temporal":
            return self.temporal_range
        if kind == "any":
            return range(len(self.vocab))
        raise ValidationError(f"bad token kind {kind!r}")

    def quantize(self, tokens: LatentTokens,
                 projected: torch.Tensor | None = None) -> QuantizedTokens:
        """Exact nearest neighbour within the permitted sub-book span."""
        if tokens.quantized:
            raise ValidationError("tokens are already quantized")
        span = self._span(tokens.kind)
        if len(span) == 0:
            raise ValidationError(f"empty {tokens.kind} codebook span")
        if projected is None:
            projected = self.projected_codebook()
        rows = projected[span.start:span.stop]
        z = tokens.values
        # Squared distances via one matrix product against the span.
        dist = (z.pow(2).sum(-1, keepdim=True)
                - 2.0 * z @ rows.t()
                + rows.pow(2).sum(-1))
        indices = torch.argmin(dist, dim=-1)  # first minimum = lowest index
        chosen = rows[indices]
        # Forward value is exactly the codebook entry ((z - sg[z]) is the
        # zero tensor); backward is the identity on z (straight-through).
        st = chosen.detach() + (z - z.detach())
        return QuantizedTokens(values=st, embeddings=chosen,
                               indices=indices, kind=tokens.kind)

    def embed_indices(self, indices: torch.Tensor, kind: str,
                      projected: torch.Tensor | None = None) -> torch.Tensor:
        """Look up projected entries for sub-book-local indices."""
        span = self._span(kind)
        if indices.numel() and (indices.min() < 0 or indices.max() >= len(span)):
            raise ValidationError(
                f"{kind} index out of range [0, {len(span)})")
        if projected is None:
            with torch.no_grad():
                projected = self.projected_codebook()
        return projected[span.start:span.stop][indices]


def vq_loss(z_s: torch.Tensor, q_s: torch.Tensor,
            z_t: torch.Tensor | None = None,
            q_t: torch.Tensor | None = None,
            beta: float = 0.25) -> torch.Tensor:
    """Commitment loss binding encoder outputs to codebook projections.

    Per stream: ``||sg[z] - q||^2 + beta * ||z - sg[q]||^2`` with squared
    Frobenius norms summed over tokens and dimensions and averaged over
    the batch.  The first term trains the projector, the second the
    encoder; beta = 1 recovers the unweighted form.
    """
    total = None
    for z, q in ((z_s, q_s), (z_t, q_t)):
        if z is None:
            continue
        if q is None or q.shape != z.shape:
            raise ValidationError("mismatched continuous/quantized pair")
        batch = z.shape[0]
        codebook_term = (z.detach() - q).pow(2).sum() / batch
        commit_term = (z - q.detach()).pow(2).sum() / batch
        term = codebook_term + beta * commit_term
        total = term if total is None else total + term
    if total is None:
        raise ValidationError("vq_loss needs at least one token stream")
    return total


def indices_to_words(tokens: QuantizedTokens, vocab: Vocabulary) -> list[str]:
    """Decode sub-book-local indices to their vocabulary words."""
    span = (vocab.spatial_range if tokens.kind == "spatial"
            else vocab.temporal_range if tokens.kind == "temporal"
            else range(len(vocab)))
    flat = tokens.indices.reshape(-1).tolist()
    words = []
    for idx in flat:
        if not 0 <= idx < len(span):
            raise ValidationError(f"index {idx} outside the {tokens.kind} span")
        words.append(vocab.entries[span.start + idx].word)
    return words
