"""Artifact plumbing: codebook directories and self-contained checkpoints.

A codebook directory holds ``vocabulary.tsv``, ``graph.txt`` and
``embeddings.swte``.  A checkpoint embeds those artifacts plus the full
config, so a model can be rebuilt from the checkpoint file alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import torch

from . import checkpoint as ckpt
from .captions import CaptionCorpus
from .config import Config, config_from_text, config_to_text
from .embeddings import (embeddings_from_bytes, embeddings_to_bytes,
                         load_embeddings, pseudo_embeddings, save_embeddings)
from .errors import FormatError
from .graph import (CooccurrenceGraph, build_graph, graph_from_text,
                    graph_to_text, load_graph, save_graph)
from .model import VideoTokenizer, init_weights
from .quantizer import LanguageQuantizer
from .training import Trainer
from .video import VideoClip
from .vocab import (Vocabulary, build_vocabulary, load_vocabulary,
                    save_vocabulary, vocabulary_from_text, vocabulary_to_text)

VOCAB_FILE = "vocabulary.tsv"
GRAPH_FILE = "graph.txt"
EMBED_FILE = "embeddings.swte"


@dataclass
class CodebookArtifacts:
    vocab: Vocabulary
    graph: CooccurrenceGraph
    embeddings: torch.Tensor


def build_codebook(corpus: CaptionCorpus, cfg: Config,
                   embeddings_path: str | Path | None = None,
                   ) -> CodebookArtifacts:
    """Vocabulary + graph from captions; embeddings from file or the
    deterministic pseudo generator when no file is given."""
    vocab = build_vocabulary(corpus, cfg.codebook.min_freq)
    graph = build_graph(corpus, vocab, window=cfg.codebook.window)
    if embeddings_path is None:
        emb = pseudo_embeddings(vocab, cfg.model.d_text)
    else:
        emb = load_embeddings(embeddings_path, vocab=vocab)
    return CodebookArtifacts(vocab=vocab, graph=graph, embeddings=emb)


def save_codebook(artifacts: CodebookArtifacts, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_vocabulary(artifacts.vocab, out / VOCAB_FILE)
    save_graph(artifacts.graph, out / GRAPH_FILE)
    save_embeddings(artifacts.embeddings, out / EMBED_FILE)


def load_codebook(dir_path: str | Path) -> CodebookArtifacts:
    d = Path(dir_path)
    vocab = load_vocabulary(d / VOCAB_FILE)
    graph = load_graph(d / GRAPH_FILE)
    emb = load_embeddings(d / EMBED_FILE, vocab=vocab)
    return CodebookArtifacts(vocab=vocab, graph=graph, embeddings=emb)


def build_model(cfg: Config, artifacts: CodebookArtifacts,
                seed: int | None = None) -> VideoTokenizer:
    quantizer = LanguageQuantizer(artifacts.vocab, artifacts.embeddings,
                                  artifacts.graph, cfg.model.d_latent,
                                  hidden=cfg.model.gcn_hidden)
    model = VideoTokenizer(cfg.model, quantizer)
    if seed is not None:
        init_weights(model, seed)
    return model


def save_checkpoint(path: str | Path, trainer: Trainer, cfg: Config,
                    artifacts: CodebookArtifacts) -> None:
    entries = trainer.state_entries()
    entries["meta/config"] = config_to_text(cfg)
    entries["codebook/vocab"] = vocabulary_to_text(artifacts.vocab)
    entries["codebook/graph"] = graph_to_text(artifacts.graph)
    entries["codebook/embeddings"] = embeddings_to_bytes(artifacts.embeddings)
    ckpt.save_entries(entries, path)


@dataclass
class LoadedCheckpoint:
    model: VideoTokenizer
    cfg: Config
    artifacts: CodebookArtifacts
    entries: dict

    @property
    def step(self) -> int:
        return int(self.entries["meta/step"])

    def ema_parameters(self) -> dict[str, torch.Tensor]:
        return {name[len("ema/"):]: t for name, t in self.entries.items()
                if name.startswith("ema/")}

    def apply_ema(self) -> None:
        """Swap the EMA shadow into the live model parameters."""
        shadow = self.ema_parameters()
        with torch.no_grad():
            for name, p in self.model.named_parameters():
                p.copy_(shadow[name])

    def make_trainer(self, clips: list[VideoClip]) -> Trainer:
        """Resume training with bit-identical continuation."""
        trainer = Trainer(self.model, self.cfg, clips,
                          mode=str(self.entries["meta/mode"]))
        trainer.load_state_entries(self.entries)
        return trainer


def load_checkpoint(path: str | Path) -> LoadedCheckpoint:
    entries = ckpt.load_entries(path)
    for key in ("meta/config", "codebook/vocab", "codebook/graph",
                "codebook/embeddings", "meta/step"):
        if key not in entries:
            raise FormatError(f"{path}: checkpoint missing entry {key!r}")
    cfg = config_from_text(entries["meta/config"])
    vocab = vocabulary_from_text(entries["codebook/vocab"])
    graph = graph_from_text(entries["codebook/graph"])
    emb = embeddings_from_bytes(entries["codebook/embeddings"], vocab=vocab)
    artifacts = CodebookArtifacts(vocab=vocab, graph=graph, embeddings=emb)
    model = build_model(cfg, artifacts)
    with torch.no_grad():
        for name, p in model.named_parameters():
            key = f"param/{name}"
            if key not in entries:
                raise FormatError(f"{path}: checkpoint missing {key!r}")
            p.copy_(entries[key])
    return LoadedCheckpoint(model=model, cfg=cfg, artifacts=artifacts,
                            entries=entries)
