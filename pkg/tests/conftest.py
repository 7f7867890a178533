"""Shared fixtures: toy configs, corpora, codebooks and models."""

from __future__ import annotations

from dataclasses import replace

import pytest
import torch

from decotok.config import Config, load_preset
from decotok.pipeline import build_codebook, build_model
from decotok.synthetic import caption_corpus, corpus_from_config


@pytest.fixture(scope="session")
def desk_cfg() -> Config:
    return load_preset("desk")


@pytest.fixture(scope="session")
def tiny_cfg(desk_cfg) -> Config:
    """Smallest config that still exercises every mechanism."""
    model = replace(desk_cfg.model, frames=5, height=16, width=16,
                    patch_t=2, patch_h=4, patch_w=4, d_model=32, n_heads=4,
                    d_latent=16, spatial_layers=2, temporal_layers=1,
                    l_spatial=4, l_temporal=8, d_text=16)
    data = replace(desk_cfg.data, n_clips=4)
    train = replace(desk_cfg.train, batch_size=2, total_steps=200,
                    warmup_steps=10)
    return Config(model=model, train=train, data=data,
                  codebook=desk_cfg.codebook)


@pytest.fixture(scope="session")
def tiny_corpus(tiny_cfg):
    return corpus_from_config(tiny_cfg)


@pytest.fixture(scope="session")
def tiny_codebook(tiny_cfg, tiny_corpus):
    return build_codebook(caption_corpus(tiny_corpus), tiny_cfg)


@pytest.fixture()
def tiny_model(tiny_cfg, tiny_codebook):
    return build_model(tiny_cfg, tiny_codebook, seed=0)


@pytest.fixture(scope="session")
def desk_corpus(desk_cfg):
    return corpus_from_config(desk_cfg)


@pytest.fixture(scope="session")
def desk_codebook(desk_cfg, desk_corpus):
    return build_codebook(caption_corpus(desk_corpus), desk_cfg)


@pytest.fixture()
def desk_model(desk_cfg, desk_codebook):
    return build_model(desk_cfg, desk_codebook, seed=0)


@pytest.fixture(autouse=True)
def _deterministic_seed():
    # Tests that use the global RNG stay order-independent.
    torch.manual_seed(1234)
