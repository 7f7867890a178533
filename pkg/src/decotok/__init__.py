"""Decoupled spatial/temporal video tokenizer with a language codebook."""

from .config import (Config, DataConfig, ModelConfig, TrainConfig,
                     load_config, load_preset, save_config)
from .metrics import MetricsReport, compute_metrics
from .model import (VideoTokenizer, compute_residual, init_weights,
                    tile_spatial)
from .patchify import (PatchGrid, PatchKernel, PixelDecoder, patchify_spatial,
                       patchify_temporal, unpatchify_spatial)
from .pipeline import (CodebookArtifacts, build_codebook, build_model,
                       load_checkpoint, load_codebook, save_checkpoint,
                       save_codebook)
from .quantizer import (GraphProjector, LanguageQuantizer, LatentTokens,
                        QuantizedTokens, indices_to_words, vq_loss)
from .synthetic import MotionSpec, corpus_from_config, synthesize_corpus
from .training import Trainer, ema_update, finetune_image, lr_at
from .video import VideoClip, load_clip, save_clip
from .vocab import Vocabulary, build_vocabulary
from .graph import CooccurrenceGraph, build_graph

__version__ = "0.1.0"
