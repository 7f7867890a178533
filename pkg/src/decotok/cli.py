"""Command-line surface.

Commands: synth, build-codebook, train, finetune-image, encode, decode,
reconstruct, eval, words, ablate.  Exit codes are a stable scripting
contract: 0 success, 2 validation error, 3 I/O error, 4 numeric failure.
Every artifact directory receives exactly one ``manifest.json`` that
fully determines a rerun.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import torch

from .baselines import STRATEGY_VARIANTS, make_strategy, run_ablation
from .captions import load_captions, save_captions
from .config import (Config, config_hash, load_config, load_preset,
                     save_config)
from .errors import FormatError, NumericsError, ValidationError
from .metrics import compute_metrics, mean_report
from .images import save_reconstruction_grid
from .pipeline import (build_codebook, build_model, load_checkpoint,
                       load_codebook, save_checkpoint, save_codebook)
from .quantizer import QuantizedTokens, indices_to_words
from .synthetic import caption_corpus, corpus_from_config
from .tokens import load_token_records, save_token_records
from .training import Trainer
from .video import VideoClip, load_clip, save_clip


def _resolve_config(args) -> Config:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        cfg = load_preset(getattr(args, "preset", None) or "desk")
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    cfg.validate()
    return cfg


def _write_manifest(out_dir: Path, command: str, cfg: Config | None,
                    inputs: dict, outputs: list[str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config_hash": config_hash(cfg) if cfg is not None else None,
        "seed": cfg.train.seed if cfg is not None else None,
        "inputs": inputs,
        "outputs": outputs,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _clip_paths(items: list[str]) -> list[Path]:
    paths: list[Path] = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.swtv")))
        else:
            paths.append(p)
    if not paths:
        raise ValidationError("no input clips given")
    return paths


# ----------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    clips_dir = out / "clips"
    clips_dir.mkdir(parents=True, exist_ok=True)
    pairs = corpus_from_config(cfg, frames=args.frames)
    for clip, _ in pairs:
        save_clip(clip, clips_dir / f"{clip.clip_id}.swtv")
    save_captions(caption_corpus(pairs), out / "captions.tsv")
    save_config(cfg, out / "config.ini")
    _write_manifest(out, "synth", cfg, {"n_clips": len(pairs)},
                    ["clips/", "captions.tsv", "config.ini"])
    print(f"wrote {len(pairs)} clips to {clips_dir}")
    return 0


def cmd_build_codebook(args) -> int:
    cfg = _resolve_config(args)
    corpus = load_captions(args.captions)
    emb_path = None if args.embeddings == "pseudo" else args.embeddings
    artifacts = build_codebook(corpus, cfg, embeddings_path=emb_path)
    out = Path(args.out)
    save_codebook(artifacts, out)
    _write_manifest(out, "build-codebook", cfg,
                    {"captions": str(args.captions),
                     "embeddings": args.embeddings},
                    ["vocabulary.tsv", "graph.txt", "embeddings.swte"])
    print(f"spatial={artifacts.vocab.n_spatial} "
          f"temporal={artifacts.vocab.n_temporal}")
    return 0


def _train_common(args, mode: str) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames = 1 if mode == "image" else None
    pairs = corpus_from_config(cfg, frames=frames)
    clips = [c for c, _ in pairs]

    if getattr(args, "resume", None):
        loaded = load_checkpoint(args.resume)
        cfg = loaded.cfg
        artifacts = loaded.artifacts
        trainer = loaded.make_trainer(clips)
    else:
        if args.codebook:
            artifacts = load_codebook(args.codebook)
        else:
            artifacts = build_codebook(caption_corpus(pairs), cfg)
        model = build_model(cfg, artifacts, seed=cfg.train.seed)
        if getattr(args, "init", None):
            init_from = load_checkpoint(args.init)
            with torch.no_grad():
                for name, p in model.named_parameters():
                    p.copy_(init_from.entries[f"param/{name}"])
        trainer = Trainer(model, cfg, clips, mode=mode)

    target = args.steps if args.steps is not None else cfg.train.total_steps
    log_path = out / "train.log"
    with open(log_path, "a", encoding="utf-8") as log:
        while trainer.step_count < target:
            breakdown = trainer.train_step()
            log.write(breakdown.log_line() + "\n")

    ckpt_path = out / "checkpoint.swtk"
    save_checkpoint(ckpt_path, trainer, cfg, artifacts)
    save_config(cfg, out / "config.ini")
    command = "train" if mode == "video" else "finetune-image"
    _write_manifest(out, command, cfg,
                    {"codebook": str(args.codebook or "<built-in>"),
                     "resume": str(getattr(args, "resume", None)),
                     "steps": target},
                    ["checkpoint.swtk", "train.log", "config.ini"])
    print(f"trained to step {trainer.step_count}; checkpoint at {ckpt_path}")
    return 0


def cmd_train(args) -> int:
    return _train_common(args, "video")


def cmd_finetune_image(args) -> int:
    return _train_common(args, "image")


def cmd_encode(args) -> int:
    loaded = load_checkpoint(args.checkpoint)
    if args.ema:
        loaded.apply_ema()
    records = []
    for path in _clip_paths(args.clips):
        clip = load_clip(path, loaded.cfg.model)
        spatial, temporal = loaded.model.tokenize(clip)
        records.append((clip.clip_id, spatial, temporal))
    save_token_records(records, args.out)
    print(f"encoded {len(records)} clips -> {args.out}")
    return 0


def cmd_decode(args) -> int:
    loaded = load_checkpoint(args.checkpoint)
    if args.ema:
        loaded.apply_ema()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = load_token_records(args.tokens)
    for clip_id, spatial, temporal in records:
        frames = loaded.model.decode_from_indices(spatial, temporal)
        save_clip(VideoClip(frames=frames, clip_id=clip_id),
                  out / f"{clip_id}.swtv")
    _write_manifest(out, "decode", loaded.cfg,
                    {"tokens": str(args.tokens),
                     "checkpoint": str(args.checkpoint)},
                    [f"{cid}.swtv" for cid, _, _ in records])
    print(f"decoded {len(records)} clips -> {out}")
    return 0


def cmd_reconstruct(args) -> int:
    loaded = load_checkpoint(args.checkpoint)
    if args.ema:
        loaded.apply_ema()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = {}
    outputs = []
    for path in _clip_paths(args.clips):
        clip = load_clip(path, loaded.cfg.model)
        recon = loaded.model.reconstruct(clip)
        save_clip(recon, out / f"{clip.clip_id}.recon.swtv")
        save_reconstruction_grid(clip, recon, out / f"{clip.clip_id}.grid.ppm")
        reports[clip.clip_id] = compute_metrics(clip, recon)
        outputs += [f"{clip.clip_id}.recon.swtv", f"{clip.clip_id}.grid.ppm"]
    doc = {cid: r.to_dict() for cid, r in reports.items()}
    doc["mean"] = mean_report(list(reports.values())).to_dict()
    (out / "metrics.json").write_text(json.dumps(doc, indent=2) + "\n")
    _write_manifest(out, "reconstruct", loaded.cfg,
                    {"checkpoint": str(args.checkpoint)},
                    outputs + ["metrics.json"])
    print(json.dumps(doc["mean"]))
    return 0


def cmd_eval(args) -> int:
    loaded = load_checkpoint(args.checkpoint)
    if args.ema:
        loaded.apply_ema()
    reports = []
    for path in _clip_paths(args.clips):
        clip = load_clip(path, loaded.cfg.model)
        recon = loaded.model.reconstruct(clip)
        reports.append(compute_metrics(clip, recon))
    doc = mean_report(reports).to_dict()
    text = json.dumps(doc)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_words(args) -> int:
    loaded = load_checkpoint(args.checkpoint)
    if args.ema:
        loaded.apply_ema()
    clip = load_clip(args.clip, loaded.cfg.model)
    spatial, temporal = loaded.model.tokenize(clip)
    vocab = loaded.artifacts.vocab
    s_tokens = QuantizedTokens(values=torch.empty(0), embeddings=torch.empty(0),
                               indices=torch.tensor(spatial), kind="spatial")
    t_tokens = QuantizedTokens(values=torch.empty(0), embeddings=torch.empty(0),
                               indices=torch.tensor(temporal), kind="temporal")
    print("spatial words:")
    print("  " + " ".join(indices_to_words(s_tokens, vocab)))
    print("temporal words:")
    print("  " + " ".join(indices_to_words(t_tokens, vocab)))
    return 0


def cmd_ablate(args) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pairs = corpus_from_config(cfg)
    clips = [c for c, _ in pairs]
    artifacts = build_codebook(caption_corpus(pairs), cfg)
    strategies = [make_strategy(v, cfg.model, artifacts.vocab,
                                artifacts.embeddings, artifacts.graph,
                                seed=cfg.train.seed)
                  for v in STRATEGY_VARIANTS]
    steps = args.steps if args.steps is not None else cfg.train.total_steps
    rows = run_ablation(strategies, clips, cfg, n_steps=steps)
    header = "strategy\ttokens\tl2\tpsnr"
    lines = [header] + [f"{r.strategy}\t{r.tokens}\t{r.l2:.8g}\t{r.psnr:.6g}"
                        for r in rows]
    (out / "table.tsv").write_text("\n".join(lines) + "\n")
    (out / "table.json").write_text(
        json.dumps([r.to_dict() for r in rows], indent=2) + "\n")
    _write_manifest(out, "ablate", cfg, {"steps": steps},
                    ["table.tsv", "table.json"])
    print("\n".join(lines))
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decotok",
        description="decoupled spatial/temporal video tokenizer")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False, out=True):
        p.add_argument("--config", help="config file (overrides --preset)")
        p.add_argument("--preset", choices=("paper", "desk"),
                       help="built-in preset (default: desk)")
        p.add_argument("--seed", type=int, help="override the config seed")
        if checkpoint:
            p.add_argument("--checkpoint", required=True)
            p.add_argument("--ema", action="store_true",
                           help="use the EMA weight snapshot")
        if out:
            p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    common(p)
    p.add_argument("--frames", type=int, default=None,
                   help="frames per clip (default: model config)")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("build-codebook",
                       help="vocabulary, graph and embedding files")
    common(p)
    p.add_argument("--captions", required=True)
    p.add_argument("--embeddings", default="pseudo",
                   help="embedding file, or 'pseudo' for the generator")
    p.set_defaults(fn=cmd_build_codebook)

    for name, fn in (("train", cmd_train),
                     ("finetune-image", cmd_finetune_image)):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--codebook", help="codebook artifact directory")
        p.add_argument("--steps", type=int, default=None,
                       help="train until this step count")
        p.add_argument("--resume", help="checkpoint to resume from")
        p.add_argument("--init", help="checkpoint to initialize weights from")
        p.set_defaults(fn=fn)

    p = sub.add_parser("encode", help="clips -> token file")
    common(p, checkpoint=True)
    p.add_argument("clips", nargs="+")
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("decode", help="token file -> clips")
    common(p, checkpoint=True)
    p.add_argument("--tokens", required=True)
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("reconstruct",
                       help="clips -> videos + metrics + error grid")
    common(p, checkpoint=True)
    p.add_argument("clips", nargs="+")
    p.set_defaults(fn=cmd_reconstruct)

    p = sub.add_parser("eval", help="reconstruction metrics only")
    common(p, checkpoint=True, out=False)
    p.add_argument("--out", help="optional metrics JSON path")
    p.add_argument("clips", nargs="+")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("words", help="decode a clip's tokens to words")
    common(p, checkpoint=True, out=False)
    p.add_argument("clip")
    p.set_defaults(fn=cmd_words)

    p = sub.add_parser("ablate", help="compare compression strategies")
    common(p)
    p.add_argument("--steps", type=int, default=None)
    p.set_defaults(fn=cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    # Keep command outputs byte-reproducible.
    torch.set_num_threads(1)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except NumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        if exc.diagnostics:
            summary = {k: v for k, v in exc.diagnostics.items()
                       if k != "param_norms"}
            print(f"diagnostics: {json.dumps(summary)}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
