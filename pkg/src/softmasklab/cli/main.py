"""Command-line entry point: synth, train-sbsgan, gen-softmask, train-da2s,
eval, domain-dist, and report subcommands over one run directory."""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np
import torch

from ..data.batching import compose_gan_batch  # noqa: F401  (re-export surface)
from ..data.indicators import apply_mask
from ..data.storage import (
    LayoutSpec,
    corpus_filenames,
    load_corpus,
    read_image,
    write_corpus,
    write_image,
)
from ..data.synthetic import generate_synthetic_corpus
from ..data.types import IndicatorKind
from ..da2s.model import extract_features
from ..da2s.training import load_reid_state, train_da2s
from ..exceptions import (
    ConfigurationError,
    MissingPrerequisiteError,
    NumericError,
    SoftMaskLabError,
)
from ..reideval.domain_gap import embed_domains
from ..reideval.metrics import compute_cmc, compute_map
from ..reideval.ranking import FeatureSet, rank_gallery
from ..sbsgan.networks import generate, infer_softmask
from ..sbsgan.training import load_state, train_sbsgan
from .config import load_config
from .manifest import refuse_rerun, require_stage, run_lock, write_manifest
from .reporting import (
    metrics_markdown_table,
    read_metrics_csv,
    write_cmc_curve,
    write_metrics_csv,
    write_scatter,
)

THREADS_ENV = "SOFTMASK_LAB_THREADS"

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_PREREQUISITE = 3
EXIT_NUMERIC = 4


def _apply_thread_cap(cfg) -> None:
    cap = None
    if os.environ.get(THREADS_ENV):
        cap = int(os.environ[THREADS_ENV])
    elif cfg.get("run", "threads"):
        cap = cfg.get("run", "threads")
    if cap:
        torch.set_num_threads(max(1, min(torch.get_num_threads(), cap)))


def _latest_checkpoint(directory: Path, pattern: str) -> Path:
    candidates = sorted(Path(directory).glob(pattern))
    if not candidates:
        raise MissingPrerequisiteError(
            f"no checkpoint matching {pattern} under {directory}"
        )
    return candidates[-1]


def _resolve_config(args):
    overrides = {}
    for item in args.set or []:
        try:
            dotted, value = item.split("=", 1)
            section, key = dotted.strip().split(".", 1)
        except ValueError:
            raise ConfigurationError(
                f"--set expects section.key=value, got {item!r}"
            )
        overrides[(section.strip(), key.strip())] = value
    if args.seed is not None:
        overrides[("run", "seed")] = str(args.seed)
    if args.out is not None:
        overrides[("run", "out")] = str(args.out)
    if getattr(args, "lambda_sc", None) is not None:
        overrides[("sbsgan", "lambda_sc")] = str(args.lambda_sc)
    cfg = load_config(args.config, overrides)
    _apply_thread_cap(cfg)
    return cfg


def _echo_config(cfg) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    cfg.write(cfg.out / "config.ini")


def _load_run_corpus(cfg, image_size, require_masks=True):
    return load_corpus(
        cfg.out / "corpus",
        LayoutSpec(image_size=tuple(image_size), require_masks=require_masks),
    )


def _eval_domain(cfg) -> int:
    domain = cfg.get("eval", "domain")
    return cfg.get("da2s", "target_domain") if domain < 0 else domain


def cmd_synth(cfg, args) -> None:
    refuse_rerun(cfg.out, "synth", cfg.hash(), cfg.seed, args.force)
    started = time.strftime("%Y-%m-%dT%H:%M:%S")
    corpus = generate_synthetic_corpus(cfg.synthetic_spec())
    corpus_dir = cfg.out / "corpus"
    write_corpus(corpus, corpus_dir)
    write_manifest(cfg.out, "synth", cfg.hash(), cfg.seed, started,
                   {"corpus": corpus_dir, "samples": len(corpus)})
    print(f"synth: wrote {len(corpus)} samples to {corpus_dir}")


def cmd_train_sbsgan(cfg, args) -> None:
    require_stage(cfg.out, "synth")
    refuse_rerun(cfg.out, "train-sbsgan", cfg.hash(), cfg.seed, args.force)
    started = time.strftime("%Y-%m-%dT%H:%M:%S")
    gan_cfg = cfg.gan_config()
    corpus = _load_run_corpus(cfg, gan_cfg.image_size)
    stage_dir = cfg.out / "sbsgan"
    resume = None
    if args.resume:
        resume = _latest_checkpoint(stage_dir, "sbsgan_epoch*.ckpt")
    result = train_sbsgan(corpus, gan_cfg, out_dir=stage_dir, resume=resume)
    write_manifest(
        cfg.out, "train-sbsgan", cfg.hash(), cfg.seed, started,
        {
            "checkpoint": result.checkpoints[-1] if result.checkpoints else "",
            "loss_log": stage_dir / "loss_log.csv",
            "steps": result.state.step,
        },
    )
    print(f"train-sbsgan: {result.state.step} steps, "
          f"checkpoints in {stage_dir}")


def cmd_gen_softmask(cfg, args) -> None:
    require_stage(cfg.out, "synth")
    gan_manifest = require_stage(cfg.out, "train-sbsgan")
    refuse_rerun(cfg.out, "gen-softmask", cfg.hash(), cfg.seed, args.force)
    started = time.strftime("%Y-%m-%dT%H:%M:%S")
    state = load_state(gan_manifest["artifacts"]["checkpoint"])
    gan_cfg = cfg.gan_config()
    corpus = _load_run_corpus(cfg, gan_cfg.image_size, require_masks=False)
    names = corpus_filenames(corpus)
    target = cfg.get("da2s", "target_domain")

    soft_dir = cfg.out / "softmask"
    style_dir = cfg.out / "styletransfer"
    soft_dir.mkdir(parents=True, exist_ok=True)
    style_dir.mkdir(parents=True, exist_ok=True)

    chunk = 32
    for start in range(0, len(corpus), chunk):
        idx = range(start, min(start + chunk, len(corpus)))
        images = corpus.images(idx)
        soft = infer_softmask(state.generator, images)
        for j, i in enumerate(idx):
            write_image(soft[j], soft_dir / names[i])
        source = [i for i in idx if corpus[i].domain != target]
        if source:
            styled = generate(state.generator, corpus.images(source),
                              IndicatorKind.one_hot(target))
            for j, i in enumerate(source):
                write_image(styled[j], style_dir / names[i])
    write_manifest(cfg.out, "gen-softmask", cfg.hash(), cfg.seed, started,
                   {"softmask": soft_dir, "styletransfer": style_dir})
    print(f"gen-softmask: wrote soft-mask and style-transfer trees in {cfg.out}")


def cmd_train_da2s(cfg, args) -> None:
    require_stage(cfg.out, "gen-softmask")
    refuse_rerun(cfg.out, "train-da2s", cfg.hash(), cfg.seed, args.force)
    started = time.strftime("%Y-%m-%dT%H:%M:%S")
    backbone = cfg.backbone_config()
    size = backbone.input_size
    corpus = _load_run_corpus(cfg, size, require_masks=False)
    names = corpus_filenames(corpus)
    target = cfg.get("da2s", "target_domain")
    source_idx = [i for i in range(len(corpus)) if corpus[i].domain != target]
    if not source_idx:
        raise ConfigurationError(
            f"no source-domain samples: every sample is in target domain {target}"
        )
    soft = np.stack([read_image(cfg.out / "softmask" / names[i], size)
                     for i in source_idx])
    context = np.stack([read_image(cfg.out / "styletransfer" / names[i], size)
                        for i in source_idx])
    raw_ids = np.array([corpus[i].identity for i in source_idx])
    _, ids = np.unique(raw_ids, return_inverse=True)

    stage_dir = cfg.out / "da2s"
    resume = None
    if args.resume:
        resume = _latest_checkpoint(stage_dir, "da2s_epoch*.ckpt")
    result = train_da2s((soft, context, ids), backbone, cfg.reid_config(),
                        out_dir=stage_dir, resume=resume)
    write_manifest(
        cfg.out, "train-da2s", cfg.hash(), cfg.seed, started,
        {
            "checkpoint": result.checkpoints[-1] if result.checkpoints else "",
            "train_log": stage_dir / "train_log.csv",
            "final_accuracy": result.epoch_accuracy[-1] if result.epoch_accuracy else 0.0,
        },
    )
    acc = result.epoch_accuracy[-1] if result.epoch_accuracy else float("nan")
    print(f"train-da2s: final epoch accuracy {acc:.3f}, checkpoints in {stage_dir}")


def _extract_pair_features(model, corpus, names, indices, soft_dir, size):
    feats = []
    chunk = 64
    indices = list(indices)
    for start in range(0, len(indices), chunk):
        part = indices[start:start + chunk]
        soft = np.stack([read_image(soft_dir / names[i], size) for i in part])
        context = corpus.images(part)
        feats.append(extract_features(model, soft, context))
    return np.concatenate(feats)


def cmd_eval(cfg, args) -> None:
    require_stage(cfg.out, "synth")
    require_stage(cfg.out, "gen-softmask")
    da2s_manifest = require_stage(cfg.out, "train-da2s")
    refuse_rerun(cfg.out, "eval", cfg.hash(), cfg.seed, args.force)
    started = time.strftime("%Y-%m-%dT%H:%M:%S")

    state = load_reid_state(da2s_manifest["artifacts"]["checkpoint"])
    size = state.backbone.input_size
    corpus = _load_run_corpus(cfg, size, require_masks=False)
    names = corpus_filenames(corpus)
    soft_dir = cfg.out / "softmask"
    eval_dir = cfg.out / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)

    domain = _eval_domain(cfg)
    target = cfg.get("da2s", "target_domain")
    train_split = domain != target
    eval_idx = [i for i in range(len(corpus)) if corpus[i].domain == domain]
    if not eval_idx:
        raise ConfigurationError(f"no samples in evaluation domain {domain}")

    # Test-time pairing: soft-mask image with the original as context.
    feats = _extract_pair_features(state.model, corpus, names, eval_idx,
                                   soft_dir, size)

    seen = set()
    query_rows, gallery_rows = [], []
    for row, i in enumerate(eval_idx):
        key = (corpus[i].identity, corpus[i].camera)
        if key not in seen:
            seen.add(key)
            query_rows.append(row)
        else:
            gallery_rows.append(row)
    samples = [corpus[i] for i in eval_idx]
    queries = FeatureSet.from_samples(feats[query_rows],
                                      [samples[r] for r in query_rows])
    gallery = FeatureSet.from_samples(feats[gallery_rows],
                                      [samples[r] for r in gallery_rows])
    queries.save(eval_dir / "features_query.bin", eval_dir / "features_query.csv")
    gallery.save(eval_dir / "features_gallery.bin", eval_dir / "features_gallery.csv")

    if args.features_only:
        write_manifest(cfg.out, "eval", cfg.hash(), cfg.seed, started,
                       {"features": eval_dir, "features_only": True})
        print(f"eval: feature dump written to {eval_dir}")
        return

    ranks = cfg.get("eval", "ranks")
    result = rank_gallery(queries, gallery,
                          cross_camera=cfg.get("eval", "cross_camera"))
    cmc = compute_cmc(result, ranks)
    mean_ap = compute_map(result)
    full_cmc = compute_cmc(result, range(1, min(21, len(gallery_rows) + 1)))

    metric_rows = [("mAP", mean_ap)]
    metric_rows += [(f"rank-{r}", v) for r, v in zip(ranks, cmc)]
    write_metrics_csv(eval_dir / "metrics.csv", metric_rows)
    write_cmc_curve(eval_dir / "cmc.csv", eval_dir / "cmc.png", full_cmc)

    # Inter-domain distance of the learned features across the whole corpus.
    other = next(d for d in range(corpus.num_domains) if d != domain)
    other_idx = [i for i in range(len(corpus)) if corpus[i].domain == other]
    other_feats = _extract_pair_features(state.model, corpus, names, other_idx,
                                         soft_dir, size)
    gap = embed_domains(other_feats, feats,
                        fit_count=cfg.get("eval", "fit_count"),
                        plot_count=cfg.get("eval", "plot_count"),
                        seed=cfg.seed)
    write_scatter(eval_dir / "scatter.csv", eval_dir / "scatter.png",
                  gap.points, gap.labels, gap.centroids,
                  title=f"feature domain distance {gap.distance:.3f}")

    flag = " (train-split, sanity only)" if train_split else ""
    label = f"Soft-mask + original pairs, domain {domain}{flag}"
    table = metrics_markdown_table(
        label, dict(metric_rows), ranks
    )
    report = [
        f"# Retrieval evaluation{flag}",
        "",
        table,
        "",
        f"Feature-space domain distance (L1 between embedded centroids): "
        f"{gap.distance:.4f}",
        "",
    ]
    (eval_dir / "report.md").write_text("\n".join(report))

    write_manifest(
        cfg.out, "eval", cfg.hash(), cfg.seed, started,
        {"metrics": eval_dir / "metrics.csv", "report": eval_dir / "report.md",
         "domain_distance": gap.distance, "train_split": train_split},
    )
    line = ", ".join(f"rank-{r}={v:.3f}" for r, v in zip(ranks, cmc))
    print(f"eval: mAP={mean_ap:.3f}, {line}{flag}")


def cmd_domain_dist(cfg, args) -> None:
    require_stage(cfg.out, "synth")
    started = time.strftime("%Y-%m-%dT%H:%M:%S")
    corpus = _load_run_corpus(cfg, cfg.gan_config().image_size,
                              require_masks=False)
    names = corpus_filenames(corpus)
    target = cfg.get("da2s", "target_domain")
    source = next(d for d in range(corpus.num_domains) if d != target)
    idx_a = [i for i in range(len(corpus)) if corpus[i].domain == source]
    idx_b = [i for i in range(len(corpus)) if corpus[i].domain == target]

    def flat_images(indices):
        return corpus.images(indices).reshape(len(indices), -1)

    variants = {"original": (flat_images(idx_a), flat_images(idx_b))}
    if corpus.has_masks():
        def hard(indices):
            return np.stack([
                apply_mask(corpus[i].image, corpus[i].mask).reshape(-1)
                for i in indices
            ])
        variants["hard-mask"] = (hard(idx_a), hard(idx_b))
    soft_dir = cfg.out / "softmask"
    if soft_dir.is_dir():
        def soft(indices):
            return np.stack([
                read_image(soft_dir / names[i]).reshape(-1) for i in indices
            ])
        variants["soft-mask"] = (soft(idx_a), soft(idx_b))
    style_dir = cfg.out / "styletransfer"
    if style_dir.is_dir() and any(style_dir.iterdir()):
        def styled(indices):
            return np.stack([
                read_image(style_dir / names[i]).reshape(-1) for i in indices
            ])
        variants["style-transfer"] = (styled(idx_a), flat_images(idx_b))

    dist_dir = cfg.out / "domain_dist"
    dist_dir.mkdir(parents=True, exist_ok=True)
    gap_seeds = cfg.get("eval", "gap_seeds")
    fit_count = cfg.get("eval", "fit_count")
    plot_count = cfg.get("eval", "plot_count")
    rows = []
    for variant, (a, b) in variants.items():
        for s in range(gap_seeds):
            gap = embed_domains(a, b, fit_count=fit_count,
                                plot_count=plot_count, seed=cfg.seed + s)
            rows.append((f"{variant}/seed{s}", gap.distance))
            if s == 0:
                write_scatter(
                    dist_dir / f"scatter_{variant}.csv",
                    dist_dir / f"scatter_{variant}.png",
                    gap.points, gap.labels, gap.centroids,
                    title=f"{variant}: distance {gap.distance:.3f}",
                )
    write_metrics_csv(dist_dir / "domain_distance.csv", rows)
    write_manifest(cfg.out, "domain-dist", cfg.hash(), cfg.seed, started,
                   {"distances": dist_dir / "domain_distance.csv"})
    for name, value in rows:
        print(f"domain-dist: {name} = {value:.4f}")


def cmd_report(cfg, args) -> None:
    sections = []
    metrics_path = cfg.out / "eval" / "metrics.csv"
    if metrics_path.exists():
        metrics = dict(read_metrics_csv(metrics_path))
        ranks = cfg.get("eval", "ranks")
        eval_report = (cfg.out / "eval" / "report.md")
        flag = ""
        if eval_report.exists() and "train-split" in eval_report.read_text():
            flag = " (train-split, sanity only)"
        sections.append("## Retrieval metrics" + flag)
        sections.append(metrics_markdown_table("Soft-mask + original pairs",
                                               metrics, ranks))
    dist_path = cfg.out / "domain_dist" / "domain_distance.csv"
    if dist_path.exists():
        sections.append("## Inter-domain centroid distances")
        sections.append("| Variant | L1 distance |")
        sections.append("|---|---|")
        for name, value in read_metrics_csv(dist_path):
            sections.append(f"| {name} | {value:.4f} |")
    if not sections:
        raise MissingPrerequisiteError(
            "nothing to report: run eval or domain-dist first"
        )
    text = "# Run report\n\n" + "\n\n".join(sections) + "\n"
    (cfg.out / "report.md").write_text(text)
    print(f"report: wrote {cfg.out / 'report.md'}")


_COMMANDS = {
    "synth": cmd_synth,
    "train-sbsgan": cmd_train_sbsgan,
    "gen-softmask": cmd_gen_softmask,
    "train-da2s": cmd_train_da2s,
    "eval": cmd_eval,
    "domain-dist": cmd_domain_dist,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="experiment config file (INI sections)")
    common.add_argument("--seed", type=int, default=None,
                        help="override [run] seed")
    common.add_argument("--out", type=Path, default=None,
                        help="override [run] out directory")
    common.add_argument("--force", action="store_true",
                        help="re-run even if this stage already completed")
    common.add_argument("--resume", action="store_true",
                        help="continue training from the latest checkpoint")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override any config value")

    parser = argparse.ArgumentParser(
        prog="softmask-lab",
        description="Soft-mask image generation and two-stream "
                    "re-identification experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common],
                   help="render the synthetic corpus")
    train_gan = sub.add_parser("train-sbsgan", parents=[common],
                               help="adversarial soft-mask training")
    train_gan.add_argument("--lambda-sc", type=float, default=None,
                           help="override the style-consistency weight")
    sub.add_parser("gen-softmask", parents=[common],
                   help="write soft-mask and style-transfer image trees")
    sub.add_parser("train-da2s", parents=[common],
                   help="train the two-stream identification network")
    ev = sub.add_parser("eval", parents=[common],
                        help="retrieval evaluation on the target domain")
    ev.add_argument("--features-only", action="store_true",
                    help="stop after the feature dump")
    sub.add_parser("domain-dist", parents=[common],
                   help="inter-domain centroid distances per image variant")
    sub.add_parser("report", parents=[common],
                   help="aggregate metrics into a Markdown report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        _echo_config(cfg)
        with run_lock(cfg.out):
            _COMMANDS[args.command](cfg, args)
        return EXIT_OK
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingPrerequisiteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PREREQUISITE
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SoftMaskLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except Exception as exc:  # pragma: no cover - defensive
        print(f"unexpected error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
