"""Command-line umbrella for the style search engine.

Every training or indexing command is seeded and writes byte-stable
artifacts, so repeated runs with the same seed produce identical files.
A global ``--config`` JSON file can supply defaults (paths, dims,
thresholds, seeds); ``STYLESEARCH_ROOT`` sets the default corpus root.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import bovw as bovw_mod
from .corpus import (
    CorpusError,
    SynthSpec,
    build_cooccurrence,
    load_corpus,
    save_corpus,
    save_word_vectors,
    synth_corpus,
    synth_word_vectors,
)
from .detect import filter_detections, load_detections, save_detections
from .evaluate import ExperimentConfig, run_experiment, write_report
from .query_encoder import (
    EncoderConfig,
    load_word_vectors,
    save_encoder,
    train_encoder,
)
from .style_embed import (
    CbowConfig,
    cluster_quality,
    load_embeddings,
    make_pairs,
    save_embeddings,
    train_cbow,
)
from .vecindex import build_index, save_index
from .vectors import read_vectors, write_vectors


def _default_root(ctx) -> str | None:
    return ctx.obj.get("root") or os.environ.get("STYLESEARCH_ROOT")


@click.group()
@click.option("--config", "config_file", type=click.Path(exists=True), default=None,
              help="JSON config with default paths, dims, thresholds and seeds.")
@click.option("--seed", type=int, default=None, help="Override the configured seed.")
@click.pass_context
def main(ctx, config_file, seed):
    """Multi-modal interior style search engine."""
    ctx.obj = {}
    if config_file:
        ctx.obj.update(json.loads(Path(config_file).read_text()))
    if seed is not None:
        ctx.obj["seed"] = seed


def _seed(ctx, override) -> int:
    if override is not None:
        return override
    return int(ctx.obj.get("seed", 0))


@main.command()
@click.option("--root", type=click.Path(), default=None)
@click.option("--check", is_flag=True, help="Validate only; print a summary.")
@click.pass_context
def ingest(ctx, root, check):
    """Load and validate a corpus directory."""
    root = root or _default_root(ctx)
    if not root:
        raise click.UsageError("no corpus root (use --root or STYLESEARCH_ROOT)")
    try:
        corpus = load_corpus(root)
    except CorpusError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"corpus ok: {len(corpus.items)} items, {len(corpus.rooms)} rooms")
    if check:
        C = build_cooccurrence(corpus)
        click.echo(f"max pairwise co-occurrence: {C.max_offdiag()}")


@main.command()
@click.option("--spec", "spec_file", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def synth(ctx, spec_file, seed, out):
    """Generate a deterministic synthetic corpus."""
    doc = json.loads(Path(spec_file).read_text())
    spec = SynthSpec(**doc)
    seed = _seed(ctx, seed)
    corpus = synth_corpus(spec, seed)
    save_corpus(corpus, out)
    dim, vectors = synth_word_vectors(spec, seed)
    save_word_vectors(Path(out) / "wordvecs.txt", dim, vectors)
    click.echo(f"wrote {len(corpus.items)} items / {len(corpus.rooms)} rooms to {out}")


@main.command("build-index")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), required=True)
@click.option("--per-class", is_flag=True, help="Partition the index by item class.")
@click.pass_context
def build_index_cmd(ctx, corpus_dir, out, per_class):
    """Build the exact kNN index over item visual features."""
    corpus_dir = corpus_dir or _default_root(ctx)
    corpus = load_corpus(corpus_dir)
    featured = [
        (i, corpus.items[i].visual_feature)
        for i in sorted(corpus.items)
        if corpus.items[i].visual_feature is not None
    ]
    if not featured:
        raise click.ClickException("no items with visual features")
    index = build_index(featured, partition_by_class=per_class, corpus=corpus)
    save_index(out, index)
    click.echo(f"indexed {len(index)} vectors (dim {index.dim}) -> {out}")


@main.group()
def bovw():
    """Bag-of-visual-words baseline."""


@bovw.command("train")
@click.option("--descriptors", "desc_dir", type=click.Path(exists=True), required=True,
              help="Directory of per-image .desc files (shared vector format).")
@click.option("--k", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--max-iters", type=int, default=100)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def bovw_train(ctx, desc_dir, k, seed, max_iters, out):
    """Train a k-means visual-word codebook."""
    seed = _seed(ctx, seed)
    sets = [
        bovw_mod.DescriptorSet(p.name, read_vectors(p))
        for p in sorted(Path(desc_dir).glob("*.desc"))
    ]
    if not sets:
        raise click.ClickException(f"no .desc files in {desc_dir}")
    codebook = bovw_mod.train_codebook(sets, k=k, seed=seed, max_iters=max_iters)
    write_vectors(out, codebook.centroids)
    click.echo(f"codebook k={k} seed={seed} -> {out}")


@bovw.command("encode")
@click.option("--codebook", "codebook_file", type=click.Path(exists=True), required=True)
@click.option("--descriptors", "desc_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def bovw_encode(codebook_file, desc_dir, out_dir):
    """Quantize descriptor files into normalized histograms."""
    centroids = read_vectors(codebook_file)
    codebook = bovw_mod.Codebook(k=centroids.shape[0], centroids=centroids, training_seed=-1)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = 0
    for p in sorted(Path(desc_dir).glob("*.desc")):
        hist = bovw_mod.quantize(bovw_mod.DescriptorSet(p.name, read_vectors(p)), codebook)
        write_vectors(out_dir / (p.stem + ".hist"), hist.counts.reshape(1, -1))
        n += 1
    click.echo(f"encoded {n} images -> {out_dir}")


@main.command("train-embeddings")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), default=None)
@click.option("--dim", type=int, default=32, show_default=True)
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--lr", type=float, default=0.05)
@click.option("--negatives", type=int, default=5)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@click.option("--report-clusters", "labels_file", type=click.Path(exists=True), default=None,
              help="JSON map item id -> category; prints intra/inter cosine distances.")
@click.pass_context
def train_embeddings(ctx, corpus_dir, dim, epochs, lr, negatives, seed, out, labels_file):
    """Train item style embeddings from room co-occurrence (CBOW)."""
    corpus_dir = corpus_dir or _default_root(ctx)
    corpus = load_corpus(corpus_dir)
    seed = _seed(ctx, seed)
    pairs = make_pairs(corpus)
    config = CbowConfig(dim=dim, epochs=epochs, learning_rate=lr,
                        negatives=negatives, seed=seed)
    table = train_cbow(pairs, sorted(corpus.items), config)
    save_embeddings(out, table)
    click.echo(
        f"trained {len(table.ids)} embeddings (dim {dim}, "
        f"{len(table.untrained)} untrained) -> {out}"
    )
    if labels_file:
        labels = json.loads(Path(labels_file).read_text())
        intra, inter = cluster_quality(table, labels)
        click.echo(f"cluster quality: intra={intra:.4f} inter={inter:.4f}")


@main.command("train-encoder")
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), default=None)
@click.option("--embeddings", "emb_file", type=click.Path(exists=True), required=True)
@click.option("--word-vectors", "wv_file", type=click.Path(exists=True), required=True)
@click.option("--variant", type=click.Choice(["mean_affine", "recurrent"]),
              default="mean_affine", show_default=True)
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--lr", type=float, default=0.05)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def train_encoder_cmd(ctx, corpus_dir, emb_file, wv_file, variant, epochs, lr, seed, out):
    """Train the text-to-style-space query encoder (MSE regression)."""
    corpus_dir = corpus_dir or _default_root(ctx)
    corpus = load_corpus(corpus_dir)
    table = load_embeddings(emb_file)
    words = load_word_vectors(wv_file)
    seed = _seed(ctx, seed)
    config = EncoderConfig(variant=variant, epochs=epochs, learning_rate=lr, seed=seed)
    model = train_encoder(corpus, table, words, config)
    save_encoder(out, model)
    click.echo(
        f"encoder ({variant}) mse {model.initial_mse:.4f} -> {model.final_mse:.4f}, "
        f"saved to {out}"
    )


@main.command("detect-filter")
@click.option("--in", "in_file", type=click.Path(exists=True), required=True)
@click.option("--out", "out_file", type=click.Path(), default=None)
@click.option("--threshold", type=float, default=0.1, show_default=True)
@click.option("--iou", "iou_threshold", type=float, default=0.5, show_default=True)
@click.option("--per-class-nms", is_flag=True,
              help="Suppress overlaps only within the same class.")
def detect_filter(in_file, out_file, threshold, iou_threshold, per_class_nms):
    """Apply the confidence threshold and overlap suppression to a detection file."""
    dets = load_detections(in_file)
    kept = filter_detections(dets, threshold, iou_threshold, per_class=per_class_nms)
    if out_file:
        save_detections(out_file, kept)
    click.echo(f"{len(kept)}/{len(dets)} detections kept")


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), default=None)
@click.option("--config", "config_file", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), required=True, help="Report JSON path.")
@click.option("--table", "table_file", type=click.Path(), default=None)
@click.option("--curves", "curves_file", type=click.Path(), default=None)
@click.option("--figure", "figure_file", type=click.Path(), default=None)
@click.option("--word-vectors", "wv_file", type=click.Path(exists=True), default=None)
@click.pass_context
def evaluate(ctx, corpus_dir, config_file, out, table_file, curves_file, figure_file, wv_file):
    """Run the full experiment and write report, tables, curves and figure."""
    corpus_dir = corpus_dir or _default_root(ctx)
    corpus = load_corpus(corpus_dir)
    doc = json.loads(Path(config_file).read_text()) if config_file else {}
    if "seed" not in doc and "seed" in ctx.obj:
        doc["seed"] = int(ctx.obj["seed"])
    config = ExperimentConfig.from_dict(doc)
    words = None
    if config.text_enabled:
        wv_path = Path(wv_file) if wv_file else Path(corpus_dir) / "wordvecs.txt"
        if not wv_path.exists():
            raise click.ClickException(f"word vectors not found: {wv_path}")
        words = load_word_vectors(wv_path)
    report = run_experiment(corpus, config, words=words)
    out = Path(out)
    table_file = table_file or out.with_suffix(".txt")
    curves_file = curves_file or out.with_name(out.stem + "_curves.csv")
    figure_file = figure_file or out.with_name(out.stem + "_curves.png")
    write_report(report, out, table_file, curves_file, figure_file)
    click.echo(Path(table_file).read_text())
    click.echo(f"report -> {out}")


@main.command()
@click.option("--root", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--threshold", type=float, default=0.1)
@click.option("--iou", "iou_threshold", type=float, default=0.5)
@click.pass_context
def serve(ctx, root, host, port, threshold, iou_threshold):
    """Serve the search API over HTTP."""
    import uvicorn

    from .service import create_app, load_state

    root = root or _default_root(ctx)
    if not root:
        raise click.UsageError("no corpus root (use --root or STYLESEARCH_ROOT)")
    state = load_state(root, confidence_threshold=threshold, iou_threshold=iou_threshold)
    uvicorn.run(create_app(state), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
