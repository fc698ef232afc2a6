"""Command-line entry points: index, match, train, eval, synth, serve.

Every subcommand calls the same core modules the HTTP service uses, so a
CLI run and an API call over identical inputs produce identical results.
The HETMATCH_LOG environment variable (error/info/debug) controls
verbosity.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from . import evaluation, simnet, textpipe, train
from .errors import HetmatchError
from .index import Corpus, PairVectorSource, read_corpus_file
from .simnet import WeightConfig

log = logging.getLogger("hetmatch")

_SIDE_DIRS = {"A": "a", "B": "b"}


def _setup_logging() -> None:
    level = os.environ.get("HETMATCH_LOG", "error").lower()
    logging.basicConfig(
        level={"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
            level, logging.ERROR
        ),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load_index_pair(index_dir: Path) -> tuple[Corpus, Corpus]:
    return Corpus.load(index_dir / "a"), Corpus.load(index_dir / "b")


def _source_for(corpus_a: Corpus, corpus_b: Corpus, cfg: WeightConfig) -> PairVectorSource:
    return PairVectorSource(
        corpus_a, corpus_b, clamp=simnet.CLAMP_VECTORS in cfg.clamp_mode
    )


def uniform_config(corpus_a: Corpus, corpus_b: Corpus, weight: float = 1.0) -> WeightConfig:
    """Neutral starting config: every input weight equal, output weights 1."""
    a_fields = tuple(corpus_a.fields)
    b_fields = tuple(corpus_b.fields)
    return WeightConfig(
        a_components=a_fields,
        b_components=b_fields,
        input_weights={(a, b): weight for a in a_fields for b in b_fields},
        output_weights={b: 1.0 for b in b_fields},
    )


@click.group()
def main() -> None:
    """Match heterogeneous documents with trainable cross-field weights."""
    _setup_logging()


@main.command(name="index")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--doctype", required=True, type=click.Choice(["A", "B"]))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--stopwords", type=click.Path(exists=True, dir_okay=False))
@click.option("--synonyms", type=click.Path(exists=True, dir_okay=False))
def index_cmd(corpus_path: str, doctype: str, out_dir: str, stopwords: str | None, synonyms: str | None) -> None:
    """Index a corpus JSONL file into OUT/a or OUT/b."""
    try:
        corpus = Corpus(
            stopwords=textpipe.load_stopwords(stopwords) if stopwords else frozenset(),
            synonyms=textpipe.load_synonyms(synonyms) if synonyms else None,
        )
        corpus.add_documents(read_corpus_file(corpus_path))
        target = Path(out_dir) / _SIDE_DIRS[doctype]
        corpus.save(target)
    except HetmatchError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"indexed {len(corpus)} documents ({len(corpus.fields)} fields) into {target}")
    log.info("fields: %s", ", ".join(corpus.fields))


@main.command(name="match")
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--a-id", required=True)
@click.option("--weights", "weights_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--top", "top_k", default=3, show_default=True, type=click.IntRange(min=1))
@click.option("--json", "as_json", is_flag=True, help="Emit machine-readable JSON.")
def match_cmd(index_dir: str, a_id: str, weights_path: str, top_k: int, as_json: bool) -> None:
    """Rank B documents against one A document."""
    try:
        corpus_a, corpus_b = _load_index_pair(Path(index_dir))
        cfg = simnet.load_config(weights_path)
        if a_id not in corpus_a.docs:
            raise click.ClickException(f"unknown document {a_id!r}")
        results = simnet.rank(a_id, corpus_b, cfg, _source_for(corpus_a, corpus_b, cfg), k=top_k)
    except HetmatchError as exc:
        raise click.ClickException(str(exc)) from exc
    if as_json:
        click.echo(json.dumps([{"b_id": b, "score": s} for b, s in results]))
    else:
        for b_id, value in results:
            click.echo(f"{b_id}\t{value:.6f}")


@main.command(name="train")
@click.option("--mode", required=True, type=click.Choice(["grid", "sgd", "es"]))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--grid", "grid_path", type=click.Path(exists=True, dir_okay=False), help="Grid file (grid mode).")
@click.option("--weights", "init_path", type=click.Path(exists=True, dir_okay=False), help="Starting config; defaults to uniform weights.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--lr", default=0.1, show_default=True)
@click.option("--iters", default=200, show_default=True)
@click.option("--population", default=8, show_default=True)
@click.option("--sigma", default=0.5, show_default=True)
@click.option("--generations", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--metric", default="accuracy", type=click.Choice(["accuracy", "loss"]), show_default=True)
@click.option("--json", "as_json", is_flag=True)
def train_cmd(mode, labels_path, index_dir, grid_path, init_path, out_path,
              lr, iters, population, sigma, generations, seed, metric, as_json) -> None:
    """Fit weights from labeled pairs and write the best config to --out."""
    try:
        corpus_a, corpus_b = _load_index_pair(Path(index_dir))
        labels = evaluation.aggregate_labels(evaluation.load_ratings(labels_path))
        if not labels:
            raise click.ClickException("labels file yields no aggregated labels")
        pairs = evaluation.as_pairs(labels)
        base = simnet.load_config(init_path) if init_path else uniform_config(corpus_a, corpus_b)
        source = _source_for(corpus_a, corpus_b, base)
        if mode == "grid":
            if not grid_path:
                raise click.ClickException("--grid is required for grid mode")
            report = train.grid_search(pairs, train.load_grid(grid_path), base,
                                       source=source, metric=metric)
        elif mode == "sgd":
            report = train.sgd_fit(pairs, base, lr=lr, iters=iters, source=source,
                                   sweep_threshold=True)
        else:
            report = train.es_fit(pairs, base, population=population, sigma=sigma,
                                  generations=generations, seed=seed, source=source)
        simnet.save_config(report.best_config, out_path)
    except HetmatchError as exc:
        raise click.ClickException(str(exc)) from exc
    if as_json:
        click.echo(json.dumps(report.to_dict()))
        return
    if report.evaluated is not None:
        key_order = simnet.weight_key_order(base)
        columns = [
            {f"{a}>{b}": cfg.weight(a, b) for (a, b) in key_order}
            for cfg, _acc, _loss in report.evaluated
        ]
        click.echo(evaluation.render_weight_table(
            [f"{a}>{b}" for (a, b) in key_order],
            columns,
            [acc for _cfg, acc, _loss in report.evaluated],
        ))
    click.echo(
        f"{mode}: best accuracy {report.best_accuracy:.1f}% "
        f"(loss {report.best_loss:.4f}) after {report.iterations} steps; "
        f"config written to {out_path}"
    )


@main.command(name="eval")
@click.option("--weights", "weights_arg", required=True,
              help="Comma-separated list of config files, one column each.")
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True)
def eval_cmd(weights_arg: str, labels_path: str, index_dir: str, as_json: bool) -> None:
    """Report accuracy per config as a weight/accuracy table."""
    try:
        corpus_a, corpus_b = _load_index_pair(Path(index_dir))
        configs = [simnet.load_config(p.strip()) for p in weights_arg.split(",") if p.strip()]
        if not configs:
            raise click.ClickException("no config files given")
        labels = evaluation.aggregate_labels(evaluation.load_ratings(labels_path))
        if not labels:
            raise click.ClickException("labels file yields no aggregated labels")
        source = _source_for(corpus_a, corpus_b, configs[0])
        report = evaluation.weight_table(labels, configs, source)
    except HetmatchError as exc:
        raise click.ClickException(str(exc)) from exc
    if as_json:
        click.echo(json.dumps(report.to_dict()))
    else:
        click.echo(report.render())


@main.command(name="synth")
@click.option("--seed", default=1, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--n-a", default=100, show_default=True)
@click.option("--n-b", default=100, show_default=True)
@click.option("--planted", default=50, show_default=True)
@click.option("--noise-vocab", default=400, show_default=True)
@click.option("--signal", default="title:title", show_default=True,
              help="A-field:B-field pair carrying the planted signal.")
def synth_cmd(seed, out_dir, n_a, n_b, planted, noise_vocab, signal) -> None:
    """Generate a planted-match corpus pair plus ground-truth labels."""
    try:
        a_field, _, b_field = signal.partition(":")
        data = evaluation.synth_corpus(
            seed, n_a, n_b, planted,
            signal_field_pair=(a_field, b_field or a_field),
            noise_vocab=noise_vocab,
        )
        out = Path(out_dir)
        data.corpus_a.save(out / "a")
        data.corpus_b.save(out / "b")
        labels_path = out / "labels.jsonl"
        if labels_path.exists():
            labels_path.unlink()
        for ts, pair in enumerate(data.labels):
            evaluation.append_rating(labels_path, evaluation.JudgeRating(
                a_id=pair.a_id, b_id=pair.b_id, judge_id="truth",
                rating=pair.label, timestamp=ts,
            ))
    except HetmatchError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(
        f"wrote {n_a}+{n_b} documents ({planted} planted pairs, "
        f"{len(data.labels)} labels) under {out_dir}"
    )


@main.command(name="serve")
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--index-a", "index_a", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--index-b", "index_b", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--weights", "weights_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", required=True, type=click.Path(dir_okay=False))
@click.option("--ui-dir", type=click.Path(file_okay=False),
              help="Static judge-UI bundle; defaults to ./frontend/dist when present.")
def serve_cmd(port, host, index_a, index_b, weights_path, labels_path, ui_dir) -> None:
    """Run the HTTP service (API under /api, judge UI at /)."""
    import uvicorn

    from .service import AppState, create_app

    try:
        state = AppState.from_paths(index_a, index_b, weights_path, labels_path)
    except HetmatchError as exc:
        raise click.ClickException(str(exc)) from exc
    if ui_dir is None:
        default_ui = Path("frontend") / "dist"
        ui_dir = default_ui if default_ui.is_dir() else None
    app = create_app(state, ui_dir=ui_dir)
    log.info("serving on %s:%s (ui: %s)", host, port, ui_dir or "none")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
