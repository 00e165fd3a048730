"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error (bad input files).
All outputs are written atomically (temp file in the target directory,
then rename), so failures never leave partial artifacts behind.
"""

from __future__ import annotations

import os
import sys
import tempfile

import click

from webspam import classifier, corpus, labelgen, pipeline, ranktransform, treceval


class DataError(click.ClickException):
    exit_code = 2


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".webspam-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_call(path: str, writer) -> None:
    """Run a writer(path) against a temp file, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".webspam-tmp-")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(str(exc))


def _data(callable_, *args, **kwargs):
    try:
        return callable_(*args, **kwargs)
    except (ValueError, OSError) as exc:
        raise DataError(str(exc))


@click.group()
def cli():
    """Content-based web-spam scoring and run filtering/reranking toolkit."""


@cli.command()
@click.option("--examples", "manifest", required=True, type=click.Path(exists=True),
              help="Training-example manifest (TSV).")
@click.option("--model", "model_path", required=True, type=click.Path(),
              help="Output model file.")
@click.option("--delta", default=classifier.DEFAULT_DELTA, show_default=True,
              help="Learning rate.")
def train(manifest, model_path, delta):
    """Train a classifier in one online pass over a manifest."""
    examples = _data(classifier.read_manifest, manifest,
                     base_dir=os.path.dirname(manifest))
    w = _data(classifier.train_pass, examples, delta=delta)
    _atomic_call(model_path, lambda tmp: classifier.save_model(w, tmp))
    click.echo(f"trained on {w.trained_examples} examples -> {model_path}")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--warc", "warcs", required=True, multiple=True,
              type=click.Path(exists=True), help="WARC archive(s) to score.")
@click.option("--out", required=True, type=click.Path(), help="Score file.")
@click.option("--workers", default=0, show_default="available cores",
              help="Parallel scoring workers.")
@click.option("--model-id", default="", help="Model identifier for the table.")
def score(model_path, warcs, out, workers, model_id):
    """Score every response record of the given WARC archives."""
    w = _data(classifier.load_model, model_path)
    if workers <= 0:
        workers = os.cpu_count() or 1

    def pages():
        for path in warcs:
            yield from corpus.stream_warc(path)

    try:
        table = pipeline.score_corpus(w, pages(), model_id=model_id, workers=workers)
    except (ValueError, corpus.WarcFormatError) as exc:
        raise DataError(str(exc))
    _atomic_call(out, lambda tmp: pipeline.write_scores(table, tmp))
    click.echo(f"scored {len(table.entries)} pages -> {out}")


@cli.command()
@click.option("--scores", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Percentile file.")
@click.option("--max-in-memory", default=None, type=int,
              help="Switch to external sort above this many documents.")
def percentile(scores, out, max_in_memory):
    """Convert a score file to integer percentile ranks."""
    table = _data(pipeline.read_scores, scores)
    ranked = _data(pipeline.percentile_rank, table, max_in_memory=max_in_memory)
    _atomic_call(out, lambda tmp: pipeline.write_percentiles(ranked, tmp))
    click.echo(f"ranked {ranked.corpus_size} documents -> {out}")


@cli.command()
@click.option("--scores", "score_files", required=True, multiple=True,
              type=click.Path(exists=True), help="Two or more score files.")
@click.option("--out", required=True, type=click.Path())
def fuse(score_files, out):
    """Average log-odds scores from multiple classifiers."""
    tables = [_data(pipeline.read_scores, p, model_id=p) for p in score_files]
    fused = _data(pipeline.fuse, tables)
    _atomic_call(out, lambda tmp: pipeline.write_scores(fused, tmp))
    click.echo(f"fused {len(score_files)} tables -> {out}")


@cli.group(name="labelgen")
def labelgen_group():
    """Training-example generators."""


@labelgen_group.command()
@click.option("--labels", required=True, type=click.Path(exists=True),
              help="Host label file: '<host> <spam|nonspam>' per line.")
@click.option("--warc", "warcs", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--min-size", default=labelgen.DEFAULT_MIN_PAGE_SIZE, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Manifest output.")
def hosts(labels, warcs, min_size, out):
    """Select one page per labeled host (first with >= min-size bytes)."""
    host_labels = _data(labelgen.read_host_labels, labels)

    def pages():
        for path in warcs:
            yield from corpus.stream_warc(path)

    examples = _data(labelgen.select_host_examples, host_labels, pages(), min_size)
    payload_dir = f"{out}.d"
    _atomic_call(
        out,
        lambda tmp: classifier.write_manifest(examples, tmp, payload_dir=payload_dir),
    )
    click.echo(f"{len(examples)} host examples -> {out}")


@labelgen_group.command()
@click.option("--run", "run_path", required=True, type=click.Path(exists=True),
              help="Honeypot retrieval run (TREC format).")
@click.option("--top-n", default=labelgen.DEFAULT_HONEYPOT_TOP_N, show_default=True)
@click.option("--out", required=True, type=click.Path(),
              help="Output label file: '<doc_id> spam' per line.")
def honeypot(run_path, top_n, out):
    """Label the top results of every honeypot query as spam."""
    run = _data(treceval.parse_run, _read_text(run_path))
    pairs = labelgen.honeypot_spam_labels(run, top_n)
    _atomic_write(out, "".join(f"{d}\t{label}\n" for d, label in pairs))
    click.echo(f"{len(pairs)} spam labels -> {out}")


@labelgen_group.command()
@click.option("--urls", required=True, type=click.Path(exists=True),
              help="Directory URL list, one per line.")
@click.option("--index", required=True, type=click.Path(exists=True),
              help="Corpus index: '<url>\\t<doc_id>' per line.")
@click.option("--sample", default=labelgen.DEFAULT_DIRECTORY_SAMPLE, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def directory(urls, index, sample, seed, out):
    """Label a seeded sample of directory-listed corpus URLs as nonspam."""
    url_list = _data(labelgen.read_url_list, urls)
    corpus_index = _data(labelgen.read_corpus_index, index)
    pairs = _data(labelgen.directory_nonspam_labels, url_list, corpus_index,
                  sample, seed)
    _atomic_write(out, "".join(f"{d}\t{label}\n" for d, label in pairs))
    click.echo(f"{len(pairs)} nonspam labels -> {out}")


@labelgen_group.command(name="import-manual")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True),
              help="Adjudication judgment log.")
@click.option("--out", required=True, type=click.Path(),
              help="Output label file: '<doc_id>\\t<label>' per line.")
def import_manual(log_path, out):
    """Import adjudicated labels, dropping "unknown" records."""
    with open(log_path, encoding="utf-8") as fh:
        records = _data(labelgen.import_manual_labels, fh)
    _atomic_write(out, "".join(f"{r.doc_id}\t{r.label}\n" for r in records))
    click.echo(f"{len(records)} manual labels -> {out}")


@cli.command(name="filter")
@click.option("--run", "run_path", required=True, type=click.Path(exists=True))
@click.option("--percentiles", required=True, type=click.Path(exists=True))
@click.option("-t", "--threshold", "t", required=True, type=click.IntRange(0, 100))
@click.option("--default-pct", default=ranktransform.DEFAULT_MISSING_PERCENTILE,
              show_default=True, help="Percentile for unscored documents.")
@click.option("--out", required=True, type=click.Path())
def filter_cmd(run_path, percentiles, t, default_pct, out):
    """Brick-wall filter: drop documents in the spammiest t% of the corpus."""
    run = _data(treceval.parse_run, _read_text(run_path))
    table = _data(pipeline.read_percentiles, percentiles)
    annotated = ranktransform.annotate(run, table, default=default_pct)
    filtered = ranktransform.filter_run(annotated, t)
    _atomic_write(out, treceval.format_run(filtered, tag=filtered.run_id))
    click.echo(f"filtered at t={t} -> {out}")


@cli.command()
@click.option("--run", "run_path", required=True, type=click.Path(exists=True))
@click.option("--percentiles", required=True, type=click.Path(exists=True))
@click.option("--qrels", required=True, type=click.Path(exists=True),
              help="Training judgments for threshold optimization.")
@click.option("--depth", default=100, show_default=True,
              help="Rank depth of the learned threshold profile.")
@click.option("--default-pct", default=ranktransform.DEFAULT_MISSING_PERCENTILE,
              show_default=True)
@click.option("--out", required=True, type=click.Path())
def rerank(run_path, percentiles, qrels, depth, default_pct, out):
    """Learn per-rank thresholds on the judgments and rerank the run."""
    run = _data(treceval.parse_run, _read_text(run_path))
    table = _data(pipeline.read_percentiles, percentiles)
    judgments = _data(treceval.parse_judgments, _read_text(qrels))
    annotated = ranktransform.annotate(run, table, default=default_pct)
    profile = _data(ranktransform.optimize_thresholds, annotated, judgments, depth)
    reranked = ranktransform.rerank(annotated, profile)
    _atomic_write(out, treceval.format_run(reranked, tag=reranked.run_id))
    click.echo(f"reranked with depth-{depth} profile -> {out}")


@cli.command()
@click.option("--run", "run_paths", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--qrels", required=True, type=click.Path(exists=True))
@click.option("--percentiles", required=True, type=click.Path(exists=True))
@click.option("--grid", default="0,10,20,30,40,50,60,70,80,90", show_default=True,
              help="Comma-separated thresholds.")
@click.option("--seed", default=0, show_default=True, help="Random-control seed.")
@click.option("--default-pct", default=ranktransform.DEFAULT_MISSING_PERCENTILE,
              show_default=True)
@click.option("--out", required=True, type=click.Path())
def sweep(run_paths, qrels, percentiles, grid, seed, default_pct, out):
    """Mean estP@10 of each run at every grid threshold, plus a random control."""
    try:
        grid_values = [int(v) for v in grid.split(",") if v.strip() != ""]
    except ValueError:
        raise click.UsageError(f"bad grid {grid!r}")
    judgments = _data(treceval.parse_judgments, _read_text(qrels))
    table = _data(pipeline.read_percentiles, percentiles)
    annotated = [
        ranktransform.annotate(
            _data(treceval.parse_run, _read_text(p)), table, default=default_pct
        )
        for p in run_paths
    ]
    rows = _data(ranktransform.threshold_sweep, annotated, judgments,
                 grid_values, seed)
    _atomic_write(out, ranktransform.format_sweep(rows))
    click.echo(f"sweep over {len(grid_values)} thresholds -> {out}")


@cli.command(name="eval")
@click.option("--run", "run_path", required=True, type=click.Path(exists=True))
@click.option("--qrels", required=True, type=click.Path(exists=True))
@click.option("--metric", default=None,
              help="Print only this metric's mean (e.g. estP10).")
@click.option("--k", "ks", multiple=True, type=int, default=(10,),
              show_default=True, help="Cutoffs for the @k measures.")
@click.option("--depth", default=treceval.DEFAULT_DEPTH, show_default=True)
@click.option("--out", default=None, type=click.Path(), help="Report file.")
def eval_cmd(run_path, qrels, metric, ks, depth, out):
    """Evaluate a run against (possibly sampled) judgments."""
    run = _data(treceval.parse_run, _read_text(run_path))
    judgments = _data(treceval.parse_judgments, _read_text(qrels))
    if metric is not None and metric.startswith("estP"):
        ks = tuple(sorted(set(ks) | {int(metric[4:])}))
    report = _data(treceval.evaluate_run, run, judgments, ks=ks, depth=depth)
    if out:
        _atomic_write(out, treceval.format_report(run.run_id, report))
    if metric is not None:
        if metric not in report["all"]:
            raise click.UsageError(f"unknown metric {metric!r}")
        click.echo(f"{report['all'][metric]:.4f}")
    else:
        click.echo(treceval.format_report(run.run_id, report), nl=False)


@cli.command()
@click.option("--run", "run_path", required=True, type=click.Path(exists=True))
@click.option("--qrels", required=True, type=click.Path(exists=True))
@click.option("--percentiles", required=True, type=click.Path(exists=True))
@click.option("--depth", default=100, show_default=True)
@click.option("--k", "ks", multiple=True, type=int, default=(10, 30),
              show_default=True)
@click.option("--default-pct", default=ranktransform.DEFAULT_MISSING_PERCENTILE,
              show_default=True)
@click.option("--out", required=True, type=click.Path(), help="CV report file.")
@click.option("--reranked-out", default=None, type=click.Path(),
              help="Write the cross-validated reranked run here.")
def crossval(run_path, qrels, percentiles, depth, ks, default_pct, out,
             reranked_out):
    """Leave-one-topic-out threshold learning and reranking evaluation."""
    run = _data(treceval.parse_run, _read_text(run_path))
    judgments = _data(treceval.parse_judgments, _read_text(qrels))
    table = _data(pipeline.read_percentiles, percentiles)
    annotated = ranktransform.annotate(run, table, default=default_pct)
    result = _data(ranktransform.cross_validate, annotated, judgments, depth, ks)
    _atomic_write(out, ranktransform.format_crossval(result))
    if reranked_out:
        _atomic_write(
            reranked_out,
            treceval.format_run(result.reranked, tag=result.reranked.run_id),
        )
    click.echo(f"cross-validated {len(result.original_metrics)} topics -> {out}")


@cli.command()
@click.option("--warc", "warcs", required=True, multiple=True,
              type=click.Path(exists=True), help="Page source archive(s).")
@click.option("--data-dir", required=True, type=click.Path(),
              help="Adjudication store directory (sessions + judgment log).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8080, show_default=True)
def serve(warcs, data_dir, host, port):
    """Run the adjudication HTTP service over the given archives."""
    import uvicorn

    from webspam.adjudicator import AdjudicationStore, create_app

    pages = {}
    for path in warcs:
        for record in corpus.stream_warc(path):
            pages[record.doc_id] = record.content
    store = AdjudicationStore(data_dir, pages)
    uvicorn.run(create_app(store), host=host, port=port)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except DataError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Exit as exc:  # e.g. --help
        return exc.exit_code
    except click.exceptions.Abort:
        return 1


if __name__ == "__main__":
    sys.exit(main())
