"""Command-line entry points for every pipeline stage."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import dataset as ds
from . import metrics as mt
from . import pipeline as pl
from .ingest import load_corpus, read_articles, write_corpus
from .records import RecordStore, build_store


@click.group()
def main() -> None:
    """Compile and evaluate biographical relation-extraction datasets."""


@main.command("build-store")
@click.option("--pantheon", required=True, type=click.Path(exists=True))
@click.option("--wikidata", type=click.Path(exists=True), default=None,
              help="Entity JSON/JSONL file or directory of .json files.")
@click.option("--out", "out_path", required=True, type=click.Path())
def build_store_cmd(pantheon, wikidata, out_path):
    """Merge the person table and Wikidata entities into a record store."""
    store, rejects = build_store(pantheon, wikidata)
    store.save(out_path)
    rejects_path = Path(out_path).with_suffix(".rejects.json")
    rejects_path.write_text(json.dumps(rejects, indent=2), encoding="utf-8")
    click.echo(f"wrote {len(store)} records to {out_path} ({len(rejects)} rejected rows)")


@main.command("extract")
@click.option("--dump", required=True, type=click.Path(exists=True))
@click.option("--records", "store_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--workers", default=1, show_default=True)
def extract_cmd(dump, store_path, out_dir, workers):
    """Extract, clean and segment the articles named by the record store."""
    store = RecordStore.load(store_path)
    articles, missing = read_articles(dump, store.wiki_ids(), workers=workers)
    write_corpus(articles, out_dir)
    missing_path = Path(out_dir) / "missing_ids.txt"
    missing_path.write_text("".join(f"{m}\n" for m in missing), encoding="utf-8")
    click.echo(f"extracted {len(articles)} articles to {out_dir}; {len(missing)} wanted ids missing")


@main.command("compile")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--strategy", required=True,
              type=click.Choice(["normal", "coref", "skip", "all"]))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--style", type=click.Choice(["native", "markers"]), default="native",
              show_default=True)
@click.option("--reference-date", default=None,
              help="Processing date for relative date forms (YYYY-MM-DD).")
@click.option("--workers", default=1, show_default=True)
def compile_cmd(store_path, corpus_dir, strategy, seed, out_dir, style, reference_date, workers):
    """Label the corpus under one strategy (or all three merged)."""
    import datetime

    store = RecordStore.load(store_path)
    articles = load_corpus(corpus_dir)
    reference = datetime.date.fromisoformat(reference_date) if reference_date else None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    strategies = ["normal", "coref", "skip"] if strategy == "all" else [strategy]
    compiled = {}
    for name in strategies:
        instances = ds.compile_strategy(
            articles, store, name, seed=seed, reference=reference, workers=workers
        )
        compiled[name] = instances
        path = out / f"dataset_{name}.tsv"
        ds.write_instances(instances, path, style=style)
        manifest = ds.stats(instances, name, seed, "")
        (out / f"manifest_{name}.json").write_text(manifest.to_json(), encoding="utf-8")
        click.echo(f"{name}: {sum(manifest.counts.values())} instances -> {path}")
    if strategy == "all":
        merged = ds.merge_all([compiled[n] for n in strategies])
        path = out / "dataset_all.tsv"
        ds.write_instances(merged, path, style=style)
        manifest = ds.stats(merged, "all", seed, "")
        (out / "manifest_all.json").write_text(manifest.to_json(), encoding="utf-8")
        click.echo(f"all: {len(merged)} instances -> {path}")


@main.command("stats")
@click.option("--in", "dataset_paths", required=True, multiple=True,
              type=click.Path(exists=True),
              help="Dataset file(s); repeat the flag for a multi-column table.")
def stats_cmd(dataset_paths):
    """Per-relation counts, one column per dataset."""
    columns = {}
    for path in dataset_paths:
        instances = ds.read_instances(path)
        name = Path(path).stem.replace("dataset_", "")
        columns[name] = ds.count_labels(instances)
    click.echo(ds.render_counts_table(columns), nl=False)


@main.command("sample-gold")
@click.option("--dataset", "dataset_paths", required=True, multiple=True,
              type=click.Path(exists=True),
              help="Per-strategy dataset files to sample from.")
@click.option("--n", "n_per_relation", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def sample_gold_cmd(dataset_paths, n_per_relation, seed, out_path):
    """Draw the per-(set, relation) sample for manual annotation."""
    sets = {}
    for path in dataset_paths:
        instances = ds.read_instances(path)
        name = Path(path).stem.replace("dataset_", "")
        sets[name] = instances
    gold, shortfalls = ds.sample_gold(sets, n_per_relation, seed)
    ds.write_instances(gold, out_path)
    click.echo(f"sampled {len(gold)} instances -> {out_path}")
    for fall in shortfalls:
        click.echo(
            f"shortfall: {fall['set']}/{fall['label']} has {fall['available']} < {fall['requested']}",
            err=True,
        )


def _load_labels(path: str) -> tuple[list[str], list[str] | None]:
    """Returns (labels, instance ids or None) from plain or native files."""
    text = Path(path).read_text(encoding="utf-8")
    first = text.splitlines()[0] if text.strip() else ""
    if "\t" in first and "instance_id" in first.split("\t"):
        header = first.split("\t")
        column = "gold_label" if "gold_label" in header else "label"
        labels, ids = [], []
        for line in text.splitlines()[1:]:
            if not line.strip():
                continue
            row = dict(zip(header, line.split("\t")))
            labels.append(row[column])
            ids.append(row["instance_id"])
        return labels, ids
    return mt.labels_from_lines(text), None


def _aligned_labels(pred_path: str, gold_path: str) -> tuple[list[str], list[str]]:
    pred, pred_ids = _load_labels(pred_path)
    gold, gold_ids = _load_labels(gold_path)
    if pred_ids is not None and gold_ids is not None:
        gold_map = dict(zip(gold_ids, gold))
        pred_map = dict(zip(pred_ids, pred))
        common = [iid for iid in gold_ids if iid in pred_map]
        if not common:
            raise click.ClickException("no shared instance ids between the two files")
        return [pred_map[i] for i in common], [gold_map[i] for i in common]
    if len(pred) != len(gold):
        raise click.ClickException(
            f"label files differ in length: {len(pred)} vs {len(gold)}"
        )
    return pred, gold


@main.command("evaluate")
@click.option("--pred", required=True, type=click.Path(exists=True))
@click.option("--gold", required=True, type=click.Path(exists=True))
@click.option("--style", type=click.Choice(["fixed", "tsv"]), default="fixed",
              show_default=True)
def evaluate_cmd(pred, gold, style):
    """Per-relation precision/recall/F1 of automatic labels against gold."""
    pred_labels, gold_labels = _aligned_labels(pred, gold)
    report = mt.compute_metrics(pred_labels, gold_labels)
    click.echo(mt.render_report(report, style=style), nl=False)


@main.command("kappa")
@click.option("--a", "a_path", required=True, type=click.Path(exists=True))
@click.option("--b", "b_path", required=True, type=click.Path(exists=True))
def kappa_cmd(a_path, b_path):
    """Cohen's kappa between two annotators' label files."""
    a_labels, b_labels = _aligned_labels(a_path, b_path)
    report = mt.cohen_kappa(a_labels, b_labels)
    click.echo(
        f"kappa {report.kappa:.4f} (po {report.observed_agreement:.4f}, "
        f"pe {report.expected_agreement:.4f}, n {report.n})"
    )


@main.command("serve")
@click.option("--dataset", required=True, type=click.Path(exists=True),
              help="Gold candidate file produced by sample-gold.")
@click.option("--log", "log_path", required=True, type=click.Path(),
              help="Append-only decision log (created when absent).")
@click.option("--store", "store_path", type=click.Path(exists=True), default=None)
@click.option("--ui", "ui_dir", type=click.Path(), default=None,
              help="Static UI asset directory mounted at /ui/.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8470, show_default=True)
def serve_cmd(dataset, log_path, store_path, ui_dir, host, port):
    """Run the annotation HTTP API (and UI when assets are present)."""
    from .server import serve_annotation

    serve_annotation(dataset, log_path, store_path=store_path, ui_dir=ui_dir,
                     host=host, port=port)


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def run_cmd(config_path):
    """Execute the full pipeline from a YAML config."""
    config = pl.RunConfig.from_file(config_path)
    try:
        results = pl.run(config)
    except pl.ConfigError as exc:
        raise click.ClickException(str(exc))
    except pl.StageError as exc:
        raise click.ClickException(str(exc))
    for result in results:
        click.echo(f"{result.name}: {result.status}")


if __name__ == "__main__":
    sys.exit(main())
