"""End-to-end runs from one declarative config, with per-stage caching.

Stages run in order: build-store, extract, one compile per strategy, the
merged set, the stats report, and gold sampling.  Each stage digests its
inputs (file contents plus the config keys it depends on); when the digest
matches the previous run and the outputs are intact, the stage is skipped.
A failing stage moves its partial outputs to a quarantine directory and
aborts the run with the stage name.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import yaml

from . import dataset as ds
from .ingest import load_corpus, read_articles, write_corpus
from .records import RecordStore, build_store

logger = logging.getLogger(__name__)

GAZETTEER_KINDS = ("persons", "locations", "orgs", "occupations")


class ConfigError(Exception):
    """The run config failed validation before any work started."""


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    dump_path: Path
    pantheon_path: Path
    out_dir: Path
    wikidata_path: Optional[Path] = None
    strategies: tuple[str, ...] = ("normal", "coref", "skip")
    seed: int = 0
    gold_n: int = 100
    gazetteer_overrides: tuple[Path, ...] = ()
    worker_count: int = 1
    reference_date: Optional[datetime.date] = None
    occupation_variants: bool = False

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        base = Path(path).parent

        def resolve(key):
            value = doc.get(key)
            return (base / value).resolve() if value else None

        reference = doc.get("reference_date")
        if isinstance(reference, str):
            reference = datetime.date.fromisoformat(reference)
        return cls(
            dump_path=resolve("dump"),
            pantheon_path=resolve("pantheon"),
            wikidata_path=resolve("wikidata"),
            out_dir=resolve("out"),
            strategies=tuple(doc.get("strategies", ["normal", "coref", "skip"])),
            seed=int(doc.get("seed", 0)),
            gold_n=int(doc.get("gold_n", 100)),
            gazetteer_overrides=tuple(
                (base / p).resolve() for p in doc.get("gazetteer_overrides", [])
            ),
            worker_count=int(doc.get("workers", 1)),
            reference_date=reference,
            occupation_variants=bool(doc.get("occupation_variants", False)),
        )

    def validate(self) -> None:
        if self.dump_path is None or not Path(self.dump_path).exists():
            raise ConfigError(f"dump path not resolvable: {self.dump_path}")
        if self.pantheon_path is None or not Path(self.pantheon_path).exists():
            raise ConfigError(f"pantheon path not resolvable: {self.pantheon_path}")
        if self.wikidata_path is not None and not Path(self.wikidata_path).exists():
            raise ConfigError(f"wikidata path not resolvable: {self.wikidata_path}")
        for override in self.gazetteer_overrides:
            if not Path(override).exists():
                raise ConfigError(f"gazetteer override not resolvable: {override}")
            if not any(kind in Path(override).stem for kind in GAZETTEER_KINDS):
                raise ConfigError(
                    f"gazetteer override {override} must name its kind "
                    f"(one of {', '.join(GAZETTEER_KINDS)}) in the file name"
                )
        if self.out_dir is None:
            raise ConfigError("out directory is required")
        bad = set(self.strategies) - {"normal", "coref", "skip"}
        if bad or not self.strategies:
            raise ConfigError(f"strategies must be a non-empty subset of normal/coref/skip, got {self.strategies}")
        if self.gold_n < 0:
            raise ConfigError("gold_n must be >= 0")
        if self.worker_count < 1:
            raise ConfigError("worker_count must be >= 1")

    def gazetteer_extra(self) -> dict[str, list[str]]:
        extra: dict[str, list[str]] = {}
        for override in self.gazetteer_overrides:
            kind = next(k for k in GAZETTEER_KINDS if k in Path(override).stem)
            entries = [
                line.strip()
                for line in Path(override).read_text(encoding="utf-8").splitlines()
                if line.strip() and not line.startswith("#")
            ]
            extra.setdefault(kind, []).extend(entries)
        return extra

    def resolved_reference(self) -> datetime.date:
        return self.reference_date or datetime.date.today()


@dataclass
class StageResult:
    name: str
    status: str  # built | cached
    outputs: list[str] = field(default_factory=list)


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _sha256_tree(path: Path) -> str:
    if path.is_file():
        return _sha256_file(path)
    digest = hashlib.sha256()
    for child in sorted(path.rglob("*")):
        if child.is_file():
            digest.update(str(child.relative_to(path)).encode())
            digest.update(_sha256_file(child).encode())
    return digest.hexdigest()


class _StageRunner:
    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.cache_dir = out_dir / ".cache"
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def run(
        self,
        name: str,
        input_paths: list[Path],
        params: dict,
        outputs: list[str],
        build: Callable[[], None],
    ) -> StageResult:
        """Run one stage unless its inputs digest and outputs are unchanged."""
        payload = {
            "inputs": {str(p): _sha256_tree(Path(p)) for p in input_paths},
            "params": {k: str(v) for k, v in sorted(params.items())},
        }
        inputs_digest = hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()
        ).hexdigest()
        cache_file = self.cache_dir / f"{name}.json"

        if cache_file.exists():
            cached = json.loads(cache_file.read_text())
            if cached.get("inputs_digest") == inputs_digest and all(
                (self.out_dir / rel).exists()
                and _sha256_tree(self.out_dir / rel) == digest
                for rel, digest in cached.get("outputs", {}).items()
            ):
                return StageResult(name=name, status="cached", outputs=outputs)

        try:
            build()
        except Exception as exc:
            quarantine = self.out_dir / ".quarantine" / name
            if quarantine.exists():
                shutil.rmtree(quarantine)
            quarantine.mkdir(parents=True, exist_ok=True)
            for rel in outputs:
                target = self.out_dir / rel
                if target.exists():
                    target.rename(quarantine / Path(rel).name)
            raise StageError(name, exc) from exc

        cache_file.write_text(
            json.dumps(
                {
                    "inputs_digest": inputs_digest,
                    "outputs": {
                        rel: _sha256_tree(self.out_dir / rel)
                        for rel in outputs
                        if (self.out_dir / rel).exists()
                    },
                },
                indent=2,
            )
        )
        return StageResult(name=name, status="built", outputs=outputs)


def run(config: RunConfig) -> list[StageResult]:
    """Execute the full pipeline; returns one result per stage."""
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = _StageRunner(out)
    results: list[StageResult] = []
    reference = config.resolved_reference()
    config_digest = hashlib.sha256(
        json.dumps(
            {
                "seed": config.seed,
                "strategies": sorted(config.strategies),
                "reference": reference.isoformat(),
                "variants": config.occupation_variants,
            },
            sort_keys=True,
        ).encode()
    ).hexdigest()[:12]

    store_path = out / "store.jsonl"
    wikidata_inputs = [config.wikidata_path] if config.wikidata_path else []

    def build_store_stage() -> None:
        store, rejects = build_store(config.pantheon_path, config.wikidata_path)
        store.save(store_path)
        (out / "store_rejects.json").write_text(json.dumps(rejects, indent=2))

    results.append(
        runner.run(
            "build-store",
            [config.pantheon_path, *wikidata_inputs],
            {},
            ["store.jsonl", "store_rejects.json"],
            build_store_stage,
        )
    )

    corpus_dir = out / "corpus"

    def extract_stage() -> None:
        store = RecordStore.load(store_path)
        articles, missing = read_articles(
            config.dump_path, store.wiki_ids(), workers=config.worker_count
        )
        if corpus_dir.exists():
            shutil.rmtree(corpus_dir)
        write_corpus(articles, corpus_dir)
        (out / "missing_ids.txt").write_text(
            "".join(f"{m}\n" for m in missing), encoding="utf-8"
        )

    results.append(
        runner.run(
            "extract",
            [config.dump_path, store_path],
            {},
            ["corpus", "missing_ids.txt"],
            extract_stage,
        )
    )

    extra = config.gazetteer_extra()
    compiled: dict[str, Path] = {}
    for strategy in config.strategies:
        dataset_path = out / f"dataset_{strategy}.tsv"
        manifest_path = out / f"manifest_{strategy}.json"

        def compile_stage(strategy=strategy, dataset_path=dataset_path, manifest_path=manifest_path) -> None:
            store = RecordStore.load(store_path)
            articles = load_corpus(corpus_dir)
            instances = ds.compile_strategy(
                articles, store, strategy,
                seed=config.seed, reference=reference,
                workers=config.worker_count,
                allow_variants=config.occupation_variants,
                gazetteer_extra=extra,
            )
            ds.write_instances(instances, dataset_path)
            manifest = ds.stats(instances, strategy, config.seed, config_digest)
            manifest_path.write_text(manifest.to_json(), encoding="utf-8")

        results.append(
            runner.run(
                f"compile-{strategy}",
                [store_path, corpus_dir, *config.gazetteer_overrides],
                {
                    "seed": config.seed,
                    "strategy": strategy,
                    "reference": reference.isoformat(),
                    "variants": config.occupation_variants,
                },
                [dataset_path.name, manifest_path.name],
                compile_stage,
            )
        )
        compiled[strategy] = dataset_path

    if len(config.strategies) > 1:
        all_path = out / "dataset_all.tsv"

        def merge_stage() -> None:
            sets = [ds.read_instances(compiled[s]) for s in config.strategies]
            merged = ds.merge_all(sets)
            ds.write_instances(merged, all_path)
            manifest = ds.stats(merged, "all", config.seed, config_digest)
            (out / "manifest_all.json").write_text(manifest.to_json(), encoding="utf-8")

        results.append(
            runner.run(
                "merge-all",
                [compiled[s] for s in config.strategies],
                {},
                ["dataset_all.tsv", "manifest_all.json"],
                merge_stage,
            )
        )

    def stats_stage() -> None:
        columns = {}
        for strategy in config.strategies:
            manifest = ds.DatasetManifest.from_json(
                (out / f"manifest_{strategy}.json").read_text(encoding="utf-8")
            )
            columns[strategy] = manifest.counts
        (out / "stats_report.txt").write_text(
            ds.render_counts_table(columns), encoding="utf-8"
        )

    results.append(
        runner.run(
            "stats",
            [out / f"manifest_{s}.json" for s in config.strategies],
            {},
            ["stats_report.txt"],
            stats_stage,
        )
    )

    if config.gold_n > 0:
        def gold_stage() -> None:
            sets = {s: ds.read_instances(compiled[s]) for s in config.strategies}
            gold, shortfalls = ds.sample_gold(sets, config.gold_n, config.seed)
            ds.write_instances(gold, out / "gold_candidates.tsv")
            (out / "gold_shortfalls.json").write_text(
                json.dumps(shortfalls, indent=2), encoding="utf-8"
            )

        results.append(
            runner.run(
                "sample-gold",
                [compiled[s] for s in config.strategies],
                {"gold_n": config.gold_n, "seed": config.seed},
                ["gold_candidates.tsv", "gold_shortfalls.json"],
                gold_stage,
            )
        )

    return results
