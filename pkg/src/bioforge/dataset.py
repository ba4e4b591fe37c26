"""Balance, deduplicate, sample and serialize labelled instances.

All sampling uses Python's Mersenne Twister (``random.Random``) seeded from
the run seed, with candidate pools pre-sorted, so identical inputs and seed
reproduce identical datasets regardless of upstream parallelism.

File format: tab-separated, UTF-8, LF endings, one header row.  The
``markers`` variant is the same file with <e1>/<e2> rewritten to [E1]/[/E1]
and [E2]/[/E2] for classifier tooling.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .ingest import Article, ArticleRef
from .matcher import (
    LABEL_ORDER,
    STRATEGIES,
    LabelledInstance,
    RelationLabel,
    TARGETED_LABELS,
    apply_strategy,
    validate_instance,
)
from .records import RecordStore
from .tagger import Gazetteers

logger = logging.getLogger(__name__)

NATIVE_COLUMNS = (
    "instance_id", "marked_text", "label", "e1_surface", "e2_surface",
    "person_slot", "wiki_id", "sentence_index", "strategy", "title",
)

_MARKER_MAP = [("<e1>", "[E1]"), ("</e1>", "[/E1]"), ("<e2>", "[E2]"), ("</e2>", "[/E2]")]


@dataclass
class DatasetManifest:
    strategy: str
    counts: dict[RelationLabel, int]
    seed: int
    config_digest: str
    created: str

    def __post_init__(self) -> None:
        missing = [l for l in LABEL_ORDER if l not in self.counts]
        if missing:
            raise ValueError(f"counts must cover all ten labels, missing {missing}")
        targeted_total = sum(self.counts[l] for l in TARGETED_LABELS)
        if self.counts[RelationLabel.OTHER] > targeted_total:
            raise ValueError("other class exceeds the nine targeted relations combined")

    def to_json(self) -> str:
        return json.dumps(
            {
                "strategy": self.strategy,
                "counts": {l.value: self.counts[l] for l in LABEL_ORDER},
                "total": sum(self.counts.values()),
                "seed": self.seed,
                "config_digest": self.config_digest,
                "created": self.created,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        doc = json.loads(text)
        return cls(
            strategy=doc["strategy"],
            counts={RelationLabel(k): v for k, v in doc["counts"].items()},
            seed=doc["seed"],
            config_digest=doc["config_digest"],
            created=doc["created"],
        )


def count_labels(instances: Iterable[LabelledInstance]) -> dict[RelationLabel, int]:
    counts = {label: 0 for label in LABEL_ORDER}
    for instance in instances:
        counts[instance.label] += 1
    return counts


def stats(
    instances: Sequence[LabelledInstance],
    strategy: str = "all",
    seed: int = 0,
    config_digest: str = "",
) -> DatasetManifest:
    return DatasetManifest(
        strategy=strategy,
        counts=count_labels(instances),
        seed=seed,
        config_digest=config_digest,
        created=datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    )


def render_counts_table(columns: Mapping[str, Mapping[RelationLabel, int]]) -> str:
    """Relations-per-set report, one column per dataset."""
    names = list(columns)
    label_width = max(len(l.value) for l in LABEL_ORDER) + 2
    widths = [max(len(n), 9) for n in names]
    lines = ["".ljust(label_width) + "  ".join(n.rjust(w) for n, w in zip(names, widths))]
    for label in LABEL_ORDER:
        cells = [f"{columns[n].get(label, 0):,}".rjust(w) for n, w in zip(names, widths)]
        lines.append(label.value.ljust(label_width) + "  ".join(cells))
    totals = [f"{sum(columns[n].values()):,}".rjust(w) for n, w in zip(names, widths)]
    lines.append("Total".ljust(label_width) + "  ".join(totals))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Balancing, merging, sampling
# ---------------------------------------------------------------------------

def _derived_rng(seed: int, *scope: str) -> random.Random:
    payload = "|".join([str(seed), *scope]).encode("utf-8")
    return random.Random(int.from_bytes(hashlib.sha256(payload).digest()[:8], "big"))


def balance_other(
    targeted: Sequence[LabelledInstance],
    other_pool: Sequence[LabelledInstance],
    seed: int,
) -> list[LabelledInstance]:
    """Sample the zero class down to the size of the nine targeted relations
    combined; short pools are kept whole with a warning."""
    targeted_ids = {i.instance_id for i in targeted}
    if targeted_ids & {i.instance_id for i in other_pool}:
        raise ValueError("targeted and other pools must be disjoint by instance_id")
    want = min(len(other_pool), len(targeted))
    if want < len(targeted) and len(other_pool) < len(targeted):
        logger.warning(
            "other pool (%d) smaller than targeted relations (%d); keeping all",
            len(other_pool), len(targeted),
        )
    pool = sorted(other_pool, key=lambda i: i.sort_key())
    sample = _derived_rng(seed, "balance").sample(pool, want)
    merged = list(targeted) + sample
    merged.sort(key=lambda i: i.sort_key())
    return merged


def merge_all(sets: Sequence[Sequence[LabelledInstance]]) -> list[LabelledInstance]:
    """Union of the per-strategy sets; duplicates created by the combination
    collapse on the content hash, keeping the first strategy's copy."""
    merged: dict[str, LabelledInstance] = {}
    for instances in sets:
        for instance in instances:
            merged.setdefault(instance.instance_id, instance)
    out = list(merged.values())
    out.sort(key=lambda i: i.sort_key())
    return out


def sample_gold(
    sets: Mapping[str, Sequence[LabelledInstance]],
    n_per_relation: int,
    seed: int,
) -> tuple[list[LabelledInstance], list[dict]]:
    """Uniform per-(set, relation) sample for manual review.

    Every cell draws without replacement with its own derived seed, so cells
    are independent and the result does not depend on mapping order.
    Shortfalls (cells with fewer candidates than requested) are reported."""
    if n_per_relation < 1:
        raise ValueError("n_per_relation must be >= 1")
    gold: list[LabelledInstance] = []
    shortfalls: list[dict] = []
    for strategy in sorted(sets):
        instances = sets[strategy]
        by_label: dict[RelationLabel, list[LabelledInstance]] = {l: [] for l in LABEL_ORDER}
        for instance in instances:
            by_label[instance.label].append(instance)
        for label in LABEL_ORDER:
            candidates = sorted(by_label[label], key=lambda i: i.sort_key())
            take = min(n_per_relation, len(candidates))
            if take < n_per_relation:
                shortfalls.append(
                    {"set": strategy, "label": label.value,
                     "requested": n_per_relation, "available": len(candidates)}
                )
            rng = _derived_rng(seed, "gold", strategy, label.value)
            gold.extend(rng.sample(candidates, take))
    gold.sort(key=lambda i: (i.strategy, i.sort_key()))
    return gold, shortfalls


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _to_markers(marked_text: str) -> str:
    for native, marker in _MARKER_MAP:
        marked_text = marked_text.replace(native, marker)
    return marked_text


def _from_markers(marked_text: str) -> str:
    for native, marker in _MARKER_MAP:
        marked_text = marked_text.replace(marker, native)
    return marked_text


def instance_to_row(instance: LabelledInstance, style: str = "native") -> list[str]:
    marked = instance.marked_text if style == "native" else _to_markers(instance.marked_text)
    return [
        instance.instance_id, marked, instance.label.value,
        instance.e1_surface, instance.e2_surface, instance.person_slot,
        instance.article.wiki_id, str(instance.sentence_index),
        instance.strategy, instance.article.title,
    ]


def instance_from_row(row: Mapping[str, str]) -> LabelledInstance:
    marked = row["marked_text"]
    if "[E1]" in marked and "<e1>" not in marked:
        marked = _from_markers(marked)
    return LabelledInstance(
        instance_id=row["instance_id"],
        article=ArticleRef(wiki_id=row["wiki_id"], title=row.get("title") or row["wiki_id"]),
        sentence_index=int(row["sentence_index"]),
        marked_text=marked,
        label=RelationLabel(row["label"]),
        e1_surface=row["e1_surface"],
        e2_surface=row["e2_surface"],
        person_slot=row["person_slot"],
        strategy=row["strategy"],
    )


def write_instances(
    instances: Iterable[LabelledInstance],
    path,
    style: str = "native",
) -> None:
    if style not in ("native", "markers"):
        raise ValueError(f"unknown export style {style!r}")
    lines = ["\t".join(NATIVE_COLUMNS)]
    for instance in instances:
        validate_instance(instance)
        row = instance_to_row(instance, style)
        for cell in row:
            if "\t" in cell or "\n" in cell:
                raise ValueError(f"cell would corrupt the TSV: {cell!r}")
        lines.append("\t".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_instances(path) -> list[LabelledInstance]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        return []
    header = lines[0].split("\t")
    out = []
    for line in lines[1:]:
        if not line:
            continue
        row = dict(zip(header, line.split("\t")))
        out.append(instance_from_row(row))
    return out


# ---------------------------------------------------------------------------
# Compilation of one strategy over a corpus
# ---------------------------------------------------------------------------

def compile_strategy(
    articles: Sequence[Article],
    store: RecordStore,
    strategy: str,
    seed: int,
    reference: Optional[datetime.date] = None,
    workers: int = 1,
    allow_variants: bool = False,
    gazetteer_extra: Optional[Mapping[str, Iterable[str]]] = None,
) -> list[LabelledInstance]:
    """Label every article under one strategy and balance the zero class.

    The per-article work is pure, so it can fan out over workers; results are
    re-merged in ascending (wiki_id, sentence_index, label) order before the
    seeded balancing step, keeping output independent of worker count."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    lexicon = store.occupation_lexicon()
    jobs = []
    for article in articles:
        record = store.lookup(article.ref.wiki_id)
        if record is None:
            continue
        gaz = Gazetteers.for_record(record, occupation_lexicon=lexicon, extra=gazetteer_extra)
        jobs.append((article, record, gaz))

    def work(job):
        article, record, gaz = job
        return apply_strategy(article, record, strategy, gaz,
                              reference=reference, allow_variants=allow_variants)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]

    by_id: dict[str, LabelledInstance] = {}
    for instances in results:
        for instance in instances:
            validate_instance(instance)
            by_id.setdefault(instance.instance_id, instance)
    ordered = sorted(by_id.values(), key=lambda i: i.sort_key())

    targeted = [i for i in ordered if i.label is not RelationLabel.OTHER]
    other_pool = [i for i in ordered if i.label is RelationLabel.OTHER]
    balanced = balance_other(targeted, other_pool, seed=_strategy_seed(seed, strategy))

    counts = count_labels(balanced)
    expected_other = min(len(other_pool), len(targeted))
    if counts[RelationLabel.OTHER] != expected_other:
        raise AssertionError(
            f"balancing invariant violated: other={counts[RelationLabel.OTHER]}, "
            f"expected {expected_other}"
        )
    return balanced


def _strategy_seed(seed: int, strategy: str) -> int:
    payload = f"{seed}|compile|{strategy}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")
