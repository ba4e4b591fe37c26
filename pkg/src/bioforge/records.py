"""Person records merged from a Pantheon-style table and Wikidata entities.

The store is built once (single writer), persisted as a line-delimited JSON
file with a self-describing header, and is immutable afterwards so any number
of workers can read it.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional

logger = logging.getLogger(__name__)

STORE_FORMAT = "bioforge-store"
STORE_VERSION = 1

# Wikidata properties holding the family/education relations; overridable
# through the run config.
DEFAULT_RELATION_PROPERTIES = {
    "parents": ("P22", "P25"),
    "siblings": ("P3373",),
    "children": ("P40",),
    "educated_at": ("P69",),
}


class StoreError(Exception):
    """Raised for corrupted store files or broken record linkage."""


@dataclass(frozen=True)
class PartialDate:
    """A calendar date known down to day, month or only year precision."""

    year: int
    month: Optional[int] = None
    day: Optional[int] = None

    def __post_init__(self) -> None:
        if self.day is not None and self.month is None:
            raise ValueError("a day without a month is not a valid partial date")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")
        if self.day is not None and not 1 <= self.day <= 31:
            raise ValueError(f"day out of range: {self.day}")

    @property
    def precision(self) -> str:
        if self.day is not None:
            return "day"
        if self.month is not None:
            return "month"
        return "year"

    def isoformat(self) -> str:
        if self.day is not None:
            return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"
        if self.month is not None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}"

    def truncated(self, precision: str) -> "PartialDate":
        if precision == "year":
            return PartialDate(self.year)
        if precision == "month":
            return PartialDate(self.year, self.month)
        return self

    @classmethod
    def parse(cls, text: str) -> Optional["PartialDate"]:
        """Parse ``YYYY``, ``YYYY-MM`` or ``YYYY-MM-DD``; None if unparseable."""
        m = re.fullmatch(r"(\d{1,4})(?:-(\d{1,2})(?:-(\d{1,2}))?)?", text.strip())
        if not m:
            return None
        year = int(m.group(1))
        month = int(m.group(2)) if m.group(2) else None
        day = int(m.group(3)) if m.group(3) else None
        try:
            return cls(year, month, day)
        except ValueError:
            return None

    def __str__(self) -> str:
        return self.isoformat()


def dates_match(a: Optional[PartialDate], b: Optional[PartialDate]) -> bool:
    """Compare two partial dates at the coarser of their two precisions."""
    if a is None or b is None:
        return False
    order = {"year": 0, "month": 1, "day": 2}
    coarser = a.precision if order[a.precision] <= order[b.precision] else b.precision
    return a.truncated(coarser) == b.truncated(coarser)


@dataclass
class PersonRecord:
    """Structured facts about one person, keyed by Wikipedia and Wikidata IDs."""

    wiki_id: str
    wikidata_id: str
    full_name: str
    birthdate: Optional[PartialDate] = None
    deathdate: Optional[PartialDate] = None
    birthplace: Optional[str] = None
    deathplace: Optional[str] = None
    occupation: Optional[str] = None
    parents: list[str] = field(default_factory=list)
    siblings: list[str] = field(default_factory=list)
    children: list[str] = field(default_factory=list)
    educated_at: list[str] = field(default_factory=list)

    LIST_FIELDS = ("parents", "siblings", "children", "educated_at")

    def __post_init__(self) -> None:
        if not self.full_name:
            raise ValueError("full_name must be non-empty")
        if not self.wiki_id or not self.wikidata_id:
            raise ValueError("both wiki_id and wikidata_id are required")
        for attr in self.LIST_FIELDS:
            values = getattr(self, attr)
            if any(not v for v in values) or len(set(values)) != len(values):
                raise ValueError(f"{attr} entries must be non-empty and distinct")

    def to_json(self) -> str:
        doc = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, PartialDate):
                value = value.isoformat()
            doc[f.name] = value
        return json.dumps(doc, ensure_ascii=False, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "PersonRecord":
        doc = json.loads(line)
        for key in ("birthdate", "deathdate"):
            if doc.get(key):
                doc[key] = PartialDate.parse(doc[key])
        return cls(**doc)


# Column aliases accepted in the delimited person table.  Pantheon releases
# renamed several columns between versions, so ingest is tolerant.
_COLUMN_ALIASES = {
    "wiki_id": ("wiki_id", "en_curid", "curid", "wp_id", "wikipedia_id"),
    "wikidata_id": ("wikidata_id", "wd_id", "wikidata"),
    "full_name": ("full_name", "name"),
    "birthdate": ("birthdate", "birth_date"),
    "deathdate": ("deathdate", "death_date"),
    "birthplace": ("birthplace", "birth_place", "birthcity"),
    "deathplace": ("deathplace", "death_place", "deathcity"),
    "occupation": ("occupation",),
}


def _resolve_columns(header: Iterable[str]) -> dict[str, str]:
    lowered = {name.strip().lower(): name for name in header}
    mapping = {}
    for target, aliases in _COLUMN_ALIASES.items():
        for alias in aliases:
            if alias in lowered:
                mapping[target] = lowered[alias]
                break
    for required in ("wiki_id", "wikidata_id", "full_name"):
        if required not in mapping:
            raise StoreError(f"person table is missing a usable {required} column")
    return mapping


def load_pantheon(source) -> tuple[list[PersonRecord], list[dict]]:
    """Read a Pantheon-style CSV/TSV into partially populated records.

    Returns ``(records, rejects)``.  Rows missing either ID, or repeating an
    already-seen wiki_id, go to the rejects report; unparseable date cells are
    logged and left empty.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return load_pantheon(fh)

    first = source.readline()
    delimiter = "\t" if first.count("\t") >= first.count(",") else ","
    reader = csv.DictReader(io.StringIO(first + source.read()), delimiter=delimiter)
    columns = _resolve_columns(reader.fieldnames or [])

    records: list[PersonRecord] = []
    rejects: list[dict] = []
    seen: set[str] = set()
    for line_no, row in enumerate(reader, start=2):
        def cell(target: str) -> str:
            name = columns.get(target)
            return (row.get(name) or "").strip() if name else ""

        wiki_id, wikidata_id = cell("wiki_id"), cell("wikidata_id")
        if not wiki_id or not wikidata_id:
            rejects.append({"line": line_no, "reason": "missing id", "row": dict(row)})
            continue
        if wiki_id in seen:
            rejects.append({"line": line_no, "reason": "duplicate wiki_id", "row": dict(row)})
            continue

        record = PersonRecord(
            wiki_id=wiki_id,
            wikidata_id=wikidata_id,
            full_name=cell("full_name"),
            birthplace=cell("birthplace") or None,
            deathplace=cell("deathplace") or None,
            occupation=cell("occupation").casefold() or None,
        )
        for attr in ("birthdate", "deathdate"):
            raw = cell(attr)
            if not raw:
                continue
            parsed = PartialDate.parse(raw)
            if parsed is None:
                logger.warning("line %d: unparseable %s cell %r", line_no, attr, raw)
            else:
                setattr(record, attr, parsed)
        seen.add(wiki_id)
        records.append(record)
    return records, rejects


def _entity_labels(entity: Mapping) -> dict[str, str]:
    """Label map of one entity document ({lang: label}), both dump shapes."""
    labels = entity.get("labels") or {}
    out = {}
    for lang, value in labels.items():
        out[lang] = value["value"] if isinstance(value, Mapping) else value
    return out


def _claim_values(entity: Mapping, prop: str) -> list:
    """Target values of one property: literal strings or Q-id references."""
    claims = entity.get("claims") or {}
    values = []
    for claim in claims.get(prop, []):
        if isinstance(claim, str):
            values.append(claim)
            continue
        snak = claim.get("mainsnak", claim)
        value = snak.get("datavalue", {}).get("value", snak.get("value"))
        if isinstance(value, Mapping) and "id" in value:
            values.append(value["id"])
        elif isinstance(value, str):
            values.append(value)
    return values


def augment_from_wikidata(
    record: PersonRecord,
    entity: Mapping,
    labels: Optional[Mapping[str, str]] = None,
    properties: Optional[Mapping[str, tuple]] = None,
) -> PersonRecord:
    """Fill the family/education lists of ``record`` from its Wikidata entity.

    ``labels`` resolves referenced Q-ids to names (built from the dump subset
    by :func:`load_wikidata_entities`).  Claim values that are already plain
    strings are taken as labels directly.  Existing Pantheon fields are never
    overwritten, and repeated augmentation with the same entity is a no-op.
    """
    entity_id = entity.get("id")
    if entity_id != record.wikidata_id:
        raise StoreError(
            f"entity {entity_id!r} does not belong to record {record.wikidata_id!r}"
        )
    labels = labels or {}
    properties = properties or DEFAULT_RELATION_PROPERTIES
    for attr, props in properties.items():
        current = list(getattr(record, attr))
        for prop in props:
            for value in _claim_values(entity, prop):
                if re.fullmatch(r"Q\d+", value):
                    resolved = labels.get(value)
                    if not resolved:
                        logger.warning(
                            "no label for %s referenced by %s/%s; skipped",
                            value, record.wikidata_id, prop,
                        )
                        continue
                    value = resolved
                if value and value not in current:
                    current.append(value)
        setattr(record, attr, current)
    return record


def load_wikidata_entities(source) -> tuple[dict[str, Mapping], dict[str, str]]:
    """Load entities from a JSON file, JSON-lines file, or directory of either.

    Returns ``(entities by id, english label index)``; the label index covers
    every entity in the subset so family references resolve offline.
    """
    paths: list[Path]
    if isinstance(source, (str, Path)) and Path(source).is_dir():
        paths = sorted(p for p in Path(source).iterdir() if p.suffix == ".json")
    else:
        paths = [Path(source)]

    entities: dict[str, Mapping] = {}
    for path in paths:
        text = path.read_text(encoding="utf-8").strip()
        docs: list
        if text.startswith("["):
            docs = json.loads(text)
        else:
            docs = [json.loads(line) for line in text.splitlines() if line.strip()]
        for doc in docs:
            if isinstance(doc, Mapping) and doc.get("id"):
                entities[doc["id"]] = doc
    labels = {}
    for eid, doc in entities.items():
        label = _entity_labels(doc).get("en")
        if label:
            labels[eid] = label
    return entities, labels


class RecordStore:
    """Immutable lookup of person records by Wikipedia or Wikidata ID."""

    def __init__(self, records: Iterable[PersonRecord]):
        self._by_wiki: dict[str, PersonRecord] = {}
        self._by_wikidata: dict[str, PersonRecord] = {}
        for record in records:
            if record.wiki_id in self._by_wiki:
                raise StoreError(f"duplicate wiki_id {record.wiki_id!r}")
            if record.wikidata_id in self._by_wikidata:
                raise StoreError(f"duplicate wikidata_id {record.wikidata_id!r}")
            self._by_wiki[record.wiki_id] = record
            self._by_wikidata[record.wikidata_id] = record

    def __len__(self) -> int:
        return len(self._by_wiki)

    def __iter__(self) -> Iterator[PersonRecord]:
        return iter(self._by_wiki[k] for k in sorted(self._by_wiki))

    def lookup(self, wiki_id: str) -> Optional[PersonRecord]:
        return self._by_wiki.get(wiki_id)

    def lookup_wikidata(self, wikidata_id: str) -> Optional[PersonRecord]:
        return self._by_wikidata.get(wikidata_id)

    def wiki_ids(self) -> set[str]:
        return set(self._by_wiki)

    def occupation_lexicon(self) -> set[str]:
        return {r.occupation for r in self._by_wiki.values() if r.occupation}

    def save(self, path) -> None:
        """Write the store; sorted records and canonical JSON keep the file
        byte-deterministic, so save/load/save round-trips exactly."""
        header = json.dumps(
            {"format": STORE_FORMAT, "version": STORE_VERSION, "count": len(self)},
            sort_keys=True, separators=(",", ":"),
        )
        lines = [header] + [r.to_json() for r in self]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RecordStore":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise StoreError(f"{path}: empty store file")
        header = json.loads(lines[0])
        if header.get("format") != STORE_FORMAT:
            raise StoreError(f"{path}: not a {STORE_FORMAT} file")
        if header.get("version") != STORE_VERSION:
            raise StoreError(f"{path}: unsupported store version {header.get('version')}")
        records = [PersonRecord.from_json(line) for line in lines[1:] if line.strip()]
        if len(records) != header.get("count"):
            raise StoreError(
                f"{path}: header says {header.get('count')} records, found {len(records)}"
            )
        return cls(records)


def build_store(
    pantheon_path,
    wikidata_source=None,
    properties: Optional[Mapping[str, tuple]] = None,
) -> tuple[RecordStore, list[dict]]:
    """Full store build: Pantheon ingest plus Wikidata augmentation."""
    records, rejects = load_pantheon(pantheon_path)
    if wikidata_source is not None:
        entities, labels = load_wikidata_entities(wikidata_source)
        for record in records:
            entity = entities.get(record.wikidata_id)
            if entity is not None:
                augment_from_wikidata(record, entity, labels, properties)
    return RecordStore(records), rejects
