"""Align tagged sentences with person records and emit labelled instances.

A sentence first has to pass the person gate: it must contain a PERSON span
naming the article's main person (full name with titles stripped, first+last,
or last name only).  Only then are the per-relation matchers applied:

* birthdate/deathdate: first DATE span equal to the record date, compared at
  the coarser of the two precisions; later matches are discarded.
* birthplace/deathplace: first LOCATION span exactly equal to the record
  place (case-sensitive after NFC + whitespace collapse).
* ofParent/sibling/hasChild/educatedAt: full-string matches only; every
  distinct record value may produce one instance per sentence.
* occupation: first complete match, and only when the mention is attributable
  to the main person rather than some other person in the sentence.

Whatever entity spans remain unconsumed, and do not merely restate one of the
record's structured values, pair up with the person span as candidates for
the "other" class.
"""

from __future__ import annotations

import datetime
import enum
import hashlib
import re
from dataclasses import dataclass
from typing import Optional

from .ingest import Article, ArticleRef, wiki_id_sort_key
from .records import PartialDate, PersonRecord, dates_match
from .tagger import (
    EntitySpan,
    Gazetteers,
    TaggedSentence,
    normalize_space,
    person_name_forms,
    resolve_corefs,
    strip_titles,
    tag,
)

STRATEGIES = ("normal", "coref", "skip")


class RelationLabel(str, enum.Enum):
    """The ten relation classes; values are the on-disk names, byte-exact."""

    BIRTHDATE = "birthdate"
    BIRTHPLACE = "birthplace"
    DEATHDATE = "deathdate"
    DEATHPLACE = "deathplace"
    OCCUPATION = "occupation"
    OF_PARENT = "ofParent"
    EDUCATED_AT = "educatedAt"
    HAS_CHILD = "hasChild"
    SIBLING = "sibling"
    OTHER = "other"

    def __str__(self) -> str:
        return self.value


LABEL_ORDER = tuple(RelationLabel)
TARGETED_LABELS = tuple(l for l in RelationLabel if l is not RelationLabel.OTHER)

_E_TAG_RE = re.compile(r"</?e[12]>")


@dataclass(frozen=True)
class LabelledInstance:
    """One sentence with its two argument spans marked and a relation label."""

    instance_id: str
    article: ArticleRef
    sentence_index: int
    marked_text: str
    label: RelationLabel
    e1_surface: str
    e2_surface: str
    person_slot: str  # "e1" or "e2": which marked span is the main person
    strategy: str

    def sort_key(self):
        return (wiki_id_sort_key(self.article.wiki_id), self.sentence_index,
                self.label.value, self.marked_text)


def insert_markers(text: str, first: EntitySpan, second: EntitySpan) -> str:
    """Wrap two non-overlapping spans in <e1>/<e2>, earlier span as e1."""
    if second.start < first.start:
        first, second = second, first
    if second.start < first.end:
        raise ValueError(
            f"overlapping spans [{first.start},{first.end}) and "
            f"[{second.start},{second.end}) violate the tagger contract"
        )
    return (
        text[:first.start] + "<e1>" + text[first.start:first.end] + "</e1>"
        + text[first.end:second.start]
        + "<e2>" + text[second.start:second.end] + "</e2>"
        + text[second.end:]
    )


def strip_markers(marked_text: str) -> tuple[str, tuple[int, int], tuple[int, int]]:
    """Invert :func:`insert_markers`; returns (text, e1 range, e2 range)."""
    for token in ("<e1>", "</e1>", "<e2>", "</e2>"):
        if marked_text.count(token) != 1:
            raise ValueError(f"expected exactly one {token} in marked text")
    out = []
    cursor = 0
    removed = 0
    positions = {}
    for m in _E_TAG_RE.finditer(marked_text):
        out.append(marked_text[cursor:m.start()])
        positions[m.group(0)] = m.start() - removed
        removed += len(m.group(0))
        cursor = m.end()
    out.append(marked_text[cursor:])
    e1 = (positions["<e1>"], positions["</e1>"])
    e2 = (positions["<e2>"], positions["</e2>"])
    if not (e1[0] <= e1[1] and e2[0] <= e2[1]):
        raise ValueError("markers are not properly nested")
    if not e1[1] <= e2[0]:
        raise ValueError("e1 must close before e2 opens")
    return "".join(out), e1, e2


def make_instance_id(
    wiki_id: str,
    sentence_index: int,
    label: RelationLabel,
    e1: tuple[int, int],
    e2: tuple[int, int],
    text: str,
) -> str:
    """Stable content hash; identical sentence/label/span content from
    different strategies collides on purpose so the combined set deduplicates."""
    payload = "\x1f".join(
        [wiki_id, str(sentence_index), label.value,
         f"{e1[0]}:{e1[1]}", f"{e2[0]}:{e2[1]}", text]
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def mark_entities(
    sentence: TaggedSentence,
    person_span: EntitySpan,
    value_span: EntitySpan,
    label: RelationLabel,
    strategy: str = "normal",
) -> LabelledInstance:
    """Build the marked instance; e1/e2 numbering is positional, the person
    slot records which of the two is the article's person."""
    marked = insert_markers(sentence.text, person_span, value_span)
    person_is_first = person_span.start < value_span.start
    first, second = (person_span, value_span) if person_is_first else (value_span, person_span)
    instance_id = make_instance_id(
        sentence.article.wiki_id, sentence.index, label,
        (first.start, first.end), (second.start, second.end), sentence.text,
    )
    return LabelledInstance(
        instance_id=instance_id,
        article=sentence.article,
        sentence_index=sentence.index,
        marked_text=marked,
        label=label,
        e1_surface=first.surface,
        e2_surface=second.surface,
        person_slot="e1" if person_is_first else "e2",
        strategy=strategy,
    )


# ---------------------------------------------------------------------------
# Person gate
# ---------------------------------------------------------------------------

def match_person(sentence: TaggedSentence, record: PersonRecord) -> Optional[EntitySpan]:
    """First PERSON span naming the main person: full name (titles stripped),
    else first+last, else last name only."""
    forms = person_name_forms(record.full_name)
    persons = [s for s in sentence.spans if s.kind == "PERSON"]
    for form in forms:
        for span in persons:
            if strip_titles(normalize_space(span.surface)) == form:
                return span
    return None


# ---------------------------------------------------------------------------
# Per-relation matchers
# ---------------------------------------------------------------------------

def match_date_relation(
    sentence: TaggedSentence,
    person_span: EntitySpan,
    record: PersonRecord,
    which: RelationLabel,
    strategy: str = "normal",
) -> Optional[LabelledInstance]:
    assert which in (RelationLabel.BIRTHDATE, RelationLabel.DEATHDATE)
    target = record.birthdate if which is RelationLabel.BIRTHDATE else record.deathdate
    if target is None:
        return None
    for span in sentence.spans:
        if span.kind != "DATE" or span is person_span or not span.normalized:
            continue
        if dates_match(PartialDate.parse(span.normalized), target):
            return mark_entities(sentence, person_span, span, which, strategy)
    return None


def match_place_relation(
    sentence: TaggedSentence,
    person_span: EntitySpan,
    record: PersonRecord,
    which: RelationLabel,
    strategy: str = "normal",
) -> Optional[LabelledInstance]:
    assert which in (RelationLabel.BIRTHPLACE, RelationLabel.DEATHPLACE)
    target = record.birthplace if which is RelationLabel.BIRTHPLACE else record.deathplace
    if not target:
        return None
    target = normalize_space(target)
    for span in sentence.spans:
        if span.kind != "LOCATION" or span is person_span:
            continue
        if normalize_space(span.surface) == target:
            return mark_entities(sentence, person_span, span, which, strategy)
    return None


_NAME_RELATION_FIELDS = {
    RelationLabel.OF_PARENT: ("parents", "PERSON"),
    RelationLabel.SIBLING: ("siblings", "PERSON"),
    RelationLabel.HAS_CHILD: ("children", "PERSON"),
    RelationLabel.EDUCATED_AT: ("educated_at", "ORG"),
}


def match_name_relation(
    sentence: TaggedSentence,
    person_span: EntitySpan,
    record: PersonRecord,
    which: RelationLabel,
    strategy: str = "normal",
) -> list[LabelledInstance]:
    """Full-string matches only; each record value can yield one instance."""
    attr, kind = _NAME_RELATION_FIELDS[which]
    instances = []
    for value in getattr(record, attr):
        value_norm = normalize_space(value)
        for span in sentence.spans:
            if span.kind != kind or span is person_span:
                continue
            if normalize_space(span.surface) == value_norm:
                instances.append(mark_entities(sentence, person_span, span, which, strategy))
                break
    return instances


def occupation_matches(surface: str, occupation: str, allow_variants: bool = False) -> bool:
    folded = surface.casefold()
    occ = occupation.casefold()
    if folded == occ:
        return True
    if not allow_variants:
        return False
    variants = {occ + "s", occ + "es"}
    if occ.endswith("or"):
        variants.add(occ[:-2] + "ress")  # actor -> actress
    if occ.endswith("er"):
        variants.add(occ[:-2] + "ress")  # waiter -> waitress
    return folded in variants


def _attributed_person(sentence: TaggedSentence, span: EntitySpan) -> Optional[EntitySpan]:
    """The PERSON span an occupation mention most plausibly belongs to: the
    nearest one by character gap, preferring the preceding on ties."""
    best = None
    best_key = None
    for candidate in sentence.spans:
        if candidate.kind != "PERSON":
            continue
        if candidate.end <= span.start:
            key = (span.start - candidate.end, 0)
        elif candidate.start >= span.end:
            key = (candidate.start - span.end, 1)
        else:
            continue
        if best_key is None or key < best_key:
            best, best_key = candidate, key
    return best


def match_occupation(
    sentence: TaggedSentence,
    person_span: EntitySpan,
    record: PersonRecord,
    strategy: str = "normal",
    allow_variants: bool = False,
) -> Optional[LabelledInstance]:
    """First complete occupation match attributable to the main person.

    Mentions whose nearest person is somebody else are skipped: they describe
    that other person, a failure mode the gold review exposed."""
    if not record.occupation:
        return None
    forms = set(person_name_forms(record.full_name))
    for span in sentence.spans:
        if span.kind != "OCCUPATION" or span is person_span:
            continue
        if not occupation_matches(span.surface, record.occupation, allow_variants):
            continue
        owner = _attributed_person(sentence, span)
        if owner is not None and strip_titles(normalize_space(owner.surface)) not in forms:
            continue
        return mark_entities(sentence, person_span, span, RelationLabel.OCCUPATION, strategy)
    return None


# ---------------------------------------------------------------------------
# The zero class
# ---------------------------------------------------------------------------

def _structured_values(record: PersonRecord) -> dict[str, set]:
    values = {
        "names": {normalize_space(v) for v in person_name_forms(record.full_name)},
        "relatives": {
            normalize_space(v)
            for v in record.parents + record.siblings + record.children + record.educated_at
        },
        "places": {
            normalize_space(v) for v in (record.birthplace, record.deathplace) if v
        },
        "occupation": {record.occupation.casefold()} if record.occupation else set(),
        "dates": {d for d in (record.birthdate, record.deathdate) if d},
    }
    values["names"].add(normalize_space(record.full_name))
    return values


def _restates_record(span: EntitySpan, values: dict[str, set]) -> bool:
    surface = normalize_space(span.surface)
    if strip_titles(surface) in values["names"] or surface in values["names"]:
        return True
    if surface in values["relatives"] or surface in values["places"]:
        return True
    if surface.casefold() in values["occupation"]:
        return True
    if span.kind == "DATE" and span.normalized:
        parsed = PartialDate.parse(span.normalized)
        if parsed and any(dates_match(parsed, d) for d in values["dates"]):
            return True
    return False


def collect_other(
    sentence: TaggedSentence,
    person_span: EntitySpan,
    record: PersonRecord,
    matched: set[EntitySpan],
    strategy: str = "normal",
) -> list[LabelledInstance]:
    """Candidate zero-class pairs: person x every span no targeted relation
    consumed, unless the span just restates a structured value of the record."""
    values = _structured_values(record)
    instances = []
    for span in sentence.spans:
        if span is person_span or span in matched:
            continue
        if _restates_record(span, values):
            continue
        instances.append(
            mark_entities(sentence, person_span, span, RelationLabel.OTHER, strategy)
        )
    return instances


# ---------------------------------------------------------------------------
# Whole-article strategies
# ---------------------------------------------------------------------------

def match_sentence(
    sentence: TaggedSentence,
    record: PersonRecord,
    strategy: str = "normal",
    allow_variants: bool = False,
) -> list[LabelledInstance]:
    """Run the gate and all ten matchers over one tagged sentence."""
    person_span = match_person(sentence, record)
    if person_span is None:
        return []
    instances: list[LabelledInstance] = []
    consumed: set[EntitySpan] = set()

    def note(instance: Optional[LabelledInstance]) -> None:
        if instance is None:
            return
        instances.append(instance)
        _, e1, e2 = strip_markers(instance.marked_text)
        value_range = e2 if instance.person_slot == "e1" else e1
        for span in sentence.spans:
            if (span.start, span.end) == value_range:
                consumed.add(span)

    note(match_date_relation(sentence, person_span, record, RelationLabel.BIRTHDATE, strategy))
    note(match_date_relation(sentence, person_span, record, RelationLabel.DEATHDATE, strategy))
    note(match_place_relation(sentence, person_span, record, RelationLabel.BIRTHPLACE, strategy))
    note(match_place_relation(sentence, person_span, record, RelationLabel.DEATHPLACE, strategy))
    note(match_occupation(sentence, person_span, record, strategy, allow_variants))
    for which in (RelationLabel.OF_PARENT, RelationLabel.SIBLING,
                  RelationLabel.HAS_CHILD, RelationLabel.EDUCATED_AT):
        for instance in match_name_relation(sentence, person_span, record, which, strategy):
            note(instance)
    instances.extend(collect_other(sentence, person_span, record, consumed, strategy))
    return instances


def apply_strategy(
    article: Article,
    record: PersonRecord,
    strategy: str,
    gazetteers: Optional[Gazetteers] = None,
    reference: Optional[datetime.date] = None,
    allow_variants: bool = False,
) -> list[LabelledInstance]:
    """Label one article under normal, coref or skip processing."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    gaz = gazetteers or Gazetteers.for_record(record)
    if strategy == "coref":
        article = resolve_corefs(article, record, gaz)
    sentences = article.sentences
    if strategy == "skip":
        sentences = [s for s in sentences if s.index >= 1]
    instances: list[LabelledInstance] = []
    for sentence in sentences:
        tagged = tag(sentence, record, gaz, article.ref,
                     reference=reference, strategy_origin=strategy)
        instances.extend(match_sentence(tagged, record, strategy, allow_variants))
    return instances


def validate_instance(instance: LabelledInstance, source_text: Optional[str] = None) -> None:
    """Marker well-formedness check applied to every emitted instance."""
    text, e1, e2 = strip_markers(instance.marked_text)
    if source_text is not None and text != source_text:
        raise ValueError("stripping markers does not reproduce the source sentence")
    if text[e1[0]:e1[1]] != instance.e1_surface:
        raise ValueError("e1 surface does not match marked range")
    if text[e2[0]:e2[1]] != instance.e2_surface:
        raise ValueError("e2 surface does not match marked range")
    if instance.person_slot not in ("e1", "e2"):
        raise ValueError(f"bad person_slot {instance.person_slot!r}")
    if instance.strategy not in STRATEGIES:
        raise ValueError(f"bad strategy {instance.strategy!r}")
