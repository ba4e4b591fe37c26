"""Gazetteer/rule entity tagging, date normalization, and pronoun coref.

The tagger produces exactly the span kinds the relation matcher consumes:
PERSON, LOCATION and ORG spans from gazetteers built out of the record store,
OCCUPATION spans from the store's occupation lexicon, DATE spans from a fixed
surface grammar, and low-confidence PERSON/LOCATION candidates from a
capitalized-sequence fallback that exists to diversify the "other" pool.
Externally produced tags can be imported instead of using the built-in rules.
"""

from __future__ import annotations

import datetime
import json
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .ingest import Article, ArticleRef, SentenceText, load_wordlist
from .records import PartialDate, PersonRecord

logger = logging.getLogger(__name__)

KINDS = ("PERSON", "LOCATION", "ORG", "DATE", "OCCUPATION")
# Tie-break priority at equal match length.
_KIND_RANK = {"PERSON": 0, "LOCATION": 1, "ORG": 2, "OCCUPATION": 3, "DATE": 4}

DEFAULT_TITLES = load_wordlist("titles.txt")
FALLBACK_STOPWORDS = frozenset(
    w.casefold() for w in load_wordlist("fallback_stopwords.txt")
)
_LOCATIVE_PREPOSITIONS = frozenset({"in", "at", "near", "from", "into", "around"})


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    kind: str
    surface: str
    normalized: Optional[str] = None
    low_confidence: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span offsets [{self.start}, {self.end})")
        if self.kind not in KINDS:
            raise ValueError(f"unknown span kind {self.kind!r}")


@dataclass
class TaggedSentence:
    article: ArticleRef
    index: int
    text: str
    spans: list[EntitySpan] = field(default_factory=list)
    strategy_origin: str = "normal"

    def __post_init__(self) -> None:
        if self.strategy_origin == "skip" and self.index < 1:
            raise ValueError("skip strategy never produces sentence index 0")
        for span in self.spans:
            if span.end > len(self.text):
                raise ValueError("span exceeds sentence bounds")
            if self.text[span.start:span.end] != span.surface:
                raise ValueError("span surface does not equal the sentence slice")
        starts = [s.start for s in self.spans]
        if starts != sorted(starts):
            raise ValueError("spans must be sorted by start offset")
        for a, b in zip(self.spans, self.spans[1:]):
            if b.start < a.end:
                raise ValueError("spans must not overlap")


def normalize_space(text: str) -> str:
    return re.sub(r"\s+", " ", unicodedata.normalize("NFC", text)).strip()


def strip_titles(name: str, titles: frozenset[str] = DEFAULT_TITLES) -> str:
    """Drop leading honorifics ("Sir", "Dr.", ...) from a person name."""
    lowered = {t.casefold() for t in titles}
    tokens = normalize_space(name).split(" ")
    while len(tokens) > 1 and tokens[0].rstrip(".").casefold() in lowered:
        tokens = tokens[1:]
    return " ".join(tokens)


def person_name_forms(full_name: str, titles: frozenset[str] = DEFAULT_TITLES) -> list[str]:
    """Accepted surface forms, strongest first: full name (titles stripped),
    first+last, last name only."""
    stripped = strip_titles(full_name, titles)
    tokens = stripped.split(" ")
    forms = [stripped]
    if len(tokens) > 2:
        forms.append(f"{tokens[0]} {tokens[-1]}")
    if len(tokens) > 1:
        forms.append(tokens[-1])
    seen: set[str] = set()
    return [f for f in forms if f and not (f in seen or seen.add(f))]


# ---------------------------------------------------------------------------
# Date grammar
# ---------------------------------------------------------------------------

_MONTHS = {
    name.casefold(): i + 1
    for i, name in enumerate(
        ["January", "February", "March", "April", "May", "June", "July",
         "August", "September", "October", "November", "December"]
    )
}
_MONTHS.update({
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6, "jul": 7, "aug": 8,
    "sep": 9, "sept": 9, "oct": 10, "nov": 11, "dec": 12,
})
_MONTH_PATTERN = "|".join(sorted(_MONTHS, key=len, reverse=True))

_DATE_PATTERNS = [
    # 23 September 1892 / 3rd Feb. 2020
    re.compile(
        rf"(?<!\d)(?P<day>\d{{1,2}})(?:st|nd|rd|th)?\s+(?P<month>{_MONTH_PATTERN})\.?,?\s+(?P<year>\d{{3,4}})(?!\d)",
        re.IGNORECASE,
    ),
    # September 23, 1892
    re.compile(
        rf"\b(?P<month>{_MONTH_PATTERN})\.?\s+(?P<day>\d{{1,2}})(?:st|nd|rd|th)?,?\s+(?P<year>\d{{3,4}})(?!\d)",
        re.IGNORECASE,
    ),
    # April 1564
    re.compile(
        rf"\b(?P<month>{_MONTH_PATTERN})\.?,?\s+(?P<year>\d{{3,4}})(?!\d)",
        re.IGNORECASE,
    ),
    # ISO 1892-09-23 / 1892-09
    re.compile(r"(?<![\d-])(?P<year>\d{4})-(?P<monthnum>\d{2})(?:-(?P<day>\d{2}))?(?![\d-])"),
    # bare year
    re.compile(r"(?<![\d-])(?P<year>[12]\d{3})(?![\d-])"),
    # relative to the processing date
    re.compile(r"\b(?P<relative>today|tomorrow|yesterday)\b", re.IGNORECASE),
]


def _date_from_match(m: re.Match, reference: datetime.date) -> Optional[PartialDate]:
    groups = m.groupdict()
    if groups.get("relative"):
        shift = {"today": 0, "tomorrow": 1, "yesterday": -1}[groups["relative"].casefold()]
        resolved = reference + datetime.timedelta(days=shift)
        return PartialDate(resolved.year, resolved.month, resolved.day)
    year = int(groups["year"])
    month = None
    if groups.get("month"):
        month = _MONTHS[groups["month"].casefold().rstrip(".")]
    elif groups.get("monthnum"):
        month = int(groups["monthnum"])
    day = int(groups["day"]) if groups.get("day") else None
    try:
        if day is not None:
            datetime.date(year, month, day)  # real calendar validation
            return PartialDate(year, month, day)
        return PartialDate(year, month)
    except ValueError:
        return None


def normalize_date(surface: str, reference: datetime.date) -> Optional[PartialDate]:
    """Normalize one date surface form; None when outside the grammar.

    Recognizes day-month-year, month-day-year, month-year, bare year, ISO,
    and today/tomorrow/yesterday resolved against ``reference``.
    """
    text = surface.strip()
    for pattern in _DATE_PATTERNS:
        m = pattern.fullmatch(text)
        if m:
            return _date_from_match(m, reference)
    return None


def _date_candidates(text: str, reference: datetime.date) -> list[EntitySpan]:
    candidates = []
    for pattern in _DATE_PATTERNS:
        for m in pattern.finditer(text):
            parsed = _date_from_match(m, reference)
            if parsed is None:
                continue
            candidates.append(
                EntitySpan(
                    start=m.start(), end=m.end(), kind="DATE",
                    surface=m.group(0), normalized=parsed.isoformat(),
                )
            )
    return candidates


# ---------------------------------------------------------------------------
# Gazetteers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gazetteers:
    """Entity lexicons the rule tagger matches against, all word-bounded."""

    persons: frozenset[str] = frozenset()
    locations: frozenset[str] = frozenset()
    orgs: frozenset[str] = frozenset()
    occupations: frozenset[str] = frozenset()

    @classmethod
    def for_record(
        cls,
        record: PersonRecord,
        occupation_lexicon: Iterable[str] = (),
        extra: Optional[Mapping[str, Iterable[str]]] = None,
        titles: frozenset[str] = DEFAULT_TITLES,
    ) -> "Gazetteers":
        persons = set(person_name_forms(record.full_name, titles))
        persons.add(normalize_space(record.full_name))
        for relative in record.parents + record.siblings + record.children:
            persons.add(normalize_space(relative))
        locations = {normalize_space(p) for p in (record.birthplace, record.deathplace) if p}
        orgs = {normalize_space(o) for o in record.educated_at}
        occupations = {o.casefold() for o in occupation_lexicon}
        if record.occupation:
            occupations.add(record.occupation.casefold())
        extra = extra or {}
        persons.update(extra.get("persons", ()))
        locations.update(extra.get("locations", ()))
        orgs.update(extra.get("orgs", ()))
        occupations.update(v.casefold() for v in extra.get("occupations", ()))
        return cls(
            persons=frozenset(p for p in persons if p),
            locations=frozenset(locations),
            orgs=frozenset(orgs),
            occupations=frozenset(occupations),
        )


def _word_bounded(text: str, start: int, end: int) -> bool:
    before = text[start - 1] if start > 0 else " "
    after = text[end] if end < len(text) else " "
    return not (before.isalnum() or before == "_") and not (after.isalnum() or after == "_")


def _gazetteer_candidates(
    text: str, entries: Iterable[str], kind: str, ignore_case: bool = False
) -> list[EntitySpan]:
    flags = re.IGNORECASE if ignore_case else 0
    candidates = []
    for entry in entries:
        for m in re.finditer(re.escape(entry), text, flags):
            if not _word_bounded(text, m.start(), m.end()):
                continue
            surface = m.group(0)
            normalized = surface.casefold() if kind == "OCCUPATION" else None
            candidates.append(
                EntitySpan(start=m.start(), end=m.end(), kind=kind,
                           surface=surface, normalized=normalized)
            )
    return candidates


# ---------------------------------------------------------------------------
# Capitalized-sequence fallback
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[^\W\d_][\w’'.-]*")


def _trim_token(text: str, start: int, end: int) -> int:
    """Exclude possessive suffixes and trailing punctuation from a token."""
    token = text[start:end]
    if token.endswith(("'s", "’s")):
        end -= 2
        token = token[:-2]
    if "." not in token[:-1]:
        while end > start and text[end - 1] in ".'-’":
            end -= 1
    return end


def _candidate_token(token: str) -> bool:
    return token[0].isupper() and token.rstrip(".'-’").casefold() not in FALLBACK_STOPWORDS


def _fallback_candidates(text: str, occupation_starts: set[int]) -> list[EntitySpan]:
    """Low-confidence PERSON/LOCATION candidates: runs of two or more
    capitalized tokens outside the gazetteers.

    Single capitalized tokens are too ambiguous without a learned model and
    are skipped, as are runs that merely premodify an occupation word
    ("a British Shakespearean actor")."""
    tokens = [(m.start(), m.end(), m.group(0)) for m in _TOKEN_RE.finditer(text)]
    candidates = []
    i, n = 0, len(tokens)
    while i < n:
        if not _candidate_token(tokens[i][2]):
            i += 1
            continue
        j = i
        while (
            j + 1 < n
            and _candidate_token(tokens[j + 1][2])
            and text[tokens[j][1]:tokens[j + 1][0]].strip() == ""
        ):
            j += 1
        premodifies_occupation = (
            j + 1 < n
            and text[tokens[j][1]:tokens[j + 1][0]].strip() == ""
            and tokens[j + 1][0] in occupation_starts
        )
        if j > i and not premodifies_occupation:
            start = tokens[i][0]
            end = _trim_token(text, tokens[j][0], tokens[j][1])
            if end > start:
                preceding = None
                if i > 0 and text[tokens[i - 1][1]:start].strip() == "":
                    preceding = tokens[i - 1][2]
                kind = (
                    "LOCATION"
                    if preceding and preceding.casefold() in _LOCATIVE_PREPOSITIONS
                    else "PERSON"
                )
                candidates.append(
                    EntitySpan(start=start, end=end, kind=kind,
                               surface=text[start:end], low_confidence=True)
                )
        i = j + 1
    return candidates


# ---------------------------------------------------------------------------
# Tagging
# ---------------------------------------------------------------------------

def _select_spans(candidates: list[EntitySpan]) -> list[EntitySpan]:
    """Longest-match-first, left-to-right, non-overlapping selection.

    Equal-length ties prefer gazetteer over fallback candidates, then the
    PERSON > LOCATION > ORG > OCCUPATION > DATE kind priority."""
    ordered = sorted(
        candidates,
        key=lambda s: (s.start, -(s.end - s.start), s.low_confidence, _KIND_RANK[s.kind]),
    )
    accepted: list[EntitySpan] = []
    for span in ordered:
        if any(span.start < other.end and other.start < span.end for other in accepted):
            continue
        accepted.append(span)
    accepted.sort(key=lambda s: s.start)
    return accepted


def tag(
    sentence: SentenceText,
    record: PersonRecord,
    gazetteers: Gazetteers,
    article: Optional[ArticleRef] = None,
    reference: Optional[datetime.date] = None,
    strategy_origin: str = "normal",
) -> TaggedSentence:
    """Tag one sentence with typed, non-overlapping entity spans."""
    reference = reference or datetime.date.today()
    text = sentence.text
    candidates = []
    candidates += _gazetteer_candidates(text, gazetteers.persons, "PERSON")
    candidates += _gazetteer_candidates(text, gazetteers.locations, "LOCATION")
    candidates += _gazetteer_candidates(text, gazetteers.orgs, "ORG")
    candidates += _gazetteer_candidates(text, gazetteers.occupations, "OCCUPATION", ignore_case=True)
    candidates += _date_candidates(text, reference)
    occupation_starts = {c.start for c in candidates if c.kind == "OCCUPATION"}
    candidates += _fallback_candidates(text, occupation_starts)
    spans = _select_spans(candidates)
    ref = article or ArticleRef(wiki_id="?", title="?")
    return TaggedSentence(
        article=ref, index=sentence.index, text=text,
        spans=spans, strategy_origin=strategy_origin,
    )


# ---------------------------------------------------------------------------
# Imported external tags
# ---------------------------------------------------------------------------

def import_tags(
    articles: Iterable[Article],
    path,
) -> tuple[list[TaggedSentence], list[dict]]:
    """Attach externally produced spans; invalid rows are rejected with line
    numbers and a message. Rows are JSONL:
    {wiki_id, sentence_index, start, end, kind, surface, normalized?}."""
    sentences: dict[tuple[str, int], TaggedSentence] = {}
    for article in articles:
        for s in article.sentences:
            sentences[(article.ref.wiki_id, s.index)] = TaggedSentence(
                article=article.ref, index=s.index, text=s.text, spans=[]
            )
    rejected: list[dict] = []

    def reject(line_no: int, reason: str) -> None:
        rejected.append({"line": line_no, "reason": reason})
        logger.warning("import_tags line %d rejected: %s", line_no, reason)

    rows: list[tuple[int, dict]] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append((line_no, json.loads(line)))
        except json.JSONDecodeError as exc:
            reject(line_no, f"bad JSON: {exc}")

    for line_no, row in rows:
        key = (str(row.get("wiki_id")), row.get("sentence_index"))
        target = sentences.get(key)
        if target is None:
            reject(line_no, f"unknown sentence {key}")
            continue
        start, end = row.get("start"), row.get("end")
        if not isinstance(start, int) or not isinstance(end, int) or not 0 <= start < end <= len(target.text):
            reject(line_no, f"offsets [{start}, {end}) out of range")
            continue
        if row.get("kind") not in KINDS:
            reject(line_no, f"unknown kind {row.get('kind')!r}")
            continue
        slice_ = target.text[start:end]
        if slice_ != row.get("surface"):
            reject(line_no, f"surface mismatch: row has {row.get('surface')!r}, sentence has {slice_!r}")
            continue
        if any(start < s.end and s.start < end for s in target.spans):
            reject(line_no, "overlaps a previously imported span")
            continue
        target.spans.append(
            EntitySpan(start=start, end=end, kind=row["kind"],
                       surface=slice_, normalized=row.get("normalized"))
        )

    for ts in sentences.values():
        ts.spans.sort(key=lambda s: s.start)
    return [sentences[k] for k in sorted(sentences, key=lambda k: (k[0], k[1]))], rejected


# ---------------------------------------------------------------------------
# Heuristic coreference substitution
# ---------------------------------------------------------------------------

_PRONOUN_RE = re.compile(r"\b(he|she|him|his|her|hers)\b", re.IGNORECASE)
_POSSESSIVE = {"his", "hers"}


def _is_possessive(pronoun: str, following: str) -> bool:
    lowered = pronoun.casefold()
    if lowered in _POSSESSIVE:
        return True
    # "her" is possessive when a head word follows ("her work"), an object
    # otherwise ("praised her.").
    if lowered == "her":
        next_word = following.lstrip()
        return bool(next_word) and (next_word[0].isalnum() or next_word[0] == "_")
    return False


def _resolve_sentence(text: str, full_name: str, protected: Sequence[EntitySpan]) -> str:
    out = []
    cursor = 0
    for m in _PRONOUN_RE.finditer(text):
        if any(m.start() < s.end and s.start < m.end() for s in protected):
            continue
        possessive = _is_possessive(m.group(0), text[m.end():])
        replacement = full_name + ("'s" if possessive else "")
        # Never butt the name against an existing copy of itself.
        before = text[:m.start()].rstrip()
        after = text[m.end():].lstrip()
        if before.endswith(full_name) or after.startswith(full_name):
            continue
        out.append(text[cursor:m.start()])
        out.append(replacement)
        cursor = m.end()
    out.append(text[cursor:])
    return "".join(out)


def resolve_corefs(
    article: Article,
    record: PersonRecord,
    gazetteers: Optional[Gazetteers] = None,
) -> Article:
    """Replace third-person singular pronouns with the article's main person.

    Possessives gain apostrophe-s; replacements never land inside a gazetteer
    span and a replaced region is never replaced again; the result stays free
    of back-to-back copies of the name."""
    gaz = gazetteers or Gazetteers.for_record(record)
    name = normalize_space(strip_titles(record.full_name))
    resolved = []
    for sentence in article.sentences:
        tagged = tag(sentence, record, gaz, article.ref)
        new_text = _resolve_sentence(sentence.text, name, tagged.spans)
        resolved.append(SentenceText(index=sentence.index, text=new_text))
    return Article(ref=article.ref, sentences=resolved, raw_char_count=article.raw_char_count)
