"""Shared fixtures: the worked-example texts, records, and a synthetic corpus."""

from __future__ import annotations

import datetime
import random
from pathlib import Path
from xml.sax.saxutils import escape

import pytest

from bioforge.ingest import Article, ArticleRef, SentenceText
from bioforge.records import PartialDate, PersonRecord, RecordStore

REFERENCE_DATE = datetime.date(2019, 4, 20)


def pytest_runtest_logreport(report):
    # Failed acceptance criteria still announce themselves on one line;
    # passing ones print their own PASS line with detail.
    if report.when == "call" and report.failed and "test_acceptance" in report.nodeid:
        print(f"\n[ACCEPTANCE] FAIL {report.nodeid.split('::', 1)[1]}")

SHAKESPEARE_SENT0 = "William Shakespeare was born and raised in Warwickshire."
SHAKESPEARE_SENT1 = (
    "At the age of 18, he married Anne Hathaway, with whom he had three children: "
    "Susanna Hall and twins Hamnet Shakespeare and Judith Quiney."
)
BAYNTON_SENTENCE = (
    "Henry Baynton (23 September 1892 in Warwickshire – 2 January 1951 in London) "
    "was a British Shakespearean actor of the early 20th century."
)


@pytest.fixture
def shakespeare_record() -> PersonRecord:
    return PersonRecord(
        wiki_id="32897",
        wikidata_id="Q692",
        full_name="William Shakespeare",
        birthplace="Warwickshire",
        occupation="playwright",
        children=["Susanna Hall", "Hamnet Shakespeare", "Judith Quiney"],
    )


@pytest.fixture
def baynton_record() -> PersonRecord:
    return PersonRecord(
        wiki_id="19038557",
        wikidata_id="Q5720614",
        full_name="Henry Baynton",
        birthdate=PartialDate(1892, 9, 23),
        deathdate=PartialDate(1951, 1, 2),
        birthplace="Warwickshire",
        occupation="actor",
    )


@pytest.fixture
def shakespeare_article(shakespeare_record) -> Article:
    ref = ArticleRef(wiki_id=shakespeare_record.wiki_id, title="William Shakespeare")
    return Article(
        ref=ref,
        sentences=[SentenceText(0, SHAKESPEARE_SENT0), SentenceText(1, SHAKESPEARE_SENT1)],
        raw_char_count=len(SHAKESPEARE_SENT0) + len(SHAKESPEARE_SENT1),
    )


@pytest.fixture
def baynton_article(baynton_record) -> Article:
    ref = ArticleRef(wiki_id=baynton_record.wiki_id, title="Henry Baynton")
    return Article(ref=ref, sentences=[SentenceText(0, BAYNTON_SENTENCE)], raw_char_count=len(BAYNTON_SENTENCE))


@pytest.fixture
def example_store(shakespeare_record, baynton_record) -> RecordStore:
    return RecordStore([shakespeare_record, baynton_record])


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------

FIRST_NAMES = [
    "Alden", "Berta", "Casimir", "Delia", "Edmund", "Fenella", "Gregor",
    "Harriet", "Ivo", "Jorunn", "Kaspar", "Lavinia", "Milo",
]
LAST_NAMES = [
    "Ashford", "Bellweather", "Cranmore", "Dunmore", "Eastvale", "Farrowby",
    "Gracewell", "Hollowmere", "Instone", "Joskin", "Kettleworth",
]
PLACES = [
    "Greltham", "Marrowfield", "Ostenbrook", "Pellworth", "Quillhaven",
    "Rastenburg", "Silverford", "Thornmere",
]
OCCUPATIONS = ["painter", "botanist", "engineer", "composer", "historian", "printer"]
ORGS = [
    "Hartfield College", "Wexley Institute", "Dornmore Academy",
    "Saint Calder University",
]
NOISE_NAMES = [
    "Petra Mollin", "Viktor Hale", "Ines Calloway", "Rufus Blackwood",
    "Selma York", "Otto Brandt",
]


def _date_surface(date: PartialDate) -> str:
    months = ["January", "February", "March", "April", "May", "June", "July",
              "August", "September", "October", "November", "December"]
    return f"{date.day} {months[date.month - 1]} {date.year}"


def make_person(rng: random.Random, serial: int) -> PersonRecord:
    first = rng.choice(FIRST_NAMES)
    last = rng.choice(LAST_NAMES)
    birth = PartialDate(rng.randint(1820, 1930), rng.randint(1, 12), rng.randint(1, 28))
    death = PartialDate(birth.year + rng.randint(40, 70), rng.randint(1, 12), rng.randint(1, 28))
    record = PersonRecord(
        wiki_id=str(1000 + serial),
        wikidata_id=f"Q{9000 + serial}",
        full_name=f"{first} {last}",
        birthdate=birth,
        deathdate=death,
        birthplace=rng.choice(PLACES),
        deathplace=rng.choice(PLACES),
        occupation=rng.choice(OCCUPATIONS),
    )
    def relative() -> str:
        while True:
            name = f"{rng.choice(FIRST_NAMES)} {last}"
            if name != record.full_name:
                return name

    if rng.random() < 0.7:
        record.children = [relative()]
    if rng.random() < 0.6:
        record.parents = list(dict.fromkeys([relative(), relative()]))
    if rng.random() < 0.5:
        record.siblings = [relative()]
    if rng.random() < 0.8:
        record.educated_at = [rng.choice(ORGS)]
    return record


def article_wikitext(rng: random.Random, record: PersonRecord) -> str:
    """Raw wikitext whose cleaned form exercises every matcher rule."""
    first, last = record.full_name.split(" ", 1)
    born = _date_surface(record.birthdate)
    died = _date_surface(record.deathdate)
    lead = (
        f"'''{record.full_name}''' ({born} – {died}) was a renowned "
        f"{record.occupation} from [[{record.birthplace}]].<ref>Almanac</ref>"
    )
    body = [lead]
    if record.educated_at:
        body.append(f"He studied the craft at [[{record.educated_at[0]}]] for several years.")
    if record.parents:
        body.append(
            f"{last} was raised by {record.parents[0]} in {record.birthplace} together with the family."
        )
    if record.children:
        body.append(f"Later in life {record.full_name} had one child, {record.children[0]}.")
    if record.siblings:
        body.append(f"His sibling {record.siblings[0]} remained in {record.deathplace} all along.")
    body.append(
        f"{record.full_name} befriended {rng.choice(NOISE_NAMES)} during the long years abroad."
    )
    body.append(f"He died in {record.deathplace} on {died} after a short illness.")
    # Occupation attribution bait: the same occupation word next to another person.
    body.append(
        f"{last} praised {rng.choice(NOISE_NAMES)}, the finest {record.occupation} of the age."
    )
    # First-match discipline bait: the birth date surfaces twice in one sentence.
    body.append(
        f"{last} was born on {born} and the parish ledger likewise records {born} in its margin."
    )
    # Near-miss bait: partial child name and a foreign occupation mention.
    if record.children:
        child_first = record.children[0].split(" ")[0]
        body.append(
            f"A thorough essay about {child_first} appeared in the town gazette that year."
        )
    other_occ = rng.choice([o for o in OCCUPATIONS if o != record.occupation])
    body.append(
        f"The estate was painted by {rng.choice(NOISE_NAMES)}, a celebrated {other_occ} of the region."
    )
    noise = "{{Infobox person|name=" + record.full_name + "}}\n== Early life ==\n"
    return noise + " ".join(body) + "\n\n[[Category:People]]\n"


def dump_xml(pages: list[tuple[str, str, str]]) -> str:
    """A MediaWiki export document with the given (id, title, wikitext) pages."""
    parts = [
        '<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" xml:lang="en">',
        "<siteinfo><sitename>testwiki</sitename></siteinfo>",
    ]
    for page_id, title, text in pages:
        parts.append(
            "<page>"
            f"<title>{escape(title)}</title><ns>0</ns><id>{page_id}</id>"
            f"<revision><id>{page_id}99</id><text>{escape(text)}</text></revision>"
            "</page>"
        )
    parts.append("</mediawiki>")
    return "\n".join(parts)


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory) -> dict:
    """25 synthetic articles with matching records, written as dump+tables."""
    rng = random.Random(20190420)
    records = [make_person(rng, i) for i in range(25)]
    pages = [
        (r.wiki_id, r.full_name, article_wikitext(rng, r))
        for r in records
    ]
    root = tmp_path_factory.mktemp("mini_corpus")
    dump_path = root / "dump.xml"
    dump_path.write_text(dump_xml(pages), encoding="utf-8")

    pantheon_path = root / "pantheon.csv"
    rows = ["wiki_id,wikidata_id,name,birthdate,deathdate,birthplace,deathplace,occupation"]
    for r in records:
        rows.append(
            f"{r.wiki_id},{r.wikidata_id},{r.full_name},{r.birthdate},{r.deathdate},"
            f"{r.birthplace},{r.deathplace},{r.occupation.upper()}"
        )
    pantheon_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    wikidata_path = root / "wikidata.jsonl"
    import json

    lines = []
    for r in records:
        claims = {}
        if r.parents:
            claims["P22"] = [r.parents[0]]
            if len(r.parents) > 1:
                claims["P25"] = [r.parents[1]]
        if r.siblings:
            claims["P3373"] = list(r.siblings)
        if r.children:
            claims["P40"] = list(r.children)
        if r.educated_at:
            claims["P69"] = list(r.educated_at)
        lines.append(json.dumps({"id": r.wikidata_id, "labels": {"en": r.full_name}, "claims": claims}))
    wikidata_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    store = RecordStore(records)
    return {
        "records": records,
        "store": store,
        "dump": dump_path,
        "pantheon": pantheon_path,
        "wikidata": wikidata_path,
        "root": root,
    }
