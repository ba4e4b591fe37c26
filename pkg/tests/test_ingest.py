"""Dump extraction, wikitext cleaning and sentence segmentation tests."""

import bz2
import io
import tracemalloc

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bioforge.ingest import (
    DumpFormatError,
    Segmenter,
    clean_wikitext,
    extract_articles,
    read_articles,
    segment,
    wiki_id_sort_key,
    write_corpus,
    load_corpus,
)

from conftest import SHAKESPEARE_SENT0, SHAKESPEARE_SENT1, dump_xml

SHAKESPEARE_TEXT = SHAKESPEARE_SENT0 + " " + SHAKESPEARE_SENT1


def three_page_dump() -> str:
    return dump_xml(
        [
            ("11", "Eleven", "Eleven was a number of note in town history."),
            ("12", "Twelve", "Twelve was a number of note in town history."),
            ("13", "Thirteen", "Thirteen was a number of note in town history."),
        ]
    )


class TestExtract:
    def test_wanted_filtering(self):
        stream = io.BytesIO(three_page_dump().encode())
        pages = list(extract_articles(stream, {"12"}))
        assert len(pages) == 1
        assert pages[0][0].wiki_id == "12"
        assert pages[0][0].title == "Twelve"

    def test_missing_id_reported_not_error(self):
        stream = io.BytesIO(three_page_dump().encode())
        articles, missing = read_articles(stream, {"12", "99"})
        assert [a.ref.wiki_id for a in articles] == ["12"]
        assert missing == ["99"]

    def test_bz2_dump(self, tmp_path):
        path = tmp_path / "dump.xml.bz2"
        path.write_bytes(bz2.compress(three_page_dump().encode()))
        pages = list(extract_articles(path, {"11", "13"}))
        assert [p[0].wiki_id for p in pages] == ["11", "13"]

    def test_malformed_xml_aborts_with_position(self):
        stream = io.BytesIO(b"<mediawiki><page><title>Broken</unclosed>")
        with pytest.raises(DumpFormatError, match=r"line \d+, column \d+"):
            list(extract_articles(stream, {"1"}))

    def test_empty_wanted_rejected(self):
        with pytest.raises(ValueError):
            list(extract_articles(io.BytesIO(b"<x/>"), set()))

    def test_streaming_memory_bound(self, tmp_path):
        # ~100 MB synthetic dump; peak extraction memory must not scale with it.
        filler = "Lorem ipsum dolor sit amet consectetur adipiscing elit. " * 200
        path = tmp_path / "big.xml"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write('<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/">')
            fh.write("<siteinfo><sitename>big</sitename></siteinfo>")
            body = (
                "<page><title>P{i}</title><ns>0</ns><id>{i}</id>"
                "<revision><id>{i}9</id><text>" + filler + "</text></revision></page>"
            )
            for i in range(9000):
                fh.write(body.replace("{i}", str(i)))
            fh.write("</mediawiki>")
        assert path.stat().st_size > 100_000_000
        tracemalloc.start()
        articles, missing = read_articles(path, {"4500"})
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        assert [a.ref.wiki_id for a in articles] == ["4500"]
        assert not missing
        assert peak < 60_000_000, f"peak {peak} bytes suggests dump buffering"

    def test_worker_count_does_not_change_output(self):
        pages = [(str(i), f"Page {i}", f"Person {i} lived in town {i} for years.") for i in range(20)]
        text = dump_xml(pages).encode()
        one, _ = read_articles(io.BytesIO(text), {str(i) for i in range(20)}, workers=1)
        four, _ = read_articles(io.BytesIO(text), {str(i) for i in range(20)}, workers=4)
        assert one == four
        assert [a.ref.wiki_id for a in one] == sorted(
            (str(i) for i in range(20)), key=wiki_id_sort_key
        )


class TestCleanWikitext:
    def test_link_label_retention(self):
        assert clean_wikitext("[[Warwickshire]]") == "Warwickshire"
        assert clean_wikitext("[[Warwickshire|the county]]") == "the county"

    def test_tag_removal(self):
        assert clean_wikitext("<ref>cite</ref>born 1564") == "born 1564"

    def test_plain_text_passes_unchanged(self):
        assert clean_wikitext(SHAKESPEARE_TEXT) == SHAKESPEARE_TEXT

    def test_templates_tables_comments_dropped(self):
        raw = (
            "{{Infobox person|name=Who}}\n"
            "{| class=wikitable\n|-\n| cell\n|}\n"
            "<!-- note -->The subject lived a long and happy life.\n"
        )
        assert clean_wikitext(raw) == "The subject lived a long and happy life."

    def test_nested_templates(self):
        raw = "{{outer {{inner}} more}}Body text follows the template here."
        assert clean_wikitext(raw) == "Body text follows the template here."

    def test_headings_dropped(self):
        raw = "== Early life ==\nThe subject lived a long and happy life.\n"
        assert clean_wikitext(raw) == "The subject lived a long and happy life."

    def test_illegible_short_lines_dropped_in_document(self):
        raw = "colspan text\nThe subject lived a long and happy life.\n"
        assert clean_wikitext(raw) == "The subject lived a long and happy life."

    def test_unbalanced_quotes_dropped(self):
        raw = 'He said "never again\nThe subject lived a long and happy life.\n'
        assert clean_wikitext(raw) == "The subject lived a long and happy life."

    def test_degenerate_input_empty(self):
        assert clean_wikitext("") == ""
        assert clean_wikitext("{{only template}}") == ""

    @given(st.text(max_size=400))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, raw):
        once = clean_wikitext(raw)
        assert clean_wikitext(once) == once

    def test_file_links_and_magic_words_dropped(self):
        raw = "[[File:pic.jpg|thumb|A [[caption]] here]]__NOTOC__The subject lived a long life."
        assert clean_wikitext(raw) == "The subject lived a long life."


class TestSegment:
    def test_abbreviation_guarded_split(self):
        sentences = segment("A. B. was born. He died.")
        assert [s.text for s in sentences] == ["A. B. was born.", "He died."]

    def test_empty_text(self):
        assert segment("") == []

    def test_no_terminal_period(self):
        sentences = segment("a single sentence without a stop")
        assert len(sentences) == 1

    def test_indices_sequential(self):
        sentences = segment("One came first. Two came second. Three came third.")
        assert [s.index for s in sentences] == [0, 1, 2]

    def test_titles_and_months_guarded(self):
        text = "Dr. Smith arrived on 4 Sept. 1901. Mr. Jones left town."
        sentences = segment(text)
        assert len(sentences) == 2
        assert sentences[0].text == "Dr. Smith arrived on 4 Sept. 1901."

    def test_parenthesised_baptism_date(self):
        text = (
            "William Shakespeare (bapt. 26 April 1564 – 23 April 1616) was an "
            "English playwright, poet and actor. He was born in Stratford."
        )
        sentences = segment(text)
        assert len(sentences) == 2

    def test_extra_abbreviations(self):
        default = Segmenter().split("He worked at Acme Corp. Hundreds joined.")
        custom = Segmenter(extra_abbreviations=["Corp"]).split(
            "He worked at Acme Corp. Hundreds joined."
        )
        assert len(default) == 2
        assert len(custom) == 1

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), max_size=300))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_concatenation(self, text):
        import re

        sentences = segment(text)
        joined = "".join(s.text for s in sentences)
        assert re.sub(r"\s", "", joined) == re.sub(r"\s", "", text)

    def test_question_and_exclamation_split(self):
        sentences = segment("Was the account true? Nobody ever said! The town forgot.")
        assert len(sentences) == 3


class TestArticleAssembly:
    def test_round_trip_article_text(self):
        raw = "'''Preamble''' one sentence here. Another sentence follows. A third closes."
        stream = io.BytesIO(dump_xml([("7", "Seven", raw)]).encode())
        articles, _ = read_articles(stream, {"7"})
        article = articles[0]
        joined = " ".join(s.text for s in article.sentences)
        assert joined == clean_wikitext(raw)
        assert article.sentences[0].index == 0

    def test_first_sentence_is_body_not_heading(self):
        raw = "== Biography ==\n{{Infobox}}\nThe subject was born early. More text follows here."
        stream = io.BytesIO(dump_xml([("8", "Eight", raw)]).encode())
        articles, _ = read_articles(stream, {"8"})
        assert articles[0].sentences[0].text == "The subject was born early."

    def test_corpus_cache_round_trip(self, tmp_path):
        stream = io.BytesIO(three_page_dump().encode())
        articles, _ = read_articles(stream, {"11", "12", "13"})
        write_corpus(articles, tmp_path / "corpus")
        loaded = load_corpus(tmp_path / "corpus")
        assert [a.ref for a in loaded] == [a.ref for a in articles]
        assert [a.sentences for a in loaded] == [a.sentences for a in articles]
