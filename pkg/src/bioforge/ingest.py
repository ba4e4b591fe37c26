"""Stream a MediaWiki XML dump, clean wikitext, and segment into sentences.

Extraction is a single sequential pass that never buffers the dump; cleaning
and segmentation of the selected pages can run in parallel workers, with the
results re-serialized in ascending wiki_id order so downstream output does not
depend on worker count.
"""

from __future__ import annotations

import bz2
import json
import re
import unicodedata
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union


class DumpFormatError(Exception):
    """Malformed dump XML; carries the parser's position report."""


@dataclass(frozen=True)
class ArticleRef:
    wiki_id: str
    title: str


@dataclass(frozen=True)
class SentenceText:
    index: int
    text: str


@dataclass
class Article:
    ref: ArticleRef
    sentences: list[SentenceText]
    raw_char_count: int

    @property
    def text(self) -> str:
        return "\n".join(s.text for s in self.sentences)


def wiki_id_sort_key(wiki_id: str):
    """Ascending order, numeric when the id is numeric (dump page ids are)."""
    return (0, int(wiki_id), "") if wiki_id.isdigit() else (1, 0, wiki_id)


# ---------------------------------------------------------------------------
# Dump extraction
# ---------------------------------------------------------------------------

def _open_dump(source: Union[str, Path, IO[bytes]]) -> IO[bytes]:
    if isinstance(source, (str, Path)):
        raw = open(source, "rb")
    else:
        raw = source
    head = raw.peek(3)[:3] if hasattr(raw, "peek") else b""
    if head == b"BZh" or str(getattr(raw, "name", "")).endswith(".bz2"):
        return bz2.open(raw)
    return raw


def _localname(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def extract_articles(
    source: Union[str, Path, IO[bytes]],
    wanted: set[str],
) -> Iterator[tuple[ArticleRef, str]]:
    """Yield ``(ref, raw wikitext)`` for dump pages whose id is in ``wanted``.

    Pages stream in dump order and unselected pages are discarded immediately,
    so peak memory tracks the wanted-set size, not the dump size.  Malformed
    XML raises :class:`DumpFormatError` with the parser position.
    """
    if not wanted:
        raise ValueError("wanted id set must be non-empty")
    stream = _open_dump(source)
    try:
        context = ET.iterparse(stream, events=("start", "end"))
        _, root = next(context)
        for event, elem in context:
            if event != "end" or _localname(elem.tag) != "page":
                continue
            page_id = title = None
            text = ""
            for child in elem:
                name = _localname(child.tag)
                if name == "id" and page_id is None:
                    page_id = (child.text or "").strip()
                elif name == "title":
                    title = (child.text or "").strip()
                elif name == "revision":
                    for sub in child:
                        if _localname(sub.tag) == "text":
                            text = sub.text or ""
            if page_id in wanted and title:
                yield ArticleRef(wiki_id=page_id, title=title), text
            root.clear()
    except ET.ParseError as exc:
        line, column = exc.position
        raise DumpFormatError(
            f"malformed XML at line {line}, column {column}: {exc.msg}"
        ) from exc


# ---------------------------------------------------------------------------
# Wikitext cleaning
# ---------------------------------------------------------------------------

_COMMENT_RE = re.compile(r"<!--.*?-->", re.DOTALL)
# Tags whose content is dropped along with the tag itself.
_CONTAINER_RE = re.compile(
    r"<(ref|gallery|timeline|math|code|syntaxhighlight|source|score|nowiki)\b[^>]*?"
    r"(?:/>|>.*?</\1\s*>)",
    re.DOTALL | re.IGNORECASE,
)
_TAG_RE = re.compile(r"</?[A-Za-z][^>\n]*>")
_FILE_LINK_RE = re.compile(r"\[\[(?:File|Image|Category)\s*:[^\[\]]*(?:\[\[[^\[\]]*\]\][^\[\]]*)*\]\]", re.IGNORECASE)
_LINK_RE = re.compile(r"\[\[([^\[\]|]*)(?:\|([^\[\]]*))?\]\]")
_EXT_LINK_RE = re.compile(r"\[(?:https?|ftp)://\S*(?:\s+([^\]]*))?\]")
_MAGIC_WORD_RE = re.compile(r"__[A-Z_]+__")
_HEADING_RE = re.compile(r"^\s*=+[^=].*?=+\s*$")
_EMPTY_PAREN_RE = re.compile(r"\(\s*[;,،、:–—-]*\s*\)")
_WORD_RE = re.compile(r"[^\W\d_]\w*", re.UNICODE)


def _strip_nested(text: str, open_mark: str, close_mark: str) -> str:
    """Remove balanced ``open_mark``...``close_mark`` regions, nesting-aware."""
    out = []
    depth = 0
    i = 0
    n = len(text)
    while i < n:
        if text.startswith(open_mark, i):
            depth += 1
            i += len(open_mark)
        elif text.startswith(close_mark, i) and depth:
            depth -= 1
            i += len(close_mark)
        else:
            if not depth:
                out.append(text[i])
            i += 1
    return "".join(out)


def _resolve_links(text: str) -> str:
    text = _FILE_LINK_RE.sub("", text)
    text = _LINK_RE.sub(lambda m: (m.group(2) if m.group(2) is not None else m.group(1)).strip(), text)
    text = _EXT_LINK_RE.sub(lambda m: (m.group(1) or "").strip(), text)
    return text


def _balanced_quotes(line: str) -> bool:
    if line.count('"') % 2 != 0:
        return False
    return line.count("“") == line.count("”")


def clean_wikitext(raw: str) -> str:
    """Reduce raw wikitext to plain text lines.

    Fixed pass order: comments, templates, tables, content-dropping tags,
    link resolution, remaining tag artifacts, then a per-line legibility
    filter (headings dropped, balanced quotes required, and in multi-line
    documents at least three alphabetic tokens per line -- a one-line input
    has no document context to judge completeness against, so only the quote
    rule applies there).  The result is NFC-normalized with collapsed
    whitespace, and the function is idempotent.
    """
    text = unicodedata.normalize("NFC", raw)
    text = _COMMENT_RE.sub("", text)
    text = _strip_nested(text, "{{", "}}")
    text = _strip_nested(text, "{|", "|}")
    text = _CONTAINER_RE.sub("", text)
    text = _resolve_links(text)
    text = _TAG_RE.sub("", text)
    text = _MAGIC_WORD_RE.sub("", text)
    text = text.replace("'''", "").replace("''", "")

    lines = []
    for line in text.split("\n"):
        if _HEADING_RE.match(line):
            continue
        line = line.lstrip("*#:; \t")
        line = _EMPTY_PAREN_RE.sub("", line)
        line = re.sub(r"\s+", " ", line).strip()
        if not line or line.startswith(("|", "{", "}", "!")):
            continue
        if not _balanced_quotes(line):
            continue
        lines.append(line)
    if len(lines) > 1:
        lines = [l for l in lines if len(_WORD_RE.findall(l)) >= 3]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Sentence segmentation
# ---------------------------------------------------------------------------

def load_wordlist(name: str) -> frozenset[str]:
    text = resources.files("bioforge.data").joinpath(name).read_text("utf-8")
    entries = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return frozenset(entries)


DEFAULT_ABBREVIATIONS = load_wordlist("abbreviations.txt")

_BOUNDARY_RE = re.compile(r"([.!?]+)(\s+|$)")
_TRAILING_QUOTE = "\"'”’)"


class Segmenter:
    """Abbreviation-guarded rule splitter on terminal punctuation.

    The guard list ships as a data file and can be extended per run; single
    capital initials ("A. B. Smith") never split regardless of the list.
    """

    def __init__(self, extra_abbreviations: Iterable[str] = ()):
        abbrevs = set(DEFAULT_ABBREVIATIONS) | set(extra_abbreviations)
        self._abbrevs = {a.rstrip(".").casefold() for a in abbrevs}

    def _is_guarded(self, before: str, punct: str, after: str) -> bool:
        if "!" in punct or "?" in punct:
            return False
        token_match = re.search(r"(\S+)$", before)
        if not token_match:
            return True
        token = token_match.group(1).rstrip(".")
        bare = token.lstrip("(\"'“‘")
        # Single capital letter: an initial, never sentence-final.
        if len(bare) == 1 and bare.isalpha() and bare.isupper():
            return True
        if re.fullmatch(r"(?:[A-Za-z]\.)+[A-Za-z]", bare):
            return True
        if bare.casefold() in self._abbrevs:
            return True
        # A lowercase continuation means mid-sentence punctuation.
        lookahead = after.lstrip(" \"'“‘(")
        if lookahead and lookahead[0].islower():
            return True
        return False

    def split(self, text: str) -> list[str]:
        sentences = []
        for line in text.split("\n"):
            if not line.strip():
                continue
            start = 0
            for match in _BOUNDARY_RE.finditer(line):
                end = match.end(1)
                # Pull closing quotes/brackets into the sentence.
                while end < len(line) and line[end] in _TRAILING_QUOTE:
                    end += 1
                if self._is_guarded(line[start:match.start(1)], match.group(1), line[end:]):
                    continue
                piece = line[start:end].strip()
                if piece:
                    sentences.append(piece)
                start = end
            tail = line[start:].strip()
            if tail:
                sentences.append(tail)
        return sentences

    def segment(self, text: str) -> list[SentenceText]:
        return [SentenceText(index=i, text=s) for i, s in enumerate(self.split(text))]


def segment(text: str, segmenter: Optional[Segmenter] = None) -> list[SentenceText]:
    """Split cleaned text into indexed sentences (index 0 = first sentence)."""
    return (segmenter or Segmenter()).segment(text)


# ---------------------------------------------------------------------------
# Article assembly and the corpus cache
# ---------------------------------------------------------------------------

def build_article(ref: ArticleRef, raw: str, segmenter: Optional[Segmenter] = None) -> Article:
    cleaned = clean_wikitext(raw)
    return Article(ref=ref, sentences=segment(cleaned, segmenter), raw_char_count=len(raw))


def read_articles(
    source: Union[str, Path, IO[bytes]],
    wanted: set[str],
    workers: int = 1,
    segmenter: Optional[Segmenter] = None,
) -> tuple[list[Article], list[str]]:
    """Extract, clean and segment the wanted pages.

    Returns ``(articles ascending by wiki_id, missing ids report)``.  Worker
    count never changes the output, only how cleaning is scheduled.
    """
    pages = list(extract_articles(source, wanted))
    seg = segmenter or Segmenter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            articles = list(pool.map(lambda p: build_article(p[0], p[1], seg), pages))
    else:
        articles = [build_article(ref, raw, seg) for ref, raw in pages]
    articles.sort(key=lambda a: wiki_id_sort_key(a.ref.wiki_id))
    found = {a.ref.wiki_id for a in articles}
    missing = sorted(wanted - found, key=wiki_id_sort_key)
    return articles, missing


def write_corpus(articles: Iterable[Article], out_dir: Union[str, Path]) -> None:
    """Cache articles as one JSONL file per article plus a title index."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    titles = []
    for article in articles:
        lines = [
            json.dumps(
                {"wiki_id": article.ref.wiki_id, "index": s.index, "text": s.text},
                ensure_ascii=False,
            )
            for s in article.sentences
        ]
        (out / f"{article.ref.wiki_id}.jsonl").write_text(
            "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
        )
        titles.append((article.ref.wiki_id, article.ref.title))
    titles.sort(key=lambda t: wiki_id_sort_key(t[0]))
    index = "".join(f"{wid}\t{title}\n" for wid, title in titles)
    (out / "titles.tsv").write_text(index, encoding="utf-8")


def load_corpus(corpus_dir: Union[str, Path]) -> list[Article]:
    """Load a cached corpus, ascending by wiki_id."""
    corpus = Path(corpus_dir)
    titles = {}
    index = corpus / "titles.tsv"
    if index.exists():
        for line in index.read_text(encoding="utf-8").splitlines():
            wiki_id, _, title = line.partition("\t")
            titles[wiki_id] = title
    articles = []
    for path in corpus.glob("*.jsonl"):
        sentences = []
        wiki_id = path.stem
        for line in path.read_text(encoding="utf-8").splitlines():
            doc = json.loads(line)
            sentences.append(SentenceText(index=doc["index"], text=doc["text"]))
        sentences.sort(key=lambda s: s.index)
        ref = ArticleRef(wiki_id=wiki_id, title=titles.get(wiki_id) or wiki_id)
        articles.append(Article(ref=ref, sentences=sentences, raw_char_count=0))
    articles.sort(key=lambda a: wiki_id_sort_key(a.ref.wiki_id))
    return articles
