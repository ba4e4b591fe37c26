"""bioforge: compile relation-extraction datasets from encyclopedia dumps
aligned with structured biographical records."""

from .ingest import (
    Article,
    ArticleRef,
    DumpFormatError,
    Segmenter,
    SentenceText,
    clean_wikitext,
    extract_articles,
    read_articles,
    segment,
)
from .matcher import LabelledInstance, RelationLabel, apply_strategy
from .records import PartialDate, PersonRecord, RecordStore, build_store
from .tagger import EntitySpan, Gazetteers, TaggedSentence, normalize_date, resolve_corefs, tag

__version__ = "0.1.0"

__all__ = [
    "Article",
    "ArticleRef",
    "DumpFormatError",
    "EntitySpan",
    "Gazetteers",
    "LabelledInstance",
    "PartialDate",
    "PersonRecord",
    "RecordStore",
    "RelationLabel",
    "Segmenter",
    "SentenceText",
    "TaggedSentence",
    "apply_strategy",
    "build_store",
    "clean_wikitext",
    "extract_articles",
    "normalize_date",
    "read_articles",
    "resolve_corefs",
    "segment",
    "tag",
    "__version__",
]
