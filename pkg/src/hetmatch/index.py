"""Typed document corpora with per-field inverted indexes and tf-idf.

A :class:`Corpus` holds the documents of one side of a comparison (for
example all articles, or all videos). Each named structural component
("field") gets its own postings and document-frequency statistics, so
tf-idf is always computed against the statistics of the field it came
from. Writes are single-threaded; between writes any number of readers
may share a corpus.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from . import textpipe
from .errors import ConfigError, DuplicateDocument, NotFound

_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Document:
    """One entity: an id, a doctype tag, and named text components."""

    id: str
    doctype: str
    components: dict[str, str]

    def __post_init__(self) -> None:
        if not self.id:
            raise ConfigError("document id must be non-empty")
        if any(not name for name in self.components):
            raise ConfigError(f"document {self.id!r} has an empty component name")


@dataclass(frozen=True)
class Posting:
    doc_id: str
    tf: int


@dataclass(frozen=True)
class FieldStats:
    """Document-frequency statistics for one field."""

    field: str
    doc_count: int
    df: Mapping[str, int] = field(default_factory=dict)


class Corpus:
    """Documents of one doctype plus their per-field inverted index."""

    def __init__(
        self,
        doctype: str = "",
        stopwords: textpipe.StopwordList = textpipe.EMPTY_STOPWORDS,
        synonyms: textpipe.SynonymMap | None = None,
    ) -> None:
        self.doctype = doctype
        self.stopwords = stopwords
        self.synonyms = synonyms or {}
        self.docs: dict[str, Document] = {}
        # field -> doc_id -> {lexeme: tf}; empty component vectors are not stored
        self._tf: dict[str, dict[str, dict[str, int]]] = {}
        # field -> lexeme -> sorted list of (doc_id, tf)
        self._postings: dict[str, dict[str, list[tuple[str, int]]]] = {}
        self._df: dict[str, dict[str, int]] = {}
        self._fields: set[str] = set()
        self._tfidf_cache: dict[tuple[str, str, bool], dict[str, float]] = {}

    def __len__(self) -> int:
        return len(self.docs)

    @property
    def fields(self) -> list[str]:
        return sorted(self._fields)

    def add_document(self, doc: Document) -> None:
        """Store a document and update postings and field statistics."""
        if doc.id in self.docs:
            raise DuplicateDocument(f"document {doc.id!r} already indexed")
        if not self.doctype:
            self.doctype = doc.doctype
        self.docs[doc.id] = doc
        self._tfidf_cache.clear()
        for name, text in doc.components.items():
            self._fields.add(name)
            vec = textpipe.vectorize(text, self.stopwords, self.synonyms)
            if not vec:
                continue
            self._tf.setdefault(name, {})[doc.id] = vec
            postings = self._postings.setdefault(name, {})
            df = self._df.setdefault(name, {})
            for lexeme, tf in vec.items():
                bisect.insort(postings.setdefault(lexeme, []), (doc.id, tf))
                df[lexeme] = df.get(lexeme, 0) + 1

    def add_documents(self, docs: Iterable[Document]) -> None:
        for doc in docs:
            self.add_document(doc)

    def field_stats(self, fieldname: str) -> FieldStats:
        return FieldStats(
            field=fieldname,
            doc_count=len(self.docs),
            df=self._df.get(fieldname, {}),
        )

    def document_frequency(self, fieldname: str, lexeme: str) -> int:
        """Number of documents whose field contains the lexeme (0 if unseen)."""
        return self._df.get(fieldname, {}).get(lexeme, 0)

    def postings(self, fieldname: str, lexeme: str) -> list[Posting]:
        return [
            Posting(doc_id, tf)
            for doc_id, tf in self._postings.get(fieldname, {}).get(lexeme, [])
        ]

    def tfidf(self, fieldname: str, doc_id: str, clamp: bool = True) -> dict[str, float]:
        """Tf-idf vector for one document field: tf * ln(|D| / (1 + df)).

        Negative values (terms present in every document) are dropped when
        ``clamp`` is true, which is the default; pass ``clamp=False`` to
        keep raw values. The returned dict is cached; treat it as
        immutable.
        """
        if doc_id not in self.docs:
            raise NotFound(f"unknown document {doc_id!r}")
        if fieldname not in self._fields:
            raise NotFound(f"unknown field {fieldname!r}")
        key = (fieldname, doc_id, clamp)
        cached = self._tfidf_cache.get(key)
        if cached is not None:
            return cached
        vec = self._tf.get(fieldname, {}).get(doc_id, {})
        total = len(self.docs)
        df = self._df.get(fieldname, {})
        out: dict[str, float] = {}
        for lexeme, tf in vec.items():
            value = tf * math.log(total / (1 + df.get(lexeme, 0)))
            if clamp:
                if value > 0.0:
                    out[lexeme] = value
            elif value != 0.0:
                out[lexeme] = value
        self._tfidf_cache[key] = out
        return out

    def component_vector(
        self, doc_id: str, fieldname: str, mode: str = "tf", clamp: bool = True
    ) -> dict[str, float]:
        """Stored tf vector or computed tf-idf vector for one field.

        A component the document does not have yields an empty vector.
        """
        if doc_id not in self.docs:
            raise NotFound(f"unknown document {doc_id!r}")
        if mode == "tf":
            return self._tf.get(fieldname, {}).get(doc_id, {})
        if mode == "tfidf":
            if fieldname not in self._fields:
                return {}
            return self.tfidf(fieldname, doc_id, clamp=clamp)
        raise ConfigError(f"unknown vector mode {mode!r}")

    def candidates(self, query: Mapping[str, float], fieldname: str) -> set[str]:
        """Union of posting doc ids over the query's lexemes.

        A superset of every document with nonzero cosine against the query
        on this field.
        """
        postings = self._postings.get(fieldname, {})
        found: set[str] = set()
        for lexeme in query:
            for doc_id, _tf in postings.get(lexeme, ()):
                found.add(doc_id)
        return found

    # -- persistence -------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        """Write the corpus as deterministic JSON segments.

        Layout: ``meta.json`` (doctype, fields, pipeline config),
        ``documents.jsonl`` (raw documents, sorted by id) and
        ``postings.json`` (per-field postings lists).
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {
            "format": _FORMAT_VERSION,
            "doctype": self.doctype,
            "fields": self.fields,
            "doc_count": len(self.docs),
            "stopwords": sorted(self.stopwords),
            "synonyms": {k: list(v) for k, v in sorted(self.synonyms.items())},
        }
        (directory / "meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        with (directory / "documents.jsonl").open("w", encoding="utf-8") as fh:
            for doc_id in sorted(self.docs):
                doc = self.docs[doc_id]
                fh.write(
                    json.dumps(
                        {"id": doc.id, "doctype": doc.doctype, "components": doc.components},
                        sort_keys=True,
                    )
                    + "\n"
                )
        postings = {
            fieldname: {
                lexeme: [[doc_id, tf] for doc_id, tf in plist]
                for lexeme, plist in sorted(by_field.items())
            }
            for fieldname, by_field in sorted(self._postings.items())
        }
        (directory / "postings.json").write_text(
            json.dumps(postings, sort_keys=True) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: str | Path) -> "Corpus":
        directory = Path(directory)
        meta_path = directory / "meta.json"
        if not meta_path.is_file():
            raise NotFound(f"no corpus at {directory}")
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{meta_path}: invalid JSON ({exc})") from exc
        corpus = cls(
            doctype=meta.get("doctype", ""),
            stopwords=frozenset(meta.get("stopwords", ())),
            synonyms={k: tuple(v) for k, v in meta.get("synonyms", {}).items()},
        )
        corpus.add_documents(read_corpus_file(directory / "documents.jsonl"))
        return corpus


def read_corpus_file(path: str | Path) -> Iterator[Document]:
    """Parse a corpus JSONL file: one document object per line."""
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            try:
                yield Document(
                    id=str(raw["id"]),
                    doctype=str(raw.get("doctype", "")),
                    components={str(k): str(v) for k, v in raw.get("components", {}).items()},
                )
            except KeyError as exc:
                raise ConfigError(f"{path}:{lineno}: missing key {exc}") from exc


class PairVectorSource:
    """Supplies component vectors for scoring an (A doc, B doc) pair.

    The B side always uses tf-idf against its own field statistics. The A
    side uses tf-idf too, except that a single-document A corpus falls
    back to raw term frequencies (its idf values are degenerate).
    ``clamp`` should match the config's ``clamp_vectors`` flag.
    """

    def __init__(
        self,
        corpus_a: Corpus,
        corpus_b: Corpus,
        a_mode: str | None = None,
        b_mode: str = "tfidf",
        clamp: bool = True,
    ) -> None:
        if a_mode is None:
            a_mode = "tf" if len(corpus_a) <= 1 else "tfidf"
        self.corpus_a = corpus_a
        self.corpus_b = corpus_b
        self.a_mode = a_mode
        self.b_mode = b_mode
        self.clamp = clamp

    def a_vector(self, doc_id: str, fieldname: str) -> dict[str, float]:
        return self.corpus_a.component_vector(doc_id, fieldname, self.a_mode, self.clamp)

    def b_vector(self, doc_id: str, fieldname: str) -> dict[str, float]:
        return self.corpus_b.component_vector(doc_id, fieldname, self.b_mode, self.clamp)
