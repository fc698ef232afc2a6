import math
import random

import pytest

from hetmatch import textpipe
from hetmatch.errors import DuplicateDocument, NotFound
from hetmatch.index import Corpus, Document, PairVectorSource, read_corpus_file


def doc(doc_id, **components):
    return Document(doc_id, "article", {k: v for k, v in components.items()})


class TestAddDocument:
    def test_postings_updated(self):
        corpus = Corpus("article")
        corpus.add_document(doc("d1", title="movie"))
        postings = corpus.postings("title", "movi")
        assert [(p.doc_id, p.tf) for p in postings] == [("d1", 1)]

    def test_doc_with_no_components_counts_toward_every_field(self):
        corpus = Corpus("article")
        corpus.add_document(doc("d1", title="movie night"))
        corpus.add_document(Document("d2", "article", {}))
        stats = corpus.field_stats("title")
        assert stats.doc_count == 2
        assert stats.df["movi"] == 1

    def test_duplicate_id_rejected(self):
        corpus = Corpus("article")
        corpus.add_document(doc("d1", title="x"))
        with pytest.raises(DuplicateDocument):
            corpus.add_document(doc("d1", title="y"))

    def test_postings_sorted_by_doc_id(self):
        corpus = Corpus("article")
        for doc_id in ("d3", "d1", "d2"):
            corpus.add_document(doc(doc_id, title="movie"))
        assert [p.doc_id for p in corpus.postings("title", "movi")] == ["d1", "d2", "d3"]

    def test_df_monotone_under_adds(self):
        corpus = Corpus("article")
        rng = random.Random(0)
        vocab = ["alpha", "beta", "gamma", "delta"]
        seen: dict[str, int] = {}
        for i in range(20):
            corpus.add_document(
                doc(f"d{i:02d}", title=" ".join(rng.choices(vocab, k=3)))
            )
            stats = corpus.field_stats("title")
            for lexeme, df in seen.items():
                assert stats.df.get(lexeme, 0) >= df
            seen = dict(stats.df)


class TestTfidf:
    def build(self, total, with_term, tf_in_first):
        """Corpus of `total` docs; `with_term` of them contain 'probe',
        the first one `tf_in_first` times."""
        corpus = Corpus("article")
        for i in range(total):
            words = []
            if i < with_term:
                words += ["probe"] * (tf_in_first if i == 0 else 1)
            words += [f"filler{i}"]
            corpus.add_document(doc(f"d{i:02d}", title=" ".join(words)))
        return corpus

    def test_hand_value(self):
        # tf=3, |D|=10, df=4 -> 3*ln(10/5)
        corpus = self.build(total=10, with_term=4, tf_in_first=3)
        vec = corpus.tfidf("title", "d00")
        assert vec["probe"] == pytest.approx(3 * math.log(2), abs=1e-12)
        assert vec["probe"] == pytest.approx(2.07944, abs=1e-5)

    def test_absent_lexeme_is_zero(self):
        corpus = self.build(total=10, with_term=4, tf_in_first=3)
        assert "filler5" not in corpus.tfidf("title", "d00")

    def test_negative_idf_clamped(self):
        # tf=2, |D|=4, df=4 -> raw 2*ln(4/5) < 0 -> dropped by default
        corpus = self.build(total=4, with_term=4, tf_in_first=2)
        assert "probe" not in corpus.tfidf("title", "d00")
        raw = corpus.tfidf("title", "d00", clamp=False)
        assert raw["probe"] == pytest.approx(2 * math.log(4 / 5), abs=1e-12)

    def test_unknown_doc_or_field(self):
        corpus = self.build(total=4, with_term=1, tf_in_first=1)
        with pytest.raises(NotFound):
            corpus.tfidf("title", "nope")
        with pytest.raises(NotFound):
            corpus.tfidf("credits", "d00")

    def test_negative_iff_term_in_all_docs(self):
        rng = random.Random(5)
        corpus = Corpus("article")
        vocab = [f"w{i}" for i in range(8)]
        for i in range(12):
            words = rng.sample(vocab, k=rng.randint(1, 6)) + ["common"]
            corpus.add_document(doc(f"d{i:02d}", title=" ".join(words)))
        stats = corpus.field_stats("title")
        for i in range(12):
            raw = corpus.tfidf("title", f"d{i:02d}", clamp=False)
            tf_vec = corpus.component_vector(f"d{i:02d}", "title", mode="tf")
            for lexeme in tf_vec:
                value = raw.get(lexeme, 0.0)
                if stats.df[lexeme] >= stats.doc_count:
                    assert value < 0 or lexeme not in raw
                else:
                    assert value >= 0


class TestDocumentFrequency:
    def test_counts_documents_not_occurrences(self):
        corpus = Corpus("article")
        corpus.add_document(doc("d1", title="probe probe probe"))
        assert corpus.document_frequency("title", "probe") == 1
        corpus.add_document(doc("d2", title="probe"))
        assert corpus.document_frequency("title", "probe") == 2

    def test_unseen_lexeme(self):
        corpus = Corpus("article")
        assert corpus.document_frequency("title", "ghost") == 0


class TestCandidates:
    def test_single_match(self):
        corpus = Corpus("article")
        corpus.add_document(doc("d1", title="movie"))
        corpus.add_document(doc("d2", title="pasta"))
        assert corpus.candidates({"movi": 1.0}, "title") == {"d1"}

    def test_disjoint_vocabulary(self):
        corpus = Corpus("article")
        corpus.add_document(doc("d1", title="movie"))
        assert corpus.candidates({"ghost": 1.0}, "title") == set()

    def test_superset_of_nonzero_cosine(self):
        rng = random.Random(11)
        vocab = [f"w{i}" for i in range(30)]
        corpus = Corpus("article")
        for i in range(40):
            corpus.add_document(
                doc(f"d{i:02d}", title=" ".join(rng.choices(vocab, k=6)))
            )
        for _ in range(20):
            query_terms = rng.sample(vocab, k=3)
            query = {t: 1.0 for t in query_terms}
            cands = corpus.candidates(query, "title")
            for i in range(40):
                vec = corpus.component_vector(f"d{i:02d}", "title", mode="tf")
                overlap = sum(query.get(t, 0) * v for t, v in vec.items())
                if overlap > 0:
                    assert f"d{i:02d}" in cands


class TestComponentVector:
    def test_tf_mode(self):
        corpus = Corpus("article")
        corpus.add_document(doc("d1", title="movie movie"))
        assert corpus.component_vector("d1", "title", mode="tf") == {"movi": 2}

    def test_missing_component_empty(self):
        corpus = Corpus("article")
        corpus.add_document(doc("d1", title="movie"))
        corpus.add_document(doc("d2", summary="other things"))
        assert corpus.component_vector("d2", "title", mode="tf") == {}
        assert corpus.component_vector("d2", "title", mode="tfidf") == {}

    def test_tfidf_mode_matches_tfidf_op(self):
        corpus = Corpus("article")
        for i in range(6):
            corpus.add_document(doc(f"d{i}", title=f"movie probe{i % 3}"))
        assert corpus.component_vector("d0", "title", mode="tfidf") == corpus.tfidf(
            "title", "d0"
        )

    def test_unknown_document(self):
        corpus = Corpus("article")
        with pytest.raises(NotFound):
            corpus.component_vector("nope", "title")


class TestPipelineIntegration:
    def test_stopwords_and_synonyms_apply(self):
        corpus = Corpus(
            "article",
            stopwords=frozenset({"the"}),
            synonyms={"film": ("movi",)},
        )
        corpus.add_document(doc("d1", title="the film"))
        vec = corpus.component_vector("d1", "title", mode="tf")
        assert vec == {"film": 1, "movi": 1}


class TestPersistence:
    def test_roundtrip_identical(self, tmp_path):
        rng = random.Random(2)
        vocab = [f"w{i}" for i in range(25)]
        corpus = Corpus("article", stopwords=frozenset({"w0"}))
        for i in range(30):
            corpus.add_document(
                doc(
                    f"d{i:03d}",
                    title=" ".join(rng.choices(vocab, k=4)),
                    summary=" ".join(rng.choices(vocab, k=9)),
                )
            )
        corpus.save(tmp_path / "seg")
        loaded = Corpus.load(tmp_path / "seg")
        assert loaded.doctype == corpus.doctype
        assert loaded.fields == corpus.fields
        assert set(loaded.docs) == set(corpus.docs)
        for fieldname in corpus.fields:
            assert loaded._postings[fieldname] == corpus._postings[fieldname]
            assert loaded._df[fieldname] == corpus._df[fieldname]

    def test_save_is_deterministic(self, tmp_path):
        def build():
            corpus = Corpus("article")
            for i in range(10):
                corpus.add_document(doc(f"d{i}", title=f"movie number{i % 4}"))
            return corpus

        build().save(tmp_path / "one")
        build().save(tmp_path / "two")
        for name in ("meta.json", "documents.jsonl", "postings.json"):
            assert (tmp_path / "one" / name).read_bytes() == (
                tmp_path / "two" / name
            ).read_bytes()

    def test_read_corpus_file(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(
            '{"id": "x1", "doctype": "article", "components": {"title": "hello"}}\n'
            "\n"
            '{"id": "x2", "doctype": "article", "components": {}}\n',
            encoding="utf-8",
        )
        docs = list(read_corpus_file(path))
        assert [d.id for d in docs] == ["x1", "x2"]
        assert docs[0].components == {"title": "hello"}


class TestPairVectorSource:
    def test_single_doc_a_side_uses_tf(self):
        corpus_a = Corpus("article")
        corpus_a.add_document(doc("a1", title="probe probe"))
        corpus_b = Corpus("video")
        for i in range(4):
            corpus_b.add_document(doc(f"b{i}", title=f"probe clip{i % 2}"))
        source = PairVectorSource(corpus_a, corpus_b)
        assert source.a_mode == "tf"
        assert source.a_vector("a1", "title") == {"probe": 2}
        # B side stays tf-idf against its own stats
        assert source.b_vector("b0", "title") == corpus_b.tfidf("title", "b0")

    def test_multi_doc_a_side_uses_tfidf(self, small_corpora):
        corpus_a, corpus_b = small_corpora
        source = PairVectorSource(corpus_a, corpus_b)
        assert source.a_mode == "tfidf"
        assert source.a_vector("a1", "title") == corpus_a.tfidf("title", "a1")
