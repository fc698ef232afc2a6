import pytest

from hetmatch.index import Corpus, Document, PairVectorSource
from hetmatch.simnet import WeightConfig


class DictSource:
    """Vector source backed by plain dicts, for network-level tests."""

    def __init__(self, a_vectors, b_vectors):
        self.a_vectors = a_vectors
        self.b_vectors = b_vectors

    def a_vector(self, doc_id, fieldname):
        return self.a_vectors.get((doc_id, fieldname), {})

    def b_vector(self, doc_id, fieldname):
        return self.b_vectors.get((doc_id, fieldname), {})


def make_corpus(doctype, docs, **kwargs):
    corpus = Corpus(doctype, **kwargs)
    for doc_id, components in docs.items():
        corpus.add_document(Document(doc_id, doctype, components))
    return corpus


@pytest.fixture
def small_corpora():
    corpus_a = make_corpus("article", {
        "a1": {"title": "space probe launches today",
               "summary": "the probe flies to deep space on a rocket"},
        "a2": {"title": "stock markets rally",
               "summary": "markets climb on strong earnings reports"},
        "a3": {"title": "local team wins final",
               "summary": "the team wins the cup final after extra time"},
        "a4": {"title": "storm hits the coast",
               "summary": "heavy rain and wind hit the coast overnight"},
    })
    corpus_b = make_corpus("video", {
        "b1": {"title": "space probe documentary",
               "summary": "a film about the probe exploring deep space"},
        "b2": {"title": "market analysis weekly",
               "summary": "experts discuss markets and earnings"},
        "b3": {"title": "cup final highlights",
               "summary": "watch the team win the final"},
        "b4": {"title": "cooking pasta at home",
               "summary": "boil water add pasta and stir"},
    })
    return corpus_a, corpus_b


@pytest.fixture
def title_summary_config():
    return WeightConfig(
        a_components=("title", "summary"),
        b_components=("title", "summary"),
        input_weights={
            ("title", "title"): 6.0,
            ("title", "summary"): 4.0,
            ("summary", "title"): 3.0,
            ("summary", "summary"): 2.0,
        },
        output_weights={"title": 1.0, "summary": 1.0},
        threshold=0.5,
    )


@pytest.fixture
def small_source(small_corpora):
    corpus_a, corpus_b = small_corpora
    return PairVectorSource(corpus_a, corpus_b)
