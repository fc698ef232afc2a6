"""Weighted-cosine similarity network over document components.

For a pair of heterogeneous documents, each target-side component j gets a
query vector built as the weighted sum of all source-side component
vectors (weights w_ij), is compared to the target component by cosine
similarity, and the per-component similarities are aggregated into a
single score by a normalized weighted sum. A binary step on the score
yields the match decision.

Everything here is pure computation over immutable inputs: scoring any
number of pairs concurrently is safe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .errors import ConfigError, DimensionError

TermVector = Mapping[str, float]

CLAMP_VECTORS = "clamp_vectors"
CLAMP_WEIGHTS = "clamp_weights"
CLAMP_SIMS = "clamp_sims"
_CLAMP_FLAGS = frozenset({CLAMP_VECTORS, CLAMP_WEIGHTS, CLAMP_SIMS})

DEFAULT_CLAMP_MODE = frozenset({CLAMP_VECTORS})


class VectorSource(Protocol):
    """Supplies component vectors for the two sides of a comparison."""

    def a_vector(self, doc_id: str, fieldname: str) -> TermVector: ...

    def b_vector(self, doc_id: str, fieldname: str) -> TermVector: ...


@dataclass(frozen=True)
class WeightConfig:
    """Trainable state: input weights w_ij, output weights v_j, threshold.

    ``input_weights`` maps (a_component, b_component) pairs to reals;
    missing pairs weigh 0. ``output_weights`` holds one non-negative
    weight per B component (missing entries default to 1 when built via
    :func:`config_from_dict`).
    """

    a_components: tuple[str, ...]
    b_components: tuple[str, ...]
    input_weights: dict[tuple[str, str], float] = field(default_factory=dict)
    output_weights: dict[str, float] = field(default_factory=dict)
    threshold: float = 0.5
    clamp_mode: frozenset[str] = DEFAULT_CLAMP_MODE

    def weight(self, a_name: str, b_name: str) -> float:
        return self.input_weights.get((a_name, b_name), 0.0)

    def output_weight(self, b_name: str) -> float:
        return self.output_weights.get(b_name, 1.0)

    def column(self, b_name: str) -> list[float]:
        """Input weights feeding one B component, in A-component order."""
        return [self.weight(a, b_name) for a in self.a_components]

    def validate(self) -> None:
        if not self.a_components or not self.b_components:
            raise ConfigError("component lists must be non-empty")
        if len(set(self.a_components)) != len(self.a_components):
            raise ConfigError("duplicate A component names")
        if len(set(self.b_components)) != len(self.b_components):
            raise ConfigError("duplicate B component names")
        for (a_name, b_name) in self.input_weights:
            if a_name not in self.a_components or b_name not in self.b_components:
                raise ConfigError(f"weight key {a_name}>{b_name} names unknown components")
        for b_name, value in self.output_weights.items():
            if b_name not in self.b_components:
                raise ConfigError(f"output weight for unknown component {b_name!r}")
            if value < 0:
                raise ConfigError(f"output weight for {b_name!r} is negative")
        if sum(self.output_weight(b) for b in self.b_components) <= 0:
            raise ConfigError("output weights sum to zero")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")
        unknown = self.clamp_mode - _CLAMP_FLAGS
        if unknown:
            raise ConfigError(f"unknown clamp flags: {sorted(unknown)}")

    def with_updates(
        self,
        input_weights: dict[tuple[str, str], float] | None = None,
        output_weights: dict[str, float] | None = None,
        threshold: float | None = None,
    ) -> "WeightConfig":
        return replace(
            self,
            input_weights=dict(input_weights if input_weights is not None else self.input_weights),
            output_weights=dict(output_weights if output_weights is not None else self.output_weights),
            threshold=self.threshold if threshold is None else threshold,
        )


def weight_key_order(cfg: WeightConfig) -> list[tuple[str, str]]:
    """Canonical parameter order: A components outer, B components inner.

    Grid enumeration, tie-breaking tuples, report rows and gradient
    vectors all follow this order.
    """
    return [(a, b) for a in cfg.a_components for b in cfg.b_components]


@dataclass(frozen=True)
class ComponentSimilarity:
    b_component: str
    query_norm: float
    similarity: float


@dataclass(frozen=True)
class SimilarityBreakdown:
    per_component: tuple[ComponentSimilarity, ...]
    score: float


@dataclass(frozen=True)
class MatchDecision:
    matched: bool
    score: float


def relu(x: float) -> float:
    """max(0, x)."""
    return x if x > 0.0 else 0.0


def combine(
    a_vectors: Sequence[TermVector],
    weights_for_j: Sequence[float],
    clamp: bool = False,
) -> dict[str, float]:
    """Sparse linear combination of source vectors with one weight column.

    Entries that come out <= 0 are dropped when ``clamp`` is set; exact
    zeros are never stored.
    """
    if len(a_vectors) != len(weights_for_j):
        raise DimensionError(
            f"{len(a_vectors)} vectors but {len(weights_for_j)} weights"
        )
    acc: dict[str, float] = {}
    for weight, vec in zip(weights_for_j, a_vectors):
        if weight == 0.0:
            continue
        for lexeme, value in vec.items():
            acc[lexeme] = acc.get(lexeme, 0.0) + weight * value
    if clamp:
        return {lex: v for lex, v in acc.items() if v > 0.0}
    return {lex: v for lex, v in acc.items() if v != 0.0}


def norm(vec: TermVector) -> float:
    return math.sqrt(sum(v * v for v in vec.values()))


def cosine(u: TermVector, v: TermVector) -> float:
    """Cosine similarity; 0 when either vector has zero norm."""
    if not u or not v:
        return 0.0
    if len(v) < len(u):
        u, v = v, u
    dot = sum(value * v[lexeme] for lexeme, value in u.items() if lexeme in v)
    nu = norm(u)
    nv = norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return max(-1.0, min(1.0, dot / (nu * nv)))


def combined_queries(
    a_id: str, cfg: WeightConfig, source: VectorSource
) -> dict[str, dict[str, float]]:
    """Per-B-component query vectors for one A document."""
    clamp_vecs = CLAMP_VECTORS in cfg.clamp_mode
    clamp_w = CLAMP_WEIGHTS in cfg.clamp_mode
    a_vectors = [source.a_vector(a_id, a_name) for a_name in cfg.a_components]
    queries: dict[str, dict[str, float]] = {}
    for b_name in cfg.b_components:
        column = cfg.column(b_name)
        if clamp_w:
            column = [relu(w) for w in column]
        queries[b_name] = combine(a_vectors, column, clamp=clamp_vecs)
    return queries


def score_against(
    queries: Mapping[str, TermVector],
    b_id: str,
    cfg: WeightConfig,
    source: VectorSource,
) -> SimilarityBreakdown:
    """Score one B document against precomputed query vectors."""
    clamp_s = CLAMP_SIMS in cfg.clamp_mode
    total_v = sum(cfg.output_weight(b) for b in cfg.b_components)
    if total_v <= 0.0:
        raise ConfigError("output weights sum to zero")
    parts = []
    weighted = 0.0
    for b_name in cfg.b_components:
        query = queries[b_name]
        sim = cosine(query, source.b_vector(b_id, b_name))
        if clamp_s:
            sim = relu(sim)
        parts.append(ComponentSimilarity(b_name, norm(query), sim))
        weighted += cfg.output_weight(b_name) * sim
    return SimilarityBreakdown(tuple(parts), weighted / total_v)


def score(
    a_id: str, b_id: str, cfg: WeightConfig, source: VectorSource
) -> SimilarityBreakdown:
    """Full similarity breakdown for one (A doc, B doc) pair."""
    return score_against(combined_queries(a_id, cfg, source), b_id, cfg, source)


def classify(score_value: float, threshold: float) -> MatchDecision:
    """Binary step: a score equal to the threshold counts as a match."""
    return MatchDecision(matched=score_value >= threshold, score=score_value)


def rank(
    a_id: str,
    corpus_b,
    cfg: WeightConfig,
    source: VectorSource,
    k: int,
) -> list[tuple[str, float]]:
    """Top-k B documents by score, descending; ties by ascending doc id.

    Candidates are gathered from the inverted index; every other document
    scores exactly 0 and participates in the ordering with that score.
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    queries = combined_queries(a_id, cfg, source)
    candidates: set[str] = set()
    for b_name, query in queries.items():
        candidates |= corpus_b.candidates(query, b_name)
    scores = {
        b_id: score_against(queries, b_id, cfg, source).score for b_id in candidates
    }
    ordered = sorted(corpus_b.docs, key=lambda d: (-scores.get(d, 0.0), d))
    return [(doc_id, scores.get(doc_id, 0.0)) for doc_id in ordered[:k]]


# -- config (de)serialization ----------------------------------------------

def config_from_dict(raw: Mapping) -> WeightConfig:
    """Build a validated WeightConfig from its JSON form.

    Input weight keys use the exact string format ``"aComponent>bComponent"``.
    A missing ``output_weights`` object means 1.0 everywhere; when the
    object is present, components it omits weigh 0.
    """
    try:
        a_components = tuple(str(x) for x in raw["a_components"])
        b_components = tuple(str(x) for x in raw["b_components"])
    except KeyError as exc:
        raise ConfigError(f"config missing key {exc}") from exc
    input_weights: dict[tuple[str, str], float] = {}
    for key, value in dict(raw.get("input_weights", {})).items():
        input_weights[parse_weight_key(key)] = float(value)
    if "output_weights" in raw:
        output_weights = {str(k): float(v) for k, v in dict(raw["output_weights"]).items()}
        for b_name in b_components:
            output_weights.setdefault(b_name, 0.0)
    else:
        output_weights = {b_name: 1.0 for b_name in b_components}
    cfg = WeightConfig(
        a_components=a_components,
        b_components=b_components,
        input_weights=input_weights,
        output_weights=output_weights,
        threshold=float(raw.get("threshold", 0.5)),
        clamp_mode=frozenset(raw.get("clamp_mode", DEFAULT_CLAMP_MODE)),
    )
    cfg.validate()
    return cfg


def config_to_dict(cfg: WeightConfig) -> dict:
    return {
        "a_components": list(cfg.a_components),
        "b_components": list(cfg.b_components),
        "input_weights": {
            f"{a}>{b}": cfg.weight(a, b) for (a, b) in weight_key_order(cfg)
        },
        "output_weights": {b: cfg.output_weight(b) for b in cfg.b_components},
        "threshold": cfg.threshold,
        "clamp_mode": sorted(cfg.clamp_mode),
    }


def parse_weight_key(key: str) -> tuple[str, str]:
    a_name, sep, b_name = str(key).partition(">")
    if not sep or not a_name or not b_name:
        raise ConfigError(f"weight key {key!r} is not of the form 'aComponent>bComponent'")
    return a_name, b_name


def load_config(path: str | Path) -> WeightConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(raw)


def save_config(cfg: WeightConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
