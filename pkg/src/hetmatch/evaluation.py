"""Ground truth from human judges, accuracy reports, synthetic corpora.

Judges rate (A doc, B doc) pairs as match / no match; strict-majority
aggregation turns those ratings into labels, and accuracy is the percent
of labeled pairs where the thresholded score agrees. A deterministic
planted-match generator provides desk-scale datasets with known ground
truth.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import simnet, train
from .errors import ConfigError, EmptyDataset
from .index import Corpus, Document
from .simnet import VectorSource, WeightConfig, weight_key_order
from .train import LabeledPair


@dataclass(frozen=True)
class JudgeRating:
    a_id: str
    b_id: str
    judge_id: str
    rating: int
    timestamp: int


@dataclass(frozen=True)
class AggregatedLabel:
    a_id: str
    b_id: str
    label: int
    support: int


def aggregate_labels(ratings: Iterable[JudgeRating]) -> list[AggregatedLabel]:
    """Strict-majority vote per pair, one vote per judge.

    A judge's later rating supersedes earlier ones (by timestamp; exact
    timestamp ties resolve to the higher rating so the result does not
    depend on input order). Pairs with a tied vote are dropped.
    """
    latest: dict[tuple[str, str], dict[str, tuple[int, int]]] = {}
    for r in ratings:
        per_judge = latest.setdefault((r.a_id, r.b_id), {})
        current = per_judge.get(r.judge_id)
        if current is None or (r.timestamp, r.rating) > current:
            per_judge[r.judge_id] = (r.timestamp, r.rating)
    labels = []
    for (a_id, b_id), per_judge in sorted(latest.items()):
        votes = [rating for _ts, rating in per_judge.values()]
        ones = sum(votes)
        zeros = len(votes) - ones
        if ones == zeros:
            continue
        labels.append(
            AggregatedLabel(a_id, b_id, int(ones > zeros), support=len(votes))
        )
    return labels


def as_pairs(labels: Iterable[AggregatedLabel | LabeledPair]) -> list[LabeledPair]:
    return [LabeledPair(lab.a_id, lab.b_id, lab.label) for lab in labels]


def accuracy(
    labels: Sequence[AggregatedLabel | LabeledPair],
    cfg: WeightConfig,
    source: VectorSource,
) -> float:
    """Percent of labeled pairs classified in agreement with their label."""
    if not labels:
        raise EmptyDataset("no labels")
    return train.classification_accuracy(as_pairs(labels), cfg, source)


@dataclass
class EvalReport:
    """Per-config accuracy over one labeled pair set."""

    key_order: list[tuple[str, str]]
    configs: list[WeightConfig]
    accuracies: list[float]
    pair_count: int

    def to_dict(self) -> dict:
        return {
            "pair_count": self.pair_count,
            "configs": [simnet.config_to_dict(c) for c in self.configs],
            "accuracies": self.accuracies,
        }

    def render(self) -> str:
        columns = [
            {f"{a}>{b}": cfg.weight(a, b) for (a, b) in self.key_order}
            for cfg in self.configs
        ]
        return render_weight_table(
            [f"{a}>{b}" for (a, b) in self.key_order], columns, self.accuracies
        )


def weight_table(
    labels: Sequence[AggregatedLabel | LabeledPair],
    configs: Sequence[WeightConfig],
    source: VectorSource,
) -> EvalReport:
    """Accuracy per config, rows ordered by the canonical weight-key order."""
    if not configs:
        raise ConfigError("need at least one config")
    if not labels:
        raise EmptyDataset("no labels")
    pairs = as_pairs(labels)
    return EvalReport(
        key_order=weight_key_order(configs[0]),
        configs=list(configs),
        accuracies=[
            train.classification_accuracy(pairs, cfg, source) for cfg in configs
        ],
        pair_count=len(pairs),
    )


def render_weight_table(
    row_keys: Sequence[str],
    columns: Sequence[dict[str, float]],
    accuracies: Sequence[float],
) -> str:
    """Text table: one column per config, weight rows, final accuracy row."""

    def fmt(value: float) -> str:
        return f"{value:g}"

    header = ["Model"] + [str(i + 1) for i in range(len(columns))]
    rows = [header]
    for key in row_keys:
        rows.append([key] + [fmt(col.get(key, 0.0)) for col in columns])
    rows.append(["Accuracy (%)"] + [f"{acc:.1f}" for acc in accuracies])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])]
        cells += [cell.rjust(widths[i + 1]) for i, cell in enumerate(row[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


# Five hand-tuned weight presets over the title/summary component pair,
# kept as a fixture for reports and demos. All unlisted weights are 2.
_PRESET_ROWS: dict[tuple[str, str], tuple[float, ...]] = {
    ("title", "title"): (3, 0, 3, 6, 9),
    ("title", "summary"): (2, 0, 2, 4, 6),
    ("summary", "title"): (0, 3, 3, 3, 3),
}
_PRESET_DEFAULT = 2.0


def manual_presets(
    a_components: Sequence[str] = ("title", "summary"),
    b_components: Sequence[str] = ("title", "summary"),
    threshold: float = 0.5,
) -> list[WeightConfig]:
    configs = []
    for i in range(5):
        weights = {}
        for a in a_components:
            for b in b_components:
                row = _PRESET_ROWS.get((a, b))
                weights[(a, b)] = float(row[i]) if row else _PRESET_DEFAULT
        configs.append(
            WeightConfig(
                a_components=tuple(a_components),
                b_components=tuple(b_components),
                input_weights=weights,
                output_weights={b: 1.0 for b in b_components},
                threshold=threshold,
            )
        )
    return configs


# -- synthetic planted-match corpora ----------------------------------------

class SynthCorpus(NamedTuple):
    corpus_a: Corpus
    corpus_b: Corpus
    labels: list[LabeledPair]


_SYLLABLES = [c + v for c in "bdfgklmnprt" for v in "aeiou"]


def _noise_vocabulary(size: int) -> list[str]:
    words = []
    for combo in itertools.product(_SYLLABLES, repeat=3):
        words.append("".join(combo))
        if len(words) >= size:
            return words
    raise ConfigError(f"noise vocabulary size {size} too large")


def synth_corpus(
    seed: int,
    n_a: int,
    n_b: int,
    planted_pairs: int,
    signal_field_pair: tuple[str, str] = ("title", "title"),
    noise_vocab: int | Sequence[str] = 400,
    markers_per_pair: tuple[int, int] = (2, 6),
) -> SynthCorpus:
    """Deterministic two-corpus dataset with planted matches.

    Each planted pair shares a handful of rare marker lexemes in the
    designated (A field, B field); everything else is drawn from a common
    noise vocabulary, so only the planted field pair carries signal.
    Labels hold every planted pair (label 1) plus one random non-planted
    pair per A document (label 0).
    """
    if planted_pairs > min(n_a, n_b):
        raise ConfigError("planted_pairs must be <= min(n_a, n_b)")
    if n_a < 1 or n_b < 1:
        raise ConfigError("need at least one document per side")
    lo, hi = markers_per_pair
    if lo < 1 or hi < lo:
        raise ConfigError("markers_per_pair must be a non-empty 1-based range")
    vocab = (
        _noise_vocabulary(noise_vocab)
        if isinstance(noise_vocab, int)
        else list(noise_vocab)
    )
    if len(vocab) < 2:
        raise ConfigError("noise vocabulary too small")
    a_signal, b_signal = signal_field_pair
    fields = ("title", "summary")
    if a_signal not in fields or b_signal not in fields:
        raise ConfigError(f"signal fields must be one of {fields}")

    rng = np.random.default_rng(seed)

    def noise_words(n: int) -> list[str]:
        return [vocab[i] for i in rng.integers(0, len(vocab), size=n)]

    def make_doc(doc_id: str, doctype: str, signal_field: str, markers: list[str]) -> Document:
        components = {}
        for fieldname in fields:
            length = 6 if fieldname == "title" else 24
            words = noise_words(length)
            if fieldname == signal_field and markers:
                words = markers + words[: max(0, length - len(markers))]
                order = rng.permutation(len(words))
                words = [words[i] for i in order]
            components[fieldname] = " ".join(words)
        return Document(id=doc_id, doctype=doctype, components=components)

    marker_counts = [int(x) for x in rng.integers(lo, hi + 1, size=planted_pairs)]
    corpus_a = Corpus(doctype="article")
    corpus_b = Corpus(doctype="video")
    pair_markers = [
        [f"xq{i:04d}{chr(97 + t)}0" for t in range(marker_counts[i])]
        for i in range(planted_pairs)
    ]
    for i in range(n_a):
        markers = pair_markers[i] if i < planted_pairs else []
        corpus_a.add_document(make_doc(f"a{i:04d}", "article", a_signal, markers))
    for i in range(n_b):
        markers = pair_markers[i] if i < planted_pairs else []
        corpus_b.add_document(make_doc(f"b{i:04d}", "video", b_signal, markers))

    labels = [
        LabeledPair(f"a{i:04d}", f"b{i:04d}", 1) for i in range(planted_pairs)
    ]
    for i in range(n_a):
        while True:
            j = int(rng.integers(0, n_b))
            if not (i == j and i < planted_pairs):
                break
        labels.append(LabeledPair(f"a{i:04d}", f"b{j:04d}", 0))
    return SynthCorpus(corpus_a, corpus_b, labels)


def judging_pairs(
    corpus_a: Corpus,
    corpus_b: Corpus,
    cfg: WeightConfig,
    source: VectorSource,
    k: int = 3,
    seed: int = 0,
) -> list[tuple[str, str]]:
    """Pairs queued for human judging.

    For every A document: its top-k B documents under the current config,
    plus one random control B document not already among them.
    """
    rng = np.random.default_rng(seed)
    b_ids = sorted(corpus_b.docs)
    queue: list[tuple[str, str]] = []
    for a_id in sorted(corpus_a.docs):
        top = simnet.rank(a_id, corpus_b, cfg, source, k=k) if b_ids else []
        chosen = [b_id for b_id, _score in top]
        queue.extend((a_id, b_id) for b_id in chosen)
        remaining = [b for b in b_ids if b not in chosen]
        if remaining:
            queue.append((a_id, remaining[int(rng.integers(0, len(remaining)))]))
    return queue


# -- labels file IO ----------------------------------------------------------

def rating_to_dict(rating: JudgeRating) -> dict:
    return {
        "a_id": rating.a_id,
        "b_id": rating.b_id,
        "judge": rating.judge_id,
        "rating": rating.rating,
        "ts": rating.timestamp,
    }


def rating_from_dict(raw: dict) -> JudgeRating:
    return JudgeRating(
        a_id=str(raw["a_id"]),
        b_id=str(raw["b_id"]),
        judge_id=str(raw["judge"]),
        rating=int(raw["rating"]),
        timestamp=int(raw["ts"]),
    )


def load_ratings(path: str | Path) -> list[JudgeRating]:
    """Read a labels JSONL file; missing files mean no ratings yet."""
    path = Path(path)
    if not path.is_file():
        return []
    ratings = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                ratings.append(rating_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad label record ({exc})") from exc
    return ratings


def append_rating(path: str | Path, rating: JudgeRating) -> None:
    """Durably append one rating (flushed and fsynced before returning)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(rating_to_dict(rating), sort_keys=True) + "\n")
        fh.flush()
        os.fsync(fh.fileno())
