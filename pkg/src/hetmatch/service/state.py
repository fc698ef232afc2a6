"""Shared service state: corpora, active config, labels store, train lock.

Reads (recommend, next pair) run concurrently against immutable
snapshots; label appends serialize through one lock; config activation
swaps a single reference and replaces the config file atomically. At most
one training job runs at a time, enforced with a non-blocking lock.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import time
from pathlib import Path

from .. import evaluation, simnet, train
from ..errors import ConfigError, EmptyDataset, NotFound
from ..evaluation import JudgeRating
from ..index import Corpus, PairVectorSource
from ..simnet import WeightConfig


class TrainingBusy(Exception):
    """Another training job is already running."""


class AppState:
    def __init__(
        self,
        corpus_a: Corpus,
        corpus_b: Corpus,
        config: WeightConfig,
        labels_path: str | Path,
        config_path: str | Path | None = None,
        judging_k: int = 3,
        judging_seed: int = 0,
    ) -> None:
        self.corpus_a = corpus_a
        self.corpus_b = corpus_b
        self.config = config
        self.labels_path = Path(labels_path)
        self.config_path = Path(config_path) if config_path else None
        self.judging_k = judging_k
        self.judging_seed = judging_seed
        self._labels_lock = threading.Lock()
        self._train_lock = threading.Lock()
        self._queue: list[tuple[str, str]] | None = None
        self._queue_lock = threading.Lock()
        # (judge, a_id, b_id) triples already rated, seeded from disk
        self._rated: set[tuple[str, str, str]] = {
            (r.judge_id, r.a_id, r.b_id)
            for r in evaluation.load_ratings(self.labels_path)
        }

    @classmethod
    def from_paths(
        cls,
        index_a: str | Path,
        index_b: str | Path,
        weights: str | Path,
        labels: str | Path,
    ) -> "AppState":
        return cls(
            corpus_a=Corpus.load(index_a),
            corpus_b=Corpus.load(index_b),
            config=simnet.load_config(weights),
            labels_path=labels,
            config_path=Path(weights),
        )

    def source(self, cfg: WeightConfig | None = None) -> PairVectorSource:
        cfg = cfg or self.config
        return PairVectorSource(
            self.corpus_a,
            self.corpus_b,
            clamp=simnet.CLAMP_VECTORS in cfg.clamp_mode,
        )

    # -- reads ---------------------------------------------------------------

    def recommend(self, a_id: str, k: int) -> list[tuple[str, float]]:
        if a_id not in self.corpus_a.docs:
            raise NotFound(f"unknown document {a_id!r}")
        cfg = self.config
        return simnet.rank(a_id, self.corpus_b, cfg, self.source(cfg), k=k)

    def get_document(self, doc_id: str):
        doc = self.corpus_a.docs.get(doc_id) or self.corpus_b.docs.get(doc_id)
        if doc is None:
            raise NotFound(f"unknown document {doc_id!r}")
        return doc

    def judging_queue(self) -> list[tuple[str, str]]:
        with self._queue_lock:
            if self._queue is None:
                cfg = self.config
                self._queue = evaluation.judging_pairs(
                    self.corpus_a,
                    self.corpus_b,
                    cfg,
                    self.source(cfg),
                    k=self.judging_k,
                    seed=self.judging_seed,
                )
            return self._queue

    def next_pair(self, judge_id: str) -> tuple[str, str, float] | None:
        for a_id, b_id in self.judging_queue():
            if (judge_id, a_id, b_id) not in self._rated:
                cfg = self.config
                value = simnet.score(a_id, b_id, cfg, self.source(cfg)).score
                return a_id, b_id, value
        return None

    # -- labels ----------------------------------------------------------------

    def submit_label(self, judge_id: str, a_id: str, b_id: str, rating: int) -> JudgeRating:
        if rating not in (0, 1):
            raise ConfigError(f"rating must be 0 or 1, got {rating!r}")
        if a_id not in self.corpus_a.docs or b_id not in self.corpus_b.docs:
            raise NotFound(f"unknown pair ({a_id!r}, {b_id!r})")
        record = JudgeRating(
            a_id=a_id,
            b_id=b_id,
            judge_id=judge_id,
            rating=rating,
            timestamp=int(time.time()),
        )
        with self._labels_lock:
            evaluation.append_rating(self.labels_path, record)
            self._rated.add((judge_id, a_id, b_id))
        return record

    def labels_text(self) -> str:
        if not self.labels_path.is_file():
            return ""
        return self.labels_path.read_text(encoding="utf-8")

    # -- training ----------------------------------------------------------------

    def run_training(self, mode: str, params: dict) -> train.TrainReport:
        if not self._train_lock.acquire(blocking=False):
            raise TrainingBusy("a training job is already running")
        try:
            labels = evaluation.aggregate_labels(
                evaluation.load_ratings(self.labels_path)
            )
            if not labels:
                raise EmptyDataset("no aggregated labels to train on")
            pairs = evaluation.as_pairs(labels)
            base = self.config
            source = self.source(base)
            if mode == "grid":
                grid = train.grid_from_dict(params.get("grid", {}))
                report = train.grid_search(
                    pairs, grid, base, source=source,
                    metric=params.get("metric", "accuracy"),
                )
            elif mode == "sgd":
                report = train.sgd_fit(
                    pairs,
                    base,
                    lr=float(params.get("lr", 0.1)),
                    iters=int(params.get("iters", 200)),
                    source=source,
                    sweep_threshold=bool(params.get("sweep_threshold", True)),
                )
            elif mode == "es":
                report = train.es_fit(
                    pairs,
                    base,
                    population=int(params.get("population", 8)),
                    sigma=float(params.get("sigma", 0.5)),
                    generations=int(params.get("generations", 50)),
                    seed=int(params.get("seed", 0)),
                    source=source,
                )
            else:
                raise ConfigError(f"unknown training mode {mode!r}")
            self.activate_config(report.best_config)
            return report
        finally:
            self._train_lock.release()

    def activate_config(self, cfg: WeightConfig) -> None:
        """Swap the active config and persist it atomically."""
        cfg.validate()
        if self.config_path is not None:
            payload = json.dumps(simnet.config_to_dict(cfg), indent=2, sort_keys=True) + "\n"
            directory = self.config_path.parent
            directory.mkdir(parents=True, exist_ok=True)
            history = directory / f"{self.config_path.stem}-{int(time.time())}{self.config_path.suffix}"
            if not history.exists():
                history.write_text(payload, encoding="utf-8")
            fd, tmp_name = tempfile.mkstemp(dir=directory, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(payload)
                    fh.flush()
                    os.fsync(fh.fileno())
                os.replace(tmp_name, self.config_path)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        self.config = cfg
        with self._queue_lock:
            self._queue = None  # judging queue depends on the active config
