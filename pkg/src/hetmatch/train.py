"""Fitting the network weights from labeled pairs.

Three fitters over the same objective: full-batch steepest descent on the
binary cross-entropy of the match score (analytic gradient), exhaustive
grid search over candidate weight values, and a derivative-free (1+lambda)
elitist evolution strategy. All of them are deterministic given their
inputs (and seed, for the evolution strategy).
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import simnet
from .errors import ConfigError, EmptyDataset, TrainError
from .simnet import VectorSource, WeightConfig, weight_key_order

BCE_EPS = 1e-7
KINK_EPS = 1e-9

# Parameter coordinates: ("w", a_component, b_component), ("v", b_component)
# or ("theta",). Canonical order: input weights A-major, then output
# weights in B order, then the threshold.
ParamKey = tuple


@dataclass(frozen=True)
class LabeledPair:
    a_id: str
    b_id: str
    label: int


@dataclass(frozen=True)
class Gradient:
    values: dict[ParamKey, float]
    flagged: frozenset[ParamKey] = frozenset()

    def get(self, key: ParamKey) -> float:
        return self.values.get(key, 0.0)


@dataclass
class TrainReport:
    """Outcome of one fitting run.

    ``loss_trajectory``/``accuracy_trajectory`` start at the initial (or
    base) config and gain one entry per iteration, generation, or grid
    point, so their length is ``iterations + 1``. ``best_config`` has
    accuracy >= every evaluated candidate.
    """

    mode: str
    best_config: WeightConfig
    best_accuracy: float
    best_loss: float
    loss_trajectory: list[float]
    accuracy_trajectory: list[float]
    iterations: int
    wall_time_s: float
    evaluated: list[tuple[WeightConfig, float, float]] | None = None
    flagged: frozenset = frozenset()

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "best_config": simnet.config_to_dict(self.best_config),
            "best_accuracy": self.best_accuracy,
            "best_loss": self.best_loss,
            "loss_trajectory": self.loss_trajectory,
            "accuracy_trajectory": self.accuracy_trajectory,
            "iterations": self.iterations,
            "wall_time_s": self.wall_time_s,
        }
        if self.evaluated is not None:
            out["evaluated"] = [
                {
                    "config": simnet.config_to_dict(cfg),
                    "accuracy": acc,
                    "loss": loss,
                }
                for cfg, acc, loss in self.evaluated
            ]
        return out


# -- parameter plumbing ------------------------------------------------------

def trainable_keys(cfg: WeightConfig, include_threshold: bool = False) -> list[ParamKey]:
    keys: list[ParamKey] = [("w", a, b) for (a, b) in weight_key_order(cfg)]
    keys.extend(("v", b) for b in cfg.b_components)
    if include_threshold:
        keys.append(("theta",))
    return keys


def get_param(cfg: WeightConfig, key: ParamKey) -> float:
    kind = key[0]
    if kind == "w":
        return cfg.weight(key[1], key[2])
    if kind == "v":
        return cfg.output_weight(key[1])
    if kind == "theta":
        return cfg.threshold
    raise ConfigError(f"unknown parameter key {key!r}")


def with_params(cfg: WeightConfig, updates: Mapping[ParamKey, float]) -> WeightConfig:
    input_weights = dict(cfg.input_weights)
    output_weights = {b: cfg.output_weight(b) for b in cfg.b_components}
    threshold = cfg.threshold
    for key, value in updates.items():
        kind = key[0]
        if kind == "w":
            input_weights[(key[1], key[2])] = value
        elif kind == "v":
            output_weights[key[1]] = value
        elif kind == "theta":
            threshold = value
        else:
            raise ConfigError(f"unknown parameter key {key!r}")
    return cfg.with_updates(input_weights, output_weights, threshold)


def param_tuple(cfg: WeightConfig) -> tuple[float, ...]:
    """All parameters in canonical order; used for deterministic tie-breaks."""
    return tuple(get_param(cfg, k) for k in trainable_keys(cfg, include_threshold=True))


# -- objective ---------------------------------------------------------------

def bce(label: int, p: float) -> float:
    """Binary cross-entropy with epsilon clipping, total over all inputs."""
    p = min(max(p, BCE_EPS), 1.0 - BCE_EPS)
    return -(label * math.log(p) + (1 - label) * math.log(1.0 - p))


def _pair_scores(
    pairs: Sequence[LabeledPair], cfg: WeightConfig, source: VectorSource
) -> list[float]:
    scores = []
    queries_cache: dict[str, dict] = {}
    for pair in pairs:
        queries = queries_cache.get(pair.a_id)
        if queries is None:
            queries = simnet.combined_queries(pair.a_id, cfg, source)
            queries_cache[pair.a_id] = queries
        scores.append(simnet.score_against(queries, pair.b_id, cfg, source).score)
    return scores


def dataset_loss(
    pairs: Sequence[LabeledPair], cfg: WeightConfig, source: VectorSource
) -> float:
    """Mean binary cross-entropy of the match scores over labeled pairs."""
    if not pairs:
        raise EmptyDataset("no labeled pairs")
    scores = _pair_scores(pairs, cfg, source)
    return sum(bce(pair.label, s) for pair, s in zip(pairs, scores)) / len(pairs)


def classification_accuracy(
    pairs: Sequence[LabeledPair], cfg: WeightConfig, source: VectorSource
) -> float:
    """Percent of pairs where the thresholded score agrees with the label."""
    if not pairs:
        raise EmptyDataset("no labeled pairs")
    scores = _pair_scores(pairs, cfg, source)
    correct = sum(
        1
        for pair, s in zip(pairs, scores)
        if simnet.classify(s, cfg.threshold).matched == bool(pair.label)
    )
    return 100.0 * correct / len(pairs)


def evaluate_config(
    pairs: Sequence[LabeledPair], cfg: WeightConfig, source: VectorSource
) -> tuple[float, float]:
    """(accuracy percent, mean loss) with the scores computed once."""
    if not pairs:
        raise EmptyDataset("no labeled pairs")
    scores = _pair_scores(pairs, cfg, source)
    loss = 0.0
    correct = 0
    for pair, s in zip(pairs, scores):
        loss += bce(pair.label, s)
        if simnet.classify(s, cfg.threshold).matched == bool(pair.label):
            correct += 1
    return 100.0 * correct / len(pairs), loss / len(pairs)


# -- analytic gradient -------------------------------------------------------

def _accumulate(
    a_vectors: Sequence[Mapping[str, float]], weights: Sequence[float]
) -> dict[str, float]:
    # Like simnet.combine but keeps exact zeros, which mark ReLU kinks.
    acc: dict[str, float] = {}
    for w, vec in zip(weights, a_vectors):
        if w == 0.0:
            continue
        for lexeme, value in vec.items():
            acc[lexeme] = acc.get(lexeme, 0.0) + w * value
    return acc


def gradient(
    pairs: Sequence[LabeledPair], cfg: WeightConfig, source: VectorSource
) -> Gradient:
    """Analytic gradient of :func:`dataset_loss` w.r.t. w_ij and v_j.

    At nondifferentiable points (zero query vector, ReLU kinks within
    ``KINK_EPS``) the affected coordinates get subgradient 0 and are
    reported in ``flagged``; the flags are conservative.
    """
    if not pairs:
        raise EmptyDataset("no labeled pairs")
    clamp_vec = simnet.CLAMP_VECTORS in cfg.clamp_mode
    clamp_w = simnet.CLAMP_WEIGHTS in cfg.clamp_mode
    clamp_s = simnet.CLAMP_SIMS in cfg.clamp_mode
    a_names = cfg.a_components
    b_names = cfg.b_components
    total_v = sum(cfg.output_weight(b) for b in b_names)
    if total_v <= 0.0:
        raise ConfigError("output weights sum to zero")

    grads: dict[ParamKey, float] = {}
    flagged: set[ParamKey] = set()
    a_cache: dict[str, list[Mapping[str, float]]] = {}

    for pair in pairs:
        a_vecs = a_cache.get(pair.a_id)
        if a_vecs is None:
            a_vecs = [source.a_vector(pair.a_id, a) for a in a_names]
            a_cache[pair.a_id] = a_vecs

        # Forward pass, keeping raw (pre-clamp) query accumulations.
        per_b = []
        p = 0.0
        for b in b_names:
            column = [cfg.weight(a, b) for a in a_names]
            w_factors = [1.0] * len(column)
            used = list(column)
            if clamp_w:
                for i, w in enumerate(column):
                    if w < -KINK_EPS:
                        used[i], w_factors[i] = 0.0, 0.0
                    elif w <= KINK_EPS:
                        used[i], w_factors[i] = simnet.relu(w), 0.0
                        flagged.add(("w", a_names[i], b))
            raw = _accumulate(a_vecs, used)
            if clamp_vec:
                query = {t: v for t, v in raw.items() if v > 0.0}
            else:
                query = {t: v for t, v in raw.items() if v != 0.0}
            y_vec = source.b_vector(pair.b_id, b)
            nq = simnet.norm(query)
            ny = simnet.norm(y_vec)
            if nq == 0.0 or ny == 0.0:
                sim = 0.0
            else:
                dot = sum(v * y_vec[t] for t, v in query.items() if t in y_vec)
                sim = max(-1.0, min(1.0, dot / (nq * ny)))
            sim_used = simnet.relu(sim) if clamp_s else sim
            sim_factor = 1.0
            if clamp_s:
                if sim < -KINK_EPS:
                    sim_factor = 0.0
                elif sim <= KINK_EPS and nq > 0.0 and ny > 0.0:
                    sim_factor = 0.0
                    flagged.update(("w", a, b) for a in a_names)
            per_b.append((b, raw, query, y_vec, nq, ny, sim, sim_used, sim_factor, w_factors))
            p += cfg.output_weight(b) * sim_used
        p /= total_v

        if p <= BCE_EPS or p >= 1.0 - BCE_EPS:
            dldp = 0.0  # clipped region of the loss
        else:
            dldp = (p - pair.label) / (p * (1.0 - p))

        for b, raw, query, y_vec, nq, ny, sim, sim_used, sim_factor, w_factors in per_b:
            v_key = ("v", b)
            grads[v_key] = grads.get(v_key, 0.0) + dldp * (sim_used - p) / total_v
            if ny == 0.0:
                continue  # sim is constant in w: exactly smooth
            if nq == 0.0:
                # Zero query vector: cosine is nondifferentiable here.
                if any(a_vecs):
                    flagged.update(("w", a, b) for a in a_names)
                continue
            if dldp == 0.0 or sim_factor == 0.0:
                continue
            dlds = dldp * cfg.output_weight(b) / total_v * sim_factor
            inv_nq_ny = 1.0 / (nq * ny)
            sim_over_nq2 = sim / (nq * nq)
            for i, a in enumerate(a_names):
                if w_factors[i] == 0.0:
                    continue
                x_vec = a_vecs[i]
                if not x_vec:
                    continue
                acc = 0.0
                kinked = False
                for t, x_val in x_vec.items():
                    if clamp_vec:
                        raw_t = raw.get(t, 0.0)
                        if raw_t <= KINK_EPS:
                            if abs(raw_t) <= KINK_EPS:
                                kinked = True
                            continue
                    q_t = query.get(t, 0.0)
                    y_t = y_vec.get(t, 0.0)
                    acc += x_val * (y_t * inv_nq_ny - q_t * sim_over_nq2)
                if kinked:
                    flagged.add(("w", a, b))
                w_key = ("w", a, b)
                grads[w_key] = grads.get(w_key, 0.0) + dlds * acc * w_factors[i]

    n = len(pairs)
    return Gradient(
        values={k: v / n for k, v in grads.items()},
        flagged=frozenset(flagged),
    )


# -- threshold sweep ---------------------------------------------------------

def fit_threshold(
    pairs: Sequence[LabeledPair], cfg: WeightConfig, source: VectorSource
) -> WeightConfig:
    """1-D sweep of the decision threshold over 0.01..0.99 (step 0.01).

    Picks the threshold maximizing training accuracy; ties go to the
    smallest threshold.
    """
    if not pairs:
        raise EmptyDataset("no labeled pairs")
    scores = _pair_scores(pairs, cfg, source)
    best_theta, best_correct = cfg.threshold, -1
    for i in range(1, 100):
        theta = i / 100.0
        correct = sum(
            1
            for pair, s in zip(pairs, scores)
            if (s >= theta) == bool(pair.label)
        )
        if correct > best_correct:
            best_theta, best_correct = theta, correct
    return cfg.with_updates(threshold=best_theta)


# -- steepest descent --------------------------------------------------------

def sgd_fit(
    pairs: Sequence[LabeledPair],
    init_cfg: WeightConfig,
    lr: float = 0.1,
    iters: int = 200,
    *,
    source: VectorSource,
    trainable: Sequence[ParamKey] | None = None,
    sweep_threshold: bool = False,
) -> TrainReport:
    """Full-batch steepest descent on the dataset loss.

    Input weights are projected to >= 0 each step when the config clamps
    weights; output weights are always projected to >= 0 (they must stay
    non-negative). The threshold is untouched unless ``sweep_threshold``
    asks for a final 1-D sweep.
    """
    if iters < 1:
        raise ConfigError("iters must be >= 1")
    if lr < 0:
        raise ConfigError("learning rate must be >= 0")
    if not pairs:
        raise EmptyDataset("no labeled pairs")
    started = time.perf_counter()
    keys = list(trainable) if trainable is not None else trainable_keys(init_cfg)
    clamp_w = simnet.CLAMP_WEIGHTS in init_cfg.clamp_mode

    cfg = init_cfg
    acc, loss = evaluate_config(pairs, cfg, source)
    loss_traj, acc_traj = [loss], [acc]
    best = (cfg, acc, loss)
    flagged: set[ParamKey] = set()

    for step in range(iters):
        grad = gradient(pairs, cfg, source)
        flagged |= grad.flagged
        updates: dict[ParamKey, float] = {}
        for key in keys:
            value = get_param(cfg, key) - lr * grad.get(key)
            if key[0] == "v" or (key[0] == "w" and clamp_w):
                value = max(0.0, value)
            updates[key] = value
        cfg = with_params(cfg, updates)
        if sum(cfg.output_weight(b) for b in cfg.b_components) <= 0.0:
            raise TrainError(f"output weights collapsed to zero at iteration {step + 1}")
        acc, loss = evaluate_config(pairs, cfg, source)
        if not math.isfinite(loss):
            raise TrainError(f"non-finite loss {loss!r} at iteration {step + 1}")
        loss_traj.append(loss)
        acc_traj.append(acc)
        if (acc, -loss) > (best[1], -best[2]):
            best = (cfg, acc, loss)

    if sweep_threshold:
        swept = fit_threshold(pairs, cfg, source)
        acc, loss = evaluate_config(pairs, swept, source)
        if (acc, -loss) > (best[1], -best[2]):
            best = (swept, acc, loss)

    return TrainReport(
        mode="sgd",
        best_config=best[0],
        best_accuracy=best[1],
        best_loss=best[2],
        loss_trajectory=loss_traj,
        accuracy_trajectory=acc_traj,
        iterations=iters,
        wall_time_s=time.perf_counter() - started,
        flagged=frozenset(flagged),
    )


# -- grid search -------------------------------------------------------------

@dataclass
class GridSpec:
    """Candidate values per input-weight key, plus output-weight maps and
    thresholds. The total grid size is the product of all list lengths."""

    input_values: dict[tuple[str, str], list[float]]
    output_candidates: list[dict[str, float]] | None = None
    threshold_candidates: list[float] | None = None

    def validate(self) -> None:
        if not self.input_values and not self.output_candidates and not self.threshold_candidates:
            raise ConfigError("empty grid")
        for key, values in self.input_values.items():
            if not values:
                raise ConfigError(f"empty candidate list for {key[0]}>{key[1]}")
        if self.output_candidates is not None and not self.output_candidates:
            raise ConfigError("empty output_weights candidate list")
        if self.threshold_candidates is not None and not self.threshold_candidates:
            raise ConfigError("empty threshold candidate list")

    def size(self) -> int:
        n = 1
        for values in self.input_values.values():
            n *= len(values)
        n *= len(self.output_candidates or [None])
        n *= len(self.threshold_candidates or [None])
        return n


def grid_from_dict(raw: Mapping) -> GridSpec:
    """Parse the grid file form: weight-key -> value list, plus optional
    ``output_weights`` (list of maps) and ``threshold`` (list of reals)."""
    input_values: dict[tuple[str, str], list[float]] = {}
    output_candidates = None
    threshold_candidates = None
    for key, values in raw.items():
        if key == "output_weights":
            output_candidates = [
                {str(k): float(v) for k, v in entry.items()} for entry in values
            ]
        elif key == "threshold":
            threshold_candidates = [float(v) for v in values]
        else:
            input_values[simnet.parse_weight_key(key)] = [float(v) for v in values]
    spec = GridSpec(input_values, output_candidates, threshold_candidates)
    spec.validate()
    return spec


def load_grid(path: str | Path) -> GridSpec:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return grid_from_dict(raw)


def grid_search(
    pairs: Sequence[LabeledPair],
    grid: GridSpec,
    base_cfg: WeightConfig,
    *,
    source: VectorSource,
    metric: str = "accuracy",
) -> TrainReport:
    """Evaluate every config in the grid, exhaustively and in a fixed order.

    Returns the argmax-accuracy (or argmin-loss) config; ties are broken
    by the lexicographically smallest parameter tuple in canonical key
    order. The trajectory starts at the base config's metric and gains one
    entry per grid point.
    """
    if not pairs:
        raise EmptyDataset("no labeled pairs")
    if metric not in ("accuracy", "loss"):
        raise ConfigError(f"unknown metric {metric!r}")
    grid.validate()
    started = time.perf_counter()

    canonical = weight_key_order(base_cfg)
    for key in grid.input_values:
        if key not in canonical:
            raise ConfigError(f"grid key {key[0]}>{key[1]} names unknown components")
    ordered_keys = [key for key in canonical if key in grid.input_values]
    value_lists = [grid.input_values[key] for key in ordered_keys]
    output_options: list[dict[str, float] | None] = list(grid.output_candidates or [None])
    theta_options: list[float | None] = list(grid.threshold_candidates or [None])

    base_acc, base_loss = evaluate_config(pairs, base_cfg, source)
    acc_traj, loss_traj = [base_acc], [base_loss]
    evaluated: list[tuple[WeightConfig, float, float]] = []
    best: tuple[WeightConfig, float, float] | None = None
    best_rank: tuple | None = None

    for combo in itertools.product(*value_lists) if value_lists else [()]:
        for output_weights in output_options:
            for theta in theta_options:
                updates: dict[ParamKey, float] = {
                    ("w", a, b): value
                    for (a, b), value in zip(ordered_keys, combo)
                }
                if output_weights is not None:
                    for b_name in base_cfg.b_components:
                        updates[("v", b_name)] = output_weights.get(b_name, 0.0)
                if theta is not None:
                    updates[("theta",)] = theta
                cfg = with_params(base_cfg, updates)
                acc, loss = evaluate_config(pairs, cfg, source)
                evaluated.append((cfg, acc, loss))
                acc_traj.append(acc)
                loss_traj.append(loss)
                objective = -acc if metric == "accuracy" else loss
                rank = (objective, param_tuple(cfg))
                if best_rank is None or rank < best_rank:
                    best_rank = rank
                    best = (cfg, acc, loss)

    assert best is not None
    return TrainReport(
        mode="grid",
        best_config=best[0],
        best_accuracy=best[1],
        best_loss=best[2],
        loss_trajectory=loss_traj,
        accuracy_trajectory=acc_traj,
        iterations=len(evaluated),
        wall_time_s=time.perf_counter() - started,
        evaluated=evaluated,
    )


# -- evolution strategy ------------------------------------------------------

def es_fit(
    pairs: Sequence[LabeledPair],
    init_cfg: WeightConfig,
    population: int = 8,
    sigma: float = 0.5,
    generations: int = 50,
    seed: int = 0,
    *,
    source: VectorSource,
    trainable: Sequence[ParamKey] | None = None,
    include_threshold: bool = True,
) -> TrainReport:
    """(1+lambda) elitist evolution strategy with Gaussian perturbations.

    Children perturb every trainable real of the elite by N(0, sigma^2);
    the elite is replaced only by a strictly better child (higher
    accuracy, or equal accuracy with lower loss), so best-so-far accuracy
    never decreases. Deterministic under a fixed seed.
    """
    if population < 2:
        raise ConfigError("population must be >= 2")
    if generations < 0:
        raise ConfigError("generations must be >= 0")
    if not pairs:
        raise EmptyDataset("no labeled pairs")
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    keys = (
        list(trainable)
        if trainable is not None
        else trainable_keys(init_cfg, include_threshold=include_threshold)
    )
    clamp_w = simnet.CLAMP_WEIGHTS in init_cfg.clamp_mode

    def project(key: ParamKey, value: float) -> float:
        if key[0] == "v" or (key[0] == "w" and clamp_w):
            return max(0.0, value)
        if key[0] == "theta":
            return min(1.0, max(0.0, value))
        return value

    elite = init_cfg
    elite_acc, elite_loss = evaluate_config(pairs, elite, source)
    acc_traj, loss_traj = [elite_acc], [elite_loss]

    for _generation in range(generations):
        center = np.array([get_param(elite, k) for k in keys], dtype=float)
        noise = rng.normal(0.0, 1.0, size=(population, len(keys)))
        challenger: tuple[WeightConfig, float, float] | None = None
        for row in noise:
            values = center + sigma * row
            updates = {
                key: project(key, float(value)) for key, value in zip(keys, values)
            }
            child = with_params(elite, updates)
            if sum(child.output_weight(b) for b in child.b_components) <= 0.0:
                continue  # collapsed output weights cannot be scored
            acc, loss = evaluate_config(pairs, child, source)
            if challenger is None or (acc, -loss) > (challenger[1], -challenger[2]):
                challenger = (child, acc, loss)
        if challenger is not None and (
            challenger[1] > elite_acc
            or (challenger[1] == elite_acc and challenger[2] < elite_loss)
        ):
            elite, elite_acc, elite_loss = challenger
        acc_traj.append(elite_acc)
        loss_traj.append(elite_loss)

    return TrainReport(
        mode="es",
        best_config=elite,
        best_accuracy=elite_acc,
        best_loss=elite_loss,
        loss_trajectory=loss_traj,
        accuracy_trajectory=acc_traj,
        iterations=generations,
        wall_time_s=time.perf_counter() - started,
    )
