import math
import random

import pytest

from conftest import DictSource
from hetmatch import evaluation, train
from hetmatch.errors import ConfigError, EmptyDataset
from hetmatch.index import PairVectorSource
from hetmatch.simnet import WeightConfig
from hetmatch.train import (
    GridSpec,
    LabeledPair,
    bce,
    dataset_loss,
    es_fit,
    fit_threshold,
    get_param,
    grid_from_dict,
    grid_search,
    gradient,
    sgd_fit,
    trainable_keys,
    with_params,
)


def fd_gradient(pairs, cfg, source, keys, h=1e-5):
    """Central finite differences of the dataset loss (independent oracle)."""
    out = {}
    for key in keys:
        value = get_param(cfg, key)
        up = dataset_loss(pairs, with_params(cfg, {key: value + h}), source)
        down = dataset_loss(pairs, with_params(cfg, {key: value - h}), source)
        out[key] = (up - down) / (2 * h)
    return out


def random_smooth_problem(rng):
    """Random positive vectors/weights: no ReLU kinks, p away from clips."""
    n = rng.randint(1, 3)
    m = rng.randint(1, 3)
    a_names = tuple(f"fa{i}" for i in range(n))
    b_names = tuple(f"fb{j}" for j in range(m))
    vocab = [f"t{i}" for i in range(10)]

    def rvec():
        return {t: rng.uniform(0.2, 3.0) for t in rng.sample(vocab, k=rng.randint(2, 6))}

    a_ids = [f"a{i}" for i in range(rng.randint(1, 3))]
    b_ids = [f"b{i}" for i in range(rng.randint(1, 3))]
    a_vectors = {(a, fa): rvec() for a in a_ids for fa in a_names}
    b_vectors = {(b, fb): rvec() for b in b_ids for fb in b_names}
    cfg = WeightConfig(
        a_names,
        b_names,
        {(fa, fb): rng.uniform(0.3, 3.0) for fa in a_names for fb in b_names},
        {fb: rng.uniform(0.3, 2.0) for fb in b_names},
    )
    pairs = [
        LabeledPair(a, b, rng.randint(0, 1)) for a in a_ids for b in b_ids
    ]
    return pairs, cfg, DictSource(a_vectors, b_vectors)


@pytest.fixture(scope="module")
def planted():
    data = evaluation.synth_corpus(
        seed=7, n_a=14, n_b=14, planted_pairs=6, noise_vocab=40,
        markers_per_pair=(2, 3),
    )
    source = PairVectorSource(data.corpus_a, data.corpus_b)
    base = WeightConfig(
        a_components=("title", "summary"),
        b_components=("title", "summary"),
        input_weights={
            ("title", "title"): 1.0,
            ("title", "summary"): 1.0,
            ("summary", "title"): 1.0,
            ("summary", "summary"): 1.0,
        },
        output_weights={"title": 1.0, "summary": 1.0},
        threshold=0.3,
    )
    return data, source, base


class TestBce:
    def test_hand_values(self):
        assert bce(1, 0.75) == pytest.approx(-math.log(0.75), abs=1e-12)
        assert bce(1, 0.75) == pytest.approx(0.28768, abs=1e-5)
        assert bce(0, 0.5) == pytest.approx(math.log(2), abs=1e-12)

    def test_perfect_prediction_clipped(self):
        assert bce(1, 1.0) == pytest.approx(0.0, abs=1e-6)
        assert bce(0, 0.0) == pytest.approx(0.0, abs=1e-6)

    def test_nonnegative_and_total(self):
        rng = random.Random(0)
        for _ in range(200):
            value = bce(rng.randint(0, 1), rng.uniform(-0.5, 1.5))
            assert value >= 0.0
            assert math.isfinite(value)


class TestDatasetLoss:
    def test_single_pair(self, planted):
        data, source, base = planted
        pair = data.labels[0]
        from hetmatch import simnet

        p = simnet.score(pair.a_id, pair.b_id, base, source).score
        assert dataset_loss([pair], base, source) == pytest.approx(
            bce(pair.label, p), abs=1e-12
        )

    def test_duplication_invariance(self, planted):
        data, source, base = planted
        pairs = data.labels[:4]
        assert dataset_loss(pairs * 3, base, source) == pytest.approx(
            dataset_loss(pairs, base, source), abs=1e-12
        )

    def test_mean_of_two(self, planted):
        _, source, base = planted
        data, _, _ = planted
        a, b = data.labels[0], data.labels[-1]
        la = dataset_loss([a], base, source)
        lb = dataset_loss([b], base, source)
        assert dataset_loss([a, b], base, source) == pytest.approx(
            (la + lb) / 2, abs=1e-12
        )

    def test_empty_rejected(self, planted):
        _, source, base = planted
        with pytest.raises(EmptyDataset):
            dataset_loss([], base, source)


class TestGradient:
    def test_matches_finite_differences_at_smooth_points(self):
        rng = random.Random(123)
        worst = 0.0
        for _ in range(40):
            pairs, cfg, source = random_smooth_problem(rng)
            keys = trainable_keys(cfg)
            analytic = gradient(pairs, cfg, source)
            numeric = fd_gradient(pairs, cfg, source, keys)
            assert not analytic.flagged
            for key in keys:
                a, n = analytic.get(key), numeric[key]
                err = abs(a - n) / max(1e-6, abs(a), abs(n))
                worst = max(worst, err)
        assert worst <= 1e-4

    def test_zero_column_flagged_with_zero_subgradient(self):
        cfg = WeightConfig(
            a_components=("f1", "f2"),
            b_components=("g1", "g2"),
            input_weights={("f1", "g1"): 0.0, ("f2", "g1"): 0.0,
                           ("f1", "g2"): 1.0, ("f2", "g2"): 1.0},
            output_weights={"g1": 1.0, "g2": 1.0},
        )
        source = DictSource(
            {("a", "f1"): {"x": 1.0}, ("a", "f2"): {"y": 1.0}},
            {("b", "g1"): {"x": 1.0}, ("b", "g2"): {"x": 1.0, "y": 1.0}},
        )
        grad = gradient([LabeledPair("a", "b", 1)], cfg, source)
        assert ("w", "f1", "g1") in grad.flagged
        assert ("w", "f2", "g1") in grad.flagged
        assert grad.get(("w", "f1", "g1")) == 0.0
        assert grad.get(("w", "f2", "g1")) == 0.0

    def test_zero_gradient_at_symmetric_minimum(self):
        # sim(g1) = (w+1)/(sqrt(2)*sqrt(w^2+1)) peaks at w=1; the noise
        # component g2 keeps p strictly inside (0, 1).
        cfg = WeightConfig(
            a_components=("f1", "f2"),
            b_components=("g1", "g2"),
            input_weights={("f1", "g1"): 1.0, ("f2", "g1"): 1.0,
                           ("f1", "g2"): 0.0, ("f2", "g2"): 0.0},
            output_weights={"g1": 1.0, "g2": 1.0},
        )
        source = DictSource(
            {("a", "f1"): {"x": 1.0}, ("a", "f2"): {"y": 1.0}},
            {("b", "g1"): {"x": 1.0, "y": 1.0}, ("b", "g2"): {"z": 1.0}},
        )
        grad = gradient([LabeledPair("a", "b", 1)], cfg, source)
        assert abs(grad.get(("w", "f1", "g1"))) <= 1e-6
        assert abs(grad.get(("w", "f2", "g1"))) <= 1e-6

    def test_orthogonal_to_column_scaling_direction(self):
        rng = random.Random(55)
        for _ in range(40):
            pairs, cfg, source = random_smooth_problem(rng)
            grad = gradient(pairs, cfg, source)
            for b_name in cfg.b_components:
                directional = sum(
                    cfg.weight(a_name, b_name) * grad.get(("w", a_name, b_name))
                    for a_name in cfg.a_components
                )
                assert abs(directional) <= 1e-6


class TestSgd:
    def test_loss_decreases_on_planted_data(self, planted):
        data, source, base = planted
        report = sgd_fit(data.labels, base, lr=0.2, iters=40, source=source)
        assert report.loss_trajectory[-1] < report.loss_trajectory[0]

    def test_zero_learning_rate_is_constant(self, planted):
        data, source, base = planted
        report = sgd_fit(data.labels, base, lr=0.0, iters=5, source=source)
        assert report.best_config == base or report.best_config.input_weights == base.input_weights
        assert len(set(report.loss_trajectory)) == 1

    def test_single_step_is_init_minus_lr_gradient(self, planted):
        data, source, base = planted
        lr = 0.01
        grad = gradient(data.labels, base, source)
        report = sgd_fit(data.labels, base, lr=lr, iters=1, source=source)
        stepped = (
            report.best_config
            if report.accuracy_trajectory[-1] >= report.accuracy_trajectory[0]
            else None
        )
        # reconstruct the iterate regardless of which config won "best"
        final_losses = report.loss_trajectory
        assert len(final_losses) == 2
        expected = {
            key: get_param(base, key) - lr * grad.get(key)
            for key in trainable_keys(base)
        }
        expected = {k: (max(0.0, v) if k[0] == "v" else v) for k, v in expected.items()}
        manual = with_params(base, expected)
        assert dataset_loss(data.labels, manual, source) == pytest.approx(
            final_losses[1], abs=1e-12
        )
        if stepped is not None and final_losses[1] < final_losses[0]:
            for key in trainable_keys(base):
                assert get_param(manual, key) == pytest.approx(
                    expected[key], abs=1e-12
                )

    def test_trajectory_shape_and_determinism(self, planted):
        data, source, base = planted
        r1 = sgd_fit(data.labels, base, lr=0.1, iters=7, source=source)
        r2 = sgd_fit(data.labels, base, lr=0.1, iters=7, source=source)
        assert r1.loss_trajectory == r2.loss_trajectory
        assert r1.accuracy_trajectory == r2.accuracy_trajectory
        assert len(r1.loss_trajectory) == r1.iterations + 1
        assert r1.best_accuracy == max(r1.accuracy_trajectory)


class TestGrid:
    def test_singleton_grid_returns_that_config(self, planted):
        data, source, base = planted
        grid = GridSpec(input_values={("title", "title"): [4.0]})
        report = grid_search(data.labels, grid, base, source=source)
        assert report.best_config.weight("title", "title") == 4.0
        assert report.iterations == 1

    def test_planted_signal_gets_max_grid_value(self, planted):
        data, source, base = planted
        grid = GridSpec(
            input_values={("title", "title"): [0.0, 2.0, 6.0]},
            threshold_candidates=[0.3, 0.5],
        )
        report = grid_search(data.labels, grid, base, source=source)
        assert report.best_config.weight("title", "title") == 6.0
        assert report.iterations == 6
        # exhaustiveness: best accuracy >= every evaluated accuracy
        assert report.best_accuracy >= max(acc for _c, acc, _l in report.evaluated)

    def test_tie_broken_by_smallest_tuple(self, planted):
        data, source, base = planted
        # with the rest of the title column zeroed, 2.0 and 4.0 are pure
        # scalings of each other: an exact accuracy tie
        flat = with_params(base, {("w", "summary", "title"): 0.0})
        grid = grid_from_dict({"title>title": [4.0, 2.0]})
        report = grid_search(data.labels, grid, flat, source=source)
        accs = [acc for _cfg, acc, _loss in report.evaluated]
        assert accs[0] == accs[1]
        assert report.best_config.weight("title", "title") == 2.0

    def test_metric_loss_minimizes(self, planted):
        data, source, base = planted
        grid = GridSpec(input_values={("title", "title"): [0.0, 2.0, 6.0]})
        report = grid_search(data.labels, grid, base, source=source, metric="loss")
        assert report.best_loss == min(loss for _c, _a, loss in report.evaluated)

    def test_empty_dataset_rejected(self, planted):
        _, source, base = planted
        grid = GridSpec(input_values={("title", "title"): [1.0]})
        with pytest.raises(EmptyDataset):
            grid_search([], grid, base, source=source)

    def test_unknown_key_rejected(self, planted):
        data, source, base = planted
        grid = GridSpec(input_values={("credits", "title"): [1.0]})
        with pytest.raises(ConfigError):
            grid_search(data.labels, grid, base, source=source)

    def test_grid_file_parsing(self):
        spec = grid_from_dict({
            "title>title": [0, 3, 6],
            "output_weights": [{"title": 1.0, "summary": 1.0}],
            "threshold": [0.4, 0.5],
        })
        assert spec.input_values[("title", "title")] == [0.0, 3.0, 6.0]
        assert spec.size() == 6


class TestEs:
    def test_best_so_far_accuracy_monotone(self, planted):
        data, source, base = planted
        report = es_fit(
            data.labels, base, population=6, sigma=0.8, generations=15,
            seed=3, source=source,
        )
        acc = report.accuracy_trajectory
        assert all(acc[i + 1] >= acc[i] for i in range(len(acc) - 1))

    def test_sigma_zero_is_constant(self, planted):
        data, source, base = planted
        report = es_fit(
            data.labels, base, population=4, sigma=0.0, generations=5,
            seed=3, source=source,
        )
        assert len(set(report.accuracy_trajectory)) == 1
        assert report.best_config.input_weights == base.input_weights

    def test_seeded_determinism(self, planted):
        data, source, base = planted
        kwargs = dict(population=5, sigma=0.6, generations=8, seed=11, source=source)
        r1 = es_fit(data.labels, base, **kwargs)
        r2 = es_fit(data.labels, base, **kwargs)
        assert r1.accuracy_trajectory == r2.accuracy_trajectory
        assert r1.loss_trajectory == r2.loss_trajectory
        assert r1.best_config == r2.best_config

    def test_one_dimensional_reaches_grid_best(self, planted):
        data, source, base = planted
        grid = GridSpec(input_values={("title", "title"): [0.0, 2.0, 6.0]})
        grid_report = grid_search(data.labels, grid, base, source=source)
        es_report = es_fit(
            data.labels, base, population=8, sigma=1.0, generations=30,
            seed=1, source=source, trainable=[("w", "title", "title")],
        )
        assert es_report.best_accuracy >= grid_report.best_accuracy

    def test_population_too_small_rejected(self, planted):
        data, source, base = planted
        with pytest.raises(ConfigError):
            es_fit(data.labels, base, population=1, source=source)


class TestFitThreshold:
    def test_picks_separating_threshold(self, planted):
        data, source, base = planted
        swept = fit_threshold(data.labels, base, source)
        base_acc = train.classification_accuracy(data.labels, base, source)
        swept_acc = train.classification_accuracy(data.labels, swept, source)
        assert swept_acc >= base_acc
        assert 0.01 <= swept.threshold <= 0.99
