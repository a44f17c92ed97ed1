import random

import numpy as np
import pytest

from pqgrams.datasets import gen_strings
from pqgrams.grams import GramShape, Vocabulary, build_vocabulary, profile
from pqgrams.lmnn import (
    LabeledTree,
    ModelFormatError,
    PairSet,
    TrainConfig,
    TrainedModel,
    build_targets,
    encode_dataset,
    find_impostors,
    load_model,
    loss,
    loss_gradient,
    save_model,
    stratified_subsample,
    train,
)
from pqgrams.metric import W_INIT, WeightModel, distance_gradient, weighted_distance
from pqgrams.tree import parse_tree

from conftest import random_tree_raw
from oracles import naive_loss

S12 = GramShape(1, 2)


def encoded(texts_and_labels, shape=S12):
    data = [LabeledTree(parse_tree(t), lab) for t, lab in texts_and_labels]
    vocab, profiles, labels = encode_dataset(data, shape)
    return data, vocab, profiles, labels


def random_labeled(rng, n, max_nodes=10, classes=2):
    return [
        LabeledTree(random_tree_raw(rng.randrange(2, max_nodes + 1), rng), i % classes)
        for i in range(n)
    ]


# --- config -----------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(k=0)
    with pytest.raises(ValueError):
        TrainConfig(mu1=-1)
    with pytest.raises(ValueError):
        TrainConfig(eta=0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=-1)
    TrainConfig(epochs=0)  # evaluate-only runs are allowed


def test_config_defaults_match_protocol():
    cfg = TrainConfig()
    assert (cfg.mu1, cfg.mu2) == (5.0, 5.0)
    assert cfg.beta == 1e-4 and cfg.eta == 1e-2
    assert cfg.epochs == 600
    assert cfg.impostor_refresh_every == 50
    assert cfg.subsample_cap == 200


# --- pair construction ------------------------------------------------------


def test_targets_two_points_each_direction():
    _, vocab, profiles, labels = encoded([("a(b)", 0), ("a(c)", 0), ("x", 1), ("y", 1)])
    model = WeightModel.initial(vocab)
    targets = build_targets(profiles, labels, model, k=1)
    assert (0, 1) in targets and (1, 0) in targets
    assert (2, 3) in targets and (3, 2) in targets
    assert len(targets) == 4


def test_targets_tie_breaks_to_lowest_index():
    _, vocab, profiles, labels = encoded([("a", 0), ("a", 0), ("a", 0), ("b", 1), ("b", 1)])
    model = WeightModel.initial(vocab)
    targets = build_targets(profiles, labels, model, k=1)
    assert (0, 1) in targets
    assert (1, 0) in targets
    assert (2, 0) in targets


def test_targets_small_class_rejected():
    _, vocab, profiles, labels = encoded([("a", 0), ("b", 1), ("c", 1)])
    model = WeightModel.initial(vocab)
    with pytest.raises(ValueError, match="class 0"):
        build_targets(profiles, labels, model, k=1)


def test_every_point_gets_k_targets():
    data = gen_strings(20, seed=1).items
    vocab, profiles, labels = encode_dataset(data, GramShape(2, 2))
    model = WeightModel.initial(vocab)
    targets = build_targets(profiles, labels, model, k=3)
    assert len(targets) == 3 * len(data)
    for i, j in targets:
        assert labels[i] == labels[j] and i != j


def test_impostors_empty_when_classes_far_apart():
    _, vocab, profiles, labels = encoded(
        [("a(b)", 0), ("a(c)", 0), ("x(y(z))", 1), ("x(y(w))", 1)]
    )
    model = WeightModel.initial(vocab)
    targets = build_targets(profiles, labels, model, k=1)
    assert find_impostors(profiles, labels, model, targets, k=1) == []


def test_duplicate_with_other_label_is_always_an_impostor():
    _, vocab, profiles, labels = encoded(
        [("a(b,c)", 0), ("a(b,d)", 0), ("a(b,c)", 1), ("z(z(z))", 1)]
    )
    model = WeightModel.initial(vocab)
    targets = build_targets(profiles, labels, model, k=1)
    impostors = find_impostors(profiles, labels, model, targets, k=1)
    assert (0, 2) in impostors  # zero distance beats any positive radius


def test_impostors_match_bruteforce_filter():
    rng = random.Random(5)
    for trial in range(5):
        data = random_labeled(rng, 20)
        vocab, profiles, labels = encode_dataset(data, S12)
        model = WeightModel(
            vocab, np.random.default_rng(trial).uniform(-2, 2, vocab.dim)
        )
        targets = build_targets(profiles, labels, model, k=2)
        got = find_impostors(profiles, labels, model, targets, k=2)

        # independent route: full distance matrix, then filter
        m = len(data)
        dmat = [
            [weighted_distance(model, profiles[i], profiles[j]) for j in range(m)]
            for i in range(m)
        ]
        expected = []
        for i in range(m):
            radius = max(dmat[i][j] for (i2, j) in targets if i2 == i)
            for j in range(m):
                if labels[j] != labels[i] and dmat[i][j] < radius:
                    expected.append((i, j))
        assert got == expected


def test_pair_validity_postcondition():
    rng = random.Random(9)
    data = random_labeled(rng, 16)
    vocab, profiles, labels = encode_dataset(data, S12)
    model = WeightModel.initial(vocab)
    targets = build_targets(profiles, labels, model, k=2)
    impostors = find_impostors(profiles, labels, model, targets, k=2)
    assert all(labels[i] == labels[j] and i != j for i, j in targets)
    assert all(labels[i] != labels[j] for i, j in impostors)


# --- loss and gradient ------------------------------------------------------


def test_loss_zero_when_margins_satisfied():
    _, vocab, profiles, labels = encoded(
        [("a(b)", 0), ("a(b)", 0), ("x(y(z))", 1), ("x(y(z))", 1)]
    )
    model = WeightModel(vocab, np.zeros(vocab.dim))
    pairs = PairSet(positives=[(0, 1), (2, 3)], negatives=[(0, 2)])
    cfg = TrainConfig(mu1=5.0, mu2=1.0, beta=0.0)
    # positives identical (dist 0 <= mu1), negative far (dist >= mu2), w = 0
    assert loss(model, profiles, pairs, cfg) == 0.0


def test_loss_single_active_positive_hinge():
    t1 = parse_tree("r(x,x,x)")
    t2 = parse_tree("r")
    vocab = build_vocabulary([t1, t2], S12)
    profiles = [profile(t1, vocab), profile(t2, vocab)]
    model = WeightModel.initial(vocab)  # effective weights exactly 1
    d = weighted_distance(model, profiles[0], profiles[1])
    assert d == 8.0
    cfg = TrainConfig(mu1=5.0, beta=0.0)
    pairs = PairSet(positives=[(0, 1)], negatives=[])
    assert loss(model, profiles, pairs, cfg) == 3.0


def test_loss_matches_naive_reimplementation():
    rng = random.Random(13)
    np_rng = np.random.default_rng(13)
    for _ in range(10):
        data = random_labeled(rng, 10)
        vocab, profiles, labels = encode_dataset(data, S12)
        model = WeightModel(vocab, np_rng.uniform(-2, 2, vocab.dim))
        targets = build_targets(profiles, labels, model, k=1)
        negatives = find_impostors(profiles, labels, model, targets, k=1)
        pairs = PairSet(targets, negatives)
        cfg = TrainConfig(k=1, mu1=rng.uniform(0, 8), mu2=rng.uniform(0, 8), beta=1e-3)
        got = loss(model, profiles, pairs, cfg)
        want = naive_loss(model, profiles, pairs, cfg)
        assert got == pytest.approx(want, abs=1e-9)


def test_loss_gradient_zero_when_inactive():
    _, vocab, profiles, labels = encoded(
        [("a(b)", 0), ("a(b)", 0), ("x(y(z))", 1), ("x(y(z))", 1)]
    )
    model = WeightModel(vocab, np.zeros(vocab.dim))
    pairs = PairSet(positives=[(0, 1)], negatives=[(0, 2)])
    cfg = TrainConfig(mu1=5.0, mu2=1.0, beta=0.0)
    assert np.all(loss_gradient(model, profiles, pairs, cfg) == 0.0)


def test_loss_gradient_single_active_pair_is_distance_gradient():
    t1 = parse_tree("r(x,x,x,x)")
    t2 = parse_tree("r")
    vocab = build_vocabulary([t1, t2], S12)
    profiles = [profile(t1, vocab), profile(t2, vocab)]
    model = WeightModel.initial(vocab)
    cfg = TrainConfig(mu1=5.0, beta=0.0)
    pairs = PairSet(positives=[(0, 1)], negatives=[])
    got = loss_gradient(model, profiles, pairs, cfg)
    want = distance_gradient(model, profiles[0], profiles[1])
    assert got == pytest.approx(want, rel=1e-12)


def test_loss_gradient_matches_finite_differences_away_from_kinks():
    rng = random.Random(31)
    np_rng = np.random.default_rng(31)
    checked = 0
    while checked < 20:
        data = random_labeled(rng, 8)
        vocab, profiles, labels = encode_dataset(data, S12)
        model = WeightModel(vocab, np_rng.uniform(-2, 2, vocab.dim))
        targets = build_targets(profiles, labels, model, k=1)
        negatives = find_impostors(profiles, labels, model, targets, k=1)
        pairs = PairSet(targets, negatives)
        cfg = TrainConfig(k=1, mu1=4.0, mu2=6.0, beta=1e-3)
        dists = [
            weighted_distance(model, profiles[i], profiles[j])
            for i, j in pairs.positives + pairs.negatives
        ]
        if any(abs(d - cfg.mu1) < 1e-3 or abs(d - cfg.mu2) < 1e-3 for d in dists):
            continue  # too close to a hinge kink for finite differences
        analytic = loss_gradient(model, profiles, pairs, cfg)
        h = 1e-5
        fd = np.zeros(vocab.dim)
        for idx in range(vocab.dim):
            wp, wm = model.w.copy(), model.w.copy()
            wp[idx] += h
            wm[idx] -= h
            fd[idx] = (
                loss(WeightModel(vocab, wp), profiles, pairs, cfg)
                - loss(WeightModel(vocab, wm), profiles, pairs, cfg)
            ) / (2 * h)
        denom = np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-10)
        assert (np.abs(analytic - fd) / denom).max() < 1e-5
        checked += 1


# --- subsampling ------------------------------------------------------------


def test_subsample_noop_when_under_cap():
    assert stratified_subsample([0, 1, 0, 1], cap=10, k=1, rng=random.Random(0)) == [
        0,
        1,
        2,
        3,
    ]


def test_subsample_respects_cap_and_classes():
    labels = [0] * 300 + [1] * 100
    keep = stratified_subsample(labels, cap=200, k=3, rng=random.Random(1))
    assert len(keep) == 200
    kept_labels = [labels[i] for i in keep]
    assert kept_labels.count(0) == 150 and kept_labels.count(1) == 50


def test_subsample_keeps_small_classes_trainable():
    labels = [0] * 500 + [1] * 6
    keep = stratified_subsample(labels, cap=50, k=3, rng=random.Random(2))
    kept_labels = [labels[i] for i in keep]
    assert kept_labels.count(1) >= 4  # k+1
    assert len(keep) <= 50


# --- training ---------------------------------------------------------------


def strings_subset(n_per_class=12, seed=0):
    return gen_strings(n_per_class, seed=seed).items


def test_train_epochs_zero_is_initialization():
    data = strings_subset()
    trained = train(data, GramShape(2, 2), TrainConfig(k=1, epochs=0, seed=3))
    assert np.all(trained.model.w == W_INIT)
    assert len(trained.loss_trace) == 1


def test_train_is_deterministic():
    data = strings_subset()
    cfg = TrainConfig(k=1, epochs=25, seed=42)
    a = train(data, GramShape(2, 2), cfg)
    b = train(data, GramShape(2, 2), cfg)
    assert a.model.w.tobytes() == b.model.w.tobytes()
    assert a.loss_trace == b.loss_trace


def test_train_reduces_loss():
    data = strings_subset(20, seed=5)
    trained = train(data, GramShape(2, 2), TrainConfig(k=1, epochs=120, seed=5))
    assert trained.final_loss < trained.initial_loss
    assert len(trained.loss_trace) == 121


def test_train_rejects_degenerate_data():
    with pytest.raises(ValueError):
        train([], GramShape(2, 2), TrainConfig())
    one_class = [LabeledTree(parse_tree("a"), 0), LabeledTree(parse_tree("b"), 0)]
    with pytest.raises(ValueError, match="classes"):
        train(one_class, GramShape(2, 2), TrainConfig())


# --- model files ------------------------------------------------------------


def test_model_roundtrip_is_lossless(tmp_path):
    data = strings_subset()
    cfg = TrainConfig(k=1, epochs=10, seed=8)
    trained = train(data, GramShape(2, 2), cfg)
    path = tmp_path / "model.txt"
    save_model(trained, path)
    loaded = load_model(path)
    assert loaded.vocab.tuples == trained.vocab.tuples
    assert loaded.model.w.tobytes() == trained.model.w.tobytes()
    assert loaded.shape == trained.shape
    assert loaded.config == cfg
    assert loaded.final_loss == trained.final_loss


def test_model_roundtrip_preserves_distances(tmp_path):
    data = strings_subset()
    trained = train(data, GramShape(2, 2), TrainConfig(k=1, epochs=5, seed=1))
    path = tmp_path / "model.txt"
    save_model(trained, path)
    loaded = load_model(path)
    vocab = trained.vocab
    for item in data[:6]:
        x = profile(item.tree, vocab)
        for other in data[6:12]:
            y = profile(other.tree, vocab)
            xl = profile(item.tree, loaded.vocab)
            yl = profile(other.tree, loaded.vocab)
            assert weighted_distance(trained.model, x, y) == weighted_distance(
                loaded.model, xl, yl
            )


def test_oov_weight_preserved(tmp_path):
    vocab = build_vocabulary([parse_tree("a(b,c)")], S12)
    w = np.arange(vocab.dim, dtype=float) * 0.125 - 1.0
    trained = TrainedModel(WeightModel(vocab, w), None)
    path = tmp_path / "m.txt"
    save_model(trained, path)
    loaded = load_model(path)
    assert loaded.model.w[vocab.oov_id] == w[vocab.oov_id]
    assert loaded.config is None


def test_truncated_model_file_rejected(tmp_path):
    data = strings_subset()
    trained = train(data, GramShape(2, 2), TrainConfig(k=1, epochs=1, seed=0))
    path = tmp_path / "model.txt"
    save_model(trained, path)
    text = path.read_text()
    clipped = tmp_path / "clipped.txt"
    clipped.write_text("".join(text.splitlines(keepends=True)[:-3]))
    with pytest.raises(ModelFormatError, match="truncated|dim"):
        load_model(clipped)


def test_malformed_model_files_rejected(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("not a model\n")
    with pytest.raises(ModelFormatError, match="header"):
        load_model(bad)

    wrong_version = tmp_path / "v2.txt"
    wrong_version.write_text("pqgram-model v2 p=1 q=2 dim=1\nOOV 0.5\n")
    with pytest.raises(ModelFormatError, match="version"):
        load_model(wrong_version)

    wrong_dim = tmp_path / "dim.txt"
    wrong_dim.write_text(
        "pqgram-model v1 p=1 q=2 dim=3\na\t*\t*\t0.5\nOOV 0.5\n"
    )
    with pytest.raises(ModelFormatError, match="dim"):
        load_model(wrong_dim)
