"""Separation model: forward math, loss anchors, analytic gradients, training."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsep.augment import gen_synthetic_layers
from lsep.errors import DegenerateSimilarityError, MissingRowError, ShapeError, ValidationError
from lsep.separation import (
    Batch,
    LayerCorpus,
    SimilarityPair,
    TrainConfig,
    batch_loss,
    extend_dense_vectors,
    extract_dense_vectors,
    gradients,
    init_model,
    load_checkpoint,
    loss,
    project_and_sim,
    save_checkpoint,
    train,
    weighted_sum,
)

LN2 = float(np.log(2.0))


# ------------------------------------------------------------ weighted sum


def test_weighted_sum_one_hot_selects_layer():
    stack = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    alpha = np.array([0.0, 1.0, 0.0])
    np.testing.assert_array_equal(weighted_sum(stack, alpha), [3.0, 4.0])


def test_weighted_sum_linear_combination():
    stack = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    alpha = np.array([0.5, 0.25, 0.25])
    np.testing.assert_allclose(weighted_sum(stack, alpha), [0.75, 0.5])


def test_weighted_sum_identical_layers():
    stack = np.tile([2.0, -1.0], (4, 1))
    alpha = np.array([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(weighted_sum(stack, alpha), [2.0, -1.0])


def test_weighted_sum_shape_error():
    with pytest.raises(ShapeError):
        weighted_sum(np.zeros((3, 2)), np.array([0.5, 0.5]))


# -------------------------------------------------------- project_and_sim


def tiny_model(d=2, hidden=2, sent=2, slope=0.01):
    model = init_model(2, hidden, sent, ("a", "b"), TrainConfig(dense_dim=d, leaky_slope=slope))
    model.w_speech[:] = np.eye(d, hidden)
    model.b_speech[:] = 0.0
    model.w_sentence[:] = np.eye(d, sent)
    model.b_sentence[:] = 0.0
    return model


def test_identity_projection_self_similarity():
    model = tiny_model()
    sims = project_and_sim(model, np.array([3.0, 4.0]), np.array([0.0, 1.0]), np.array([3.0, 4.0]))
    assert sims.sim_speech == pytest.approx(1.0)


def test_leaky_relu_preactivation():
    model = tiny_model()
    # pre-activation (-1, 2) with slope 0.01 -> (-0.01, 2)
    sims = project_and_sim(model, np.array([-1.0, 2.0]), np.array([1.0, 0.0]), np.array([-0.01, 2.0]))
    assert sims.sim_speech == pytest.approx(1.0)


def test_orthogonal_dense_vector():
    model = tiny_model()
    sims = project_and_sim(model, np.array([1.0, 0.0]), np.array([2.0, 0.0]), np.array([0.0, 5.0]))
    assert sims.sim_speech == pytest.approx(0.0)
    assert sims.sim_sentence == pytest.approx(0.0)


def test_zero_norm_dense_vector_rejected():
    model = tiny_model()
    with pytest.raises(DegenerateSimilarityError):
        project_and_sim(model, np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 0.0]))


def test_cosine_scale_invariance():
    model = tiny_model()
    v = np.array([1.0, 2.0])
    s1 = project_and_sim(model, np.array([3.0, 1.0]), np.array([0.5, 2.0]), v)
    s2 = project_and_sim(model, np.array([3.0, 1.0]), np.array([0.5, 2.0]), 7.3 * v)
    assert s1.sim_speech == pytest.approx(s2.sim_speech, abs=1e-12)
    assert s1.sim_sentence == pytest.approx(s2.sim_sentence, abs=1e-12)


# -------------------------------------------------------------------- loss


def test_symmetric_sims_give_ln2():
    for tau in (0.05, 0.1, 1.0, 3.0):
        for objective in ("speech-preserve", "text-preserve"):
            val = loss(SimilarityPair(0.4, 0.4), objective, tau)
            assert val == pytest.approx(LN2, abs=1e-12)


def test_saturated_pair_anchor():
    val = loss(SimilarityPair(1.0, -1.0), "speech-preserve", 0.1)
    assert val == pytest.approx(float(np.log1p(np.exp(-20.0))), abs=1e-15)
    assert val <= 1e-8


def test_sim_max_minimum():
    assert loss((np.ones(5), np.zeros(5)), "sim-max", 0.1) == pytest.approx(-1.0)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.15, 3.0))
def test_complementary_softmax_identity(sp, se, tau):
    # tau >= 0.15 keeps |x| <= ~13 so the reference computation of -log p is
    # itself accurate to well under 1e-12; the identity holds everywhere but
    # the oracle's own rounding dominates beyond that
    l8 = loss(SimilarityPair(sp, se), "speech-preserve", tau)
    l9 = loss(SimilarityPair(sp, se), "text-preserve", tau)
    x = (sp - se) / tau
    p = 1.0 / (1.0 + np.exp(-x))
    assert l8 == pytest.approx(-np.log(p), abs=1e-12)
    assert l9 == pytest.approx(-np.log1p(-p), abs=1e-12)


def test_loss_monotone_in_sims():
    base = loss(SimilarityPair(0.3, 0.1), "speech-preserve", 0.5)
    assert loss(SimilarityPair(0.31, 0.1), "speech-preserve", 0.5) < base
    assert loss(SimilarityPair(0.3, 0.11), "speech-preserve", 0.5) > base


def test_loss_validation():
    with pytest.raises(ValidationError):
        loss(SimilarityPair(0.0, 0.0), "speech-preserve", 0.0)
    with pytest.raises(ValidationError):
        loss(([], []), "speech-preserve", 0.1)


# --------------------------------------------------------------- gradients


def oracle_case(seed, objective, tau=1.0):
    """Random model and batch in generic position for finite differences.

    Biases are drawn positive so pre-activations stay away from the LeakyReLU
    kink and latent norms stay O(1); central differences are not a valid
    derivative oracle at the kink or near the cosine's zero-norm singularity.
    """
    rng = np.random.default_rng(seed)
    n_layers, hidden, sent, d, n, bsz = 4, 5, 4, 6, 8, 8
    cfg = TrainConfig(objective=objective, temperature=tau, dense_dim=d, seed=seed)
    model = init_model(n_layers, hidden, sent, tuple(f"s{i}" for i in range(n)), cfg)
    model.layer_logits[:] = rng.normal(0, 0.5, n_layers)
    model.b_speech[:] = rng.uniform(0.3, 0.8, d)
    model.b_sentence[:] = rng.uniform(0.3, 0.8, d)
    batch = Batch(
        rng.normal(0, 1, (bsz, n_layers, hidden)),
        rng.normal(0, 1, (bsz, sent)),
        rng.integers(0, n, bsz),
    )
    return model, batch


def fd_max_rel_error(model, batch, objective, tau, eps=1e-4):
    grads = gradients(model, batch, objective, tau)
    worst = 0.0
    for name, arr in model.named_parameters().items():
        flat = arr.ravel()
        gflat = grads[name].ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = batch_loss(model, batch, objective, tau)
            flat[i] = orig - eps
            down = batch_loss(model, batch, objective, tau)
            flat[i] = orig
            fd = (up - down) / (2 * eps)
            denom = max(abs(gflat[i]), abs(fd))
            if denom > 1e-8:
                worst = max(worst, abs(gflat[i] - fd) / denom)
    return worst


@pytest.mark.parametrize("objective", ["speech-preserve", "text-preserve", "sim-max"])
def test_gradients_match_finite_differences(objective):
    for seed in range(3):
        model, batch = oracle_case(seed, objective)
        assert fd_max_rel_error(model, batch, objective, 1.0) < 1e-4


def test_sim_max_ignores_sentence_projection():
    model, batch = oracle_case(0, "sim-max")
    grads = gradients(model, batch, "sim-max", 1.0)
    assert np.all(grads["w_sentence"] == 0.0)
    assert np.all(grads["b_sentence"] == 0.0)


def test_duplicate_sample_doubles_row_gradient():
    model, batch = oracle_case(1, "speech-preserve")
    single = Batch(batch.stacks[:1], batch.sent_embs[:1], batch.rows[:1])
    doubled = Batch(
        np.concatenate([batch.stacks[:1]] * 2),
        np.concatenate([batch.sent_embs[:1]] * 2),
        np.concatenate([batch.rows[:1]] * 2),
    )
    g1 = gradients(model, single, "speech-preserve", 1.0)["dense_vectors"]
    g2 = gradients(model, doubled, "speech-preserve", 1.0)["dense_vectors"]
    # mean over the doubled batch: each copy contributes 1/2, so the row
    # gradient equals the single-sample mean gradient
    np.testing.assert_allclose(g2, g1, atol=1e-12)
    row = batch.rows[0]
    assert np.any(g1[row] != 0)


# ---------------------------------------------------------------- training


def small_corpus(seed=0, n=96):
    return gen_synthetic_layers(6, 16, n, noise=0.4, seed=seed)


def test_training_descends():
    cfg = TrainConfig(
        objective="speech-preserve",
        temperature=0.5,
        learning_rate=1e-3,
        batch_size=32,
        epochs=60,
        seed=1,
        dense_dim=8,
        leaky_slope=0.3,
    )
    _, history = train(small_corpus(), cfg)
    assert history[-1] < history[0]


def test_training_deterministic():
    cfg = TrainConfig(epochs=5, batch_size=32, dense_dim=8, seed=4)
    corpus = small_corpus()
    model_a, hist_a = train(corpus, cfg)
    model_b, hist_b = train(corpus, cfg)
    assert hist_a == hist_b
    np.testing.assert_array_equal(model_a.dense_vectors, model_b.dense_vectors)


def test_alpha_stays_on_simplex():
    cfg = TrainConfig(epochs=10, batch_size=32, dense_dim=8, seed=2)
    model, _ = train(small_corpus(), cfg)
    alpha = model.alpha()
    assert np.all(alpha > 0)
    assert alpha.sum() == pytest.approx(1.0, abs=1e-12)


def test_extract_dense_vectors_shapes_and_alpha():
    corpus = small_corpus(n=32)
    cfg = TrainConfig(epochs=3, batch_size=16, dense_dim=8, seed=0)
    model, _ = train(corpus, cfg)
    vectors, alpha = extract_dense_vectors(model, corpus.ids[:7])
    assert vectors.shape == (7, 8)
    assert alpha.sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(MissingRowError):
        extract_dense_vectors(model, ["nope"])


def test_default_dense_dim_is_300():
    assert TrainConfig().dense_dim == 300


def test_extend_freezes_shared_parameters():
    corpus = small_corpus(n=48)
    cfg = TrainConfig(epochs=4, batch_size=16, dense_dim=8, seed=0)
    model, _ = train(corpus, cfg)
    dev = gen_synthetic_layers(6, 16, 16, noise=0.4, seed=99)
    dev = LayerCorpus(tuple(f"dev{i}" for i in range(16)), dev.stacks, dev.sent_embs)
    extended, _ = extend_dense_vectors(model, dev, cfg)
    np.testing.assert_array_equal(extended.layer_logits, model.layer_logits)
    np.testing.assert_array_equal(extended.w_speech, model.w_speech)
    np.testing.assert_array_equal(extended.dense_vectors[: len(model.sentence_ids)], model.dense_vectors)
    assert extended.dense_vectors.shape[0] == len(model.sentence_ids) + 16
    vectors, _ = extract_dense_vectors(extended, ["dev0"])
    assert vectors.shape == (1, 8)


def test_checkpoint_round_trip(tmp_path):
    corpus = small_corpus(n=24)
    cfg = TrainConfig(epochs=2, batch_size=8, dense_dim=4, seed=3)
    model, _ = train(corpus, cfg)
    save_checkpoint(model, cfg, tmp_path / "ckpt")
    back, descriptor = load_checkpoint(tmp_path / "ckpt")
    assert back.sentence_ids == model.sentence_ids
    assert descriptor["objective"] == cfg.objective
    # parameters round-trip through float32 exactly
    np.testing.assert_array_equal(
        back.dense_vectors, model.dense_vectors.astype(np.float32).astype(np.float64)
    )


def test_corpus_shape_mismatch():
    corpus = small_corpus(n=8)
    bad = LayerCorpus(corpus.ids, corpus.stacks, corpus.sent_embs[:4])
    with pytest.raises(ShapeError):
        train(bad, TrainConfig(epochs=1, dense_dim=4))


def test_speech_preserve_favors_speech_factor_mi():
    # cross-module property: after speech-preserve training on a corpus whose
    # stacks are speech-dominant (text rides mostly in the sentence
    # embeddings), the dense vectors hold more information about the speech
    # factor than about the text factor
    from lsep.augment import MixingProfile
    from lsep.mine import MineConfig, estimate_mi

    n_layers = 13
    mags = ((np.arange(n_layers) + 1) / n_layers) ** 2
    profile = MixingProfile(mags, 0.02 + 0.04 * mags, np.ones(n_layers), text_overlap=0.0)
    corpus = gen_synthetic_layers(n_layers, 64, 1024, profile, noise=0.35, seed=11, sent_noise=6.0)
    cfg = TrainConfig(
        objective="speech-preserve",
        temperature=0.5,
        learning_rate=3e-4,
        batch_size=1024,
        epochs=300,
        seed=5,
        dense_dim=24,
        leaky_slope=0.3,
    )
    model, _ = train(corpus, cfg)
    vectors, _ = extract_dense_vectors(model, corpus.ids)
    mine_cfg = MineConfig(epochs=80, seed=3)
    mi_speech = estimate_mi(vectors, corpus.latent_speech, mine_cfg).value
    mi_text = estimate_mi(vectors, corpus.latent_text, mine_cfg).value
    assert mi_speech > mi_text
