"""Sub-dialogue sampling, class balancing, synthetic generators."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lsep.augment import (
    MixingProfile,
    SubdialogueConfig,
    balance_classes,
    gen_entangled_demo,
    gen_synthetic_layers,
    load_layer_corpus,
    sample_subdialogues,
    save_layer_corpus,
)
from lsep.errors import BalanceError, InsufficientInputError, ValidationError
from lsep.manifest import SessionManifest, SessionSet, Utterance


def session(sid, n_utts, label=0):
    utts = tuple(Utterance(f"u{i}") for i in range(n_utts))
    return SessionManifest(sid, label, utts)


def test_ranges_respect_bounds():
    cfg = SubdialogueConfig(m=5, min_len=3, seed=1)
    ranges = sample_subdialogues(session("s", 10), cfg)
    assert len(ranges) == 5
    for s, e in ranges:
        assert 1 <= s < e <= 10
        assert e - s + 1 >= 3


def test_sampling_deterministic_per_session_and_seed():
    cfg = SubdialogueConfig(m=50, min_len=2, seed=9)
    a = sample_subdialogues(session("abc", 12), cfg)
    b = sample_subdialogues(session("abc", 12), cfg)
    c = sample_subdialogues(session("other", 12), cfg)
    assert a == b
    assert a != c  # derived seeds differ per session


def test_default_m_is_1000():
    assert SubdialogueConfig().m == 1000


def test_short_session_rejected():
    with pytest.raises(InsufficientInputError):
        sample_subdialogues(session("s", 3), SubdialogueConfig(min_len=5))


@given(st.integers(6, 20), st.integers(0, 100))
def test_range_lengths_within_config(t, seed):
    cfg = SubdialogueConfig(m=20, min_len=4, max_len=6, seed=seed)
    for s, e in sample_subdialogues(session("x", t), cfg):
        assert 4 <= e - s + 1 <= 6


def test_balance_example_quotas():
    sessions = [session(f"d{i:03d}", 6, label=1) for i in range(30)]
    sessions += [session(f"h{i:03d}", 6, label=0) for i in range(77)]
    quotas = balance_classes(SessionSet(tuple(sessions)), per_class_total=7700)
    dep = {k: v for k, v in quotas.items() if k.startswith("d")}
    heal = {k: v for k, v in quotas.items() if k.startswith("h")}
    assert sum(dep.values()) == 7700 and sum(heal.values()) == 7700
    assert set(heal.values()) == {100}
    assert sorted(dep.values()) == [256] * 10 + [257] * 20
    # remainder goes to the earliest ids
    assert quotas["d000"] == 257 and quotas["d029"] == 256


def test_balance_symmetric_classes():
    sessions = [session("a", 6, 1), session("b", 6, 0)]
    quotas = balance_classes(SessionSet(tuple(sessions)), per_class_total=10)
    assert quotas == {"a": 10, "b": 10}


def test_balance_single_class_error():
    with pytest.raises(BalanceError):
        balance_classes(SessionSet((session("a", 6, 1),)), per_class_total=10)


# ------------------------------------------------------------ entanglement


def test_entangled_demo_label_rules_hold_on_latents():
    independent, entangled = gen_entangled_demo(500, seed=2)
    for ds in (independent, entangled):
        assert np.array_equal(ds.labels, (ds.latents[:, 0] > 0).astype(int))
    # entangled: the sign rule holds exactly on the features
    prod = entangled.features[:, 0] * entangled.features[:, 1]
    assert np.array_equal(entangled.labels, (prod > 0).astype(int))


def test_entangled_demo_quadrant_counts():
    _, entangled = gen_entangled_demo(400, seed=7)
    f = entangled.features
    same = (f[:, 0] > 0) == (f[:, 1] > 0)
    assert np.array_equal(entangled.labels == 1, same)


def test_entangled_demo_deterministic():
    a = gen_entangled_demo(100, seed=5)
    b = gen_entangled_demo(100, seed=5)
    for x, y in zip(a, b):
        assert np.array_equal(x.features, y.features)
        assert np.array_equal(x.labels, y.labels)


def test_independent_means():
    independent, _ = gen_entangled_demo(4000, seed=11)
    pos = independent.features[independent.labels == 1, 0]
    neg = independent.features[independent.labels == 0, 0]
    assert abs(pos.mean() - 2.0) < 0.1
    assert abs(neg.mean() + 2.0) < 0.1


# ---------------------------------------------------------- layer corpus


def test_layer_corpus_shapes():
    corpus = gen_synthetic_layers(13, 32, 64, noise=0.2, seed=0)
    assert corpus.stacks.shape == (64, 13, 32)
    assert corpus.sent_embs.shape == (64, 32)
    assert len(corpus.ids) == 64
    assert set(np.unique(corpus.labels)) <= {0, 1}


def test_layer_corpus_noiseless_recovery():
    # sigma = 0: both factors recoverable from one stack by least squares
    corpus = gen_synthetic_layers(8, 16, 20, noise=0.0, seed=3)
    a = corpus.mixing.speech
    b = corpus.mixing.text
    design = np.stack(
        [
            np.einsum("l,d->ld", a, corpus.e_speech).ravel(),
            np.einsum("l,d->ld", b, corpus.e_text).ravel(),
        ],
        axis=1,
    )
    for i in range(20):
        coef, *_ = np.linalg.lstsq(design, corpus.stacks[i].ravel(), rcond=None)
        assert coef[0] == pytest.approx(corpus.latent_speech[i], abs=1e-9)
        assert coef[1] == pytest.approx(corpus.latent_text[i], abs=1e-9)


def test_layer_corpus_deterministic():
    a = gen_synthetic_layers(6, 8, 32, noise=0.5, seed=9)
    b = gen_synthetic_layers(6, 8, 32, noise=0.5, seed=9)
    assert np.array_equal(a.stacks, b.stacks)
    assert np.array_equal(a.sent_embs, b.sent_embs)


def test_mixing_profile_monotone():
    profile = MixingProfile.deep(13)
    assert np.all(np.diff(profile.speech) > 0)
    assert np.all(np.diff(profile.text) > 0)


def test_layer_corpus_round_trip(tmp_path):
    corpus = gen_synthetic_layers(5, 8, 16, noise=0.3, seed=1)
    save_layer_corpus(corpus, tmp_path / "c")
    back = load_layer_corpus(tmp_path / "c")
    assert back.ids == corpus.ids
    assert np.array_equal(back.labels, corpus.labels)
    np.testing.assert_allclose(back.stacks, corpus.stacks, atol=1e-6)
    np.testing.assert_allclose(back.latent_speech, corpus.latent_speech, atol=1e-12)


def test_generator_validation():
    with pytest.raises(ValidationError):
        gen_synthetic_layers(1, 8, 10)
    with pytest.raises(ValidationError):
        gen_entangled_demo(0)
    with pytest.raises(ValidationError):
        SubdialogueConfig(min_len=1)
