"""Sub-dialogue augmentation, class balancing, and synthetic corpora.

The synthetic generators are the desk-scale ground truth for everything
downstream: a 2-D entangled/independent classification demo, and a layer
corpus with known speech and text factors for validating the separation
trainer and the MI estimator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BalanceError, InsufficientInputError, ValidationError
from .manifest import SessionManifest, SessionSet
from .seeding import derive_seed
from .tensorio import read_tensor, write_tensor


@dataclass(frozen=True)
class SubdialogueConfig:
    m: int = 1000  # samples per session
    min_len: int = 5
    max_len: int | None = None  # None: whole session
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("m must be >= 1")
        if self.min_len < 2:
            raise ValidationError("min_len must be >= 2")
        if self.max_len is not None and self.max_len < self.min_len:
            raise ValidationError("max_len must be >= min_len")


def sample_subdialogues(session: SessionManifest, cfg: SubdialogueConfig) -> list[tuple[int, int]]:
    """Draw cfg.m utterance ranges (s, e), 1-based inclusive, with replacement.

    Uniform over all valid ranges whose length lies in [min_len, max_len]:
    a length is drawn with probability proportional to its number of start
    positions, then the start uniformly. Deterministic per (session_id, seed).
    """
    t = len(session.utterances)
    if t < cfg.min_len:
        raise InsufficientInputError(
            f"session {session.session_id} has {t} utterances, need >= {cfg.min_len}"
        )
    max_len = min(cfg.max_len or t, t)
    rng = np.random.default_rng(derive_seed(cfg.seed, session.session_id))
    lengths = np.arange(cfg.min_len, max_len + 1)
    weights = (t - lengths + 1).astype(np.float64)
    drawn = rng.choice(lengths, size=cfg.m, p=weights / weights.sum())
    starts = rng.integers(1, t - drawn + 2)
    return [(int(s), int(s + length - 1)) for s, length in zip(starts, drawn)]


def balance_classes(session_set: SessionSet, per_class_total: int) -> dict[str, int]:
    """Per-session sample quotas that equalize the two class totals.

    Within a class, quotas split as evenly as integer division allows; the
    remainder goes to the earliest session ids in sorted order.
    """
    by_label: dict[int, list[str]] = {0: [], 1: []}
    for s in session_set.sessions:
        by_label[s.label].append(s.session_id)
    if not by_label[0] or not by_label[1]:
        raise BalanceError("both classes must be present to balance")
    quotas: dict[str, int] = {}
    for ids in by_label.values():
        ids = sorted(ids)
        base, extra = divmod(per_class_total, len(ids))
        for i, sid in enumerate(ids):
            quotas[sid] = base + (1 if i < extra else 0)
    return quotas


@dataclass(frozen=True)
class SyntheticDataset:
    variant: str  # "independent" | "entangled"
    features: np.ndarray  # (n, 2)
    labels: np.ndarray  # (n,) in {0, 1}
    latents: np.ndarray  # (n, 2) columns (z_y, z_n); label == (z_y > 0)


def gen_entangled_demo(n_per_class: int, seed: int = 0) -> tuple[SyntheticDataset, SyntheticDataset]:
    """2-D classification demo: linearly separable vs. XOR-entangled.

    independent: feature 1 ~ Normal(+-2, 1) by class, feature 2 ~ Normal(0, 1)
    nuisance. entangled: both features ~ Normal(0, 1) with the class given by
    the sign of their product, so every halfplane covers equal label mass and
    no linear rule beats chance. Latents store (z_y, z_n) with z_y the signed
    label factor (class mean, or product sign) so label == (z_y > 0) exactly.
    """
    if n_per_class < 1:
        raise ValidationError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    n = 2 * n_per_class
    labels = np.repeat([0, 1], n_per_class)

    z_y = np.where(labels == 1, 2.0, -2.0)
    f1 = rng.normal(z_y, 1.0)
    z_n = rng.normal(0.0, 1.0, size=n)
    independent = SyntheticDataset(
        "independent", np.column_stack([f1, z_n]), labels.copy(), np.column_stack([z_y, z_n])
    )

    sign1 = rng.choice([-1.0, 1.0], size=n)
    prod_sign = np.where(labels == 1, 1.0, -1.0)
    sign2 = prod_sign * sign1
    g1 = np.abs(rng.normal(0.0, 1.0, size=n)) * sign1
    g2 = np.abs(rng.normal(0.0, 1.0, size=n)) * sign2
    entangled = SyntheticDataset(
        "entangled", np.column_stack([g1, g2]), labels.copy(), np.column_stack([prod_sign, sign1])
    )
    return independent, entangled


@dataclass(frozen=True)
class MixingProfile:
    """Per-layer factor loadings for the synthetic layer corpus.

    Both loadings ramp up with depth (deeper layers carry both factors more
    strongly, like the deeper half of a speech SSL stack); the text loading
    stays much weaker than the speech loading because the text factor's
    primary carrier is the sentence embedding.
    """

    speech: np.ndarray  # (L,) non-negative coefficients
    text: np.ndarray  # (L,) non-negative coefficients
    noise: np.ndarray  # (L,) per-layer noise scale multipliers
    text_overlap: float = 0.5  # cosine between text and speech directions

    @staticmethod
    def deep(n_layers: int) -> "MixingProfile":
        mags = ((np.arange(n_layers) + 1) / n_layers) ** 2
        return MixingProfile(mags, 0.05 + 0.1 * mags, np.ones(n_layers))


@dataclass(frozen=True)
class SyntheticLayerCorpus:
    ids: tuple[str, ...]
    stacks: np.ndarray  # (n, L, dim)
    sent_embs: np.ndarray  # (n, sent_dim)
    labels: np.ndarray  # (n,) in {0, 1}; threshold on the speech factor
    latent_speech: np.ndarray  # (n,)
    latent_text: np.ndarray  # (n,)
    mixing: MixingProfile
    e_speech: np.ndarray = field(repr=False, default=None)
    e_text: np.ndarray = field(repr=False, default=None)
    f_text: np.ndarray = field(repr=False, default=None)
    noise: float = 0.0
    seed: int = 0

    @property
    def n_layers(self) -> int:
        return self.stacks.shape[1]


def _scaled_dir(rng: np.random.Generator, dim: int) -> np.ndarray:
    # Factor directions carry norm sqrt(dim) so features are O(1) per
    # coordinate, like layer-normalized hidden states.
    v = rng.normal(size=dim)
    return v * np.sqrt(dim) / np.linalg.norm(v)


def gen_synthetic_layers(
    n_layers: int,
    dim: int,
    n_sentences: int,
    profile: MixingProfile | str = "deep",
    noise: float = 0.5,
    seed: int = 0,
    sent_dim: int | None = None,
    sent_noise: float | None = None,
    label_threshold: float = 0.0,
) -> SyntheticLayerCorpus:
    """Layer stacks with known latent factors.

    Per sentence i with speech factor u_i ~ N(0,1) and text factor c_i ~
    N(0,1), layer l is

        a_l * u_i * e_speech + b_l * c_i * e_text + noise * g_l * N(0, I)

    and the sentence embedding is c_i * f_text plus sent_noise jitter
    (default noise/3). The binary label thresholds the speech factor. With
    noise = 0 both factors are exactly recoverable from a stack by least
    squares.
    """
    if n_layers < 2 or dim < 2:
        raise ValidationError("need n_layers >= 2 and dim >= 2")
    if isinstance(profile, str):
        if profile != "deep":
            raise ValidationError(f"unknown mixing profile {profile!r}")
        profile = MixingProfile.deep(n_layers)
    if profile.speech.shape != (n_layers,) or profile.text.shape != (n_layers,):
        raise ValidationError("mixing profile length must equal n_layers")
    sent_dim = sent_dim or dim
    if sent_noise is None:
        sent_noise = noise / 3.0

    rng = np.random.default_rng(seed)
    e_speech = _scaled_dir(rng, dim)
    raw = rng.normal(size=dim)
    e_perp = raw - (raw @ e_speech) * e_speech / dim
    e_perp *= np.sqrt(dim) / np.linalg.norm(e_perp)
    gamma = profile.text_overlap
    e_text = gamma * e_speech + np.sqrt(1.0 - gamma**2) * e_perp
    f_text = _scaled_dir(rng, sent_dim)

    u = rng.normal(size=n_sentences)
    c = rng.normal(size=n_sentences)
    stacks = (
        np.einsum("l,n,d->nld", profile.speech, u, e_speech)
        + np.einsum("l,n,d->nld", profile.text, c, e_text)
        + noise * profile.noise[None, :, None] * rng.normal(size=(n_sentences, n_layers, dim))
    )
    sent_embs = np.outer(c, f_text) + sent_noise * rng.normal(size=(n_sentences, sent_dim))
    labels = (u > label_threshold).astype(np.int64)
    ids = tuple(f"s{i:05d}" for i in range(n_sentences))
    return SyntheticLayerCorpus(
        ids, stacks, sent_embs, labels, u, c, profile, e_speech, e_text, f_text, noise, seed
    )


def save_layer_corpus(corpus: SyntheticLayerCorpus, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor(corpus.stacks.astype(np.float32), out / "layers.ften")
    write_tensor(corpus.sent_embs.astype(np.float32), out / "sent_embs.ften")
    meta = {
        "ids": list(corpus.ids),
        "labels": corpus.labels.tolist(),
        "noise": corpus.noise,
        "seed": corpus.seed,
    }
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1))
    latents = {"speech": corpus.latent_speech.tolist(), "text": corpus.latent_text.tolist()}
    (out / "latents.json").write_text(json.dumps(latents, sort_keys=True))
    mixing = {
        "speech": corpus.mixing.speech.tolist(),
        "text": corpus.mixing.text.tolist(),
        "noise": corpus.mixing.noise.tolist(),
        "text_overlap": corpus.mixing.text_overlap,
    }
    (out / "mixing.json").write_text(json.dumps(mixing, sort_keys=True))


def load_layer_corpus(path: str | Path) -> SyntheticLayerCorpus:
    path = Path(path)
    meta = json.loads((path / "meta.json").read_text())
    latents = json.loads((path / "latents.json").read_text())
    mixing = json.loads((path / "mixing.json").read_text())
    profile = MixingProfile(
        np.asarray(mixing["speech"]),
        np.asarray(mixing["text"]),
        np.asarray(mixing["noise"]),
        mixing["text_overlap"],
    )
    return SyntheticLayerCorpus(
        tuple(meta["ids"]),
        read_tensor(path / "layers.ften").data.astype(np.float64),
        read_tensor(path / "sent_embs.ften").data.astype(np.float64),
        np.asarray(meta["labels"], dtype=np.int64),
        np.asarray(latents["speech"]),
        np.asarray(latents["text"]),
        profile,
        noise=meta["noise"],
        seed=meta["seed"],
    )
