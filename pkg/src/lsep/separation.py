"""Contrastive information separation over layer stacks.

A trainable simplex weighting collapses each sentence's stack of hidden
layers into one aggregate vector; two biased linear projections with a
LeakyReLU map that aggregate and the paired sentence embedding into a
shared latent space; a free dense vector per sentence is optimized against
one of three objectives on the two cosine similarities:

    speech-preserve   pull the dense vector to the projected stack, push it
                      from the projected sentence embedding
    text-preserve     the same with the two roles swapped
    sim-max           maximize stack similarity only

Training is plain Adam over analytic gradients; everything is deterministic
under a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateSimilarityError,
    DivergenceError,
    MissingRowError,
    ShapeError,
    ValidationError,
)
from .optim import Adam
from .tensorio import read_tensor, write_tensor

OBJECTIVES = ("speech-preserve", "text-preserve", "sim-max")


@dataclass(frozen=True)
class TrainConfig:
    objective: str = "speech-preserve"
    temperature: float = 0.1
    learning_rate: float = 1e-4
    batch_size: int = 64
    epochs: int = 1500
    seed: int = 0
    dense_dim: int = 300
    leaky_slope: float = 0.01

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValidationError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.temperature <= 0:
            raise ValidationError("temperature must be > 0")
        if self.dense_dim < 1:
            raise ValidationError("dense_dim must be >= 1")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")


@dataclass(frozen=True)
class SimilarityPair:
    sim_speech: float
    sim_sentence: float


@dataclass(frozen=True)
class LayerCorpus:
    """Training view of a corpus: ids, per-sentence stacks, embeddings."""

    ids: tuple[str, ...]
    stacks: np.ndarray  # (n, L, hidden_dim)
    sent_embs: np.ndarray  # (n, sent_dim)


@dataclass
class SeparationModel:
    layer_logits: np.ndarray  # (L,)
    w_speech: np.ndarray  # (dense_dim, hidden_dim)
    b_speech: np.ndarray  # (dense_dim,)
    w_sentence: np.ndarray  # (dense_dim, sent_dim)
    b_sentence: np.ndarray  # (dense_dim,)
    dense_vectors: np.ndarray  # (n_sentences, dense_dim)
    sentence_ids: tuple[str, ...]
    leaky_slope: float = 0.01

    def __post_init__(self):
        if len(self.sentence_ids) != self.dense_vectors.shape[0]:
            raise ShapeError("one dense-vector row per sentence id required")
        self._rows = {sid: i for i, sid in enumerate(self.sentence_ids)}

    def alpha(self) -> np.ndarray:
        return softmax(self.layer_logits)

    def row(self, sentence_id: str) -> int:
        try:
            return self._rows[sentence_id]
        except KeyError:
            raise MissingRowError(f"no dense vector trained for sentence {sentence_id!r}") from None

    def named_parameters(self) -> dict[str, np.ndarray]:
        return {
            "layer_logits": self.layer_logits,
            "w_speech": self.w_speech,
            "b_speech": self.b_speech,
            "w_sentence": self.w_sentence,
            "b_sentence": self.b_sentence,
            "dense_vectors": self.dense_vectors,
        }


def softmax(x: np.ndarray) -> np.ndarray:
    z = np.exp(x - np.max(x))
    return z / z.sum()


def leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def init_model(
    n_layers: int, hidden_dim: int, sent_dim: int, sentence_ids: tuple[str, ...], cfg: TrainConfig
) -> SeparationModel:
    """Uniform(+-1/sqrt(fan_in)) projections, N(0, 1/sqrt(d)) dense rows, uniform layer weights."""
    rng = np.random.default_rng(cfg.seed)
    d = cfg.dense_dim

    def linear(rows: int, fan_in: int) -> tuple[np.ndarray, np.ndarray]:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=(rows, fan_in)), rng.uniform(-bound, bound, size=rows)

    w_sp, b_sp = linear(d, hidden_dim)
    w_se, b_se = linear(d, sent_dim)
    dense = rng.normal(0.0, 1.0 / np.sqrt(d), size=(len(sentence_ids), d))
    return SeparationModel(
        np.zeros(n_layers), w_sp, b_sp, w_se, b_se, dense, tuple(sentence_ids), cfg.leaky_slope
    )


def weighted_sum(stack: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Convex combination over the layer axis; stack is (L, D) or (B, L, D)."""
    stack = np.asarray(stack, dtype=np.float64)
    if stack.shape[-2] != alpha.shape[0]:
        raise ShapeError(f"stack has {stack.shape[-2]} layers but alpha has {alpha.shape[0]}")
    return np.einsum("...ld,l->...d", stack, alpha)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateSimilarityError("cosine similarity against a zero-norm vector")
    return float(a @ b / (na * nb))


def project_and_sim(
    model: SeparationModel, h_speech: np.ndarray, s_sentence: np.ndarray, v: np.ndarray
) -> SimilarityPair:
    """LeakyReLU-projected latents and their cosines against the dense vector."""
    h_speech = np.asarray(h_speech, dtype=np.float64)
    s_sentence = np.asarray(s_sentence, dtype=np.float64)
    if h_speech.shape[0] != model.w_speech.shape[1]:
        raise ShapeError("aggregate dim does not match the speech projection")
    if s_sentence.shape[0] != model.w_sentence.shape[1]:
        raise ShapeError("sentence-embedding dim does not match the sentence projection")
    z_speech = leaky_relu(model.w_speech @ h_speech + model.b_speech, model.leaky_slope)
    z_sentence = leaky_relu(model.w_sentence @ s_sentence + model.b_sentence, model.leaky_slope)
    return SimilarityPair(_cosine(v, z_speech), _cosine(v, z_sentence))


def _softplus(x: np.ndarray) -> np.ndarray:
    # log(1 + e^x) without overflow: max(x, 0) + log1p(e^{-|x|})
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _as_sim_arrays(sims) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(sims, SimilarityPair):
        sims = [sims]
    if isinstance(sims, (list, tuple)) and sims and isinstance(sims[0], SimilarityPair):
        sp = np.array([s.sim_speech for s in sims], dtype=np.float64)
        se = np.array([s.sim_sentence for s in sims], dtype=np.float64)
        return sp, se
    sp, se = sims
    return np.atleast_1d(np.asarray(sp, dtype=np.float64)), np.atleast_1d(np.asarray(se, dtype=np.float64))


def loss(sims, objective: str, temperature: float) -> float:
    """Mean objective value over a batch of similarity pairs.

    speech-preserve is a two-way softmax cross-entropy preferring the stack
    similarity; text-preserve swaps the roles; sim-max is the negated mean
    stack similarity. All log-sum-exp arithmetic is stabilized.
    """
    if temperature <= 0:
        raise ValidationError("temperature must be > 0")
    sim_speech, sim_sentence = _as_sim_arrays(sims)
    if sim_speech.size == 0:
        raise ValidationError("similarity batch must be non-empty")
    if objective == "speech-preserve":
        return float(np.mean(_softplus((sim_sentence - sim_speech) / temperature)))
    if objective == "text-preserve":
        return float(np.mean(_softplus((sim_speech - sim_sentence) / temperature)))
    if objective == "sim-max":
        return float(-np.mean(sim_speech))
    raise ValidationError(f"unknown objective {objective!r}")


@dataclass(frozen=True)
class Batch:
    stacks: np.ndarray  # (B, L, hidden_dim)
    sent_embs: np.ndarray  # (B, sent_dim)
    rows: np.ndarray  # (B,) dense-vector row indices


def _forward(model: SeparationModel, batch: Batch):
    alpha = model.alpha()
    h = weighted_sum(batch.stacks, alpha)  # (B, Dh)
    pre_sp = h @ model.w_speech.T + model.b_speech
    pre_se = batch.sent_embs @ model.w_sentence.T + model.b_sentence
    z = leaky_relu(pre_sp, model.leaky_slope)
    w = leaky_relu(pre_se, model.leaky_slope)
    v = model.dense_vectors[batch.rows]
    nv = np.linalg.norm(v, axis=1)
    nz = np.linalg.norm(z, axis=1)
    nw = np.linalg.norm(w, axis=1)
    if np.any(nv == 0) or np.any(nz == 0) or np.any(nw == 0):
        raise DegenerateSimilarityError("zero-norm vector in similarity computation")
    s_sp = np.einsum("bd,bd->b", v, z) / (nv * nz)
    s_se = np.einsum("bd,bd->b", v, w) / (nv * nw)
    return alpha, h, pre_sp, pre_se, z, w, v, nv, nz, nw, s_sp, s_se


def batch_loss(model: SeparationModel, batch: Batch, objective: str, temperature: float) -> float:
    *_, s_sp, s_se = _forward(model, batch)
    return loss((s_sp, s_se), objective, temperature)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def gradients(
    model: SeparationModel, batch: Batch, objective: str, temperature: float
) -> dict[str, np.ndarray]:
    """Analytic gradients of the mean batch loss for every parameter.

    The LeakyReLU subgradient at exactly zero uses the negative-side slope.
    Dense-vector rows accumulate, so a duplicated sample doubles its row's
    gradient. Returned arrays are full parameter shapes (untouched rows zero).
    """
    alpha, h, pre_sp, pre_se, z, w, v, nv, nz, nw, s_sp, s_se = _forward(model, batch)
    bsz = s_sp.shape[0]
    tau = temperature

    if objective == "speech-preserve":
        sig = _sigmoid((s_se - s_sp) / tau)
        d_sp, d_se = -sig / tau, sig / tau
    elif objective == "text-preserve":
        sig = _sigmoid((s_sp - s_se) / tau)
        d_sp, d_se = sig / tau, -sig / tau
    elif objective == "sim-max":
        d_sp = np.full(bsz, -1.0)
        d_se = np.zeros(bsz)
    else:
        raise ValidationError(f"unknown objective {objective!r}")

    inv_nvnz = 1.0 / (nv * nz)
    inv_nvnw = 1.0 / (nv * nw)
    grad_v = d_sp[:, None] * (z * inv_nvnz[:, None] - s_sp[:, None] * v / (nv**2)[:, None])
    grad_v += d_se[:, None] * (w * inv_nvnw[:, None] - s_se[:, None] * v / (nv**2)[:, None])
    grad_z = d_sp[:, None] * (v * inv_nvnz[:, None] - s_sp[:, None] * z / (nz**2)[:, None])
    grad_w = d_se[:, None] * (v * inv_nvnw[:, None] - s_se[:, None] * w / (nw**2)[:, None])

    slope = model.leaky_slope
    delta_sp = grad_z * np.where(pre_sp > 0, 1.0, slope)
    delta_se = grad_w * np.where(pre_se > 0, 1.0, slope)

    g_w_speech = delta_sp.T @ h / bsz
    g_b_speech = delta_sp.mean(axis=0)
    g_w_sentence = delta_se.T @ batch.sent_embs / bsz
    g_b_sentence = delta_se.mean(axis=0)

    grad_h = delta_sp @ model.w_speech  # (B, Dh)
    grad_alpha = np.einsum("bld,bd->l", batch.stacks, grad_h) / bsz
    g_logits = alpha * (grad_alpha - alpha @ grad_alpha)

    g_dense = np.zeros_like(model.dense_vectors)
    np.add.at(g_dense, batch.rows, grad_v / bsz)

    return {
        "layer_logits": g_logits,
        "w_speech": g_w_speech,
        "b_speech": g_b_speech,
        "w_sentence": g_w_sentence,
        "b_sentence": g_b_sentence,
        "dense_vectors": g_dense,
    }


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator):
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start : start + batch_size]


def train(
    corpus,
    cfg: TrainConfig,
    model: SeparationModel | None = None,
    frozen: tuple[str, ...] = (),
) -> tuple[SeparationModel, list[float]]:
    """Fit a separation model; returns it with the per-epoch mean loss history.

    `corpus` needs `.ids`, `.stacks` (n, L, Dh) and `.sent_embs` (n, Ds).
    Deterministic for a fixed config: the shuffle order is seeded and batch
    accumulation runs in sample-index order. `frozen` names parameters to
    exclude from updates (used when adapting dense vectors for unseen
    sentences with everything else fixed).
    """
    stacks = np.asarray(corpus.stacks, dtype=np.float64)
    sents = np.asarray(corpus.sent_embs, dtype=np.float64)
    n, n_layers, hidden_dim = stacks.shape
    if sents.shape[0] != n:
        raise ShapeError("stacks and sentence embeddings disagree on sentence count")
    if model is None:
        model = init_model(n_layers, hidden_dim, sents.shape[1], tuple(corpus.ids), cfg)

    params = {k: p for k, p in model.named_parameters().items() if k not in frozen}
    opt = Adam(params, cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    rows_of = np.array([model.row(sid) for sid in corpus.ids])

    history: list[float] = []
    for epoch in range(cfg.epochs):
        total = 0.0
        for idx in _epoch_batches(n, cfg.batch_size, rng):
            batch = Batch(stacks[idx], sents[idx], rows_of[idx])
            grads = gradients(model, batch, cfg.objective, cfg.temperature)
            total += batch_loss(model, batch, cfg.objective, cfg.temperature) * idx.size
            opt.step({k: grads[k] for k in params})
        mean_loss = total / n
        if not np.isfinite(mean_loss):
            raise DivergenceError(f"non-finite loss at epoch {epoch}")
        history.append(mean_loss)
    return model, history


def extend_dense_vectors(
    model: SeparationModel, corpus, cfg: TrainConfig
) -> tuple[SeparationModel, list[float]]:
    """Optimize dense rows for unseen sentences with shared parameters frozen.

    Returns a model whose table is the old rows plus newly fitted rows; the
    layer weights and both projections are untouched.
    """
    new_ids = [sid for sid in corpus.ids if sid not in model._rows]
    if len(new_ids) != len(corpus.ids):
        raise ValidationError("corpus for extension must contain only unseen sentence ids")
    rng = np.random.default_rng(cfg.seed)
    d = model.dense_vectors.shape[1]
    fresh = rng.normal(0.0, 1.0 / np.sqrt(d), size=(len(new_ids), d))
    extended = SeparationModel(
        model.layer_logits.copy(),
        model.w_speech.copy(),
        model.b_speech.copy(),
        model.w_sentence.copy(),
        model.b_sentence.copy(),
        np.vstack([model.dense_vectors, fresh]),
        tuple(model.sentence_ids) + tuple(new_ids),
        model.leaky_slope,
    )
    frozen = ("layer_logits", "w_speech", "b_speech", "w_sentence", "b_sentence")
    return train(corpus, cfg, model=extended, frozen=frozen)


def extract_dense_vectors(model: SeparationModel, ids) -> tuple[np.ndarray, np.ndarray]:
    """Dense rows for the given sentence ids plus the learned layer weights."""
    rows = np.array([model.row(sid) for sid in ids])
    return model.dense_vectors[rows].copy(), model.alpha()


def corpus_from_manifest(session_set) -> LayerCorpus:
    """Assemble a training corpus from manifest tensor refs.

    Sentence ids are "session/utterance". Every utterance must carry both a
    layer stack (L, hidden_dim) and a sentence embedding; stacks must agree
    on shape across the corpus.
    """
    ids: list[str] = []
    stacks: list[np.ndarray] = []
    sents: list[np.ndarray] = []
    for session in session_set.sessions:
        for utt in session.utterances:
            if utt.layers is None or utt.sent_emb is None:
                raise ValidationError(
                    f"session {session.session_id}, utterance {utt.utterance_id}: "
                    "training needs both a layer stack and a sentence embedding"
                )
            stack = read_tensor(utt.layers).data.astype(np.float64)
            sent = read_tensor(utt.sent_emb).data.astype(np.float64).ravel()
            if stack.ndim != 2:
                raise ShapeError(f"{utt.layers}: layer stack must be 2-D (layers, dim)")
            if stacks and stack.shape != stacks[0].shape:
                raise ShapeError(f"{utt.layers}: stack shape {stack.shape} != {stacks[0].shape}")
            if sents and sent.shape != sents[0].shape:
                raise ShapeError(f"{utt.sent_emb}: embedding shape {sent.shape} != {sents[0].shape}")
            ids.append(f"{session.session_id}/{utt.utterance_id}")
            stacks.append(stack)
            sents.append(sent)
    if not ids:
        raise ValidationError("manifest holds no trainable utterances")
    return LayerCorpus(tuple(ids), np.stack(stacks), np.stack(sents))


_PARAM_FILES = ("layer_logits", "w_speech", "b_speech", "w_sentence", "b_sentence", "dense_vectors")


def save_checkpoint(model: SeparationModel, cfg: TrainConfig, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in _PARAM_FILES:
        write_tensor(getattr(model, name).astype(np.float32), out / f"{name}.ften")
    descriptor = {
        "dims": {name: list(getattr(model, name).shape) for name in _PARAM_FILES},
        "objective": cfg.objective,
        "temperature": cfg.temperature,
        "seed": cfg.seed,
        "dense_dim": cfg.dense_dim,
        "leaky_slope": model.leaky_slope,
        "sentence_ids": list(model.sentence_ids),
    }
    (out / "descriptor.json").write_text(json.dumps(descriptor, sort_keys=True, indent=1))


def load_checkpoint(path: str | Path) -> tuple[SeparationModel, dict]:
    path = Path(path)
    descriptor = json.loads((path / "descriptor.json").read_text())
    arrays = {name: read_tensor(path / f"{name}.ften").data.astype(np.float64) for name in _PARAM_FILES}
    model = SeparationModel(
        arrays["layer_logits"],
        arrays["w_speech"],
        arrays["b_speech"],
        arrays["w_sentence"],
        arrays["b_sentence"],
        arrays["dense_vectors"],
        tuple(descriptor["sentence_ids"]),
        descriptor["leaky_slope"],
    )
    return model, descriptor
