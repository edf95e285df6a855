"""Fixtures: tiny randomly-initialized local checkpoints and a manifest.

No model hub access: checkpoints are built from small configs, saved to a
session temp dir, and loaded from disk like any pretrained model. The
contracts under test (wire format, ref round-trip, pooling consistency,
checksum stability, hint text) are weight-independent.
"""

import json
import wave
from pathlib import Path

import numpy as np
import pytest
import torch


@pytest.fixture(scope="session")
def tiny_models(tmp_path_factory) -> dict:
    from transformers import (
        BertConfig,
        BertModel,
        BertTokenizer,
        WavLMConfig,
        WavLMModel,
    )

    root = tmp_path_factory.mktemp("checkpoints")
    torch.manual_seed(0)

    ssl_cfg = WavLMConfig(
        hidden_size=32,
        num_hidden_layers=3,
        num_attention_heads=2,
        intermediate_size=64,
        num_feat_extract_layers=2,
        conv_dim=[32, 32],
        conv_stride=[5, 2],
        conv_kernel=[10, 3],
        num_conv_pos_embeddings=16,
        num_conv_pos_embedding_groups=2,
    )
    WavLMModel(ssl_cfg).save_pretrained(root / "ssl")

    vocab = (
        ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
        + list("abcdefghijklmnopqrstuvwxyz")
        + ["##" + ch for ch in "abcdefghijklmnopqrstuvwxyz"]
        + "extract semantic embedding from the following dialogue for depression detection today feel tired fine thanks".split()
    )

    def save_text_model(name: str, max_positions: int) -> None:
        path = root / name
        path.mkdir()
        (path / "vocab.txt").write_text("\n".join(vocab) + "\n")
        tokenizer = BertTokenizer(str(path / "vocab.txt"), model_max_length=max_positions)
        tokenizer.save_pretrained(path)
        cfg = BertConfig(
            vocab_size=len(vocab),
            hidden_size=24,
            num_hidden_layers=2,
            num_attention_heads=2,
            intermediate_size=48,
            max_position_embeddings=max_positions,
        )
        BertModel(cfg).save_pretrained(path)

    save_text_model("text", 128)
    save_text_model("llm", 32)  # tight position budget to exercise chunking

    return {"ssl": str(root / "ssl"), "text": str(root / "text"), "llm": str(root / "llm")}


def _write_wav(path: Path, seconds: float, freq: float, seed: int) -> None:
    sr = 16000
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * sr)) / sr
    x = 0.5 * np.sin(2 * np.pi * freq * t) + 0.05 * rng.uniform(-1, 1, t.size)
    pcm = (np.clip(x, -1, 1) * 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(sr)
        fh.writeframes(pcm.tobytes())


@pytest.fixture(scope="session")
def manifest_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("data")
    _write_wav(root / "a0.wav", 0.30, 180.0, 1)
    _write_wav(root / "a1.wav", 0.25, 240.0, 2)
    _write_wav(root / "b0.wav", 0.20, 150.0, 3)
    doc = {
        "split": "train",
        "sessions": [
            {
                "id": "sessA",
                "label": 1,
                "utterances": [
                    {"id": "u0", "text": "today the feel tired", "audio": "a0.wav"},
                    {"id": "u1", "text": "fine thanks", "audio": "a1.wav"},
                ],
            },
            {
                "id": "sessB",
                "label": 0,
                "utterances": [{"id": "u0", "text": "the dialogue today", "audio": "b0.wav"}],
            },
        ],
    }
    (root / "manifest.json").write_text(json.dumps(doc))
    return root
