"""Export jobs: run checkpoints over a manifest, serialize hidden states.

Outputs use the consumer toolkit's wire formats: "FTEN" tensors with
SHA-256 sidecars, and a rewritten manifest whose refs point at the exported
files. Token-level LLM states are stored alongside their mean so the
consumer can recompute the pooling itself.
"""

from __future__ import annotations

import hashlib
import json
import os
import wave as wave_mod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models import SslEncoder, TextEncoder
from .tensor_format import ExportError, write_checksum, write_tensor

HINT_TEXT = "Extract the semantic embedding from the following dialogue for depression detection."

EXPECTED_SAMPLE_RATE = 16000


@dataclass(frozen=True)
class ExportJob:
    manifest: Path
    out_dir: Path
    ssl_model: str | None = None
    text_model: str | None = None
    llm_model: str | None = None
    hint: bool = True


def read_wav(path: Path) -> np.ndarray:
    """16-bit PCM mono/stereo to float32 in [-1, 1]; stereo averaged."""
    try:
        with wave_mod.open(str(path), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            frames = fh.readframes(fh.getnframes())
    except (OSError, wave_mod.Error) as exc:
        raise ExportError(f"cannot read {path}: {exc}") from exc
    if width != 2:
        raise ExportError(f"{path}: need 16-bit PCM, got {8 * width}-bit")
    if rate != EXPECTED_SAMPLE_RATE:
        raise ExportError(f"{path}: sample rate {rate}, expected {EXPECTED_SAMPLE_RATE}")
    pcm = np.frombuffer(frames, dtype="<i2").astype(np.float32) / 32768.0
    if channels == 2:
        pcm = pcm.reshape(-1, 2).mean(axis=1)
    elif channels != 1:
        raise ExportError(f"{path}: {channels} channels unsupported")
    if pcm.size == 0:
        raise ExportError(f"{path}: empty audio")
    return pcm


def _load_manifest_doc(path: Path) -> dict:
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ExportError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(doc, dict) or "sessions" not in doc:
        raise ExportError(f"manifest {path} must be an object with a 'sessions' key")
    return doc


def _emit(array: np.ndarray, path: Path) -> None:
    write_tensor(array, path)
    write_checksum(path)


def export_ssl(job: ExportJob) -> dict:
    """Per utterance: full layer stack (L, T, D), time-pooled stack (L, D),
    and a sentence embedding from the text encoder. Returns the rewritten
    manifest document (also written to out_dir/manifest.json)."""
    if not job.ssl_model or not job.text_model:
        raise ExportError("export_ssl needs --ssl-model and --text-model")
    doc = _load_manifest_doc(job.manifest)
    job.out_dir.mkdir(parents=True, exist_ok=True)
    ssl = SslEncoder.load(job.ssl_model)
    text = TextEncoder.load(job.text_model)
    base = job.manifest.parent

    for session in doc["sessions"]:
        sid = str(session["id"])
        for utt in session.get("utterances", ()):
            uid = str(utt["id"])
            stem = f"{sid}__{uid}"
            if utt.get("audio"):
                samples = read_wav(base / utt["audio"])
                stack = ssl.hidden_stack(samples)  # (L, T, D)
                _emit(stack, job.out_dir / f"{stem}.layers_full.ften")
                _emit(stack.mean(axis=1), job.out_dir / f"{stem}.layers.ften")
                utt["layers"] = f"{stem}.layers.ften"
                utt["audio"] = os.path.relpath(base / utt["audio"], job.out_dir)
            if utt.get("text"):
                _emit(text.sentence_embedding(utt["text"]), job.out_dir / f"{stem}.sent.ften")
                utt["sent_emb"] = f"{stem}.sent.ften"

    out_manifest = job.out_dir / "manifest.json"
    out_manifest.write_text(json.dumps(doc, indent=1, sort_keys=True))
    return doc


def export_llm(job: ExportJob) -> dict:
    """Per session: token-level final-layer states plus their mean.

    The hint sentence is prepended verbatim when job.hint is set; the full
    serialized prompt, hint presence, and any chunk-and-mean fallback are
    recorded in a JSON sidecar per session. Returns the rewritten manifest.
    """
    if not job.llm_model:
        raise ExportError("export_llm needs --llm-model")
    doc = _load_manifest_doc(job.manifest)
    job.out_dir.mkdir(parents=True, exist_ok=True)
    llm = TextEncoder.load(job.llm_model)

    for session in doc["sessions"]:
        sid = str(session["id"])
        texts = [u.get("text", "") or "" for u in session.get("utterances", ())]
        dialogue = "\n".join(t for t in texts if t.strip())
        if not dialogue.strip():
            raise ExportError(f"session {sid}: empty transcript")
        prompt = (HINT_TEXT + "\n" + dialogue) if job.hint else dialogue

        states, chunked = llm.token_states(prompt)  # (T, D)
        _emit(states, job.out_dir / f"{sid}.llm_tokens.ften")
        _emit(states.mean(axis=0), job.out_dir / f"{sid}.llm.ften")
        session["llm_emb"] = f"{sid}.llm.ften"
        sidecar = {
            "model": llm.model_id,
            "hint": job.hint,
            "prompt": prompt,
            "chunked": chunked,
            "tokens": int(states.shape[0]),
            "prompt_sha256": hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
        }
        (job.out_dir / f"{sid}.llm.json").write_text(json.dumps(sidecar, indent=1, sort_keys=True))

    out_manifest = job.out_dir / "manifest.json"
    out_manifest.write_text(json.dumps(doc, indent=1, sort_keys=True))
    return doc
