"""Session manifests: the JSON index of everything produced upstream.

One manifest describes one split (train or dev) as a list of sessions, each
holding ordered utterances with optional transcript text, audio paths and
tensor references. All references are relative to the manifest's directory
and are resolved and header-checked eagerly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingResourceError, SchemaError
from .tensorio import validate_tensor_header


@dataclass(frozen=True)
class Utterance:
    utterance_id: str
    text: str | None = None
    audio: Path | None = None
    layers: Path | None = None
    sent_emb: Path | None = None


@dataclass(frozen=True)
class SessionManifest:
    session_id: str
    label: int  # 1 = depressed, 0 = healthy
    utterances: tuple[Utterance, ...]
    llm_emb: Path | None = None


@dataclass(frozen=True)
class SessionSet:
    sessions: tuple[SessionManifest, ...]
    split: str = "train"
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def by_id(self, session_id: str) -> SessionManifest:
        for s in self.sessions:
            if s.session_id == session_id:
                return s
        raise KeyError(session_id)


_OPTIONAL_UTT_KEYS = ("text", "audio", "layers", "sent_emb")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def _resolve_ref(base: Path, ref: str, what: str, where: str) -> Path:
    path = base / ref
    try:
        validate_tensor_header(path)
    except Exception as exc:
        raise MissingResourceError(f"{where}: {what} ref {ref!r} does not resolve: {exc}") from exc
    return path


def load_manifest(path: str | Path) -> SessionSet:
    """Parse and validate a manifest document.

    Deterministic and side-effect-free: referenced tensors get a header
    check only, nothing is written. Missing optional fields are recorded as
    per-session diagnostics rather than errors.
    """
    path = Path(path)
    base = path.parent
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise MissingResourceError(f"manifest {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest {path} is not valid JSON: {exc}") from exc

    _require(isinstance(doc, dict) and "sessions" in doc, "manifest must be an object with a 'sessions' key")
    split = doc.get("split", "train")
    _require(split in ("train", "dev"), f"split must be 'train' or 'dev', got {split!r}")

    sessions: list[SessionManifest] = []
    diagnostics: list[str] = []
    seen_sessions: set[str] = set()
    for raw in doc["sessions"]:
        _require(isinstance(raw, dict), "each session must be an object")
        _require("id" in raw and "label" in raw, "session needs 'id' and 'label'")
        sid = str(raw["id"])
        _require(sid not in seen_sessions, f"duplicate session id {sid!r}")
        seen_sessions.add(sid)
        label = raw["label"]
        _require(label in (0, 1) and not isinstance(label, bool), f"session {sid}: label must be 0 or 1, got {label!r}")

        utterances: list[Utterance] = []
        seen_utts: set[str] = set()
        for utt in raw.get("utterances", ()):
            _require(isinstance(utt, dict) and "id" in utt, f"session {sid}: utterance needs 'id'")
            uid = str(utt["id"])
            _require(uid not in seen_utts, f"session {sid}: duplicate utterance id {uid!r}")
            seen_utts.add(uid)
            where = f"session {sid}, utterance {uid}"
            audio = base / utt["audio"] if utt.get("audio") else None
            if audio is not None and not audio.is_file():
                raise MissingResourceError(f"{where}: audio ref {utt['audio']!r} does not resolve")
            layers = _resolve_ref(base, utt["layers"], "layers", where) if utt.get("layers") else None
            sent = _resolve_ref(base, utt["sent_emb"], "sent_emb", where) if utt.get("sent_emb") else None
            for key in _OPTIONAL_UTT_KEYS:
                if not utt.get(key):
                    diagnostics.append(f"{where}: no {key}")
            utterances.append(Utterance(uid, utt.get("text"), audio, layers, sent))

        llm = _resolve_ref(base, raw["llm_emb"], "llm_emb", f"session {sid}") if raw.get("llm_emb") else None
        if llm is None:
            diagnostics.append(f"session {sid}: no llm_emb")
        sessions.append(SessionManifest(sid, int(label), tuple(utterances), llm))

    return SessionSet(tuple(sessions), split, tuple(diagnostics))
