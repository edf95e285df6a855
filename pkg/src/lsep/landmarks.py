"""Six-family acoustic landmark detection over rate-of-rise tracks.

Families and polarities:

    g  start (+) / end (-) of vocal fold vibration    band 1, 5 dB
    b  onset (+) / offset (-) of turbulent noise      bands 2-4, 8 dB
    s  release (+) / closure (-) of a nasal           bands 2-4, 6 dB, sustained
    f  onset (+) / offset (-) of frication            bands 4-6, 6 dB, unvoiced
    v  onset (+) / offset (-) of voiced frication     bands 4-6, 6 dB, voiced
    p  start (+) / end (-) of periodicity             autocorrelation >= 0.4

An event is the extremum of a contiguous suprathreshold region of the band
group's mean rate of rise; its confidence is the extremum magnitude in dB.
Glottal events are additionally forced into a strict +/- alternation by a
dynamic program that maximizes retained confidence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import AudioBuffer, FrontendConfig, RateOfRiseTrack, band_energies, rate_of_rise
from .errors import ValidationError

FAMILIES = ("g", "b", "s", "f", "v", "p")
# Merge-order tie-break: family rank, then '+' before '-'.
FAMILY_ORDER = {"g": 0, "p": 1, "s": 2, "f": 3, "v": 4, "b": 5}
BAND_GROUPS = {"g": (0,), "b": (1, 2, 3), "s": (1, 2, 3), "f": (3, 4, 5), "v": (3, 4, 5)}


@dataclass(frozen=True)
class Landmark:
    kind: str
    polarity: str
    time: float
    confidence: float

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValidationError(f"unknown landmark family {self.kind!r}")
        if self.polarity not in ("+", "-"):
            raise ValidationError(f"polarity must be '+' or '-', got {self.polarity!r}")
        if self.time < 0:
            raise ValidationError("landmark time must be >= 0")

    @property
    def label(self) -> str:
        return self.kind + self.polarity


@dataclass(frozen=True)
class LandmarkSequence:
    utterance_id: str
    landmarks: tuple[Landmark, ...]

    def __post_init__(self):
        times = [lm.time for lm in self.landmarks]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValidationError("landmark times must be non-decreasing")

    def __len__(self) -> int:
        return len(self.landmarks)

    def labels(self) -> list[str]:
        return [lm.label for lm in self.landmarks]


@dataclass(frozen=True)
class BigramToken:
    first: str  # e.g. "g+"
    second: str  # e.g. "p-"
    t0: float
    t1: float
    mode: str  # "overlapping" | "non-overlapping"

    @property
    def token(self) -> str:
        return self.first + self.second


@dataclass(frozen=True)
class VoicingMask:
    voiced: np.ndarray  # bool per frame
    hop: float

    def voiced_at(self, time: float) -> bool:
        if self.voiced.size == 0:
            return False
        idx = int(np.clip(round(time / self.hop), 0, self.voiced.size - 1))
        return bool(self.voiced[idx])


@dataclass(frozen=True)
class DetectorConfig:
    g_threshold: float = 5.0
    b_threshold: float = 8.0
    s_threshold: float = 6.0
    fv_threshold: float = 6.0
    sustain_ms: float = 50.0  # minimum suprathreshold run for s events
    g_scale: str = "coarse"
    b_scale: str = "fine"
    s_scale: str = "coarse"
    fv_scale: str = "fine"
    pitch_min_hz: float = 50.0
    pitch_max_hz: float = 500.0
    voicing_threshold: float = 0.4

    def threshold(self, family: str) -> float:
        return {
            "g": self.g_threshold,
            "b": self.b_threshold,
            "s": self.s_threshold,
            "f": self.fv_threshold,
            "v": self.fv_threshold,
        }[family]

    def scale(self, family: str) -> str:
        return {
            "g": self.g_scale,
            "b": self.b_scale,
            "s": self.s_scale,
            "f": self.fv_scale,
            "v": self.fv_scale,
        }[family]


def _suprathreshold_peaks(signal: np.ndarray, threshold: float, min_run: int = 1):
    """Yield (index, magnitude, sign) for each suprathreshold region's extremum.

    Regions of consecutive frames with signal >= threshold (or <= -threshold)
    that last at least `min_run` frames produce one event at the extremum;
    plateau ties resolve to the middle frame.
    """
    out = []
    for sign in (1.0, -1.0):
        mask = sign * signal >= threshold
        if not mask.any():
            continue
        edges = np.flatnonzero(np.diff(mask.astype(np.int8)))
        starts = [0] if mask[0] else []
        starts += list(edges[~mask[edges]] + 1)
        ends = list(edges[mask[edges]] + 1)
        if mask[-1]:
            ends.append(mask.size)
        for a, b in zip(starts, ends):
            if b - a < min_run:
                continue
            seg = sign * signal[a:b]
            peak = seg.max()
            ties = np.flatnonzero(seg == peak)
            idx = a + int(ties[len(ties) // 2])
            out.append((idx, float(peak), sign))
    out.sort()
    return out


def detect_events(
    ror: RateOfRiseTrack,
    family: str,
    cfg: DetectorConfig | None = None,
    voicing: VoicingMask | None = None,
) -> list[Landmark]:
    """Detect one family's landmarks from a rate-of-rise track.

    The band group's per-frame mean rate of rise is scanned for
    suprathreshold extrema; polarity is the extremum sign. `s` requires the
    region to stay above threshold for `sustain_ms`. `f` and `v` share a
    detector and are split by the voicing mask, which is mandatory for them.
    """
    cfg = cfg or DetectorConfig()
    if family not in BAND_GROUPS:
        raise ValidationError(f"unknown detectable family {family!r}")
    if family in ("f", "v") and voicing is None:
        raise ValidationError(f"family {family!r} requires a voicing mask")

    group = BAND_GROUPS[family]
    signal = ror.deltas[:, group].mean(axis=1)
    min_run = 1
    if family == "s":
        min_run = max(1, int(round(cfg.sustain_ms / 1000.0 / ror.hop)))

    events = []
    for idx, peak, sign in _suprathreshold_peaks(signal, cfg.threshold(family), min_run):
        t = idx * ror.hop
        if family in ("f", "v"):
            inside = voicing.voiced_at(t)
            if (family == "v") != inside:
                continue
        events.append(Landmark(family, "+" if sign > 0 else "-", t, peak))
    return events


def detect_periodicity(
    audio: AudioBuffer,
    cfg: DetectorConfig | None = None,
    frontend: FrontendConfig | None = None,
) -> tuple[VoicingMask, list[Landmark]]:
    """Voiced-region mask and p landmarks from normalized autocorrelation.

    A frame is voiced iff its max normalized autocorrelation over lags in
    the configured pitch range reaches the voicing threshold. p+ marks each
    unvoiced-to-voiced transition (including a voiced first frame), p- the
    reverse (including a voiced last frame); confidence is the correlation
    peak of the voiced frame at the transition.
    """
    cfg = cfg or DetectorConfig()
    frontend = frontend or FrontendConfig()
    x = audio.samples
    sr = audio.sample_rate
    win, hop = frontend.window, frontend.hop
    lag_min = max(1, int(sr / cfg.pitch_max_hz))
    lag_max = int(sr / cfg.pitch_min_hz)

    n_frames = max(0, 1 + (x.size - win) // hop)
    if n_frames == 0:
        return VoicingMask(np.zeros(0, dtype=bool), frontend.hop_seconds), []

    padded = np.concatenate([x, np.zeros(lag_max)])
    starts = hop * np.arange(n_frames)
    seg = padded[starts[:, None] + np.arange(win + lag_max)[None, :]]
    base = seg[:, :win]
    base_energy = np.einsum("ij,ij->i", base, base)
    sq = np.concatenate([np.zeros((n_frames, 1)), np.cumsum(seg * seg, axis=1)], axis=1)

    best = np.zeros(n_frames)
    for lag in range(lag_min, lag_max + 1):
        shifted = seg[:, lag : lag + win]
        num = np.einsum("ij,ij->i", base, shifted)
        den = np.sqrt(base_energy * (sq[:, lag + win] - sq[:, lag]))
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(den > 0, num / den, 0.0)
        np.maximum(best, r, out=best)

    voiced = best >= cfg.voicing_threshold
    hop_s = frontend.hop_seconds
    # The normalized correlation is scale-free, so a frame turns voiced as
    # soon as periodicity reaches the trailing edge of its base window and
    # turns unvoiced once periodicity leaves the leading edge. Onsets are
    # therefore stamped at the trailing edge, offsets at the leading edge.
    onset_shift = win / sr
    events = []
    prev = False
    for f in range(n_frames):
        if voiced[f] and not prev:
            events.append(Landmark("p", "+", f * hop_s + onset_shift, float(best[f])))
        elif prev and not voiced[f]:
            events.append(Landmark("p", "-", f * hop_s, float(best[f - 1])))
        prev = voiced[f]
    if prev:
        events.append(Landmark("p", "-", (n_frames - 1) * hop_s, float(best[-1])))
    return VoicingMask(voiced, hop_s), events


def pair_glottal_dp(events: list[Landmark]) -> list[Landmark]:
    """Keep the maximal-confidence subsequence alternating g+, g-, ..., g-.

    Dynamic program over the time-sorted events: for every event track the
    best total confidence of a valid prefix ending there with that polarity,
    where a g+ may open a sequence and a g- must follow a kept g+. Events
    outside the chosen subsequence are dropped. Empty when no valid onset /
    offset pairing exists.
    """
    for ev in events:
        if ev.kind != "g":
            raise ValidationError(f"pair_glottal_dp expects g events, got {ev.label}")
    if any(b.time < a.time for a, b in zip(events, events[1:])):
        raise ValidationError("events must be time-sorted")
    n = len(events)
    if n == 0:
        return []

    NEG = float("-inf")
    best_plus = [NEG] * n  # best sum ending with kept g+ at i
    best_minus = [NEG] * n  # best sum ending with kept g- at i
    prev_plus = [-1] * n
    prev_minus = [-1] * n
    run_best_minus = NEG  # max over best_minus[j] for j < i
    run_best_minus_idx = -1
    run_best_plus = NEG
    run_best_plus_idx = -1
    for i, ev in enumerate(events):
        if ev.polarity == "+":
            opener = max(0.0, run_best_minus)
            best_plus[i] = ev.confidence + opener
            prev_minus_idx = run_best_minus_idx if run_best_minus > 0.0 else -1
            prev_plus[i] = prev_minus_idx
        else:
            if run_best_plus > NEG:
                best_minus[i] = ev.confidence + run_best_plus
                prev_minus[i] = run_best_plus_idx
        if best_plus[i] > run_best_plus:
            run_best_plus, run_best_plus_idx = best_plus[i], i
        if best_minus[i] > run_best_minus:
            run_best_minus, run_best_minus_idx = best_minus[i], i

    end = max(range(n), key=lambda i: best_minus[i], default=-1)
    if end < 0 or best_minus[end] == NEG:
        return []
    kept = []
    i, polarity = end, "-"
    while i >= 0:
        kept.append(i)
        i = prev_minus[i] if polarity == "-" else prev_plus[i]
        polarity = "+" if polarity == "-" else "-"
    return [events[i] for i in reversed(kept)]


def merge_landmarks(per_family: list[list[Landmark]], utterance_id: str = "") -> LandmarkSequence:
    """Globally time-sort; ties break by family order g<p<s<f<v<b, '+' first."""
    merged = [lm for lms in per_family for lm in lms]
    merged.sort(key=lambda lm: (lm.time, FAMILY_ORDER[lm.kind], lm.polarity == "-"))
    return LandmarkSequence(utterance_id, tuple(merged))


def to_bigrams(seq: LandmarkSequence, mode: str = "overlapping") -> list[BigramToken]:
    """Tokenize adjacent landmark pairs.

    overlapping: (1,2),(2,3),... giving n-1 tokens; non-overlapping:
    (1,2),(3,4),... giving floor(n/2) tokens, trailing singleton dropped.
    """
    if mode not in ("overlapping", "non-overlapping"):
        raise ValidationError(f"unknown bigram mode {mode!r}")
    lms = seq.landmarks
    step = 1 if mode == "overlapping" else 2
    return [
        BigramToken(lms[i].label, lms[i + 1].label, lms[i].time, lms[i + 1].time, mode)
        for i in range(0, len(lms) - 1, step)
    ]


def detect_landmarks(
    audio: AudioBuffer,
    frontend: FrontendConfig | None = None,
    cfg: DetectorConfig | None = None,
    utterance_id: str = "",
) -> LandmarkSequence:
    """Full pipeline: band energies, two-scale rate of rise, all six families."""
    frontend = frontend or FrontendConfig()
    cfg = cfg or DetectorConfig()
    track = band_energies(audio, frontend)
    ror = {
        "coarse": rate_of_rise(track, "coarse", frontend),
        "fine": rate_of_rise(track, "fine", frontend),
    }
    mask, p_events = detect_periodicity(audio, cfg, frontend)
    g = pair_glottal_dp(detect_events(ror[cfg.scale("g")], "g", cfg))
    families = [g, p_events]
    for family in ("s", "f", "v", "b"):
        voicing = mask if family in ("f", "v") else None
        families.append(detect_events(ror[cfg.scale(family)], family, cfg, voicing))
    return merge_landmarks(families, utterance_id)


def write_landmarks_jsonl(seq: LandmarkSequence, path: str | Path) -> None:
    with open(path, "w") as fh:
        for lm in seq.landmarks:
            fh.write(json.dumps({"t": lm.time, "lm": lm.label, "conf": lm.confidence}) + "\n")


def read_landmarks_jsonl(path: str | Path, utterance_id: str = "") -> LandmarkSequence:
    lms = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            lms.append(Landmark(obj["lm"][0], obj["lm"][1], float(obj["t"]), float(obj["conf"])))
    return LandmarkSequence(utterance_id, tuple(lms))


def write_bigrams_jsonl(tokens: list[BigramToken], path: str | Path) -> None:
    with open(path, "w") as fh:
        for tok in tokens:
            fh.write(json.dumps({"tok": tok.token, "t0": tok.t0, "t1": tok.t1}) + "\n")
