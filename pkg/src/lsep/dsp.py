"""Audio decoding and the band-energy / rate-of-rise front-end.

The event detectors downstream consume two signals derived here: per-frame
log energies in six frequency bands, and their rate of rise at a coarse and
a fine smoothing scale. Band energies use a one-sided power spectrum scaled
so summing all bins recovers the windowed frame energy.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    FormatError,
    InsufficientInputError,
    UnsupportedFormatError,
    ValidationError,
)

DB_FLOOR = -120.0

DEFAULT_BAND_EDGES = (
    (0.0, 400.0),
    (800.0, 1500.0),
    (1200.0, 2000.0),
    (2000.0, 3500.0),
    (3500.0, 5000.0),
    (5000.0, 8000.0),
)


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray  # float64 in [-1, 1]
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("audio must be a non-empty 1-D sample array")
        if self.sample_rate <= 0:
            raise ValidationError("sample rate must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("audio contains NaN or Inf")
        if np.max(np.abs(arr)) > 1.0 + 1e-9:
            raise ValidationError("audio samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", arr)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FrontendConfig:
    sample_rate: int = 16000
    window: int = 512  # Hann analysis window, samples
    hop_seconds: float = 0.010
    band_edges: tuple[tuple[float, float], ...] = DEFAULT_BAND_EDGES
    coarse_ms: float = 50.0
    fine_ms: float = 26.0
    diff_span_ms: float = 50.0

    @property
    def hop(self) -> int:
        return int(round(self.hop_seconds * self.sample_rate))

    def __post_init__(self):
        for lo, hi in self.band_edges:
            if not lo < hi:
                raise ValidationError(f"band edges must increase, got ({lo}, {hi})")


@dataclass(frozen=True)
class BandEnergyTrack:
    frames: np.ndarray  # (n_frames, n_bands) dB
    hop: float  # seconds per frame
    band_edges: tuple[tuple[float, float], ...]

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def times(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.hop


@dataclass(frozen=True)
class RateOfRiseTrack:
    deltas: np.ndarray  # (n_frames, n_bands) dB per differencing span
    hop: float
    scale: str  # "coarse" | "fine"

    @property
    def n_frames(self) -> int:
        return self.deltas.shape[0]


def decode_wav(path: str | Path) -> AudioBuffer:
    """Decode a RIFF/WAVE file holding 16-bit PCM, mono or stereo.

    Stereo is down-mixed by channel average; samples are normalized by
    1/32768 so the full int16 range maps into [-1, 1].
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos : pos + 4]
        (size,) = struct.unpack("<I", blob[pos + 4 : pos + 8])
        body = blob[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None or len(fmt) < 16:
        raise FormatError(f"{path}: missing fmt chunk")
    if data is None:
        raise FormatError(f"{path}: missing data chunk")

    audio_format, channels, rate, _, _, bits = struct.unpack("<HHIIHH", fmt[:16])
    if audio_format != 1:
        raise UnsupportedFormatError(f"{path}: compressed codec tag {audio_format}, only PCM supported")
    if bits != 16:
        raise UnsupportedFormatError(f"{path}: {bits}-bit PCM unsupported, need 16-bit")
    if channels not in (1, 2):
        raise UnsupportedFormatError(f"{path}: {channels} channels unsupported")

    usable = len(data) - len(data) % (2 * channels)
    pcm = np.frombuffer(data[:usable], dtype="<i2").astype(np.float64) / 32768.0
    if channels == 2:
        pcm = pcm.reshape(-1, 2).mean(axis=1)
    if pcm.size == 0:
        raise FormatError(f"{path}: empty data chunk")
    return AudioBuffer(pcm, rate)


def _band_bins(cfg: FrontendConfig) -> list[np.ndarray]:
    freqs = np.fft.rfftfreq(cfg.window, d=1.0 / cfg.sample_rate)
    return [np.flatnonzero((freqs >= lo) & (freqs < hi)) for lo, hi in cfg.band_edges]


def band_energies(audio: AudioBuffer, cfg: FrontendConfig | None = None) -> BandEnergyTrack:
    """Per-frame dB energy in each configured band.

    Frame count is 1 + floor((n - window) / hop). Linear band energy is the
    one-sided power-spectrum sum over the band's bins (interior bins doubled),
    normalized by the FFT length, so the all-band sum equals the windowed
    frame energy. Values are clamped at the -120 dB floor.
    """
    cfg = cfg or FrontendConfig()
    if audio.sample_rate != cfg.sample_rate:
        raise ValidationError(
            f"audio rate {audio.sample_rate} != configured {cfg.sample_rate} (resampling out of scope)"
        )
    x = audio.samples
    win, hop = cfg.window, cfg.hop
    if x.size < win:
        raise InsufficientInputError(f"audio of {x.size} samples shorter than window {win}")
    n_frames = 1 + (x.size - win) // hop
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * np.hanning(win)[None, :]

    spectrum = np.fft.rfft(frames, axis=1)
    power = (spectrum.real**2 + spectrum.imag**2) / win
    power[:, 1:-1] *= 2.0  # fold the negative frequencies; DC and Nyquist stay single

    bins = _band_bins(cfg)
    linear = np.stack([power[:, b].sum(axis=1) for b in bins], axis=1)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(linear)
    db = np.maximum(db, DB_FLOOR)
    return BandEnergyTrack(db, cfg.hop_seconds, cfg.band_edges)


def _ms_to_frames(ms: float, hop_seconds: float) -> int:
    return max(1, int(round(ms / 1000.0 / hop_seconds)))


def _centered_mean(x: np.ndarray, width: int) -> np.ndarray:
    """Moving average over [t-h, t+h], window clipped at the track edges.

    Clipping (rather than zero padding) keeps a constant track constant, so
    the rate of rise of a constant input is exactly zero everywhere.
    """
    h = width // 2
    n = x.shape[0]
    csum = np.zeros((n + 1, x.shape[1]))
    np.cumsum(x, axis=0, out=csum[1:])
    lo = np.maximum(np.arange(n) - h, 0)
    hi = np.minimum(np.arange(n) + h + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)[:, None]


def rate_of_rise(track: BandEnergyTrack, scale: str, cfg: FrontendConfig | None = None) -> RateOfRiseTrack:
    """Smoothed first difference of band energies, in dB per span.

    Each band is smoothed with a centered moving average (50 ms coarse,
    26 ms fine) and then differenced across a 50 ms span split around the
    frame, so a step in the input peaks within one frame of its location.
    Frames whose span reaches outside the track are zero.
    """
    cfg = cfg or FrontendConfig()
    if scale not in ("coarse", "fine"):
        raise ValidationError(f"scale must be 'coarse' or 'fine', got {scale!r}")
    smooth_ms = cfg.coarse_ms if scale == "coarse" else cfg.fine_ms
    width = _ms_to_frames(smooth_ms, track.hop)
    if width % 2 == 0:
        width += 1
    n = track.n_frames
    if n < width:
        raise InsufficientInputError(f"track of {n} frames shorter than smoothing window {width}")

    smooth = _centered_mean(track.frames, width)

    span = _ms_to_frames(cfg.diff_span_ms, track.hop)
    back = span // 2
    fwd = span - back
    deltas = np.zeros_like(smooth)
    lo, hi = back, n - fwd
    if hi > lo:
        deltas[lo:hi] = smooth[lo + fwd : hi + fwd] - smooth[lo - back : hi - back]
    return RateOfRiseTrack(deltas, track.hop, scale)
