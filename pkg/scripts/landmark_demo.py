#!/usr/bin/env python3
"""Synthesize a small utterance and walk it through the landmark pipeline.

Builds a waveform with distinct articulation-like events (a voiced vowel
segment, a burst, a fricative hiss), detects all six landmark families, and
prints the sequence plus its bigram tokenization.

Usage: python scripts/landmark_demo.py [--out-dir DIR]
"""

import argparse
from pathlib import Path

import numpy as np

from lsep.dsp import AudioBuffer, FrontendConfig
from lsep.landmarks import (
    DetectorConfig,
    detect_landmarks,
    to_bigrams,
    write_bigrams_jsonl,
    write_landmarks_jsonl,
)


def synth_utterance(sr: int = 16000, seed: int = 0) -> AudioBuffer:
    rng = np.random.default_rng(seed)
    silence = np.zeros(int(0.25 * sr))

    t_vowel = np.arange(int(0.45 * sr)) / sr
    vowel = 0.05 * np.sin(2 * np.pi * 140 * t_vowel)
    for harmonic, gain in ((2, 0.5), (3, 0.3), (7, 0.35), (9, 0.25)):
        vowel += 0.05 * gain * np.sin(2 * np.pi * 140 * harmonic * t_vowel)

    burst = 0.4 * rng.uniform(-1, 1, int(0.02 * sr)) * np.hanning(int(0.02 * sr))

    hiss = 0.15 * rng.uniform(-1, 1, int(0.3 * sr))
    # push the hiss into the upper bands with a crude first difference
    hiss = np.diff(hiss, prepend=0.0)

    x = np.concatenate([silence, vowel, silence[: sr // 8], burst, hiss, silence])
    x = 0.9 * x / np.max(np.abs(x))
    return AudioBuffer(x, sr)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default=None, help="write landmark/bigram JSONL here")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    audio = synth_utterance(seed=args.seed)
    seq = detect_landmarks(audio, FrontendConfig(), DetectorConfig(), utterance_id="demo")

    print(f"{len(seq)} landmarks over {audio.duration:.2f}s")
    for lm in seq.landmarks:
        print(f"  {lm.time:6.3f}s  {lm.label}  ({lm.confidence:.1f})")
    for mode in ("non-overlapping", "overlapping"):
        tokens = to_bigrams(seq, mode)
        print(f"{mode}: {len(tokens)} tokens: {' '.join(t.token for t in tokens[:12])}"
              + (" ..." if len(tokens) > 12 else ""))

    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_landmarks_jsonl(seq, out / "demo_landmarks.jsonl")
        write_bigrams_jsonl(to_bigrams(seq, "non-overlapping"), out / "demo_bigrams.jsonl")
        print(f"wrote {out}/demo_landmarks.jsonl and demo_bigrams.jsonl")


if __name__ == "__main__":
    main()
