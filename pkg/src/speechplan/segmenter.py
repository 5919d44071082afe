"""Sliding-window segmentation of mono PCM clips.

Window starts advance by ``hop = duration * (1 - overlap/100)``. If the last
regular window stops short of the clip end, one end-anchored tail window is
appended so that coverage of the clip is continuous. Clips shorter than one
window produce a single zero-padded window.
"""

from __future__ import annotations

import io
import wave

from pydantic import BaseModel, ConfigDict

from .models import AudioClip, Chunk, SegmentationConfig


class EmptyAudio(ValueError):
    pass


class BadAudio(ValueError):
    pass


class WindowPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    windows: list[tuple[float, float]]
    hop_s: float
    padded: bool = False


def plan_windows(clip_duration_s: float, config: SegmentationConfig) -> WindowPlan:
    """Enumerate the (start, end) windows covering ``[0, clip_duration_s)``."""
    if clip_duration_s < 0:
        raise ValueError("clip duration must be nonnegative")
    duration = float(config.duration_s)
    hop = config.hop_s

    if clip_duration_s < duration:
        return WindowPlan(windows=[(0.0, duration)], hop_s=hop, padded=True)

    windows: list[tuple[float, float]] = []
    start = 0.0
    while start + duration <= clip_duration_s + 1e-9:
        windows.append((start, start + duration))
        start += hop
    if windows[-1][1] < clip_duration_s - 1e-9:
        windows.append((clip_duration_s - duration, clip_duration_s))
    return WindowPlan(windows=windows, hop_s=hop)


def _round_half_even(x: float) -> int:
    # round() in Python is already banker's rounding; kept explicit for intent.
    return round(x)


def segment(clip: AudioClip, config: SegmentationConfig) -> list[Chunk]:
    """Slice the clip into one Chunk per planned window.

    Sample indices use nearest-integer rounding (ties to even) so slices are
    byte-identical across platforms. Zero-padding happens only on the
    short-clip path.
    """
    if clip.sample_count == 0:
        raise EmptyAudio("clip has zero samples")

    plan = plan_windows(clip.duration_s, config)
    rate = clip.sample_rate_hz
    chunks: list[Chunk] = []
    for i, (start_s, end_s) in enumerate(plan.windows):
        start_idx = _round_half_even(start_s * rate)
        end_idx = _round_half_even(end_s * rate)
        raw = clip.samples[start_idx * 2:end_idx * 2]
        want = (end_idx - start_idx) * 2
        padded = False
        if len(raw) < want:
            raw = raw + b"\x00" * (want - len(raw))
            padded = True
        chunks.append(Chunk(
            index=i,
            start_s=start_s,
            end_s=end_s,
            samples=raw,
            sample_rate_hz=rate,
            padded=padded and plan.padded,
        ))
    return chunks


def read_wav(data: bytes) -> AudioClip:
    """Parse RIFF/WAVE bytes into an AudioClip.

    Only 16-bit PCM mono is accepted; anything else raises BadAudio. No
    resampling is performed.
    """
    try:
        with wave.open(io.BytesIO(data), "rb") as wf:
            channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise BadAudio(f"not a readable WAV file: {exc}") from exc
    if channels != 1:
        raise BadAudio(f"mono audio required, got channels={channels}")
    if sampwidth != 2:
        raise BadAudio(f"16-bit PCM required, got sample width {sampwidth * 8} bits")
    if not frames:
        raise EmptyAudio("clip has zero samples")
    return AudioClip(samples=frames, sample_rate_hz=rate)


def write_wav(samples: bytes, sample_rate_hz: int) -> bytes:
    """Serialize raw 16-bit mono PCM back to WAV bytes (for chunk playback)."""
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate_hz)
        wf.writeframes(samples)
    return buf.getvalue()
