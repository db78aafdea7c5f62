"""WAV decoding and audio standardization.

Every training/eval sound is normalized to uncompressed mono 44.1 kHz
16-bit PCM, cropped to the leading 30 seconds. Downmixing is the
arithmetic mean of channels; sample-rate conversion is band-limited
polyphase resampling with a Kaiser-windowed sinc filter (beta=5.0, the
scipy default), which keeps the operation deterministic and alias-safe.

Only RIFF/WAVE integer PCM (8/16/24/32-bit) is accepted.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from broadsound.errors import AudioError

TARGET_RATE = 44_100
TARGET_BIT_DEPTH = 16
MAX_SECONDS = 30.0


@dataclass
class PcmAudio:
    """Integer PCM audio; samples shaped (frames, channels)."""

    samples: np.ndarray
    sample_rate: int
    bit_depth: int

    @property
    def n_frames(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_frames / self.sample_rate


def _decode_frames(raw: bytes, sampwidth: int, n_channels: int) -> np.ndarray:
    if sampwidth == 1:
        # 8-bit WAV is unsigned; recenter
        flat = np.frombuffer(raw, dtype=np.uint8).astype(np.int32) - 128
    elif sampwidth == 2:
        flat = np.frombuffer(raw, dtype="<i2").astype(np.int32)
    elif sampwidth == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
        flat = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
        flat = np.where(flat >= 1 << 23, flat - (1 << 24), flat)
    elif sampwidth == 4:
        flat = np.frombuffer(raw, dtype="<i4").astype(np.int32)
    else:
        raise AudioError(f"unsupported sample width {sampwidth} bytes")
    return flat.reshape(-1, n_channels)


def read_wav(source: str | Path | bytes) -> PcmAudio:
    """Decode a RIFF PCM WAV file (any integer depth, channels, rate)."""
    if isinstance(source, bytes):
        fh = io.BytesIO(source)
    else:
        try:
            fh = open(source, "rb")
        except OSError as exc:
            raise AudioError(f"cannot open {source}: {exc}") from exc
    try:
        with wave.open(fh) as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise AudioError(f"undecodable WAV input: {exc}") from exc
    finally:
        fh.close()
    if rate <= 0:
        raise AudioError(f"invalid sample rate {rate}")
    samples = _decode_frames(raw, sampwidth, n_channels)
    return PcmAudio(samples=samples, sample_rate=rate, bit_depth=8 * sampwidth)


def write_wav(path: str | Path, audio: PcmAudio) -> None:
    if audio.bit_depth != 16:
        raise AudioError("only 16-bit PCM output is supported")
    data = np.ascontiguousarray(audio.samples.astype("<i2"))
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(audio.n_channels)
        wf.setsampwidth(2)
        wf.setframerate(audio.sample_rate)
        wf.writeframes(data.tobytes())


def standardize(audio: PcmAudio) -> PcmAudio:
    """Normalize to mono 44.1 kHz 16-bit, keeping the leading 30 s.

    Already-conforming input passes through sample-exact, which makes the
    operation idempotent.
    """
    if audio.n_frames == 0:
        raise AudioError("zero-length audio input")

    max_frames_out = int(MAX_SECONDS * TARGET_RATE)
    if (
        audio.n_channels == 1
        and audio.sample_rate == TARGET_RATE
        and audio.bit_depth == TARGET_BIT_DEPTH
    ):
        return PcmAudio(
            samples=audio.samples[:max_frames_out],
            sample_rate=TARGET_RATE,
            bit_depth=TARGET_BIT_DEPTH,
        )

    full_scale = float(1 << (audio.bit_depth - 1))
    x = audio.samples.astype(np.float64) / full_scale
    x = x.mean(axis=1)

    max_frames_in = int(MAX_SECONDS * audio.sample_rate)
    x = x[:max_frames_in]

    if audio.sample_rate != TARGET_RATE:
        g = np.gcd(TARGET_RATE, audio.sample_rate)
        x = resample_poly(x, TARGET_RATE // g, audio.sample_rate // g)
    x = x[:max_frames_out]

    scaled = np.rint(x * 32768.0)
    out = np.clip(scaled, -32768, 32767).astype(np.int32).reshape(-1, 1)
    return PcmAudio(samples=out, sample_rate=TARGET_RATE, bit_depth=TARGET_BIT_DEPTH)


def standardize_wav_file(src: str | Path, dst: str | Path) -> PcmAudio:
    out = standardize(read_wav(src))
    write_wav(dst, out)
    return out
