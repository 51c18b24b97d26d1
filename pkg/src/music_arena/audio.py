"""Audio preparation: WAV I/O, truncation, and sample-rate conversion.

Only uncompressed RIFF WAV is supported (16-bit PCM and 32-bit float).
Resampling is polyphase with a Kaiser-windowed sinc filter; taps per phase
and the window shape are configurable.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy import signal
from scipy.io import wavfile

from .errors import FormatError, InvalidArgumentError

DEFAULT_TAPS_PER_PHASE = 64
DEFAULT_KAISER_BETA = 8.6


def read_wav(path: str | Path) -> tuple[int, np.ndarray]:
    """Read a WAV file into (rate, float64 samples scaled to [-1, 1])."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    elif data.dtype == np.float64:
        samples = data.copy()
    else:
        raise FormatError(
            f"{path}: unsupported WAV sample format {data.dtype}; "
            "expected 16-bit PCM or 32-bit float"
        )
    return int(rate), samples


def write_wav(
    path: str | Path, rate: int, samples: np.ndarray, sample_format: str = "float32"
) -> None:
    """Write samples to WAV as 32-bit float or 16-bit PCM."""
    arr = np.asarray(samples, dtype=np.float64)
    if sample_format == "float32":
        wavfile.write(path, rate, arr.astype(np.float32))
    elif sample_format == "pcm16":
        clipped = np.clip(arr, -1.0, 1.0 - 1.0 / 32768.0)
        wavfile.write(path, rate, np.round(clipped * 32768.0).astype(np.int16))
    else:
        raise InvalidArgumentError(
            f"unsupported sample_format {sample_format!r}; use 'float32' or 'pcm16'"
        )


def truncate(samples: np.ndarray, max_seconds: float, rate: float) -> np.ndarray:
    """Keep at most the first ``max_seconds`` of audio at the given rate."""
    if not (rate > 0):
        raise InvalidArgumentError(f"rate must be > 0, got {rate}")
    if max_seconds < 0:
        raise InvalidArgumentError(f"max_seconds must be >= 0, got {max_seconds}")
    limit = int(round(max_seconds * rate))
    arr = np.asarray(samples)
    return arr[: min(len(arr), limit)]


def resample(
    samples: np.ndarray,
    from_rate: int,
    to_rate: int,
    *,
    taps_per_phase: int = DEFAULT_TAPS_PER_PHASE,
    kaiser_beta: float = DEFAULT_KAISER_BETA,
) -> np.ndarray:
    """Polyphase sample-rate conversion with a Kaiser-windowed sinc filter.

    Equal rates pass the signal through bit-identically. Otherwise the
    output has round(n * to_rate / from_rate) samples, in float64. The
    lowpass cutoff sits at the smaller Nyquist frequency; the filter holds
    ``taps_per_phase`` coefficients per polyphase branch.
    """
    if not (isinstance(from_rate, int) and isinstance(to_rate, int)):
        raise InvalidArgumentError("sample rates must be integers in Hz")
    if from_rate <= 0 or to_rate <= 0:
        raise InvalidArgumentError(
            f"rates must be > 0, got from={from_rate}, to={to_rate}"
        )
    if taps_per_phase < 4:
        raise InvalidArgumentError(f"taps_per_phase too small: {taps_per_phase}")
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"expected mono 1-D samples, got shape {arr.shape}")
    if from_rate == to_rate:
        return arr.copy()

    g = math.gcd(from_rate, to_rate)
    up, down = to_rate // g, from_rate // g
    # Cutoff relative to the Nyquist of the upsampled (from_rate * up) grid.
    cutoff = min(1.0 / up, 1.0 / down)
    taps = 2 * taps_per_phase * up + 1
    fir = signal.firwin(taps, cutoff, window=("kaiser", kaiser_beta))
    # resample_poly scales the supplied filter by `up` itself.
    out = signal.resample_poly(arr, up, down, window=fir)
    target = int(round(len(arr) * to_rate / from_rate))
    if len(out) >= target:
        return out[:target]
    return np.concatenate([out, np.zeros(target - len(out))])
