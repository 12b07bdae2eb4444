"""Mono waveform container plus WAV I/O, resampling, and gain primitives."""

import logging
import math
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CorruptHeader, UnsupportedFormat

log = logging.getLogger(__name__)

_PCM = 1
_IEEE_FLOAT = 3
_EXTENSIBLE = 0xFFFE

# Windowed-sinc resampler parameters: 64 taps per phase, Kaiser window,
# cutoff at 0.95 of the narrower Nyquist.
_TAPS_PER_PHASE = 64
_KAISER_BETA = 8.555
_CUTOFF_FRACTION = 0.95


@dataclass(frozen=True)
class Waveform:
    """Immutable mono signal: float64 samples at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("waveform must be a non-empty 1-D signal")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains NaN or Inf samples")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


def _read_chunks(data):
    """Yield (chunk_id, payload) pairs of a RIFF body."""
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        payload = data[pos + 8:pos + 8 + size]
        if len(payload) < size:
            raise CorruptHeader(f"chunk {cid!r} truncated")
        yield cid, payload
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def load_wav(path) -> Waveform:
    """Load a mono PCM16 or IEEE-float32 WAV file, scaled to [-1, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise CorruptHeader(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    for cid, chunk in _read_chunks(data):
        if cid == b"fmt ":
            fmt = chunk
        elif cid == b"data":
            payload = chunk
    if fmt is None or len(fmt) < 16:
        raise CorruptHeader(f"{path}: missing fmt chunk")
    if payload is None:
        raise CorruptHeader(f"{path}: missing data chunk")

    audio_format, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if audio_format == _EXTENSIBLE:
        if len(fmt) < 26:
            raise CorruptHeader(f"{path}: truncated extensible fmt chunk")
        (audio_format,) = struct.unpack_from("<H", fmt, 24)
    if channels != 1:
        raise UnsupportedFormat(f"{path}: {channels} channels, only mono is supported")

    if audio_format == _PCM and bits == 16:
        raw = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == _IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedFormat(
            f"{path}: format tag {audio_format} at {bits} bits is not supported"
        )
    if samples.size == 0:
        raise CorruptHeader(f"{path}: empty data chunk")
    return Waveform(samples, rate)


def save_wav(w: Waveform, path, bit_depth="16") -> None:
    """Write ``w`` as mono WAV. ``bit_depth`` is ``16`` (PCM) or ``"32f"``.

    Samples outside [-1, 1] are hard-clipped; the clip count is logged.
    """
    depth = str(bit_depth)
    x = w.samples
    n_clipped = int(np.count_nonzero((x < -1.0) | (x > 1.0)))
    if n_clipped:
        log.warning("save_wav(%s): hard-clipped %d samples to [-1, 1]", path, n_clipped)
    x = np.clip(x, -1.0, 1.0)

    if depth == "16":
        pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
        body = pcm.tobytes()
        fmt = struct.pack("<HHIIHH", _PCM, 1, w.sample_rate, w.sample_rate * 2, 2, 16)
        chunks = [(b"fmt ", fmt), (b"data", body)]
    elif depth == "32f":
        body = x.astype("<f4").tobytes()
        fmt = struct.pack(
            "<HHIIHHH", _IEEE_FLOAT, 1, w.sample_rate, w.sample_rate * 4, 4, 32, 0
        )
        fact = struct.pack("<I", len(w))
        chunks = [(b"fmt ", fmt), (b"fact", fact), (b"data", body)]
    else:
        raise ValueError(f"bit_depth must be 16 or 32f, got {bit_depth!r}")

    out = bytearray()
    for cid, payload in chunks:
        out += cid + struct.pack("<I", len(payload)) + payload
        if len(payload) & 1:
            out += b"\x00"
    header = b"RIFF" + struct.pack("<I", 4 + len(out)) + b"WAVE"
    with open(path, "wb") as fh:
        fh.write(header + bytes(out))


def _design_polyphase(up, down, src_rate):
    """Kaiser-windowed sinc prototype split into ``up`` phases of 64 taps."""
    n_taps = _TAPS_PER_PHASE * up - 1  # odd length -> integer group delay
    delay = (n_taps - 1) // 2
    fs_up = src_rate * up
    cutoff_hz = _CUTOFF_FRACTION * 0.5 * min(src_rate, src_rate * up / down)
    fc = cutoff_hz / fs_up  # cycles per upsampled sample
    t = np.arange(n_taps) - delay
    proto = 2.0 * fc * np.sinc(2.0 * fc * t) * np.kaiser(n_taps, _KAISER_BETA)
    proto *= up  # compensate zero-stuffing loss
    padded = np.concatenate([proto, np.zeros(_TAPS_PER_PHASE * up - n_taps)])
    hpoly = padded.reshape(_TAPS_PER_PHASE, up).T.copy()  # hpoly[r, k] = h[r + k*up]
    return hpoly, delay


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Band-limited polyphase resampling to ``target_rate``.

    Output length is round(len(w) * target_rate / sample_rate).
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == w.sample_rate:
        return Waveform(w.samples, w.sample_rate)

    g = math.gcd(int(target_rate), w.sample_rate)
    up = int(target_rate) // g
    down = w.sample_rate // g
    hpoly, delay = _design_polyphase(up, down, w.sample_rate)

    n_out = int(round(len(w) * up / down))
    pad = _TAPS_PER_PHASE + 1
    m = np.arange(n_out, dtype=np.int64) * down + delay
    phases = (m % up).astype(np.int64)
    starts = m // up + pad

    right = int(starts.max()) - len(w) - pad + 2 if n_out else 0
    xpad = np.concatenate(
        [np.zeros(pad), w.samples, np.zeros(max(right, 0))]
    )
    y = _kernels.polyphase_gather(xpad, hpoly, phases, starts)
    return Waveform(y, int(target_rate))


def apply_gain(w: Waveform, gain_db: float) -> Waveform:
    """Scale every sample by 10^(gain_db / 20)."""
    if not math.isfinite(gain_db):
        raise ValueError("gain_db must be finite")
    return Waveform(w.samples * 10.0 ** (gain_db / 20.0), w.sample_rate)
