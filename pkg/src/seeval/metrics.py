"""Intrusive objective metrics (SI-SDR, STOI) and external score ingestion."""

import csv
from dataclasses import dataclass

import numpy as np

from .audio import Waveform, resample
from .errors import LengthMismatch, ParseError, RangeViolation, TooShort, ZeroReference

_EPS = float(np.finfo(np.float64).eps)

# STOI analysis constants (short-time objective intelligibility).
_STOI_FS = 10000          # analysis rate, Hz
_STOI_FRAME = 256         # 25.6 ms at 10 kHz
_STOI_HOP = 128           # 50% overlap
_STOI_NFFT = 512
_STOI_NBANDS = 15         # one-third-octave bands
_STOI_MINFREQ = 150.0     # centre frequency of the lowest band, Hz
_STOI_SEG = 30            # frames per analysis segment (384 ms)
_STOI_DYN_RANGE = 40.0    # silent-frame threshold below max frame energy, dB
_STOI_BETA = -15.0        # lower SDR clipping bound, dB

KNOWN_METRICS = (
    "SI_SDR",
    "STOI",
    "PESQ_EXT",
    "DNSMOS_SIG_EXT",
    "DNSMOS_BAK_EXT",
    "DNSMOS_OVRL_EXT",
    "TAS_SI_SDR_EXT",
    "TAS_PESQ_EXT",
    "TAS_STOI_EXT",
    "TAS_MOS_EXT",
)

# Declared value ranges; metrics absent here are unbounded.
METRIC_RANGES = {
    "STOI": (0.0, 1.0),
    "TAS_STOI_EXT": (0.0, 1.0),
    "PESQ_EXT": (1.04, 4.64),
    "TAS_PESQ_EXT": (1.04, 4.64),
    "DNSMOS_SIG_EXT": (1.0, 5.0),
    "DNSMOS_BAK_EXT": (1.0, 5.0),
    "DNSMOS_OVRL_EXT": (1.0, 5.0),
    "TAS_MOS_EXT": (1.0, 5.0),
}


@dataclass(frozen=True)
class MetricScore:
    metric_id: str
    value: float
    sample_id: str
    system_id: str


def si_sdr(reference: Waveform, estimate: Waveform) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    Projects the estimate onto the reference (beta = <est, ref> / ||ref||^2)
    and returns 10 log10(||beta ref||^2 / ||est - beta ref||^2), with a
    machine-epsilon guard to avoid NaN/Inf on degenerate residuals.
    """
    if len(reference) != len(estimate) or reference.sample_rate != estimate.sample_rate:
        raise LengthMismatch(
            f"reference ({len(reference)} @ {reference.sample_rate} Hz) vs "
            f"estimate ({len(estimate)} @ {estimate.sample_rate} Hz)"
        )
    s = reference.samples
    s_hat = estimate.samples
    s_energy = float(np.dot(s, s))
    if s_energy == 0.0:
        raise ZeroReference("reference signal is all-zero")
    beta = float(np.dot(s_hat, s)) / s_energy
    target = beta * s
    residual = s_hat - target
    num = float(np.dot(target, target))
    den = float(np.dot(residual, residual))
    return 10.0 * np.log10((num + _EPS) / (den + _EPS))


def _frame(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    n_frames = (x.size - frame_len) // hop + 1
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx]


def _hann(n: int) -> np.ndarray:
    # MATLAB-style hanning(n): endpoints excluded.
    return np.hanning(n + 2)[1:-1]


def _remove_silent_frames(x: np.ndarray, y: np.ndarray):
    """Drop frames whose clean-signal energy is >40 dB below the maximum.

    Kept frames (Hann-windowed) are overlap-added back into signals, which
    the spectral analysis then re-frames.
    """
    win = _hann(_STOI_FRAME)
    xf = _frame(x, _STOI_FRAME, _STOI_HOP) * win
    yf = _frame(y, _STOI_FRAME, _STOI_HOP) * win
    energies = 20.0 * np.log10(np.linalg.norm(xf, axis=1) + _EPS)
    mask = energies > np.max(energies) - _STOI_DYN_RANGE
    xf, yf = xf[mask], yf[mask]
    if xf.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    n = (xf.shape[0] - 1) * _STOI_HOP + _STOI_FRAME
    x_out = np.zeros(n)
    y_out = np.zeros(n)
    for i in range(xf.shape[0]):
        start = i * _STOI_HOP
        x_out[start:start + _STOI_FRAME] += xf[i]
        y_out[start:start + _STOI_FRAME] += yf[i]
    return x_out, y_out


def _band_matrix() -> np.ndarray:
    """15-band one-third-octave aggregation matrix over rfft bins."""
    f = np.linspace(0, _STOI_FS, _STOI_NFFT + 1)[: _STOI_NFFT // 2 + 1]
    k = np.arange(_STOI_NBANDS)
    lo = _STOI_MINFREQ * 2.0 ** ((2.0 * k - 1.0) / 6.0)
    hi = _STOI_MINFREQ * 2.0 ** ((2.0 * k + 1.0) / 6.0)
    obm = np.zeros((_STOI_NBANDS, f.size))
    for i in range(_STOI_NBANDS):
        lo_idx = int(np.argmin(np.abs(f - lo[i])))
        hi_idx = int(np.argmin(np.abs(f - hi[i])))
        obm[i, lo_idx:hi_idx] = 1.0
    return obm


def _band_envelopes(x: np.ndarray, obm: np.ndarray) -> np.ndarray:
    frames = _frame(x, _STOI_FRAME, _STOI_HOP) * _hann(_STOI_FRAME)
    spec = np.fft.rfft(frames, n=_STOI_NFFT, axis=1)
    return np.sqrt(obm @ np.abs(spec.T) ** 2)  # (bands, frames)


def stoi(reference: Waveform, estimate: Waveform) -> float:
    """Short-time objective intelligibility in [0, 1].

    Both signals are resampled to 10 kHz, silent frames are removed using
    the reference energy, and band-envelope correlations are averaged over
    30-frame segments with per-segment normalization and clipping.
    """
    if len(reference) != len(estimate) or reference.sample_rate != estimate.sample_rate:
        raise LengthMismatch(
            f"reference length {len(reference)} vs estimate {len(estimate)}"
        )
    x = resample(reference, _STOI_FS).samples
    y = resample(estimate, _STOI_FS).samples
    if x.size < _STOI_FRAME:
        raise TooShort("signal shorter than one 25.6 ms analysis frame")

    x, y = _remove_silent_frames(x, y)
    if x.size < _STOI_FRAME:
        raise TooShort("no frames above the silence gate")

    obm = _band_matrix()
    x_tob = _band_envelopes(x, obm)
    y_tob = _band_envelopes(y, obm)
    n_frames = x_tob.shape[1]
    if n_frames < _STOI_SEG:
        raise TooShort(
            f"{n_frames} analysis frames after silence removal, need {_STOI_SEG}"
        )

    # (segments, bands, STOI_SEG) sliding segment stacks.
    seg_idx = np.arange(_STOI_SEG)[None, :] + np.arange(n_frames - _STOI_SEG + 1)[:, None]
    x_seg = x_tob.T[seg_idx].transpose(0, 2, 1)
    y_seg = y_tob.T[seg_idx].transpose(0, 2, 1)

    alpha = np.linalg.norm(x_seg, axis=2, keepdims=True) / (
        np.linalg.norm(y_seg, axis=2, keepdims=True) + _EPS
    )
    clip_bound = x_seg * (1.0 + 10.0 ** (-_STOI_BETA / 20.0))
    y_prime = np.minimum(y_seg * alpha, clip_bound)

    x_c = x_seg - x_seg.mean(axis=2, keepdims=True)
    y_c = y_prime - y_prime.mean(axis=2, keepdims=True)
    x_c /= np.linalg.norm(x_c, axis=2, keepdims=True) + _EPS
    y_c /= np.linalg.norm(y_c, axis=2, keepdims=True) + _EPS

    d = float(np.sum(x_c * y_c)) / (x_seg.shape[0] * _STOI_NBANDS)
    return float(min(1.0, max(0.0, d)))


def ingest_external_scores(path) -> list[MetricScore]:
    """Parse an external score CSV: header sample_id,system_id,metric_id,value.

    Values are range-checked against METRIC_RANGES. Raises ParseError with
    the offending line number, or RangeViolation.
    """
    scores = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected header", line=1) from None
        if [h.strip() for h in header] != ["sample_id", "system_id", "metric_id", "value"]:
            raise ParseError(f"unexpected header {header!r}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line=lineno)
            sample_id, system_id, metric_id, raw = (f.strip() for f in row)
            if metric_id not in KNOWN_METRICS:
                raise ParseError(f"unknown metric_id {metric_id!r}", line=lineno)
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(f"bad value {raw!r}", line=lineno) from None
            if not np.isfinite(value):
                raise ParseError(f"non-finite value {raw!r}", line=lineno)
            bounds = METRIC_RANGES.get(metric_id)
            if bounds is not None and not (bounds[0] <= value <= bounds[1]):
                raise RangeViolation(
                    f"line {lineno}: {metric_id}={value} outside [{bounds[0]}, {bounds[1]}]"
                )
            scores.append(MetricScore(metric_id, value, sample_id, system_id))
    return scores
