"""Reverberation time estimation from room impulse responses.

RT60 is obtained by fitting a straight line to Schroeder's backward
integrated energy decay curve between -5 and -25 dB and extrapolating the
slope to a 60 dB decay.
"""

import math
from dataclasses import dataclass

import numpy as np

from .audio import Waveform
from .errors import InsufficientDecay, TooFew, ZeroSignal

_EDC_FLOOR_DB = -120.0
_FIT_UPPER_DB = -5.0
_FIT_LOWER_DB = -25.0


@dataclass(frozen=True)
class Rt60Estimate:
    rt60_s: float
    fit_slope_db_per_s: float
    fit_range_db: tuple
    r_squared: float


def schroeder_edc(rir: Waveform) -> np.ndarray:
    """Energy decay curve in dB: EDC(t) = 10 log10(tail energy / total).

    Monotonically non-increasing, EDC(0) = 0 dB, floored at -120 dB.
    """
    h2 = rir.samples ** 2
    total = float(h2.sum())
    if total == 0.0:
        raise ZeroSignal("RIR has zero energy")
    tail = np.cumsum(h2[::-1])[::-1]
    with np.errstate(divide="ignore"):
        edc = 10.0 * np.log10(tail / total)
    return np.maximum(edc, _EDC_FLOOR_DB)


def estimate_rt60(rir: Waveform) -> Rt60Estimate:
    """Linear least-squares fit of the EDC between -5 and -25 dB."""
    edc = schroeder_edc(rir)
    below_upper = np.nonzero(edc <= _FIT_UPPER_DB)[0]
    below_lower = np.nonzero(edc <= _FIT_LOWER_DB)[0]
    if below_lower.size == 0:
        raise InsufficientDecay(
            f"EDC never reaches {_FIT_LOWER_DB} dB (min {edc.min():.1f} dB)"
        )
    i_hi = int(below_upper[0])
    i_lo = int(below_lower[0])
    if i_lo - i_hi < 2:
        raise InsufficientDecay("fewer than 2 EDC samples in the fit range")

    t = np.arange(i_hi, i_lo + 1) / rir.sample_rate
    seg = edc[i_hi:i_lo + 1]
    slope, intercept = np.polyfit(t, seg, 1)
    predicted = slope * t + intercept
    ss_res = float(np.sum((seg - predicted) ** 2))
    ss_tot = float(np.sum((seg - seg.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return Rt60Estimate(
        rt60_s=-60.0 / slope,
        fit_slope_db_per_s=float(slope),
        fit_range_db=(_FIT_UPPER_DB, _FIT_LOWER_DB),
        r_squared=r_squared,
    )


def summarize_rt60(estimates) -> tuple:
    """Mean and sample standard deviation (n-1) of RT60 estimates."""
    values = [e.rt60_s for e in estimates]
    if len(values) < 2:
        raise TooFew(f"need at least 2 estimates, got {len(values)}")
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)
