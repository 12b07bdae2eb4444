"""Synthetic audio material for the test suite.

The speech generator is a crude formant synthesizer: glottal-ish pulse
trains plus aspiration noise through a small resonator bank, chained into
words separated by true-silence gaps. Good enough to exercise the metric,
loudness, and mixing pipelines without any corpus data.
"""

import numpy as np
from scipy import signal as sig


def _phone(fs, rng):
    n = int(rng.uniform(0.12, 0.30) * fs)
    f0 = rng.uniform(90, 220)
    period = fs / f0
    pulses = np.zeros(n)
    idx = (np.arange(int(n / period) + 1) * period).astype(int)
    pulses[idx[idx < n]] = 1.0
    pulses = sig.lfilter([1.0], [1.0, -0.92], pulses)  # spectral tilt
    source = pulses + 0.2 * rng.standard_normal(n)
    out = 0.25 * source  # direct path keeps every band's floor up
    for fc, bw, g in (
        (rng.uniform(300, 900), 300, 1.0),
        (rng.uniform(1000, 2600), 400, 0.8),
        (rng.uniform(2800, 4500), 600, 0.6),
    ):
        r = np.exp(-np.pi * bw / fs)
        theta = 2 * np.pi * fc / fs
        out += g * sig.lfilter([1 - r], [1.0, -2 * r * np.cos(theta), r * r], source)
    return out * rng.uniform(0.75, 1.0)


def synth_speech(duration_s, fs, rng):
    """Word-structured synthetic speech, peak-normalized to 0.9."""
    total = int(round(duration_s * fs))
    out = np.zeros(total)
    pos = 0
    fade = int(0.01 * fs)
    while pos < total:
        word = np.zeros(0)
        for _ in range(int(rng.integers(3, 7))):
            ph = _phone(fs, rng)
            if word.size == 0:
                word = ph
            else:
                ramp = np.linspace(0.0, 1.0, fade)
                word = np.concatenate(
                    [word[:-fade], word[-fade:] * (1 - ramp) + ph[:fade] * ramp, ph[fade:]]
                )
        edge = min(int(0.02 * fs), word.size // 4)
        word[:edge] *= np.linspace(0.3, 1.0, edge)
        word[-edge:] *= np.linspace(1.0, 0.3, edge)
        end = min(pos + word.size, total)
        out[pos:end] = word[:end - pos]
        pos = end + int(rng.uniform(0.10, 0.22) * fs)
    peak = np.abs(out).max()
    return out / peak * 0.9 if peak > 0 else out


def synth_utterance(duration_s, fs, rng):
    """Gap-free voiced material for mixture speech pools."""
    total = int(round(duration_s * fs))
    out = np.zeros(0)
    fade = int(0.01 * fs)
    while out.size < total:
        ph = _phone(fs, rng)
        if out.size == 0:
            out = ph
        else:
            ramp = np.linspace(0.0, 1.0, fade)
            out = np.concatenate(
                [out[:-fade], out[-fade:] * (1 - ramp) + ph[:fade] * ramp, ph[fade:]]
            )
    out = out[:total]
    return out / np.abs(out).max() * 0.9


def exp_decay_rir(rt60_s, fs, rng, duration_factor=1.6, direct=0.0):
    """Noise-excited exponential decay: true RT60 = 3 ln(10) tau = rt60_s."""
    tau = rt60_s / (3.0 * np.log(10.0))
    n = int(round(rt60_s * duration_factor * fs))
    t = np.arange(n) / fs
    h = np.exp(-t / tau) * rng.standard_normal(n)
    if direct > 0:
        h[0] = direct
    return h


def colored_noise(duration_s, fs, rng, pole=0.9):
    """Stationary low-passed noise for background tracks."""
    n = int(round(duration_s * fs))
    x = sig.lfilter([1.0], [1.0, -pole], rng.standard_normal(n))
    return x / np.abs(x).max() * 0.5
