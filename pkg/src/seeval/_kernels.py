"""Hot numeric kernels with optional numba acceleration.

Two inner loops dominate batch evaluation runtime: the biquad cascade used
by the loudness K-weighting filter and the polyphase gather of the
windowed-sinc resampler. Both exist in two variants:

* a numba ``@njit`` version, compiled lazily on first use;
* a numpy/scipy fallback.

Set ``SEEVAL_NO_NUMBA=1`` to force the fallback path (also used when numba
is not installed). ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

import numpy as np
from scipy import signal as _sig

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("SEEVAL_NO_NUMBA", "0") != "1"


# ---------------------------------------------------------------------------
# biquad cascade (direct form II transposed), matches scipy.signal.sosfilt
# ---------------------------------------------------------------------------

def _sosfilt_py(sos, x):
    return _sig.sosfilt(sos, x)


if _HAVE_NUMBA:

    @njit(cache=True)
    def _sosfilt_nb(sos, x):  # pragma: no cover - exercised via dispatch
        y = x.copy()
        n_sections = sos.shape[0]
        for s in range(n_sections):
            b0, b1, b2 = sos[s, 0], sos[s, 1], sos[s, 2]
            a1, a2 = sos[s, 4], sos[s, 5]
            z1 = 0.0
            z2 = 0.0
            for n in range(y.shape[0]):
                xn = y[n]
                yn = b0 * xn + z1
                z1 = b1 * xn - a1 * yn + z2
                z2 = b2 * xn - a2 * yn
                y[n] = yn
        return y


def sosfilt(sos, x):
    """Filter ``x`` through a cascade of second-order sections.

    ``sos`` is an (n_sections, 6) array of [b0 b1 b2 a0 a1 a2] rows with
    a0 == 1. Zero initial conditions.
    """
    sos = np.ascontiguousarray(sos, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if USE_NUMBA:
        return _sosfilt_nb(sos, x)
    return _sosfilt_py(sos, x)


# ---------------------------------------------------------------------------
# polyphase resampler gather
# ---------------------------------------------------------------------------

def _polyphase_py(xpad, hpoly, phases, starts):
    ptaps = hpoly.shape[1]
    idx = starts[:, None] - np.arange(ptaps)[None, :]
    return np.einsum("nk,nk->n", hpoly[phases], xpad[idx])


if _HAVE_NUMBA:

    @njit(cache=True)
    def _polyphase_nb(xpad, hpoly, phases, starts):  # pragma: no cover
        n_out = phases.shape[0]
        ptaps = hpoly.shape[1]
        y = np.empty(n_out)
        for n in range(n_out):
            r = phases[n]
            q = starts[n]
            acc = 0.0
            for k in range(ptaps):
                acc += hpoly[r, k] * xpad[q - k]
            y[n] = acc
        return y


def polyphase_gather(xpad, hpoly, phases, starts):
    """Evaluate one polyphase output sample per (phase, start) pair.

    ``xpad`` is the zero-padded input; ``hpoly[r]`` holds the taps of
    phase ``r``; output n is the dot product of ``hpoly[phases[n]]`` with
    ``xpad[starts[n]], xpad[starts[n]-1], ...``.
    """
    if USE_NUMBA:
        return _polyphase_nb(xpad, hpoly, phases, starts)
    return _polyphase_py(xpad, hpoly, phases, starts)
