"""Compare the numba kernels against their numpy/scipy fallbacks.

Usage: python benchmarks/bench_kernels.py [--seconds 60] [--rate 16000]

Times the two hot paths (K-weighting biquad cascade, polyphase resampler
gather) on a signal of the given duration. ``SEEVAL_NO_NUMBA=1`` makes the
package itself run on the fallback path; this script always times both
variants directly.
"""

import argparse
import time

import numpy as np

from seeval import _kernels
from seeval.audio import Waveform, _design_polyphase, resample
from seeval.loudness import k_weighting_sos


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seconds", type=float, default=60.0)
    parser.add_argument("--rate", type=int, default=16000)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    x = rng.standard_normal(int(args.seconds * args.rate))
    sos = np.ascontiguousarray(k_weighting_sos(args.rate))

    rows = []

    if _kernels._HAVE_NUMBA:
        _kernels._sosfilt_nb(sos, x[:1000])  # compile outside the timing
        t_nb = _time(_kernels._sosfilt_nb, sos, x)
    else:
        t_nb = float("nan")
    t_py = _time(_kernels._sosfilt_py, sos, x)
    rows.append(("biquad cascade (K-weighting)", t_nb, t_py))

    up, down = 5, 8  # 16 kHz -> 10 kHz
    hpoly, delay = _design_polyphase(up, down, args.rate)
    n_out = int(round(x.size * up / down))
    pad = 65
    m = np.arange(n_out, dtype=np.int64) * down + delay
    phases = (m % up).astype(np.int64)
    starts = m // up + pad
    xpad = np.concatenate([np.zeros(pad), x, np.zeros(pad + 64)])
    if _kernels._HAVE_NUMBA:
        _kernels._polyphase_nb(xpad[:2000], hpoly, phases[:100], starts[:100])
        t_nb = _time(_kernels._polyphase_nb, xpad, hpoly, phases, starts)
    else:
        t_nb = float("nan")
    t_py = _time(_kernels._polyphase_py, xpad, hpoly, phases, starts)
    rows.append(("polyphase resampler gather", t_nb, t_py))

    print(f"\nsignal: {args.seconds:.0f} s at {args.rate} Hz "
          f"({x.size} samples), best of 5\n")
    print(f"{'kernel':<32} {'numba':>10} {'fallback':>10} {'speedup':>9}")
    for name, t_nb, t_py in rows:
        ratio = t_py / t_nb if t_nb == t_nb and t_nb > 0 else float("nan")
        print(f"{name:<32} {t_nb * 1e3:>8.2f}ms {t_py * 1e3:>8.2f}ms {ratio:>8.1f}x")

    w = Waveform(x, args.rate)
    t0 = time.perf_counter()
    resample(w, 10000)
    print(f"\nend-to-end resample {args.seconds:.0f} s -> 10 kHz: "
          f"{(time.perf_counter() - t0) * 1e3:.1f} ms "
          f"(USE_NUMBA={_kernels.USE_NUMBA})")


if __name__ == "__main__":
    main()
