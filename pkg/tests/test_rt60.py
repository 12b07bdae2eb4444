import numpy as np
import pytest

from seeval.audio import Waveform
from seeval.errors import InsufficientDecay, TooFew, ZeroSignal
from seeval.rt60 import Rt60Estimate, estimate_rt60, schroeder_edc, summarize_rt60
from synth import exp_decay_rir

FS = 16000


def test_edc_dirac():
    h = np.zeros(100)
    h[0] = 1.0
    edc = schroeder_edc(Waveform(h, FS))
    assert edc[0] == pytest.approx(0.0)
    assert np.all(edc[1:] == -120.0)  # floored


def test_edc_constant_closed_form():
    n = 256
    edc = schroeder_edc(Waveform(np.ones(n), FS))
    k = np.arange(n)
    expected = np.maximum(10 * np.log10((n - k) / n), -120.0)
    np.testing.assert_allclose(edc, expected, atol=1e-9)


def test_edc_monotone_nonincreasing():
    rng = np.random.default_rng(0)
    for _ in range(5):
        h = exp_decay_rir(rng.uniform(0.2, 0.8), FS, rng)
        edc = schroeder_edc(Waveform(h, FS))
        assert np.all(np.diff(edc) <= 1e-12)


def test_edc_exponential_slope():
    # amplitude decay e^(-t/tau) -> EDC slope = -20 log10(e) / tau dB/s
    rng = np.random.default_rng(1)
    tau = 0.1
    n = int(0.5 * FS)
    t = np.arange(n) / FS
    h = np.exp(-t / tau) * rng.standard_normal(n)
    edc = schroeder_edc(Waveform(h, FS))
    lo, hi = int(0.05 * FS), int(0.25 * FS)
    slope = np.polyfit(t[lo:hi], edc[lo:hi], 1)[0]
    expected = -20 * np.log10(np.e) / tau
    assert slope == pytest.approx(expected, rel=0.05)


def test_edc_zero_signal():
    with pytest.raises(ZeroSignal):
        schroeder_edc(Waveform(np.zeros(100), FS))


def test_rt60_recovery_grid():
    # Table-range RT60s recovered within 5% relative error.
    rng = np.random.default_rng(2)
    for true_rt60 in (0.3, 0.45, 0.58):
        est = estimate_rt60(Waveform(exp_decay_rir(true_rt60, FS, rng), FS))
        assert est.rt60_s == pytest.approx(true_rt60, rel=0.05)
        assert est.fit_slope_db_per_s < 0
        assert est.fit_range_db == (-5.0, -25.0)
        assert 0.9 < est.r_squared <= 1.0


def test_rt60_half_second():
    rng = np.random.default_rng(3)
    est = estimate_rt60(Waveform(exp_decay_rir(0.5, FS, rng), FS))
    assert est.rt60_s == pytest.approx(0.5, abs=0.025)


def test_rt60_amplitude_invariance():
    rng = np.random.default_rng(4)
    h = exp_decay_rir(0.4, FS, rng)
    a = estimate_rt60(Waveform(h, FS))
    b = estimate_rt60(Waveform(0.1 * h, FS))
    assert a.rt60_s == pytest.approx(b.rt60_s, abs=1e-9)


def test_rt60_insufficient_decay():
    # Energy concentrated at the very end: the EDC never falls to -25 dB.
    h = np.concatenate([np.full(100, 0.1), [1.0]])
    with pytest.raises(InsufficientDecay):
        estimate_rt60(Waveform(h, FS))


def test_rt60_relative_error_range():
    rng = np.random.default_rng(6)
    for true_rt60 in (0.2, 0.6, 1.0):
        est = estimate_rt60(Waveform(exp_decay_rir(true_rt60, FS, rng), FS))
        assert abs(est.rt60_s - true_rt60) / true_rt60 < 0.05


def test_summarize_two_point():
    ests = [
        Rt60Estimate(0.4, -150.0, (-5, -25), 1.0),
        Rt60Estimate(0.6, -100.0, (-5, -25), 1.0),
    ]
    mean, sd = summarize_rt60(ests)
    assert mean == pytest.approx(0.5)
    assert sd == pytest.approx(0.14142135, abs=1e-6)


def test_summarize_identical():
    ests = [Rt60Estimate(0.5, -120.0, (-5, -25), 1.0)] * 3
    mean, sd = summarize_rt60(ests)
    assert mean == pytest.approx(0.5)
    assert sd == 0.0


def test_summarize_too_few():
    with pytest.raises(TooFew):
        summarize_rt60([Rt60Estimate(0.5, -120.0, (-5, -25), 1.0)])


def test_room_scale_reproduction():
    # 160 jittered RIRs around RT60 = 0.582 s: mean recovered within 0.03.
    rng = np.random.default_rng(7)
    estimates = []
    for _ in range(160):
        true = 0.582 + rng.normal(0, 0.01)
        estimates.append(estimate_rt60(Waveform(exp_decay_rir(true, FS, rng), FS)))
    mean, sd = summarize_rt60(estimates)
    assert mean == pytest.approx(0.582, abs=0.03)
    assert sd < 0.06
