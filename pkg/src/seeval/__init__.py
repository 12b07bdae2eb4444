"""Speech enhancement evaluation workbench.

Objective metrics over loudness-normalized signals, synthetic reverberant
mixture generation, transcript-driven segmentation, a P.835 listening-test
service, and the statistics connecting objective and subjective scores.
"""

from .audio import Waveform, apply_gain, load_wav, resample, save_wav
from .loudness import LoudnessResult, measure_loudness, normalize_loudness
from .metrics import MetricScore, ingest_external_scores, si_sdr, stoi
from .rt60 import Rt60Estimate, estimate_rt60, schroeder_edc, summarize_rt60
from .segmenter import (
    DiarizationTrack,
    Segment,
    extract_lt_candidates,
    max_overlap,
    overlap_statistics,
)
from .stats import (
    AnovaResult,
    PosthocResult,
    VoteMatrix,
    compute_mos,
    correlation_matrix,
    holm_posthoc,
    pearson,
    rm_anova,
)

__version__ = "0.1.0"

__all__ = [
    "Waveform", "load_wav", "save_wav", "resample", "apply_gain",
    "LoudnessResult", "measure_loudness", "normalize_loudness",
    "MetricScore", "si_sdr", "stoi", "ingest_external_scores",
    "Rt60Estimate", "schroeder_edc", "estimate_rt60", "summarize_rt60",
    "DiarizationTrack", "Segment", "max_overlap", "overlap_statistics",
    "extract_lt_candidates",
    "VoteMatrix", "AnovaResult", "PosthocResult", "compute_mos", "pearson",
    "correlation_matrix", "rm_anova", "holm_posthoc",
    "__version__",
]
