"""Diarization-driven segmentation on a 0.01 s grid.

Counts simultaneous speakers, computes overlap statistics, and extracts
listening-test candidate segments (4-5 s, >= 3 s speech, 0.25 s silent
margins). Interval activity is half-open: [a, b) is active at tick t iff
a <= t < b.
"""

import json
from dataclasses import dataclass

import numpy as np

TICKS_PER_S = 100

_LT_MIN_TICKS = 400      # 4 s
_LT_MAX_TICKS = 500      # 5 s
_LT_SPEECH_TICKS = 300   # 3 s of speech
_LT_MARGIN_TICKS = 25    # 0.25 s silence at each edge
_LT_STEP_TICKS = 25      # greedy scan step


def _tick(t: float) -> int:
    return int(round(t * TICKS_PER_S))


@dataclass(frozen=True)
class DiarizationTrack:
    speaker_id: str
    intervals: tuple
    gender: str = None
    location: str = None
    session: str = None

    def __post_init__(self):
        ivals = tuple((float(a), float(b)) for a, b in self.intervals)
        prev_end = None
        for a, b in ivals:
            if a < 0 or b < 0:
                raise ValueError(f"{self.speaker_id}: negative interval time")
            if a >= b:
                raise ValueError(f"{self.speaker_id}: empty interval [{a}, {b}]")
            if prev_end is not None and a < prev_end:
                raise ValueError(f"{self.speaker_id}: overlapping intervals")
            prev_end = b
        object.__setattr__(self, "intervals", ivals)


@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    max_simultaneous_speakers: int
    speech_seconds: float


def _active_counts(tracks, n_ticks: int) -> np.ndarray:
    """Per-tick simultaneous speaker count over [0, n_ticks)."""
    delta = np.zeros(n_ticks + 1, dtype=np.int64)
    for track in tracks:
        for a, b in track.intervals:
            ta, tb = min(_tick(a), n_ticks), min(_tick(b), n_ticks)
            if ta < tb:
                delta[ta] += 1
                delta[tb] -= 1
    return np.cumsum(delta[:-1])


def max_overlap(tracks, window) -> int:
    """Maximum simultaneous speaker count inside [start, end)."""
    start, end = window
    t0, t1 = _tick(start), _tick(end)
    if t1 <= t0:
        return 0
    events = []
    for track in tracks:
        for a, b in track.intervals:
            ta, tb = max(_tick(a), t0), min(_tick(b), t1)
            if ta < tb:
                events.append((ta, 1))
                events.append((tb, -1))
    if not events:
        return 0
    events.sort()
    best = level = 0
    for _, step in events:
        level += step
        best = max(best, level)
    return best


def overlap_statistics(tracks, total_duration: float) -> dict:
    """Fraction of time spent at each simultaneous-speaker level."""
    for track in tracks:
        for _, b in track.intervals:
            if b > total_duration + 1e-9:
                raise ValueError("interval extends past total_duration")
    n_ticks = _tick(total_duration)
    counts = _active_counts(tracks, n_ticks)
    n_levels = max(4, int(counts.max(initial=0))) + 1
    hist = np.bincount(counts, minlength=n_levels)
    return {level: hist[level] / n_ticks for level in range(n_levels)}


def extract_lt_candidates(tracks, audio_duration: float) -> list:
    """Greedy left-to-right scan for listening-test candidate segments.

    Every returned segment has duration in [4, 5] s, at least 3 s of
    speech, and no speech activity in its first and last 0.25 s. Segments
    do not overlap.
    """
    n_ticks = _tick(audio_duration)
    if n_ticks < _LT_MIN_TICKS:
        return []
    speech = (_active_counts(tracks, n_ticks) > 0).astype(np.int64)
    prefix = np.concatenate([[0], np.cumsum(speech)])

    def speech_ticks(a, b):
        return int(prefix[b] - prefix[a])

    segments = []
    start = 0
    while start + _LT_MIN_TICKS <= n_ticks:
        found = None
        for dur in range(_LT_MIN_TICKS, _LT_MAX_TICKS + 1, _LT_STEP_TICKS):
            end = start + dur
            if end > n_ticks:
                break
            if speech_ticks(start, start + _LT_MARGIN_TICKS) != 0:
                break  # leading margin fails for every duration at this start
            if speech_ticks(end - _LT_MARGIN_TICKS, end) != 0:
                continue
            if speech_ticks(start, end) < _LT_SPEECH_TICKS:
                continue
            found = (start, end)
            break
        if found is None:
            start += _LT_STEP_TICKS
            continue
        a, b = found
        segments.append(
            Segment(
                start_s=a / TICKS_PER_S,
                end_s=b / TICKS_PER_S,
                max_simultaneous_speakers=max_overlap(
                    tracks, (a / TICKS_PER_S, b / TICKS_PER_S)
                ),
                speech_seconds=speech_ticks(a, b) / TICKS_PER_S,
            )
        )
        start = b
    return segments


def parse_diarization(doc: dict):
    """Parse a diarization document into (recording_id, duration_s, tracks).

    Schema: {recording_id, duration_s, tracks: [{speaker_id, gender?,
    location?, session?, intervals: [[start, end], ...]}]}.
    """
    tracks = [
        DiarizationTrack(
            speaker_id=t["speaker_id"],
            intervals=tuple((a, b) for a, b in t["intervals"]),
            gender=t.get("gender"),
            location=t.get("location"),
            session=t.get("session"),
        )
        for t in doc["tracks"]
    ]
    return doc["recording_id"], float(doc["duration_s"]), tracks


def load_diarization(path):
    with open(path, encoding="utf-8") as fh:
        return parse_diarization(json.load(fh))
