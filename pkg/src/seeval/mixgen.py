"""Synthetic reverberant multi-speaker noisy mixture generation.

Pipeline per mixture: draw a speaker count from the configured prior,
sample a coherent RIR set (home -> room -> array -> n positions without
replacement -> common channel), pick corpus speakers with equal gender
probability, fit utterances into diarization activity patterns, convolve
with the RIRs, and scale each speaker so its SNR over its own active
support matches a two-level Gaussian draw (global per-mixture SNR, then
per-speaker SNR around it).

All emitted components are float32; the mixture is the float32 cascade sum
speech_0 + speech_1 + ... + noise, so re-summing the emitted WAVs in that
order reproduces it bit-exactly.
"""

import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from scipy import signal as _sig

from .audio import Waveform, load_wav, save_wav
from .errors import (
    CatalogTooSmall,
    InsufficientMaterial,
    PatternUnavailable,
    SilentComponent,
)
from .segmenter import DiarizationTrack, max_overlap

_CROSSFADE_S = 0.050  # noise loop crossfade


# ---------------------------------------------------------------------------
# catalog / corpus containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RirEntry:
    home_id: str
    room_id: str
    array_id: str
    source_position_id: str
    channel_id: str
    wav_path: str


@dataclass(frozen=True)
class RirCatalog:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        positions = {}
        for e in self.entries:
            positions.setdefault((e.home_id, e.room_id, e.array_id), set()).add(
                e.source_position_id
            )
        for group, pos in positions.items():
            if len(pos) < 3:
                raise CatalogTooSmall(
                    f"group {group} has {len(pos)} source positions, need >= 3"
                )

    def homes(self):
        return sorted({e.home_id for e in self.entries})


@dataclass(frozen=True)
class SpeakerEntry:
    speaker_id: str
    gender: str
    utterances: tuple


@dataclass(frozen=True)
class NoiseEntry:
    segment_id: str
    wav_path: str


@dataclass(frozen=True)
class ActivityPattern:
    """One template segment: per-speaker interval lists plus duration."""

    pattern_id: str
    duration_s: float
    tracks: tuple

    @property
    def n_tracks(self):
        return len(self.tracks)


@dataclass(frozen=True)
class Corpora:
    speech: tuple
    noise: tuple
    patterns: tuple


@dataclass(frozen=True)
class MixConfig:
    speaker_count_probs: tuple = (0.60, 0.35, 0.05)
    snr_mean_db: float = 5.0
    sigma1_db: float = 6.7082
    sigma2_db: float = 2.0
    seed: int = 0

    def __post_init__(self):
        probs = tuple(float(p) for p in self.speaker_count_probs)
        if len(probs) != 3 or any(p < 0 for p in probs) or abs(sum(probs) - 1) > 1e-9:
            raise ValueError("speaker_count_probs must be 3 non-negatives summing to 1")
        object.__setattr__(self, "speaker_count_probs", probs)


@dataclass
class MixturePlan:
    mixture_id: str
    n_speakers: int
    rir_entries: list          # n catalog entries, shared home/room/array/channel
    speaker_ids: list
    speaker_genders: list
    utterance_paths: list      # per speaker, seeded shuffle order
    activity_patterns: list    # per speaker: [(start_s, end_s), ...]
    pattern_id: str
    duration_s: float
    global_snr_db: float
    per_speaker_snr_db: list
    noise_segment_id: str
    render_seed: int


@dataclass
class MixtureRecord:
    mixture: Waveform
    per_speaker_reverberant_speech: list
    noise: Waveform
    clean_reference: Waveform
    plan: MixturePlan


# ---------------------------------------------------------------------------
# plan sampling
# ---------------------------------------------------------------------------

def sample_plan(cfg: MixConfig, catalog: RirCatalog, corpora: Corpora, rng,
                mixture_id: str = "mix") -> MixturePlan:
    """Draw one mixture recipe; consumes the shared RNG stream in order."""
    n = int(rng.choice((1, 2, 3), p=cfg.speaker_count_probs))

    candidates = [
        p for p in corpora.patterns
        if p.n_tracks == n and max_overlap(p.tracks, (0.0, p.duration_s)) == n
    ]
    if not candidates:
        raise PatternUnavailable(f"no activity pattern with {n} concurrent speakers")
    pattern = candidates[int(rng.integers(len(candidates)))]

    rir_entries = _sample_rirs(catalog, n, rng)
    speakers = _sample_speakers(corpora.speech, n, rng)
    utterance_paths = [list(rng.permutation(list(s.utterances))) for s in speakers]

    global_snr = float(rng.normal(cfg.snr_mean_db, cfg.sigma1_db))
    per_speaker_snr = [float(rng.normal(global_snr, cfg.sigma2_db)) for _ in range(n)]
    noise_entry = corpora.noise[int(rng.integers(len(corpora.noise)))]

    tracks = sorted(pattern.tracks, key=lambda t: t.speaker_id)
    return MixturePlan(
        mixture_id=mixture_id,
        n_speakers=n,
        rir_entries=rir_entries,
        speaker_ids=[s.speaker_id for s in speakers],
        speaker_genders=[s.gender for s in speakers],
        utterance_paths=utterance_paths,
        activity_patterns=[list(t.intervals) for t in tracks],
        pattern_id=pattern.pattern_id,
        duration_s=pattern.duration_s,
        global_snr_db=global_snr,
        per_speaker_snr_db=per_speaker_snr,
        noise_segment_id=noise_entry.segment_id,
        render_seed=int(rng.integers(2 ** 62)),
    )


def _sample_rirs(catalog: RirCatalog, n: int, rng) -> list:
    """home -> room -> array -> n positions without replacement -> channel."""
    homes = catalog.homes()
    home = homes[int(rng.integers(len(homes)))]
    rooms = sorted({e.room_id for e in catalog.entries if e.home_id == home})
    room = rooms[int(rng.integers(len(rooms)))]
    arrays = sorted({
        e.array_id for e in catalog.entries
        if e.home_id == home and e.room_id == room
    })
    array = arrays[int(rng.integers(len(arrays)))]
    group = [
        e for e in catalog.entries
        if e.home_id == home and e.room_id == room and e.array_id == array
    ]
    positions = sorted({e.source_position_id for e in group})
    if len(positions) < n:
        raise CatalogTooSmall(
            f"({home}, {room}, {array}) offers {len(positions)} positions, need {n}"
        )
    chosen = [positions[i] for i in rng.choice(len(positions), size=n, replace=False)]
    common_channels = None
    for pos in chosen:
        channels = {e.channel_id for e in group if e.source_position_id == pos}
        common_channels = channels if common_channels is None else common_channels & channels
    if not common_channels:
        raise CatalogTooSmall(
            f"({home}, {room}, {array}) has no channel shared by positions {chosen}"
        )
    channel_list = sorted(common_channels)
    channel = channel_list[int(rng.integers(len(channel_list)))]
    by_key = {(e.source_position_id, e.channel_id): e for e in group}
    return [by_key[(pos, channel)] for pos in chosen]


def _sample_speakers(speech, n: int, rng) -> list:
    """Bernoulli(0.5) gender per slot, uniform speaker without replacement.

    Falls back to the remaining pool when the drawn gender is exhausted.
    """
    remaining = list(speech)
    chosen = []
    for _ in range(n):
        if not remaining:
            raise CatalogTooSmall("speech corpus has fewer speakers than requested")
        gender = "m" if rng.random() < 0.5 else "f"
        pool = [s for s in remaining if s.gender == gender] or remaining
        pick = pool[int(rng.integers(len(pool)))]
        chosen.append(pick)
        remaining.remove(pick)
    return chosen


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def fit_utterances(pattern, utterances, duration_s: float,
                   sample_rate: int = 16000) -> Waveform:
    """Fill the activity intervals with consecutive utterances.

    Each interval is packed by concatenating utterances from the supplied
    order; the final utterance of an interval is trimmed at the boundary
    and its remainder discarded. Output is zero outside the intervals.
    """
    total = int(round(duration_s * sample_rate))
    out = np.zeros(total)
    queue = list(utterances)
    for start_s, end_s in pattern:
        pos = int(round(start_s * sample_rate))
        end = min(int(round(end_s * sample_rate)), total)
        while pos < end:
            if not queue:
                raise InsufficientMaterial(
                    "ran out of utterances while filling the activity pattern"
                )
            utt = queue.pop(0)
            take = min(len(utt), end - pos)
            out[pos:pos + take] = utt.samples[:take]
            pos += take
    return Waveform(out, sample_rate)


def _support_mask(intervals, total: int, sample_rate: int) -> np.ndarray:
    mask = np.zeros(total, dtype=bool)
    for start_s, end_s in intervals:
        a = int(round(start_s * sample_rate))
        b = min(int(round(end_s * sample_rate)), total)
        if a < b:
            mask[a:b] = True
    return mask


def render_mixture(plan: MixturePlan, speech, rirs, noise: Waveform) -> MixtureRecord:
    """Convolve, scale to the planned per-speaker SNRs, and sum.

    ``speech`` holds the per-speaker dry pattern-fitted signals, ``rirs``
    the matching impulse responses. Per-speaker SNR is measured over that
    speaker's active support only: 10 log10(P_speech / P_noise) with both
    powers taken on the support samples.
    """
    sample_rate = noise.sample_rate
    total = len(noise)
    noise64 = noise.samples.astype(np.float64)

    wets = []
    for k, (dry, rir) in enumerate(zip(speech, rirs)):
        wet = _sig.fftconvolve(dry.samples, rir.samples)[:total]
        if wet.size < total:
            wet = np.concatenate([wet, np.zeros(total - wet.size)])
        mask = _support_mask(plan.activity_patterns[k], total, sample_rate)
        if not mask.any():
            raise SilentComponent(f"speaker {k} has an empty activity pattern")
        p_speech = float(np.mean(wet[mask] ** 2))
        p_noise = float(np.mean(noise64[mask] ** 2))
        if p_speech == 0.0:
            raise SilentComponent(f"speaker {k} reverberant speech has zero power")
        if p_noise == 0.0:
            raise SilentComponent(f"noise has zero power on speaker {k} support")
        gain = 10.0 ** (plan.per_speaker_snr_db[k] / 20.0) * np.sqrt(p_noise / p_speech)
        wets.append(wet * gain)

    # Common headroom scale so no emitted file clips; per-speaker SNRs are
    # unaffected because speech and noise scale together.
    peak = float(np.max(np.abs(sum(wets) + noise64)))
    scale = 0.99 / peak if peak > 0.99 else 1.0
    reverberant = [(w * scale).astype(np.float32) for w in wets]
    noise32 = (noise64 * scale).astype(np.float32)

    clean_ref = np.zeros(total, dtype=np.float32)
    for wet32 in reverberant:
        clean_ref = clean_ref + wet32
    mixture = clean_ref + noise32

    return MixtureRecord(
        mixture=Waveform(mixture.astype(np.float64), sample_rate),
        per_speaker_reverberant_speech=[
            Waveform(w.astype(np.float64), sample_rate) for w in reverberant
        ],
        noise=Waveform(noise32.astype(np.float64), sample_rate),
        clean_reference=Waveform(clean_ref.astype(np.float64), sample_rate),
        plan=plan,
    )


def prepare_noise(segment: Waveform, total: int, rng) -> Waveform:
    """Crop or crossfade-loop a noise segment to ``total`` samples."""
    x = segment.samples
    if x.size > total:
        start = int(rng.integers(x.size - total + 1))
        return Waveform(x[start:start + total], segment.sample_rate)
    fade = min(int(round(_CROSSFADE_S * segment.sample_rate)), x.size // 2)
    out = x.copy()
    while out.size < total:
        if fade > 0:
            ramp = np.linspace(0.0, 1.0, fade, endpoint=False)
            seam = out[-fade:] * (1.0 - ramp) + x[:fade] * ramp
            out = np.concatenate([out[:-fade], seam, x[fade:]])
        else:
            out = np.concatenate([out, x])
    return Waveform(out[:total], segment.sample_rate)


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------

def generate_dataset(cfg: MixConfig, catalog: RirCatalog, corpora: Corpora,
                     count: int, out_dir) -> list:
    """Render ``count`` mixtures under ``out_dir``; returns manifest rows.

    Per mixture: <id>/mix.wav, <id>/speech_k.wav, <id>/noise.wav (all
    float32) and <id>/meta.json. A dataset-level manifest.jsonl is written
    last. Fully reproducible from ``cfg.seed``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    speakers_by_id = {s.speaker_id: s for s in corpora.speech}
    noise_by_id = {e.segment_id: e for e in corpora.noise}

    manifest = []
    for i in range(count):
        plan = sample_plan(cfg, catalog, corpora, rng, mixture_id=f"mix_{i:05d}")
        record = render_plan(plan, noise_by_id)
        row = _write_mixture(record, out_dir)
        manifest.append(row)

    with open(out_dir / "manifest.jsonl", "w", encoding="utf-8") as fh:
        for row in manifest:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return manifest


def render_plan(plan: MixturePlan, noise_by_id) -> MixtureRecord:
    """Load the plan's audio material and render it."""
    rirs = [load_wav(e.wav_path) for e in plan.rir_entries]
    sample_rate = rirs[0].sample_rate
    render_rng = np.random.default_rng(plan.render_seed)

    speech = []
    for k in range(plan.n_speakers):
        utts = [load_wav(p) for p in plan.utterance_paths[k]]
        speech.append(
            fit_utterances(plan.activity_patterns[k], utts, plan.duration_s, sample_rate)
        )

    segment = load_wav(noise_by_id[plan.noise_segment_id].wav_path)
    total = int(round(plan.duration_s * sample_rate))
    noise = prepare_noise(segment, total, render_rng)
    return render_mixture(plan, speech, rirs, noise)


def _measured_snrs(record: MixtureRecord) -> list:
    total = len(record.noise)
    rate = record.noise.sample_rate
    snrs = []
    for k, wet in enumerate(record.per_speaker_reverberant_speech):
        mask = _support_mask(record.plan.activity_patterns[k], total, rate)
        p_speech = float(np.mean(wet.samples[mask] ** 2))
        p_noise = float(np.mean(record.noise.samples[mask] ** 2))
        snrs.append(10.0 * np.log10(p_speech / p_noise))
    return snrs


def _write_mixture(record: MixtureRecord, out_dir: Path) -> dict:
    plan = record.plan
    mix_dir = out_dir / plan.mixture_id
    mix_dir.mkdir(parents=True, exist_ok=True)

    save_wav(record.mixture, mix_dir / "mix.wav", "32f")
    speech_paths = []
    for k, wet in enumerate(record.per_speaker_reverberant_speech):
        path = mix_dir / f"speech_{k}.wav"
        save_wav(wet, path, "32f")
        speech_paths.append(str(path.relative_to(out_dir)))
    save_wav(record.noise, mix_dir / "noise.wav", "32f")

    p_ref = float(np.mean(record.clean_reference.samples ** 2))
    p_noise = float(np.mean(record.noise.samples ** 2))
    meta = {
        "mixture_id": plan.mixture_id,
        "n_speakers": plan.n_speakers,
        "duration_s": plan.duration_s,
        "pattern_id": plan.pattern_id,
        "speaker_ids": plan.speaker_ids,
        "speaker_genders": plan.speaker_genders,
        "rirs": [asdict(e) for e in plan.rir_entries],
        "noise_segment_id": plan.noise_segment_id,
        "global_snr_db": plan.global_snr_db,
        "per_speaker_snr_db": plan.per_speaker_snr_db,
        "measured_per_speaker_snr_db": _measured_snrs(record),
        "activity_patterns": plan.activity_patterns,
        "reference_power": p_ref,
        "noise_power": p_noise,
        "render_seed": plan.render_seed,
    }
    with open(mix_dir / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)

    return {
        "mixture_id": plan.mixture_id,
        "n_speakers": plan.n_speakers,
        "duration_s": plan.duration_s,
        "dir": plan.mixture_id,
        "mix_path": f"{plan.mixture_id}/mix.wav",
        "speech_paths": speech_paths,
        "noise_path": f"{plan.mixture_id}/noise.wav",
        "meta_path": f"{plan.mixture_id}/meta.json",
        "global_snr_db": plan.global_snr_db,
        "per_speaker_snr_db": plan.per_speaker_snr_db,
        "reference_power": p_ref,
        "noise_power": p_noise,
    }


# ---------------------------------------------------------------------------
# manifest loaders
# ---------------------------------------------------------------------------

def load_rir_catalog(path) -> RirCatalog:
    """JSON list of {home_id, room_id, array_id, source_position_id,
    channel_id, wav_path}. Paths are resolved relative to the file."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    base = path.parent
    return RirCatalog(tuple(
        RirEntry(
            home_id=str(e["home_id"]),
            room_id=str(e["room_id"]),
            array_id=str(e["array_id"]),
            source_position_id=str(e["source_position_id"]),
            channel_id=str(e["channel_id"]),
            wav_path=str(base / e["wav_path"]),
        )
        for e in raw
    ))


def load_speech_corpus(path) -> tuple:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    base = path.parent
    return tuple(
        SpeakerEntry(
            speaker_id=str(e["speaker_id"]),
            gender=str(e["gender"]),
            utterances=tuple(str(base / p) for p in e["utterances"]),
        )
        for e in raw
    )


def load_noise_manifest(path) -> tuple:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    base = path.parent
    return tuple(
        NoiseEntry(segment_id=str(e["segment_id"]), wav_path=str(base / e["wav_path"]))
        for e in raw
    )


def load_activity_patterns(path) -> tuple:
    """Diarization documents (JSON array) as activity-pattern templates."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    patterns = []
    for doc in raw:
        tracks = tuple(
            DiarizationTrack(
                speaker_id=t["speaker_id"],
                intervals=tuple((a, b) for a, b in t["intervals"]),
                gender=t.get("gender"),
            )
            for t in doc["tracks"]
        )
        patterns.append(
            ActivityPattern(
                pattern_id=doc["recording_id"],
                duration_s=float(doc["duration_s"]),
                tracks=tracks,
            )
        )
    return tuple(patterns)
