"""Objective evaluation campaigns over system output directories.

Pairs each system's WAV outputs with the dataset references (alignment key
is the sample id / basename), loudness-normalizes both sides, computes the
configured intrusive metrics, merges externally computed scores, and
aggregates per-subset tables. The Oracle (estimate = reference), Random
(white Gaussian noise estimate), and Input (estimate = noisy mixture)
sanity conditions are synthesized on demand.
"""

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import metrics as _metrics
from . import stats as _stats
from .audio import Waveform, load_wav
from .errors import EmptyTable, MissingMetric, MissingOutput
from .loudness import measure_loudness, normalize_loudness

SANITY_ORACLE = "oracle"
SANITY_RANDOM = "random"
SANITY_INPUT = "input"

DEFAULT_TARGET_LUFS = -30.0


@dataclass(frozen=True)
class SystemSpec:
    system_id: str
    output_dir: str


@dataclass
class CampaignConfig:
    systems: list = field(default_factory=list)
    reference_manifest: str = ""
    subsets: list = field(default_factory=list)       # empty -> all subsets found
    metrics: list = field(default_factory=lambda: ["SI_SDR", "STOI"])
    external_score_csvs: list = field(default_factory=list)
    target_lufs: float = DEFAULT_TARGET_LUFS
    include_sanity: bool = True
    include_input: bool = True
    normalize_reference: bool = True
    single_speaker_only_metrics: list = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        ids = [s.system_id for s in self.systems]
        if len(set(ids)) != len(ids):
            raise ValueError("system_ids must be unique")


@dataclass(frozen=True)
class SampleRef:
    sample_id: str
    subset: str
    reference_paths: tuple   # component paths summed (float32 cascade) or 1 path
    mixture_path: str = None


def load_reference_manifest(path) -> list:
    """Read a dataset manifest (JSONL) into sample references.

    Accepts mixture-generator manifests ({mixture_id, n_speakers,
    speech_paths, mix_path}) and generic rows ({sample_id, subset,
    reference_path, mixture_path?}). Paths resolve relative to the file.
    """
    path = Path(path)
    base = path.parent
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            if "mixture_id" in row:
                samples.append(SampleRef(
                    sample_id=row["mixture_id"],
                    subset=str(row["n_speakers"]),
                    reference_paths=tuple(str(base / p) for p in row["speech_paths"]),
                    mixture_path=str(base / row["mix_path"]),
                ))
            else:
                samples.append(SampleRef(
                    sample_id=row["sample_id"],
                    subset=str(row.get("subset", "all")),
                    reference_paths=(str(base / row["reference_path"]),),
                    mixture_path=(
                        str(base / row["mixture_path"])
                        if row.get("mixture_path") else None
                    ),
                ))
    return sorted(samples, key=lambda s: s.sample_id)


def _load_reference(sample: SampleRef) -> Waveform:
    parts = [load_wav(p) for p in sample.reference_paths]
    if len(parts) == 1:
        return parts[0]
    acc = np.zeros(len(parts[0]), dtype=np.float32)
    for part in parts:
        acc = acc + part.samples.astype(np.float32)
    return Waveform(acc.astype(np.float64), parts[0].sample_rate)


def _normalize(w: Waveform, target_lufs: float) -> Waveform:
    if measure_loudness(w).is_silent:
        return w
    return normalize_loudness(w, target_lufs)


def _random_estimate(sample_id: str, n: int, rate: int, seed: int) -> Waveform:
    rng = np.random.default_rng([seed, zlib.crc32(sample_id.encode("utf-8"))])
    return Waveform(rng.standard_normal(n), rate)


def run_campaign(cfg: CampaignConfig):
    """Execute the campaign.

    Returns (summary, per_sample): the aggregated ScoreTable with columns
    (system_id, subset, metric_id, mean, sd, n) and the per-sample long
    table (sample_id, system_id, subset, metric_id, value).
    """
    samples = load_reference_manifest(cfg.reference_manifest)
    if cfg.subsets:
        samples = [s for s in samples if s.subset in cfg.subsets]

    conditions = []
    if cfg.include_input:
        conditions.append((SANITY_INPUT, None))
    conditions.extend((s.system_id, Path(s.output_dir)) for s in cfg.systems)
    if cfg.include_sanity:
        conditions.append((SANITY_RANDOM, None))
        conditions.append((SANITY_ORACLE, None))

    missing = {}
    for system_id, out_dir in conditions:
        if out_dir is None:
            continue
        absent = [s.sample_id for s in samples
                  if not (out_dir / f"{s.sample_id}.wav").exists()]
        if absent:
            missing[system_id] = absent
    if missing:
        system_id, absent = next(iter(missing.items()))
        raise MissingOutput(system_id, absent)

    intrusive = [m for m in cfg.metrics if m in ("SI_SDR", "STOI")]
    rows = []
    for sample in samples:
        reference_raw = _load_reference(sample)
        reference = (
            _normalize(reference_raw, cfg.target_lufs)
            if cfg.normalize_reference else reference_raw
        )
        for system_id, out_dir in conditions:
            if system_id == SANITY_INPUT:
                if sample.mixture_path is None:
                    continue
                estimate = load_wav(sample.mixture_path)
            elif system_id == SANITY_ORACLE:
                estimate = reference_raw
            elif system_id == SANITY_RANDOM:
                estimate = _random_estimate(
                    sample.sample_id, len(reference_raw),
                    reference_raw.sample_rate, cfg.seed,
                )
            else:
                estimate = load_wav(out_dir / f"{sample.sample_id}.wav")
            estimate = _normalize(estimate, cfg.target_lufs)
            for metric_id in intrusive:
                if _skip_for_subset(cfg, metric_id, sample.subset):
                    continue
                if metric_id == "SI_SDR":
                    value = _metrics.si_sdr(reference, estimate)
                else:
                    value = _metrics.stoi(reference, estimate)
                rows.append({
                    "sample_id": sample.sample_id,
                    "system_id": system_id,
                    "subset": sample.subset,
                    "metric_id": metric_id,
                    "value": value,
                })

    subset_by_sample = {s.sample_id: s.subset for s in samples}
    for csv_path in cfg.external_score_csvs:
        for score in _metrics.ingest_external_scores(csv_path):
            if score.sample_id not in subset_by_sample:
                continue
            subset = subset_by_sample[score.sample_id]
            if _skip_for_subset(cfg, score.metric_id, subset):
                continue
            if cfg.metrics and score.metric_id not in cfg.metrics:
                continue
            rows.append({
                "sample_id": score.sample_id,
                "system_id": score.system_id,
                "subset": subset,
                "metric_id": score.metric_id,
                "value": score.value,
            })

    per_sample = pd.DataFrame(
        rows, columns=["sample_id", "system_id", "subset", "metric_id", "value"]
    )
    return aggregate_scores(per_sample, cfg), per_sample


def _skip_for_subset(cfg: CampaignConfig, metric_id: str, subset: str) -> bool:
    return metric_id in cfg.single_speaker_only_metrics and subset != "1"


def aggregate_scores(per_sample: pd.DataFrame, cfg: CampaignConfig = None) -> pd.DataFrame:
    """Mean/sd/n per (system, subset, metric), deterministically ordered."""
    if per_sample.empty:
        return pd.DataFrame(
            columns=["system_id", "subset", "metric_id", "mean", "sd", "n"]
        )
    grouped = (
        per_sample.groupby(["system_id", "subset", "metric_id"])["value"]
        .agg(mean="mean", sd=lambda v: v.std(ddof=1) if len(v) > 1 else 0.0, n="count")
        .reset_index()
    )
    order = _system_order(grouped["system_id"].unique(), cfg)
    grouped["__rank"] = grouped["system_id"].map(order)
    grouped = grouped.sort_values(
        ["__rank", "system_id", "subset", "metric_id"], kind="mergesort"
    ).drop(columns="__rank").reset_index(drop=True)
    return grouped


def _system_order(present, cfg) -> dict:
    """Input first, configured systems in order, then Random and Oracle."""
    ordered = [SANITY_INPUT]
    if cfg is not None:
        ordered.extend(s.system_id for s in cfg.systems)
    ordered.extend(sorted(set(present) - set(ordered) - {SANITY_RANDOM, SANITY_ORACLE}))
    ordered.extend([SANITY_RANDOM, SANITY_ORACLE])
    return {sid: i for i, sid in enumerate(ordered)}


def emit_table(summary: pd.DataFrame, fmt: str = "markdown", cfg=None) -> str:
    """Render the ScoreTable as CSV or markdown.

    Markdown marks the best score per metric column in bold and the second
    best underlined (ties all bolded); the sanity conditions are excluded
    from extrema marking.
    """
    if summary.empty:
        raise EmptyTable("score table has no rows")
    if fmt == "csv":
        return summary.to_csv(index=False)
    if fmt not in ("markdown", "md"):
        raise ValueError(f"unknown table format {fmt!r}")

    lines = []
    order = _system_order(summary["system_id"].unique(), cfg)
    for subset in sorted(summary["subset"].unique()):
        block = summary[summary["subset"] == subset]
        metric_ids = sorted(block["metric_id"].unique())
        systems = sorted(block["system_id"].unique(), key=lambda s: order.get(s, 0))
        cells = {
            (r.system_id, r.metric_id): (r.mean, r.n) for r in block.itertuples()
        }
        ranked = {}
        for mid in metric_ids:
            scored = [
                (cells[(s, mid)][0], s) for s in systems
                if (s, mid) in cells and s not in (SANITY_RANDOM, SANITY_ORACLE)
            ]
            values = sorted({v for v, _ in scored}, reverse=True)
            best = values[0] if values else None
            second = values[1] if len(values) > 1 else None
            ranked[mid] = (best, second)

        lines.append(f"### subset {subset}")
        lines.append("")
        lines.append("| system | " + " | ".join(metric_ids) + " |")
        lines.append("|---" * (len(metric_ids) + 1) + "|")
        for s in systems:
            row = [s]
            for mid in metric_ids:
                if (s, mid) not in cells:
                    row.append("-")
                    continue
                mean, _ = cells[(s, mid)]
                text = f"{mean:.2f}"
                best, second = ranked[mid]
                if s not in (SANITY_RANDOM, SANITY_ORACLE):
                    if best is not None and mean == best:
                        text = f"**{text}**"
                    elif second is not None and mean == second:
                        text = f"<u>{text}</u>"
                row.append(text)
            lines.append("| " + " | ".join(row) + " |")
        lines.append("")
    return "\n".join(lines)


def emit_correlation_report(per_sample: pd.DataFrame, metric_ids,
                            single_speaker_only: bool = False,
                            mos_table: pd.DataFrame = None):
    """Pairwise PCC over per-(system, sample) scores.

    Optionally restricts to single-speaker samples and joins subjective
    MOS columns (MOS_SIG/MOS_BAK/MOS_OVRL keyed by sample and condition).
    Returns (matrix_text, csv_text, matrix).
    """
    data = per_sample
    if single_speaker_only:
        data = data[data["subset"] == "1"]
    wide = data.pivot_table(
        index=["system_id", "sample_id"], columns="metric_id", values="value"
    )

    if mos_table is not None:
        mos = mos_table.copy()
        mos["metric_id"] = "MOS_" + mos["scale"]
        mos_wide = mos.pivot_table(
            index=["system_id", "sample_id"], columns="metric_id", values="mos"
        )
        wide = wide.join(mos_wide, how="inner")

    metric_ids = list(metric_ids)
    for mid in metric_ids:
        if mid not in wide.columns:
            raise MissingMetric(f"metric {mid!r} not present in per-sample scores")
    aligned = wide[metric_ids].dropna()
    if aligned.empty:
        raise MissingMetric("no aligned samples across requested metrics")
    columns = {m: aligned[m].to_numpy() for m in metric_ids}

    matrix = _stats.correlation_matrix(columns, metric_ids)
    header = "metric," + ",".join(metric_ids)
    csv_lines = [header]
    for i, mid in enumerate(metric_ids):
        csv_lines.append(mid + "," + ",".join(f"{v:.6f}" for v in matrix[i]))
    csv_text = "\n".join(csv_lines) + "\n"

    width = max(len(m) for m in metric_ids) + 2
    text_lines = [" " * width + "  ".join(f"{m:>8}" for m in metric_ids)]
    for i, mid in enumerate(metric_ids):
        text_lines.append(
            f"{mid:<{width}}" + "  ".join(f"{v:8.3f}" for v in matrix[i])
        )
    return "\n".join(text_lines), csv_text, matrix
