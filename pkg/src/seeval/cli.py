"""``campaign`` command line: run, table, corr subcommands."""

import argparse
import json
import sys
from pathlib import Path

import pandas as pd

from .campaign import (
    CampaignConfig,
    SystemSpec,
    aggregate_scores,
    emit_correlation_report,
    emit_table,
    run_campaign,
)


def _parse_flat_toml(text: str) -> dict:
    """Minimal reader for the flat key/value campaign config schema.

    Supports strings, numbers, booleans, and one-level arrays of those;
    comments start with '#'.
    """
    def scalar(token: str):
        token = token.strip()
        if token.startswith('"') and token.endswith('"'):
            return token[1:-1]
        if token in ("true", "false"):
            return token == "true"
        try:
            return int(token)
        except ValueError:
            return float(token)

    result = {}
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"cannot parse config line: {raw_line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if value.startswith("["):
            inner = value.strip()[1:-1].strip()
            result[key] = [scalar(t) for t in inner.split(",") if t.strip()]
        else:
            result[key] = scalar(value)
    return result


def load_config(path) -> CampaignConfig:
    """Load a campaign config from JSON or flat TOML.

    Systems appear either as objects ({"system_id", "output_dir"}) in JSON
    or as the parallel flat arrays system_ids / system_output_dirs.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        doc = json.loads(text)
    else:
        doc = _parse_flat_toml(text)

    if "systems" in doc:
        systems = [SystemSpec(s["system_id"], s["output_dir"]) for s in doc["systems"]]
    else:
        ids = doc.get("system_ids", [])
        dirs = doc.get("system_output_dirs", [])
        if len(ids) != len(dirs):
            raise ValueError("system_ids and system_output_dirs differ in length")
        systems = [SystemSpec(i, d) for i, d in zip(ids, dirs)]

    base = path.parent

    def resolve(p):
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    return CampaignConfig(
        systems=[SystemSpec(s.system_id, resolve(s.output_dir)) for s in systems],
        reference_manifest=resolve(doc["reference_manifest"]),
        subsets=[str(s) for s in doc.get("subsets", [])],
        metrics=list(doc.get("metrics", ["SI_SDR", "STOI"])),
        external_score_csvs=[resolve(p) for p in doc.get("external_score_csvs", [])],
        target_lufs=float(doc.get("target_lufs", -30.0)),
        include_sanity=bool(doc.get("include_sanity", True)),
        include_input=bool(doc.get("include_input", True)),
        normalize_reference=bool(doc.get("normalize_reference", True)),
        single_speaker_only_metrics=list(doc.get("single_speaker_only_metrics", [])),
        seed=int(doc.get("seed", 0)),
    )


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary, per_sample = run_campaign(cfg)
    per_sample.to_csv(out / "scores.csv", index=False)
    (out / "table.md").write_text(emit_table(summary, "markdown", cfg), encoding="utf-8")
    summary.to_csv(out / "summary.csv", index=False)
    print(f"wrote {len(per_sample)} per-sample scores to {out / 'scores.csv'}")
    print(f"wrote score table to {out / 'table.md'}")
    return 0


def _cmd_table(args) -> int:
    per_sample = pd.read_csv(args.scores, dtype={"subset": str})
    summary = aggregate_scores(per_sample)
    text = emit_table(summary, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote table to {args.out}")
    else:
        print(text)
    return 0


def _cmd_corr(args) -> int:
    per_sample = pd.read_csv(args.scores, dtype={"subset": str})
    mos_table = None
    if args.mos:
        mos_table = pd.read_csv(args.mos, dtype={"sample_id": str})
    text, csv_text, _ = emit_correlation_report(
        per_sample, args.metrics, single_speaker_only=args.single_speaker_only,
        mos_table=mos_table,
    )
    out = Path(args.out) if args.out else Path("corr.csv")
    out.write_text(csv_text, encoding="utf-8")
    print(text)
    print(f"wrote correlation matrix to {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="campaign", description="Speech enhancement evaluation campaigns"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a campaign from a config file")
    p_run.add_argument("--config", required=True, help="JSON or flat TOML config")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_table = sub.add_parser("table", help="emit the aggregated score table")
    p_table.add_argument("--scores", required=True, help="per-sample scores.csv")
    p_table.add_argument("--format", choices=["csv", "markdown", "md"], default="md")
    p_table.add_argument("--out", help="write to file instead of stdout")
    p_table.set_defaults(func=_cmd_table)

    p_corr = sub.add_parser("corr", help="emit a metric correlation matrix")
    p_corr.add_argument("--scores", required=True, help="per-sample scores.csv")
    p_corr.add_argument("--metrics", nargs="+", required=True)
    p_corr.add_argument("--single-speaker-only", action="store_true")
    p_corr.add_argument("--mos", help="optional MOS table CSV from a listening test")
    p_corr.add_argument("--out", help="output CSV path (default corr.csv)")
    p_corr.set_defaults(func=_cmd_corr)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
