"""Command line interface.

Subcommands: synth, preprocess, psd, wpli, score, stats, run-all.
Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import pandas as pd
import yaml

from . import io as npio
from .config import load_config
from .connectivity import cross_spectrum, region_wpli, wpli_bands
from .model import DEFAULT_BANDS, REGION_PAIRS, ValidationError, default_region_map
from .pipeline import load_subject, run_all, score_responses
from .spectral import channel_band_db, region_psd
from .stats import RngSpec, StatError, kruskal_wallis, pearson, perm_paired
from .synth import StudyTemplate, gen_study, write_study


def _template_from_yaml(path: str | None, seed: int | None) -> StudyTemplate:
    kwargs = {}
    if path:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        allowed = set(StudyTemplate.__dataclass_fields__)
        unknown = set(raw) - allowed
        if unknown:
            raise ValidationError(f"unknown template keys: {sorted(unknown)}")
        kwargs.update(raw)
        if "channels" in kwargs:
            kwargs["channels"] = tuple(kwargs["channels"])
    if seed is not None:
        kwargs["seed"] = seed
    return StudyTemplate(**kwargs)


def cmd_synth(args) -> int:
    template = _template_from_yaml(args.config, args.seed)
    study = gen_study(template)
    manifest = write_study(study, args.out, stats_seed=template.seed)
    print(f"wrote {len(study.subjects)} subjects under {args.out} ({manifest})")
    return 0


def cmd_preprocess(args) -> int:
    config = load_config(args.config)
    config.validate_files()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .pipeline import _preprocess_recording
    from .preproc import reject_amplitude, segment_fixed, trim_nap

    for paths in config.subjects:
        session = load_subject(paths, config)
        nap = _preprocess_recording(session.nap_recording, config)
        nap = trim_nap(nap, config.preproc.trim_s)
        epochs = segment_fixed(nap, config.preproc.epoch_s)
        epochs = reject_amplitude(epochs, config.preproc.threshold_uv)
        sub_dir = out / paths.subject_id
        sub_dir.mkdir(parents=True, exist_ok=True)
        npio.save_epochs(epochs, sub_dir / "nap_epochs.csv")
        print(
            f"{paths.subject_id}: {epochs.n_epochs} epochs, "
            f"{epochs.n_rejected} rejected"
        )
    return 0


def _epochs_and_map(args):
    epochs = npio.load_epochs(args.epochs)
    exclude = ("FCz", "AFz")
    override = None
    if args.config:
        config = load_config(args.config)
        exclude = config.region_exclude
        override = config.region_override
        bands = config.bands
    else:
        bands = DEFAULT_BANDS
    region_map = default_region_map(epochs.channels, exclude=exclude, override=override)
    return epochs, region_map, bands


def cmd_psd(args) -> int:
    epochs, region_map, bands = _epochs_and_map(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = region_psd(epochs, bands, region_map)
    npio.save_table(table, out / "psd_band_region.csv")
    chan_db = channel_band_db(epochs, bands)
    frame = pd.DataFrame(chan_db, columns=[b.name for b in bands])
    frame.insert(0, "channel", list(epochs.channels))
    long = frame.melt(id_vars="channel", var_name="band", value_name="db")
    long.to_csv(out / "psd_channel_long.csv", index=False, lineterminator="\n")
    print(f"wrote {out / 'psd_band_region.csv'} and per-channel long CSV")
    return 0


def cmd_wpli(args) -> int:
    epochs, region_map, bands = _epochs_and_map(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cs = cross_spectrum(epochs, fmax=max(b.f2 for b in bands))
    matrix = wpli_bands(cs, bands)
    table = region_wpli(matrix, region_map)
    npio.save_table(table, out / "wpli_band_region_pair.csv")
    rows = []
    n_ch = len(epochs.channels)
    for k, band in enumerate(matrix.bands):
        for i in range(n_ch):
            for j in range(i + 1, n_ch):
                rows.append(
                    {
                        "ch_i": epochs.channels[i],
                        "ch_j": epochs.channels[j],
                        "band": band.name,
                        "wpli": matrix.values[k, i, j],
                    }
                )
    pd.DataFrame(rows).to_csv(
        out / "wpli_channel_pairs.csv", index=False, lineterminator="\n"
    )
    edges = {
        band: {
            pair: table.cell(band, pair) for pair in REGION_PAIRS
        }
        for band in table.bands
    }
    (out / "wpli_edges.json").write_text(
        json.dumps(
            {"delta_f_hz": matrix.df, "n_epochs_used": matrix.n_epochs_used, "edges": edges},
            indent=2,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    print(f"wrote wPLI tables and edge list under {out}")
    return 0


def cmd_score(args) -> int:
    responses = npio.load_responses(args.responses)
    adjudications = (
        npio.load_adjudications(args.adjudication) if args.adjudication else None
    )
    scores = score_responses(responses, adjudications)
    rows = [
        {
            "task": task.value,
            "session": session.value,
            "value": score.value,
            "n_items": score.n_items,
        }
        for (task, session), score in sorted(
            scores.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
        )
    ]
    frame = pd.DataFrame(rows, columns=["task", "session", "value", "n_items"])
    if args.out:
        frame.to_csv(args.out, index=False, lineterminator="\n")
    print(frame.to_string(index=False))
    return 0


def cmd_stats(args) -> int:
    frame = pd.read_csv(args.data)
    required = {"unit", "group", "value"}
    if not required.issubset(frame.columns):
        raise ValidationError(f"stats CSV needs columns {sorted(required)}")
    groups = {name: part for name, part in frame.groupby("group", sort=True)}
    names = list(groups)
    rng = RngSpec(seed=args.seed)
    if args.test in ("perm", "pearson"):
        if len(names) != 2:
            raise ValidationError(
                f"{args.test} needs exactly 2 groups, got {len(names)}"
            )
        a = groups[names[0]].set_index("unit")["value"]
        b = groups[names[1]].set_index("unit")["value"]
        units = sorted(set(a.index) & set(b.index))
        if len(units) < len(a) or len(units) < len(b):
            print(f"pairing on {len(units)} shared units", file=sys.stderr)
        x = a.loc[units].to_numpy(dtype=float)
        y = b.loc[units].to_numpy(dtype=float)
        result = (
            perm_paired(x, y, r=args.resamples, rng=rng)
            if args.test == "perm"
            else pearson(x, y)
        )
    else:
        result = kruskal_wallis([g["value"].to_numpy(dtype=float) for g in groups.values()])
    frame_out = pd.DataFrame(
        [
            {
                "test": result.test,
                "statistic": result.statistic,
                "p_value": result.p_value,
                "n": result.n,
                "corrected": result.corrected,
                "n_comparisons": result.n_comparisons,
                "seed": rng.seed,
                "algorithm": rng.algorithm,
                "note": result.note,
            }
        ]
    )
    if args.out:
        frame_out.to_csv(args.out, index=False, lineterminator="\n")
    print(frame_out.to_string(index=False))
    return 0


def cmd_run_all(args) -> int:
    from dataclasses import replace

    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out is not None:
        config = replace(config, out_dir=Path(args.out))
    out = run_all(config, jobs=args.jobs)
    print(f"report written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="napeeg",
        description="EEG nap/memory pipeline: preprocessing, PSD, wPLI, scoring, stats.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic study")
    p.add_argument("--config", help="study template YAML (optional)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output study directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="filter, trim, epoch, and flag artifacts")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("psd", help="band-power tables from saved epochs")
    p.add_argument("--epochs", required=True, help="epochs CSV from preprocess")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("wpli", help="connectivity tables from saved epochs")
    p.add_argument("--epochs", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wpli)

    p = sub.add_parser("score", help="score a behavioral response log")
    p.add_argument("--responses", required=True)
    p.add_argument("--adjudication")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stats", help="run one test on a long-format CSV")
    p.add_argument("--test", choices=["perm", "pearson", "kruskal"], required=True)
    p.add_argument("--data", required=True, help="CSV with unit,group,value columns")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=20240915)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run-all", help="full pipeline from a study manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run_all)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ValidationError, StatError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
