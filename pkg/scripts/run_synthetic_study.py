#!/usr/bin/env python3
"""Generate a synthetic study, run every analysis, and print the headlines.

Example:
    python scripts/run_synthetic_study.py --out /tmp/napeeg_demo --seed 7
"""

import argparse
import time
from pathlib import Path

import pandas as pd

from napeeg.config import load_config
from napeeg.pipeline import run_all
from napeeg.synth import StudyTemplate, gen_study, write_study


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--subjects", type=int, default=7)
    parser.add_argument("--nap-minutes", type=float, default=3.0)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    template = StudyTemplate(
        n_subjects=args.subjects,
        seed=args.seed,
        nap_minutes=args.nap_minutes,
        trim_s=args.nap_minutes * 60 / 6,
        word_items=20,
        vis_items=16,
    )
    t0 = time.perf_counter()
    manifest = write_study(gen_study(template), args.out / "study")
    print(f"study written in {time.perf_counter() - t0:.1f}s -> {manifest}")

    t0 = time.perf_counter()
    out = run_all(load_config(manifest), jobs=args.jobs)
    print(f"analyses finished in {time.perf_counter() - t0:.1f}s -> {out}\n")

    perf = pd.read_csv(out / "performance.csv")
    print("memory performance (delayed - immediate):")
    print(
        perf[["task", "n", "value_diff", "statistic", "p_value", "significant"]]
        .to_string(index=False)
    )

    grid = pd.read_csv(out / "nap_feature_correlation.csv")
    sig = grid[grid.significant].sort_values("p_value")
    print(f"\nsignificant nap-feature correlations ({len(sig)} of {len(grid)} cells):")
    cols = ["task", "metric", "band", "column", "statistic", "p_value"]
    print(sig[cols].head(12).to_string(index=False))

    gamma_table = pd.read_csv(out / "recall_correlation_gamma_by_region.csv")
    print("\nnap gamma vs recall gamma change (r, p per region and task):")
    print(gamma_table.to_string(index=False))


if __name__ == "__main__":
    main()
