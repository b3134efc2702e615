#!/usr/bin/env python3
"""Time the full-scale nap feature path: 60 channels, 90-minute recording,
1770 channel pairs x 1200 three-second epochs.

Example:
    python scripts/benchmark_wpli.py
"""

import argparse
import time

import numpy as np

from napeeg.connectivity import cross_spectrum, region_wpli, wpli_bands
from napeeg.model import DEFAULT_BANDS, Recording, default_region_map
from napeeg.preproc import FilterSpec, bandpass, reject_amplitude, segment_fixed, trim_nap
from napeeg.spectral import region_psd
from napeeg.synth import BAND_CARRIERS, DEFAULT_BAND_AMPLITUDES_UV, MONTAGE_60


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--minutes", type=float, default=90.0)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    fs = 250.0
    rng = np.random.default_rng(args.seed)
    n = int(args.minutes * 60 * fs)
    t = np.arange(n) / fs
    stamp = time.perf_counter()
    data = rng.standard_normal((60, n))
    for band in DEFAULT_BANDS:
        data += DEFAULT_BAND_AMPLITUDES_UV[band.name] * np.sin(
            2 * np.pi * BAND_CARRIERS[band.name] * t + rng.uniform(0, 2 * np.pi)
        )
    rec = Recording(channels=MONTAGE_60, fs=fs, data=data)
    del data
    print(f"generate {args.minutes:.0f} min x 60 ch: {time.perf_counter() - stamp:.1f}s")

    stamp = time.perf_counter()
    rec = trim_nap(bandpass(rec, FilterSpec()), args.minutes * 60 / 6)
    epochs = reject_amplitude(segment_fixed(rec, 3.0), 100.0)
    del rec
    print(
        f"filter + trim + segment + reject: {time.perf_counter() - stamp:.1f}s "
        f"({epochs.n_epochs} epochs)"
    )

    region_map = default_region_map(MONTAGE_60, exclude=("FCz", "AFz"))
    stamp = time.perf_counter()
    region_psd(epochs, DEFAULT_BANDS, region_map)
    print(f"band-power tables: {time.perf_counter() - stamp:.1f}s")

    stamp = time.perf_counter()
    cs = cross_spectrum(epochs, fmax=50.0)
    table = region_wpli(wpli_bands(cs, DEFAULT_BANDS), region_map)
    n_pairs = len(epochs.channels) * (len(epochs.channels) - 1) // 2
    print(
        f"wPLI over {n_pairs} pairs x {epochs.n_epochs} epochs: "
        f"{time.perf_counter() - stamp:.1f}s (table {table.values.shape})"
    )


if __name__ == "__main__":
    main()
