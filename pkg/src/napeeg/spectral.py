"""Band-limited spectral power: periodogram, band integration, dB tables.

Normalization convention: the periodogram is a one-sided spectral
density in µV²/Hz, scaled by sampling rate and window power so that the
integral over [0, fs/2] equals the window-corrected mean square of the
epoch (Parseval). Band power sums density bins with f1 <= f < f2 times
the bin width; the half-open interval keeps adjacent bands from double
counting a bin. The one-sided doubling supplies the factor of two that
band-power definitions put in front of the positive-frequency integral,
and 10*log10 converts to decibels at the very end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import get_window

from .model import BandRegionTable, BandSpec, Epoch, EpochSet, REGIONS, RegionMap, ValidationError

DB_FLOOR = -120.0  # reported instead of -inf when a band has zero power


@dataclass(frozen=True)
class Periodogram:
    """One-sided spectral density per channel for a single epoch."""

    freqs: np.ndarray  # (n_bins,), 0 .. fs/2, step fs / n_samples
    power: np.ndarray  # (n_channels, n_bins), µV²/Hz
    fs: float
    channels: tuple[str, ...]

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0])


def _taper(name: str, n: int) -> np.ndarray:
    # periodic window, matching the per-epoch FFT convention
    return get_window(name, n, fftbins=True)


def periodogram(epoch: Epoch, window: str = "hann") -> Periodogram:
    """Tapered FFT of one epoch, normalized as one-sided density."""
    if epoch.rejected:
        raise ValidationError("refusing to compute the spectrum of a rejected epoch")
    n = epoch.n_samples
    if n < 2:
        raise ValidationError(f"need at least 2 samples, got {n}")
    w = _taper(window, n)
    spec = np.fft.rfft(epoch.data * w, axis=1)
    power = (spec.real**2 + spec.imag**2) / (epoch.fs * np.sum(w * w))
    if n % 2 == 0:
        power[:, 1:-1] *= 2.0  # Nyquist bin is not mirrored
    else:
        power[:, 1:] *= 2.0
    return Periodogram(
        freqs=np.fft.rfftfreq(n, 1.0 / epoch.fs),
        power=power,
        fs=epoch.fs,
        channels=epoch.channels,
    )


@dataclass(frozen=True)
class BandPower:
    """Per-channel band power in dB; floored channels had zero linear power."""

    db: np.ndarray  # (n_channels,)
    floored: np.ndarray  # (n_channels,) bool


def band_power_db(
    pg: Periodogram, band: BandSpec, floor_db: float = DB_FLOOR
) -> BandPower:
    """Integrate density over [f1, f2) and convert to dB per channel."""
    if band.f2 > pg.fs / 2 + 1e-12:
        raise ValidationError(
            f"band {band.name} [{band.f1}, {band.f2}) exceeds Nyquist {pg.fs / 2}"
        )
    mask = (pg.freqs >= band.f1) & (pg.freqs < band.f2)
    if not mask.any():
        raise ValidationError(
            f"band {band.name} [{band.f1}, {band.f2}) contains no frequency bins "
            f"at resolution {pg.df:.4g} Hz"
        )
    linear = pg.power[:, mask].sum(axis=1) * pg.df
    floored = linear <= 0.0
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(np.where(floored, 1.0, linear))
    return BandPower(db=np.where(floored, floor_db, db), floored=floored)


def _band_masks(freqs: np.ndarray, bands: tuple[BandSpec, ...], fs: float, df: float):
    masks = []
    for band in bands:
        if band.f2 > fs / 2 + 1e-12:
            raise ValidationError(
                f"band {band.name} [{band.f1}, {band.f2}) exceeds Nyquist {fs / 2}"
            )
        mask = (freqs >= band.f1) & (freqs < band.f2)
        if not mask.any():
            raise ValidationError(
                f"band {band.name} [{band.f1}, {band.f2}) contains no frequency "
                f"bins at resolution {df:.4g} Hz"
            )
        masks.append(mask)
    return masks


def channel_band_db(
    epochs: EpochSet,
    bands: tuple[BandSpec, ...],
    window: str = "hann",
    average: str = "db",
    floor_db: float = DB_FLOOR,
    chunk: int = 128,
) -> np.ndarray:
    """Mean band power per channel across non-rejected epochs.

    average="db" (default) takes the dB of each epoch first and averages
    those; average="linear" averages linear power and converts once.
    Returns an array of shape (n_channels, n_bands).
    """
    if average not in ("db", "linear"):
        raise ValidationError(f"average must be 'db' or 'linear', got {average!r}")
    used = np.flatnonzero(~epochs.rejected)
    if used.size == 0:
        raise ValidationError("no non-rejected epochs to average")
    n = epochs.n_samples
    if n < 2:
        raise ValidationError(f"need at least 2 samples per epoch, got {n}")
    w = _taper(window, n)
    freqs = np.fft.rfftfreq(n, 1.0 / epochs.fs)
    df = epochs.fs / n
    masks = _band_masks(freqs, bands, epochs.fs, df)

    acc = np.zeros((len(epochs.channels), len(bands)))
    scale = 1.0 / (epochs.fs * np.sum(w * w))
    for lo in range(0, used.size, chunk):
        idx = used[lo : lo + chunk]
        spec = np.fft.rfft(epochs.data[idx] * w, axis=2)
        power = (spec.real**2 + spec.imag**2) * scale
        if n % 2 == 0:
            power[:, :, 1:-1] *= 2.0
        else:
            power[:, :, 1:] *= 2.0
        for b, mask in enumerate(masks):
            linear = power[:, :, mask].sum(axis=2) * df  # (epochs, channels)
            if average == "db":
                with np.errstate(divide="ignore"):
                    db = 10.0 * np.log10(np.where(linear > 0, linear, 1.0))
                acc[:, b] += np.where(linear > 0, db, floor_db).sum(axis=0)
            else:
                acc[:, b] += linear.sum(axis=0)
    acc /= used.size
    if average == "linear":
        with np.errstate(divide="ignore"):
            db = 10.0 * np.log10(np.where(acc > 0, acc, 1.0))
        acc = np.where(acc > 0, db, floor_db)
    return acc


def region_psd(
    epochs: EpochSet,
    bands: tuple[BandSpec, ...],
    region_map: RegionMap,
    window: str = "hann",
    average: str = "db",
) -> BandRegionTable:
    """Band x region dB table: epoch means first, then region means."""
    region_map.validate_montage(epochs.channels)
    chan_db = channel_band_db(epochs, bands, window=window, average=average)
    by_region = region_map.region_channels(epochs.channels)
    # (n_bands, n_regions): each column is the mean over that region's channels
    values = np.column_stack(
        [chan_db[by_region[r], :].mean(axis=0) for r in REGIONS]
    )
    n_used = epochs.n_epochs - epochs.n_rejected
    return BandRegionTable(
        metric="psd_db",
        bands=tuple(b.name for b in bands),
        columns=tuple(r.value for r in REGIONS),
        values=values,
        n_epochs_used=np.full((len(bands), len(REGIONS)), n_used, dtype=int),
    )
