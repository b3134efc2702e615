"""Weighted phase lag index over channel pairs, aggregated to region pairs.

The estimator treats epochs as the i.i.d. units: at every frequency bin
the expectation of the imaginary cross-spectrum (and of its magnitude)
is taken across epochs, the bin-wise ratio |E{Im X}| / E{|Im X|} is
formed, and band values average that ratio over the bins in [f1, f2).
Bins where E{|Im X|} is exactly zero (perfect zero-lag coupling) score
zero, since zero-lag interaction is what the index is built to discount.
This is the plain weighted index, not the debiased-squared variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    BandRegionTable,
    BandSpec,
    EpochSet,
    REGION_CODES,
    REGION_PAIRS,
    REGIONS,
    RegionMap,
    ValidationError,
)
from .spectral import _taper


@dataclass(frozen=True)
class CrossSpectrum:
    """Per-epoch channel spectra with accumulated imaginary cross terms.

    Pairwise products Z_i * conj(Z_j) for a 60-channel nap would need
    tens of gigabytes if materialized, so only the per-channel spectra
    are stored and the epoch sums of Im(X) and |Im(X)| (all the wPLI
    estimator needs) are accumulated at construction. ``pair`` serves
    the full product for any single channel pair.
    """

    freqs: np.ndarray  # (n_bins,)
    z: np.ndarray  # (n_epochs, n_channels, n_bins) complex
    channels: tuple[str, ...]
    fs: float
    im_sum: np.ndarray = field(repr=False)  # (n_ch, n_ch, n_bins)
    abs_im_sum: np.ndarray = field(repr=False)  # (n_ch, n_ch, n_bins)

    @property
    def n_epochs(self) -> int:
        return self.z.shape[0]

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def pair(self, i: int, j: int) -> np.ndarray:
        """Cross-spectrum X = Z_i * conj(Z_j), shape (n_epochs, n_bins).

        Real and imaginary parts are formed with explicit real arithmetic
        (as in the accumulated sums) so the algebraic identities hold
        exactly: Im X(i, i) == 0 and X(i, j) == conj(X(j, i)) bitwise.
        """
        a, b = self.z[:, i, :], self.z[:, j, :]
        re = a.real * b.real + a.imag * b.imag
        im = a.imag * b.real - a.real * b.imag
        return re + 1j * im


def cross_spectrum(
    epochs: EpochSet,
    window: str = "hann",
    fmax: float | None = None,
    chunk: int = 32,
) -> CrossSpectrum:
    """Tapered FFT per channel per non-rejected epoch, plus pair sums.

    fmax truncates the stored spectrum (bins above it are never used by
    band-limited analyses and dominate memory at nap scale).
    """
    used = np.flatnonzero(~epochs.rejected)
    if used.size == 0:
        raise ValidationError("no non-rejected epochs for the cross-spectrum")
    n = epochs.n_samples
    if n < 2:
        raise ValidationError(f"need at least 2 samples per epoch, got {n}")
    w = _taper(window, n)
    freqs = np.fft.rfftfreq(n, 1.0 / epochs.fs)
    keep = slice(None) if fmax is None else freqs <= fmax
    freqs = freqs[keep]
    n_ch = len(epochs.channels)

    z = np.empty((used.size, n_ch, freqs.size), dtype=complex)
    im_sum = np.zeros((n_ch, n_ch, freqs.size))
    abs_im_sum = np.zeros_like(im_sum)
    for lo in range(0, used.size, chunk):
        idx = used[lo : lo + chunk]
        zc = np.fft.rfft(epochs.data[idx] * w, axis=2)[:, :, keep]
        z[lo : lo + idx.size] = zc
        re, im = zc.real, zc.imag
        # Im(Z_i conj(Z_j)) = Im_i Re_j - Re_i Im_j, per epoch and bin
        imx = np.einsum("eak,ebk->eabk", im, re) - np.einsum(
            "eak,ebk->eabk", re, im
        )
        im_sum += imx.sum(axis=0)
        abs_im_sum += np.abs(imx).sum(axis=0)
    return CrossSpectrum(
        freqs=freqs,
        z=z,
        channels=epochs.channels,
        fs=epochs.fs,
        im_sum=im_sum,
        abs_im_sum=abs_im_sum,
    )


@dataclass(frozen=True)
class WpliMatrix:
    """Symmetric channels x channels wPLI in [0, 1] per band; diagonal is nan."""

    bands: tuple[BandSpec, ...]
    values: np.ndarray  # (n_bands, n_channels, n_channels)
    channels: tuple[str, ...]
    n_epochs_used: int
    df: float  # frequency resolution of the underlying epochs, Hz

    def band_slice(self, name: str) -> np.ndarray:
        for k, band in enumerate(self.bands):
            if band.name == name:
                return self.values[k]
        raise KeyError(name)


def wpli(cs: CrossSpectrum, band: BandSpec) -> WpliMatrix:
    """One band slice of the weighted phase lag index."""
    return wpli_bands(cs, (band,))


def wpli_bands(cs: CrossSpectrum, bands: tuple[BandSpec, ...]) -> WpliMatrix:
    """wPLI matrices for several bands from one set of epoch sums."""
    if cs.n_epochs < 2:
        raise ValidationError(
            f"wPLI expectation needs >= 2 epochs, got {cs.n_epochs}"
        )
    n_ch = len(cs.channels)
    out = np.empty((len(bands), n_ch, n_ch))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.abs(cs.im_sum) / cs.abs_im_sum
    ratio = np.where(cs.abs_im_sum > 0, ratio, 0.0)
    for k, band in enumerate(bands):
        mask = (cs.freqs >= band.f1) & (cs.freqs < band.f2)
        if not mask.any():
            raise ValidationError(
                f"band {band.name} [{band.f1}, {band.f2}) contains no frequency "
                f"bins at resolution {cs.df:.4g} Hz"
            )
        out[k] = np.clip(ratio[:, :, mask].mean(axis=2), 0.0, 1.0)
        np.fill_diagonal(out[k], np.nan)
    return WpliMatrix(
        bands=tuple(bands),
        values=out,
        channels=cs.channels,
        n_epochs_used=cs.n_epochs,
        df=cs.df,
    )


def region_pair_channel_pairs(
    region_map: RegionMap, channels: tuple[str, ...]
) -> dict[str, list[tuple[int, int]]]:
    """Channel index pairs backing each of the 15 region-pair columns."""
    by_region = region_map.region_channels(channels)
    pairs: dict[str, list[tuple[int, int]]] = {}
    for a in range(len(REGIONS)):
        for b in range(a, len(REGIONS)):
            label = f"{REGION_CODES[REGIONS[a]]}-{REGION_CODES[REGIONS[b]]}"
            ca, cb = by_region[REGIONS[a]], by_region[REGIONS[b]]
            if a == b:
                pairs[label] = [
                    (ca[i], ca[j]) for i in range(len(ca)) for j in range(i + 1, len(ca))
                ]
            else:
                pairs[label] = [(i, j) for i in ca for j in cb]
    return pairs


def region_wpli(m: WpliMatrix, region_map: RegionMap) -> BandRegionTable:
    """Mean wPLI over the channel pairs of each of the 15 region pairs."""
    region_map.validate_montage(m.channels)
    pair_map = region_pair_channel_pairs(region_map, m.channels)
    empty = [label for label in REGION_PAIRS if not pair_map[label]]
    if empty:
        raise ValidationError(
            f"region pairs with zero channel pairs: {empty} "
            "(within-region cells need at least two channels in the region)"
        )
    values = np.empty((len(m.bands), len(REGION_PAIRS)))
    for k in range(len(m.bands)):
        for c, label in enumerate(REGION_PAIRS):
            idx = np.asarray(pair_map[label])
            values[k, c] = m.values[k, idx[:, 0], idx[:, 1]].mean()
    return BandRegionTable(
        metric="wpli",
        bands=tuple(b.name for b in m.bands),
        columns=REGION_PAIRS,
        values=values,
        n_epochs_used=np.full(values.shape, m.n_epochs_used, dtype=int),
    )
