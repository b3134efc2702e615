"""Resampling, band-pass filtering, nap trimming, epoching, artifact flags.

All operations are pure: they return new containers and never mutate
their inputs, so per-channel and per-epoch work can be parallelized
freely without changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

from .model import (
    Condition,
    EpochSet,
    Recording,
    Session,
    Task,
    ValidationError,
)

MIN_TARGET_FS = 100.0  # 2x the 50 Hz gamma edge


@dataclass(frozen=True)
class FilterSpec:
    """Band-pass specification; edges must satisfy 0 < low < high < fs/2."""

    low_hz: float = 0.5
    high_hz: float = 50.0
    order: int = 4
    zero_phase: bool = True

    def validate(self, fs: float) -> None:
        if not 0 < self.low_hz < self.high_hz:
            raise ValidationError(
                f"need 0 < low < high, got [{self.low_hz}, {self.high_hz}]"
            )
        if self.high_hz >= fs / 2:
            raise ValidationError(
                f"high edge {self.high_hz} Hz at or above Nyquist ({fs / 2} Hz)"
            )


@dataclass(frozen=True)
class RecallWindowSpec:
    """Event-locked analysis window relative to stimulus onset."""

    task: Task
    t_start_ms: float
    t_end_ms: float

    def __post_init__(self) -> None:
        if not self.t_start_ms < self.t_end_ms:
            raise ValidationError(
                f"window start {self.t_start_ms} must precede end {self.t_end_ms}"
            )


DEFAULT_RECALL_WINDOWS: dict[Task, RecallWindowSpec] = {
    Task.WORD_PAIRS: RecallWindowSpec(Task.WORD_PAIRS, 400.0, 800.0),
    Task.PICTURE: RecallWindowSpec(Task.PICTURE, 200.0, 400.0),
    Task.LOCATION: RecallWindowSpec(Task.LOCATION, 200.0, 400.0),
}


def resample(
    rec: Recording, target_fs: float, allow_rational: bool = False
) -> Recording:
    """Anti-alias and decimate to target_fs.

    Output length is floor(n_samples * target_fs / fs). Non-integer
    ratios are refused unless allow_rational is set, and upsampling or
    targets below 100 Hz (losing the gamma band) are always refused.
    """
    if target_fs > rec.fs:
        raise ValidationError(
            f"upsampling unsupported: target {target_fs} > fs {rec.fs}"
        )
    if target_fs < MIN_TARGET_FS:
        raise ValidationError(
            f"target_fs {target_fs} Hz below {MIN_TARGET_FS} Hz (2x gamma edge)"
        )
    if target_fs == rec.fs:
        return rec
    ratio = Fraction(target_fs / rec.fs).limit_denominator(1000)
    if ratio.numerator != 1 and not allow_rational:
        raise ValidationError(
            f"fs {rec.fs} -> {target_fs} is not integer decimation; "
            "enable rational resampling to allow it"
        )
    out = signal.resample_poly(
        rec.data, ratio.numerator, ratio.denominator, axis=1, padtype="mean"
    )
    n_out = math.floor(rec.n_samples * target_fs / rec.fs)
    return Recording(
        channels=rec.channels,
        fs=float(target_fs),
        data=out[:, :n_out],
        start_offset_s=rec.start_offset_s,
    )


def bandpass(rec: Recording, spec: FilterSpec = FilterSpec()) -> Recording:
    """Butterworth band-pass, applied forward-backward for zero phase."""
    spec.validate(rec.fs)
    sos = signal.butter(
        spec.order,
        [spec.low_hz, spec.high_hz],
        btype="band",
        output="sos",
        fs=rec.fs,
    )
    if spec.zero_phase:
        filtered = signal.sosfiltfilt(sos, rec.data, axis=1)
    else:
        filtered = signal.sosfilt(sos, rec.data, axis=1)
    return Recording(
        channels=rec.channels,
        fs=rec.fs,
        data=filtered,
        start_offset_s=rec.start_offset_s,
    )


def trim_nap(rec: Recording, trim_s: float = 900.0) -> Recording:
    """Drop the first and last trim_s seconds of a nap recording."""
    if rec.duration_s <= 2 * trim_s:
        raise ValidationError(
            f"recording of {rec.duration_s:.1f}s too short to trim "
            f"{trim_s:.0f}s from both ends"
        )
    n_trim = round(trim_s * rec.fs)
    return Recording(
        channels=rec.channels,
        fs=rec.fs,
        data=rec.data[:, n_trim : rec.n_samples - n_trim],
        start_offset_s=rec.start_offset_s + trim_s,
    )


def segment_fixed(
    rec: Recording,
    epoch_s: float = 3.0,
    condition: Condition = Condition.NAP,
    session: Session = Session.NAP,
) -> EpochSet:
    """Cut consecutive non-overlapping epochs; a trailing partial is dropped."""
    n_per = epoch_s * rec.fs
    if abs(n_per - round(n_per)) > 1e-9:
        raise ValidationError(
            f"epoch_s * fs must be an integer sample count, got {n_per}"
        )
    n_per = round(n_per)
    n_epochs = rec.n_samples // n_per
    if n_epochs == 0:
        raise ValidationError(
            f"epoch of {epoch_s}s longer than recording ({rec.duration_s:.2f}s)"
        )
    data = rec.data[:, : n_epochs * n_per].reshape(rec.n_channels, n_epochs, n_per)
    return EpochSet(
        channels=rec.channels,
        fs=rec.fs,
        data=np.swapaxes(data, 0, 1),
        condition=condition,
        session=session,
        rejected=np.zeros(n_epochs, dtype=bool),
        start_times_s=rec.start_offset_s + np.arange(n_epochs) * epoch_s,
    )


def segment_events(
    rec: Recording,
    onsets: list[float],
    window: RecallWindowSpec,
    session: Session = Session.IMMEDIATE,
) -> EpochSet:
    """Cut one epoch per stimulus onset at [onset + t_start, onset + t_end).

    Onsets are seconds from the first sample of the recording. Events
    whose window does not fit are skipped and reported in
    ``skipped_events``; the remaining epochs are returned intact.
    """
    n_win = round((window.t_end_ms - window.t_start_ms) / 1000.0 * rec.fs)
    if n_win < 1:
        raise ValidationError("recall window shorter than one sample")
    slices = []
    starts = []
    skipped: list[tuple[float, str]] = []
    for onset in onsets:
        t0 = onset + window.t_start_ms / 1000.0
        i0 = round(t0 * rec.fs)
        if i0 < 0 or i0 + n_win > rec.n_samples:
            skipped.append(
                (float(onset), f"window [{t0:.3f}s, +{n_win} samples) out of range")
            )
            continue
        slices.append(rec.data[:, i0 : i0 + n_win])
        starts.append(rec.start_offset_s + t0)
    data = (
        np.stack(slices, axis=0)
        if slices
        else np.empty((0, rec.n_channels, n_win))
    )
    return EpochSet(
        channels=rec.channels,
        fs=rec.fs,
        data=data,
        condition=Condition(f"recall_{window.task.value}"),
        session=session,
        rejected=np.zeros(len(slices), dtype=bool),
        start_times_s=np.asarray(starts, dtype=float),
        skipped_events=tuple(skipped),
    )


def reject_amplitude(epochs: EpochSet, threshold_uv: float = 100.0) -> EpochSet:
    """Flag epochs whose absolute amplitude strictly exceeds the threshold.

    A peak of exactly threshold_uv is kept. Flags accumulate: an epoch
    rejected earlier stays rejected, so repeated application with lower
    thresholds is monotone and any application is idempotent.
    """
    if threshold_uv <= 0:
        raise ValidationError(f"threshold must be positive, got {threshold_uv}")
    if epochs.n_epochs == 0:
        return epochs
    peaks = np.abs(epochs.data).max(axis=(1, 2))
    return epochs.with_rejected(epochs.rejected | (peaks > threshold_uv))
