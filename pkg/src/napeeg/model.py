"""Core domain types: recordings, epochs, bands, regions, and feature tables.

All containers are immutable after construction (arrays are marked
read-only) so they can be shared freely across parallel workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Input or configuration violates a documented precondition."""


class Condition(str, enum.Enum):
    NAP = "nap"
    RECALL_WORD_PAIRS = "recall_word_pairs"
    RECALL_PICTURE = "recall_picture"
    RECALL_LOCATION = "recall_location"


class Session(str, enum.Enum):
    IMMEDIATE = "immediate"
    DELAYED = "delayed"
    NAP = "nap"


class Task(str, enum.Enum):
    WORD_PAIRS = "word_pairs"
    PICTURE = "picture"
    LOCATION = "location"


class Region(str, enum.Enum):
    FRONTAL = "frontal"
    CENTRAL = "central"
    TEMPORAL = "temporal"
    PARIETAL = "parietal"
    OCCIPITAL = "occipital"


REGIONS: tuple[Region, ...] = tuple(Region)

REGION_CODES: dict[Region, str] = {
    Region.FRONTAL: "F",
    Region.CENTRAL: "C",
    Region.TEMPORAL: "T",
    Region.PARIETAL: "P",
    Region.OCCIPITAL: "O",
}

TASK_CONDITIONS: dict[Task, Condition] = {
    Task.WORD_PAIRS: Condition.RECALL_WORD_PAIRS,
    Task.PICTURE: Condition.RECALL_PICTURE,
    Task.LOCATION: Condition.RECALL_LOCATION,
}


def region_pair_labels() -> tuple[str, ...]:
    """Fixed column order for region-pair tables: F-F, F-C, ... O-O."""
    codes = [REGION_CODES[r] for r in REGIONS]
    return tuple(
        f"{codes[i]}-{codes[j]}"
        for i in range(len(codes))
        for j in range(i, len(codes))
    )


REGION_PAIRS: tuple[str, ...] = region_pair_labels()


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Recording:
    """Continuous multichannel signal in microvolts.

    Attributes:
        channels: Ordered, unique channel labels.
        fs: Sampling rate in Hz, > 0.
        data: Array of shape (n_channels, n_samples), µV.
        start_offset_s: Seconds elapsed from session start to first sample.
    """

    channels: tuple[str, ...]
    fs: float
    data: np.ndarray
    start_offset_s: float = 0.0

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValidationError(
                f"data must be 2D (channels, samples), got shape {data.shape}"
            )
        if data.shape[0] != len(self.channels):
            raise ValidationError(
                f"channel count mismatch: {len(self.channels)} labels, "
                f"{data.shape[0]} data rows"
            )
        if len(set(self.channels)) != len(self.channels):
            raise ValidationError("channel labels must be unique")
        if not self.fs > 0:
            raise ValidationError(f"fs must be positive, got {self.fs}")
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "data", _freeze(data))

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.fs


@dataclass(frozen=True)
class Epoch:
    """One fixed-length or event-locked segment of multichannel signal."""

    data: np.ndarray  # (n_channels, n_samples), µV
    condition: Condition
    session: Session
    rejected: bool
    index: int
    fs: float
    channels: tuple[str, ...]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class EpochSet:
    """Stack of equally-shaped epochs with rejection flags and provenance.

    Epochs are never deleted by artifact rejection; downstream operations
    skip flagged epochs so reports can state how many were used.
    """

    channels: tuple[str, ...]
    fs: float
    data: np.ndarray  # (n_epochs, n_channels, n_samples)
    condition: Condition
    session: Session
    rejected: np.ndarray  # (n_epochs,) bool
    start_times_s: np.ndarray  # (n_epochs,) seconds from session start
    skipped_events: tuple[tuple[float, str], ...] = ()

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        rejected = np.asarray(self.rejected, dtype=bool)
        starts = np.asarray(self.start_times_s, dtype=float)
        if data.ndim != 3:
            raise ValidationError(
                f"data must be 3D (epochs, channels, samples), got {data.shape}"
            )
        if data.shape[1] != len(self.channels):
            raise ValidationError("channel count mismatch in epoch data")
        if rejected.shape != (data.shape[0],) or starts.shape != (data.shape[0],):
            raise ValidationError("per-epoch metadata length mismatch")
        if not self.fs > 0:
            raise ValidationError(f"fs must be positive, got {self.fs}")
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "data", _freeze(data))
        object.__setattr__(self, "rejected", _freeze(rejected))
        object.__setattr__(self, "start_times_s", _freeze(starts))

    @property
    def n_epochs(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[2]

    @property
    def n_rejected(self) -> int:
        return int(self.rejected.sum())

    def epoch(self, i: int) -> Epoch:
        return Epoch(
            data=self.data[i],
            condition=self.condition,
            session=self.session,
            rejected=bool(self.rejected[i]),
            index=i,
            fs=self.fs,
            channels=self.channels,
        )

    def __iter__(self):
        return (self.epoch(i) for i in range(self.n_epochs))

    def with_rejected(self, rejected: np.ndarray) -> "EpochSet":
        return EpochSet(
            channels=self.channels,
            fs=self.fs,
            data=self.data,
            condition=self.condition,
            session=self.session,
            rejected=rejected,
            start_times_s=self.start_times_s,
            skipped_events=self.skipped_events,
        )


@dataclass(frozen=True)
class BandSpec:
    """Frequency band [f1, f2) in Hz."""

    name: str
    f1: float
    f2: float

    def __post_init__(self) -> None:
        if not 0 < self.f1 < self.f2:
            raise ValidationError(
                f"band {self.name!r} requires 0 < f1 < f2, got [{self.f1}, {self.f2})"
            )


DEFAULT_BANDS: tuple[BandSpec, ...] = (
    BandSpec("delta", 0.5, 4.0),
    BandSpec("theta", 4.0, 7.0),
    BandSpec("alpha", 7.0, 12.0),
    BandSpec("spindle", 12.0, 16.0),
    BandSpec("beta", 16.0, 30.0),
    BandSpec("gamma", 30.0, 50.0),
)

# Two-letter 10-20 prefixes take precedence over single letters (CP before
# C, FC before F, ...), otherwise e.g. CP3 would land in central.
_PREFIX_RULE: tuple[tuple[str, Region], ...] = (
    ("FP", Region.FRONTAL),
    ("AF", Region.FRONTAL),
    ("FC", Region.CENTRAL),
    ("FT", Region.TEMPORAL),
    ("TP", Region.TEMPORAL),
    ("CP", Region.PARIETAL),
    ("PO", Region.OCCIPITAL),
    ("F", Region.FRONTAL),
    ("C", Region.CENTRAL),
    ("T", Region.TEMPORAL),
    ("P", Region.PARIETAL),
    ("O", Region.OCCIPITAL),
)


@dataclass(frozen=True)
class RegionMap:
    """Assignment of channel labels to the five scalp regions.

    Labels in ``excluded`` carry no region (references, unknowns) and are
    dropped from regional aggregation but never silently lost.
    """

    assignment: dict[str, Region]
    excluded: frozenset[str] = frozenset()
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        overlap = set(self.assignment) & set(self.excluded)
        if overlap:
            raise ValidationError(
                f"labels both assigned and excluded: {sorted(overlap)}"
            )
        object.__setattr__(self, "assignment", dict(self.assignment))
        object.__setattr__(self, "excluded", frozenset(self.excluded))

    def region_channels(self, channels: tuple[str, ...]) -> dict[Region, list[int]]:
        """Channel indices per region, in input order."""
        out: dict[Region, list[int]] = {r: [] for r in REGIONS}
        for i, ch in enumerate(channels):
            region = self.assignment.get(ch)
            if region is not None:
                out[region].append(i)
        return out

    def validate_montage(self, channels: tuple[str, ...]) -> None:
        """Raise if any of the five regions has no mapped channel."""
        by_region = self.region_channels(channels)
        empty = [r.value for r in REGIONS if not by_region[r]]
        if empty:
            raise ValidationError(f"regions with zero mapped channels: {empty}")


def default_region_map(
    channels: list[str] | tuple[str, ...],
    exclude: tuple[str, ...] = (),
    override: dict[str, Region] | None = None,
) -> RegionMap:
    """Assign 10-20 labels to regions by prefix rule.

    Unknown labels are excluded and reported in ``warnings``; labels in
    ``exclude`` (e.g. reference electrodes) are excluded unconditionally.
    Every input label ends up either assigned or excluded.
    """
    override = override or {}
    excluded_upper = {e.upper() for e in exclude}
    assignment: dict[str, Region] = {}
    excluded: set[str] = set()
    warnings: list[str] = []
    for ch in channels:
        if ch.upper() in excluded_upper:
            excluded.add(ch)
            continue
        if ch in override:
            assignment[ch] = Region(override[ch])
            continue
        upper = ch.upper()
        for prefix, region in _PREFIX_RULE:
            if upper.startswith(prefix):
                assignment[ch] = region
                break
        else:
            excluded.add(ch)
            warnings.append(f"unknown channel label {ch!r} excluded from regions")
    return RegionMap(
        assignment=assignment, excluded=frozenset(excluded), warnings=tuple(warnings)
    )


@dataclass(frozen=True)
class BandRegionTable:
    """Scalar feature indexed by band x region (psd_db) or region pair (wpli).

    For the default six bands the psd_db grid is 6x5 and the wpli grid is
    6x15 (all unordered region pairs, within-region included, in the fixed
    order F-F, F-C, ..., O-O).
    """

    metric: str  # "psd_db" | "wpli"
    bands: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray  # (n_bands, n_columns); nan marks missing cells
    n_epochs_used: np.ndarray  # same shape, int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        n_used = np.asarray(self.n_epochs_used, dtype=int)
        expected = (len(self.bands), len(self.columns))
        if values.shape != expected or n_used.shape != expected:
            raise ValidationError(
                f"table shape mismatch: values {values.shape}, "
                f"n_epochs_used {n_used.shape}, expected {expected}"
            )
        if self.metric == "psd_db":
            want = tuple(r.value for r in REGIONS)
            if self.columns != want:
                raise ValidationError(f"psd_db columns must be {want}")
        elif self.metric == "wpli":
            if self.columns != REGION_PAIRS:
                raise ValidationError(f"wpli columns must be {REGION_PAIRS}")
            finite = values[np.isfinite(values)]
            if finite.size and (finite.min() < 0 or finite.max() > 1):
                raise ValidationError("wpli values must lie in [0, 1]")
        else:
            raise ValidationError(f"unknown metric {self.metric!r}")
        reported = np.isfinite(values)
        if np.any(n_used[reported] < 1):
            raise ValidationError("reported cells need n_epochs_used >= 1")
        object.__setattr__(self, "bands", tuple(self.bands))
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "n_epochs_used", _freeze(n_used))

    def cell(self, band: str, column: str) -> float:
        return float(
            self.values[self.bands.index(band), self.columns.index(column)]
        )


@dataclass(frozen=True)
class EventRecord:
    """One stimulus presentation in a recall session."""

    task: Task
    session: Session
    onset_s: float
    stimulus_id: str


@dataclass(frozen=True)
class SubjectSession:
    """Everything recorded for one subject: nap, recall EEG, logs, metadata.

    Questionnaire values (PSQI, SSS pre/post) are stored as opaque scalars.
    """

    subject_id: str
    nap_recording: Recording | None
    recall_recordings: dict[tuple[Task, Session], Recording] = field(
        default_factory=dict
    )
    events: tuple[EventRecord, ...] = ()
    responses: tuple = ()  # behavior.WordPairResponse | behavior.RecognitionResponse
    questionnaires: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for ev in self.events:
            rec = self.recall_recordings.get((ev.task, ev.session))
            if rec is not None and not (
                0.0 <= ev.onset_s <= rec.duration_s
            ):
                raise ValidationError(
                    f"event onset {ev.onset_s}s outside recording "
                    f"({ev.task.value}, {ev.session.value}) of {rec.duration_s}s"
                )

    def events_for(self, task: Task, session: Session) -> list[EventRecord]:
        return [e for e in self.events if e.task == task and e.session == session]
