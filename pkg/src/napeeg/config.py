"""Study configuration: one structured-text file drives a full run.

The file echoes back into report provenance, so a run is reproducible
from the report directory alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .model import BandSpec, DEFAULT_BANDS, Region, ValidationError
from .preproc import FilterSpec


@dataclass(frozen=True)
class PreprocConfig:
    target_fs: float = 250.0
    low_hz: float = 0.5
    high_hz: float = 50.0
    filter_order: int = 4
    trim_s: float = 900.0
    epoch_s: float = 3.0
    threshold_uv: float = 100.0
    # prefer externally component-cleaned data ("<stem>.clean.csv") when
    # present; the cleaning itself happens outside this pipeline
    use_precleaned: bool = False

    def filter_spec(self) -> FilterSpec:
        return FilterSpec(low_hz=self.low_hz, high_hz=self.high_hz, order=self.filter_order)


@dataclass(frozen=True)
class SubjectPaths:
    subject_id: str
    directory: Path
    prefer_precleaned: bool = False

    def _pick(self, stem: str) -> tuple[Path, Path]:
        if self.prefer_precleaned:
            clean = self.directory / f"{stem}.clean.csv"
            if clean.exists():
                return clean, self.directory / f"{stem}.meta.yaml"
        return self.directory / f"{stem}.csv", self.directory / f"{stem}.meta.yaml"

    def nap(self) -> tuple[Path, Path]:
        return self._pick("nap")

    def recall(self, task: str, session: str) -> tuple[Path, Path]:
        return self._pick(f"recall_{task}_{session}")

    def events(self) -> Path:
        return self.directory / "events.csv"

    def responses(self) -> Path:
        return self.directory / "responses.csv"

    def adjudications(self) -> Path:
        return self.directory / "adjudications.csv"


@dataclass(frozen=True)
class StudyConfig:
    subjects: tuple[SubjectPaths, ...]
    preproc: PreprocConfig = PreprocConfig()
    bands: tuple[BandSpec, ...] = DEFAULT_BANDS
    region_exclude: tuple[str, ...] = ("FCz", "AFz")
    region_override: dict[str, Region] = field(default_factory=dict)
    perm_resamples: int = 1000
    seed: int = 20240915
    alpha: float = 0.05
    out_dir: Path = Path("out")
    raw: dict = field(default_factory=dict)  # parsed file, echoed to provenance

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must be in (0, 1), got {self.alpha}")

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, default=str)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def validate_files(self) -> None:
        """Refuse to start a run when referenced inputs are missing."""
        missing = []
        for sub in self.subjects:
            for p in (*sub.nap(), sub.events(), sub.responses()):
                if not p.exists():
                    missing.append(str(p))
        if missing:
            raise ValidationError(f"missing input files: {missing[:5]}" + ("..." if len(missing) > 5 else ""))


def _parse_bands(raw: dict | None) -> tuple[BandSpec, ...]:
    if not raw:
        return DEFAULT_BANDS
    return tuple(BandSpec(name, float(lo), float(hi)) for name, (lo, hi) in raw.items())


def load_config(path: str | Path) -> StudyConfig:
    """Parse a study.yaml manifest; paths resolve relative to the file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"config {path} is not a mapping")
    base = path.parent
    pp = raw.get("preprocessing", {})
    preproc = PreprocConfig(
        target_fs=float(pp.get("target_fs", 250.0)),
        low_hz=float(pp.get("low_hz", 0.5)),
        high_hz=float(pp.get("high_hz", 50.0)),
        filter_order=int(pp.get("filter_order", 4)),
        trim_s=float(pp.get("trim_s", 900.0)),
        epoch_s=float(pp.get("epoch_s", 3.0)),
        threshold_uv=float(pp.get("threshold_uv", 100.0)),
        use_precleaned=bool(pp.get("use_precleaned", False)),
    )
    subjects = tuple(
        SubjectPaths(
            subject_id=str(s["id"]),
            directory=base / str(s.get("dir", s["id"])),
            prefer_precleaned=preproc.use_precleaned,
        )
        for s in raw.get("subjects", [])
    )
    if not subjects:
        raise ValidationError("config declares no subjects")
    regions = raw.get("regions", {})
    stats = raw.get("stats", {})
    out_dir = raw.get("out_dir", "out")
    return StudyConfig(
        subjects=subjects,
        preproc=preproc,
        bands=_parse_bands(raw.get("bands")),
        region_exclude=tuple(regions.get("exclude", ("FCz", "AFz"))),
        region_override={
            str(k): Region(v) for k, v in (regions.get("override") or {}).items()
        },
        perm_resamples=int(stats.get("r", 1000)),
        seed=int(stats.get("seed", 20240915)),
        alpha=float(stats.get("alpha", 0.05)),
        out_dir=base / str(out_dir),
        raw=raw,
    )
