"""End-to-end analyses: performance, nap-feature correlation, recall
pre/post comparison, and nap-to-recall feature correlation.

Subject-level feature = mean over that subject's non-rejected epochs;
between-subject statistics operate on those means. Correlation analyses
are reported uncorrected (flagged as such); the recall pre/post post-hoc
permutation tests are Bonferroni corrected within each (task, metric)
family.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from . import io as npio
from .behavior import (
    MemoryScore,
    UndefinedScoreError,
    performance_diff,
    score_location,
    score_picture,
    score_word_pairs,
)
from .config import StudyConfig, SubjectPaths
from .connectivity import cross_spectrum, region_wpli, wpli_bands
from .model import (
    BandRegionTable,
    BandSpec,
    Condition,
    EpochSet,
    REGION_PAIRS,
    REGIONS,
    RegionMap,
    Session,
    SubjectSession,
    Task,
    ValidationError,
    default_region_map,
)
from .preproc import (
    DEFAULT_RECALL_WINDOWS,
    bandpass,
    reject_amplitude,
    resample,
    segment_events,
    segment_fixed,
    trim_nap,
)
from .spectral import channel_band_db
from .stats import (
    RngSpec,
    StatError,
    bonferroni,
    kruskal_wallis,
    pearson,
    perm_paired,
)

MAX_REJECTION_FRACTION = 0.5


class RejectionRateError(RuntimeError):
    """More than half the epochs of a condition were rejected."""


@dataclass(frozen=True)
class SubjectFeatures:
    subject_id: str
    channels: tuple[str, ...]
    bands: tuple[str, ...]
    scores: dict[tuple[Task, Session], MemoryScore]
    nap_psd: BandRegionTable
    nap_wpli: BandRegionTable
    nap_channel_db: np.ndarray  # (n_channels, n_bands)
    recall_psd: dict[tuple[Task, Session], BandRegionTable]
    recall_wpli: dict[tuple[Task, Session], BandRegionTable]
    recall_channel_db: dict[tuple[Task, Session], np.ndarray]
    recall_df_hz: dict[Task, float]  # frequency resolution of recall epochs
    rejection: dict[str, tuple[int, int]]  # condition -> (n_rejected, n_total)

    def score_diff(self, task: Task) -> float | None:
        imm = self.scores.get((task, Session.IMMEDIATE))
        dela = self.scores.get((task, Session.DELAYED))
        if imm is None or dela is None:
            return None
        return performance_diff(imm, dela)


@dataclass(frozen=True)
class ReportRow:
    analysis: str
    task: str = ""
    metric: str = ""
    band: str = ""
    column: str = ""
    n: int = 0
    statistic_name: str = ""
    statistic: float = math.nan
    p_value: float = math.nan
    correction: str = "uncorrected"
    n_comparisons: int = 1
    p_corrected: float = math.nan
    significant: bool = False
    note: str = ""
    value_immediate: float = math.nan
    value_delayed: float = math.nan
    value_diff: float = math.nan


@dataclass
class AnalysisReport:
    analysis: str
    rows: list[ReportRow]
    provenance: dict
    # subject-level (x, y) pairs behind each correlation row, for scatter
    # figures and external plotting
    scatter_data: dict[tuple, tuple[tuple[float, ...], tuple[float, ...]]] = field(
        default_factory=dict
    )
    warnings: list[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.__dict__ for row in self.rows])


def _check_rejection(epochs: EpochSet, label: str) -> None:
    if epochs.n_epochs and epochs.n_rejected / epochs.n_epochs > MAX_REJECTION_FRACTION:
        raise RejectionRateError(
            f"{label}: {epochs.n_rejected} of {epochs.n_epochs} epochs rejected "
            f"(> {MAX_REJECTION_FRACTION:.0%}); refusing to proceed"
        )


def _resolvable(bands: tuple[BandSpec, ...], n_samples: int, fs: float):
    freqs = np.fft.rfftfreq(n_samples, 1.0 / fs)
    out = []
    for band in bands:
        mask = (freqs >= band.f1) & (freqs < band.f2)
        out.append(bool(mask.any()) and band.f2 <= fs / 2 + 1e-12)
    return out


def _psd_table_with_gaps(
    epochs: EpochSet, bands: tuple[BandSpec, ...], region_map: RegionMap
) -> tuple[BandRegionTable, np.ndarray]:
    """Band x region table that tolerates bands below frequency resolution."""
    region_map.validate_montage(epochs.channels)
    ok = _resolvable(bands, epochs.n_samples, epochs.fs)
    res_bands = tuple(b for b, keep in zip(bands, ok) if keep)
    if not res_bands:
        raise ValidationError("no band is resolvable at this epoch length")
    chan_res = channel_band_db(epochs, res_bands)
    chan_db = np.full((len(epochs.channels), len(bands)), np.nan)
    chan_db[:, np.flatnonzero(ok)] = chan_res
    by_region = region_map.region_channels(epochs.channels)
    values = np.column_stack(
        [chan_db[by_region[r], :].mean(axis=0) for r in REGIONS]
    )
    n_used = epochs.n_epochs - epochs.n_rejected
    table = BandRegionTable(
        metric="psd_db",
        bands=tuple(b.name for b in bands),
        columns=tuple(r.value for r in REGIONS),
        values=values,
        n_epochs_used=np.full(values.shape, n_used, dtype=int),
    )
    return table, chan_db


def _wpli_table_with_gaps(
    epochs: EpochSet,
    bands: tuple[BandSpec, ...],
    region_map: RegionMap,
    fmax: float,
) -> BandRegionTable:
    ok = _resolvable(bands, epochs.n_samples, epochs.fs)
    res_bands = tuple(b for b, keep in zip(bands, ok) if keep)
    if not res_bands:
        raise ValidationError("no band is resolvable at this epoch length")
    cs = cross_spectrum(epochs, fmax=fmax)
    res_table = region_wpli(wpli_bands(cs, res_bands), region_map)
    values = np.full((len(bands), len(REGION_PAIRS)), np.nan)
    values[np.flatnonzero(ok), :] = res_table.values
    return BandRegionTable(
        metric="wpli",
        bands=tuple(b.name for b in bands),
        columns=REGION_PAIRS,
        values=values,
        n_epochs_used=np.full(values.shape, cs.n_epochs, dtype=int),
    )


def _preprocess_recording(rec, config: StudyConfig):
    if rec.fs != config.preproc.target_fs:
        rec = resample(rec, config.preproc.target_fs)
    return bandpass(rec, config.preproc.filter_spec())


def score_responses(
    responses, adjudications: dict[tuple[str, str], str] | None = None
) -> dict[tuple[Task, Session], MemoryScore]:
    """Score all tasks and sessions from (task, session, response) triples.

    Location memory is scored from the picture-task recognition rows,
    which carry the quadrant answers. Undefined scores (no correct old
    responses) are omitted rather than fabricated.
    """
    from dataclasses import replace as dc_replace

    scores: dict[tuple[Task, Session], MemoryScore] = {}
    for session in (Session.IMMEDIATE, Session.DELAYED):
        words = [r for t, s, r in responses if t == Task.WORD_PAIRS and s == session]
        if adjudications:
            words = [
                dc_replace(
                    w,
                    adjudication=adjudications.get(
                        (w.cue.strip().lower(), w.response.strip().lower())
                    ),
                )
                for w in words
            ]
        recog = [r for t, s, r in responses if t == Task.PICTURE and s == session]
        if words:
            scores[(Task.WORD_PAIRS, session)] = score_word_pairs(words, session)
        if recog:
            scores[(Task.PICTURE, session)] = score_picture(recog, session)
            try:
                scores[(Task.LOCATION, session)] = score_location(recog, session)
            except UndefinedScoreError:
                pass
    return scores


def load_subject(paths: SubjectPaths, config: StudyConfig) -> SubjectSession:
    nap_csv, nap_meta = paths.nap()
    nap = npio.load_recording(nap_csv, nap_meta)
    events = tuple(npio.load_events(paths.events()))
    recordings = {}
    for task in Task:
        for session in (Session.IMMEDIATE, Session.DELAYED):
            if any(e.task == task and e.session == session for e in events):
                csv, meta = paths.recall(task.value, session.value)
                if csv.exists():
                    recordings[(task, session)] = npio.load_recording(csv, meta)
    responses = npio.load_responses(paths.responses())
    adj_path = paths.adjudications()
    if adj_path.exists():
        from dataclasses import replace as dc_replace

        adjudications = npio.load_adjudications(adj_path)
        responses = [
            (
                t,
                s,
                dc_replace(
                    r,
                    adjudication=adjudications.get(
                        (r.cue.strip().lower(), r.response.strip().lower())
                    ),
                )
                if t == Task.WORD_PAIRS
                else r,
            )
            for t, s, r in responses
        ]
    responses = tuple(responses)
    questionnaires = {}
    subject_meta = paths.directory / "subject.yaml"
    if subject_meta.exists():
        import yaml

        meta = yaml.safe_load(subject_meta.read_text(encoding="utf-8")) or {}
        questionnaires = {
            str(k): float(v) for k, v in (meta.get("questionnaires") or {}).items()
        }
    return SubjectSession(
        subject_id=paths.subject_id,
        nap_recording=nap,
        recall_recordings=recordings,
        events=events,
        responses=responses,
        questionnaires=questionnaires,
    )


def extract_subject_features(
    session: SubjectSession, config: StudyConfig
) -> SubjectFeatures:
    """Preprocess one subject and compute every feature the analyses need."""
    if session.nap_recording is None:
        raise ValidationError(f"{session.subject_id}: no nap recording")
    region_map = default_region_map(
        session.nap_recording.channels,
        exclude=config.region_exclude,
        override=config.region_override,
    )
    bands = config.bands
    rejection: dict[str, tuple[int, int]] = {}

    nap = _preprocess_recording(session.nap_recording, config)
    nap = trim_nap(nap, config.preproc.trim_s)
    nap_epochs = segment_fixed(nap, config.preproc.epoch_s)
    nap_epochs = reject_amplitude(nap_epochs, config.preproc.threshold_uv)
    _check_rejection(nap_epochs, f"{session.subject_id}/nap")
    rejection[Condition.NAP.value] = (nap_epochs.n_rejected, nap_epochs.n_epochs)
    nap_psd, nap_chan_db = _psd_table_with_gaps(nap_epochs, bands, region_map)
    fmax = max(b.f2 for b in bands)
    nap_wpli = _wpli_table_with_gaps(nap_epochs, bands, region_map, fmax)

    recall_psd: dict[tuple[Task, Session], BandRegionTable] = {}
    recall_wpli: dict[tuple[Task, Session], BandRegionTable] = {}
    recall_chan: dict[tuple[Task, Session], np.ndarray] = {}
    recall_df: dict[Task, float] = {}
    for (task, sess), rec in sorted(
        session.recall_recordings.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        window = DEFAULT_RECALL_WINDOWS[task]
        filtered = _preprocess_recording(rec, config)
        onsets = [e.onset_s for e in session.events_for(task, sess)]
        epochs = segment_events(filtered, onsets, window, session=sess)
        epochs = reject_amplitude(epochs, config.preproc.threshold_uv)
        label = f"{session.subject_id}/{task.value}/{sess.value}"
        _check_rejection(epochs, label)
        rejection[f"recall_{task.value}_{sess.value}"] = (
            epochs.n_rejected,
            epochs.n_epochs,
        )
        recall_df[task] = epochs.fs / epochs.n_samples
        table, chan_db = _psd_table_with_gaps(epochs, bands, region_map)
        recall_psd[(task, sess)] = table
        recall_chan[(task, sess)] = chan_db
        recall_wpli[(task, sess)] = _wpli_table_with_gaps(
            epochs, bands, region_map, fmax
        )

    scores = score_responses(session.responses)
    return SubjectFeatures(
        subject_id=session.subject_id,
        channels=session.nap_recording.channels,
        bands=tuple(b.name for b in bands),
        scores=scores,
        nap_psd=nap_psd,
        nap_wpli=nap_wpli,
        nap_channel_db=nap_chan_db,
        recall_psd=recall_psd,
        recall_wpli=recall_wpli,
        recall_channel_db=recall_chan,
        recall_df_hz=recall_df,
        rejection=rejection,
    )


def _extract_worker(args) -> SubjectFeatures:
    paths, config = args
    return extract_subject_features(load_subject(paths, config), config)


def extract_all_features(
    config: StudyConfig, jobs: int = 1
) -> list[SubjectFeatures]:
    """Load and featurize every subject, optionally in parallel.

    Results are returned in config order regardless of scheduling.
    """
    work = [(paths, config) for paths in config.subjects]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_extract_worker, work))
    return [_extract_worker(w) for w in work]


def _provenance(config: StudyConfig) -> dict:
    return {
        "tool": "napeeg",
        "version": __version__,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "alpha": config.alpha,
        "perm_resamples": config.perm_resamples,
        "n_subjects": len(config.subjects),
        "config": config.raw,
    }


def run_performance(
    features: list[SubjectFeatures], config: StudyConfig
) -> AnalysisReport:
    """Per-task immediate vs delayed scores with paired permutation tests."""
    rng = RngSpec(seed=config.seed)
    report = AnalysisReport(
        analysis="performance", rows=[], provenance=_provenance(config)
    )
    for task in Task:
        imm, dela, used = [], [], []
        for feat in features:
            a = feat.scores.get((task, Session.IMMEDIATE))
            b = feat.scores.get((task, Session.DELAYED))
            if a is None or b is None:
                report.warnings.append(
                    f"{feat.subject_id}: missing {task.value} session, skipped"
                )
                continue
            imm.append(a.value)
            dela.append(b.value)
            used.append(feat.subject_id)
        if len(imm) < 2:
            report.rows.append(
                ReportRow(
                    analysis="performance",
                    task=task.value,
                    metric="score",
                    n=len(imm),
                    note="fewer than 2 subjects with both sessions",
                )
            )
            continue
        result = perm_paired(
            dela,
            imm,
            r=config.perm_resamples,
            rng=rng,
            stream=f"performance:{task.value}",
        )
        report.rows.append(
            ReportRow(
                analysis="performance",
                task=task.value,
                metric="score",
                n=result.n,
                statistic_name="t",
                statistic=result.statistic,
                p_value=result.p_value,
                significant=result.p_value < config.alpha,
                note=result.note,
                value_immediate=float(np.mean(imm)),
                value_delayed=float(np.mean(dela)),
                value_diff=float(np.mean(dela) - np.mean(imm)),
            )
        )
    return report


def _diff_vector(features: list[SubjectFeatures], task: Task):
    pairs = [(f, f.score_diff(task)) for f in features]
    kept = [(f, d) for f, d in pairs if d is not None]
    return kept


def run_nap_feature_correlation(
    features: list[SubjectFeatures], config: StudyConfig
) -> AnalysisReport:
    """Pearson correlation of nap features against performance differences.

    3 tasks x (30 PSD + 90 wPLI) cells, reported uncorrected as in the
    source protocol and explicitly flagged that way.
    """
    report = AnalysisReport(
        analysis="nap_feature_correlation", rows=[], provenance=_provenance(config)
    )
    band_names = features[0].bands if features else ()
    for task in Task:
        kept = _diff_vector(features, task)
        if len(kept) < 3:
            raise ValidationError(
                f"correlation undefined: {len(kept)} subjects with both "
                f"{task.value} sessions (need >= 3)"
            )
        y = [d for _, d in kept]
        for metric, table_of in (
            ("psd_db", lambda f: f.nap_psd),
            ("wpli", lambda f: f.nap_wpli),
        ):
            columns = table_of(kept[0][0]).columns
            for band in band_names:
                for column in columns:
                    x = [table_of(f).cell(band, column) for f, _ in kept]
                    row_key = (task.value, metric, band, column)
                    if any(math.isnan(v) for v in x):
                        report.rows.append(
                            ReportRow(
                                analysis=report.analysis,
                                task=task.value,
                                metric=metric,
                                band=band,
                                column=column,
                                n=len(x),
                                note="missing feature (band unresolvable)",
                            )
                        )
                        continue
                    try:
                        res = pearson(x, y)
                    except StatError as exc:
                        report.rows.append(
                            ReportRow(
                                analysis=report.analysis,
                                task=task.value,
                                metric=metric,
                                band=band,
                                column=column,
                                n=len(x),
                                note=f"undefined ({exc})",
                            )
                        )
                        continue
                    report.scatter_data[row_key] = (tuple(x), tuple(y))
                    report.rows.append(
                        ReportRow(
                            analysis=report.analysis,
                            task=task.value,
                            metric=metric,
                            band=band,
                            column=column,
                            n=res.n,
                            statistic_name="r",
                            statistic=res.statistic,
                            p_value=res.p_value,
                            significant=res.p_value < config.alpha,
                        )
                    )
    return report


def run_recall_prepost(
    features: list[SubjectFeatures], config: StudyConfig
) -> AnalysisReport:
    """Kruskal-Wallis across sessions plus Bonferroni-corrected paired
    permutation post-hoc, per (task, band, region/pair) and per electrode."""
    rng = RngSpec(seed=config.seed)
    report = AnalysisReport(
        analysis="recall_prepost", rows=[], provenance=_provenance(config)
    )
    band_names = features[0].bands if features else ()

    def cells_for(metric: str, task: Task):
        if metric == "psd_db":
            columns = tuple(r.value for r in REGIONS)
            getter = lambda f, s, b, c: f.recall_psd[(task, s)].cell(b, c)
        elif metric == "wpli":
            columns = REGION_PAIRS
            getter = lambda f, s, b, c: f.recall_wpli[(task, s)].cell(b, c)
        else:  # per-electrode spectral power
            columns = features[0].channels
            getter = lambda f, s, b, c: float(
                f.recall_channel_db[(task, s)][
                    f.channels.index(c), f.bands.index(b)
                ]
            )
        return columns, getter

    for task in Task:
        have_both = [
            f
            for f in features
            if (task, Session.IMMEDIATE) in f.recall_psd
            and (task, Session.DELAYED) in f.recall_psd
        ]
        for metric in ("psd_db", "wpli", "psd_channel"):
            columns, getter = cells_for(metric, task)
            pending = []
            for band in band_names:
                for column in columns:
                    if len(have_both) < 2:
                        report.rows.append(
                            ReportRow(
                                analysis=report.analysis,
                                task=task.value,
                                metric=metric,
                                band=band,
                                column=column,
                                n=len(have_both),
                                note="missing: fewer than 2 subjects with both sessions",
                            )
                        )
                        continue
                    imm = [getter(f, Session.IMMEDIATE, band, column) for f in have_both]
                    dela = [getter(f, Session.DELAYED, band, column) for f in have_both]
                    if any(math.isnan(v) for v in imm + dela):
                        report.rows.append(
                            ReportRow(
                                analysis=report.analysis,
                                task=task.value,
                                metric=metric,
                                band=band,
                                column=column,
                                n=len(have_both),
                                note="missing: band unresolvable at recall epoch length",
                            )
                        )
                        continue
                    kw = kruskal_wallis([imm, dela])
                    perm = perm_paired(
                        dela,
                        imm,
                        r=config.perm_resamples,
                        rng=rng,
                        stream=f"recall_prepost:{task.value}:{metric}:{band}:{column}",
                    )
                    pending.append((band, column, kw, perm))
            corrected = bonferroni([p.p_value for _, _, _, p in pending])
            for (band, column, kw, perm), p_corr in zip(pending, corrected):
                report.rows.append(
                    ReportRow(
                        analysis=report.analysis,
                        task=task.value,
                        metric=metric,
                        band=band,
                        column=column,
                        n=perm.n,
                        statistic_name="t",
                        statistic=perm.statistic,
                        p_value=perm.p_value,
                        correction="bonferroni",
                        n_comparisons=len(pending),
                        p_corrected=p_corr,
                        significant=p_corr < config.alpha,
                        note=f"kruskal_wallis H={kw.statistic:.6g} p={kw.p_value:.6g}",
                    )
                )
    return report


def run_recall_feature_correlation(
    features: list[SubjectFeatures], config: StudyConfig
) -> AnalysisReport:
    """Pearson between nap features and delayed-immediate recall feature
    changes, per task, band, and region (or region pair for wPLI)."""
    report = AnalysisReport(
        analysis="recall_feature_correlation", rows=[], provenance=_provenance(config)
    )
    band_names = features[0].bands if features else ()
    for task in Task:
        have_both = [
            f
            for f in features
            if (task, Session.IMMEDIATE) in f.recall_psd
            and (task, Session.DELAYED) in f.recall_psd
        ]
        for metric, nap_of, recall_of in (
            ("psd_db", lambda f: f.nap_psd, lambda f, s: f.recall_psd[(task, s)]),
            ("wpli", lambda f: f.nap_wpli, lambda f, s: f.recall_wpli[(task, s)]),
        ):
            if len(have_both) < 3:
                raise ValidationError(
                    f"correlation undefined: {len(have_both)} subjects with both "
                    f"{task.value} recall sessions (need >= 3)"
                )
            columns = nap_of(have_both[0]).columns
            for band in band_names:
                for column in columns:
                    x = [nap_of(f).cell(band, column) for f in have_both]
                    y = [
                        recall_of(f, Session.DELAYED).cell(band, column)
                        - recall_of(f, Session.IMMEDIATE).cell(band, column)
                        for f in have_both
                    ]
                    key = (task.value, metric, band, column)
                    if any(math.isnan(v) for v in x + y):
                        report.rows.append(
                            ReportRow(
                                analysis=report.analysis,
                                task=task.value,
                                metric=metric,
                                band=band,
                                column=column,
                                n=len(x),
                                note="missing: band unresolvable at recall epoch length",
                            )
                        )
                        continue
                    try:
                        res = pearson(x, y)
                    except StatError as exc:
                        report.rows.append(
                            ReportRow(
                                analysis=report.analysis,
                                task=task.value,
                                metric=metric,
                                band=band,
                                column=column,
                                n=len(x),
                                note=f"undefined ({exc})",
                            )
                        )
                        continue
                    report.scatter_data[key] = (tuple(x), tuple(y))
                    report.rows.append(
                        ReportRow(
                            analysis=report.analysis,
                            task=task.value,
                            metric=metric,
                            band=band,
                            column=column,
                            n=res.n,
                            statistic_name="r",
                            statistic=res.statistic,
                            p_value=res.p_value,
                            significant=res.p_value < config.alpha,
                        )
                    )
    return report


def region_task_correlation_frame(report: AnalysisReport, band: str = "gamma") -> pd.DataFrame:
    """Region-by-task (r, p) grid of nap-vs-recall PSD correlations."""
    frame = pd.DataFrame(
        index=[r.value for r in REGIONS],
        columns=[
            f"{task.value}_{what}" for task in Task for what in ("r", "p")
        ],
        dtype=float,
    )
    for row in report.rows:
        if row.metric == "psd_db" and row.band == band and row.column in frame.index:
            frame.loc[row.column, f"{row.task}_r"] = row.statistic
            frame.loc[row.column, f"{row.task}_p"] = row.p_value
    frame.insert(0, "region", frame.index)
    return frame.reset_index(drop=True)


def write_report_csv(report: AnalysisReport, path: Path) -> None:
    report.to_frame().to_csv(path, index=False, lineterminator="\n")


def write_scatter_long_csv(report: AnalysisReport, path: Path) -> None:
    rows = []
    for (task, metric, band, column), (x, y) in sorted(report.scatter_data.items()):
        for i, (xi, yi) in enumerate(zip(x, y)):
            rows.append(
                {
                    "analysis": report.analysis,
                    "task": task,
                    "metric": metric,
                    "band": band,
                    "column": column,
                    "subject_index": i,
                    "feature": xi,
                    "outcome": yi,
                }
            )
    pd.DataFrame(
        rows,
        columns=[
            "analysis",
            "task",
            "metric",
            "band",
            "column",
            "subject_index",
            "feature",
            "outcome",
        ],
    ).to_csv(path, index=False, lineterminator="\n")


def check_no_orphan_rows(report: AnalysisReport) -> None:
    """Every row must name its analysis and, for tested cells, its key."""
    for row in report.rows:
        if not row.analysis:
            raise ValidationError("report row without analysis name")
        if not math.isnan(row.p_value) and not (row.task and row.metric):
            raise ValidationError(f"orphan stat row: {row}")


def run_all(config: StudyConfig, jobs: int = 1, emit_svg: bool = True) -> Path:
    """Execute every analysis and write the report directory.

    Identical config and seed produce byte-identical report CSVs.
    """
    from .figures import emit_figures

    config.validate_files()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    features = extract_all_features(config, jobs=jobs)

    feat_dir = out / "features"
    for feat in features:
        sub_dir = feat_dir / feat.subject_id
        sub_dir.mkdir(parents=True, exist_ok=True)
        npio.save_table(feat.nap_psd, sub_dir / "nap_psd.csv")
        npio.save_table(feat.nap_wpli, sub_dir / "nap_wpli.csv")
        chan_frame = pd.DataFrame(
            feat.nap_channel_db, index=list(feat.channels), columns=list(feat.bands)
        )
        chan_frame.index.name = "channel"
        long = chan_frame.reset_index().melt(
            id_vars="channel", var_name="band", value_name="db"
        )
        long.to_csv(sub_dir / "nap_channel_psd.csv", index=False, lineterminator="\n")
        for (task, sess), table in sorted(
            feat.recall_psd.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
        ):
            npio.save_table(table, sub_dir / f"recall_psd_{task.value}_{sess.value}.csv")
        for (task, sess), table in sorted(
            feat.recall_wpli.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
        ):
            npio.save_table(table, sub_dir / f"recall_wpli_{task.value}_{sess.value}.csv")

    reports = [
        run_performance(features, config),
        run_nap_feature_correlation(features, config),
        run_recall_prepost(features, config),
        run_recall_feature_correlation(features, config),
    ]
    for report in reports:
        check_no_orphan_rows(report)
        write_report_csv(report, out / f"{report.analysis}.csv")
        if report.scatter_data:
            write_scatter_long_csv(report, out / f"{report.analysis}_points.csv")
    gamma_table = region_task_correlation_frame(reports[3], band="gamma")
    gamma_table.to_csv(out / "recall_correlation_gamma_by_region.csv", index=False, lineterminator="\n")

    meta = _provenance(config)
    meta["recall_df_hz"] = {
        task.value: features[0].recall_df_hz.get(task)
        for task in Task
        if features and task in features[0].recall_df_hz
    }
    meta["rejection"] = {f.subject_id: f.rejection for f in features}
    meta["warnings"] = sorted({w for rep in reports for w in rep.warnings})
    (out / "provenance.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True, default=str), encoding="utf-8"
    )
    if emit_svg:
        fig_dir = out / "figures"
        for report in reports:
            emit_figures(report, fig_dir, alpha=config.alpha)
    return out
