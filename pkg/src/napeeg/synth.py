"""Synthetic signals and synthetic studies with known planted structure.

Signal generation is a sum of sinusoids plus Gaussian white noise, all
deterministic per seed, which keeps closed-form expectations for every
spectral and connectivity quantity. Study generation plants subject-level
effects (memory gains, feature-performance correlations, session shifts)
and records the planted values so recovery can be asserted end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .behavior import RecognitionResponse, WordPairResponse
from .model import (
    DEFAULT_BANDS,
    EventRecord,
    Recording,
    Region,
    REGIONS,
    Session,
    SubjectSession,
    Task,
    ValidationError,
    default_region_map,
)

# 60-label 10-20/10-10 montage covering all five regions; FCz and AFz are
# reserved for reference/ground and intentionally absent.
MONTAGE_60: tuple[str, ...] = (
    "Fp1", "Fp2", "AF7", "AF3", "AF4", "AF8",
    "F7", "F5", "F3", "F1", "Fz", "F2", "F4", "F6", "F8",
    "FT9", "FT7", "FC5", "FC3", "FC1", "FC2", "FC4", "FC6", "FT8", "FT10",
    "T7", "C5", "C3", "C1", "Cz", "C2", "C4", "C6", "T8",
    "TP7", "CP5", "CP3", "CP1", "CPz", "CP2", "CP4", "CP6", "TP8",
    "P7", "P5", "P3", "P1", "Pz", "P2", "P4", "P6", "P8",
    "PO7", "PO3", "POz", "PO4", "PO8", "O1", "Oz", "O2",
)

# compact montage with two channels per region, for fast studies
MONTAGE_10: tuple[str, ...] = (
    "F3", "F4", "C3", "C4", "T7", "T8", "P3", "P4", "O1", "O2",
)

BAND_CARRIERS: dict[str, float] = {
    "delta": 2.0,
    "theta": 5.5,
    "alpha": 10.0,
    "spindle": 14.0,
    "beta": 22.0,
    "gamma": 38.0,
}

DEFAULT_BAND_AMPLITUDES_UV: dict[str, float] = {
    "delta": 4.0,
    "theta": 3.0,
    "alpha": 3.0,
    "spindle": 2.0,
    "beta": 1.5,
    "gamma": 1.0,
}


@dataclass(frozen=True)
class ToneComponent:
    freq_hz: float
    amplitude_uv: float
    phase_rad: float = 0.0
    channels: tuple[int, ...] | None = None  # None applies to every channel


@dataclass(frozen=True)
class PairLag:
    """Shared carrier on two channels with a fixed phase lag.

    The carrier phase (and a small frequency jitter, like real band
    oscillations drifting inside their band) is redrawn per epoch block,
    so epochs form an i.i.d. ensemble; the lag between the two channels
    stays constant. The jitter also keeps the carrier off exact FFT
    bins, whose neighbors would otherwise hold no signal at all and
    dilute the band average under the zero-imaginary convention.
    """

    chan_i: int
    chan_j: int
    lag_rad: float
    carrier_hz: float
    amplitude_uv: float = 1.0
    jitter_hz: float = 0.25


@dataclass(frozen=True)
class SynthSpec:
    fs: float
    duration_s: float
    channels: tuple[str, ...]
    components: tuple[ToneComponent, ...] = ()
    noise_sigma_uv: float = 0.0
    pair_lags: tuple[PairLag, ...] = ()
    seed: int = 0
    lag_epoch_s: float = 3.0
    pink_noise: bool = False

    def __post_init__(self) -> None:
        for comp in self.components:
            if comp.freq_hz >= self.fs / 2:
                raise ValidationError(
                    f"component at {comp.freq_hz} Hz aliases at fs {self.fs}"
                )
            if comp.amplitude_uv < 0:
                raise ValidationError("component amplitudes must be >= 0")
        for pl in self.pair_lags:
            if pl.carrier_hz >= self.fs / 2:
                raise ValidationError(
                    f"pair carrier at {pl.carrier_hz} Hz aliases at fs {self.fs}"
                )


def _pink(rng: np.random.Generator, n_ch: int, n: int) -> np.ndarray:
    spec = np.fft.rfft(rng.standard_normal((n_ch, n)), axis=1)
    f = np.fft.rfftfreq(n)
    f[0] = f[1]
    spec /= np.sqrt(f)
    out = np.fft.irfft(spec, n=n, axis=1)
    return out / out.std()


def gen_recording(spec: SynthSpec) -> Recording:
    """Render a SynthSpec to a Recording, deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    n = round(spec.duration_s * spec.fs)
    n_ch = len(spec.channels)
    t = np.arange(n) / spec.fs
    data = np.zeros((n_ch, n))
    for comp in spec.components:
        wave = comp.amplitude_uv * np.sin(2 * np.pi * comp.freq_hz * t + comp.phase_rad)
        rows = range(n_ch) if comp.channels is None else comp.channels
        for ch in rows:
            data[ch] += wave
    block = max(1, round(spec.lag_epoch_s * spec.fs))
    for pl in spec.pair_lags:
        for start in range(0, n, block):
            seg = t[start : start + block]
            theta = rng.uniform(0.0, 2 * np.pi)
            f = pl.carrier_hz + rng.uniform(-pl.jitter_hz, pl.jitter_hz)
            carrier = 2 * np.pi * f * seg
            data[pl.chan_i, start : start + block] += pl.amplitude_uv * np.sin(
                carrier + theta
            )
            data[pl.chan_j, start : start + block] += pl.amplitude_uv * np.sin(
                carrier + theta - pl.lag_rad
            )
    if spec.noise_sigma_uv > 0:
        if spec.pink_noise:
            data += spec.noise_sigma_uv * _pink(rng, n_ch, n)
        else:
            data += spec.noise_sigma_uv * rng.standard_normal((n_ch, n))
    return Recording(channels=spec.channels, fs=spec.fs, data=data)


@dataclass(frozen=True)
class RecallShift:
    """Planted delayed-session band-power change on one region."""

    task: Task
    band: str
    region: Region
    delta_db: float


@dataclass(frozen=True)
class StudyTemplate:
    """Parameters of a synthetic study; defaults mirror the real protocol."""

    n_subjects: int = 7
    seed: int = 0
    channels: tuple[str, ...] = MONTAGE_10
    fs: float = 250.0
    nap_minutes: float = 90.0
    trim_s: float = 900.0
    epoch_s: float = 3.0
    word_items: int = 54
    vis_items: int = 38  # old items; an equal number of new items is shown
    event_spacing_s: float = 2.0
    recall_lead_s: float = 10.0
    band_amplitudes_uv: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_BAND_AMPLITUDES_UV)
    )
    noise_sigma_uv: float = 1.0
    subject_sd_db: float = 2.0  # per-(band, region) amplitude spread
    word_gain_mean: float = 4.0  # items, delayed - immediate
    word_gain_sd: float = 1.0
    spindle_location_r: float | None = 0.85
    spindle_db_spread: float = 3.0
    location_gain_scale: float = 0.25
    recall_gamma_r: float | None = 0.8
    gamma_db_spread: float = 3.0
    recall_gamma_effect_db: float = 3.0
    recall_shifts: tuple[RecallShift, ...] = ()

    def __post_init__(self) -> None:
        if self.n_subjects < 1:
            raise ValidationError("n_subjects must be >= 1")
        for r in (self.spindle_location_r, self.recall_gamma_r):
            if r is not None and not -1.0 < r < 1.0:
                raise ValidationError(f"infeasible planted effect |r| >= 1: {r}")
        if self.nap_minutes * 60 <= 2 * self.trim_s:
            raise ValidationError(
                f"nap of {self.nap_minutes} min cannot be trimmed by "
                f"{self.trim_s}s on both ends"
            )


@dataclass(frozen=True)
class SubjectData:
    session: SubjectSession
    truth: dict


@dataclass(frozen=True)
class StudyData:
    template: StudyTemplate
    subjects: tuple[SubjectData, ...]
    truth: dict


def _subject_id(i: int) -> str:
    return f"sub-{i + 1:02d}"


def _region_of(template: StudyTemplate) -> dict[str, Region]:
    return default_region_map(template.channels).assignment


def _band_region_factors_db(
    rng: np.random.Generator, template: StudyTemplate
) -> dict[str, dict[Region, float]]:
    return {
        band.name: {r: rng.normal(0.0, template.subject_sd_db) for r in REGIONS}
        for band in DEFAULT_BANDS
    }


def _render_bands(
    rng: np.random.Generator,
    template: StudyTemplate,
    duration_s: float,
    factors_db: dict[str, dict[Region, float]],
) -> Recording:
    n = round(duration_s * template.fs)
    t = np.arange(n) / template.fs
    region_of = _region_of(template)
    data = np.zeros((len(template.channels), n))
    for band in DEFAULT_BANDS:
        phase = rng.uniform(0.0, 2 * np.pi)  # common across channels: zero lag
        carrier = np.sin(2 * np.pi * BAND_CARRIERS[band.name] * t + phase)
        base = template.band_amplitudes_uv[band.name]
        for ch_idx, ch in enumerate(template.channels):
            region = region_of[ch]
            amp = base * 10 ** (factors_db[band.name][region] / 20.0)
            data[ch_idx] += amp * carrier
    data += template.noise_sigma_uv * rng.standard_normal(data.shape)
    return Recording(channels=template.channels, fs=template.fs, data=data)


def _word_responses(
    rng: np.random.Generator, n_items: int, n_correct: int
) -> list[WordPairResponse]:
    out = []
    for k in range(n_items):
        target = f"target{k:03d}"
        if k < n_correct:
            # every fifth correct answer exercises the distance-1 typo rule
            answer = target[:-1] if k % 5 == 4 else target
        else:
            answer = ""
        out.append(WordPairResponse(cue=f"cue{k:03d}", target=target, response=answer))
    return out


def _recognition_responses(
    n_old: int, n_new: int, correct_old: int, correct_new: int, correct_loc: int
) -> list[RecognitionResponse]:
    out = []
    for k in range(n_old):
        truth_quadrant = k % 4 + 1
        answered_old = k < correct_old
        if answered_old:
            if k < correct_loc:
                answer = truth_quadrant
            else:
                answer = truth_quadrant % 4 + 1  # guaranteed wrong quadrant
        else:
            answer = None
        out.append(
            RecognitionResponse(
                stimulus_id=f"old{k:03d}",
                is_old=True,
                answered_old=answered_old,
                location_truth=truth_quadrant,
                location_answer=answer,
            )
        )
    for k in range(n_new):
        out.append(
            RecognitionResponse(
                stimulus_id=f"new{k:03d}",
                is_old=False,
                answered_old=k >= correct_new,
            )
        )
    return out


def _location_counts(n_hits: int, target_score: float) -> int:
    """Correct-location count whose score (2c - n)/n best matches target."""
    c = round(n_hits * (1.0 + target_score) / 2.0)
    return int(np.clip(c, 0, n_hits))


def gen_study(template: StudyTemplate) -> StudyData:
    """Generate a full synthetic study with planted, recoverable effects.

    Planted structure (all recorded in the returned truth dicts):
      * word-pairs delayed gain of roughly word_gain_mean items;
      * central spindle nap power correlated with location-memory gain at
        spindle_location_r;
      * nap gamma power correlated with the delayed-immediate change in
        recall gamma power at recall_gamma_r;
      * any explicit recall_shifts applied to delayed-session recordings.
    """
    rng = np.random.default_rng(template.seed)
    n_events = {
        Task.WORD_PAIRS: template.word_items,
        Task.PICTURE: 2 * template.vis_items,
        Task.LOCATION: 2 * template.vis_items,
    }
    subjects = []
    for s in range(template.n_subjects):
        srng = np.random.default_rng(np.random.SeedSequence(template.seed, spawn_key=(s,)))
        u_spindle = srng.normal()
        v_gamma = srng.normal()
        eps_loc = srng.normal()
        w_gamma = srng.normal()

        nap_factors = _band_region_factors_db(srng, template)
        nap_factors["spindle"][Region.CENTRAL] = template.spindle_db_spread * u_spindle
        for region in REGIONS:
            nap_factors["gamma"][region] = template.gamma_db_spread * v_gamma

        nap = _render_bands(
            srng, template, template.nap_minutes * 60.0, nap_factors
        )

        # recall recordings per task and session
        recall_factors = _band_region_factors_db(srng, template)
        if template.recall_gamma_r is not None:
            rho = template.recall_gamma_r
            gamma_diff_db = template.recall_gamma_effect_db * (
                rho * v_gamma + math.sqrt(1 - rho * rho) * w_gamma
            )
        else:
            gamma_diff_db = 0.0
        recordings: dict[tuple[Task, Session], Recording] = {}
        events: list[EventRecord] = []
        for task in Task:
            count = n_events[task]
            duration = 2 * template.recall_lead_s + count * template.event_spacing_s
            for session in (Session.IMMEDIATE, Session.DELAYED):
                factors = {b: dict(v) for b, v in recall_factors.items()}
                if session == Session.DELAYED:
                    for region in REGIONS:
                        factors["gamma"][region] = (
                            recall_factors["gamma"][region] + gamma_diff_db
                        )
                    for shift in template.recall_shifts:
                        if shift.task == task:
                            factors[shift.band][shift.region] = (
                                factors[shift.band][shift.region] + shift.delta_db
                            )
                recordings[(task, session)] = _render_bands(
                    srng, template, duration, factors
                )
                for k in range(count):
                    events.append(
                        EventRecord(
                            task=task,
                            session=session,
                            onset_s=template.recall_lead_s
                            + k * template.event_spacing_s,
                            stimulus_id=f"{task.value}{k:03d}",
                        )
                    )

        # behavioral responses
        word_gain = max(1, round(srng.normal(template.word_gain_mean, template.word_gain_sd)))
        word_imm = int(
            np.clip(
                round(template.word_items * 0.5 + srng.normal(0.0, 2.0)),
                0,
                template.word_items - word_gain,
            )
        )
        p_old_imm = float(np.clip(0.80 + srng.normal(0.0, 0.05), 0.3, 1.0))
        p_new_imm = float(np.clip(0.85 + srng.normal(0.0, 0.05), 0.3, 1.0))
        p_old_del = float(np.clip(0.80 + srng.normal(0.0, 0.05), 0.3, 1.0))
        p_new_del = float(np.clip(0.85 + srng.normal(0.0, 0.05), 0.3, 1.0))
        if template.spindle_location_r is not None:
            r = template.spindle_location_r
            loc_gain = template.location_gain_scale * (
                r * u_spindle + math.sqrt(1 - r * r) * eps_loc
            )
        else:
            loc_gain = template.location_gain_scale * eps_loc
        loc_imm_target = 0.2
        loc_del_target = float(np.clip(loc_imm_target + loc_gain, -1.0, 1.0))

        correct_old_imm = round(p_old_imm * template.vis_items)
        correct_old_del = round(p_old_del * template.vis_items)
        responses = []
        responses += [
            (Task.WORD_PAIRS, Session.IMMEDIATE, resp)
            for resp in _word_responses(srng, template.word_items, word_imm)
        ]
        responses += [
            (Task.WORD_PAIRS, Session.DELAYED, resp)
            for resp in _word_responses(
                srng, template.word_items, word_imm + word_gain
            )
        ]
        recog_imm = _recognition_responses(
            template.vis_items,
            template.vis_items,
            correct_old_imm,
            round(p_new_imm * template.vis_items),
            _location_counts(correct_old_imm, loc_imm_target),
        )
        recog_del = _recognition_responses(
            template.vis_items,
            template.vis_items,
            correct_old_del,
            round(p_new_del * template.vis_items),
            _location_counts(correct_old_del, loc_del_target),
        )
        responses += [(Task.PICTURE, Session.IMMEDIATE, resp) for resp in recog_imm]
        responses += [(Task.PICTURE, Session.DELAYED, resp) for resp in recog_del]

        loc_imm = (2 * _location_counts(correct_old_imm, loc_imm_target) - correct_old_imm) / correct_old_imm
        loc_del = (2 * _location_counts(correct_old_del, loc_del_target) - correct_old_del) / correct_old_del
        truth = {
            "u_spindle": u_spindle,
            "v_gamma": v_gamma,
            "word_gain": word_gain,
            "location_gain": loc_del - loc_imm,
            "recall_gamma_diff_db": gamma_diff_db,
            "central_spindle_db_offset": template.spindle_db_spread * u_spindle,
        }
        session_obj = SubjectSession(
            subject_id=_subject_id(s),
            nap_recording=nap,
            recall_recordings=recordings,
            events=tuple(events),
            responses=tuple(responses),
            questionnaires={
                "psqi": float(srng.integers(9, 15)),
                "sss_pre": float(srng.integers(1, 4)),
                "sss_post": float(srng.integers(1, 4)),
            },
        )
        subjects.append(SubjectData(session=session_obj, truth=truth))
    return StudyData(
        template=template,
        subjects=tuple(subjects),
        truth={
            "spindle_location_r": template.spindle_location_r,
            "recall_gamma_r": template.recall_gamma_r,
            "word_gain_mean": template.word_gain_mean,
        },
    )


def write_study(study: StudyData, out_dir, stats_seed: int = 20240915, r: int = 1000):
    """Write a generated study in the layout the pipeline ingests.

    Produces one directory per subject (nap and recall CSVs with metadata
    sidecars, event log, response log, subject metadata) plus a
    study.yaml manifest echoing the matching preprocessing parameters.
    Output is byte-identical for identical template seeds.
    """
    from pathlib import Path

    import yaml

    from . import io as npio

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    template = study.template
    subject_entries = []
    for sub in study.subjects:
        session = sub.session
        sub_dir = out_dir / session.subject_id
        sub_dir.mkdir(parents=True, exist_ok=True)
        npio.save_recording(
            session.nap_recording,
            sub_dir / "nap.csv",
            sub_dir / "nap.meta.yaml",
            subject_id=session.subject_id,
        )
        for (task, sess), rec in sorted(
            session.recall_recordings.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
        ):
            stem = f"recall_{task.value}_{sess.value}"
            npio.save_recording(
                rec,
                sub_dir / f"{stem}.csv",
                sub_dir / f"{stem}.meta.yaml",
                subject_id=session.subject_id,
            )
        npio.save_events(list(session.events), sub_dir / "events.csv")
        npio.save_responses(list(session.responses), sub_dir / "responses.csv")
        (sub_dir / "subject.yaml").write_text(
            yaml.safe_dump(
                {
                    "subject_id": session.subject_id,
                    "questionnaires": {
                        k: float(v) for k, v in sorted(session.questionnaires.items())
                    },
                },
                sort_keys=True,
            ),
            encoding="utf-8",
        )
        subject_entries.append({"id": session.subject_id, "dir": session.subject_id})
    manifest = {
        "subjects": subject_entries,
        "preprocessing": {
            "target_fs": float(template.fs),
            "low_hz": 0.5,
            "high_hz": 50.0,
            "filter_order": 4,
            "trim_s": float(template.trim_s),
            "epoch_s": float(template.epoch_s),
            "threshold_uv": 100.0,
        },
        "regions": {"exclude": ["FCz", "AFz"]},
        "stats": {"r": int(r), "seed": int(stats_seed), "alpha": 0.05},
    }
    (out_dir / "study.yaml").write_text(
        yaml.safe_dump(manifest, sort_keys=True), encoding="utf-8"
    )
    return out_dir / "study.yaml"
