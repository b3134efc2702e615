"""CSV and sidecar serialization for recordings, epochs, tables, and logs.

Data interchange is deliberately plain: UTF-8 comma-delimited CSV with a
header row of channel labels, plus a key/value metadata sidecar. Floats
are written with shortest round-trip precision so load(save(x)) == x
bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .behavior import RecognitionResponse, WordPairResponse
from .model import (
    BandRegionTable,
    Condition,
    EpochSet,
    EventRecord,
    Recording,
    Session,
    Task,
    ValidationError,
)


def _write_float_csv(frame: pd.DataFrame, path: Path) -> None:
    # shortest round-trip float formatting keeps load(save(x)) bit-exact
    frame.to_csv(
        path,
        index=False,
        lineterminator="\n",
        float_format=lambda v: repr(float(v)),
    )


def save_recording(
    rec: Recording,
    path: str | Path,
    meta_path: str | Path,
    subject_id: str | None = None,
) -> None:
    """Write channels-as-columns CSV plus a metadata sidecar."""
    path, meta_path = Path(path), Path(meta_path)
    frame = pd.DataFrame(rec.data.T, columns=list(rec.channels))
    _write_float_csv(frame, path)
    meta = {
        "fs": float(rec.fs),
        "units": "uV",
        "start_offset_s": float(rec.start_offset_s),
        "channels": list(rec.channels),
    }
    if subject_id is not None:
        meta["subject_id"] = subject_id
    meta_path.write_text(yaml.safe_dump(meta, sort_keys=True), encoding="utf-8")


def load_recording(path: str | Path, meta_path: str | Path) -> Recording:
    """Load a recording from CSV data and its metadata sidecar.

    The CSV holds channels as columns of µV values with a label header;
    the sidecar declares fs, channel order, and start_offset_s. Trailing
    blank lines are ignored.
    """
    path, meta_path = Path(path), Path(meta_path)
    try:
        meta = yaml.safe_load(meta_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read metadata {meta_path}: {exc}") from exc
    if not isinstance(meta, dict) or "fs" not in meta:
        raise ValidationError(f"metadata {meta_path} must declare fs")
    fs = float(meta["fs"])
    if fs <= 0:
        raise ValidationError(f"metadata declares fs <= 0: {fs}")
    try:
        frame = pd.read_csv(path, skip_blank_lines=True, float_precision="round_trip")
    except OSError as exc:
        raise ValidationError(f"cannot read data {path}: {exc}") from exc
    channels = tuple(str(c) for c in frame.columns)
    declared = meta.get("channels")
    if declared is not None:
        declared = tuple(str(c) for c in declared)
        if len(declared) != len(channels):
            raise ValidationError(
                f"channel count mismatch: metadata lists {len(declared)}, "
                f"CSV has {len(channels)} columns"
            )
        if declared != channels:
            raise ValidationError("channel order differs between metadata and CSV")
    values = frame.to_numpy()
    if not np.issubdtype(values.dtype, np.number):
        bad = frame.columns[
            [not np.issubdtype(d, np.number) for d in frame.dtypes]
        ].tolist()
        raise ValidationError(f"non-numeric cells in columns {bad}")
    return Recording(
        channels=channels,
        fs=fs,
        data=values.T.astype(float),
        start_offset_s=float(meta.get("start_offset_s", 0.0)),
    )


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def save_table(table: BandRegionTable, path: str | Path) -> None:
    """Write a band x region(-pair) table as CSV plus a JSON sidecar.

    The CSV has one row per band and one value column per region or
    region pair in the fixed order; the sidecar records the metric and
    per-cell n_epochs_used. Reload with :func:`load_table` is bit-exact.
    """
    path = Path(path)
    frame = pd.DataFrame(table.values, columns=list(table.columns))
    frame.insert(0, "band", list(table.bands))
    try:
        _write_float_csv(frame, path)
    except OSError as exc:
        raise ValidationError(f"cannot write table {path}: {exc}") from exc
    sidecar = {
        "metric": table.metric,
        "bands": list(table.bands),
        "columns": list(table.columns),
        "n_epochs_used": table.n_epochs_used.tolist(),
    }
    _sidecar_path(path).write_text(
        json.dumps(sidecar, indent=2, sort_keys=True), encoding="utf-8"
    )


def load_table(path: str | Path) -> BandRegionTable:
    path = Path(path)
    sidecar = json.loads(_sidecar_path(path).read_text(encoding="utf-8"))
    frame = pd.read_csv(path, float_precision="round_trip")
    bands = tuple(frame["band"].astype(str))
    columns = tuple(str(c) for c in frame.columns[1:])
    if list(bands) != list(sidecar["bands"]) or list(columns) != list(
        sidecar["columns"]
    ):
        raise ValidationError(f"table sidecar disagrees with CSV for {path}")
    return BandRegionTable(
        metric=sidecar["metric"],
        bands=bands,
        columns=columns,
        values=frame[list(columns)].to_numpy(dtype=float),
        n_epochs_used=np.asarray(sidecar["n_epochs_used"], dtype=int),
    )


def save_epochs(epochs: EpochSet, path: str | Path) -> None:
    """Write an epoch set as a wide CSV plus a YAML sidecar.

    Rows are (epoch, channel) pairs followed by the sample values; the
    sidecar holds fs, condition, session, rejection flags, and start
    times. Round-trip via :func:`load_epochs` is lossless.
    """
    path = Path(path)
    n_ep, n_ch, n_s = epochs.data.shape
    flat = epochs.data.reshape(n_ep * n_ch, n_s)
    frame = pd.DataFrame(flat, columns=[f"s{i}" for i in range(n_s)])
    frame.insert(0, "channel", list(epochs.channels) * n_ep)
    frame.insert(0, "epoch", np.repeat(np.arange(n_ep), n_ch))
    _write_float_csv(frame, path)
    meta = {
        "fs": float(epochs.fs),
        "channels": list(epochs.channels),
        "condition": epochs.condition.value,
        "session": epochs.session.value,
        "rejected": [bool(x) for x in epochs.rejected],
        "start_times_s": [float(x) for x in epochs.start_times_s],
        "skipped_events": [list(x) for x in epochs.skipped_events],
    }
    path.with_name(path.stem + ".meta.yaml").write_text(
        yaml.safe_dump(meta, sort_keys=True), encoding="utf-8"
    )


def load_epochs(path: str | Path) -> EpochSet:
    path = Path(path)
    meta = yaml.safe_load(
        path.with_name(path.stem + ".meta.yaml").read_text(encoding="utf-8")
    )
    frame = pd.read_csv(path, float_precision="round_trip")
    channels = tuple(meta["channels"])
    n_ch = len(channels)
    sample_cols = [c for c in frame.columns if c.startswith("s") and c[1:].isdigit()]
    flat = frame[sample_cols].to_numpy(dtype=float)
    if flat.shape[0] % n_ch:
        raise ValidationError(f"epoch CSV rows not a multiple of {n_ch} channels")
    data = flat.reshape(flat.shape[0] // n_ch, n_ch, len(sample_cols))
    return EpochSet(
        channels=channels,
        fs=float(meta["fs"]),
        data=data,
        condition=Condition(meta["condition"]),
        session=Session(meta["session"]),
        rejected=np.asarray(meta["rejected"], dtype=bool),
        start_times_s=np.asarray(meta["start_times_s"], dtype=float),
        skipped_events=tuple(
            (float(t), str(reason)) for t, reason in meta.get("skipped_events", [])
        ),
    )


def save_events(events: list[EventRecord] | tuple[EventRecord, ...], path: str | Path) -> None:
    frame = pd.DataFrame(
        {
            "task": [e.task.value for e in events],
            "session": [e.session.value for e in events],
            "onset_s": [e.onset_s for e in events],
            "stimulus_id": [e.stimulus_id for e in events],
        }
    )
    _write_float_csv(frame, Path(path))


def load_events(path: str | Path) -> list[EventRecord]:
    frame = pd.read_csv(path, float_precision="round_trip")
    return [
        EventRecord(
            task=Task(row.task),
            session=Session(row.session),
            onset_s=float(row.onset_s),
            stimulus_id=str(row.stimulus_id),
        )
        for row in frame.itertuples()
    ]


_RESPONSE_COLUMNS = [
    "task",
    "session",
    "stimulus_id",
    "truth",
    "response",
    "quadrant_truth",
    "quadrant_answer",
]


def save_responses(responses, path: str | Path) -> None:
    """Write behavioral responses in the shared long CSV layout.

    Word-pair rows use stimulus_id=cue, truth=target, response=typed
    answer. Recognition rows use truth in {old, new}, response in {o, n},
    and the quadrant columns for location memory (old items only).
    """
    rows = []
    for task, session, resp in responses:
        if isinstance(resp, WordPairResponse):
            rows.append(
                {
                    "task": task.value,
                    "session": session.value,
                    "stimulus_id": resp.cue,
                    "truth": resp.target,
                    "response": resp.response,
                    "quadrant_truth": "",
                    "quadrant_answer": "",
                }
            )
        elif isinstance(resp, RecognitionResponse):
            rows.append(
                {
                    "task": task.value,
                    "session": session.value,
                    "stimulus_id": resp.stimulus_id,
                    "truth": "old" if resp.is_old else "new",
                    "response": "o" if resp.answered_old else "n",
                    "quadrant_truth": "" if resp.location_truth is None else resp.location_truth,
                    "quadrant_answer": "" if resp.location_answer is None else resp.location_answer,
                }
            )
        else:
            raise ValidationError(f"unknown response type {type(resp).__name__}")
    frame = pd.DataFrame(rows, columns=_RESPONSE_COLUMNS)
    _write_float_csv(frame, Path(path))


def load_responses(path: str | Path):
    """Read the response log; returns (task, session, response) triples."""
    frame = pd.read_csv(path, keep_default_na=False)
    out = []
    for row in frame.itertuples():
        task = Task(row.task)
        session = Session(row.session)
        if task == Task.WORD_PAIRS:
            resp = WordPairResponse(
                cue=str(row.stimulus_id),
                target=str(row.truth),
                response=str(row.response),
            )
        else:
            truth = str(row.truth).strip().lower()
            if truth not in ("old", "new"):
                raise ValidationError(f"recognition truth must be old/new, got {truth!r}")
            qt = str(row.quadrant_truth).strip()
            qa = str(row.quadrant_answer).strip()
            resp = RecognitionResponse(
                stimulus_id=str(row.stimulus_id),
                is_old=truth == "old",
                answered_old=str(row.response).strip().lower() == "o",
                location_truth=int(float(qt)) if qt else None,
                location_answer=int(float(qa)) if qa else None,
            )
        out.append((task, session, resp))
    return out


def load_adjudications(path: str | Path) -> dict[tuple[str, str], str]:
    """Read the (cue, response, accept|reject) override file."""
    frame = pd.read_csv(path, keep_default_na=False)
    out: dict[tuple[str, str], str] = {}
    for row in frame.itertuples():
        verdict = str(row.adjudication).strip().lower()
        if verdict not in ("accept", "reject"):
            raise ValidationError(f"adjudication must be accept/reject, got {verdict!r}")
        out[(str(row.cue).strip().lower(), str(row.response).strip().lower())] = verdict
    return out
