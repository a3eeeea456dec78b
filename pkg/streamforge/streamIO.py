"""Files read and written by streamforge: JSON-lines event streams,
definition and targets files, static CSV logs and result tables.
"""
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from .eventStream import Event, Lifecycle, Stream
from .featureOptimizer import GridCell, RunConfig
from .simulation import StreamDefinition
from .spaceAnalysis import BENCHMARK_LOG, GENERATED
from .streamFeatures import ALL_FEATURES, FeatureVector

logger = logging.getLogger(__name__)

RECORD_KEYS = (
    "case", "activity", "ts", "lifecycle", "arrival", "parent_case", "source"
)
FEATURE_HEADER = ("window_idx",) + ALL_FEATURES
GRID_HEADER = (
    "feature_a", "feature_b", "target_a", "target_b", "best_distance",
    "trials_used",
)
LOG_LIFECYCLES = {
    "start": Lifecycle.START,
    "complete": Lifecycle.END,
    "end": Lifecycle.END,
}


class StreamFormatError(ValueError):
    """Malformed input file.

    Parameters
    ----------
    message : str
        Description of the problem.
    lineno : int, optional
        One-based line of the offending record.
    path : str, optional
        File the record was read from.
    """
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = None if path is None else str(path)
        where = ""
        if self.path is not None:
            where = self.path
        if lineno is not None:
            where = f"{where}:{lineno}" if where else f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)


##############################
# EVENT RECORDS

def event_to_record(event, suppress_case_ids=False):
    """Dictionary form of `event`, keys in record order."""
    record = {
        "case": event.case,
        "activity": event.activity,
        "ts": event.ts,
        "lifecycle": event.lifecycle.value,
        "arrival": event.arrival,
    }
    if event.parent_case is not None:
        record["parent_case"] = event.parent_case
    if event.source is not None:
        record["source"] = event.source
    if suppress_case_ids:
        record.pop("case")
        record.pop("parent_case", None)
    return record


def encode_event(event, suppress_case_ids=False):
    """One JSON line, without the trailing newline."""
    return json.dumps(
        event_to_record(event, suppress_case_ids), separators=(",", ":")
    )


def record_to_event(record):
    """Inverse of :func:`event_to_record`; a missing case reads as ``""``.

    Raises
    ------
    ValueError
        On unknown or missing keys and invalid values.
    """
    if not isinstance(record, dict):
        raise ValueError(f"Record must be an object, got {type(record).__name__}")
    unknown = set(record) - set(RECORD_KEYS)
    if unknown:
        raise ValueError(f"Unknown record keys {sorted(unknown)}")
    for key in ("activity", "ts", "lifecycle", "arrival"):
        if key not in record:
            raise ValueError(f"Record misses {key!r}")
    for key in ("ts", "arrival"):
        if not isinstance(record[key], int) or isinstance(record[key], bool):
            raise ValueError(f"{key} must be an integer, got {record[key]!r}")
    return Event(
        case=str(record.get("case", "")),
        activity=str(record["activity"]),
        ts=record["ts"],
        lifecycle=Lifecycle(record["lifecycle"]),
        arrival=record["arrival"],
        parent_case=record.get("parent_case"),
        source=record.get("source"),
    )


def parse_line(line, lineno=None, path=None):
    """Event of one JSON line.

    Raises
    ------
    StreamFormatError
        If the line is not a valid record.
    """
    try:
        return record_to_event(json.loads(line))
    except (ValueError, TypeError) as err:
        raise StreamFormatError(str(err), lineno, path) from err


def iter_lines(stream, suppress_case_ids=False):
    """Encoded lines of `stream`, newline-terminated."""
    for event in stream:
        yield encode_event(event, suppress_case_ids) + "\n"


def write_stream(stream, path, suppress_case_ids=False):
    """Write `stream` as JSON lines in arrival order."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.writelines(iter_lines(stream, suppress_case_ids))


def read_stream(path):
    """Read a JSON-lines stream file.

    Raises
    ------
    StreamFormatError
        On malformed records or lines out of arrival order.
    """
    events = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            event = parse_line(line, lineno, path)
            if events and event.arrival < events[-1].arrival:
                raise StreamFormatError(
                    "record arrives before its predecessor", lineno, path
                )
            events.append(event)
    return Stream(events)


##############################
# DEFINITIONS AND CONFIGURATION

def _load_json(path):
    with open(path, encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as err:
            raise StreamFormatError(err.msg, err.lineno, path) from err


def save_definition(definition, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(definition.to_dict(), f, indent=2)
        f.write("\n")


def load_definition(path):
    """Read a definition file.

    Raises
    ------
    StreamFormatError
        On invalid JSON, unknown fields or an unsupported version.
    """
    data = _load_json(path)
    try:
        return StreamDefinition.from_dict(data)
    except (KeyError, TypeError, ValueError) as err:
        raise StreamFormatError(f"invalid definition: {err}", path=path) from err


def load_run_config(path):
    """Read a targets file into a :class:`RunConfig`."""
    data = _load_json(path)
    try:
        return RunConfig.from_dict(data)
    except (TypeError, ValueError) as err:
        raise StreamFormatError(f"invalid targets file: {err}", path=path) \
            from err


def save_run_config(config, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(config.to_dict(), f, indent=2)
        f.write("\n")


##############################
# STATIC LOGS

def _ticks(column, tick_seconds, path):
    numeric = pd.to_numeric(column, errors="coerce")
    if not numeric.isna().any():
        if (numeric < 0).any() or (numeric != np.floor(numeric)).any():
            bad = int(np.argmax((numeric < 0) | (numeric != np.floor(numeric))))
            raise StreamFormatError(
                "integer timestamps must be non-negative", bad + 2, path
            )
        return numeric.astype("int64")
    stamps = pd.to_datetime(column, utc=True, errors="coerce")
    if stamps.isna().any():
        bad = int(np.argmax(stamps.isna().to_numpy()))
        raise StreamFormatError(
            f"unparseable timestamp {column.iloc[bad]!r}", bad + 2, path
        )
    seconds = (stamps - stamps.min()).dt.total_seconds()
    return np.floor(seconds / tick_seconds).astype("int64")


def read_static_log(path, tick_seconds=1.0):
    """Read a CSV event log.

    Required columns are ``case_id``, ``activity`` and ``timestamp``
    (integer ticks or ISO-8601); an optional ``lifecycle`` column holds
    ``start``, ``complete`` or ``end``. ISO-8601 timestamps are turned into
    ticks of `tick_seconds` from the earliest one.

    Returns
    -------
    pandas.DataFrame
        Columns ``case``, ``activity``, ``ts`` and ``lifecycle`` (``None``
        for atomic rows), in file order.
    """
    if tick_seconds <= 0:
        raise ValueError(f"tick_seconds must be positive, got {tick_seconds}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as err:
        raise StreamFormatError(str(err), path=path) from err
    missing = {"case_id", "activity", "timestamp"} - set(frame.columns)
    if missing:
        raise StreamFormatError(f"missing columns {sorted(missing)}", 1, path)

    lifecycle = [None] * len(frame)
    if "lifecycle" in frame.columns:
        lifecycle = []
        for i, value in enumerate(frame["lifecycle"].str.strip().str.lower()):
            if value == "":
                lifecycle.append(None)
            elif value in LOG_LIFECYCLES:
                lifecycle.append(LOG_LIFECYCLES[value])
            else:
                raise StreamFormatError(
                    f"unknown lifecycle {value!r}", i + 2, path
                )
    return pd.DataFrame({
        "case": frame["case_id"],
        "activity": frame["activity"],
        "ts": _ticks(frame["timestamp"], tick_seconds, path),
        "lifecycle": lifecycle,
    })


def streamify(log):
    """Replay a static log in timestamp order.

    Atomic rows become a start and an end event at the same timestamp. Events
    are stably sorted by timestamp and arrive at their rank, so the stream is
    temporally ordered and flat.

    Parameters
    ----------
    log : pandas.DataFrame
        As returned by :func:`read_static_log`.

    Returns
    -------
    Stream
    """
    rows = []
    for case, activity, ts, lifecycle in log.itertuples(index=False):
        if lifecycle is None:
            rows.append((int(ts), case, activity, Lifecycle.START))
            rows.append((int(ts), case, activity, Lifecycle.END))
        else:
            rows.append((int(ts), case, activity, lifecycle))
    order = sorted(range(len(rows)), key=lambda i: rows[i][0])
    return Stream([
        Event(str(rows[i][1]), str(rows[i][2]), rows[i][0], rows[i][3], rank)
        for rank, i in enumerate(order)
    ])


##############################
# RESULT TABLES

def write_features(vectors, path):
    """Write one row per window with six decimals."""
    frame = pd.DataFrame(
        [[i] + [v.get(k, np.nan) for k in ALL_FEATURES]
         for i, v in enumerate(vectors)],
        columns=list(FEATURE_HEADER),
    )
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")


def read_features(path):
    frame = pd.read_csv(path)
    if list(frame.columns[:1]) != ["window_idx"]:
        raise StreamFormatError("feature table misses 'window_idx'", 1, path)
    columns = [c for c in frame.columns if c in ALL_FEATURES]
    try:
        return [
            FeatureVector({c: row[c] for c in columns if not pd.isna(row[c])})
            for _, row in frame.iterrows()
        ]
    except ValueError as err:
        raise StreamFormatError(str(err), path=path) from err


def _achieved_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".achieved.csv")


def write_grid(cells, path):
    """Write the grid table and, next to it, the achieved values of each
    cell in ``<name>.achieved.csv``.
    """
    frame = pd.DataFrame(
        [[getattr(c, k) for k in GRID_HEADER] for c in cells],
        columns=list(GRID_HEADER),
    )
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")
    achieved = frame[list(GRID_HEADER[:4])].copy()
    achieved["achieved_a"] = [c.achieved_value(c.feature_a) for c in cells]
    achieved["achieved_b"] = [c.achieved_value(c.feature_b) for c in cells]
    achieved.to_csv(
        _achieved_path(path), index=False, float_format="%.6f",
        lineterminator="\n",
    )


def read_grid(path):
    """Read grid cells, with achieved values when the companion file
    exists.
    """
    frame = pd.read_csv(path)
    if tuple(frame.columns) != GRID_HEADER:
        raise StreamFormatError(
            f"grid header must be {','.join(GRID_HEADER)}", 1, path
        )
    achieved = [None] * len(frame)
    companion = _achieved_path(path)
    if companion.exists():
        extra = pd.read_csv(companion)
        achieved = [
            {r.feature_a: r.achieved_a, r.feature_b: r.achieved_b}
            for r in extra.itertuples(index=False)
        ]
    return [
        GridCell(
            r.feature_a, r.feature_b, float(r.target_a), float(r.target_b),
            float(r.best_distance), int(r.trials_used), a,
        )
        for r, a in zip(frame.itertuples(index=False), achieved)
    ]


def write_history(run, path):
    """Write the trials of an optimization run."""
    frame = pd.DataFrame([t.values for t in run.trials])
    frame.insert(0, "best_so_far", run.best_so_far())
    frame.insert(0, "distance", [t.distance for t in run.trials])
    frame.insert(0, "trial", range(len(run.trials)))
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")


def write_sweep(results, path):
    """Write dimension values and achieved features of sweep points."""
    frame = pd.DataFrame([
        {**values, **{k: vector.get(k, np.nan) for k in ALL_FEATURES}}
        for values, vector in results
    ])
    frame.to_csv(path, index=False, float_format="%.6f", lineterminator="\n")


def write_ranges(ranges, path, n_points=None):
    """Write per-feature ``(min, max)`` ranges, as given by
    :func:`~streamforge.spaceAnalysis.feature_ranges`, to a JSON file.
    """
    data = {
        "n_points": n_points,
        "ranges": {
            k: [float(lo), float(hi)] for k, (lo, hi) in sorted(ranges.items())
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def read_ranges(path):
    """Read a ranges file written by :func:`write_ranges`.

    Raises
    ------
    StreamFormatError
        On unknown features or ranges that are not ``[min, max]`` pairs.
    """
    data = _load_json(path)
    try:
        ranges = {}
        for k, (lo, hi) in data["ranges"].items():
            if k not in ALL_FEATURES:
                raise ValueError(f"unknown feature {k!r}")
            if lo > hi:
                raise ValueError(f"empty range for {k}")
            ranges[k] = (float(lo), float(hi))
    except (KeyError, TypeError, ValueError) as err:
        raise StreamFormatError(f"invalid ranges file: {err}", path=path) \
            from err
    return ranges


def write_report(report, out_dir):
    """Write ``pca.csv``, ``hulls.csv`` and ``gaps.txt`` of a space
    comparison into `out_dir`.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    coords = report.projection.coords
    pd.DataFrame({
        "source": report.matrix.sources,
        "label": report.matrix.labels,
        "pc1": coords[:, 0],
        "pc2": coords[:, 1],
    }).to_csv(
        out_dir / "pca.csv", index=False, float_format="%.6f",
        lineterminator="\n",
    )

    hull_rows = []
    for label, vertices in report.hulls.items():
        for order, (x, y) in enumerate([] if vertices is None else vertices):
            hull_rows.append((label, order, x, y))
    pd.DataFrame(hull_rows, columns=["label", "vertex", "pc1", "pc2"]).to_csv(
        out_dir / "hulls.csv", index=False, float_format="%.6f",
        lineterminator="\n",
    )

    with open(out_dir / "gaps.txt", "w", encoding="utf-8", newline="\n") as f:
        for feature in report.gaps:
            lo, hi = report.ranges[BENCHMARK_LOG][feature]
            glo, ghi = report.ranges[GENERATED][feature]
            f.write(
                f"{feature}\tlogs [{lo:.6f}, {hi:.6f}]\t"
                f"generated [{glo:.6f}, {ghi:.6f}]\n"
            )


def write_summary(summary, path):
    summary.to_frame().to_csv(path, lineterminator="\n")
