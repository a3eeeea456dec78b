"""Tumbling windows over event streams and the per-window stream features.

All features are bounded in ``[0, 1]``:

- ``temporal_dep``: share of next-activity entropy explained by the previous
  activity within a case.
- ``non_linear_dep``: share of the remaining entropy explained by also
  knowing the activity before the previous one.
- ``long_term_dep``: mutual information between the first and last activity
  of completed cases, relative to the entropy of the last one.
- ``out_of_order``: share of events arriving after an event with a later
  timestamp.
- ``fractal``: share of events belonging to nested sub-cases.
"""
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .eventStream import concurrency_profile, pair_intervals
from .utility import conditional_entropy, entropy, mutual_information

FEATURES = (
    "temporal_dep", "long_term_dep", "non_linear_dep", "out_of_order",
    "fractal",
)
AUXILIARY = ("avg_concurrency", "mean_displacement")
ALL_FEATURES = FEATURES + AUXILIARY

_EPS = 1e-12


class FeatureVector(Mapping):
    """Immutable mapping from feature id to a value in ``[0, 1]``.

    Parameters
    ----------
    values : mapping
        Feature id to value; any subset of :data:`ALL_FEATURES`.

    Raises
    ------
    ValueError
        On unknown feature ids, NaN or values outside ``[0, 1]``.
    """
    def __init__(self, values=None, **kwargs):
        values = dict(values or {}, **kwargs)
        unknown = set(values) - set(ALL_FEATURES)
        if unknown:
            raise ValueError(f"Unknown features: {sorted(unknown)}")
        self._values = {}
        for key in ALL_FEATURES:
            if key not in values:
                continue
            v = float(values[key])
            if np.isnan(v) or v < -1e-9 or v > 1 + 1e-9:
                raise ValueError(f"Feature {key} = {v} is outside [0, 1]")
            self._values[key] = min(max(v, 0.0), 1.0)

    def __getitem__(self, key):
        return self._values[key]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        inner = ", ".join(f"{k}={v:.4f}" for k, v in self._values.items())
        return f"FeatureVector({inner})"

    def subset(self, keys):
        return FeatureVector({k: self._values[k] for k in keys})


class Grouping(Enum):
    """Attribute set compared by the out-of-order feature."""
    GLOBAL = "global"
    PER_CASE = "per-case"


@dataclass(frozen=True)
class WindowConfig:
    """Windowing and feature-extraction settings.

    Parameters
    ----------
    window_size : int
        Events per tumbling window, at least 10.
    grouping : Grouping
        Out-of-order comparison groups.
    l_min : int
        Minimum number of activities of a case counted by ``long_term_dep``.
    min_cases : int
        Minimum number of such cases for a non-zero ``long_term_dep``.
    kappa : float
        Concurrency level mapped to ``avg_concurrency = 1``.
    """
    window_size: int = 500
    grouping: Grouping = Grouping.GLOBAL
    l_min: int = 4
    min_cases: int = 5
    kappa: float = 10.0

    def __post_init__(self):
        if self.window_size < 10:
            raise ValueError(f"window_size must be >= 10, got {self.window_size}")
        if not isinstance(self.grouping, Grouping):
            object.__setattr__(self, "grouping", Grouping(self.grouping))


def tumble(stream, cfg):
    """Split `stream` into consecutive disjoint windows of
    ``cfg.window_size`` events, dropping the trailing partial window.
    """
    w = cfg.window_size
    return [stream[i:i + w] for i in range(0, len(stream) - w + 1, w)]


def out_of_order(window, grouping=Grouping.GLOBAL):
    """Out-of-order ratio and mean normalized displacement of a window.

    Within each group, an event is out of order when its timestamp is below
    the largest timestamp of the group members that arrived before it. Its
    displacement is that gap; the mean displacement of out-of-order events
    is divided by the timestamp span of the window.

    Returns
    -------
    (float, float)
        Ratio of out-of-order events and mean normalized displacement.
    """
    if len(window) == 0:
        return 0.0, 0.0
    grouping = Grouping(grouping)
    running_max = {}
    displacements = []
    for e in window:
        key = e.case if grouping is Grouping.PER_CASE else None
        top = running_max.get(key)
        if top is not None and e.ts < top:
            displacements.append(top - e.ts)
        else:
            running_max[key] = e.ts

    ts = [e.ts for e in window]
    span = max(ts) - min(ts)
    ratio = len(displacements) / len(window)
    if not displacements or span == 0:
        return ratio, 0.0
    return ratio, float(np.mean(displacements)) / span


def _case_sequences(window):
    """Activity sequence of start events per case, in event-time order."""
    starts = defaultdict(list)
    for pos, e in enumerate(window):
        if e.is_start:
            starts[e.case].append((e.ts, e.arrival, e.activity, pos))
    return {
        case: [x[2] for x in sorted(items)] for case, items in starts.items()
    }


def _ngrams(window, n):
    grams = []
    for seq in _case_sequences(window).values():
        grams.extend(zip(*(seq[i:] for i in range(n))))
    return list(zip(*grams)) if grams else [()] * n


def temporal_dep(window):
    """``1 - H(next | prev) / H(next)`` over directly-follows pairs; 1 when
    the next activity has zero entropy.
    """
    prev, nxt = _ngrams(window, 2)
    h_next = entropy(nxt)
    if h_next <= _EPS:
        return 1.0
    return float(np.clip(1 - conditional_entropy(nxt, prev) / h_next, 0, 1))


def non_linear_dep(window):
    """Relative entropy reduction of the next activity from adding the
    second-to-last activity to the context; 0 when ``H(next | prev)`` is 0.
    """
    prev2, prev, nxt = _ngrams(window, 3)
    h1 = conditional_entropy(nxt, prev)
    if h1 <= _EPS:
        return 0.0
    h2 = conditional_entropy(nxt, prev2, prev)
    return float(np.clip((h1 - h2) / h1, 0, 1))


def long_term_dep(window, l_min=4, min_cases=5):
    """``I(first; last) / H(last)`` over completed cases with at least
    `l_min` activities.

    A case is completed when its start and end events in the window all
    pair up, so cases cut by either window edge are left out. The feature
    is 0 with fewer than `min_cases` such cases or a constant last activity.
    """
    instances, unmatched = pair_intervals(window)
    incomplete = {e.case for e in unmatched}
    first, last = [], []
    for case, seq in _case_sequences(window).items():
        if case in incomplete or len(seq) < l_min:
            continue
        first.append(seq[0])
        last.append(seq[-1])

    if len(last) < min_cases:
        return 0.0
    h_last = entropy(last)
    if h_last <= _EPS:
        return 0.0
    return float(np.clip(mutual_information(first, last) / h_last, 0, 1))


def fractal(window):
    """Share of events in nested cases.

    An event is nested when it names a parent case, or when its case id
    extends another case id of the window by a ``.<n>`` suffix.
    """
    if len(window) == 0:
        return 0.0
    cases = {e.case for e in window}
    nested = sum(
        1 for e in window
        if e.parent_case is not None
        or ("." in e.case and e.case.rsplit(".", 1)[0] in cases)
    )
    return nested / len(window)


def avg_concurrency(window, kappa=10.0):
    """Mean concurrency at the event timestamps, divided by `kappa` and
    capped at one.
    """
    if len(window) == 0:
        return 0.0
    levels = concurrency_profile(window, [e.ts for e in window])
    return float(min(1.0, np.mean(levels) / kappa))


def extract(window, cfg=WindowConfig()):
    """Feature vector of one window."""
    ratio, displacement = out_of_order(window, cfg.grouping)
    return FeatureVector(
        temporal_dep=temporal_dep(window),
        long_term_dep=long_term_dep(window, cfg.l_min, cfg.min_cases),
        non_linear_dep=non_linear_dep(window),
        out_of_order=ratio,
        fractal=fractal(window),
        avg_concurrency=avg_concurrency(window, cfg.kappa),
        mean_displacement=displacement,
    )


def extract_stream(stream, cfg=WindowConfig()):
    """Feature vectors of every tumbling window of `stream`."""
    return [extract(w, cfg) for w in tumble(stream, cfg)]


def mean_vector(vectors):
    """Feature-wise mean of several vectors over their shared features.

    Raises
    ------
    ValueError
        If `vectors` is empty.
    """
    if not vectors:
        raise ValueError("Cannot average an empty list of feature vectors")
    keys = [k for k in ALL_FEATURES if all(k in v for v in vectors)]
    return FeatureVector({
        k: float(np.mean([v[k] for v in vectors])) for k in keys
    })


def feature_distance(v, g, subset=None):
    """Euclidean distance between `v` and target `g` over `subset`.

    Parameters
    ----------
    v : mapping
        Measured features.
    g : mapping
        Target features.
    subset : iterable of str, optional
        Features to compare, by default all features of `g`.

    Raises
    ------
    ValueError
        If the subset is empty or not shared by both vectors.
    """
    keys = list(g if subset is None else subset)
    if not keys:
        raise ValueError("Cannot compute a distance over no features")
    missing = [k for k in keys if k not in v or k not in g]
    if missing:
        raise ValueError(f"Features {missing} are not shared by both vectors")
    return float(np.linalg.norm([v[k] - g[k] for k in keys]))
