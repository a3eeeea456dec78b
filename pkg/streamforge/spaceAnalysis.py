"""Feature-space analysis: principal-component projection of feature
vectors, 2-D hulls, coverage gaps between groups of streams, and summaries
of optimization grids.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import ConvexHull, QhullError
from sklearn.decomposition import PCA
from sklearn.preprocessing import StandardScaler

from .streamFeatures import ALL_FEATURES, mean_vector

logger = logging.getLogger(__name__)

GENERATED = "Generated"
BENCHMARK_LOG = "BenchmarkLog"


@dataclass(frozen=True)
class FeatureMatrix:
    """One averaged feature vector per stream.

    Parameters
    ----------
    rows : numpy.ndarray
        Matrix of shape ``(n_streams, n_features)``.
    features : tuple of str
        Column feature ids.
    labels : tuple of str
        Group label per row, e.g. :data:`GENERATED`.
    sources : tuple of str
        Stream or log name per row.
    """
    rows: np.ndarray
    features: Tuple[str, ...]
    labels: Tuple[str, ...]
    sources: Tuple[str, ...]

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.features))
        if np.isnan(rows).any():
            raise ValueError("Feature matrix has missing values")
        if not len(rows) == len(self.labels) == len(self.sources):
            raise ValueError("Rows, labels and sources differ in length")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "sources", tuple(self.sources))

    def __len__(self):
        return len(self.rows)

    @classmethod
    def from_vectors(cls, vectors, label, sources=None, features=None):
        """Matrix of `vectors`, all sharing the same features."""
        vectors = list(vectors)
        if features is None:
            features = [k for k in ALL_FEATURES if k in vectors[0]] \
                if vectors else []
        for v in vectors:
            if set(v) != set(features):
                raise ValueError(
                    f"Vector features {sorted(v)} differ from {sorted(features)}"
                )
        if sources is None:
            sources = [f"{label}-{i}" for i in range(len(vectors))]
        return cls(
            np.array([[v[k] for k in features] for v in vectors]),
            tuple(features), (label,) * len(vectors), tuple(sources),
        )

    @classmethod
    def from_feature_csvs(cls, paths, label):
        """One row per feature CSV, averaging its windows."""
        from .streamIO import read_features

        vectors = [mean_vector(read_features(p)) for p in paths]
        return cls.from_vectors(vectors, label, [str(p) for p in paths])

    def concat(self, other):
        if self.features != other.features:
            raise ValueError("Cannot join matrices over different features")
        return FeatureMatrix(
            np.vstack([self.rows, other.rows]), self.features,
            self.labels + other.labels, self.sources + other.sources,
        )

    def to_frame(self):
        frame = pd.DataFrame(self.rows, columns=list(self.features))
        frame.insert(0, "label", list(self.labels))
        frame.insert(0, "source", list(self.sources))
        return frame


@dataclass(frozen=True)
class Projection:
    """Principal-component coordinates of a feature matrix.

    Attributes
    ----------
    coords : numpy.ndarray
        Coordinates of shape ``(n_rows, n_components)``; components beyond
        the data rank are zero.
    explained_variance_ratio : numpy.ndarray
        Variance share of each component, non-increasing.
    components : numpy.ndarray
        Loadings over the kept features.
    kept : tuple of str
        Features with non-zero variance.
    """
    coords: np.ndarray
    explained_variance_ratio: np.ndarray
    components: np.ndarray
    kept: Tuple[str, ...]


def pca_project(matrix, n_components=2):
    """Project standardized feature rows on their principal components.

    Zero-variance features are dropped before scaling. Each component is
    oriented so that its largest-magnitude loading is positive.

    Parameters
    ----------
    matrix : FeatureMatrix
        At least two rows.
    n_components : int, optional
        Number of components, by default 2.

    Returns
    -------
    Projection
        Coordinates and explained variance ratios.
    """
    if len(matrix) < 2:
        raise ValueError(f"PCA needs at least two rows, got {len(matrix)}")
    rows = matrix.rows
    keep = np.ptp(rows, axis=0) > 0
    kept = tuple(f for f, k in zip(matrix.features, keep) if k)
    coords = np.zeros((len(rows), n_components))
    ratios = np.zeros(n_components)
    if not kept:
        return Projection(coords, ratios, np.zeros((0, 0)), kept)

    scaled = StandardScaler().fit_transform(rows[:, keep])
    k = min(n_components, len(kept), len(rows) - 1)
    if k == 0:
        return Projection(coords, ratios, np.zeros((0, len(kept))), kept)
    pca = PCA(n_components=k, svd_solver="full").fit(scaled)
    components = pca.components_.copy()
    for i, comp in enumerate(components):
        if comp[np.argmax(np.abs(comp))] < 0:
            components[i] = -comp
    centered = scaled - pca.mean_
    coords[:, :k] = centered @ components.T
    ratios[:k] = pca.explained_variance_ratio_
    return Projection(coords, ratios, components, kept)


def convex_hull_2d(points):
    """Counter-clockwise hull vertices of 2-D points.

    Collinear point sets give their two extreme points.

    Raises
    ------
    ValueError
        With fewer than three distinct points.
    """
    pts = np.unique(np.asarray(points, dtype=float).reshape(-1, 2), axis=0)
    if len(pts) < 3:
        raise ValueError(f"A hull needs 3 distinct points, got {len(pts)}")
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return pts[[0, -1]]
    return pts[hull.vertices]


def hull_area(vertices):
    """Area enclosed by a vertex cycle (shoelace formula)."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2)


def feature_ranges(vectors):
    """Per-feature ``(min, max)`` over mappings of feature values."""
    values = defaultdict(list)
    for v in vectors:
        for k, x in v.items():
            values[k].append(x)
    return {k: (min(xs), max(xs)) for k, xs in values.items()}


@dataclass(frozen=True)
class SpaceReport:
    """Comparison of the feature spaces of two groups of streams.

    Attributes
    ----------
    matrix : FeatureMatrix
        Joined rows, generated first.
    projection : Projection
        Joint principal-component projection.
    hulls : dict
        Group label to hull vertices, ``None`` for degenerate groups.
    ranges : dict
        Group label to per-feature ``(min, max)``.
    gaps : list of str
        Features the logs never exceed `low` on while generated streams
        exceed `high`.
    reverse_gaps : list of str
        The same test with the groups swapped.
    """
    matrix: FeatureMatrix
    projection: Projection
    hulls: Dict[str, Optional[np.ndarray]]
    ranges: Dict[str, Dict[str, Tuple[float, float]]]
    gaps: List[str]
    reverse_gaps: List[str]


def _ranges(matrix, label):
    mask = np.array(matrix.labels) == label
    rows = matrix.rows[mask]
    return {
        f: (float(rows[:, i].min()), float(rows[:, i].max()))
        for i, f in enumerate(matrix.features)
    }


def _gaps(covering, lacking, low, high):
    return [
        f for f in covering
        if lacking[f][1] < low and covering[f][1] > high
    ]


def compare_spaces(generated, logs, low=0.05, high=0.3):
    """Jointly project two groups of streams and list coverage gaps.

    Parameters
    ----------
    generated : FeatureMatrix
        Rows of generated streams.
    logs : FeatureMatrix
        Rows of streamified logs.
    low : float, optional
        Ceiling of the lacking group on a gap feature, by default 0.05.
    high : float, optional
        Value the covering group must exceed, by default 0.3.

    Returns
    -------
    SpaceReport
    """
    if not len(generated) or not len(logs):
        raise ValueError("Both groups need at least one row")
    gen = FeatureMatrix(
        generated.rows, generated.features, (GENERATED,) * len(generated),
        generated.sources,
    )
    log = FeatureMatrix(
        logs.rows, logs.features, (BENCHMARK_LOG,) * len(logs), logs.sources,
    )
    matrix = gen.concat(log)
    projection = pca_project(matrix)

    hulls = {}
    for label in (GENERATED, BENCHMARK_LOG):
        points = projection.coords[np.array(matrix.labels) == label, :2]
        try:
            hulls[label] = convex_hull_2d(points)
        except ValueError as err:
            logger.info("Skipped hull of %s: %s", label, err)
            hulls[label] = None

    ranges = {label: _ranges(matrix, label) for label in (GENERATED, BENCHMARK_LOG)}
    return SpaceReport(
        matrix, projection, hulls, ranges,
        gaps=_gaps(ranges[GENERATED], ranges[BENCHMARK_LOG], low, high),
        reverse_gaps=_gaps(ranges[BENCHMARK_LOG], ranges[GENERATED], low, high),
    )


@dataclass(frozen=True)
class GridSummary:
    """Square summary of a feature-pair grid.

    Attributes
    ----------
    features : tuple of str
        Row and column order.
    feasible : dict
        Feature to the sorted targets reached within the threshold.
    distance : pandas.DataFrame
        Mean best distance per pair, upper triangle.
    deviation : pandas.DataFrame
        Mean absolute target deviation per pair, lower triangle.
    """
    features: Tuple[str, ...]
    feasible: Dict[str, List[float]]
    distance: pd.DataFrame
    deviation: pd.DataFrame

    def to_frame(self):
        """Single table: feasible targets on the diagonal, distances above
        and deviations below it.
        """
        frame = pd.DataFrame("", index=list(self.features),
                             columns=list(self.features), dtype=object)
        for i, a in enumerate(self.features):
            for j, b in enumerate(self.features):
                if i == j:
                    frame.loc[a, b] = " ".join(f"{t:g}" for t in self.feasible[a])
                elif i < j:
                    frame.loc[a, b] = _fmt(self.distance.loc[a, b])
                else:
                    frame.loc[a, b] = _fmt(self.deviation.loc[a, b])
        return frame


def _fmt(x):
    return "" if pd.isna(x) else f"{x:.4f}"


def summarize_grid(cells, threshold=0.07):
    """Aggregate grid cells into a :class:`GridSummary`.

    A target is feasible for a feature when some cell aiming at it achieved
    a value within `threshold`.
    """
    cells = list(cells)
    seen = {c.feature_a for c in cells} | {c.feature_b for c in cells}
    order = [f for f in ALL_FEATURES if f in seen]
    order += sorted(seen - set(order))

    feasible = {f: set() for f in order}
    dist, dev = defaultdict(list), defaultdict(list)
    for c in cells:
        pair = (c.feature_a, c.feature_b)
        if order.index(c.feature_a) > order.index(c.feature_b):
            pair = pair[::-1]
        dist[pair].append(c.best_distance)
        for f, t in ((c.feature_a, c.target_a), (c.feature_b, c.target_b)):
            achieved = c.achieved_value(f)
            if np.isnan(achieved):
                continue
            dev[pair].append(abs(achieved - t))
            if abs(achieved - t) <= threshold:
                feasible[f].add(t)

    distance = pd.DataFrame(np.nan, index=order, columns=order)
    deviation = pd.DataFrame(np.nan, index=order, columns=order)
    for (a, b), xs in dist.items():
        distance.loc[a, b] = float(np.mean(xs))
    for (a, b), xs in dev.items():
        deviation.loc[b, a] = float(np.mean(xs))
    return GridSummary(
        tuple(order), {f: sorted(ts) for f, ts in feasible.items()},
        distance, deviation,
    )
