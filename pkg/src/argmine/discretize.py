"""Discretization of continuous columns into ordered, non-overlapping bins.

Four methods are provided: equal-width, equal-depth, 1-D k-means (Lloyd
with deterministic quantile initialization) and 1-D DBSCAN.  A silhouette
score drives exhaustive parameter search over a caller-supplied grid.

Every scheme is a sorted list of interior cut points; bin ``i`` is the
half-open interval between cut ``i-1`` and cut ``i``, with the outer bins
open-ended so that any finite real maps to exactly one ordinal label.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    InputError,
    InvariantError,
    NoDenseRegionError,
    OptimizationFailedError,
    UndefinedScoreError,
)

KMEANS_TOL = 1e-6
KMEANS_MAX_ITER = 100

METHODS = ("equal-width", "equal-depth", "kmeans", "dbscan")


@dataclass(frozen=True)
class DiscretizationParams:
    """Parameters for one discretization run.

    ``k`` applies to equal-width, equal-depth and k-means; ``epsilon`` and
    ``min_pts`` to DBSCAN; ``seed`` to any randomized step (the bundled
    algorithms are all deterministic, but the seed is recorded anyway).
    """

    k: int | None = None
    epsilon: float | None = None
    min_pts: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise InputError(f"k must be >= 1, got {self.k}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise InputError(f"epsilon must be > 0, got {self.epsilon}")
        if self.min_pts is not None and self.min_pts < 1:
            raise InputError(f"min_pts must be >= 1, got {self.min_pts}")

    def to_json(self) -> dict:
        out: dict[str, Any] = {"seed": self.seed}
        if self.k is not None:
            out["k"] = self.k
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon
        if self.min_pts is not None:
            out["min_pts"] = self.min_pts
        return out


@dataclass(frozen=True)
class BinningScheme:
    """Mapping from reals to ordinal bin labels via ascending cut points."""

    attribute: str
    method: str
    boundaries: tuple[float, ...]
    params: DiscretizationParams = field(default_factory=DiscretizationParams)

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.boundaries[1:], self.boundaries)):
            raise InvariantError(f"boundaries not strictly ascending: {self.boundaries}")

    @property
    def n_bins(self) -> int:
        return len(self.boundaries) + 1

    @property
    def bin_labels(self) -> range:
        return range(self.n_bins)

    def assign(self, value: float) -> int:
        return apply_scheme(value, self)

    def to_json(self) -> dict:
        return {
            "attribute": self.attribute,
            "method": self.method,
            "boundaries": list(self.boundaries),
            "params": self.params.to_json(),
        }

    @staticmethod
    def from_json(data: Mapping[str, Any]) -> "BinningScheme":
        return BinningScheme(
            attribute=data["attribute"],
            method=data["method"],
            boundaries=tuple(data["boundaries"]),
            params=DiscretizationParams(**data.get("params", {})),
        )


@dataclass(frozen=True)
class SilhouetteReport:
    """Per-sample silhouette coefficients and their mean."""

    score: float
    per_sample: tuple[tuple[float, float, float], ...]  # (a, b, coefficient)


def apply_scheme(value: float, scheme: BinningScheme) -> int:
    """Bin label of ``value``; out-of-range values clamp to the outer bins."""
    return bisect.bisect_right(scheme.boundaries, value)


def _check_values(values: Sequence[float]) -> list[float]:
    if len(values) == 0:
        raise InputError("cannot discretize an empty value list")
    return [float(v) for v in values]


def equal_width_bins(values: Sequence[float], k: int, attribute: str = "value") -> BinningScheme:
    """Split [min, max] into k bins of equal width.

    Intervals are half-open on the right except the last, so the maximum
    value lands in the final bin.  A constant column degenerates to a
    single bin.
    """
    vals = _check_values(values)
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    lo, hi = min(vals), max(vals)
    params = DiscretizationParams(k=k)
    if lo == hi or k == 1:
        return BinningScheme(attribute, "equal-width", (), params)
    width = (hi - lo) / k
    boundaries = tuple(lo + i * width for i in range(1, k))
    return BinningScheme(attribute, "equal-width", boundaries, params)


def equal_depth_bins(values: Sequence[float], k: int, attribute: str = "value") -> BinningScheme:
    """Split sorted values into k bins of roughly n/k instances each.

    Cut points go between distinct sorted values, as close to the ideal
    positions i*n/k as possible; a group of equal values is never split
    and stays in the lower bin.  When there are fewer distinct values than
    k, each distinct value gets its own bin.
    """
    vals = sorted(_check_values(values))
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    distinct: list[float] = []
    counts: list[int] = []
    for v in vals:
        if distinct and distinct[-1] == v:
            counts[-1] += 1
        else:
            distinct.append(v)
            counts.append(1)
    params = DiscretizationParams(k=k)
    g = len(distinct)
    k_eff = min(k, g)
    if k_eff == 1:
        return BinningScheme(attribute, "equal-depth", (), params)

    # cumulative count after each distinct group; cutting after group j
    # yields a boundary between distinct[j] and distinct[j+1]
    cumulative = np.cumsum(counts)
    n = len(vals)
    cuts: list[int] = []
    prev = -1
    for i in range(1, k_eff):
        ideal = i * n / k_eff
        lo_slot = prev + 1
        hi_slot = (g - 2) - (k_eff - 1 - i)  # leave room for remaining cuts
        best = lo_slot
        best_dev = abs(cumulative[lo_slot] - ideal)
        for j in range(lo_slot + 1, hi_slot + 1):
            dev = abs(cumulative[j] - ideal)
            if dev < best_dev:  # ties keep the lower cut (tie group stays low)
                best, best_dev = j, dev
        cuts.append(best)
        prev = best
    boundaries = tuple((distinct[j] + distinct[j + 1]) / 2.0 for j in cuts)
    return BinningScheme(attribute, "equal-depth", boundaries, params)


def _clusters_to_boundaries(clusters: Sequence[Sequence[float]]) -> tuple[float, ...]:
    """Midpoints between the max of each cluster range and the next min."""
    ordered = sorted((min(c), max(c)) for c in clusters)
    for (_, hi), (lo, _) in zip(ordered, ordered[1:]):
        if lo <= hi:
            raise InvariantError(f"cluster ranges overlap: {ordered}")
    return tuple((hi + lo) / 2.0 for (_, hi), (lo, _) in zip(ordered, ordered[1:]))


def _lloyd_boundaries(vals: np.ndarray, k: int) -> tuple[float, ...]:
    """Quantile-initialized Lloyd iterations; may hit a local optimum."""
    centroids = np.quantile(vals, [(i + 0.5) / k for i in range(k)])
    for _ in range(KMEANS_MAX_ITER):
        assign = np.argmin(np.abs(vals[:, None] - centroids[None, :]), axis=1)
        moved = 0.0
        for i in range(k):
            members = vals[assign == i]
            if members.size:
                new = members.mean()
                moved = max(moved, abs(new - centroids[i]))
                centroids[i] = new
        if moved < KMEANS_TOL:
            break
    assign = np.argmin(np.abs(vals[:, None] - centroids[None, :]), axis=1)
    clusters = [vals[assign == i] for i in range(k) if np.any(assign == i)]
    return _clusters_to_boundaries(clusters)


def _optimal_boundaries(vals: np.ndarray, k: int) -> tuple[float, ...]:
    """Exact 1-D k-means by dynamic programming over distinct values.

    One-dimensional optima are contiguous in sorted order, so the weighted
    sum-of-squares cost of every interval of distinct values comes from
    prefix sums and the optimal cuts from an O(G^2 k) recurrence.
    """
    distinct, weights = np.unique(vals, return_counts=True)
    g = distinct.size
    w = weights.astype(float)
    cw = np.concatenate([[0.0], np.cumsum(w)])
    cs = np.concatenate([[0.0], np.cumsum(w * distinct)])
    cq = np.concatenate([[0.0], np.cumsum(w * distinct**2)])

    def seg_cost(i: np.ndarray, j: int) -> np.ndarray:
        # cost of grouping distinct[i..j] (inclusive), vectorized over i
        tw = cw[j + 1] - cw[i]
        ts = cs[j + 1] - cs[i]
        tq = cq[j + 1] - cq[i]
        return tq - ts * ts / tw

    prev = np.array([seg_cost(np.array([0]), j)[0] for j in range(g)])
    cuts = np.zeros((k, g), dtype=int)
    for m in range(1, k):
        cur = np.empty(g)
        cur[:m] = np.inf
        for j in range(m, g):
            i = np.arange(m, j + 1)  # first index of the last segment
            totals = prev[i - 1] + seg_cost(i, j)
            pos = int(np.argmin(totals))
            cur[j] = totals[pos]
            cuts[m, j] = i[pos]
        prev = cur
    edges = []
    j = g - 1
    for m in range(k - 1, 0, -1):
        i = cuts[m, j]
        edges.append(i)
        j = i - 1
    edges.reverse()
    return tuple((distinct[i - 1] + distinct[i]) / 2.0 for i in edges)


def _partition_wss(vals: np.ndarray, boundaries: Sequence[float]) -> float:
    labels = np.searchsorted(np.asarray(boundaries), vals, side="right")
    total = 0.0
    for lab in np.unique(labels):
        members = vals[labels == lab]
        total += float(((members - members.mean()) ** 2).sum())
    return total


def kmeans_1d(
    values: Sequence[float],
    k: int,
    params: DiscretizationParams | None = None,
    attribute: str = "value",
) -> BinningScheme:
    """One-dimensional k-means emitted as non-overlapping ranges.

    Runs quantile-initialized Lloyd iterations (stop when the largest
    centroid movement drops below 1e-6, cap 100 rounds) and, because Lloyd
    can stall in a local optimum even on small inputs, an exact dynamic
    program over the sorted distinct values; the partition with the lower
    within-cluster sum of squares wins.  Both passes are deterministic.
    Boundaries are midpoints between adjacent cluster extremes.
    """
    vals = np.sort(np.asarray(_check_values(values), dtype=float))
    distinct = np.unique(vals)
    if k > distinct.size:
        raise InputError(f"k={k} exceeds the {distinct.size} distinct values")
    if params is None:
        params = DiscretizationParams(k=k)
    else:
        params = DiscretizationParams(k=k, epsilon=params.epsilon, min_pts=params.min_pts, seed=params.seed)
    if k == 1:
        return BinningScheme(attribute, "kmeans", (), params)

    lloyd = _lloyd_boundaries(vals, k)
    exact = _optimal_boundaries(vals, k)
    best = exact if _partition_wss(vals, exact) <= _partition_wss(vals, lloyd) else lloyd
    return BinningScheme(attribute, "kmeans", best, params)


def dbscan_1d(
    values: Sequence[float],
    epsilon: float,
    min_pts: int,
    attribute: str = "value",
) -> BinningScheme:
    """Density clustering on one dimension.

    A core instance has at least ``min_pts`` neighbours within
    ``epsilon`` (counting itself).  Clusters are chains of core instances
    with gaps <= epsilon plus their border neighbours; border points
    reachable from two chains go to the nearer one (ties to the lower
    cluster).  Noise is absorbed by the midpoint rule between adjacent
    cluster ranges, so every value still receives a bin.  All points
    noise is an error.
    """
    if not epsilon > 0:
        raise InputError(f"epsilon must be > 0, got {epsilon}")
    if min_pts < 1:
        raise InputError(f"min_pts must be >= 1, got {min_pts}")
    vals = np.sort(np.asarray(_check_values(values), dtype=float))
    n = vals.size
    # neighbour counts within epsilon via two pointers on the sorted array
    left = np.searchsorted(vals, vals - epsilon, side="left")
    right = np.searchsorted(vals, vals + epsilon, side="right")
    core = (right - left) >= min_pts
    if not core.any():
        raise NoDenseRegionError(
            f"no dense region: no instance has {min_pts} neighbours within {epsilon}"
        )

    core_idx = np.flatnonzero(core)
    # chains of core points separated by gaps <= epsilon
    chains: list[list[int]] = [[core_idx[0]]]
    for i in core_idx[1:]:
        if vals[i] - vals[chains[-1][-1]] <= epsilon:
            chains[-1].append(i)
        else:
            chains.append([i])
    ranges = [[vals[c[0]], vals[c[-1]]] for c in chains]
    # attach border points (non-core within epsilon of some chain's core)
    for i in np.flatnonzero(~core):
        best = None
        for ci, chain in enumerate(chains):
            d = min(abs(vals[i] - vals[chain[0]]), abs(vals[i] - vals[chain[-1]]))
            if d <= epsilon and (best is None or d < best[0]):
                best = (d, ci)
        if best is not None:
            ci = best[1]
            ranges[ci][0] = min(ranges[ci][0], vals[i])
            ranges[ci][1] = max(ranges[ci][1], vals[i])
    params = DiscretizationParams(epsilon=epsilon, min_pts=min_pts)
    boundaries = _clusters_to_boundaries(ranges)
    return BinningScheme(attribute, "dbscan", boundaries, params)


def silhouette(values: Sequence[float], labels: Sequence[Any]) -> SilhouetteReport:
    """Mean silhouette coefficient of a 1-D clustering.

    For each sample, ``a`` is its mean distance to the rest of its own
    cluster and ``b`` the smallest distance to any instance outside the
    cluster; the coefficient is (b - a) / max(a, b), or 0 for singleton
    clusters and for max(a, b) == 0.
    """
    vals = _check_values(values)
    if len(labels) != len(vals):
        raise InputError(f"{len(vals)} values but {len(labels)} labels")
    groups: dict[Any, list[int]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    if len(groups) < 2:
        raise UndefinedScoreError(f"silhouette undefined for {len(groups)} cluster(s)")

    per_sample = []
    for i, v in enumerate(vals):
        own = groups[labels[i]]
        if len(own) == 1:
            a = 0.0
            coeff_override = 0.0
        else:
            a = sum(abs(v - vals[j]) for j in own if j != i) / (len(own) - 1)
            coeff_override = None
        b = min(abs(v - vals[j]) for j in range(len(vals)) if labels[j] != labels[i])
        if coeff_override is not None:
            coeff = coeff_override
        elif max(a, b) > 0:
            coeff = (b - a) / max(a, b)
        else:
            coeff = 0.0
        per_sample.append((a, b, coeff))
    score = sum(c for _, _, c in per_sample) / len(per_sample)
    return SilhouetteReport(score=score, per_sample=tuple(per_sample))


def _build(method: str, values: Sequence[float], params: DiscretizationParams, attribute: str) -> BinningScheme:
    if method in ("equal-width", "equal-depth", "kmeans"):
        if params.k is None:
            raise InputError(f"method {method!r} requires k")
        if method == "equal-width":
            return equal_width_bins(values, params.k, attribute)
        if method == "equal-depth":
            return equal_depth_bins(values, params.k, attribute)
        return kmeans_1d(values, params.k, params, attribute)
    if method == "dbscan":
        if params.epsilon is None or params.min_pts is None:
            raise InputError("method 'dbscan' requires epsilon and min_pts")
        return dbscan_1d(values, params.epsilon, params.min_pts, attribute)
    raise InputError(f"unknown discretization method {method!r}")


def optimize_scheme(
    values: Sequence[float],
    method: str,
    search_space: Sequence[DiscretizationParams],
    attribute: str = "value",
) -> BinningScheme:
    """Exhaustive parameter search maximizing the silhouette score.

    Every combination in ``search_space`` is fitted and scored on the
    labeling it induces over the training values; ties prefer fewer bins,
    then the earlier grid position.  Combinations that fail (degenerate
    schemes, all-noise DBSCAN, undefined silhouette) are skipped; if all
    fail, the optimization fails.
    """
    if not search_space:
        raise InputError("empty search space")
    vals = _check_values(values)
    best: tuple[float, int, int, BinningScheme] | None = None
    for pos, params in enumerate(search_space):
        try:
            scheme = _build(method, vals, params, attribute)
            labels = [apply_scheme(v, scheme) for v in vals]
            score = silhouette(vals, labels).score
        except InputError:
            continue
        key = (-score, scheme.n_bins, pos)
        if best is None or key < (-best[0], best[1], best[2]):
            best = (score, scheme.n_bins, pos, scheme)
    if best is None:
        raise OptimizationFailedError(
            f"every parameter combination failed for method {method!r}"
        )
    return best[3]
