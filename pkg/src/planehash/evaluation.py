"""Ground-truth search and retrieval-quality metrics.

brute_force_search is the exact oracle every hashing scheme is validated
against: it ranks all points by margin |w.x|/|w| ascending, ties broken
by id. evaluate_scheme compares an index's answers to the oracle per
query and aggregates recall, returned-neighbor quality (margin and
point-to-hyperplane angle), empty-lookup rate, and probe counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParametersError
from .geometry import as_vector, hyperplane_angles, margins
from .index import HammingIndex

__all__ = [
    "GroundTruth",
    "brute_force_search",
    "EvalReport",
    "evaluate_scheme",
    "random_point_baseline",
]


@dataclass(frozen=True)
class GroundTruth:
    """Oracle ranking for one query: ids and margins, margin-ascending, ties by id."""

    ids: np.ndarray
    margins: np.ndarray


def brute_force_search(normal, points: np.ndarray, top_n: int) -> GroundTruth:
    """Exact top-n points by ascending margin under an exhaustive scan."""
    if top_n < 1:
        raise InvalidParametersError("top_n must be >= 1")
    pts = np.asarray(points, dtype=np.float64)
    dists = margins(normal, pts)
    order = np.lexsort((np.arange(pts.shape[0]), dists))[:top_n]
    return GroundTruth(ids=order.copy(), margins=dists[order].copy())


@dataclass
class EvalReport:
    """Aggregated retrieval metrics for one (scheme, radius) configuration.

    Means over returned neighbors exclude empty-lookup queries, which are
    counted separately in empty_rate.
    """

    scheme: str
    k: int
    radius: int
    n_queries: int
    recall_at_n: float
    top_n: int
    mean_returned_margin: float
    mean_returned_angle: float
    mean_oracle_margin: float
    mean_oracle_angle: float
    empty_rate: float
    mean_buckets_probed: float
    query_rows: list = field(default_factory=list)


def evaluate_scheme(
    index: HammingIndex,
    queries,
    points: np.ndarray,
    radius: int,
    top_n: int = 10,
) -> EvalReport:
    """Run every query against the index and score it against the oracle."""
    pts = np.asarray(points, dtype=np.float64)
    queries = [as_vector(q) for q in np.atleast_2d(np.asarray(queries, dtype=np.float64))]
    returned_margins = []
    returned_angles = []
    oracle_margins = []
    oracle_angles = []
    recalls = []
    probes = []
    empties = 0
    rows = []
    for qi, w in enumerate(queries):
        truth = brute_force_search(w, pts, top_n)
        oracle_best = int(truth.ids[0])
        oracle_margin = float(truth.margins[0])
        oracle_angle = float(hyperplane_angles(w, pts[oracle_best][None, :])[0])
        oracle_margins.append(oracle_margin)
        oracle_angles.append(oracle_angle)

        result = index.query_hyperplane(w, radius, pts)
        probes.append(result.buckets_probed)
        recall = len(set(truth.ids.tolist()) & set(result.candidate_ids)) / top_n
        recalls.append(recall)
        if result.fallback_used:
            empties += 1
            best_angle = float("nan")
        else:
            best_angle = float(hyperplane_angles(w, pts[result.best_id][None, :])[0])
            returned_margins.append(result.best_margin)
            returned_angles.append(best_angle)
        rows.append(
            {
                "query": qi,
                "scheme": index.scheme,
                "radius": radius,
                "best_id": result.best_id,
                "best_margin": result.best_margin,
                "best_angle": best_angle,
                "oracle_best_id": oracle_best,
                "oracle_margin": oracle_margin,
                "oracle_angle": oracle_angle,
                "recall_at_n": recall,
                "buckets_probed": result.buckets_probed,
                "fallback": result.fallback_used,
            }
        )

    def _mean(vals):
        return float(np.mean(vals)) if vals else float("nan")

    return EvalReport(
        scheme=index.scheme,
        k=index.k,
        radius=radius,
        n_queries=len(queries),
        recall_at_n=_mean(recalls),
        top_n=top_n,
        mean_returned_margin=_mean(returned_margins),
        mean_returned_angle=_mean(returned_angles),
        mean_oracle_margin=_mean(oracle_margins),
        mean_oracle_angle=_mean(oracle_angles),
        empty_rate=empties / len(queries) if queries else 0.0,
        mean_buckets_probed=_mean(probes),
        query_rows=rows,
    )


def random_point_baseline(queries, points: np.ndarray, seed: int) -> dict:
    """Quality of picking one uniformly random point per query (no search at all)."""
    pts = np.asarray(points, dtype=np.float64)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, pts.shape[0], size=queries.shape[0])
    ms = []
    angles = []
    for w, pick in zip(queries, picks):
        ms.append(float(margins(w, pts[pick][None, :])[0]))
        angles.append(float(hyperplane_angles(w, pts[pick][None, :])[0]))
    return {
        "mean_margin": float(np.mean(ms)),
        "mean_angle": float(np.mean(angles)),
        "picks": picks.tolist(),
    }
