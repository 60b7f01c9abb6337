"""Vector geometry for point-to-hyperplane search.

A hyperplane query is given by its normal vector w; the hyperplane passes
through the origin. The point-to-hyperplane angle of a data vector x is
alpha = |theta - pi/2| where theta is the angle between x and w, so
sin(alpha) = |w.x| / (|w||x|). alpha = 0 means x lies on the hyperplane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "DataPoint",
    "HyperplaneQuery",
    "Angles",
    "angle_between",
    "point_to_hyperplane_distance",
    "abs_cosine",
    "margins",
    "hyperplane_angles",
    "abs_cosine_matrix",
]


@dataclass(frozen=True)
class DataPoint:
    """A database point: integer id plus a dense real vector."""

    id: int
    coords: np.ndarray


@dataclass(frozen=True)
class HyperplaneQuery:
    """A hyperplane query, represented by its normal vector."""

    normal: np.ndarray


@dataclass(frozen=True)
class Angles:
    """theta: angle between the point and the normal, in [0, pi].
    alpha: point-to-hyperplane angle |theta - pi/2|, in [0, pi/2]."""

    theta: float
    alpha: float


def as_vector(obj) -> np.ndarray:
    """Accept a DataPoint, HyperplaneQuery, or array-like and return a 1-D float64 array."""
    if isinstance(obj, DataPoint):
        obj = obj.coords
    elif isinstance(obj, HyperplaneQuery):
        obj = obj.normal
    vec = np.asarray(obj, dtype=np.float64)
    if vec.ndim != 1:
        raise InvalidInputError(f"expected a 1-D vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise InvalidInputError("vector has non-finite entries")
    return vec


def _nonzero(vec: np.ndarray, name: str) -> float:
    norm = float(np.linalg.norm(vec))
    if norm <= 0.0:
        raise InvalidInputError(f"{name} has zero norm")
    return norm


def angle_between(x, w) -> Angles:
    """Angles between a data vector and a hyperplane normal.

    theta = arccos(w.x / (|w||x|)) with the cosine clamped to [-1, 1] to
    absorb round-off; alpha = |theta - pi/2|.
    """
    xv, wv = as_vector(x), as_vector(w)
    nx = _nonzero(xv, "x")
    nw = _nonzero(wv, "w")
    cos_theta = float(np.dot(wv, xv)) / (nw * nx)
    theta = float(np.arccos(np.clip(cos_theta, -1.0, 1.0)))
    return Angles(theta=theta, alpha=abs(theta - np.pi / 2.0))


def point_to_hyperplane_distance(x, w) -> float:
    """Distance |w.x| / |w| from a point to the hyperplane with normal w."""
    xv, wv = as_vector(x), as_vector(w)
    nw = _nonzero(wv, "w")
    return abs(float(np.dot(wv, xv))) / nw


def abs_cosine(x, y) -> float:
    """|cos| of the angle between two vectors, clamped to [0, 1].

    Symmetric and invariant to sign and scale of either argument.
    """
    xv, yv = as_vector(x), as_vector(y)
    nx = _nonzero(xv, "x")
    ny = _nonzero(yv, "y")
    return float(np.clip(abs(float(np.dot(xv, yv))) / (nx * ny), 0.0, 1.0))


def margins(normal, points: np.ndarray) -> np.ndarray:
    """|X w| / |w| for every row of `points` (the point-to-hyperplane distances)."""
    wv = as_vector(normal)
    nw = _nonzero(wv, "w")
    pts = np.asarray(points, dtype=np.float64)
    return np.abs(pts @ wv) / nw


def hyperplane_angles(normal, points: np.ndarray) -> np.ndarray:
    """Point-to-hyperplane angle alpha for every row of `points`.

    Rows must have nonzero norm.
    """
    wv = as_vector(normal)
    nw = _nonzero(wv, "w")
    pts = np.asarray(points, dtype=np.float64)
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms <= 0.0):
        raise InvalidInputError("a point has zero norm")
    sin_alpha = np.clip(np.abs(pts @ wv) / (nw * norms), 0.0, 1.0)
    return np.arcsin(sin_alpha)


def abs_cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise |cos| between rows of `a` and rows of `b`, clipped to [0, 1]."""
    am = np.asarray(a, dtype=np.float64)
    bm = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(am, axis=1)
    nb = np.linalg.norm(bm, axis=1)
    if np.any(na <= 0.0) or np.any(nb <= 0.0):
        raise InvalidInputError("a row has zero norm")
    return np.clip(np.abs(am @ bm.T) / np.outer(na, nb), 0.0, 1.0)
