"""Learning bilinear hash functions from sampled data.

The target is an m x m matrix S of desired code correlations built from
thresholded |cos| values between m sampled points: entries are +1 for
near-parallel pairs (|cos| >= t1), -1 for near-perpendicular pairs
(|cos| <= t2), and 2|cos| - 1 in between.

k bit vectors are fitted greedily. With residue R_0 = k S and
R_j = R_{j-1} - b_j b_j^T, bit j minimizes the cost -b^T R_{j-1} b over
sign vectors b realizable as b_i = sgn(u.x_i * x_i.v). The sign function
is relaxed to the smooth odd surrogate phi(x) = 2/(1 + exp(-x)) - 1 and
each (u, v) pair is fitted by accelerated gradient descent with
backtracking, warm-started from random Gaussian projections.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    InvalidConfigurationError,
    InvalidParametersError,
    OptimizationDivergedError,
    ThresholdDegeneracyError,
)
from .families import BilinearFamily, ProjectionPair, sign_pm1
from .geometry import abs_cosine_matrix

__all__ = [
    "SimilarityTarget",
    "select_thresholds",
    "build_similarity_target",
    "sigmoid_phi",
    "surrogate_cost",
    "surrogate_gradient",
    "OptConfig",
    "FitInfo",
    "fit_bit",
    "LearnedHashFamily",
    "learn_family",
    "code_correlation_error",
    "sample_training_set",
]


@dataclass(frozen=True)
class SimilarityTarget:
    """Target code-correlation matrix with the thresholds that produced it."""

    matrix: np.ndarray
    t1: float
    t2: float


def select_thresholds(
    samples: np.ndarray, pool: np.ndarray, fraction: float = 0.05
) -> tuple[float, float]:
    """Pick (t1, t2) from the |cos| matrix between samples and the full pool.

    t1 averages each row's top-`fraction` slice (then across rows); t2 the
    bottom slice. Raises ThresholdDegeneracyError unless 0 < t2 < t1 < 1.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    pool = np.atleast_2d(np.asarray(pool, dtype=np.float64))
    if samples.shape[0] < 2 or pool.shape[0] < 1:
        raise InvalidParametersError("need at least 2 samples and a nonempty pool")
    if not 0.0 < fraction < 0.5:
        raise InvalidParametersError("fraction must be in (0, 0.5)")
    cos = abs_cosine_matrix(samples, pool)
    count = max(1, math.ceil(fraction * pool.shape[0]))
    ordered = np.sort(cos, axis=1)
    t1 = float(np.mean(ordered[:, -count:]))
    t2 = float(np.mean(ordered[:, :count]))
    if not (0.0 < t2 < t1 < 1.0):
        raise ThresholdDegeneracyError(
            f"degenerate thresholds t1={t1:.6g}, t2={t2:.6g}; need 0 < t2 < t1 < 1"
        )
    return t1, t2


def build_similarity_target(samples: np.ndarray, t1: float, t2: float) -> SimilarityTarget:
    """Threshold the pairwise |cos| matrix of the samples into the target S."""
    if not (0.0 < t2 < t1 < 1.0):
        raise InvalidParametersError(f"need 0 < t2 < t1 < 1, got t1={t1}, t2={t2}")
    cos = abs_cosine_matrix(samples, samples)
    target = np.where(cos >= t1, 1.0, np.where(cos <= t2, -1.0, 2.0 * cos - 1.0))
    return SimilarityTarget(matrix=target, t1=t1, t2=t2)


def sigmoid_phi(x):
    """Smooth odd surrogate of the sign function: 2/(1 + exp(-x)) - 1 = tanh(x/2)."""
    return np.tanh(np.asarray(x, dtype=np.float64) / 2.0)


def _relaxed_bits(u, v, samples, scale):
    return sigmoid_phi(scale * (samples @ u) * (samples @ v))


def surrogate_cost(u, v, residue, samples, scale: float = 1.0) -> float:
    """Smooth relaxation of -b^T R b with b_i = phi(scale * u.x_i * x_i.v)."""
    relaxed = _relaxed_bits(u, v, samples, scale)
    return float(-(relaxed @ residue @ relaxed))


def surrogate_gradient(u, v, residue, samples, scale: float = 1.0) -> np.ndarray:
    """Gradient of surrogate_cost w.r.t. the stacked vector [u; v].

    With diagonal weights sigma = (R b) * (1 - b*b) the blocks are
    -scale * X^T diag(sigma) X v and -scale * X^T diag(sigma) X u
    (rows of X are the samples).
    """
    relaxed = _relaxed_bits(u, v, samples, scale)
    sigma = (residue @ relaxed) * (1.0 - relaxed * relaxed)
    grad_u = -scale * (samples.T @ (sigma * (samples @ v)))
    grad_v = -scale * (samples.T @ (sigma * (samples @ u)))
    return np.concatenate([grad_u, grad_v])


@dataclass(frozen=True)
class OptConfig:
    """Per-bit optimizer settings.

    scale multiplies the bilinear argument inside the smooth sign
    surrogate; "auto" picks a data-driven value that keeps warm-start
    arguments out of the surrogate's saturated region (quantized bits are
    unaffected by any positive scale).
    """

    max_iters: int = 500
    step0: float = 1.0
    grad_tol: float = 1e-6
    cost_tol: float = 1e-8
    max_backtracks: int = 40
    scale: float | str = 1.0
    restarts: int = 4


def auto_scale(samples: np.ndarray) -> float:
    """Argument scale putting the typical warm-start bilinear product near 2.

    For Gaussian projections the typical |u.x * x.v| is about 0.35 |x|^2,
    which saturates the surrogate already at moderate dimension; 6 over the
    median squared row norm re-centers it in the smooth region.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    q = float(np.median(np.sum(samples * samples, axis=1)))
    if q <= 0.0:
        raise InvalidParametersError("samples have zero norms")
    return 6.0 / q


def _resolve_scale(config: OptConfig, samples: np.ndarray) -> float:
    if isinstance(config.scale, str):
        if config.scale != "auto":
            raise InvalidParametersError(f"unknown scale {config.scale!r}")
        return auto_scale(samples)
    if config.scale <= 0.0:
        raise InvalidParametersError("scale must be positive")
    return float(config.scale)


@dataclass
class FitInfo:
    """Diagnostics from one fit_bit run."""

    costs: list = field(default_factory=list)
    iterations: int = 0
    stop_reason: str = ""
    quantized_cost_init: float = 0.0
    quantized_cost_final: float = 0.0
    kept_warm_start: bool = False


def _quantized_cost(bits: np.ndarray, residue: np.ndarray) -> float:
    b = bits.astype(np.float64)
    return float(-(b @ residue @ b))


def fit_bit(
    residue: np.ndarray,
    samples: np.ndarray,
    init: ProjectionPair,
    config: OptConfig = OptConfig(),
) -> tuple[ProjectionPair, np.ndarray, FitInfo]:
    """Fit one bilinear bit against the residue matrix.

    Runs momentum-accelerated gradient descent on the smooth surrogate with
    a backtracking step search, accepting only cost-decreasing steps (the
    recorded cost sequence is non-increasing). Returns the projection pair,
    its sign-quantized bit vector, and diagnostics. The returned pair never
    quantizes to a worse cost than the warm start.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    dim = samples.shape[1]
    scale = _resolve_scale(config, samples)

    def cost_at(theta):
        return surrogate_cost(theta[:dim], theta[dim:], residue, samples, scale)

    def grad_at(theta):
        return surrogate_gradient(theta[:dim], theta[dim:], residue, samples, scale)

    def quantized_at(theta):
        return _quantized_cost(
            sign_pm1(scale * (samples @ theta[:dim]) * (samples @ theta[dim:])), residue
        )

    theta = np.concatenate([init.u, init.v]).astype(np.float64)
    cost = cost_at(theta)
    if not np.isfinite(cost):
        raise OptimizationDivergedError("non-finite surrogate cost at warm start")
    info = FitInfo(costs=[cost])
    best_theta = theta.copy()
    best_quantized = quantized_at(theta)
    lookahead = theta.copy()
    momentum = 1.0
    step = config.step0
    stop = "max_iters"

    for it in range(config.max_iters):
        grad = grad_at(lookahead)
        if not np.all(np.isfinite(grad)):
            raise OptimizationDivergedError("non-finite gradient")
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < config.grad_tol:
            stop = "grad_tol"
            break

        trial_step = step
        candidate = None
        candidate_cost = None
        for _ in range(config.max_backtracks):
            trial = lookahead - trial_step * grad
            trial_cost = cost_at(trial)
            if np.isfinite(trial_cost) and trial_cost <= cost:
                candidate, candidate_cost = trial, trial_cost
                break
            trial_step *= 0.5
        if candidate is None:
            if not np.array_equal(lookahead, theta):
                # momentum overshoot: restart from the best iterate
                lookahead = theta.copy()
                momentum = 1.0
                continue
            stop = "no_decrease"
            break

        momentum_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * momentum * momentum))
        lookahead = candidate + ((momentum - 1.0) / momentum_next) * (candidate - theta)
        rel_change = (cost - candidate_cost) / max(1.0, abs(cost))
        theta = candidate
        cost = candidate_cost
        momentum = momentum_next
        info.costs.append(cost)
        info.iterations = it + 1
        step = min(trial_step * 2.0, 1e6)
        quantized = quantized_at(theta)
        if quantized < best_quantized:
            best_quantized = quantized
            best_theta = theta.copy()
        if rel_change < config.cost_tol:
            stop = "cost_tol"
            break

    info.stop_reason = stop
    # return the iterate whose sign quantization scored best along the path
    fitted = ProjectionPair(best_theta[:dim].copy(), best_theta[dim:].copy())
    init_bits = sign_pm1(scale * (samples @ init.u) * (samples @ init.v))
    fitted_bits = sign_pm1(scale * (samples @ fitted.u) * (samples @ fitted.v))
    info.quantized_cost_init = _quantized_cost(init_bits, residue)
    info.quantized_cost_final = _quantized_cost(fitted_bits, residue)
    if info.quantized_cost_final > info.quantized_cost_init:
        # quantization undid the surrogate gain; the warm start codes better
        info.kept_warm_start = True
        info.quantized_cost_final = info.quantized_cost_init
        return init, init_bits, info
    return fitted, fitted_bits, info


class LearnedHashFamily(BilinearFamily):
    """A bilinear family whose projection pairs were fitted to data."""

    def __init__(self, proj_u, proj_v, training_meta: dict | None = None):
        super().__init__(proj_u, proj_v, scheme="lbh")
        self.training_meta = dict(training_meta or {})

    @classmethod
    def from_pairs(cls, pairs, training_meta=None, scheme="lbh"):
        return cls(
            np.stack([p.u for p in pairs]),
            np.stack([p.v for p in pairs]),
            training_meta=training_meta,
        )

    def to_dict(self) -> dict:
        data = super().to_dict()
        data["training_meta"] = self.training_meta
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "LearnedHashFamily":
        return cls(
            np.array(data["proj_u"]),
            np.array(data["proj_v"]),
            training_meta=data.get("training_meta"),
        )

    def save(self, path: str) -> None:
        payload = {"format": "planehash-family", "version": 1}
        payload.update(self.to_dict())
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "LearnedHashFamily":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def code_correlation_error(bits: np.ndarray, target: np.ndarray) -> float:
    """Frobenius objective ||(1/k) B B^T - S||_F^2 for an m x k sign-bit matrix."""
    b = np.asarray(bits, dtype=np.float64)
    k = b.shape[1]
    diff = (b @ b.T) / k - target
    return float(np.sum(diff * diff))


def learn_family(
    samples: np.ndarray,
    k: int,
    t1: float,
    t2: float,
    seed: int,
    config: OptConfig = OptConfig(),
) -> LearnedHashFamily:
    """Greedily learn k bilinear hash functions from the samples.

    Builds the thresholded target S, then fits one bit at a time against
    the shrinking residue (R_0 = k S, R_j = R_{j-1} - b_j b_j^T). The
    returned family's code objective never exceeds the one produced by the
    random warm-start projections; training_meta records both, per-bit
    diagnostics, and the final residue norm.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    m, dim = samples.shape
    if k < 1:
        raise InvalidConfigurationError("k must be >= 1")
    if m <= k:
        raise InvalidConfigurationError(f"need more samples than bits (m={m}, k={k})")
    target = build_similarity_target(samples, t1, t2)
    config = replace(config, scale=_resolve_scale(config, samples))

    rng = np.random.default_rng(seed)
    inits = [ProjectionPair.random(dim, rng) for _ in range(k)]
    init_bits = np.stack(
        [sign_pm1((samples @ p.u) * (samples @ p.v)) for p in inits], axis=1
    )
    q_before = code_correlation_error(init_bits, target.matrix)

    residue = k * target.matrix.astype(np.float64)
    pairs: list[ProjectionPair] = []
    bit_columns: list[np.ndarray] = []
    per_bit_meta = []
    nonpositive_bits = []
    restarts = max(1, config.restarts)
    for j in range(k):
        # first start is bit j's own warm-start pair; extra starts are fresh draws
        starts = [inits[j]] + [ProjectionPair.random(dim, rng) for _ in range(restarts - 1)]
        pair, bits, info = None, None, None
        for start in starts:
            cand_pair, cand_bits, cand_info = fit_bit(residue, samples, start, config)
            if info is None or cand_info.quantized_cost_final < info.quantized_cost_final:
                pair, bits, info = cand_pair, cand_bits, cand_info
        contribution = -info.quantized_cost_final
        if contribution <= 0.0:
            # no positive contribution; kept anyway, greedy loop continues
            nonpositive_bits.append(j)
        residue = residue - np.outer(bits, bits).astype(np.float64)
        pairs.append(pair)
        bit_columns.append(bits)
        per_bit_meta.append(
            {
                "iterations": info.iterations,
                "stop_reason": info.stop_reason,
                "surrogate_init": info.costs[0],
                "surrogate_final": info.costs[-1],
                "quantized_cost_init": info.quantized_cost_init,
                "quantized_cost_final": info.quantized_cost_final,
                "kept_warm_start": info.kept_warm_start,
            }
        )

    learned_bits = np.stack(bit_columns, axis=1)
    q_after = code_correlation_error(learned_bits, target.matrix)
    family_fallback = False
    if q_after > q_before:
        pairs = inits
        learned_bits = init_bits
        residue = k * target.matrix - init_bits.astype(np.float64) @ init_bits.T.astype(np.float64)
        q_after = q_before
        family_fallback = True

    meta = {
        "seed": seed,
        "k": k,
        "m": m,
        "dim": dim,
        "t1": t1,
        "t2": t2,
        "scale": config.scale,
        "objective_before": q_before,
        "objective_after": q_after,
        "final_residue_sq_norm": float(np.sum(residue * residue)),
        "nonpositive_contribution_bits": nonpositive_bits,
        "family_fallback": family_fallback,
        "bits": per_bit_meta,
    }
    return LearnedHashFamily.from_pairs(pairs, training_meta=meta)


def sample_training_set(
    features: np.ndarray, m: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Uniformly sample m rows without replacement; returns (indices, rows)."""
    features = np.asarray(features, dtype=np.float64)
    if m < 1 or m > features.shape[0]:
        raise InvalidParametersError(f"m={m} outside [1, {features.shape[0]}]")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(features.shape[0], size=m, replace=False))
    return idx, features[idx]
