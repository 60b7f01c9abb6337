"""Margin-based SVM active learning with pluggable sample selectors.

Each data vector is appended with a constant 1 so the separating
hyperplane passes through the origin of the augmented space; the most
informative unlabeled point is the one with the smallest margin
|w.x|/|w| to the current decision hyperplane. Selectors: exhaustive scan,
uniform random, or a hyperplane-hash lookup (any scheme) with a random
fallback when every probed bucket is empty.

The hash index is built once over the full pool in augmented space;
already-labeled points are masked at query time rather than re-indexing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidConfigurationError,
    InvalidInputError,
    InvalidStateError,
    UndefinedMetricError,
)
from .families import random_family
from .geometry import margins
from .index import HammingIndex
from .learning import (
    OptConfig,
    learn_family,
    sample_training_set,
    select_thresholds,
)

__all__ = [
    "LinearModel",
    "append_bias",
    "hinge_objective",
    "train_linear_svm",
    "average_precision",
    "SelectorConfig",
    "Selector",
    "ALState",
    "ALConfig",
    "select_next",
    "run_al_experiment",
]

HASHING_KINDS = ("ah", "eh", "bh", "lbh")


@dataclass(frozen=True)
class LinearModel:
    """Linear classifier w over augmented vectors [x; 1]; score(x) = w.[x; 1]."""

    w: np.ndarray

    def scores(self, points_aug: np.ndarray) -> np.ndarray:
        return np.asarray(points_aug, dtype=np.float64) @ self.w


def append_bias(points: np.ndarray) -> np.ndarray:
    """Append the constant-1 feature to every row."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return np.hstack([pts, np.ones((pts.shape[0], 1))])


def hinge_objective(w: np.ndarray, points_aug: np.ndarray, labels: np.ndarray, reg: float) -> float:
    """Regularized hinge loss: reg/2 ||w||^2 + mean(max(0, 1 - y w.x))."""
    raw = labels * (points_aug @ w)
    return float(0.5 * reg * np.dot(w, w) + np.mean(np.maximum(0.0, 1.0 - raw)))


def train_linear_svm(
    points: np.ndarray,
    labels: np.ndarray,
    reg: float = 1e-4,
    epochs: int = 20,
    seed: int = 0,
    step0: float | str = "auto",
) -> LinearModel:
    """Fit a linear SVM by seeded stochastic subgradient descent on the hinge loss.

    The step decays as step0 / (1 + step0 * reg * t); "auto" sets step0 to
    the inverse mean squared row norm so one update moves a margin by O(1)
    regardless of feature scale. Snapshots the weights after each epoch and
    returns the epoch-end iterate with the lowest full objective, so more
    epochs never return a worse model. epochs=0 returns the zero
    initialization (callers detect the degenerate ||w|| = 0).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    y = np.asarray(labels, dtype=np.float64)
    if pts.shape[0] != y.shape[0]:
        raise InvalidInputError("points and labels disagree in length")
    aug = append_bias(pts)
    w = np.zeros(aug.shape[1])
    if epochs == 0:
        return LinearModel(w=w)
    if len(np.unique(np.sign(y))) < 2:
        raise InvalidInputError("need at least one example of each class")
    if isinstance(step0, str):
        if step0 != "auto":
            raise InvalidInputError(f"unknown step0 {step0!r}")
        step0 = 1.0 / float(np.mean(np.sum(aug * aug, axis=1)))
    rng = np.random.default_rng(seed)
    best_w = w.copy()
    best_obj = hinge_objective(w, aug, y, reg)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(pts.shape[0]):
            t += 1
            eta = step0 / (1.0 + step0 * reg * t)
            grad = reg * w
            if y[i] * np.dot(aug[i], w) < 1.0:
                grad = grad - y[i] * aug[i]
            w = w - eta * grad
        obj = hinge_objective(w, aug, y, reg)
        if obj < best_obj:
            best_obj = obj
            best_w = w.copy()
    return LinearModel(w=best_w)


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mean of precision@rank over the positives, ranking by descending score.

    Ties broken by index ascending. Labels are positive where > 0.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(labels) > 0
    n_pos = int(np.count_nonzero(positives))
    if n_pos == 0:
        raise UndefinedMetricError("average precision undefined with no positives")
    order = np.lexsort((np.arange(scores.shape[0]), -scores))
    hits = 0
    total = 0.0
    for rank, idx in enumerate(order, start=1):
        if positives[idx]:
            hits += 1
            total += hits / rank
    return total / n_pos


@dataclass(frozen=True)
class SelectorConfig:
    """How the next label request is chosen.

    kind: exhaustive | random | ah | eh | bh | lbh. Hashing kinds carry the
    code length, Hamming search radius, and table count; lbh additionally
    the training-sample size and threshold fraction.
    """

    kind: str = "exhaustive"
    k: int = 16
    radius: int = 3
    num_tables: int = 1
    train_sample_size: int = 500
    threshold_fraction: float = 0.05
    opt: OptConfig = field(default_factory=OptConfig)


@dataclass
class ALState:
    """Labeled/unlabeled bookkeeping for one active-learning arm."""

    labeled_ids: list
    unlabeled_ids: set
    iteration: int = 0
    history: list = field(default_factory=list)


class Selector:
    """A configured sample selector bound to one pool of augmented points."""

    def __init__(self, config: SelectorConfig, points_aug: np.ndarray, seed: int):
        self.config = config
        self.points_aug = np.asarray(points_aug, dtype=np.float64)
        self.rng = np.random.default_rng(seed)
        self.index = None
        self.family_meta = None
        kind = config.kind.lower()
        if kind not in ("exhaustive", "random") + HASHING_KINDS:
            raise InvalidConfigurationError(f"unknown selector kind {config.kind!r}")
        self.kind = kind
        if kind in HASHING_KINDS:
            dim = self.points_aug.shape[1]
            if kind == "lbh":
                m = min(config.train_sample_size, self.points_aug.shape[0] - 1)
                _, samples = sample_training_set(self.points_aug, m, seed)
                t1, t2 = select_thresholds(
                    samples, self.points_aug, config.threshold_fraction
                )
                family = learn_family(samples, config.k, t1, t2, seed, config.opt)
                self.family_meta = family.training_meta
                families = [family]
            else:
                children = np.random.SeedSequence(seed).spawn(config.num_tables)
                families = [
                    random_family(kind, dim, config.k, int(c.generate_state(1)[0]))
                    for c in children
                ]
            self.index = HammingIndex.build(self.points_aug, families)

    def select(self, model: LinearModel, state: ALState) -> tuple[int, float, bool]:
        """Pick the next pool id to label; returns (id, margin, fallback_used)."""
        if not state.unlabeled_ids:
            raise InvalidStateError("unlabeled pool is empty")
        pool = sorted(state.unlabeled_ids)
        if self.kind == "random":
            pick = int(self.rng.choice(pool))
            margin = float(margins(model.w, self.points_aug[pick][None, :])[0])
            return pick, margin, False
        if float(np.linalg.norm(model.w)) <= 0.0:
            raise InvalidStateError("model weight vector has zero norm")
        if self.kind == "exhaustive":
            dists = margins(model.w, self.points_aug[pool])
            best = int(np.lexsort((pool, dists))[0])
            return pool[best], float(dists[best]), False
        labeled = set(state.labeled_ids)
        result = self.index.query_hyperplane(
            model.w, self.config.radius, self.points_aug, exclude=labeled
        )
        if result.best_id is None:
            pick = int(self.rng.choice(pool))
            margin = float(margins(model.w, self.points_aug[pick][None, :])[0])
            return pick, margin, True
        return result.best_id, result.best_margin, False


def select_next(state: ALState, model: LinearModel, selector: Selector):
    return selector.select(model, state)


@dataclass(frozen=True)
class ALConfig:
    """Experiment settings for run_al_experiment."""

    selector: SelectorConfig = field(default_factory=SelectorConfig)
    iterations: int = 100
    initial_per_class: int = 5
    reg: float = 1e-4
    epochs: int = 20
    seed: int = 0
    test_fraction: float = 0.2
    arm_classes: tuple | None = None


def _derived_seed(*parts) -> int:
    entropy = [
        int.from_bytes(part.encode(), "little") % (2**32)
        if isinstance(part, str)
        else int(part)
        for part in parts
    ]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def run_al_experiment(features: np.ndarray, labels: np.ndarray, config: ALConfig) -> list:
    """Run one-vs-all margin-based active learning and return the metric history.

    Each class in arm_classes (default: every class) runs an independent
    arm over the shared pool: train the SVM on the labeled set, record the
    pool AP and held-out accuracy, select one sample, label it, repeat.
    History rows carry (class, iteration, labeled count, AP, selected
    margin, nonempty-lookup flag, test accuracy). Deterministic per seed.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    labels = np.asarray(labels)
    if labels.shape[0] != features.shape[0]:
        raise InvalidConfigurationError("labels and features disagree in length")
    if config.iterations < 0:
        raise InvalidConfigurationError("iterations must be >= 0")

    n = features.shape[0]
    split_rng = np.random.default_rng(_derived_seed(config.seed, "split"))
    perm = split_rng.permutation(n)
    n_test = int(round(config.test_fraction * n))
    test_idx, pool_idx = perm[:n_test], perm[n_test:]
    pool_x, pool_y = features[pool_idx], labels[pool_idx]
    test_x, test_y = features[test_idx], labels[test_idx]
    pool_aug = append_bias(pool_x)
    test_aug = append_bias(test_x)

    classes = sorted(np.unique(labels).tolist())
    arms = list(config.arm_classes) if config.arm_classes else classes
    history = []
    for arm_class in arms:
        bin_y = np.where(pool_y == arm_class, 1.0, -1.0)
        bin_test = np.where(test_y == arm_class, 1.0, -1.0)
        init_rng = np.random.default_rng(_derived_seed(config.seed, "init", arm_class))
        labeled: list[int] = []
        for cls in classes:
            members = np.flatnonzero(pool_y == cls)
            if members.shape[0] < config.initial_per_class:
                raise InvalidConfigurationError(
                    f"class {cls} has fewer than {config.initial_per_class} pool points"
                )
            labeled.extend(init_rng.choice(members, config.initial_per_class, replace=False).tolist())
        state = ALState(
            labeled_ids=sorted(labeled),
            unlabeled_ids=set(range(pool_x.shape[0])) - set(labeled),
        )
        selector = Selector(
            config.selector, pool_aug, seed=_derived_seed(config.seed, "sel", arm_class)
        )
        for it in range(config.iterations):
            model = train_linear_svm(
                pool_x[state.labeled_ids],
                bin_y[state.labeled_ids],
                reg=config.reg,
                epochs=config.epochs,
                seed=_derived_seed(config.seed, "svm", arm_class, it),
            )
            pool_order = sorted(state.unlabeled_ids)
            scores = model.scores(pool_aug[pool_order])
            pool_labels = bin_y[pool_order]
            if np.any(pool_labels > 0):
                ap = average_precision(scores, pool_labels)
            else:
                ap = float("nan")
            test_scores = model.scores(test_aug)
            test_acc = float(np.mean(np.where(test_scores > 0, 1.0, -1.0) == bin_test))

            pick, margin, fallback = selector.select(model, state)
            history.append(
                {
                    "class": arm_class,
                    "iteration": it,
                    "n_labeled": len(state.labeled_ids),
                    "ap": ap,
                    "selected_margin": margin,
                    "nonempty": not fallback,
                    "test_accuracy": test_acc,
                    "selected_id": pick,
                }
            )
            state.labeled_ids.append(pick)
            state.unlabeled_ids.discard(pick)
            state.iteration += 1
            state.history.append(history[-1])
    return history
