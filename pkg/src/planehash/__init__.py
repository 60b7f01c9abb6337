"""Point-to-hyperplane nearest-neighbor hashing.

Randomized (AH, EH, BH) and learned (LBH) hash families whose collisions
track the point-to-hyperplane angle, bit-packed Hamming indexes queried
through the flipped-code convention, closed-form and Monte-Carlo
collision-probability tooling, and a margin-based SVM active-learning
harness that plugs the indexes in as sample selectors.
"""

__version__ = "0.1.0"

from .active import (
    ALConfig,
    LinearModel,
    Selector,
    SelectorConfig,
    append_bias,
    average_precision,
    run_al_experiment,
    select_next,
    train_linear_svm,
)
from .datasets import Dataset, gen_synthetic, read_dataset, write_dataset
from .evaluation import brute_force_search, evaluate_scheme, random_point_baseline
from .families import (
    AHFamily,
    BilinearFamily,
    EHFamily,
    EHProjection,
    InputRole,
    LSHParams,
    ProjectionPair,
    ah_hash,
    bh_hash,
    collision_prob,
    eh_hash,
    estimate_collision,
    lsh_params,
    random_family,
)
from .geometry import (
    Angles,
    DataPoint,
    HyperplaneQuery,
    abs_cosine,
    angle_between,
    point_to_hyperplane_distance,
)
from .index import (
    HammingIndex,
    HashCode,
    QueryResult,
    encode,
    flip_code,
    hamming_distance,
    pack_bits,
    theoretical_table_plan,
    unpack_bits,
)
from .learning import (
    LearnedHashFamily,
    OptConfig,
    SimilarityTarget,
    build_similarity_target,
    code_correlation_error,
    fit_bit,
    learn_family,
    sample_training_set,
    select_thresholds,
    sigmoid_phi,
    surrogate_cost,
    surrogate_gradient,
)
