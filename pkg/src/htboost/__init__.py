"""Gradient boosted trees regularized by a permutation null-gain split test."""

from .booster import (
    BoosterConfig,
    Ensemble,
    ModelFormatError,
    PenaltyConfig,
    fit,
    load_model,
    predict,
    save_model,
)
from .data import (
    BinnedColumn,
    DataError,
    Dataset,
    FoldPlan,
    IngestSummary,
    bin_dataset,
    build_bins,
    kfold_indices,
    load_csv,
    one_hot_encode,
)
from .evaluate import (
    CvResult,
    GridResult,
    calibrate_correlation,
    calibrate_type1,
    cross_validate,
    default_grid,
    grid_search,
    mae,
    roc_auc,
)
from .losses import GradHess, LossKind, base_score, grad_hess, loss_value
from .nulltest import (
    NullDraw,
    PruneReport,
    TestConfig,
    TouchCounter,
    make_r_y,
    null_gain_draw,
    prune_tree,
    sample_cover_triples,
    split_test,
    stop_check,
)
from .rng import RngStream, derive_seed
from .tree import (
    SplitCandidate,
    Tree,
    find_best_split,
    grow_tree,
    leaf_weight,
    predict_rows,
    predict_tree,
    regularized_gain,
    split_gain,
)

__version__ = "0.1.0"
