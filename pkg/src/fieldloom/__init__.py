"""fieldloom: continuous probability fields from sparse labelled coordinates.

Coordinate networks (sine, Fourier-feature, ReLU, and Gaussian-feature
variants) and a tensor-spline logistic baseline are trained on labelled
point sets, reconstructed on dense grids, and scored under random and
spatially blocked protocols with ranking, calibration, field-geometry, and
mask-boundary metrics.
"""

__version__ = "0.1.0"

from .dataset import (
    CoordinateNormalizer,
    NormSpec,
    PointSet,
    SplitAssignment,
    apply_normalizer,
    clean,
    fit_normalizer,
    load_points,
    sample_background,
    sample_pixels_from_mask,
    save_points,
    split_blocked,
    split_random,
)
from .errors import DataError, FieldloomError, NumericError
from .estimators import FieldClassifier
from .fields import (
    ArchSpec,
    FieldModel,
    backward,
    count_params,
    encode,
    estimate_macs,
    forward,
    forward_batch,
    init_params,
    load_checkpoint,
    save_checkpoint,
    sigmoid,
)
from .metrics import (
    FieldSummary,
    MetricReport,
    ScoredSet,
    bootstrap_ci,
    boundary_f1,
    compute_report,
    dice_iou,
    ece,
    field_summary,
    leakage_gap,
    pointwise_metrics,
    pr_auc,
    roc_auc,
    select_thresholds,
)
from .optim import (
    AdamState,
    EarlyStopper,
    TrainConfig,
    TrainTrace,
    adam_step,
    bce_loss_and_upstream,
    train,
)
from .raster import BinaryRaster, read_raster, write_raster
from .recon import (
    BenchResult,
    GridSpec,
    ProbabilityField,
    bench,
    evaluate_grid,
    load_field,
    make_grid,
    probability_raster,
    reconstruct_mask,
    save_field,
)
from .spline import (
    SplineLogisticField,
    SplineModel,
    SplineSpec,
    bspline_basis,
    fit_spline,
    predict_spline,
    tensor_design,
)

__all__ = [name for name in dir() if not name.startswith("_")]
