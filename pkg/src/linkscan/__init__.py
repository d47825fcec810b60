"""Split-sample anomaly detection for multi-link network telemetry.

Train a classifier to tell a subject window from its preceding referent
window; if it succeeds beyond chance, the subject window is anomalous.
"""

from .boosting import (
    BoostedModel,
    TreeNode,
    auc,
    feature_importances,
    fit_adaboost,
    fit_tree,
    gini,
    predict_score,
    predict_scores,
)
from .frames import (
    FrameError,
    InsufficientHistoryError,
    LabeledSplit,
    TimeSeriesFrame,
    WindowPair,
    fill_missing,
    load_csv,
    make_split,
    make_window_pair,
    write_csv,
)
from .neural import (
    AdamState,
    MlpModel,
    TrainConfig,
    accuracy_threshold,
    adam_step,
    backward,
    bce_loss,
    binary_accuracy,
    chance_accuracy,
    count_params,
    forward,
    init_mlp,
    train,
)
from .scanner import (
    BdtParams,
    DetectionReport,
    FrameTooShortError,
    NnParams,
    ScanConfig,
    WindowVerdict,
    attribute,
    merge_flags,
    scan,
)
from .simulate import (
    AnomalyEvent,
    SeriesProfile,
    gen_normal,
    inject_anomaly,
    sensitivity_schedule,
    table2_schedule,
)

__version__ = "0.1.0"
