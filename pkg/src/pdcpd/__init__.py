"""Process-driven change point detection for discrete event systems."""
from .annealer import AnnealConfig, ProcessAssessor, anneal, neighbors, pda, temp
from .ddcpd import ChangePointSet, conciliate, cost_mean, cost_var, detect_multi, detect_single
from .errors import ConfigurationError, InsufficientDataError, ParseError, TrainingError
from .featurizer import FEATURE_NAMES, FeatureSeries, snapshot_features
from .narx import (
    AccuracyReport,
    NarxConfig,
    NarxModel,
    discretize,
    gradient_check,
    kfold_tune,
    predict,
    train,
    windowed_accuracy,
)
from .seeding import derive_seed
from .simkit import (
    ArrivalTrace,
    EventLog,
    ResourceSchedule,
    ServiceModel,
    fit_service,
    sample_arrivals,
    simulate,
)

__version__ = "0.1.0"
