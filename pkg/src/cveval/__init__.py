"""Control-variates estimation of human evaluation scores for text generation."""

from .bootstrap import BootstrapConfig, TrajectoryPoint, bootstrap_ci, empirical_data_efficiency, trajectory
from .components import (
    AnnotationTable,
    CorrelationReport,
    VarianceComponents,
    correlation_report,
    estimate_alpha_rho,
    estimate_annotator_variance,
    estimate_human_metric_variance,
    item_means,
    variance_components,
)
from .estimators import (
    EstimateReport,
    MetricStandardization,
    PairedSample,
    TheoryParams,
    control_variates,
    control_variates_oracle,
    data_efficiency,
    fit_standardization,
    plan_sample_size,
    sample_mean,
    variance_control,
    variance_simple,
)

__version__ = "0.1.0"
