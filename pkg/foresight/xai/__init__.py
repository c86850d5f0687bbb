# ruff: noqa: F401
from .core import (
    Attribution,
    AttributionError,
    FeatureName,
    GlobalSummary,
    feature_names,
    flatten_window,
    global_shap_summary,
    unflatten_window,
)
from .shapley import SingularSystemError, exact_shapley, kernel_shap
from .lime import FeatureStats, LimeConfig, lime_explain
from .explain import explain_final_instance, explain_global, explain_instance, model_function
