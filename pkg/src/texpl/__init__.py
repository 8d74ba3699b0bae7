"""Formal explanations and verification for tree ensembles."""

from .model import RFMV, RFWV, BT, Ensemble, load_model, load_model_file, load_bundled, predict, class_scores
from .explain import (
    ExplainerConfig,
    ExplanationProblem,
    Explanation,
    NoExplanation,
    entcheck,
    enumerate_xps,
    find_axp,
    find_cxp,
    smallest_axp,
    smallest_cxp,
)

__version__ = "0.1.0"
