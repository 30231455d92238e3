"""Discriminant multi-label learning with missing labels.

Nuclear-norm regularized multi-label regression under partially observed
label matrices, solved by a concave-convex procedure, in linear and
kernel form, with ranking metrics and an experiment harness.
"""

from .dataset_io import (
    Dataset,
    ObservationMask,
    ObservedLabelMatrix,
    apply_mask,
    generate_mask,
    generate_synthetic,
    load_dataset,
    save_dataset,
    split_train_test,
)
from .kernels import KernelSpec, cross_kernel, gram_matrix
from .metrics import EvaluationReport, evaluate_all
from .model import TrainedModel, load_model, predict_scores, save_model
from .nucnorm import nuclear_norm, nuclear_norm_subgradient
from .objective import ObjectiveSpec, build_label_groups, objective_value
from .optimizer import CccpConfig, fit, fit_kernel, fit_linear

__version__ = "0.1.0"
