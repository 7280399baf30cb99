"""Two-way deconfounder for off-policy evaluation under unmeasured confounding."""

from twode._core import (
    __version__,
    generate,
    linear_study,
    metrics,
    policy_prob,
    theoretical_mse,
    train_and_evaluate,
    true_policy_value,
)

__all__ = [
    "__version__",
    "generate",
    "linear_study",
    "metrics",
    "policy_prob",
    "theoretical_mse",
    "train_and_evaluate",
    "true_policy_value",
]
