"""Shapley attributions against a single background point.

Every coalition is evaluated as ``model_fn(z * x + (1 - z) * background)``: features in the coalition take the
instance value and the rest take the background value.
"""
from __future__ import annotations

import numpy as np
from loguru import logger
from scipy.special import binom

from foresight.random import generator
from foresight.xai.core import Attribution, AttributionError, check_instance, default_names, evaluate_model

MAX_EXACT_FEATURES = 20
EVALUATION_BATCH_SIZE = 8192


class SingularSystemError(AttributionError):
    def __init__(self, rank, num_unknowns):
        super().__init__(f"KernelSHAP system is singular: rank {rank} for {num_unknowns} unknowns")
        self.rank = rank


def coalition_matrix(masks, num_features) -> np.ndarray:
    """Boolean ``(len(masks), num_features)`` matrix; bit ``i`` of a mask switches feature ``i`` on."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(num_features, dtype=np.int64)) & 1).astype(bool)


def evaluate_coalitions(model_fn, coalitions, x, background) -> np.ndarray:
    outputs = []
    for start in range(0, len(coalitions), EVALUATION_BATCH_SIZE):
        batch = coalitions[start : start + EVALUATION_BATCH_SIZE]
        outputs.append(evaluate_model(model_fn, np.where(batch, x, background)))
    return np.concatenate(outputs)


def exact_shapley(model_fn, x, background, *, feature_names=None) -> Attribution:
    """Shapley values by enumerating all ``2 ** M`` coalitions; ``model_fn`` maps ``(n, M)`` to ``(n,)``."""
    x, background = check_instance(x, background)
    num_features = x.size
    if num_features > MAX_EXACT_FEATURES:
        raise AttributionError(
            f"Exact Shapley enumeration supports at most {MAX_EXACT_FEATURES} features, got {num_features}"
        )
    names = default_names(num_features, feature_names)

    masks = np.arange(2**num_features, dtype=np.int64)
    coalitions = coalition_matrix(masks, num_features)
    values = evaluate_coalitions(model_fn, coalitions, x, background)
    sizes = coalitions.sum(axis=1)

    # weight of a coalition of size s that excludes the feature: s! (M - s - 1)! / M!
    size_weights = 1.0 / (num_features * binom(num_features - 1, np.arange(num_features)))

    scores = np.zeros(num_features)
    for feature in range(num_features):
        bit = np.int64(1) << feature
        without = masks[(masks & bit) == 0]
        marginals = values[without | bit] - values[without]
        scores[feature] = np.sum(size_weights[sizes[without]] * marginals)

    return Attribution(
        method="exact_shapley",
        feature_scores=dict(zip(names, scores.tolist())),
        base_value=values[0],
        prediction=values[-1],
        n_samples=len(masks),
    )


def shapley_kernel_weight(num_features, size):
    return (num_features - 1) / (binom(num_features, size) * size * (num_features - size))


def default_num_samples(num_features) -> int:
    return 2 * num_features + 2048


def enumerate_coalitions(num_features):
    masks = np.arange(1, 2**num_features - 1, dtype=np.int64)
    coalitions = coalition_matrix(masks, num_features)
    weights = shapley_kernel_weight(num_features, coalitions.sum(axis=1))
    return coalitions, weights


def sample_coalitions(num_features, num_samples, rng):
    """Paired samples: coalition sizes follow the Shapley kernel and each draw is followed by its complement."""
    sizes = np.arange(1, num_features)
    size_probabilities = shapley_kernel_weight(num_features, sizes) * binom(num_features, sizes)
    size_probabilities = size_probabilities / size_probabilities.sum()

    num_pairs = num_samples // 2
    drawn_sizes = rng.choice(sizes, size=num_pairs, p=size_probabilities)
    coalitions = np.zeros((2 * num_pairs, num_features), dtype=bool)
    for pair, size in enumerate(drawn_sizes):
        members = rng.permutation(num_features)[:size]
        coalitions[2 * pair, members] = True
        coalitions[2 * pair + 1] = ~coalitions[2 * pair]
    return coalitions, np.ones(len(coalitions))


def solve_constrained(coalitions, weights, values, total):
    """Weighted least squares for scores that sum to ``total``, eliminating the last score."""
    num_features = coalitions.shape[1]
    last = coalitions[:, -1].astype(np.float64)
    design = coalitions[:, :-1].astype(np.float64) - last[:, None]
    target = values - last * total

    scale = np.sqrt(weights)
    solution, _, rank, _ = np.linalg.lstsq(design * scale[:, None], target * scale, rcond=None)
    if rank < num_features - 1:
        raise SingularSystemError(rank, num_features - 1)

    scores = np.append(solution, total - solution.sum())
    residual = float(np.sqrt(np.sum(weights * np.square(design @ solution - target)) / np.sum(weights)))
    return scores, residual


def kernel_shap(model_fn, x, background, n_samples=None, seed=0, *, feature_names=None) -> Attribution:
    """KernelSHAP with the efficiency constraint enforced exactly.

    When ``n_samples`` covers all ``2 ** M - 2`` proper coalitions they are enumerated with exact kernel weights,
    which reproduces the exact Shapley values.
    """
    x, background = check_instance(x, background)
    num_features = x.size
    names = default_names(num_features, feature_names)
    n_samples = default_num_samples(num_features) if n_samples is None else int(n_samples)
    if n_samples < num_features + 2:
        raise AttributionError(f"kernel_shap needs at least M + 2 = {num_features + 2} samples, got {n_samples}")

    base_value, prediction = evaluate_model(model_fn, np.stack([background, x]))
    total = prediction - base_value

    if num_features == 1:
        scores, residual, evaluated = np.array([total]), 0.0, 2
    else:
        if n_samples >= 2**num_features - 2:
            coalitions, weights = enumerate_coalitions(num_features)
        else:
            coalitions, weights = sample_coalitions(num_features, n_samples, generator(seed, "kernel_shap"))
        values = evaluate_coalitions(model_fn, coalitions, x, background) - base_value
        scores, residual = solve_constrained(coalitions, weights, values, total)
        evaluated = len(coalitions) + 2

    logger.debug(f"kernel_shap: {num_features} features, {evaluated} model evaluations, residual {residual:.3g}")
    return Attribution(
        method="kernel_shap",
        feature_scores=dict(zip(names, scores.tolist())),
        base_value=base_value,
        prediction=prediction,
        n_samples=evaluated,
        residual=residual,
    )


__all__ = [
    "MAX_EXACT_FEATURES",
    "SingularSystemError",
    "coalition_matrix",
    "default_num_samples",
    "exact_shapley",
    "kernel_shap",
    "shapley_kernel_weight",
]
