"""Shared model types: configuration, trained-model bases, training guards."""

from dataclasses import dataclass

import numpy as np

from ..data import RatingDataset, ScoreScale, global_mean

MODEL_KINDS = ("pmf", "biasedmf", "nmf", "bemf", "bnmf", "urp")

# Any factor or bias whose magnitude crosses this bound aborts training.
DIVERGENCE_LIMIT = 1e6


class DivergenceError(RuntimeError):
    """Training blew up; carries the hyperparameters that caused it."""

    def __init__(self, model_kind, learning_rate, regularization):
        self.model_kind = model_kind
        self.learning_rate = learning_rate
        self.regularization = regularization
        super().__init__(
            f"{model_kind} training diverged "
            f"(learning_rate={learning_rate}, regularization={regularization})"
        )


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters for one training run.

    Fields irrelevant to ``model`` are ignored by training but preserved
    for reporting, so a config can be expanded from a shared grid.
    """

    model: str
    factors: int = 8
    iterations: int = 100
    learning_rate: float = 0.01
    regularization: float = 0.1
    bnmf_alpha: float = 0.8
    bnmf_beta: float = 5.0
    seed: int = 0

    def validate(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model {self.model!r}; "
                             f"choose one of {', '.join(MODEL_KINDS)}")
        if self.factors < 1:
            raise ValueError(f"factors must be >= 1, got {self.factors}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.model in ("pmf", "biasedmf", "bemf"):
            # 0 is a valid degenerate (no-op steps, factors keep their
            # initialization); only negative rates are rejected.
            if self.learning_rate < 0.0:
                raise ValueError("learning_rate must be >= 0")
            if self.regularization < 0.0:
                raise ValueError("regularization must be >= 0")
        if self.model == "bnmf":
            if not (0.0 < self.bnmf_alpha < 1.0):
                raise ValueError("bnmf_alpha must lie in (0, 1)")
            if self.bnmf_beta <= 0.0:
                raise ValueError("bnmf_beta must be > 0")


def check_training_input(train: RatingDataset):
    if train.num_ratings == 0:
        raise ValueError("training set is empty")


def check_divergence(model_kind, learning_rate, regularization, *arrays):
    """Abort loudly instead of propagating silent NaN/Inf factors."""
    for arr in arrays:
        m = np.max(np.abs(arr)) if arr.size else 0.0
        if not np.isfinite(m) or m > DIVERGENCE_LIMIT:
            raise DivergenceError(model_kind, learning_rate, regularization)


def uniform_init(rng, rows, k):
    """Factor rows uniform in (0, 1/sqrt(k)); keeps initial dots near 1/4."""
    return rng.random((rows, k)) * (1.0 / np.sqrt(k))


class TrainedModel:
    """Base for all trained models: clamped predictions with cold fallback.

    ``user_rated`` / ``item_rated`` flag indices that had at least one
    training rating; pairs touching an unrated index fall back to the
    training global mean (models with bias structure override this).
    """

    def __init__(self, kind, scale: ScoreScale, fallback: float,
                 user_rated: np.ndarray, item_rated: np.ndarray, config):
        self.kind = kind
        self.scale = scale
        self.fallback = fallback
        self.user_rated = user_rated
        self.item_rated = item_rated
        self.config = config

    @property
    def num_users(self) -> int:
        return len(self.user_rated)

    @property
    def num_items(self) -> int:
        return len(self.item_rated)

    def _check_indices(self, u, i):
        if not (0 <= u < self.num_users):
            raise IndexError(f"user index {u} out of range")
        if not (0 <= i < self.num_items):
            raise IndexError(f"item index {i} out of range")

    def _is_cold(self, u, i) -> bool:
        return not (self.user_rated[u] and self.item_rated[i])

    def predict(self, u: int, i: int) -> float:
        raise NotImplementedError


class FactorModel(TrainedModel):
    """Dot-product predictor over user and item factor matrices."""

    def __init__(self, kind, P, Q, scale, fallback, user_rated, item_rated,
                 config, objective_history=None):
        super().__init__(kind, scale, fallback, user_rated, item_rated, config)
        self.P = P
        self.Q = Q
        self.objective_history = objective_history

    def raw_score(self, u: int, i: int) -> float:
        """Unclamped factor dot product, no cold-start fallback."""
        self._check_indices(u, i)
        return float(np.dot(self.P[u], self.Q[i]))

    def predict(self, u: int, i: int) -> float:
        self._check_indices(u, i)
        if self._is_cold(u, i):
            return self.scale.clamp(self.fallback)
        return self.scale.clamp(float(np.dot(self.P[u], self.Q[i])))


def training_fallback(train: RatingDataset) -> float:
    return global_mean(train)
