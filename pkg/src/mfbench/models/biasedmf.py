"""Matrix factorization with global, user and item bias terms.

Predicts r_ui = mu + b_u + b_i + p_u . q_i and minimizes the regularized
squared error

    sum (r_ui - r^_ui)^2 + reg * (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2)

by per-rating gradient steps: b' = b + lr (e - reg b) for both biases,
p' = p + lr (e q - reg p) and q' = q + lr (e p - reg q). The user sweep
updates (b_u, p_u), the item sweep (b_i, q_i).
"""

import numpy as np

from ..data import RatingDataset, global_mean
from . import _kernels
from ._common import (
    ModelConfig,
    TrainedModel,
    check_divergence,
    check_training_input,
    uniform_init,
)


class BiasedFactorModel(TrainedModel):
    """Dot-product-plus-biases predictor.

    Cold pairs keep whatever bias structure is known: unknown user gives
    mu + b_i, unknown item gives mu + b_u, both unknown gives mu.
    """

    def __init__(self, P, Q, user_bias, item_bias, mu, scale,
                 user_rated, item_rated, config):
        super().__init__("biasedmf", scale, mu, user_rated, item_rated, config)
        self.P = P
        self.Q = Q
        self.user_bias = user_bias
        self.item_bias = item_bias
        self.mu = mu

    def raw_score(self, u: int, i: int) -> float:
        self._check_indices(u, i)
        return float(self.mu + self.user_bias[u] + self.item_bias[i]
                     + np.dot(self.P[u], self.Q[i]))

    def predict(self, u: int, i: int) -> float:
        self._check_indices(u, i)
        known_u = bool(self.user_rated[u])
        known_i = bool(self.item_rated[i])
        if known_u and known_i:
            value = self.raw_score(u, i)
        elif known_i:
            value = self.mu + self.item_bias[i]
        elif known_u:
            value = self.mu + self.user_bias[u]
        else:
            value = self.mu
        return self.scale.clamp(float(value))


def biasedmf_fit(train: RatingDataset, k: int, learning_rate: float,
                 regularization: float, iterations: int, seed: int,
                 init_factors=None) -> BiasedFactorModel:
    """Train the biased model; mu is fixed to the training global mean."""
    config = ModelConfig(model="biasedmf", factors=k, iterations=iterations,
                         learning_rate=learning_rate,
                         regularization=regularization, seed=seed)
    config.validate()
    check_training_input(train)

    mu = global_mean(train)
    rng = np.random.default_rng(seed)
    if init_factors is None:
        P = uniform_init(rng, train.num_users, k)
        Q = uniform_init(rng, train.num_items, k)
    else:
        P = np.array(init_factors[0], dtype=np.float64)
        Q = np.array(init_factors[1], dtype=np.float64)
    bu = np.zeros(train.num_users)
    bi = np.zeros(train.num_items)

    u_indptr, u_items, u_values = train.by_user_arrays()
    i_indptr, i_users, i_values = train.by_item_arrays()
    for _ in range(iterations):
        _kernels.biasedmf_iteration(u_indptr, u_items, u_values,
                                    i_indptr, i_users, i_values,
                                    P, Q, bu, bi, mu,
                                    learning_rate, regularization)
        check_divergence("biasedmf", learning_rate, regularization,
                         P, Q, bu, bi)

    return BiasedFactorModel(P, Q, bu, bi, mu, train.scale,
                             train.user_counts() > 0,
                             train.item_counts() > 0, config)


def regularized_objective(P, Q, bu, bi, mu, reg, users, items, values) -> float:
    """Regularized squared error over the given ratings.

    The penalty counts each rated pair's parameters once per rating, the
    same weighting the per-rating updates descend.
    """
    pred = (mu + bu[users] + bi[items]
            + np.einsum("ek,ek->e", P[users], Q[items]))
    err = values - pred
    penalty = (bu[users] ** 2 + bi[items] ** 2
               + np.einsum("ek,ek->e", P[users], P[users])
               + np.einsum("ek,ek->e", Q[items], Q[items]))
    return float(np.dot(err, err) + reg * np.sum(penalty))


def regularized_gradients(P, Q, bu, bi, mu, reg, users, items, values):
    """Analytic gradient of :func:`regularized_objective`."""
    pred = (mu + bu[users] + bi[items]
            + np.einsum("ek,ek->e", P[users], Q[items]))
    err = values - pred
    gP = np.zeros_like(P)
    gQ = np.zeros_like(Q)
    gbu = np.zeros_like(bu)
    gbi = np.zeros_like(bi)
    np.add.at(gP, users, -2.0 * err[:, None] * Q[items] + 2.0 * reg * P[users])
    np.add.at(gQ, items, -2.0 * err[:, None] * P[users] + 2.0 * reg * Q[items])
    np.add.at(gbu, users, -2.0 * err + 2.0 * reg * bu[users])
    np.add.at(gbi, items, -2.0 * err + 2.0 * reg * bi[items])
    return gP, gQ, gbu, gbi
