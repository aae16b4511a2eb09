"""Plain matrix factorization trained by per-rating gradient descent.

Predicts r_ui as the dot product p_u . q_i and minimizes the squared
error over observed ratings, with an optional L2 penalty. The gradient
of one observation's squared error with respect to p_u is -2 e_ui q_i,
giving the update p' = p + lr * (2 e q - reg p) and its mirror for q.
"""

import numpy as np

from ..data import RatingDataset
from . import _kernels
from ._common import (
    FactorModel,
    ModelConfig,
    check_divergence,
    check_training_input,
    training_fallback,
    uniform_init,
)


def pmf_fit(train: RatingDataset, k: int, learning_rate: float,
            regularization: float, iterations: int, seed: int,
            init_factors=None) -> FactorModel:
    """Train the dot-product model.

    ``init_factors`` is a test hook: a (P0, Q0) pair overriding the
    seeded uniform initialization in (0, 1/sqrt(k)).
    """
    config = ModelConfig(model="pmf", factors=k, iterations=iterations,
                         learning_rate=learning_rate,
                         regularization=regularization, seed=seed)
    config.validate()
    check_training_input(train)

    rng = np.random.default_rng(seed)
    if init_factors is None:
        P = uniform_init(rng, train.num_users, k)
        Q = uniform_init(rng, train.num_items, k)
    else:
        P = np.array(init_factors[0], dtype=np.float64)
        Q = np.array(init_factors[1], dtype=np.float64)

    u_indptr, u_items, u_values = train.by_user_arrays()
    i_indptr, i_users, i_values = train.by_item_arrays()
    for _ in range(iterations):
        _kernels.pmf_iteration(u_indptr, u_items, u_values,
                               i_indptr, i_users, i_values,
                               P, Q, learning_rate, regularization)
        check_divergence("pmf", learning_rate, regularization, P, Q)

    return FactorModel("pmf", P, Q, train.scale, training_fallback(train),
                       train.user_counts() > 0, train.item_counts() > 0,
                       config)


def squared_error_objective(P, Q, users, items, values) -> float:
    """Sum of squared prediction errors over the given ratings."""
    pred = np.einsum("ek,ek->e", P[users], Q[items])
    err = values - pred
    return float(np.dot(err, err))


def squared_error_gradients(P, Q, users, items, values):
    """Analytic gradient of :func:`squared_error_objective` w.r.t. P and Q."""
    pred = np.einsum("ek,ek->e", P[users], Q[items])
    err = values - pred
    gP = np.zeros_like(P)
    gQ = np.zeros_like(Q)
    np.add.at(gP, users, (-2.0 * err)[:, None] * Q[items])
    np.add.at(gQ, items, (-2.0 * err)[:, None] * P[users])
    return gP, gQ
