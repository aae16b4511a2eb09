"""Nonnegative matrix factorization over observed ratings.

Multiplicative updates restricted to observed entries keep both factor
matrices nonnegative while monotonically decreasing the masked squared
reconstruction error:

    p_uk <- p_uk * (sum_i r_ui q_ik) / (sum_i r^_ui q_ik + eps)

with the sums over the items user u actually rated, then the mirrored
item update against the refreshed user factors. Rows with no observed
ratings are left at their initialization.
"""

import math

import numpy as np
from scipy import sparse

from ..data import RatingDataset
from ._common import (
    FactorModel,
    ModelConfig,
    check_divergence,
    check_training_input,
    training_fallback,
)

# Denominator stabilizer; keeps empty-product rows from dividing by zero.
EPS_STAB = 1e-9


def nmf_fit(train: RatingDataset, k: int, iterations: int,
            seed: int) -> FactorModel:
    """Train the nonnegative model; all ratings must be >= 0.

    The returned model carries ``objective_history``, the masked sum of
    squared errors after each iteration (non-increasing).
    """
    config = ModelConfig(model="nmf", factors=k, iterations=iterations,
                         seed=seed)
    config.validate()
    check_training_input(train)
    if np.any(train.values < 0.0):
        raise ValueError("nmf requires nonnegative ratings")

    rng = np.random.default_rng(seed)
    # Uniform in (0.1, 1): bounded away from the multiplicative updates'
    # absorbing state at zero.
    P = 0.1 + 0.9 * rng.random((train.num_users, k))
    Q = 0.1 + 0.9 * rng.random((train.num_items, k))

    u_indptr, u_items, u_values = train.by_user_arrays()
    i_indptr, i_users, i_values = train.by_item_arrays()
    u_edge_users = np.repeat(np.arange(train.num_users), train.user_counts())
    i_edge_items = np.repeat(np.arange(train.num_items), train.item_counts())
    shape_ui = (train.num_users, train.num_items)
    shape_iu = (train.num_items, train.num_users)
    R_u = sparse.csr_matrix((u_values, u_items, u_indptr), shape=shape_ui)
    R_i = sparse.csr_matrix((i_values, i_users, i_indptr), shape=shape_iu)
    has_u = (train.user_counts() > 0)[:, None]
    has_i = (train.item_counts() > 0)[:, None]

    history = []
    for _ in range(iterations):
        pred = np.einsum("ek,ek->e", P[u_edge_users], Q[u_items])
        Rhat_u = sparse.csr_matrix((pred, u_items, u_indptr), shape=shape_ui)
        ratio = (R_u @ Q) / (Rhat_u @ Q + EPS_STAB)
        P = np.where(has_u, P * ratio, P)

        pred = np.einsum("ek,ek->e", Q[i_edge_items], P[i_users])
        Rhat_i = sparse.csr_matrix((pred, i_users, i_indptr), shape=shape_iu)
        ratio = (R_i @ P) / (Rhat_i @ P + EPS_STAB)
        Q = np.where(has_i, Q * ratio, Q)

        check_divergence("nmf", None, None, P, Q)
        history.append(masked_squared_error(P, Q, u_edge_users, u_items,
                                            u_values))

    return FactorModel("nmf", P, Q, train.scale, training_fallback(train),
                       train.user_counts() > 0, train.item_counts() > 0,
                       config, objective_history=history)


def masked_squared_error(P, Q, users, items, values) -> float:
    """Exactly-summed squared error over the observed entries."""
    pred = np.einsum("ek,ek->e", P[users], Q[items])
    err = values - pred
    return math.fsum(map(float, err * err))
