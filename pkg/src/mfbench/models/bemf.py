"""Bernoulli factorization ensemble: one binary model per legal score.

For each score s the observed ratings define a binary matrix Y^s with
Y^s_ui = 1 where r_ui = s and 0 where the pair was rated with another
score (unrated pairs stay missing). Each Y^s gets its own factor pair
(P^s, Q^s) trained by gradient ascent on the Bernoulli log-likelihood

    sum_{Y=1} log sigmoid(p.q) + sum_{Y=0} log(1 - sigmoid(p.q))

with an L2 penalty: a user sweep applies, per user row,

    P' = P + lr * (sum_i (y_ui - sigmoid(p.q)) q_i - reg * P)

over that user's observed items, then the item sweep mirrors it against
the refreshed user factors. Prediction normalizes the D per-score
sigmoids into a probability vector; the top score is the prediction and
its probability the reliability.
"""

import numpy as np
from scipy import sparse

from ..data import RatingDataset
from ..mathfns import _sigmoid_array
from ._common import (
    ModelConfig,
    TrainedModel,
    check_divergence,
    check_training_input,
    training_fallback,
    uniform_init,
)


class BeMFModel(TrainedModel):
    """Per-score factor pairs with probabilistic aggregation."""

    def __init__(self, P_stack, Q_stack, scale, fallback,
                 user_rated, item_rated, config):
        super().__init__("bemf", scale, fallback, user_rated, item_rated,
                         config)
        self.P_stack = P_stack  # (D, num_users, k)
        self.Q_stack = Q_stack  # (D, num_items, k)

    def score_probabilities(self, u: int, i: int) -> np.ndarray:
        """Normalized probability of each legal score (sums to 1)."""
        self._check_indices(u, i)
        z = np.einsum("sk,sk->s", self.P_stack[:, u, :], self.Q_stack[:, i, :])
        probs = _sigmoid_array(z)
        return probs / probs.sum()

    def predict_with_reliability(self, u: int, i: int):
        """(predicted score, reliability); ties pick the lowest score."""
        self._check_indices(u, i)
        if self._is_cold(u, i):
            scores = self.scale.scores
            nearest = int(np.argmin(np.abs(scores - self.fallback)))
            return float(scores[nearest]), 1.0 / self.scale.num_scores
        probs = self.score_probabilities(u, i)
        best = int(np.argmax(probs))  # argmax takes the first maximum
        return float(self.scale.scores[best]), float(probs[best])

    def predict(self, u: int, i: int) -> float:
        return self.predict_with_reliability(u, i)[0]


def indicator_values(train: RatingDataset):
    """Per-edge score indices in by-user and by-item edge order.

    ``sidx_u[e] == s`` means edge ``e`` of the by-user view carries the
    s-th legal score, so Y^s is 1 there and every other Y is 0.
    """
    _, _, u_values = train.by_user_arrays()
    _, _, i_values = train.by_item_arrays()
    to_index = np.vectorize(train.scale.score_index, otypes=[np.int64])
    sidx_u = to_index(u_values) if len(u_values) else np.empty(0, np.int64)
    sidx_i = to_index(i_values) if len(i_values) else np.empty(0, np.int64)
    if len(sidx_u) and (sidx_u.min() < 0 or sidx_i.min() < 0):
        raise ValueError("training ratings must lie on the score grid")
    return sidx_u, sidx_i


def bemf_fit(train: RatingDataset, k: int, learning_rate: float,
             regularization: float, iterations: int, seed: int) -> BeMFModel:
    """Train the D parallel Bernoulli factorizations."""
    config = ModelConfig(model="bemf", factors=k, iterations=iterations,
                         learning_rate=learning_rate,
                         regularization=regularization, seed=seed)
    config.validate()
    check_training_input(train)

    D = train.scale.num_scores
    num_users, num_items = train.num_users, train.num_items
    u_indptr, u_items, _ = train.by_user_arrays()
    i_indptr, i_users, _ = train.by_item_arrays()
    u_edge_users = np.repeat(np.arange(num_users), train.user_counts())
    i_edge_items = np.repeat(np.arange(num_items), train.item_counts())
    sidx_u, sidx_i = indicator_values(train)

    rng = np.random.default_rng(seed)
    P_stack = np.empty((D, num_users, k))
    Q_stack = np.empty((D, num_items, k))
    for s in range(D):
        P_stack[s] = uniform_init(rng, num_users, k)
        Q_stack[s] = uniform_init(rng, num_items, k)

    for s in range(D):
        P, Q = P_stack[s], Q_stack[s]
        y_u = (sidx_u == s).astype(np.float64)
        y_i = (sidx_i == s).astype(np.float64)
        for _ in range(iterations):
            z = np.einsum("ek,ek->e", P[u_edge_users], Q[u_items])
            coef = y_u - _sigmoid_array(z)
            grad = sparse.csr_matrix((coef, u_items, u_indptr),
                                     shape=(num_users, num_items)) @ Q
            P += learning_rate * (grad - regularization * P)

            z = np.einsum("ek,ek->e", Q[i_edge_items], P[i_users])
            coef = y_i - _sigmoid_array(z)
            grad = sparse.csr_matrix((coef, i_users, i_indptr),
                                     shape=(num_items, num_users)) @ P
            Q += learning_rate * (grad - regularization * Q)

            check_divergence("bemf", learning_rate, regularization, P, Q)

    return BeMFModel(P_stack, Q_stack, train.scale, training_fallback(train),
                     train.user_counts() > 0, train.item_counts() > 0,
                     config)


def bernoulli_loglikelihood(P, Q, users, items, y) -> float:
    """Log-likelihood of binary labels y under the sigmoid dot model."""
    z = np.einsum("ek,ek->e", P[users], Q[items])
    s = _sigmoid_array(z)
    return float(np.sum(y * np.log(s) + (1.0 - y) * np.log1p(-s)))


def bernoulli_gradients(P, Q, users, items, y):
    """Analytic gradient of :func:`bernoulli_loglikelihood`."""
    z = np.einsum("ek,ek->e", P[users], Q[items])
    coef = y - _sigmoid_array(z)
    gP = np.zeros_like(P)
    gQ = np.zeros_like(Q)
    np.add.at(gP, users, coef[:, None] * Q[items])
    np.add.at(gQ, items, coef[:, None] * P[users])
    return gP, gQ
