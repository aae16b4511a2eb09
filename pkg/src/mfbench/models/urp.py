"""User rating profile model: a mixture of latent attitudes per user.

Each user u draws attitude weights theta from Dirichlet(alpha); each
rated item y draws an attitude z from theta and its discrete rating
value v from a per-item multinomial beta[., y, z]. Variational EM with
one responsibility vector phi per observed rating:

    phi_zy  prop.to  beta[v_y, y, z] * exp(psi(gamma_z) - psi(sum_j gamma_j))
    gamma_z = alpha_z + sum_y phi_zy            (observed items of u)
    beta[v, y, z]  prop.to  sum_u phi_zy [r_uy = v]   (+ smoothing)

followed by the Dirichlet fixed-point refresh of alpha through digamma
and its inverse:

    psi(alpha_z) = psi(sum_z alpha_z)
                   + (sum_u psi(gamma^u_z) - psi(sum_u gamma^u_z)) / N

Responsibilities are computed in log space with max subtraction; if the
alpha fixed point produces a non-finite target, that component keeps its
previous value and a skip counter is incremented. Like the Bayesian
nonnegative model, gamma and beta are seeded from the random initial
responsibilities: flat starts would freeze the symmetric fixed point.

Prediction is the posterior-expected rating: the attitude-averaged
multinomial over score values, folded against the score grid.
"""

import numpy as np
from scipy import sparse

from ..data import RatingDataset
from ..mathfns import _digamma_array, inverse_digamma
from ._common import (
    ModelConfig,
    TrainedModel,
    check_training_input,
    training_fallback,
)

# Additive smoothing for the per-item multinomials; keeps log(beta) finite
# for (value, item) combinations never observed in training.
BETA_SMOOTHING = 1e-6


class URPModel(TrainedModel):
    """Trained attitude-mixture posterior."""

    def __init__(self, gamma, beta, alpha, responsibilities, scale, fallback,
                 user_rated, item_rated, config, alpha_update_skips=0):
        super().__init__("urp", scale, fallback, user_rated, item_rated,
                         config)
        self.gamma = gamma          # (num_users, k)
        self.beta = beta            # (V, num_items, k)
        self.alpha = alpha          # (k,)
        self.responsibilities = responsibilities
        self.alpha_update_skips = alpha_update_skips

    def score_distribution(self, u: int, i: int) -> np.ndarray:
        """Posterior probability of each score value (sums to 1)."""
        self._check_indices(u, i)
        theta = self.gamma[u] / self.gamma[u].sum()
        return self.beta[:, i, :] @ theta

    def predict(self, u: int, i: int) -> float:
        self._check_indices(u, i)
        if self._is_cold(u, i):
            return self.scale.clamp(self.fallback)
        dist = self.score_distribution(u, i)
        return self.scale.clamp(float(dist @ self.scale.scores))


def urp_fit(train: RatingDataset, k: int, iterations: int,
            seed: int) -> URPModel:
    config = ModelConfig(model="urp", factors=k, iterations=iterations,
                         seed=seed)
    config.validate()
    check_training_input(train)

    V = train.scale.num_scores
    num_users, num_items = train.num_users, train.num_items
    u_indptr, u_items, u_values = train.by_user_arrays()
    nnz = len(u_values)
    edge_users = np.repeat(np.arange(num_users), train.user_counts())
    edge_items = u_items
    to_index = np.vectorize(train.scale.score_index, otypes=[np.int64])
    edge_values = to_index(u_values) if nnz else np.empty(0, np.int64)

    by_user = sparse.csr_matrix(
        (np.ones(nnz), np.arange(nnz), u_indptr), shape=(num_users, nnz))
    by_value_item = sparse.csr_matrix(
        (np.ones(nnz), (edge_values * num_items + edge_items, np.arange(nnz))),
        shape=(V * num_items, nnz))

    def multinomials(phi):
        counts = (by_value_item @ phi).reshape(V, num_items, k)
        counts += BETA_SMOOTHING
        return counts / counts.sum(axis=0, keepdims=True)

    rng = np.random.default_rng(seed)
    phi = rng.random((nnz, k))
    phi /= phi.sum(axis=1, keepdims=True)
    alpha = np.ones(k)
    gamma = alpha + by_user @ phi
    beta = multinomials(phi)

    skips = 0
    for _ in range(iterations):
        dg = _digamma_array(gamma) - _digamma_array(
            gamma.sum(axis=1))[:, None]
        log_phi = np.log(beta[edge_values, edge_items, :]) + dg[edge_users]
        log_phi -= log_phi.max(axis=1, keepdims=True)
        phi = np.exp(log_phi)
        phi /= phi.sum(axis=1, keepdims=True)
        gamma = alpha + by_user @ phi
        beta = multinomials(phi)

        target = (_digamma_array(np.array([alpha.sum()]))[0]
                  + (_digamma_array(gamma).sum(axis=0)
                     - _digamma_array(gamma.sum(axis=0))) / num_users)
        new_alpha = alpha.copy()
        for z in range(k):
            if np.isfinite(target[z]):
                new_alpha[z] = inverse_digamma(float(target[z]))
            else:
                skips += 1
        alpha = new_alpha

    return URPModel(gamma, beta, alpha, phi, train.scale,
                    training_fallback(train), train.user_counts() > 0,
                    train.item_counts() > 0, config,
                    alpha_update_skips=skips)
