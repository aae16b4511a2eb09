"""Bayesian nonnegative factorization by mean-field variational updates.

Each observed rating is rescaled to r* in [0, 1] and split into
pseudo-counts r+ = (D-1) r* and r- = (D-1)(1 - r*), D being the number
of legal scores. The posterior is approximated by Dirichlet rows gamma
(users), Beta pairs (eps+, eps-) (items) and one responsibility vector
lambda per observed rating:

    lambda_uik  prop.to  exp(psi(gamma_uk) + r+ psi(eps+_ik)
                             + r- psi(eps-_ik) - (D-1) psi(eps+ + eps-))
    gamma_uk = alpha + sum_i lambda_uik
    eps+_ik  = beta  + sum_i lambda_uik r+_ui
    eps-_ik  = beta  + sum_i lambda_uik r-_ui

(sums over the user's / item's observed ratings). The responsibility
exponent is computed in log space with per-row max subtraction. The
Dirichlet/Beta parameters are seeded from the (normalized-uniform)
initial responsibilities rather than the bare priors: starting them flat
would make every factor's update identical and freeze the symmetric
fixed point.

Prediction uses the posterior means a_uk = gamma_uk / sum_k gamma_uk and
b_ik = eps+ / (eps+ + eps-): p_ui = a_u . b_i lies in [0, 1] and is
mapped affinely onto the score range. A separate binning into D equal
slices of [0, 1] is exposed for discrete output.
"""

import numpy as np
from scipy import sparse

from ..data import RatingDataset
from ..mathfns import _digamma_array
from ._common import (
    ModelConfig,
    TrainedModel,
    check_training_input,
    training_fallback,
)


class BNMFModel(TrainedModel):
    """Trained posterior with convex-combination predictions."""

    def __init__(self, gamma, eps_pos, eps_neg, responsibilities, scale,
                 fallback, user_rated, item_rated, config):
        super().__init__("bnmf", scale, fallback, user_rated, item_rated,
                         config)
        self.gamma = gamma
        self.eps_pos = eps_pos
        self.eps_neg = eps_neg
        self.responsibilities = responsibilities

    @property
    def user_mixture(self) -> np.ndarray:
        """Rows a_u on the simplex: normalized Dirichlet parameters."""
        return self.gamma / self.gamma.sum(axis=1, keepdims=True)

    @property
    def item_propensity(self) -> np.ndarray:
        """Beta means b_ik in [0, 1]."""
        return self.eps_pos / (self.eps_pos + self.eps_neg)

    def unit_score(self, u: int, i: int) -> float:
        """p_ui = a_u . b_i in [0, 1]."""
        self._check_indices(u, i)
        a = self.gamma[u] / self.gamma[u].sum()
        b = self.eps_pos[i] / (self.eps_pos[i] + self.eps_neg[i])
        return float(np.dot(a, b))

    def predict(self, u: int, i: int) -> float:
        self._check_indices(u, i)
        if self._is_cold(u, i):
            return self.scale.clamp(self.fallback)
        span = self.scale.max_score - self.scale.min_score
        return self.scale.clamp(self.scale.min_score
                                + self.unit_score(u, i) * span)

    def discretize(self, u: int, i: int) -> float:
        """Quantized prediction: bin j of width 1/D maps to the j-th score."""
        p = self.unit_score(u, i)
        D = self.scale.num_scores
        j = min(int(p * D), D - 1)
        return float(self.scale.scores[j])


def bnmf_fit(train: RatingDataset, k: int, alpha: float, beta: float,
             iterations: int, seed: int) -> BNMFModel:
    config = ModelConfig(model="bnmf", factors=k, iterations=iterations,
                         bnmf_alpha=alpha, bnmf_beta=beta, seed=seed)
    config.validate()
    check_training_input(train)

    D = train.scale.num_scores
    span = train.scale.max_score - train.scale.min_score
    u_indptr, u_items, u_values = train.by_user_arrays()
    nnz = len(u_values)
    edge_users = np.repeat(np.arange(train.num_users), train.user_counts())
    edge_items = u_items
    rstar = (u_values - train.scale.min_score) / span
    r_pos = (D - 1) * rstar
    r_neg = (D - 1) * (1.0 - rstar)

    # Ones-matrices summing per-edge quantities into user / item rows.
    by_user = sparse.csr_matrix(
        (np.ones(nnz), np.arange(nnz), u_indptr),
        shape=(train.num_users, nnz))
    by_item = sparse.csr_matrix(
        (np.ones(nnz), (edge_items, np.arange(nnz))),
        shape=(train.num_items, nnz))

    rng = np.random.default_rng(seed)
    lam = rng.random((nnz, k))
    lam /= lam.sum(axis=1, keepdims=True)
    gamma = alpha + by_user @ lam
    eps_pos = beta + by_item @ (lam * r_pos[:, None])
    eps_neg = beta + by_item @ (lam * r_neg[:, None])

    for _ in range(iterations):
        dg_gamma = _digamma_array(gamma)
        dg_pos = _digamma_array(eps_pos)
        dg_neg = _digamma_array(eps_neg)
        dg_sum = _digamma_array(eps_pos + eps_neg)
        logits = (dg_gamma[edge_users]
                  + r_pos[:, None] * dg_pos[edge_items]
                  + r_neg[:, None] * dg_neg[edge_items]
                  - (D - 1) * dg_sum[edge_items])
        logits -= logits.max(axis=1, keepdims=True)
        lam = np.exp(logits)
        lam /= lam.sum(axis=1, keepdims=True)
        gamma = alpha + by_user @ lam
        eps_pos = beta + by_item @ (lam * r_pos[:, None])
        eps_neg = beta + by_item @ (lam * r_neg[:, None])

    return BNMFModel(gamma, eps_pos, eps_neg, lam, train.scale,
                     training_fallback(train), train.user_counts() > 0,
                     train.item_counts() > 0, config)
