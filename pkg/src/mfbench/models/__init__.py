"""Six collaborative-filtering factorization models behind one interface.

Every model trains with :func:`fit` and predicts with
``model.predict(u, i)``, returning a value clamped to the dataset's
score range; pairs touching a user or item without training ratings
fall back to mean/bias structure. Training is deterministic: the same
(config, train) pair reproduces bit-identical models.
"""

from ._common import (
    MODEL_KINDS,
    DivergenceError,
    FactorModel,
    ModelConfig,
    TrainedModel,
)
from .bemf import BeMFModel, bemf_fit
from .biasedmf import BiasedFactorModel, biasedmf_fit
from .bnmf import BNMFModel, bnmf_fit
from .io import load_model, save_model
from .nmf import nmf_fit
from .pmf import pmf_fit
from .urp import URPModel, urp_fit

__all__ = [
    "MODEL_KINDS",
    "ModelConfig",
    "DivergenceError",
    "TrainedModel",
    "FactorModel",
    "BiasedFactorModel",
    "BeMFModel",
    "BNMFModel",
    "URPModel",
    "fit",
    "pmf_fit",
    "biasedmf_fit",
    "nmf_fit",
    "bemf_fit",
    "bnmf_fit",
    "urp_fit",
    "save_model",
    "load_model",
]

def fit(config: ModelConfig, train):
    """Train the model selected by ``config.model`` on ``train``."""
    config.validate()
    kind = config.model
    if kind == "pmf":
        model = pmf_fit(train, config.factors, config.learning_rate,
                        config.regularization, config.iterations, config.seed)
    elif kind == "biasedmf":
        model = biasedmf_fit(train, config.factors, config.learning_rate,
                             config.regularization, config.iterations,
                             config.seed)
    elif kind == "nmf":
        model = nmf_fit(train, config.factors, config.iterations, config.seed)
    elif kind == "bemf":
        model = bemf_fit(train, config.factors, config.learning_rate,
                         config.regularization, config.iterations,
                         config.seed)
    elif kind == "bnmf":
        model = bnmf_fit(train, config.factors, config.bnmf_alpha,
                         config.bnmf_beta, config.iterations, config.seed)
    elif kind == "urp":
        model = urp_fit(train, config.factors, config.iterations, config.seed)
    else:  # pragma: no cover - validate() already rejects unknown kinds
        raise ValueError(f"unknown model {kind!r}")
    # Keep the caller's config (including fields the model ignores) for
    # reporting and serialization.
    model.config = config
    return model
