"""Versioned model serialization: one .npz per trained model.

Arrays go in as float64/bool npz members (lossless), everything scalar
travels in a JSON metadata blob. Loading reconstructs a model whose
predictions are bit-identical to the saved one's.
"""

import dataclasses
import json

import numpy as np

from ..data import ScoreScale
from ._common import ModelConfig
from .bemf import BeMFModel
from .biasedmf import BiasedFactorModel
from .bnmf import BNMFModel
from ._common import FactorModel
from .urp import URPModel

FORMAT_VERSION = 1

_ARRAY_FIELDS = {
    "pmf": ("P", "Q"),
    "nmf": ("P", "Q"),
    "biasedmf": ("P", "Q", "user_bias", "item_bias"),
    "bemf": ("P_stack", "Q_stack"),
    "bnmf": ("gamma", "eps_pos", "eps_neg", "responsibilities"),
    "urp": ("gamma", "beta", "alpha", "responsibilities"),
}


def save_model(model, path):
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "config": dataclasses.asdict(model.config),
        "scale": dataclasses.asdict(model.scale),
        "fallback": model.fallback,
    }
    if model.kind == "biasedmf":
        meta["mu"] = model.mu
    if model.kind == "nmf" and model.objective_history is not None:
        meta["objective_history"] = list(model.objective_history)
    if model.kind == "urp":
        meta["alpha_update_skips"] = model.alpha_update_skips
    arrays = {name: getattr(model, name) for name in _ARRAY_FIELDS[model.kind]}
    np.savez(path,
             meta=np.array(json.dumps(meta, sort_keys=True)),
             user_rated=model.user_rated,
             item_rated=model.item_rated,
             **arrays)


def load_model(path):
    with np.load(path, allow_pickle=False) as bundle:
        meta = json.loads(str(bundle["meta"]))
        if meta.get("format_version") != FORMAT_VERSION:
            raise ValueError(
                f"unsupported model format version {meta.get('format_version')}")
        kind = meta["kind"]
        config = ModelConfig(**meta["config"])
        scale = ScoreScale(**meta["scale"])
        fallback = meta["fallback"]
        user_rated = bundle["user_rated"]
        item_rated = bundle["item_rated"]
        arrays = {name: bundle[name] for name in _ARRAY_FIELDS[kind]}

    if kind in ("pmf", "nmf"):
        return FactorModel(kind, arrays["P"], arrays["Q"], scale, fallback,
                           user_rated, item_rated, config,
                           objective_history=meta.get("objective_history"))
    if kind == "biasedmf":
        return BiasedFactorModel(arrays["P"], arrays["Q"],
                                 arrays["user_bias"], arrays["item_bias"],
                                 meta["mu"], scale, user_rated, item_rated,
                                 config)
    if kind == "bemf":
        return BeMFModel(arrays["P_stack"], arrays["Q_stack"], scale,
                         fallback, user_rated, item_rated, config)
    if kind == "bnmf":
        return BNMFModel(arrays["gamma"], arrays["eps_pos"],
                         arrays["eps_neg"], arrays["responsibilities"],
                         scale, fallback, user_rated, item_rated, config)
    if kind == "urp":
        return URPModel(arrays["gamma"], arrays["beta"], arrays["alpha"],
                        arrays["responsibilities"], scale, fallback,
                        user_rated, item_rated, config,
                        alpha_update_skips=meta.get("alpha_update_skips", 0))
    raise ValueError(f"unknown model kind {kind!r} in {path}")
