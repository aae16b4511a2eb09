import numpy as np
import pytest

from mfbench.data import RatingDataset, ScoreScale

DEFAULT_SCALE = ScoreScale(1.0, 5.0, 1.0, threshold=4.0)


def synthetic_dataset(num_users=40, num_items=50, num_ratings=600, seed=0,
                      scale=DEFAULT_SCALE, rank=3, noise=0.6):
    """Ratings sampled from a low-rank-plus-bias model, snapped to the grid.

    Gives the models real structure to learn so metric orderings and MAE
    levels behave like rating data rather than white noise.
    """
    rng = np.random.default_rng(seed)
    cells = num_users * num_items
    if num_ratings > cells:
        raise ValueError("more ratings than cells")
    flat = rng.choice(cells, size=num_ratings, replace=False)
    flat.sort()
    users = flat // num_items
    items = flat % num_items
    mid = 0.5 * (scale.min_score + scale.max_score)
    user_bias = rng.normal(0.0, 0.5, num_users)
    item_bias = rng.normal(0.0, 0.5, num_items)
    P = rng.normal(0.0, 0.6, (num_users, rank))
    Q = rng.normal(0.0, 0.6, (num_items, rank))
    raw = (mid + user_bias[users] + item_bias[items]
           + np.einsum("ek,ek->e", P[users], Q[items])
           + rng.normal(0.0, noise, num_ratings))
    snapped = np.clip(
        np.round((raw - scale.min_score) / scale.step) * scale.step
        + scale.min_score,
        scale.min_score, scale.max_score)
    return RatingDataset(users, items, snapped, num_users, num_items, scale)


def dataset_from_triples(triples, num_users, num_items, scale=DEFAULT_SCALE):
    users = np.array([t[0] for t in triples], dtype=np.int64)
    items = np.array([t[1] for t in triples], dtype=np.int64)
    values = np.array([t[2] for t in triples], dtype=np.float64)
    return RatingDataset(users, items, values, num_users, num_items, scale)


@pytest.fixture(scope="session")
def small_dataset():
    return synthetic_dataset()


@pytest.fixture(scope="session")
def medium_dataset():
    return synthetic_dataset(num_users=120, num_items=90, num_ratings=3000,
                             seed=7)
