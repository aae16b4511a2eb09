"""Prediction, recommendation and beyond-accuracy quality measures.

All list metrics are macro-averaged: one value per qualifying user, then
the plain mean over users in ascending index order (fixed summation
order keeps reports bit-reproducible). Users that do not qualify for a
metric (no recommendations, no relevant test items, zero ideal gain,
fewer than two recommendations, no training history) are skipped and
counted; a metric with no qualifying user at all is reported as None.

Relevance for precision/recall means a test rating at or above the
dataset's threshold. Item distance for novelty/diversity is one minus
the cosine similarity of the items' training rating vectors over
co-rating users; items sharing no rater are at distance 1.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .data import FoldSplit, RatingDataset

LIST_METRICS = ("precision", "recall", "ndcg", "novelty", "diversity")


@dataclass(frozen=True)
class RecommendationList:
    """Top-N items for one user, predicted scores aligned and non-increasing."""

    user: int
    items: tuple
    scores: tuple


@dataclass
class MetricReport:
    """Per-trial metric values: MAE plus the N-indexed list metrics."""

    mae: float
    n_values: tuple
    precision: dict
    recall: dict
    ndcg: dict
    novelty: dict
    diversity: dict
    skipped: dict = field(default_factory=dict)

    def series(self, metric: str) -> dict:
        return getattr(self, metric)

    def to_flat_dict(self) -> dict:
        flat = {"mae": self.mae}
        for metric in LIST_METRICS:
            values = self.series(metric)
            for n in self.n_values:
                flat[f"{metric}@{n}"] = values.get(n)
        return flat

    def to_json_dict(self) -> dict:
        out = {"mae": self.mae, "n_values": list(self.n_values)}
        for metric in LIST_METRICS:
            out[metric] = {str(n): v for n, v in self.series(metric).items()}
        out["skipped"] = {
            metric: {str(n): c for n, c in counts.items()}
            for metric, counts in self.skipped.items()
        }
        return out

    @classmethod
    def from_json_dict(cls, payload: dict) -> "MetricReport":
        n_values = tuple(payload["n_values"])
        series = {
            metric: {int(n): v for n, v in payload[metric].items()}
            for metric in LIST_METRICS
        }
        skipped = {
            metric: {int(n): c for n, c in counts.items()}
            for metric, counts in payload.get("skipped", {}).items()
        }
        return cls(mae=payload["mae"], n_values=n_values, skipped=skipped,
                   **series)


def mae(model, users, items, values) -> float:
    """Mean absolute error of clamped predictions over the given ratings."""
    if len(values) == 0:
        raise ValueError("mae over an empty test set is undefined")
    total = 0.0
    for u, i, r in zip(users, items, values):
        total += abs(float(r) - model.predict(int(u), int(i)))
    return total / len(values)


def recommend_top_n(model, user, candidates, n) -> RecommendationList:
    """Rank a user's candidate items by predicted score, truncated to n.

    Ties in the predicted score break toward the lower item index.
    """
    scored = [(model.predict(user, int(i)), int(i)) for i in candidates]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    top = scored[:n]
    return RecommendationList(
        user=user,
        items=tuple(i for _, i in top),
        scores=tuple(s for s, _ in top),
    )


def _macro_average(per_user_values):
    if not per_user_values:
        return None
    return sum(per_user_values) / len(per_user_values)


def precision_at_n(lists, test_ratings, theta, n):
    """Fraction of the (up to n) recommended items that are relevant."""
    values = []
    for user in sorted(lists):
        items = lists[user][:n]
        if not items:
            continue
        rated = test_ratings.get(user, {})
        hits = sum(1 for i in items if rated.get(i, -math.inf) >= theta)
        values.append(hits / len(items))
    return _macro_average(values)


def recall_at_n(lists, test_ratings, theta, n):
    """Fraction of a user's relevant test items captured in the top n."""
    values = []
    for user in sorted(lists):
        rated = test_ratings.get(user, {})
        relevant = {i for i, r in rated.items() if r >= theta}
        if not relevant:
            continue
        items = lists[user][:n]
        hits = sum(1 for i in items if i in relevant)
        values.append(hits / len(relevant))
    return _macro_average(values)


def ndcg_at_n(lists, test_ratings, n):
    """Position-discounted gain normalized by the ideal candidate order.

    Gains are the raw test ratings; position p is discounted by
    1 / log2(p + 1). Users whose ideal gain is zero are skipped.
    """
    values = []
    for user in sorted(lists):
        rated = test_ratings.get(user, {})
        ideal = sorted(rated.values(), reverse=True)
        idcg = 0.0
        for pos, gain in enumerate(ideal[:n], start=1):
            idcg += gain / math.log2(pos + 1)
        if idcg <= 0.0:
            continue
        dcg = 0.0
        for pos, item in enumerate(lists[user][:n], start=1):
            dcg += rated.get(item, 0.0) / math.log2(pos + 1)
        values.append(dcg / idcg)
    return _macro_average(values)


def item_distances(train: RatingDataset) -> np.ndarray:
    """Dense item-item distance matrix: 1 - cosine of training columns.

    Items without any co-rating user (including items never rated in
    training) are at distance 1 from everything; an item is at distance
    0 from itself whenever it has any training rating.
    """
    indptr, users, values = train.by_item_arrays()
    R = sparse.csr_matrix((values, users, indptr),
                          shape=(train.num_items, train.num_users))
    norms = np.sqrt(R.multiply(R).sum(axis=1)).A1
    inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    Rn = sparse.diags(inv) @ R
    gram = (Rn @ Rn.T).toarray()
    return np.clip(1.0 - gram, 0.0, 1.0)


def novelty_at_n(lists, train: RatingDataset, n, distances=None):
    """Mean distance from recommended items to the user's known items."""
    if distances is None:
        distances = item_distances(train)
    values = []
    for user in sorted(lists):
        items = lists[user][:n]
        known, _ = train.user_slice(user)
        if not items or len(known) == 0:
            continue
        values.append(float(distances[np.ix_(list(items), known)].mean()))
    return _macro_average(values)


def diversity_at_n(lists, train: RatingDataset, n, distances=None):
    """Mean pairwise distance inside each recommendation list."""
    if distances is None:
        distances = item_distances(train)
    values = []
    for user in sorted(lists):
        items = lists[user][:n]
        if len(items) < 2:
            continue
        idx = np.asarray(items)
        iu, jv = np.triu_indices(len(idx), k=1)
        values.append(float(distances[idx[iu], idx[jv]].mean()))
    return _macro_average(values)


def evaluate_fold(model, fold: FoldSplit, n_values=tuple(range(1, 11)),
                  distances=None) -> MetricReport:
    """Full metric report of a trained model against one fold's test set."""
    theta = fold.train.scale.threshold
    test_ratings: dict = {}
    for u, i, r in zip(fold.test_users, fold.test_items, fold.test_values):
        test_ratings.setdefault(int(u), {})[int(i)] = float(r)

    n_max = max(n_values)
    lists = {}
    for user in sorted(test_ratings):
        candidates = sorted(test_ratings[user])
        lists[user] = recommend_top_n(model, user, candidates, n_max).items

    if distances is None:
        distances = item_distances(fold.train)

    precision, recall, ndcg, novelty, diversity = {}, {}, {}, {}, {}
    skipped = {metric: {} for metric in LIST_METRICS}
    num_users = len(lists)
    for n in n_values:
        precision[n] = precision_at_n(lists, test_ratings, theta, n)
        recall[n] = recall_at_n(lists, test_ratings, theta, n)
        ndcg[n] = ndcg_at_n(lists, test_ratings, n)
        novelty[n] = novelty_at_n(lists, fold.train, n, distances)
        diversity[n] = diversity_at_n(lists, fold.train, n, distances)

    # Skip counts: qualifying-user totals are recomputed cheaply per metric.
    relevant_users = sum(
        1 for user, rated in test_ratings.items()
        if any(r >= theta for r in rated.values()))
    positive_gain_users = sum(
        1 for rated in test_ratings.values()
        if any(r > 0 for r in rated.values()))
    known_users = sum(
        1 for user in lists if len(fold.train.user_slice(user)[0]) > 0)
    for n in n_values:
        skipped["precision"][n] = 0
        skipped["recall"][n] = num_users - relevant_users
        skipped["ndcg"][n] = num_users - positive_gain_users
        skipped["novelty"][n] = num_users - known_users
        skipped["diversity"][n] = sum(
            1 for user in lists if len(lists[user][:n]) < 2)

    return MetricReport(
        mae=mae(model, fold.test_users, fold.test_items, fold.test_values),
        n_values=tuple(n_values),
        precision=precision,
        recall=recall,
        ndcg=ndcg,
        novelty=novelty,
        diversity=diversity,
        skipped=skipped,
    )
