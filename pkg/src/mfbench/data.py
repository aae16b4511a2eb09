"""Rating dataset ingestion, sparse storage and deterministic k-fold splits.

Datasets are delimiter-separated text files with one rating per row.
Original user/item ids (strings or numbers) are remapped to dense 0-based
indices in first-appearance order. A :class:`RatingDataset` keeps the
ratings both in file order and as by-user / by-item sorted views.

Fold splitting shuffles rating positions with numpy's PCG64 generator
(``np.random.default_rng``), a named, portable 64-bit PRNG with published
reference output, so a (dataset, k, seed) triple reproduces the same folds
on every platform.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

_GRID_TOL = 1e-9


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid dataset parameters."""


@dataclass(frozen=True)
class ScoreScale:
    """The discrete grid of legal rating values plus the relevance threshold."""

    min_score: float
    max_score: float
    step: float
    threshold: float

    def __post_init__(self):
        if self.step <= 0.0:
            raise DatasetError(f"score step must be > 0, got {self.step}")
        if self.max_score <= self.min_score:
            raise DatasetError("max_score must exceed min_score")
        span = (self.max_score - self.min_score) / self.step
        if abs(span - round(span)) > _GRID_TOL:
            raise DatasetError(
                "score range is not an integral number of steps: "
                f"({self.min_score}, {self.max_score}, {self.step})"
            )
        if not (self.min_score <= self.threshold <= self.max_score):
            raise DatasetError(f"threshold {self.threshold} outside score range")

    @property
    def num_scores(self) -> int:
        """Number of distinct legal scores."""
        return int(round((self.max_score - self.min_score) / self.step)) + 1

    @property
    def scores(self) -> np.ndarray:
        return self.min_score + self.step * np.arange(self.num_scores)

    def score_index(self, value: float) -> int:
        """Index of ``value`` on the grid, or -1 if it is not a legal score."""
        j = int(round((value - self.min_score) / self.step))
        if 0 <= j < self.num_scores and abs(
            self.min_score + j * self.step - value
        ) <= _GRID_TOL:
            return j
        return -1

    def clamp(self, x: float) -> float:
        return min(self.max_score, max(self.min_score, x))


@dataclass(frozen=True)
class DatasetFormat:
    """How to parse a ratings file.

    ``delimiter=None`` means any run of whitespace. ``drop_values`` are
    sentinel ratings (e.g. "watched but not rated" markers) silently
    skipped at load time.
    """

    delimiter: str | None
    has_header: bool
    user_col: int
    item_col: int
    rating_col: int
    scale: ScoreScale
    drop_values: frozenset = field(default_factory=frozenset)


FORMAT_PRESETS = {
    "movielens": DatasetFormat(
        delimiter=",",
        has_header=True,
        user_col=0,
        item_col=1,
        rating_col=2,
        scale=ScoreScale(1.0, 5.0, 1.0, threshold=4.0),
    ),
    "filmtrust": DatasetFormat(
        delimiter=None,
        has_header=False,
        user_col=0,
        item_col=1,
        rating_col=2,
        scale=ScoreScale(0.0, 5.0, 0.5, threshold=4.0),
    ),
    "myanimelist": DatasetFormat(
        delimiter=",",
        has_header=True,
        user_col=0,
        item_col=1,
        rating_col=2,
        scale=ScoreScale(1.0, 10.0, 1.0, threshold=8.0),
        drop_values=frozenset({-1.0}),
    ),
}


class RatingDataset:
    """Immutable sparse user x item rating store with dual indexing.

    Ratings are kept in their construction order in ``users``, ``items``
    and ``values``; ``user_slice`` / ``item_slice`` expose them re-sorted
    by (user, item) and (item, user) respectively.
    """

    __slots__ = (
        "num_users",
        "num_items",
        "users",
        "items",
        "values",
        "scale",
        "user_ids",
        "item_ids",
        "_u_indptr",
        "_u_items",
        "_u_values",
        "_i_indptr",
        "_i_users",
        "_i_values",
    )

    def __init__(self, users, items, values, num_users, num_items, scale,
                 user_ids=None, item_ids=None):
        self.users = np.ascontiguousarray(users, dtype=np.int64)
        self.items = np.ascontiguousarray(items, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        if not (self.users.shape == self.items.shape == self.values.shape):
            raise DatasetError("users/items/values length mismatch")
        self.num_users = int(num_users)
        self.num_items = int(num_items)
        self.scale = scale
        self.user_ids = user_ids
        self.item_ids = item_ids

        order = np.lexsort((self.items, self.users))
        self._u_items = self.items[order]
        self._u_values = self.values[order]
        counts = np.bincount(self.users, minlength=self.num_users)
        self._u_indptr = np.zeros(self.num_users + 1, dtype=np.int64)
        np.cumsum(counts, out=self._u_indptr[1:])

        order = np.lexsort((self.users, self.items))
        self._i_users = self.users[order]
        self._i_values = self.values[order]
        counts = np.bincount(self.items, minlength=self.num_items)
        self._i_indptr = np.zeros(self.num_items + 1, dtype=np.int64)
        np.cumsum(counts, out=self._i_indptr[1:])

    @property
    def num_ratings(self) -> int:
        return len(self.values)

    def user_slice(self, u: int):
        """(item indices, values) of user ``u``, sorted by item index."""
        lo, hi = self._u_indptr[u], self._u_indptr[u + 1]
        return self._u_items[lo:hi], self._u_values[lo:hi]

    def item_slice(self, i: int):
        """(user indices, values) of item ``i``, sorted by user index."""
        lo, hi = self._i_indptr[i], self._i_indptr[i + 1]
        return self._i_users[lo:hi], self._i_values[lo:hi]

    def user_counts(self) -> np.ndarray:
        return np.diff(self._u_indptr)

    def item_counts(self) -> np.ndarray:
        return np.diff(self._i_indptr)

    def by_user_arrays(self):
        """CSR view over users: (indptr, item indices, values)."""
        return self._u_indptr, self._u_items, self._u_values

    def by_item_arrays(self):
        """CSR view over items: (indptr, user indices, values)."""
        return self._i_indptr, self._i_users, self._i_values

    def subset(self, mask: np.ndarray) -> "RatingDataset":
        """New dataset holding the masked ratings, same index space."""
        return RatingDataset(
            self.users[mask], self.items[mask], self.values[mask],
            self.num_users, self.num_items, self.scale,
            self.user_ids, self.item_ids,
        )


@dataclass(frozen=True)
class Stats:
    num_users: int
    num_items: int
    num_ratings: int
    sparsity_percent: float


@dataclass(frozen=True)
class FoldSplit:
    """One train/test partition of the rating triples."""

    fold_index: int
    train: RatingDataset
    test_users: np.ndarray
    test_items: np.ndarray
    test_values: np.ndarray

    @property
    def num_test(self) -> int:
        return len(self.test_values)


def load_ratings(path, fmt: DatasetFormat) -> RatingDataset:
    """Parse a ratings file into a :class:`RatingDataset`.

    Ids are remapped to dense 0-based indices in first-appearance order.
    Rows must carry a rating on the declared score grid; duplicate
    (user, item) pairs, short rows and unparsable ratings raise
    :class:`DatasetError` naming the offending line.
    """
    user_index: dict = {}
    item_index: dict = {}
    users, items, values = [], [], []
    seen = set()
    ncols_needed = max(fmt.user_col, fmt.item_col, fmt.rating_col) + 1

    with open(path, "r", encoding="utf-8", newline="") as handle:
        if fmt.delimiter is None:
            rows = ((lineno, line.split()) for lineno, line in enumerate(handle, 1))
        else:
            reader = csv.reader(handle, delimiter=fmt.delimiter, quotechar='"')
            rows = ((reader.line_num, row) for row in reader)
        first = True
        for lineno, row in rows:
            if first and fmt.has_header:
                first = False
                continue
            first = False
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < ncols_needed:
                raise DatasetError(f"{path}:{lineno}: expected at least "
                                   f"{ncols_needed} fields, got {len(row)}")
            try:
                rating = float(row[fmt.rating_col].strip())
            except ValueError:
                raise DatasetError(
                    f"{path}:{lineno}: unparsable rating {row[fmt.rating_col]!r}"
                ) from None
            if rating in fmt.drop_values:
                continue
            if fmt.scale.score_index(rating) < 0:
                raise DatasetError(
                    f"{path}:{lineno}: rating {rating} outside declared scale "
                    f"[{fmt.scale.min_score}, {fmt.scale.max_score}] "
                    f"step {fmt.scale.step}"
                )
            raw_u = row[fmt.user_col].strip()
            raw_i = row[fmt.item_col].strip()
            u = user_index.setdefault(raw_u, len(user_index))
            i = item_index.setdefault(raw_i, len(item_index))
            if (u, i) in seen:
                raise DatasetError(
                    f"{path}:{lineno}: duplicate rating for user {raw_u!r}, "
                    f"item {raw_i!r}"
                )
            seen.add((u, i))
            users.append(u)
            items.append(i)
            values.append(rating)

    return RatingDataset(
        np.asarray(users, dtype=np.int64),
        np.asarray(items, dtype=np.int64),
        np.asarray(values, dtype=np.float64),
        num_users=len(user_index),
        num_items=len(item_index),
        scale=fmt.scale,
        user_ids=tuple(user_index),
        item_ids=tuple(item_index),
    )


def dataset_stats(ds: RatingDataset) -> Stats:
    """Headline dataset numbers; sparsity is rounded to 2 decimals."""
    cells = ds.num_users * ds.num_items
    if cells == 0:
        sparsity = 0.0
    else:
        sparsity = round(100.0 * (1.0 - ds.num_ratings / cells), 2)
    return Stats(ds.num_users, ds.num_items, ds.num_ratings, sparsity)


def global_mean(ds: RatingDataset) -> float:
    """Arithmetic mean of all rating values."""
    if ds.num_ratings == 0:
        raise DatasetError("global mean of an empty dataset is undefined")
    return float(np.mean(ds.values))


def kfold_split(ds: RatingDataset, k: int, seed: int) -> list[FoldSplit]:
    """Deterministic k-fold partition of the rating triples.

    Rating positions are shuffled once with PCG64 seeded by ``seed`` and
    cut into k nearly equal test blocks (sizes differ by at most 1; the
    first ``n % k`` folds take the extra rating). Identical inputs yield
    bit-identical splits across runs and platforms.
    """
    n = ds.num_ratings
    if k < 2:
        raise DatasetError(f"k-fold split needs k >= 2, got {k}")
    if k > n:
        raise DatasetError(f"cannot split {n} ratings into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for f in range(k):
        size = base + (1 if f < extra else 0)
        test_idx = np.sort(perm[start:start + size])
        start += size
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        folds.append(FoldSplit(
            fold_index=f,
            train=ds.subset(mask),
            test_users=ds.users[test_idx],
            test_items=ds.items[test_idx],
            test_values=ds.values[test_idx],
        ))
    return folds


def resolve_format(preset_or_format) -> DatasetFormat:
    """Accepts a preset name or an explicit :class:`DatasetFormat`."""
    if isinstance(preset_or_format, DatasetFormat):
        return preset_or_format
    try:
        return FORMAT_PRESETS[preset_or_format]
    except KeyError:
        raise DatasetError(
            f"unknown dataset preset {preset_or_format!r}; "
            f"available: {', '.join(sorted(FORMAT_PRESETS))}"
        ) from None
