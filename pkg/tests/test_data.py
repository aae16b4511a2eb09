"""Loader, stats, global mean and k-fold splitting contracts."""

import numpy as np
import pytest

from mfbench.data import (
    DatasetError,
    DatasetFormat,
    FORMAT_PRESETS,
    RatingDataset,
    ScoreScale,
    dataset_stats,
    global_mean,
    kfold_split,
    load_ratings,
    resolve_format,
)
from conftest import DEFAULT_SCALE, dataset_from_triples, synthetic_dataset

ML_FMT = FORMAT_PRESETS["movielens"]


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestScoreScale:
    def test_num_scores(self):
        assert ScoreScale(1, 5, 1, 4).num_scores == 5
        assert ScoreScale(0, 5, 0.5, 4).num_scores == 11
        assert ScoreScale(1, 10, 1, 8).num_scores == 10

    def test_non_integral_grid_rejected(self):
        with pytest.raises(DatasetError):
            ScoreScale(1, 5, 0.3, 4)

    def test_threshold_inside_range(self):
        with pytest.raises(DatasetError):
            ScoreScale(1, 5, 1, 6)

    def test_score_index(self):
        scale = ScoreScale(0, 5, 0.5, 4)
        assert scale.score_index(0.0) == 0
        assert scale.score_index(4.5) == 9
        assert scale.score_index(5.0) == 10
        assert scale.score_index(0.3) == -1
        assert scale.score_index(5.5) == -1


class TestLoader:
    def test_movielens_shape(self, tmp_path):
        path = _write(tmp_path, "r.csv",
                      "userId,movieId,rating,timestamp\n"
                      "7,101,4,111\n7,102,3,112\n9,101,5,113\n")
        ds = load_ratings(path, ML_FMT)
        assert (ds.num_users, ds.num_items, ds.num_ratings) == (2, 2, 3)
        # dense ids in first-appearance order
        assert ds.user_ids == ("7", "9")
        assert ds.item_ids == ("101", "102")
        items, values = ds.user_slice(0)
        assert items.tolist() == [0, 1]
        assert values.tolist() == [4.0, 3.0]

    def test_quoted_field_with_delimiter(self, tmp_path):
        # double-quote escaping per the csv convention
        path = _write(tmp_path, "r.csv",
                      "userId,movieId,rating,note\n"
                      '"u,1",5,3,"a,b"\n"u,2",5,4,plain\n')
        ds = load_ratings(path, ML_FMT)
        assert ds.user_ids == ("u,1", "u,2")
        assert ds.num_ratings == 2

    def test_whitespace_format(self, tmp_path):
        path = _write(tmp_path, "r.txt", "1 10 2.5\n1 11 0.5\n2 10 4.0\n")
        ds = load_ratings(path, FORMAT_PRESETS["filmtrust"])
        assert (ds.num_users, ds.num_items, ds.num_ratings) == (2, 2, 3)
        assert ds.values.tolist() == [2.5, 0.5, 4.0]

    def test_header_only_gives_empty_dataset(self, tmp_path):
        path = _write(tmp_path, "r.csv", "userId,movieId,rating,timestamp\n")
        ds = load_ratings(path, ML_FMT)
        assert ds.num_users == 0 and ds.num_items == 0 and ds.num_ratings == 0
        assert dataset_stats(ds).sparsity_percent == 0.0

    def test_sentinel_ratings_dropped(self, tmp_path):
        path = _write(tmp_path, "r.csv",
                      "user_id,anime_id,rating\n1,20,-1\n1,21,8\n2,20,10\n")
        ds = load_ratings(path, FORMAT_PRESETS["myanimelist"])
        assert ds.num_ratings == 2
        assert ds.values.tolist() == [8.0, 10.0]

    def test_short_row_rejected(self, tmp_path):
        path = _write(tmp_path, "r.csv",
                      "userId,movieId,rating,timestamp\n1,2\n")
        with pytest.raises(DatasetError, match="fields"):
            load_ratings(path, ML_FMT)

    def test_unparsable_rating_rejected(self, tmp_path):
        path = _write(tmp_path, "r.csv",
                      "userId,movieId,rating,timestamp\n1,2,high,0\n")
        with pytest.raises(DatasetError, match="unparsable"):
            load_ratings(path, ML_FMT)

    def test_out_of_scale_rating_rejected(self, tmp_path):
        path = _write(tmp_path, "r.csv",
                      "userId,movieId,rating,timestamp\n1,2,6,0\n")
        with pytest.raises(DatasetError, match="scale"):
            load_ratings(path, ML_FMT)

    def test_off_grid_rating_rejected(self, tmp_path):
        path = _write(tmp_path, "r.csv",
                      "userId,movieId,rating,timestamp\n1,2,3.5,0\n")
        with pytest.raises(DatasetError, match="scale"):
            load_ratings(path, ML_FMT)

    def test_duplicate_pair_rejected(self, tmp_path):
        path = _write(tmp_path, "r.csv",
                      "userId,movieId,rating,timestamp\n1,2,3,0\n1,2,4,0\n")
        with pytest.raises(DatasetError, match="duplicate"):
            load_ratings(path, ML_FMT)

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_ratings(tmp_path / "nope.csv", ML_FMT)

    def test_loading_twice_is_identical(self, tmp_path):
        text = "userId,movieId,rating,timestamp\n" + "\n".join(
            f"{u},{i},{(u + i) % 5 + 1},0"
            for u in range(1, 15) for i in range(1, 9)) + "\n"
        path = _write(tmp_path, "r.csv", text)
        a = load_ratings(path, ML_FMT)
        b = load_ratings(path, ML_FMT)
        np.testing.assert_array_equal(a.users, b.users)
        np.testing.assert_array_equal(a.items, b.items)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.user_ids == b.user_ids and a.item_ids == b.item_ids

    def test_resolve_format(self):
        assert resolve_format("movielens") is ML_FMT
        assert resolve_format(ML_FMT) is ML_FMT
        with pytest.raises(DatasetError):
            resolve_format("unknown")


class TestDatasetViews:
    def test_dual_views_hold_the_same_ratings(self):
        ds = synthetic_dataset(seed=5)
        by_user = [(u, int(i), float(v)) for u in range(ds.num_users)
                   for i, v in zip(*ds.user_slice(u))]
        by_item = [(int(u), i, float(v)) for i in range(ds.num_items)
                   for u, v in zip(*ds.item_slice(i))]
        assert sorted(by_user) == sorted(by_item)
        assert len(by_user) == ds.num_ratings
        counts_u = sum(len(ds.user_slice(u)[0]) for u in range(ds.num_users))
        counts_i = sum(len(ds.item_slice(i)[0]) for i in range(ds.num_items))
        assert counts_u == ds.num_ratings == counts_i

    def test_id_maps_are_bijections(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("userId,movieId,rating,timestamp\n"
                        "5,50,1,0\n3,30,2,0\n5,30,3,0\n", encoding="utf-8")
        ds = load_ratings(path, ML_FMT)
        assert len(set(ds.user_ids)) == ds.num_users
        assert len(set(ds.item_ids)) == ds.num_items
        # index -> id -> index round trip
        for idx, raw in enumerate(ds.user_ids):
            assert ds.user_ids.index(raw) == idx


class TestStats:
    def test_formula(self):
        ds = dataset_from_triples([(0, 0, 3), (0, 1, 4), (1, 0, 5)], 2, 2)
        stats = dataset_stats(ds)
        assert stats.sparsity_percent == 25.0
        assert stats.num_ratings == 3

    def test_dense_single_cell(self):
        ds = dataset_from_triples([(0, 0, 4)], 1, 1)
        assert dataset_stats(ds).sparsity_percent == 0.0

    def test_table_arithmetic(self):
        # sparsity numbers recomputed from the published dataset sizes
        assert round(100 * (1 - 99831 / (943 * 1682)), 2) == 93.71
        assert round(100 * (1 - 548967 / (19179 * 2692)), 2) == 98.94


class TestGlobalMean:
    def test_two_point(self):
        ds = dataset_from_triples([(0, 0, 1), (0, 1, 5)], 1, 2)
        assert global_mean(ds) == 3.0

    def test_singleton(self):
        ds = dataset_from_triples([(0, 0, 4)], 1, 1)
        assert global_mean(ds) == 4.0

    def test_hand_sum(self):
        triples = [(0, 0, 5), (0, 1, 3), (1, 0, 4), (1, 2, 2), (2, 1, 5),
                   (2, 2, 1)]
        ds = dataset_from_triples(triples, 3, 3)
        assert global_mean(ds) == pytest.approx(10 / 3, abs=1e-15)

    def test_empty_rejected(self):
        ds = dataset_from_triples([], 0, 0)
        with pytest.raises(DatasetError):
            global_mean(ds)


class TestKFold:
    def test_exact_divisibility(self):
        ds = synthetic_dataset(num_users=20, num_items=20, num_ratings=100,
                               seed=2)
        folds = kfold_split(ds, 4, 9)
        assert [f.num_test for f in folds] == [25, 25, 25, 25]
        all_test = set()
        for f in folds:
            pairs = set(zip(f.test_users.tolist(), f.test_items.tolist()))
            assert not (pairs & all_test)
            all_test |= pairs
        assert len(all_test) == 100

    def test_determinism(self):
        ds = synthetic_dataset(seed=3)
        a = kfold_split(ds, 4, 77)
        b = kfold_split(ds, 4, 77)
        for fa, fb in zip(a, b):
            np.testing.assert_array_equal(fa.test_users, fb.test_users)
            np.testing.assert_array_equal(fa.test_items, fb.test_items)
            np.testing.assert_array_equal(fa.train.values, fb.train.values)

    def test_large_count_near_equal_partition(self):
        # 99831 ratings into 4 folds: three of 24958 and one of 24957.
        n = 99831
        users = np.zeros(n, dtype=np.int64)
        items = np.arange(n, dtype=np.int64)
        values = np.ones(n)
        ds = RatingDataset(users, items, values, 1, n, DEFAULT_SCALE)
        sizes = sorted(f.num_test for f in kfold_split(ds, 4, 0))
        assert sizes == [24957, 24958, 24958, 24958]

    def test_round_trip_per_fold(self):
        ds = synthetic_dataset(seed=4, num_ratings=601)
        for fold in kfold_split(ds, 4, 5):
            assert fold.train.num_ratings + fold.num_test == ds.num_ratings
            train_pairs = set(zip(fold.train.users.tolist(),
                                  fold.train.items.tolist()))
            test_pairs = set(zip(fold.test_users.tolist(),
                                 fold.test_items.tolist()))
            assert not (train_pairs & test_pairs)

    def test_k_bounds(self):
        ds = synthetic_dataset(num_users=5, num_items=5, num_ratings=10)
        with pytest.raises(DatasetError):
            kfold_split(ds, 1, 0)
        with pytest.raises(DatasetError):
            kfold_split(ds, 11, 0)
