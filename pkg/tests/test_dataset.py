"""Dataset ingestion, normalization, class means and ground truth."""
import numpy as np
import pytest

from conftest import make_dataset
from fsbench.errors import DataError, ValidationError
from fsbench.services.dataset import (
    RelevanceTruth,
    class_mean,
    load_csv,
    load_truth,
    normalize_min_max,
    save_csv,
    save_truth,
)
from fsbench.services.rng import SeededRng, draw_seed


class TestLoadCsv:
    def test_three_row_file(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("a,b,class\n0,1,1\n1,0,2\n1,1,2\n")
        d = load_csv(path)
        assert d.n_samples == 3
        assert d.n_features == 2
        assert d.labels.tolist() == [1, 2, 2]
        assert d.feature_names == ("a", "b")
        assert not d.normalized

    def test_named_label_column(self, tmp_path):
        path = tmp_path / "first.csv"
        path.write_text("label,x\n2,0.5\n1,0.25\n")
        d = load_csv(path, label_column="label")
        assert d.features[:, 0].tolist() == [0.5, 0.25]
        assert d.labels.tolist() == [2, 1]

    def test_string_labels_by_first_appearance(self, tmp_path):
        path = tmp_path / "text.csv"
        path.write_text("x,kind\n1,glass\n2,stone\n3,glass\n")
        d = load_csv(path)
        assert d.labels.tolist() == [1, 2, 1]
        assert d.original_labels == ("glass", "stone")

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,class\n0,1,1\n1,oops,2\n")
        with pytest.raises(DataError) as err:
            load_csv(path)
        assert err.value.row == 2
        assert err.value.column == "b"
        assert "oops" in str(err.value)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataError):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(tmp_path / "nope.csv")

    def test_single_class_warns(self, tmp_path, caplog):
        path = tmp_path / "one.csv"
        path.write_text("a,class\n0,1\n1,1\n")
        d = load_csv(path)
        assert d.n_classes == 1
        assert "single class" in caplog.text

    def test_save_reload_is_bit_exact(self, tmp_path):
        gen = np.random.default_rng(3)
        d = make_dataset(gen.normal(size=(25, 4)) * 1e3, np.tile([1, 2, 3, 4, 5], 5))
        reloaded = load_csv(save_csv(d, tmp_path / "round.csv"))
        np.testing.assert_array_equal(reloaded.features, d.features)
        np.testing.assert_array_equal(reloaded.labels, d.labels)


class TestDatasetInvariants:
    def test_row_label_mismatch(self):
        with pytest.raises(DataError):
            make_dataset(np.zeros((3, 2)), [1, 2])

    def test_empty_class_rejected(self):
        with pytest.raises(DataError):
            make_dataset(np.zeros((2, 1)), [1, 3])

    def test_normalized_range_checked(self):
        with pytest.raises(DataError):
            make_dataset([[1.5]], [1], normalized=True)

    def test_immutable(self):
        d = make_dataset([[1.0, 2.0]], [1])
        with pytest.raises(ValueError):
            d.features[0, 0] = 3.0

    def test_project_keeps_ascending_columns(self):
        d = make_dataset([[1.0, 2.0, 3.0]], [1])
        assert d.project([3, 1]).features.tolist() == [[1.0, 3.0]]
        with pytest.raises(ValidationError):
            d.project([4])

    def test_subset_repacks_classes(self):
        d = make_dataset([[0.0], [1.0], [2.0]], [1, 2, 3])
        sub = d.subset([0, 2])
        assert sub.labels.tolist() == [1, 2]
        assert sub.original_labels == ("1", "3")


class TestNormalize:
    def test_affine_map(self):
        d = normalize_min_max(make_dataset([[2.0], [4.0], [6.0]], [1, 1, 2]))
        assert d.features[:, 0].tolist() == [0.0, 0.5, 1.0]
        assert d.normalized

    def test_constant_column_is_zero(self):
        d = normalize_min_max(make_dataset([[5.0], [5.0], [5.0]], [1, 2, 2]))
        assert d.features[:, 0].tolist() == [0.0, 0.0, 0.0]

    def test_idempotent(self):
        gen = np.random.default_rng(5)
        once = normalize_min_max(make_dataset(gen.normal(size=(30, 3)), np.repeat([1, 2, 3], 10)))
        twice = normalize_min_max(once)
        np.testing.assert_array_equal(once.features, twice.features)

    def test_order_preserving_and_invertible(self):
        gen = np.random.default_rng(8)
        raw = make_dataset(gen.normal(3.0, 2.0, size=(40, 2)), np.repeat([1, 2], 20))
        norm = normalize_min_max(raw)
        for k in range(2):
            assert np.array_equal(np.argsort(raw.features[:, k]), np.argsort(norm.features[:, k]))
        np.testing.assert_allclose(norm.denormalize().features, raw.features, atol=1e-12)


class TestClassMean:
    def test_midpoint(self):
        d = make_dataset([[0.0, 0.0], [2.0, 2.0], [9.0, 9.0]], [1, 1, 2])
        np.testing.assert_array_equal(class_mean(d, 1), [1.0, 1.0])

    def test_single_sample(self):
        d = make_dataset([[0.0, 0.0], [2.0, 3.0]], [1, 2])
        np.testing.assert_array_equal(class_mean(d, 2), [2.0, 3.0])

    def test_row_subset_must_match_class(self):
        d = make_dataset([[0.0], [1.0]], [1, 2])
        with pytest.raises(ValidationError):
            class_mean(d, 1, rows=[1])
        with pytest.raises(ValidationError):
            class_mean(d, 1, rows=[])

    def test_weighted_average_of_class_means(self):
        gen = np.random.default_rng(2)
        labels = np.array([1] * 7 + [2] * 13 + [3] * 5)
        d = make_dataset(gen.uniform(size=(25, 4)), labels)
        weighted = sum(class_mean(d, c) * np.sum(labels == c) for c in d.classes) / labels.size
        np.testing.assert_allclose(weighted, d.features.mean(axis=0), atol=1e-9)

    def test_matches_streaming_sum(self):
        gen = np.random.default_rng(9)
        d = make_dataset(gen.uniform(size=(500, 3)), np.repeat([1, 2], 250))
        total = np.zeros(3)
        count = 0
        for x, y in zip(d.features, d.labels):
            if y == 1:
                total += x
                count += 1
        np.testing.assert_allclose(class_mean(d, 1), total / count, atol=1e-12)


class TestRelevanceTruth:
    def test_noise_and_union(self):
        truth = RelevanceTruth({1: {1, 2, 3}, 2: {4, 5}}, n_features=7)
        assert truth.relevant_union() == frozenset({1, 2, 3, 4, 5})
        assert truth.noise_features() == frozenset({6, 7})

    def test_out_of_range_index(self):
        with pytest.raises(DataError):
            RelevanceTruth({1: {8}}, n_features=7)

    def test_json_round_trip(self, tmp_path):
        truth = RelevanceTruth({1: {1, 2, 3}, 5: {1, 3, 4, 7}}, n_features=28)
        loaded = load_truth(save_truth(truth, tmp_path / "t.truth.json"))
        assert loaded == truth

    def test_check_covers(self):
        d = make_dataset(np.zeros((2, 3)), [1, 2])
        with pytest.raises(DataError):
            RelevanceTruth({1: {1}}, n_features=3).check_covers(d)
        with pytest.raises(DataError):
            RelevanceTruth({1: {1}, 2: {2}}, n_features=4).check_covers(d)


class TestSeededRng:
    def test_same_seed_same_stream(self):
        a, b = SeededRng(2**63 + 5), SeededRng(2**63 + 5)
        np.testing.assert_array_equal(a.uniform(size=10), b.uniform(size=10))
        np.testing.assert_array_equal(a.permutation(20), b.permutation(20))

    def test_spawn_is_deterministic(self):
        assert SeededRng(4).spawn().seed == SeededRng(4).spawn().seed

    def test_draw_seed_fits_64_bits(self):
        assert 0 <= draw_seed() < 2**64
