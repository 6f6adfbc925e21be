"""Synthetic presets and the inter-class distance table."""
import math

import numpy as np
import pytest

from conftest import make_dataset
from fsbench.errors import ValidationError
from fsbench.models.schemas import ClassSpec, InterclassPreset, Shape
from fsbench.services.rng import SeededRng
from fsbench.services.synth import (
    distance_table,
    gen_interclass,
    gen_shapes,
    gen_structured,
    generate_preset,
    load_preset,
    preset_label,
    preset_names,
)


class TestStructured:
    def test_d2_shape_and_truth(self):
        data = generate_preset("d2", SeededRng(1))
        d = data.dataset
        assert (d.n_samples, d.n_features, d.n_classes) == (2442, 28, 5)
        assert data.truth.per_class[1] == frozenset({1, 2, 3})
        assert data.truth.per_class[5] == frozenset({1, 3, 4, 7})
        assert d.class_counts().tolist() == [489, 489, 488, 488, 488]

    def test_d3_noise_features(self):
        data = generate_preset("d3", SeededRng(2))
        assert data.dataset.n_features == 15
        assert data.truth.noise_features() == frozenset(range(9, 16))

    def test_zero_sd_hits_the_means(self):
        specs = [
            ClassSpec(class_id=1, samples=5, relevant=[1, 3], means=[0.2, 0.7], sd=0.0),
            ClassSpec(class_id=2, samples=4, relevant=[2], means=[0.9], sd=0.0),
        ]
        d = gen_structured(specs, 3, SeededRng(0)).dataset
        assert np.all(d.features[d.labels == 1][:, [0, 2]] == [0.2, 0.7])
        assert np.all(d.features[d.labels == 2][:, 1] == 0.9)

    def test_relevant_index_out_of_range(self):
        spec = ClassSpec(class_id=1, samples=2, relevant=[4], means=[0.5])
        with pytest.raises(ValidationError):
            gen_structured([spec], 3, SeededRng(0))

    def test_close_means_warn(self, caplog):
        specs = [
            ClassSpec(class_id=1, samples=3, relevant=[1], means=[0.50], sd=0.1),
            ClassSpec(class_id=2, samples=3, relevant=[1], means=[0.55], sd=0.1),
        ]
        gen_structured(specs, 2, SeededRng(0))
        assert "inseparable" in caplog.text

    def test_same_seed_same_data(self):
        a = generate_preset("d1", SeededRng(42)).dataset
        b = generate_preset("d1", SeededRng(42)).dataset
        np.testing.assert_array_equal(a.features, b.features)


class TestShapes:
    def test_moons_dimensions(self):
        data = generate_preset("moons", SeededRng(4))
        assert (data.dataset.n_samples, data.dataset.n_features, data.dataset.n_classes) == (2500, 20, 2)
        assert data.truth.per_class[1] == frozenset({1, 2})

    def test_noiseless_moons_lie_on_arcs(self):
        d = gen_shapes(Shape.MOONS, 400, 0, 0.0, SeededRng(5)).dataset
        x, y = d.features[:, 0], d.features[:, 1]
        outer = d.labels == 1
        np.testing.assert_allclose(x[outer] ** 2 + y[outer] ** 2, 1.0, atol=1e-9)
        np.testing.assert_allclose((x[~outer] - 1.0) ** 2 + (y[~outer] - 0.5) ** 2, 1.0, atol=1e-9)

    def test_noise_level_moves_points_off_the_arcs(self):
        d = gen_shapes(Shape.MOONS, 400, 0, 30.0, SeededRng(5)).dataset
        outer = d.labels == 1
        residual = np.abs(np.hypot(d.features[outer, 0], d.features[outer, 1]) - 1.0)
        assert residual.max() > 1e-3

    def test_blobs_truth(self):
        data = generate_preset("blobs", SeededRng(6))
        assert data.dataset.n_features == 20
        assert data.dataset.n_classes == 4
        for cls in data.dataset.classes:
            assert data.truth.per_class[cls] == frozenset(range(1, 7))

    def test_circles_imbalance(self):
        d = generate_preset("circles", SeededRng(7)).dataset
        assert d.class_counts().tolist() == [750, 1000]

    def test_noise_columns_are_unit_uniform(self):
        d = generate_preset("moons", SeededRng(8), noise_level=30).dataset
        noise = d.features[:, 2:]
        assert noise.min() >= 0.0 and noise.max() <= 1.0

    def test_blobs_xl_feature_sweep(self):
        data = generate_preset("blobs-xl", SeededRng(9), features=100)
        assert data.dataset.n_features == 100
        assert data.dataset.name == "blobs-xl-f100"
        assert data.truth.noise_features() == frozenset(range(7, 101))

    def test_blobs_xl_too_few_features(self):
        with pytest.raises(ValidationError):
            generate_preset("blobs-xl", SeededRng(9), features=4)


class TestWaveform:
    def test_dimensions(self):
        data = generate_preset("waveform", SeededRng(10))
        d = data.dataset
        assert (d.n_samples, d.n_features, d.n_classes) == (5000, 40, 3)
        assert data.truth.noise_features() == frozenset(range(22, 41))

    def test_class_sizes_balanced(self):
        counts = generate_preset("waveform", SeededRng(10)).dataset.class_counts()
        assert counts.max() - counts.min() <= 1


class TestInterclass:
    def test_no_squeeze_is_evenly_spaced(self):
        preset = InterclassPreset(kind="interclass", factor=0.0)
        table = gen_interclass(preset, SeededRng(11)).distances
        adjacent = table.adjacent()
        assert len(adjacent) == 5
        for value in adjacent:
            assert value == pytest.approx(16.0, rel=0.15)

    def test_squeezed_pair(self):
        data = generate_preset("d4", SeededRng(12))
        table = data.distances
        assert data.dataset.n_features == 16
        assert table.between(1, 2) == pytest.approx(16.0 / 5.0, rel=0.15)
        assert table.between(2, 3) == pytest.approx(16.0, rel=0.15)
        assert table.between(1, 2) < table.between(2, 3)

    def test_bad_squeeze_pair(self):
        preset = InterclassPreset(kind="interclass", squeeze=(2, 2))
        with pytest.raises(ValidationError):
            gen_interclass(preset, SeededRng(0))


class TestDistanceTable:
    def test_two_singletons(self):
        table = distance_table(make_dataset([[0.0, 0.0], [3.0, 4.0]], [1, 2]))
        np.testing.assert_allclose(table.matrix, [[0.0, 5.0], [5.0, 0.0]])

    def test_identical_clouds(self):
        gen = np.random.default_rng(0)
        cloud = gen.normal(0.0, 0.01, size=(30, 2))
        table = distance_table(make_dataset(np.vstack([cloud, cloud]), np.repeat([1, 2], 30)))
        assert table.between(1, 2) < 0.05

    def test_matches_double_loop(self):
        gen = np.random.default_rng(1)
        labels = np.repeat([1, 2, 3], [7, 5, 6])
        d = make_dataset(gen.normal(size=(18, 3)), labels)
        table = distance_table(d)
        for a in (1, 2, 3):
            for b in (1, 2, 3):
                if a == b:
                    assert table.between(a, b) == 0.0
                    continue
                pairs = [math.dist(p, q) for p in d.features[labels == a] for q in d.features[labels == b]]
                assert table.between(a, b) == pytest.approx(sum(pairs) / len(pairs), abs=1e-9)

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            distance_table(make_dataset([[0.0], [1.0]], [1, 1]))


class TestPresets:
    def test_known_names(self):
        assert {"d1", "d2", "d3", "d4", "moons", "circles", "blobs", "blobs-xl", "waveform"} <= set(preset_names())

    def test_unknown_preset(self):
        with pytest.raises(ValidationError):
            load_preset("d9")

    def test_labels(self):
        assert preset_label("moons", 30) == "moons-n30"
        assert preset_label("moons", 0.5) == "moons-n0.5"
        assert preset_label("blobs-xl", features=250) == "blobs-xl-f250"
        assert preset_label("d2") == "d2"

    def test_noise_level_only_for_shapes(self):
        with pytest.raises(ValidationError):
            generate_preset("d2", SeededRng(0), noise_level=30)

    def test_presets_follow_the_defaults_file(self, defaults_file):
        text = defaults_file.read_text(encoding="utf-8").replace("samples: 2500", "samples: 40")
        defaults_file.write_text(text, encoding="utf-8")
        assert generate_preset("moons", SeededRng(0)).dataset.n_samples == 40
