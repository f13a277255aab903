"""Tests for mixture sampling, dataset generation, splitting and dataset files."""

import json

import numpy as np
import pydantic
import pytest

from lowdim_xray.errors import (
    DegenerateStatsError,
    EmptySplitError,
    MissingArtifactError,
    MissingTableError,
    ParseError,
    UnsatisfiableRuleError,
    ValidationError,
)
from lowdim_xray.physics.grid import EnergyGrid
from lowdim_xray.physics.tables import ElementLibrary
from lowdim_xray.synth.dataset import DatasetSpec, StandardizationStats, build_dataset, split_dataset, split_indices
from lowdim_xray.synth.io import load_dataset, load_split, save_dataset, save_split
from lowdim_xray.synth.mixtures import MixtureSpec, check_rule, mix_spectrum, sample_mixture


class TestMixtureSpec:
    """Tests for MixtureSpec."""

    def test_format_and_parse(self):
        spec = MixtureSpec(((53, 0.25), (8, 1.0)))

        assert spec.format() == "53:0.25;8:1.0"
        assert MixtureSpec.parse(spec.format()) == spec

    def test_too_many_components(self):
        with pytest.raises(ValidationError):
            MixtureSpec(tuple((z, 0.5) for z in range(1, 7)))

    def test_duplicate_elements(self):
        with pytest.raises(ValidationError):
            MixtureSpec(((8, 0.5), (8, 0.3)))

    def test_weight_range(self):
        with pytest.raises(ValidationError):
            MixtureSpec(((8, 0.0),))
        with pytest.raises(ValidationError):
            MixtureSpec(((8, 1.5),))


class TestSampleMixture:
    """Tests for sample_mixture and check_rule."""

    k_edge_z = frozenset(range(43, 93))

    def test_exact_k_edge_count(self):
        rng = np.random.default_rng(0)
        for k in range(4):
            mixture = sample_mixture(rng, 3, k, self.k_edge_z)
            assert sum(z in self.k_edge_z for z in mixture.atomic_numbers) == k

    def test_elements_distinct_and_weights_in_range(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            mixture = sample_mixture(rng, 5, None, self.k_edge_z)
            assert len(set(mixture.atomic_numbers)) == 5
            assert np.all((mixture.weights > 0.0) & (mixture.weights <= 1.0))

    def test_deterministic(self):
        first = sample_mixture(np.random.default_rng(42), 3, 1, self.k_edge_z)
        second = sample_mixture(np.random.default_rng(42), 3, 1, self.k_edge_z)
        assert first == second

    def test_pool_restricts_elements(self):
        mixture = sample_mixture(np.random.default_rng(3), 2, 0, self.k_edge_z, pool=[6, 8, 53])
        assert set(mixture.atomic_numbers) == {6, 8}

    def test_unsatisfiable_rule(self):
        with pytest.raises(UnsatisfiableRuleError):
            check_rule(3, 2, pool=[1, 2, 53], k_edge_z={53})
        with pytest.raises(UnsatisfiableRuleError):
            check_rule(3, 0, pool=[1, 2, 53], k_edge_z={53})
        with pytest.raises(UnsatisfiableRuleError):
            check_rule(2, 3, pool=range(1, 93), k_edge_z=self.k_edge_z)


class TestMixSpectrum:
    """Tests for mix_spectrum."""

    def test_weighted_sum(self, toy_library):
        grid = EnergyGrid()
        lac = toy_library.lac_matrix(grid)

        spectrum = mix_spectrum(MixtureSpec(((6, 0.5), (53, 0.25))), toy_library, grid)

        np.testing.assert_allclose(spectrum.values, 0.5 * lac[5] + 0.25 * lac[52], rtol=1e-12)

    def test_missing_element(self, toy_library):
        partial = ElementLibrary({6: toy_library.table(6)})
        with pytest.raises(MissingTableError, match="Z=8"):
            mix_spectrum(MixtureSpec(((6, 0.5), (8, 0.5))), partial, EnergyGrid())


class TestStandardizationStats:
    """Tests for StandardizationStats."""

    def test_round_trip(self):
        data = np.array([[1.0, 10.0], [3.0, 30.0], [5.0, 20.0]])
        stats = StandardizationStats.from_data(data)

        np.testing.assert_allclose(stats.destandardize(stats.standardize(data)), data, rtol=1e-12)

    def test_population_std(self):
        stats = StandardizationStats.from_data(np.array([[1.0], [3.0]]))
        assert stats.std[0] == 1.0

    def test_zero_std(self):
        with pytest.raises(DegenerateStatsError):
            StandardizationStats.from_data(np.array([[1.0, 2.0], [1.0, 3.0]]))


class TestBuildDataset:
    """Tests for build_dataset."""

    def test_shapes(self, toy_dataset):
        assert toy_dataset.clean.shape == (200, 26)
        assert toy_dataset.noisy.shape == (200, 26)
        assert len(toy_dataset.mixtures) == 200
        assert toy_dataset.row_ids.tolist() == list(range(200))

    def test_standardized_per_bin(self, toy_dataset):
        np.testing.assert_allclose(toy_dataset.clean.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(toy_dataset.clean.std(axis=0), 1.0, rtol=1e-10)

    def test_physical_round_trip(self, toy_dataset, toy_library):
        grid = toy_dataset.spec.grid
        expected = np.array([mix_spectrum(m, toy_library, grid).values for m in toy_dataset.mixtures])

        np.testing.assert_allclose(toy_dataset.physical(), expected, rtol=1e-10)

    def test_noise_level(self, toy_library):
        spec = DatasetSpec(name="noise", n_elements=1, n_objects=2000, seed=11, noise_sigma=0.1)
        dataset = build_dataset(spec, toy_library)

        assert dataset.noise.std() == pytest.approx(0.1, rel=0.05)
        assert abs(dataset.noise.mean()) < 0.01

    def test_zero_noise(self, toy_library):
        spec = DatasetSpec(name="quiet", n_elements=2, n_objects=20, seed=3, noise_sigma=0.0)
        dataset = build_dataset(spec, toy_library)
        np.testing.assert_array_equal(dataset.noisy, dataset.clean)

    def test_deterministic(self, toy_library, toy_dataset):
        again = build_dataset(toy_dataset.spec, toy_library)

        np.testing.assert_array_equal(again.clean, toy_dataset.clean)
        np.testing.assert_array_equal(again.noisy, toy_dataset.noisy)
        assert again.mixtures == toy_dataset.mixtures

    def test_rows_do_not_depend_on_dataset_size(self, toy_library):
        """Test that row i draws the same mixture and noise whatever n_objects is."""
        small = build_dataset(DatasetSpec(name="s", n_elements=3, n_objects=30, seed=5), toy_library)
        large = build_dataset(DatasetSpec(name="s", n_elements=3, n_objects=60, seed=5), toy_library)

        assert large.mixtures[:30] == small.mixtures
        np.testing.assert_allclose(large.noise[:30], small.noise, atol=1e-12)

    def test_different_seeds_differ(self, toy_library, toy_dataset):
        other = build_dataset(toy_dataset.spec.model_copy(update={"seed": 8}), toy_library)
        assert other.mixtures != toy_dataset.mixtures

    def test_exactly_one_k_edge_element(self, toy_library):
        """Test that single-element exactly(1) rows are all K-edge elements and exactly(0) rows none."""
        grid = EnergyGrid()
        k_edge_z = toy_library.k_edge_class(grid)
        with_edge = build_dataset(DatasetSpec(name="k1", n_elements=1, n_objects=50, k_edges=1, seed=1), toy_library)
        without = build_dataset(DatasetSpec(name="k0", n_elements=1, n_objects=50, k_edges=0, seed=1), toy_library)

        assert all(m.atomic_numbers[0] in k_edge_z for m in with_edge.mixtures)
        assert not any(m.atomic_numbers[0] in k_edge_z for m in without.mixtures)

    def test_k_edge_jump_visible(self, toy_library):
        """Test that a pure K-edge element spectrum rises somewhere while a plain one never does."""
        with_edge = build_dataset(DatasetSpec(name="k1", n_elements=1, n_objects=20, k_edges=1, seed=2), toy_library)
        without = build_dataset(DatasetSpec(name="k0", n_elements=1, n_objects=20, k_edges=0, seed=2), toy_library)

        assert all(np.any(np.diff(row) > 0) for row in with_edge.physical())
        assert all(np.all(np.diff(row) < 0) for row in without.physical())

    def test_supplied_stats(self, toy_library, toy_dataset, toy_no_kedge):
        assert toy_no_kedge.stats is toy_dataset.stats
        assert toy_no_kedge.stats_source == "D2E"

    def test_requires_seed(self, toy_library):
        with pytest.raises(ValidationError):
            build_dataset(DatasetSpec(name="x", n_elements=1, n_objects=5), toy_library)

    def test_single_object_has_degenerate_stats(self, toy_library):
        with pytest.raises(DegenerateStatsError):
            build_dataset(DatasetSpec(name="one", n_elements=2, n_objects=1, seed=0), toy_library)

    def test_spec_rule_validation(self):
        with pytest.raises(pydantic.ValidationError):
            DatasetSpec(name="bad", n_elements=2, n_objects=10, k_edges=3)
        with pytest.raises(pydantic.ValidationError):
            DatasetSpec(name="bad", n_elements=6, n_objects=10)

    def test_subset_keeps_row_ids(self, toy_dataset):
        subset = toy_dataset.subset(np.array([5, 2]))

        assert subset.row_ids.tolist() == [5, 2]
        np.testing.assert_array_equal(subset.clean[0], toy_dataset.clean[5])


class TestSplit:
    """Tests for split_indices and split_dataset."""

    def test_table_sizes(self):
        parts = split_indices(20000, seed=1)
        assert [parts[name].size for name in ("train", "val", "test")] == [14400, 4000, 1600]

    def test_partition(self):
        parts = split_indices(1000, seed=2)
        combined = np.concatenate([parts["train"], parts["val"], parts["test"]])
        assert sorted(combined.tolist()) == list(range(1000))

    def test_remainder_goes_to_train(self):
        parts = split_indices(101, seed=0)
        assert (parts["train"].size, parts["val"].size, parts["test"].size) == (73, 20, 8)

    def test_deterministic(self):
        first, second = split_indices(500, seed=9), split_indices(500, seed=9)
        assert all(np.array_equal(first[name], second[name]) for name in first)

    def test_empty_split(self):
        with pytest.raises(EmptySplitError):
            split_indices(3)

    def test_fractions_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            split_indices(100, (0.5, 0.2, 0.2))

    def test_split_dataset(self, toy_dataset):
        train, val, test = split_dataset(toy_dataset, seed=4)
        assert (train.n_rows, val.n_rows, test.n_rows) == (144, 40, 16)
        assert train.stats is toy_dataset.stats


class TestDatasetFiles:
    """Tests for saving and loading dataset directories."""

    def test_round_trip(self, tmp_path, toy_dataset):
        save_dataset(toy_dataset, tmp_path / "D2E")
        loaded = load_dataset(tmp_path / "D2E")

        assert loaded.spec == toy_dataset.spec
        np.testing.assert_array_equal(loaded.clean, toy_dataset.clean)
        np.testing.assert_array_equal(loaded.noisy, toy_dataset.noisy)
        np.testing.assert_array_equal(loaded.stats.mean, toy_dataset.stats.mean)
        assert loaded.mixtures == toy_dataset.mixtures

    def test_byte_identical_rewrites(self, tmp_path, toy_library, toy_dataset):
        save_dataset(toy_dataset, tmp_path / "a")
        save_dataset(build_dataset(toy_dataset.spec, toy_library), tmp_path / "b")

        for name in ("header.json", "clean.csv", "noisy.csv", "mixtures.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_load_split(self, tmp_path, toy_dataset):
        directory = save_dataset(toy_dataset, tmp_path / "D2E")
        parts = split_indices(toy_dataset.n_rows, seed=3)
        save_split(directory, parts, (0.72, 0.2, 0.08), 3)

        test = load_split(directory, "test")

        assert test.row_ids.tolist() == parts["test"].tolist()
        np.testing.assert_array_equal(test.clean, toy_dataset.clean[parts["test"]])
        assert load_split(directory, "all").n_rows == toy_dataset.n_rows

    def test_unknown_split(self, tmp_path, toy_dataset):
        directory = save_dataset(toy_dataset, tmp_path / "D2E")
        with pytest.raises(ValidationError):
            load_split(directory, "holdout")

    def test_missing_split_file(self, tmp_path, toy_dataset):
        directory = save_dataset(toy_dataset, tmp_path / "D2E")
        with pytest.raises(MissingArtifactError):
            load_split(directory, "train")

    def test_missing_dataset(self, tmp_path):
        with pytest.raises(MissingArtifactError):
            load_dataset(tmp_path / "nothing")

    def test_unsupported_version(self, tmp_path, toy_dataset):
        directory = save_dataset(toy_dataset, tmp_path / "D2E")
        header = json.loads((directory / "header.json").read_text())
        header["format_version"] = 99
        (directory / "header.json").write_text(json.dumps(header))

        with pytest.raises(ParseError):
            load_dataset(directory)

    def test_malformed_mixture(self, tmp_path, toy_dataset):
        directory = save_dataset(toy_dataset, tmp_path / "D2E")
        (directory / "mixtures.csv").write_text("row,components\n0,not-a-mixture\n")

        with pytest.raises(ParseError):
            load_dataset(directory)
