"""Tests for dataset validation, directory IO, and the generation pipelines."""

import numpy as np
import pytest

from multifid.datagen.dataset import (
    FidelityDataset,
    FidelityLevel,
    generate_dataset,
    read_dataset,
    write_dataset,
)
from multifid.errors import ConfigError, DatasetFormatError


def small_dataset(seed=0):
    rng = np.random.default_rng(seed)
    levels = [FidelityLevel(rng.random((6, 2)), rng.random((6, 1)) * 1e6),
              FidelityLevel(rng.random((4, 2)), rng.random((4, 3)))]
    return FidelityDataset("currin", seed, levels, np.array([[0.0, 1.0]] * 2),
                           test_x=rng.random((3, 2)), test_y=rng.random((3, 3)))


class TestInvariants:
    def test_dimension_ordering_enforced(self):
        rng = np.random.default_rng(1)
        levels = [FidelityLevel(rng.random((5, 2)), rng.random((5, 4))),
                  FidelityLevel(rng.random((4, 2)), rng.random((4, 2)))]
        with pytest.raises(ConfigError):
            FidelityDataset("currin", 0, levels, np.array([[0.0, 1.0]] * 2))

    def test_count_ordering_enforced(self):
        rng = np.random.default_rng(2)
        levels = [FidelityLevel(rng.random((3, 2)), rng.random((3, 1))),
                  FidelityLevel(rng.random((5, 2)), rng.random((5, 1)))]
        with pytest.raises(ConfigError):
            FidelityDataset("currin", 0, levels, np.array([[0.0, 1.0]] * 2))

    def test_subset_high_keeps_prefix(self):
        ds = small_dataset()
        sub = ds.subset_high(2)
        np.testing.assert_array_equal(sub.highest.x, ds.highest.x[:2])
        assert sub.lowest.n == ds.lowest.n

    def test_subset_high_bounds_checked(self):
        with pytest.raises(ConfigError):
            small_dataset().subset_high(99)


class TestRoundTrip:
    def test_write_read_value_exact(self, tmp_path):
        ds = small_dataset()
        write_dataset(ds, tmp_path)
        back = read_dataset(tmp_path)
        assert back.benchmark == ds.benchmark
        assert back.n_levels == 2
        for lv_a, lv_b in zip(ds.levels, back.levels):
            np.testing.assert_array_equal(lv_a.x, lv_b.x)
            np.testing.assert_array_equal(lv_a.y, lv_b.y)
        np.testing.assert_array_equal(back.test_x, ds.test_x)
        np.testing.assert_array_equal(back.test_y, ds.test_y)
        np.testing.assert_array_equal(back.bounds, ds.bounds)

    def test_byte_identical_rewrite(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        write_dataset(small_dataset(), a)
        write_dataset(small_dataset(), b)
        for name in ("meta.json", "inputs_f1.csv", "outputs_f2.csv", "inputs_test.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_missing_outputs_file_names_the_level(self, tmp_path):
        write_dataset(small_dataset(), tmp_path)
        (tmp_path / "outputs_f2.csv").unlink()
        with pytest.raises(DatasetFormatError) as err:
            read_dataset(tmp_path)
        assert "level 2" in str(err.value)

    def test_header_dimension_mismatch_rejected(self, tmp_path):
        write_dataset(small_dataset(), tmp_path)
        path = tmp_path / "outputs_f1.csv"
        lines = path.read_text().splitlines()
        lines[0] = "y1,y2"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetFormatError):
            read_dataset(tmp_path)

    def test_bad_number_reports_row_and_column(self, tmp_path):
        write_dataset(small_dataset(), tmp_path)
        path = tmp_path / "inputs_f1.csv"
        lines = path.read_text().splitlines()
        parts = lines[3].split(",")
        parts[1] = "oops"
        lines[3] = ",".join(parts)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetFormatError) as err:
            read_dataset(tmp_path)
        assert "row 4" in str(err.value) and "column 2" in str(err.value)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DatasetFormatError):
            read_dataset(tmp_path / "nowhere")


class TestGeneratePipelines:
    def test_analytic_shapes_and_bounds(self):
        ds = generate_dataset("borehole", 10, 5, 7, 0)
        assert ds.lowest.x.shape == (10, 8)
        assert ds.highest.y.shape == (5, 1)
        assert ds.test_x.shape == (7, 8)
        assert np.all(ds.lowest.x >= ds.bounds[:, 0])
        assert np.all(ds.lowest.x <= ds.bounds[:, 1])

    def test_independent_fidelity_draws(self):
        ds = generate_dataset("currin", 5, 5, 5, 0)
        assert not np.array_equal(ds.lowest.x, ds.highest.x)

    def test_seed_determinism(self):
        a = generate_dataset("park", 6, 3, 4, 11)
        b = generate_dataset("park", 6, 3, 4, 11)
        np.testing.assert_array_equal(a.lowest.y, b.lowest.y)
        np.testing.assert_array_equal(a.test_x, b.test_x)

    def test_lf_prefix_nested_across_sizes(self):
        small = generate_dataset("currin", 10, 2, 2, 5)
        large = generate_dataset("currin", 30, 2, 2, 5)
        np.testing.assert_array_equal(large.lowest.x[:10], small.lowest.x)

    def test_n_ordering_enforced(self):
        with pytest.raises(ConfigError):
            generate_dataset("currin", 4, 8, 2, 0)

    @pytest.mark.parametrize("benchmark", ["burgers", "poisson"])
    def test_pde_upscaled_dims_equal(self, benchmark):
        ds = generate_dataset(benchmark, 2, 1, 1, 0)
        assert ds.lowest.d == ds.highest.d == 100 * 100
        assert ds.lowest.n >= ds.highest.n
        assert ds.field_shape == (100, 100)

    def test_pde_round_trip(self, tmp_path):
        ds = generate_dataset("poisson", 2, 1, 1, 3)
        write_dataset(ds, tmp_path)
        back = read_dataset(tmp_path)
        np.testing.assert_array_equal(back.highest.y, ds.highest.y)
        assert back.field_shape == (100, 100)
