import numpy as np
import pytest

from ffoneclass.data import (
    default_data_path,
    DataFormatError,
    Dataset,
    is_canonical_banknote,
    load_banknote,
    make_splits,
    standardize,
    synthetic_banknote_like,
)

FIRST_ROW = "3.6216,8.6661,-2.8073,-0.44699,0"


def write(tmp_path, text, name="d.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoad:
    def test_first_published_row(self, tmp_path):
        ds = load_banknote(write(tmp_path, FIRST_ROW + "\n"))
        np.testing.assert_array_equal(ds.features[0], [3.6216, 8.6661, -2.8073, -0.44699])
        assert ds.labels[0] == 0

    def test_blank_lines_ignored(self, tmp_path):
        ds = load_banknote(write(tmp_path, f"\n{FIRST_ROW}\n\n1,2,3,4,1\n"))
        assert len(ds) == 2 and ds.labels.tolist() == [0, 1]

    def test_empty(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_banknote(write(tmp_path, ""))

    def test_column_count(self, tmp_path):
        with pytest.raises(DataFormatError, match=":2:"):
            load_banknote(write(tmp_path, FIRST_ROW + "\n1,2,3,1\n"))

    def test_malformed_number(self, tmp_path):
        with pytest.raises(DataFormatError, match=":1:"):
            load_banknote(write(tmp_path, "1,x,3,4,0\n"))

    def test_bad_label(self, tmp_path):
        with pytest.raises(DataFormatError, match="label"):
            load_banknote(write(tmp_path, "1,2,3,4,2\n"))

    def test_canonical_counts(self):
        ds = synthetic_banknote_like()
        assert is_canonical_banknote(ds)
        assert not is_canonical_banknote(ds.subset(np.arange(100)))


class TestSplits:
    def test_deterministic(self, small_dataset):
        a, b = make_splits(small_dataset, split_seed=3), make_splits(small_dataset, split_seed=3)
        for k in ("train", "valid", "test"):
            assert getattr(a, k).tobytes() == getattr(b, k).tobytes()
        assert not np.array_equal(a.test, make_splits(small_dataset, split_seed=4).test)

    def test_index_files_identical(self, small_dataset, tmp_path):
        make_splits(small_dataset).write_indices(tmp_path / "a")
        make_splits(small_dataset).write_indices(tmp_path / "b")
        for k in ("train", "valid", "test"):
            assert (tmp_path / "a" / f"{k}_indices.txt").read_bytes() == (tmp_path / "b" / f"{k}_indices.txt").read_bytes()

    @pytest.mark.parametrize("move", [False, True])
    def test_disjoint_and_oneclass(self, small_dataset, move):
        s = make_splits(small_dataset, move_to_test=move)
        sets = [set(s.train), set(s.valid), set(s.test)]
        assert not (sets[0] & sets[1]) and not (sets[0] & sets[2]) and not (sets[1] & sets[2])
        assert max(max(x) for x in sets) < len(small_dataset)
        assert np.all(small_dataset.labels[s.train] == 0)

    def test_full_size_counts(self):
        ds = synthetic_banknote_like()
        s = make_splits(ds)
        assert len(s.train) <= 762
        assert (len(s.train), len(s.valid), len(s.test)) == (457, 152 + 122, 153 + 122)
        assert int(ds.labels[s.test].sum()) == 122
        moved = make_splits(ds, move_to_test=True)
        assert len(moved.test) == len(s.test) + 366

    def test_majority_normal_mode(self, small_dataset):
        s = make_splits(small_dataset, oneclass=False)
        assert small_dataset.labels[s.train].sum() > 0

    def test_stratified(self, small_dataset):
        s = make_splits(small_dataset, oneclass=False)
        rate = small_dataset.labels.mean()
        for k in ("train", "valid", "test"):
            assert abs(small_dataset.labels[getattr(s, k)].mean() - rate) < 0.05

    @pytest.mark.parametrize("fr", [(0.5, 0.2, 0.2), (0.6, 0.4), (1.0, 0.0, 0.0)])
    def test_bad_fractions(self, small_dataset, fr):
        with pytest.raises(ValueError):
            make_splits(small_dataset, fractions=fr)


class TestStandardize:
    def test_train_moments(self, small_dataset):
        s = make_splits(small_dataset)
        z = standardize(s, small_dataset.features[s.train])
        np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(z.std(axis=0), 1, atol=1e-9)

    def test_test_rows_not_centred(self, small_dataset):
        s = make_splits(small_dataset)
        z = standardize(s, small_dataset.features[s.test])
        assert np.any(np.abs(z.mean(axis=0)) > 1e-3)

    def test_constant_column(self):
        f = np.ones((20, 4))
        f[:, 1] = np.arange(20)
        ds = Dataset(f, np.zeros(20))
        s = make_splits(ds)
        z = standardize(s, f)
        assert np.all(z[:, 0] == 0) and np.all(np.isfinite(z))

    def test_disabled(self, small_dataset):
        s = make_splits(small_dataset, standardize=False)
        np.testing.assert_array_equal(standardize(s, small_dataset.features), small_dataset.features)


def test_dataset_validation():
    with pytest.raises(DataFormatError):
        Dataset(np.zeros((3, 3)), np.zeros(3))
    with pytest.raises(DataFormatError):
        Dataset(np.zeros((3, 4)), np.zeros(2))
    with pytest.raises(DataFormatError):
        Dataset(np.zeros((1, 4)), np.array([3]))


def test_canonical_banknote_file():
    path = default_data_path()
    if not path.is_file():
        pytest.fail(f"banknote file not found at {path}; set FFOC_BANKNOTE")
    ds = load_banknote(path)
    assert len(ds) == 1372 and int(ds.labels.sum()) == 610
    np.testing.assert_array_equal(ds.features[0], [3.6216, 8.6661, -2.8073, -0.44699])
