import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dm2l.dataset_io import (
    Dataset,
    DatasetFormatError,
    ObservationMask,
    ObservedLabelMatrix,
    apply_mask,
    generate_mask,
    generate_synthetic,
    generate_xor,
    load_dataset,
    mask_residual,
    normalize_features,
    restrict,
    save_dataset,
    split_train_test,
)

Y2 = np.array([[1.0, -1.0], [-1.0, 1.0]])


def test_apply_mask_full_is_identity():
    out = apply_mask(Y2, ObservationMask.full(Y2.shape))
    np.testing.assert_array_equal(out.values, Y2)


def test_apply_mask_empty_is_zero():
    out = apply_mask(Y2, ObservationMask(np.zeros((2, 2), bool)))
    np.testing.assert_array_equal(out.values, np.zeros((2, 2)))


def test_apply_mask_diagonal():
    mask = ObservationMask.from_pairs([(0, 0), (1, 1)], (2, 2))
    np.testing.assert_array_equal(apply_mask(Y2, mask).values, [[1, 0], [0, 1]])


def test_apply_mask_shape_mismatch():
    with pytest.raises(ValueError):
        apply_mask(Y2, ObservationMask.full((3, 2)))


def test_mask_pairs_validation():
    with pytest.raises(IndexError):
        ObservationMask.from_pairs([(2, 0)], (2, 2))
    with pytest.raises(ValueError):
        ObservationMask.from_pairs([(0, 0), (0, 0)], (2, 2))
    m = ObservationMask.from_pairs([(1, 0), (0, 1)], (2, 2))
    assert m.entries == [(0, 1), (1, 0)] and len(m) == 2 and (1, 0) in m


def test_observed_matrix_invariant():
    with pytest.raises(ValueError):
        ObservedLabelMatrix(np.array([[1.0, 1.0]]), ObservationMask.from_pairs([(0, 0)], (1, 2)))


def test_mask_residual_examples():
    full = apply_mask(Y2, ObservationMask.full((2, 2)))
    np.testing.assert_array_equal(mask_residual(Y2, full), np.zeros((2, 2)))
    empty = apply_mask(Y2, ObservationMask(np.zeros((2, 2), bool)))
    np.testing.assert_array_equal(mask_residual(np.ones((2, 2)) * 7, empty), np.zeros((2, 2)))
    obs = apply_mask(np.array([[1.0, -1.0]]), ObservationMask.from_pairs([(0, 0)], (1, 2)))
    np.testing.assert_array_equal(mask_residual(np.array([[0.5, 2.0]]), obs), [[-0.5, 0.0]])
    with pytest.raises(ValueError):
        mask_residual(np.ones((2, 3)), full)


masks = st.integers(1, 6).flatmap(lambda n: st.integers(1, 6).flatmap(
    lambda c: arrays(bool, (n, c))))


@given(masks, st.integers(0, 2 ** 31))
def test_apply_mask_idempotent(m, seed):
    Y = np.where(np.random.default_rng(seed).random(m.shape) < 0.5, 1.0, -1.0)
    mask = ObservationMask(m)
    once = apply_mask(Y, mask)
    np.testing.assert_array_equal(apply_mask(once.values, mask).values, once.values)


@given(masks, st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2 ** 31))
def test_restrict_is_linear(m, a, b, seed):
    rng = np.random.default_rng(seed)
    M, N = rng.standard_normal(m.shape), rng.standard_normal(m.shape)
    mask = ObservationMask(m)
    np.testing.assert_allclose(restrict(a * M + b * N, mask),
                               a * restrict(M, mask) + b * restrict(N, mask), atol=1e-12)


def test_generate_mask_examples():
    assert len(generate_mask(4, 5, 1.0, 0)) == 20
    assert len(generate_mask(4, 5, 0.0, 0)) == 0
    assert len(generate_mask(4, 5, 0.5, 0)) == 10
    np.testing.assert_array_equal(generate_mask(4, 5, 0.5, 3).observed,
                                  generate_mask(4, 5, 0.5, 3).observed)
    with pytest.raises(ValueError):
        generate_mask(4, 5, 1.5, 0)


@given(st.integers(1, 15), st.integers(1, 15), st.floats(0, 1), st.integers(0, 2 ** 31))
def test_generate_mask_cardinality(n, c, rho, seed):
    assert len(generate_mask(n, c, rho, seed)) == int(np.floor(rho * n * c + 0.5))


def _toy(n, d=3, c=2, seed=0):
    return generate_synthetic(n, d, c, 1, seed=seed)


def test_split_examples():
    s = split_train_test(_toy(10), 0.6, 1)
    assert (len(s.train_indices), len(s.test_indices)) == (6, 4)
    s5 = split_train_test(_toy(5), 0.6, 1)
    assert (len(s5.train_indices), len(s5.test_indices)) == (3, 2)
    again = split_train_test(_toy(10), 0.6, 1)
    np.testing.assert_array_equal(s.train_indices, again.train_indices)
    with pytest.raises(ValueError):
        split_train_test(_toy(2), 0.1, 0)
    with pytest.raises(ValueError):
        split_train_test(_toy(10), 1.0, 0)


@given(st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 2 ** 31))
def test_split_is_partition(n, frac, seed):
    k = int(np.floor(frac * n + 0.5))
    if k in (0, n):
        return
    s = split_train_test(_toy(n), frac, seed)
    both = np.concatenate([s.train_indices, s.test_indices])
    np.testing.assert_array_equal(np.sort(both), np.arange(n))
    assert len(s.train_indices) == k


def test_sparse_line_parsing(tmp_path):
    f = tmp_path / "d.txt"
    f.write_text("1,3 2:0.5 7:1.0\n  2:0.5\n")
    ds = load_dataset(f, n_features=8, n_labels=4)
    np.testing.assert_array_equal(ds.labels[0], [1, -1, 1, -1])
    expected = np.zeros(8)
    expected[2], expected[7] = 0.5, 1.0
    np.testing.assert_array_equal(ds.features[0], expected)
    np.testing.assert_array_equal(ds.labels[1], [-1, -1, -1, -1])


@pytest.mark.parametrize("text, match", [
    ("1,x 0:1\n", "line 1"),
    ("1 0:1\n2 3-4\n", "line 2"),
    ("5 0:1\n", "exceeds"),
    ("0 0:1\n", "1-based"),
])
def test_sparse_parse_errors(tmp_path, text, match):
    f = tmp_path / "bad.txt"
    f.write_text(text)
    with pytest.raises(DatasetFormatError, match=match):
        load_dataset(f, n_features=4, n_labels=3)


def test_dense_csv(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("y1,y2,x1,x2\n1,0,0.5,2\n0,1,1.5,-1\n")
    ds = load_dataset(f, "dense-csv")
    np.testing.assert_array_equal(ds.labels, [[1, -1], [-1, 1]])
    np.testing.assert_array_equal(ds.features, [[0.5, 2], [1.5, -1]])
    f.write_text("y1,y2,x1,x2\n1,0,0.5\n")
    with pytest.raises(DatasetFormatError, match="line 2"):
        load_dataset(f, "dense-csv")
    f.write_text("y1,x1\n2,0.5\n")
    with pytest.raises(DatasetFormatError, match="label values"):
        load_dataset(f, "dense-csv")


def test_image_sized_file(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((2000, 294))
    Y = np.where(rng.random((2000, 5)) < 0.3, 1.0, -1.0)
    f = tmp_path / "image.txt"
    save_dataset(Dataset(X, Y), f)
    ds = load_dataset(f)
    assert (ds.n, ds.d, ds.c) == (2000, 294, 5)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(1, 6), st.integers(1, 5), st.integers(0, 2 ** 31),
       st.sampled_from(["sparse-multilabel", "dense-csv"]))
def test_save_load_roundtrip(n, d, c, seed, fmt):
    import tempfile
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d)) * 10.0 ** rng.integers(-8, 8, size=(n, d))
    X[rng.random((n, d)) < 0.3] = 0.0
    X[0, 0] = -0.0
    Y = np.where(rng.random((n, c)) < 0.4, 1.0, -1.0)
    ds = Dataset(X, Y)
    with tempfile.TemporaryDirectory() as tmp:
        path = f"{tmp}/ds"
        save_dataset(ds, path, fmt)
        back = load_dataset(path, fmt)
    assert back.features.tobytes() == ds.features.tobytes()
    np.testing.assert_array_equal(back.labels, ds.labels)


def test_synthetic_properties():
    a = generate_synthetic(40, 6, 4, 4, noise=0.0, seed=3)
    b = generate_synthetic(40, 6, 4, 4, noise=0.0, seed=3)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert set(np.unique(a.labels)) <= {-1.0, 1.0}
    with pytest.raises(ValueError):
        generate_synthetic(10, 3, 4, 4)


def test_synthetic_score_rank():
    # regenerate the score matrix with the same stream to check its numerical rank
    n, d, c, r, seed = 50, 8, 6, 3, 11
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    U, V = rng.standard_normal((d, r)), rng.standard_normal((c, r))
    sv = np.linalg.svd(X @ U @ V.T, compute_uv=False)
    assert np.sum(sv > 1e-10 * sv[0]) == r
    ds = generate_synthetic(n, d, c, r, 0.0, seed)
    np.testing.assert_array_equal(ds.features, X)
    np.testing.assert_array_equal(ds.labels, np.where(X @ U @ V.T >= 0, 1.0, -1.0))


def test_xor_labels_defeat_linear_scores():
    ds = generate_xor(400, 2, 3, seed=0)
    assert ds.labels.shape == (400, 3)
    for k in range(3):
        # least-squares linear fit explains almost nothing of an XOR label
        coef, *_ = np.linalg.lstsq(np.c_[ds.features, np.ones(400)], ds.labels[:, k], rcond=None)
        pred = np.c_[ds.features, np.ones(400)] @ coef
        assert np.corrcoef(pred, ds.labels[:, k])[0, 1] < 0.25


def test_normalize_examples():
    np.testing.assert_allclose(normalize_features(np.array([[1.0], [3.0]])), [[-1.0], [1.0]])
    np.testing.assert_array_equal(normalize_features(np.array([[5.0], [5.0], [5.0]])), np.zeros((3, 1)))
    Z = normalize_features(np.random.default_rng(0).standard_normal((30, 4)))
    np.testing.assert_allclose(normalize_features(Z), Z, atol=1e-12)


@given(arrays(float, st.tuples(st.integers(2, 20), st.integers(1, 5)),
              elements=st.floats(-1e3, 1e3)))
def test_normalize_moments(X):
    Z = normalize_features(X)
    const = np.all(X == X[:1], axis=0)
    assert np.all(Z[:, const] == 0)
    ok = ~const & (X.std(axis=0) > 1e-6 * (1 + np.abs(X).max(axis=0)))
    np.testing.assert_allclose(Z[:, ok].mean(axis=0), 0, atol=1e-8)
    np.testing.assert_allclose(Z[:, ok].std(axis=0), 1, atol=1e-8)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)), np.array([[1.0], [0.0]]))
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)), np.ones((3, 1)))
