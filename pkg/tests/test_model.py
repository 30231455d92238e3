import numpy as np
import pytest

from dm2l.dataset_io import feature_stats
from dm2l.kernels import KernelSpec, cross_kernel, gram_matrix
from dm2l.model import (
    ModelFormatError,
    kernel_model,
    linear_model,
    load_model,
    predict_scores,
    save_model,
)


@pytest.fixture
def data(rng):
    X = rng.standard_normal((12, 4)) * 3 + 1
    return X, feature_stats(X)


def test_linear_scores(data, rng):
    X, stats = data
    W = rng.standard_normal((4, 3))
    m = linear_model(W, stats)
    np.testing.assert_allclose(predict_scores(m, X), stats.apply(X) @ W)
    zero = linear_model(W, feature_stats(np.zeros((3, 4))))
    assert not predict_scores(zero, np.zeros((2, 4))).any()


def test_kernel_scores_on_training_set(data, rng):
    X, stats = data
    Z = stats.apply(X)
    spec = KernelSpec.gaussian(1.5)
    A = rng.standard_normal((12, 3))
    m = kernel_model(A, Z, spec, stats)
    np.testing.assert_allclose(predict_scores(m, X), gram_matrix(Z, spec).values @ A, atol=1e-12)


def test_linear_kernel_matches_linear_model(data, rng):
    X, stats = data
    Z = stats.apply(X)
    A = rng.standard_normal((12, 3))
    km = kernel_model(A, Z, KernelSpec(), stats)
    lm = linear_model(Z.T @ A, stats)
    X_test = rng.standard_normal((7, 4))
    np.testing.assert_allclose(predict_scores(km, X_test), predict_scores(lm, X_test), atol=1e-10)


def test_dimension_mismatch(data, rng):
    X, stats = data
    m = linear_model(rng.standard_normal((4, 2)), stats)
    with pytest.raises(ValueError):
        predict_scores(m, np.ones((2, 5)))
    with pytest.raises(ValueError):
        linear_model(rng.standard_normal((3, 2)), stats)


@pytest.mark.parametrize("kind", ["linear", "gaussian", "linear-kernel"])
def test_roundtrip(tmp_path, data, rng, kind):
    X, stats = data
    if kind == "linear":
        m = linear_model(rng.standard_normal((4, 3)), stats, lam=0.1, objective=2.5)
    else:
        spec = KernelSpec.gaussian(0.5) if kind == "gaussian" else KernelSpec()
        m = kernel_model(rng.standard_normal((12, 3)), stats.apply(X), spec, stats, lam=1.0)
    path = tmp_path / "m.bin"
    save_model(m, path)
    back = load_model(path)
    assert back.variant == m.variant and back.kernel == m.kernel
    assert back.coef.tobytes() == m.coef.tobytes()
    assert back.metadata == m.metadata
    X_test = rng.standard_normal((5, 4))
    assert predict_scores(back, X_test).tobytes() == predict_scores(m, X_test).tobytes()
    assert path.read_bytes()[:4] == b"DM2L"


def test_bad_files(tmp_path, data, rng):
    X, stats = data
    path = tmp_path / "m.bin"
    path.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ModelFormatError, match="magic"):
        load_model(path)
    save_model(linear_model(rng.standard_normal((4, 2)), stats), path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(ModelFormatError, match="truncated"):
        load_model(path)
    path.write_bytes(raw[:4] + (9).to_bytes(2, "little") + raw[6:])
    with pytest.raises(ModelFormatError, match="version"):
        load_model(path)


def test_kernel_prediction_uses_cross_kernel(data, rng):
    X, stats = data
    Z = stats.apply(X)
    spec = KernelSpec.gaussian(2.0)
    A = rng.standard_normal((12, 2))
    X_test = rng.standard_normal((3, 4))
    expected = cross_kernel(stats.apply(X_test), Z, spec) @ A
    np.testing.assert_allclose(predict_scores(kernel_model(A, Z, spec, stats), X_test), expected)
