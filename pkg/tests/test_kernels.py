import numpy as np
import pytest

from dm2l.kernels import KernelSpec, cross_kernel, gram_matrix, group_rows

GAUSS = KernelSpec.gaussian(1.0)


def test_linear_identity():
    np.testing.assert_array_equal(gram_matrix(np.eye(2), KernelSpec()).values, np.eye(2))


def test_gaussian_diagonal_and_range(rng):
    K = gram_matrix(rng.standard_normal((15, 4)), KernelSpec.gaussian(0.7)).values
    np.testing.assert_array_equal(np.diag(K), 1.0)
    assert np.all(K > 0) and np.all(K <= 1)
    np.testing.assert_allclose(K, K.T, atol=1e-10)


def test_gaussian_pair_value():
    K = gram_matrix(np.array([[0.0, 0.0], [2.0, 0.0]]), GAUSS).values
    assert K[0, 1] == pytest.approx(np.exp(-2.0), abs=1e-15)
    assert K[0, 1] == pytest.approx(0.13534, abs=1e-5)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        KernelSpec.gaussian(0.0)
    with pytest.raises(ValueError):
        gram_matrix(np.array([[np.nan, 1.0]]), GAUSS)
    with pytest.raises(ValueError):
        cross_kernel(np.ones((2, 3)), np.ones((2, 4)), GAUSS)


@pytest.mark.parametrize("spec", [KernelSpec(), KernelSpec.gaussian(1.5)])
def test_cross_kernel_consistency(rng, spec):
    X = rng.standard_normal((10, 3))
    np.testing.assert_allclose(cross_kernel(X, X, spec), gram_matrix(X, spec).values, atol=1e-12)
    for g in ([0, 3, 4], [9, 1], list(range(10))):
        np.testing.assert_allclose(group_rows(gram_matrix(X, spec).values, g),
                                   cross_kernel(X[g], X, spec), atol=1e-12)


def test_cross_kernel_linear_and_self_row(rng):
    A, B = rng.standard_normal((4, 3)), rng.standard_normal((6, 3))
    np.testing.assert_allclose(cross_kernel(A, B, KernelSpec()), A @ B.T)
    row = cross_kernel(B[2:3], B, GAUSS)
    assert row[0, 2] == 1.0
    assert np.all(np.delete(row[0], 2) < 1)


@pytest.mark.parametrize("spec", [KernelSpec(), KernelSpec.gaussian(0.5), KernelSpec.gaussian(2.0)])
def test_gram_psd(rng, spec):
    for _ in range(20):
        K = gram_matrix(rng.standard_normal((rng.integers(2, 25), 4)), spec).values
        ev = np.linalg.eigvalsh(K)
        assert ev[0] >= -1e-8 * ev[-1]


def test_gaussian_translation_invariance(rng):
    X = rng.standard_normal((12, 5))
    v = rng.standard_normal(5) * 3
    np.testing.assert_allclose(gram_matrix(X + v, GAUSS).values, gram_matrix(X, GAUSS).values,
                               atol=1e-12)


def test_group_rows():
    M = np.array([[1, 2], [3, 4], [5, 6]])
    np.testing.assert_array_equal(group_rows(M, [0, 1, 2]), M)
    assert group_rows(M, []).shape == (0, 2)
    np.testing.assert_array_equal(group_rows(M, [2, 0]), [[5, 6], [1, 2]])
    with pytest.raises(IndexError):
        group_rows(M, [3])
