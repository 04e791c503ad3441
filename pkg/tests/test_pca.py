import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from gasot import pca


def test_rank_one_line():
    t = np.linspace(-1, 1, 30)
    x = np.column_stack([t, 2 * t])
    m = pca.pca_fit(x, 1)
    assert pca.explained_variance_curve(m) == pytest.approx([1.0])
    assert np.allclose(m.components[0], np.array([1, 2]) / np.sqrt(5))


def test_matches_dense_eigensolver(rng):
    x = rng.standard_normal((20, 10))
    m = pca.pca_fit(x)
    cov = np.cov(x.T)
    ev, vecs = np.linalg.eigh(cov)
    order = np.argsort(ev)[::-1]
    assert np.allclose(m.eigenvalues, ev[order], atol=1e-8)
    for i in range(m.k):
        v = vecs[:, order[i]]
        assert abs(abs(v @ m.components[i]) - 1) < 1e-8


def test_deterministic_and_sign_convention(rng):
    x = rng.standard_normal((40, 6))
    a, b = pca.pca_fit(x), pca.pca_fit(x)
    assert np.array_equal(a.components, b.components)
    idx = np.argmax(np.abs(a.components), axis=1)
    assert np.all(a.components[np.arange(a.k), idx] > 0)


def test_transform_properties(rng):
    x = rng.standard_normal((50, 8)) @ rng.standard_normal((8, 8))
    m = pca.pca_fit(x)
    assert np.allclose(pca.pca_transform(m, m.mean), 0)
    scores = pca.pca_transform(m, x)
    assert np.allclose(scores @ m.components + m.mean, x, atol=1e-8)
    cov = np.cov(scores.T)
    off = cov - np.diag(np.diag(cov))
    assert np.max(np.abs(off)) < 1e-6 * np.max(np.abs(cov))
    assert np.allclose(np.diag(cov), m.eigenvalues)


def test_errors_and_degenerate_input():
    with pytest.raises(ValueError):
        pca.pca_fit(np.ones((1, 3)))
    with pytest.raises(ValueError):
        pca.pca_fit(np.ones((5, 3)), 4)
    m = pca.pca_fit(np.ones((5, 3)))
    assert np.all(m.eigenvalues == 0)
    with pytest.raises(ValueError):
        pca.explained_variance_curve(m)
    with pytest.raises(ValueError):
        pca.pca_transform(m, np.ones((2, 4)))


@given(arrays(float, st.tuples(st.integers(3, 15), st.integers(2, 8)),
              elements=st.floats(-100, 100, allow_nan=False)))
def test_curve_monotone_and_bounded(x):
    m = pca.pca_fit(x)
    if m.total_variance <= 1e-9:
        return
    c = pca.explained_variance_curve(m)
    assert np.all(np.diff(c) >= -1e-12)
    assert c[-1] <= 1.0
    assert np.all(m.eigenvalues >= 0)
    assert np.allclose(m.components @ m.components.T, np.eye(m.k), atol=1e-8)
    rank = np.linalg.matrix_rank(x - x.mean(0))
    if m.k >= rank:
        assert c[-1] == pytest.approx(1.0, abs=1e-9)


def test_n_components_for(rng):
    x = rng.standard_normal((30, 5)) * np.array([10, 5, 1, 0.1, 0.01])
    m = pca.pca_fit(x)
    curve = pca.explained_variance_curve(m)
    k = pca.n_components_for(m, 0.99)
    assert curve[k - 1] >= 0.99 and (k == 1 or curve[k - 2] < 0.99)
