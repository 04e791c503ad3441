import numpy as np
import pytest

from gasot import pls
from _oracles import ols_predict, pls_coefficients


def _problem(seed, n=50, p=8, q=2):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    y = x @ rng.standard_normal((p, q)) + 0.3 * rng.standard_normal((n, q))
    return x, y


def ols_agreement(n_problems=20):
    worst = 0.0
    for seed in range(n_problems):
        x, y = _problem(seed)
        m = pls.nipals_fit(x, y, 8)
        x_new = np.random.default_rng(100 + seed).standard_normal((10, 8))
        for xx in (x, x_new):
            worst = max(worst, float(np.max(np.abs(pls.pls_predict(m, xx) - ols_predict(x, y, xx)))))
    return worst


def test_full_rank_equals_ols():
    assert ols_agreement() < 1e-6


def test_exact_linear_recovery():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((40, 5))
    y = x @ rng.standard_normal(5) + 3.0
    m = pls.nipals_fit(x, y, 5)
    assert np.max(np.abs(pls.pls_predict(m, x)[:, 0] - y)) < 1e-6


def test_first_weight_is_power_iteration_direction():
    x, y = _problem(3, q=3)
    xc, yc = x - x.mean(0), y - y.mean(0)
    a = xc.T @ yc @ yc.T @ xc
    v = np.ones(a.shape[0])
    for _ in range(2000):
        v = a @ v
        v /= np.linalg.norm(v)
    w = pls.nipals_fit(x, y, 1).weights[:, 0]
    assert abs(w @ v) > 1 - 1e-6


def test_prediction_properties():
    x, y = _problem(5)
    m = pls.nipals_fit(x, y, 4)
    assert np.allclose(pls.pls_predict(m, x.mean(0)), y.mean(0), atol=1e-12)
    x1, x2 = x[:3], x[3:6]
    a = 0.3
    lhs = pls.pls_predict(m, a * x1 + (1 - a) * x2)
    rhs = a * pls.pls_predict(m, x1) + (1 - a) * pls.pls_predict(m, x2)
    assert np.allclose(lhs, rhs, atol=1e-8)
    b = pls_coefficients(m)
    oracle = (x - m.x_mean) @ b + m.y_mean
    assert np.max(np.abs(pls.pls_predict(m, x) - oracle)) < 1e-8
    with pytest.raises(ValueError):
        pls.pls_predict(m, np.ones((2, 3)))


def test_residual_norms_strictly_decrease():
    x, y = _problem(8)
    m = pls.nipals_fit(x, y, 8)
    assert np.all(np.diff(m.residual_norms) < 0)
    assert m.k == 8 and m.weights.shape == (8, 8)


def test_fit_errors():
    x, y = _problem(1)
    with pytest.raises(ValueError):
        pls.nipals_fit(x, y, 9)
    with pytest.raises(ValueError):
        pls.nipals_fit(np.ones((10, 3)), y[:10], 1)
    with pytest.raises(ValueError):
        pls.nipals_fit(x, y[:10], 1)


def test_rank_deficient_k_reports_exhaustion():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 2)) @ rng.standard_normal((2, 6))
    with pytest.raises(ValueError, match="exhausted"):
        pls.nipals_fit(x, rng.standard_normal(30), 5)


def test_dummy_columns_and_decision():
    d = pls.dummy_columns(np.array([0, 1, 1, 0]))
    assert np.array_equal(d.sum(1), np.ones(4))
    assert pls.plsda_decide([[0.8, 0.2]])[0] == 0
    assert pls.plsda_decide([[0.2, 0.8]])[0] == 1
    assert pls.plsda_decide([[0.4, 0.4]])[0] == 0
    rng = np.random.default_rng(0)
    scores = rng.standard_normal((50, 2))
    assert np.array_equal(pls.plsda_decide(scores), pls.plsda_decide(scores + 7.5))


def test_plsda_separable_toy():
    rng = np.random.default_rng(2)
    x = np.vstack([rng.normal(-2, 0.5, (40, 2)), rng.normal(2, 0.5, (40, 2))])
    y = np.repeat([0, 1], 40)
    m = pls.plsda_fit(x, y, 2)
    assert np.array_equal(pls.plsda_predict(m, x), y)
    m2 = pls.plsda_fit(x, y, 2)
    assert np.array_equal(m.pls.weights, m2.pls.weights)
    with pytest.raises(ValueError):
        pls.plsda_fit(x, np.zeros(80), 1)
    with pytest.raises(ValueError):
        pls.plsda_fit(x, np.full(80, 2), 1)


def _multilabel(seed=0, n=120, p=6, n_labels=9):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    y = (x @ rng.standard_normal((p, n_labels)) + 0.5 * rng.standard_normal((n, n_labels)) > 0).astype(int)
    return x, y


def test_binary_relevance():
    x, y = _multilabel()
    models = pls.plsbr_fit(x, y, 4)
    assert len(models) == 9
    pred = pls.plsbr_predict(models, x, n_labels=9)
    loop = np.column_stack([pls.plsda_predict(pls.plsda_fit(x, y[:, i], 4), x) for i in range(9)])
    assert np.array_equal(pred, loop)
    perm = np.random.default_rng(1).permutation(9)
    permuted = pls.plsbr_fit(x, y[:, perm], 4)
    for j, i in enumerate(perm):
        assert np.array_equal(permuted[j].pls.weights, models[i].pls.weights)
    assert np.array_equal(pls.plsbr_predict(permuted, x), pred[:, perm])
    one = pls.plsbr_predict(models[:1], x)
    assert np.array_equal(one[:, 0], pls.plsda_predict(models[0], x))
    with pytest.raises(ValueError, match="expected 8"):
        pls.plsbr_predict(models, x, n_labels=8)
    with pytest.raises(ValueError):
        pls.plsbr_predict([], x)


def test_binary_relevance_degenerate_column_index():
    x, y = _multilabel()
    y[:, 4] = 1
    with pytest.raises(ValueError, match="column 4"):
        pls.plsbr_fit(x, y, 3)
