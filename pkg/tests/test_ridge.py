import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaoscontrol import ridge_fit
from chaoscontrol.errors import IllConditionedError

from oracles import ridge_normal_equations


def _instance(rng, rows, cols, targets=3):
    x = rng.standard_normal((rows, cols))
    w_true = rng.standard_normal((cols, targets))
    y = x @ w_true + 0.01 * rng.standard_normal((rows, targets))
    return x, y


@pytest.mark.parametrize("beta", [1e-12, 1e-8, 1e-4, 1.0])
@pytest.mark.parametrize("cols", [1, 4, 10])
def test_matches_normal_equations_oracle(beta, cols):
    rng = np.random.default_rng(42 + cols)
    x, y = _instance(rng, 40, cols)
    got = ridge_fit(x, y, beta)
    want = ridge_normal_equations(x, y, beta)
    np.testing.assert_allclose(got, want, atol=1e-10, rtol=0)


def test_exact_recovery_without_penalty():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((30, 6))
    w_true = rng.standard_normal((6, 3))
    w = ridge_fit(x, x @ w_true, 0.0)
    np.testing.assert_allclose(w, w_true.T, atol=1e-8)


def test_shrinkage_monotone_in_beta():
    rng = np.random.default_rng(7)
    x, y = _instance(rng, 50, 8)
    norms = [
        np.linalg.norm(ridge_fit(x, y, beta)) for beta in (0.0, 1e-12, 1e-8, 1e-4, 1.0)
    ]
    for smaller_beta, larger_beta in zip(norms, norms[1:]):
        assert larger_beta <= smaller_beta + 1e-12


def test_input_validation():
    x = np.zeros((5, 2))
    y = np.zeros((5, 2))
    with pytest.raises(ValueError):
        ridge_fit(x[0], y, 1e-4)
    with pytest.raises(ValueError):
        ridge_fit(x, y[:4], 1e-4)
    with pytest.raises(ValueError):
        ridge_fit(x, y, -1e-4)


def test_rank_deficient_design_is_handled():
    # duplicated column: the normal equations are singular at beta=0, but
    # the solve must still return a finite minimum-norm readout
    rng = np.random.default_rng(3)
    base = rng.standard_normal((20, 3))
    x = np.hstack([base, base[:, :1]])
    y = rng.standard_normal((20, 2))
    w = ridge_fit(x, y, 0.0)
    assert np.all(np.isfinite(w))
    assert w.shape == (2, 4)


def test_readout_is_contiguous():
    rng = np.random.default_rng(9)
    x, y = _instance(rng, 25, 5)
    assert ridge_fit(x, y, 1e-6).flags["C_CONTIGUOUS"]


@settings(max_examples=25, deadline=None)
@given(
    rows=st.integers(12, 30),
    cols=st.integers(1, 6),
    beta=st.sampled_from([1e-10, 1e-6, 1e-2]),
    seed=st.integers(0, 2**16),
)
def test_solves_regularized_normal_equations(rows, cols, beta, seed):
    # the minimiser satisfies (X^T X + beta I) W^T = X^T Y identically
    rng = np.random.default_rng(seed)
    x, y = _instance(rng, rows, cols)
    w = ridge_fit(x, y, beta)
    lhs = (x.T @ x + beta * np.eye(cols)) @ w.T
    rhs = x.T @ y
    np.testing.assert_allclose(lhs, rhs, atol=1e-8 * max(1.0, np.abs(rhs).max()))


def test_wide_pathological_matrix_raises_or_stays_finite():
    # design with a catastrophically scaled column must not emit NaNs
    x = np.array([[1.0, 1e200], [1.0, 1e200], [1.0, -1e200]])
    y = np.ones((3, 1))
    try:
        w = ridge_fit(x, y, 1e-4)
    except IllConditionedError:
        return
    assert np.all(np.isfinite(w))
