import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rangeview.losses import (DiagonalGaussian, first_stage_objective, hinge_d_loss,
                              hinge_g_loss, kl_to_standard_normal, l1_reconstruction)

finite = st.floats(-5, 5, allow_nan=False)


def test_l1_examples(rng):
    x = rng.normal(size=(3, 4))
    assert l1_reconstruction(x, x) == 0.0
    assert l1_reconstruction([0, 0], [1, -1]) == 1.0
    y = rng.normal(size=(3, 4))
    assert l1_reconstruction(x, y) == l1_reconstruction(y, x)
    with pytest.raises(ValueError):
        l1_reconstruction(np.zeros(2), np.zeros(3))


def test_kl_closed_form_cases():
    assert kl_to_standard_normal(DiagonalGaussian(np.zeros(5), np.zeros(5))) == 0.0
    assert kl_to_standard_normal(DiagonalGaussian([1.0], [0.0])) == 0.5


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 6, elements=finite), arrays(np.float64, 6, elements=finite))
def test_kl_non_negative(mu, log_var):
    assert kl_to_standard_normal(DiagonalGaussian(mu, log_var)) >= 0.0


@pytest.mark.parametrize("seed", range(4))
def test_kl_matches_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    q = DiagonalGaussian(rng.normal(size=3), rng.uniform(-1.5, 1.0, 3))
    z = q.sample(rng, 100_000)
    log_p = -0.5 * (np.log(2 * np.pi) + z ** 2).sum(axis=1)
    terms = q.log_prob(z) - log_p
    se = terms.std(ddof=1) / np.sqrt(len(terms))
    assert abs(terms.mean() - kl_to_standard_normal(q)) < 3 * se


def test_gaussian_validation():
    with pytest.raises(ValueError):
        DiagonalGaussian(np.zeros(2), np.zeros(3))
    with pytest.raises(ValueError):
        DiagonalGaussian([np.inf], [0.0])


@pytest.mark.parametrize("real, fake, expected", [
    ([2.0], [-2.0], 0.0),
    ([0.0], [0.0], 2.0),
    ([1.0], [-1.0], 0.0),
    ([0.5, 3.0], [0.0, -4.0], 0.25 + 0.5),
])
def test_hinge_d(real, fake, expected):
    assert hinge_d_loss(real, fake) == pytest.approx(expected)


def test_hinge_g():
    assert hinge_g_loss([0.0]) == 0.0
    assert hinge_g_loss([3.0, -1.0]) == -1.0
    s = np.array([0.2, -1.1, 4.0])
    assert hinge_g_loss(2 * s + 1) == pytest.approx(2 * hinge_g_loss(s) - 1)


def test_hinge_empty():
    with pytest.raises(ValueError):
        hinge_d_loss([], [1.0])
    with pytest.raises(ValueError):
        hinge_g_loss([])


def test_objective_reductions(rng):
    x, xh = rng.normal(size=10), rng.normal(size=10)
    q = DiagonalGaussian(rng.normal(size=4), rng.normal(size=4))
    scores = rng.normal(size=5)
    assert first_stage_objective(x, xh, q, scores, 0.0, 0.0) == l1_reconstruction(x, xh)
    std = DiagonalGaussian(np.zeros(4), np.zeros(4))
    assert first_stage_objective(x, x, std, np.zeros(5)) == 0.0
    values = [first_stage_objective(x, xh, q, scores, lam, 0.5) for lam in (0.0, 0.1, 1.0, 10.0)]
    assert all(a < b for a, b in zip(values, values[1:]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_losses_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    x, xh, mu, lv, real, fake = (rng.normal(size=12) for _ in range(6))
    p = rng.permutation(12)
    assert l1_reconstruction(x[p], xh[p]) == pytest.approx(l1_reconstruction(x, xh))
    assert kl_to_standard_normal(DiagonalGaussian(mu[p], lv[p])) == pytest.approx(
        kl_to_standard_normal(DiagonalGaussian(mu, lv)))
    assert hinge_d_loss(real[p], fake[::-1]) == pytest.approx(hinge_d_loss(real, fake))
