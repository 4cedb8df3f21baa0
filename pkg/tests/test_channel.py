import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from relaydetect.channel import (
    ChannelModel,
    cond_cdf_u,
    cond_pdf_u,
    noise_pdf,
    posterior,
    sample_batch,
)

GRID = np.linspace(-10, 10, 1001)


def bayes_posterior(x1, u):
    """Oracle: prior-weighted densities, normalized."""
    num = 0.5 * cond_pdf_u(u, x1)
    return num / (num + 0.5 * cond_pdf_u(u, -x1))


def test_sample_batch_deterministic():
    a, b = sample_batch(3, 1234), sample_batch(3, 1234)
    for f in ("x1", "x2", "u"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
    assert a.seed == 1234


def test_sample_batch_rejects_zero():
    with pytest.raises(ValueError):
        sample_batch(0, 1)


def test_sample_batch_moments():
    b = sample_batch(10**6, 7)
    assert set(np.unique(b.x1)) == {-1, 1}
    assert abs(b.x1.mean()) < 0.005
    noise = b.u - b.x1 - b.x2
    assert abs(noise.var() - 0.5) < 0.01


def test_noise_pdf_integrates_to_one():
    val, _ = quad(noise_pdf, -np.inf, np.inf, epsabs=1e-13)
    assert val == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("x1", [1, -1])
def test_cond_pdf_integrates_to_one(x1):
    val, _ = quad(lambda x: cond_pdf_u(x, x1), -np.inf, np.inf, epsabs=1e-13)
    assert val == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("x", [-3.0, 0.0, 1.7])
def test_cond_pdf_mirror(x):
    assert cond_pdf_u(x, 1) == pytest.approx(cond_pdf_u(-x, -1), rel=1e-15)


def test_cond_pdf_value_at_two():
    expected = 0.5 * (1 + np.exp(-4)) / np.sqrt(np.pi)
    assert cond_pdf_u(2.0, 1) == pytest.approx(expected, rel=1e-14)
    assert cond_pdf_u(2.0, 1) == pytest.approx(0.28726, abs=1e-5)


def test_cond_cdf_limits_and_median():
    for s in (1, -1):
        assert cond_cdf_u(50.0, s) == pytest.approx(1.0, abs=1e-12)
        assert cond_cdf_u(-50.0, s) == pytest.approx(0.0, abs=1e-12)
    assert cond_cdf_u(1.0, 1) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("t", [-2.0, 0.3, 4.0])
@pytest.mark.parametrize("x1", [1, -1])
def test_cond_cdf_matches_quadrature(t, x1):
    val, _ = quad(lambda x: cond_pdf_u(x, x1), -50, t, epsabs=1e-13, points=[0.0, 2.0 * x1])
    assert cond_cdf_u(t, x1) == pytest.approx(val, abs=1e-8)


def test_cond_cdf_monotone_bounded():
    for s in (1, -1):
        c = cond_cdf_u(np.linspace(-60, 60, 5001), s)
        assert np.all(np.diff(c) >= 0)
        assert c.min() >= 0 and c.max() <= 1


def test_posterior_point_values():
    assert posterior(1, 0.0) == pytest.approx(0.5, abs=1e-15)
    expected = 1 / (2 + np.exp(4) + np.exp(-12)) + 1 / (2 * np.exp(-4) + 1 + np.exp(-16))
    assert posterior(1, 2.0) == pytest.approx(expected, abs=1e-15)
    assert posterior(1, 2.0) == pytest.approx(0.98233, abs=1e-5)
    assert posterior(1, 2.0) == pytest.approx(bayes_posterior(1, 2.0), abs=1e-12)


@pytest.mark.parametrize("u", [-5.0, 0.1, 3.0])
def test_posterior_total_probability(u):
    assert posterior(1, u) + posterior(-1, u) == pytest.approx(1.0, abs=1e-12)


def test_posterior_grid_properties():
    p_plus = posterior(1, GRID)
    np.testing.assert_allclose(p_plus, posterior(-1, -GRID), rtol=0, atol=1e-12)
    for s in (1, -1):
        np.testing.assert_allclose(posterior(s, GRID), bayes_posterior(s, GRID), rtol=0, atol=1e-12)
    assert np.all(np.diff(p_plus) >= 0)


def test_posterior_stable_in_far_tails():
    u = np.array([-400.0, -40.0, 40.0, 400.0])
    with np.errstate(over="raise", invalid="raise"):
        p = posterior(1, u)
    assert np.all(np.isfinite(p))
    np.testing.assert_allclose(p, [0, 0, 1, 1], atol=1e-12)


@given(st.floats(-60, 60, allow_nan=False))
def test_posterior_in_unit_interval(u):
    p = posterior(1, u)
    assert 0.0 <= p <= 1.0
    assert p == pytest.approx(1 - posterior(-1, u), abs=1e-12)


def test_bad_symbol():
    with pytest.raises(ValueError):
        cond_pdf_u(0.0, 0)


def test_channel_model_is_fixed():
    m = ChannelModel()
    assert m.cdf(1.0, 1) == 0.5
    with pytest.raises(ValueError):
        ChannelModel(noise_var=1.0)
