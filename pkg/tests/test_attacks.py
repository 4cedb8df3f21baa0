import numpy as np
import pytest

from relaydetect.analysis import W0
from relaydetect.attacks import (
    AdditiveOffset,
    BlockSwitch,
    CustomKernel,
    Identity,
    NoClosedFormError,
    PartialGarble,
    ResampleMarginal,
    SignFlip,
    WMatrix,
    apply_attack,
    behavior_from_dict,
    behavior_label,
    behavior_to_dict,
    marginal_of_attack,
)
from relaydetect.channel import cond_cdf_u, sample_batch
from relaydetect.empirics import cond_cdf_matrix, empirical_cdf_given_x1, maliciousness_R
from relaydetect.quantizer import choose_grid


@pytest.fixture(scope="module")
def grid():
    return choose_grid(2.0)


@pytest.fixture(scope="module")
def batch():
    return sample_batch(100_000, 21)


def test_identity_bit_exact(batch):
    v = apply_attack(batch.u, Identity(), 1)
    np.testing.assert_array_equal(v, batch.u)
    assert v is not batch.u


def test_zero_offset_is_identity(batch):
    np.testing.assert_array_equal(apply_attack(batch.u, AdditiveOffset(0.0), 3), batch.u)
    np.testing.assert_array_equal(apply_attack(batch.u, AdditiveOffset(0.5), 3), batch.u + 0.5)


def test_sign_flip(batch):
    np.testing.assert_array_equal(apply_attack(batch.u, SignFlip(), 0), -batch.u)


def test_resample_is_seeded_and_ignores_u(batch):
    a = apply_attack(batch.u, ResampleMarginal(), 9)
    b = apply_attack(np.zeros_like(batch.u), ResampleMarginal(), 9)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, apply_attack(batch.u, ResampleMarginal(), 10))


def test_apply_rejects_empty():
    with pytest.raises(ValueError):
        apply_attack([], Identity(), 0)


def test_marginal_examples():
    assert marginal_of_attack(Identity(), 1, 1.0) == pytest.approx(0.5, abs=1e-15)
    for t in (-1.0, 0.0, 2.0):
        assert marginal_of_attack(SignFlip(), 1, t) == pytest.approx(cond_cdf_u(t, -1), abs=1e-12)
        assert marginal_of_attack(ResampleMarginal(), 1, t) == marginal_of_attack(ResampleMarginal(), -1, t)
    assert marginal_of_attack(AdditiveOffset(0.5), -1, 0.3) == cond_cdf_u(-0.2, -1)
    with pytest.raises(NoClosedFormError):
        marginal_of_attack(PartialGarble(0.5, SignFlip()), 1, 0.0)


@pytest.mark.parametrize(
    "behavior", [Identity(), AdditiveOffset(0.5), SignFlip(), ResampleMarginal()], ids=behavior_label
)
def test_empirical_matches_marginal(grid, behavior):
    n, ok = 100_000, 0
    env = 3 * np.sqrt(np.log(n) / n)
    for seed in range(100):
        b = sample_batch(n, 500 + seed)
        v = apply_attack(b.u, behavior, seed)
        worst = 0.0
        for s in (1, -1):
            emp = empirical_cdf_given_x1(v, b.x1, s, grid.thresholds)
            worst = max(worst, np.max(np.abs(emp - marginal_of_attack(behavior, s, grid.thresholds))))
        ok += worst <= env
    assert ok >= 95


def test_partial_garble_extremes(batch, grid):
    np.testing.assert_array_equal(apply_attack(batch.u, PartialGarble(0.0, SignFlip()), 4), batch.u)
    v = apply_attack(batch.u, PartialGarble(1.0, ResampleMarginal()), 4)
    w = apply_attack(batch.u, ResampleMarginal(), 5)
    # same law, independent draws: empirical CDFs agree within a two-sample envelope
    t = grid.thresholds
    fv = np.searchsorted(np.sort(v), t, side="right") / len(v)
    fw = np.searchsorted(np.sort(w), t, side="right") / len(w)
    assert np.max(np.abs(fv - fw)) < 3 * np.sqrt(np.log(len(v)) / len(v))
    np.testing.assert_array_equal(apply_attack(batch.u, PartialGarble(1.0, SignFlip()), 4), -batch.u)


def test_partial_garble_fraction(batch):
    v = apply_attack(batch.u, PartialGarble(0.1, SignFlip()), 8)
    assert abs(np.mean(v != batch.u) - 0.1) < 0.005


def test_partial_garble_validation():
    with pytest.raises(ValueError):
        PartialGarble(1.5, SignFlip())
    with pytest.raises(ValueError):
        PartialGarble(0.5, PartialGarble(0.5, SignFlip()))


def test_block_switch():
    u = np.arange(10, dtype=float)
    b = BlockSwitch(((4, Identity()), (6, SignFlip())))
    np.testing.assert_array_equal(apply_attack(u, b, 0), np.r_[u[:4], -u[4:]])
    with pytest.raises(ValueError, match="covers 10"):
        apply_attack(np.zeros(9), b, 0)
    with pytest.raises(ValueError):
        BlockSwitch(())
    with pytest.raises(ValueError):
        BlockSwitch(((0, Identity()),))


def test_wmatrix_validation():
    with pytest.raises(ValueError):
        WMatrix(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        WMatrix(np.array([[0.5, 0.2, 0.9]] * 4))
    with pytest.raises(ValueError):
        WMatrix(np.full((4, 3), 1.5))
    w = WMatrix(np.zeros((4, 3)))
    with pytest.raises(ValueError):
        w.entries[0, 0] = 1.0


def test_custom_kernel_W0_is_honest(grid, batch):
    k = CustomKernel(W0(grid), grid)
    v = apply_attack(batch.u, k, 2)
    assert np.all(np.isin(v, k.support()))
    assert maliciousness_R(cond_cdf_matrix(v, batch.u, grid), grid) == 0.0


def test_custom_kernel_follows_rows(grid):
    w = np.tile(np.linspace(0, 1, grid.n_prime - 1), (grid.n_prime, 1))
    k = CustomKernel(WMatrix(w), grid)
    b = sample_batch(200_000, 8)
    v = apply_attack(b.u, k, 1)
    assert np.all(np.isin(v, k.support()))
    m = cond_cdf_matrix(v, b.u, grid)
    busy = m.bin_totals > 5000
    np.testing.assert_allclose(m.values[busy], w[busy], atol=0.03)
    with pytest.raises(ValueError):
        CustomKernel(WMatrix(np.zeros((4, 3))), grid)


def test_dict_round_trip():
    cases = [
        {"kind": "identity"},
        {"kind": "additive_offset", "c": 0.5},
        {"kind": "sign_flip"},
        {"kind": "resample_marginal"},
        {"kind": "partial_garble", "p": 0.1, "inner": {"kind": "sign_flip"}},
        {"kind": "block_switch", "schedule": [{"length": 3, "behavior": {"kind": "identity"}},
                                              {"length": 2, "behavior": {"kind": "sign_flip"}}]},
    ]
    for d in cases:
        assert behavior_to_dict(behavior_from_dict(d)) == d
    assert behavior_from_dict("sign_flip") == SignFlip()
    with pytest.raises(ValueError):
        behavior_from_dict({"kind": "nope"})
    with pytest.raises(ValueError):
        behavior_from_dict({"kind": "sign_flip", "c": 1})


def test_labels():
    assert behavior_label(PartialGarble(0.001, SignFlip())) == "partial_garble(p=0.001,sign_flip)"
    assert behavior_label(AdditiveOffset(0.5)) == "additive_offset(c=0.5)"
