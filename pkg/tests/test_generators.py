import math

import numpy as np
import pytest

from sosdim.errors import InvalidModelError
from sosdim.generators import (
    MA5_THETA,
    arma_acovf,
    gen_arma,
    gen_latent,
    gen_mixing,
    gen_noise,
    gen_setting,
    gen_synthetic_signals,
)

N = 100_000


def lag1_corr(x):
    x = x - x.mean()
    return (x[:-1] @ x[1:]) / (x @ x)


class TestArma:
    def test_white(self, rng):
        x = gen_arma(N, (), (), rng)
        assert abs(x.mean()) < 0.01 and abs(x.var() - 1) < 0.015
        assert abs(lag1_corr(x)) < 0.01

    def test_ar1(self, rng):
        assert abs(lag1_corr(gen_arma(N, (0.5,), (), rng)) - 0.5) < 0.01

    def test_ma5(self, rng):
        th = np.r_[1.0, MA5_THETA]
        rho1 = (th[:-1] @ th[1:]) / (th @ th)
        assert abs(lag1_corr(gen_arma(N, (), MA5_THETA, rng)) - rho1) < 0.01

    def test_acovf_closed_forms(self):
        np.testing.assert_allclose(arma_acovf((0.5,), (), 2), np.array([1, 0.5, 0.25]) / 0.75)
        th = np.r_[1.0, MA5_THETA]
        np.testing.assert_allclose(arma_acovf((), MA5_THETA, 6)[:6],
                                   [th[: 6 - h] @ th[h:] for h in range(6)])
        assert arma_acovf((), MA5_THETA, 6)[6] == 0

    def test_unit_variance(self, rng):
        x = gen_arma(N, (0.5, 0.2), (0.5,), rng)
        assert abs(x.var() - 1) < 0.05

    def test_nonstationary(self, rng):
        for phi in ((1.0,), (0.5, 0.6), (-1.2,)):
            with pytest.raises(InvalidModelError):
                gen_arma(10, phi, (), rng)

    def test_deterministic(self):
        a = gen_arma(50, (0.3,), (0.2,), np.random.default_rng(1))
        b = gen_arma(50, (0.3,), (0.2,), np.random.default_rng(1))
        np.testing.assert_array_equal(a, b)


class TestNoise:
    def test_setting1(self, rng):
        z = gen_noise(1, N, rng)
        assert np.all(np.abs(z.var(axis=0) - 1) < 0.015)

    def test_setting2_spherical_t(self, rng):
        z = gen_noise(2, N, rng)
        assert np.all(np.abs(z.var(axis=0) - 1) < 0.1)
        c = np.corrcoef(z.T)
        assert np.max(np.abs(c - np.eye(3))) < 0.02
        c2 = np.corrcoef((z**2).T)
        assert np.min(c2[np.triu_indices(3, 1)]) > 0.05
        # independent columns have no such dependence
        c1 = np.corrcoef((gen_noise(1, N, rng) ** 2).T)
        assert np.max(np.abs(c1[np.triu_indices(3, 1)])) < 0.02

    def test_setting3(self, rng):
        z = gen_noise(3, N, rng)
        assert np.all(np.abs(z[:, 2]) < math.sqrt(3))
        assert abs(z[:, 2].var() - 1) < 0.015
        assert abs(z[:, 1].var() - 1) < 0.1

    def test_unscaled_t(self, rng):
        z = gen_noise(3, N, rng, t_unit_variance=False)
        assert abs(z[:, 1].var() - 5 / 3) < 0.2

    def test_serially_uncorrelated(self, rng):
        for s in (1, 2, 3):
            z = gen_noise(s, N, rng)
            assert all(abs(lag1_corr(z[:, i])) < 0.015 for i in range(3))

    def test_unknown(self, rng):
        with pytest.raises(InvalidModelError):
            gen_noise(4, 10, rng)


class TestMixing:
    def test_shapes_and_determinism(self):
        assert gen_mixing(1, np.random.default_rng(0)).shape == (1, 1)
        a = gen_mixing(20, np.random.default_rng(5))
        np.testing.assert_array_equal(a, gen_mixing(20, np.random.default_rng(5)))
        assert np.linalg.cond(a) < 1e8

    def test_setting(self, rng):
        x, z, omega = gen_setting(2, 300, rng)
        assert x.shape == z.shape == (300, 5)
        np.testing.assert_allclose(x, z @ omega.T)
        with pytest.raises(InvalidModelError):
            gen_latent(0, 10, rng)

    def test_synthetic_signals(self, rng):
        s = gen_synthetic_signals(5000, rng)
        assert s.shape == (5000, 3)
        assert np.all(np.abs([lag1_corr(c) for c in s.T]) > 0.3)
