import numpy as np
import pytest
from scipy.integrate import quad

from nlfront.kernels import Kernel, Kernel1D, marginal_1d


def test_outside_support_is_zero():
    k = Kernel(2, support_radius=1.0, exponent=2)
    assert k.eval(np.array([2.0, 0.0])) == 0.0
    k1 = Kernel1D(1.0, exponent=2)
    assert k1.eval(2.0) == 0.0  # |x| = L + 1


def test_origin_positive():
    for dim in (1, 2):
        k = Kernel(dim, 1.0, 2)
        x = 0.0 if dim == 1 else np.zeros(2)
        assert k.eval(x) > 0.0


def test_1d_normalization_closed_form():
    # integral of (1-r^2)^2 over [-1,1] is 16/15, so C = 15/16
    k1 = Kernel1D(1.0, exponent=2)
    assert k1.eval(0.0) == pytest.approx(15.0 / 16.0, abs=1e-15)


@pytest.mark.parametrize("dim,L,p", [(1, 1.0, 2), (1, 2.0, 3), (2, 1.0, 2), (2, 0.5, 4)])
def test_unit_mass(dim, L, p):
    k = Kernel(dim, L, p)
    assert abs(k.total_mass() - 1.0) <= 1e-10


def test_nonnegative_and_symmetric_at_random_points():
    rng = np.random.default_rng(7)
    k = Kernel(2, 1.0, 2)
    pts = rng.uniform(-1.5, 1.5, size=(10_000, 2))
    vals = k.eval(pts)
    assert np.all(vals >= 0.0)
    assert np.max(np.abs(vals - k.eval(-pts))) <= 1e-14
    k1 = Kernel1D(1.0, exponent=3)
    z = rng.uniform(-1.5, 1.5, size=10_000)
    assert np.all(k1.eval(z) >= 0.0)
    assert np.max(np.abs(k1.eval(z) - k1.eval(-z))) <= 1e-14


class TestMarginal:
    def test_rejects_1d(self):
        with pytest.raises(ValueError):
            marginal_1d(Kernel(1, 1.0, 2))

    def test_unit_mass_and_even(self):
        j1 = marginal_1d(Kernel(2, 1.0, 2))
        assert abs(j1.total_mass() - 1.0) <= 1e-8
        z = np.linspace(0.0, 1.0, 101)
        assert np.max(np.abs(j1.eval(z) - j1.eval(-z))) == 0.0

    def test_against_monte_carlo(self):
        # 2-D Monte-Carlo estimate of the marginal density at x1 = 0:
        # average of J over a thin strip |x1| <= w, y-integral by MC.
        k = Kernel(2, 1.0, 2)
        j1 = marginal_1d(k)
        rng = np.random.default_rng(42)
        n = 10_000_000
        w = 0.02
        pts = np.stack([rng.uniform(-w, w, size=n), rng.uniform(-1.0, 1.0, size=n)], axis=-1)
        mc = 2.0 * np.mean(k.eval(pts))  # 2 = length of the y sampling range
        assert j1.eval(0.0) == pytest.approx(mc, abs=1e-3)

    def test_marginal_matches_closed_form(self):
        # the marginal of a p-bump is C*I_p*L*(1 - x1^2/L^2)^(p+1/2)
        k = Kernel(2, 1.0, 2)
        j1 = marginal_1d(k)
        z = np.linspace(-0.99, 0.99, 57)
        closed = j1.table_values[len(j1.table_values) // 2] * (1.0 - z * z) ** 2.5
        assert np.max(np.abs(j1.eval(z) - closed)) <= 1e-6


class TestExpMoment:
    def test_lambda_zero_gives_one(self):
        j1 = Kernel1D(1.0, exponent=2)
        assert j1.exp_moment(0.0) == pytest.approx(1.0, abs=1e-12)

    def test_even_in_lambda(self):
        j1 = marginal_1d(Kernel(2, 1.0, 2))
        for lam in (0.3, 1.0, 4.0):
            assert j1.exp_moment(lam) == pytest.approx(j1.exp_moment(-lam), rel=1e-13)

    def test_against_adaptive_quadrature(self):
        j1 = Kernel1D(1.0, exponent=2)
        val = j1.exp_moment(1.0)
        oracle, _ = quad(lambda y: j1.eval(y) * np.exp(-y), -1.0, 1.0, epsabs=1e-13)
        assert 1.0 < val < np.cosh(1.0)
        assert val == pytest.approx(oracle, abs=1e-9)

    def test_jensen_lower_bound(self):
        j1 = Kernel1D(1.0, exponent=2)
        for lam in (-3.0, -0.5, 0.5, 2.0, 10.0):
            assert j1.exp_moment(lam) >= 1.0

    def test_convexity_in_lambda(self):
        rng = np.random.default_rng(3)
        j1 = marginal_1d(Kernel(2, 1.0, 2))
        for _ in range(50):
            l1, l2 = np.sort(rng.uniform(-4.0, 4.0, size=2))
            mid = j1.exp_moment(0.5 * (l1 + l2))
            assert mid <= 0.5 * (j1.exp_moment(l1) + j1.exp_moment(l2)) + 1e-12

    def test_rejects_nonfinite(self):
        j1 = Kernel1D(1.0, exponent=2)
        with pytest.raises(ValueError):
            j1.exp_moment(np.inf)


def test_weights_sum_to_one_and_cover_support():
    j1 = Kernel1D(1.0, exponent=2)
    offsets, w = j1.weights(0.05)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert offsets[0] == -1.0 and offsets[-1] == 1.0
    assert np.all(w >= 0.0)
