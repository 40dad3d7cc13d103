import numpy as np
import pytest
from scipy.integrate import quad

from nlfront.nonlinearity import Bistable, Multistable, check_condition_F


@pytest.fixture
def f25():
    return Bistable(a=0.25, kappa=1.0)


class TestEvalExtended:
    def test_roots(self, f25):
        assert f25.eval_extended(0.0) == 0.0
        assert f25.eval_extended(1.0) == 0.0

    def test_linear_extension_left(self, f25):
        # f'(0) = -0.25, so f(-1) = 0.25
        assert f25.eval_extended(-1.0) == pytest.approx(0.25, abs=1e-15)

    def test_cubic_value(self, f25):
        # 0.5 * 0.25 * 0.5
        assert f25.eval_extended(0.5) == pytest.approx(0.0625, abs=1e-15)

    def test_one_sided_derivatives_match(self, f25):
        eps = 1e-9
        for s0, slope in ((0.0, f25.fp0), (1.0, f25.fp1)):
            left = (f25.eval_extended(s0) - f25.eval_extended(s0 - eps)) / eps
            right = (f25.eval_extended(s0 + eps) - f25.eval_extended(s0)) / eps
            assert left == pytest.approx(slope, abs=1e-6)
            assert right == pytest.approx(slope, abs=1e-6)

    def test_globally_lipschitz(self, f25):
        rng = np.random.default_rng(11)
        s = rng.uniform(-3.0, 4.0, size=(100_000, 2))
        lip = f25.lipschitz()
        gaps = np.abs(f25.eval_extended(s[:, 0]) - f25.eval_extended(s[:, 1]))
        assert np.all(gaps <= lip * np.abs(s[:, 0] - s[:, 1]) + 1e-12)


class TestTheta0:
    @pytest.mark.parametrize("a", [0.25, 0.4])
    def test_equals_a(self, a):
        assert Bistable(a=a).theta0() == a

    def test_sign_change_at_theta0(self, f25):
        t0 = f25.theta0()
        assert f25.eval_extended(t0 - 1e-6) <= 0.0
        assert f25.eval_extended(t0 + 1e-6) > 0.0


class TestMass:
    def test_positive_and_matches_quadrature(self):
        for a in np.linspace(0.01, 0.49, 50):
            f = Bistable(a=a, kappa=1.3)
            q, _ = quad(f.eval_extended, 0.0, 1.0, epsabs=1e-13)
            assert f.mass() > 0.0
            assert f.mass() == pytest.approx(q, abs=1e-10)

    def test_rejects_balanced(self):
        with pytest.raises(ValueError):
            Bistable(a=0.5)


class TestLf:
    def test_inequality_on_random_pairs(self, f25):
        rng = np.random.default_rng(5)
        lf = f25.lf_constant()
        u, v = rng.uniform(0.0, 1.0, size=(2, 100_000))
        lhs = np.abs(f25.eval_extended(u + v) - f25.eval_extended(u) - f25.eval_extended(v))
        assert np.all(lhs <= lf * u * v + 1e-12)

    def test_scales_with_kappa(self):
        a = 0.25
        l1 = Bistable(a=a, kappa=1.0).lf_constant()
        l2 = Bistable(a=a, kappa=2.0).lf_constant()
        assert l2 == pytest.approx(2.0 * l1, abs=1e-12)


class TestMaxFprime:
    def test_matches_grid_scan(self, f25):
        grid = np.linspace(0.0, 1.0, 100_000)
        scan = np.max(f25.derivative(grid))
        assert f25.max_fprime() == pytest.approx(scan, abs=1e-8)

    def test_closed_form(self, f25):
        # kappa*(1 - a + a^2)/3
        assert f25.max_fprime() == pytest.approx((1 - 0.25 + 0.0625) / 3.0, abs=1e-14)


class TestConditionF:
    def test_pass(self):
        r = check_condition_F(_FakeF(0.1), degree_min=0.8)
        assert r.passed and r.margin == pytest.approx(0.7)

    def test_fail(self):
        r = check_condition_F(_FakeF(0.9), degree_min=0.8)
        assert not r.passed

    def test_cubic_default_has_margin(self, f25):
        r = check_condition_F(f25, degree_min=0.5)
        assert r.passed and r.margin >= 0.2


class _FakeF:
    def __init__(self, mx):
        self.mx = mx

    def derivative(self, s):
        return np.full_like(np.asarray(s, dtype=float), self.mx)

    def max_fprime(self):
        return self.mx


def test_multistable_same_interface():
    g = Multistable(zeros=(0.2, 0.5, 0.8), kappa=1.0)
    assert g.eval_extended(0.0) == 0.0
    assert g.eval_extended(1.0) == 0.0
    assert g.fp0 < 0.0 and g.fp1 < 0.0
    assert g.eval_extended(-2.0) == pytest.approx(g.fp0 * -2.0, abs=1e-14)
    assert 0.0 < g.theta0() < 1.0
    r = check_condition_F(g, degree_min=0.9)
    assert isinstance(r.passed, bool)
