"""Bistable reaction terms and their derived constants.

The working family is the scaled cubic

    f(u) = kappa * u * (u - a) * (1 - u),    0 < a < 1/2,  kappa > 0,

which has stable zeros at 0 and 1, an unstable zero at a, positive mass
integral(f, 0..1) = kappa*(1 - 2a)/12 > 0, and closed forms for every
constant the certificates need.  Outside [0, 1] the function is extended
linearly with slopes f'(0) and f'(1), which keeps it globally Lipschitz
with matching one-sided derivatives at 0 and 1.

A multistable quintic kappa*u*(u-a1)*(u-a2)*(u-a3)*(1-u) is provided behind
the same interface; only the bistable family feeds the certificate and
experiment layers.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["Bistable", "Multistable", "ConditionFReport", "check_condition_F"]


class Bistable:
    """Cubic bistable nonlinearity with linear extensions outside [0, 1]."""

    def __init__(self, a, kappa=1.0):
        if not 0.0 < a < 0.5:
            raise ValueError(f"imbalance a must lie in (0, 1/2), got {a}")
        if kappa <= 0.0:
            raise ValueError("kappa must be positive")
        self.a = float(a)
        self.kappa = float(kappa)
        # f(u) = kappa * (-u^3 + (1+a) u^2 - a u)
        self.fp0 = -self.kappa * self.a          # f'(0) < 0
        self.fp1 = -self.kappa * (1.0 - self.a)  # f'(1) < 0

    # -- evaluation -------------------------------------------------------

    def _cubic(self, s):
        return self.kappa * s * (s - self.a) * (1.0 - s)

    def _cubic_prime(self, s):
        a = self.a
        return self.kappa * (-3.0 * s * s + 2.0 * (1.0 + a) * s - a)

    def __call__(self, s):
        return self.eval_extended(s)

    def eval_extended(self, s):
        """f on [0,1]; f'(0)*s for s <= 0; f'(1)*(s-1) for s >= 1."""
        s = np.asarray(s, dtype=float)
        out = np.where(
            s < 0.0, self.fp0 * s,
            np.where(s > 1.0, self.fp1 * (s - 1.0), self._cubic(np.clip(s, 0.0, 1.0))),
        )
        if out.ndim == 0:
            return float(out)
        return out

    def derivative(self, s):
        """One-sided-consistent derivative of the extended function."""
        s = np.asarray(s, dtype=float)
        out = np.where(
            s < 0.0, self.fp0,
            np.where(s > 1.0, self.fp1, self._cubic_prime(np.clip(s, 0.0, 1.0))),
        )
        if out.ndim == 0:
            return float(out)
        return out

    # -- derived constants -------------------------------------------------

    def theta0(self, scan_points=10_000):
        """Largest theta0 with f <= 0 on [0, theta0]; equals a for the cubic.

        A sign scan confirms the closed form rather than trusting it.
        """
        grid = np.linspace(0.0, 1.0, scan_points)
        vals = self._cubic(grid)
        positive = np.nonzero(vals > 0.0)[0]
        scanned = 1.0 if len(positive) == 0 else grid[positive[0] - 1]
        if abs(scanned - self.a) > 2.0 / scan_points:
            raise RuntimeError("sign scan disagrees with the cubic root structure")
        return self.a

    def mass(self):
        """integral of f over [0, 1], closed form kappa*(1-2a)/12 > 0."""
        return self.kappa * (1.0 - 2.0 * self.a) / 12.0

    def max_fprime(self):
        """max of f' on [0, 1]; at the interior critical point (1+a)/3."""
        s = (1.0 + self.a) / 3.0
        return self._cubic_prime(s)

    def min_fprime(self):
        """min of f' on [0, 1]; attained at an endpoint for the cubic."""
        return min(self.fp0, self.fp1)

    def lipschitz(self):
        """Global Lipschitz constant of the extended function."""
        return max(abs(self.fp0), abs(self.fp1), abs(self.max_fprime()))

    def sup_norm_fprime(self):
        """sup of |f'| over the extended range (equals the Lipschitz constant)."""
        return self.lipschitz()

    def lf_constant(self, grid_points=512, safety=1.05):
        """L_f with |f(u+v) - f(u) - f(v)| <= L_f * u * v on [0, 1]^2.

        Max of the ratio over a grid, the u,v -> 0 limit covered by the
        closed-form bound max|f''| (= kappa*(4-2a) at the corner for a<1/2),
        then inflated by a safety factor.
        """
        u = np.linspace(0.0, 1.0, grid_points + 1)[1:]
        uu, vv = np.meshgrid(u, u, indexing="ij")
        num = np.abs(self.eval_extended(uu + vv) - self._cubic(uu) - self._cubic(vv))
        ratio = float(np.max(num / (uu * vv)))
        fpp_bound = self.kappa * max(2.0 * (1.0 + self.a), 4.0 - 2.0 * self.a)
        return safety * max(ratio, fpp_bound)

    def __repr__(self):
        return f"Bistable(a={self.a}, kappa={self.kappa})"


class Multistable:
    """Quintic with interior zeros a1 < a2 < a3; same interface as Bistable.

    Kept behind the shared interface for completeness; the large-time
    recovery claims need a single interior zero, so certificates and
    experiments run on the bistable family only.
    """

    def __init__(self, zeros, kappa=1.0):
        zeros = tuple(float(z) for z in zeros)
        if len(zeros) != 3 or not 0.0 < zeros[0] < zeros[1] < zeros[2] < 1.0:
            raise ValueError("need three interior zeros 0 < a1 < a2 < a3 < 1")
        if kappa <= 0.0:
            raise ValueError("kappa must be positive")
        self.zeros = zeros
        self.kappa = float(kappa)
        a1, a2, a3 = zeros
        # f'(0) = -kappa * a1 a2 a3, f'(1) = -kappa*(1-a1)(1-a2)(1-a3)
        self.fp0 = -self.kappa * a1 * a2 * a3
        self.fp1 = -self.kappa * (1 - a1) * (1 - a2) * (1 - a3)

    def _poly(self, s):
        a1, a2, a3 = self.zeros
        return self.kappa * s * (s - a1) * (s - a2) * (s - a3) * (1.0 - s)

    def __call__(self, s):
        return self.eval_extended(s)

    def eval_extended(self, s):
        s = np.asarray(s, dtype=float)
        out = np.where(
            s < 0.0, self.fp0 * s,
            np.where(s > 1.0, self.fp1 * (s - 1.0), self._poly(np.clip(s, 0.0, 1.0))),
        )
        if out.ndim == 0:
            return float(out)
        return out

    def derivative(self, s, eps=1e-7):
        s = np.asarray(s, dtype=float)
        inner = (self._poly(np.clip(s + eps, 0, 1)) - self._poly(np.clip(s - eps, 0, 1))) / (2 * eps)
        out = np.where(s < 0.0, self.fp0, np.where(s > 1.0, self.fp1, inner))
        if out.ndim == 0:
            return float(out)
        return out

    def theta0(self, scan_points=10_000):
        grid = np.linspace(0.0, 1.0, scan_points)
        vals = self._poly(grid)
        positive = np.nonzero(vals > 0.0)[0]
        return 1.0 if len(positive) == 0 else float(grid[positive[0] - 1])

    def max_fprime(self, scan_points=100_000):
        grid = np.linspace(0.0, 1.0, scan_points)
        return float(np.max(self.derivative(grid)))

    def lipschitz(self, scan_points=100_000):
        grid = np.linspace(0.0, 1.0, scan_points)
        return float(np.max(np.abs(self.derivative(grid))))

    def __repr__(self):
        return f"Multistable(zeros={self.zeros}, kappa={self.kappa})"


@dataclass
class ConditionFReport:
    max_fprime: float
    degree_min: float
    margin: float
    passed: bool

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (f"condition (F): {status}  max f'={self.max_fprime:.6g}  "
                f"min degree={self.degree_min:.6g}  margin={self.margin:.6g}")


def check_condition_F(f, degree_min, grid_points=100_000):
    """Coupling clause of the standing assumptions: max f' < min kernel degree < 1.

    degree_min is the minimum of d(x) over the discretized exterior domain.
    A failing report blocks simulation setup.
    """
    grid = np.linspace(0.0, 1.0, grid_points)
    grid_max = float(np.max(f.derivative(grid)))
    analytic = f.max_fprime() if hasattr(f, "max_fprime") else grid_max
    max_fp = max(grid_max, analytic)
    margin = float(degree_min) - max_fp
    passed = (max_fp < degree_min) and (degree_min <= 1.0 + 1e-10)
    return ConditionFReport(max_fp, float(degree_min), margin, passed)
