"""Dispersal kernels.

Radial polynomial-bump dispersal densities

    J(x) = C * (1 - |x|^2 / L^2)^p   for |x| <= L,   0 otherwise,

with integer exponent p >= 2 (so J is C^1 with compact support of radius L)
and C chosen so the density integrates to one over R^N.  The family covers
dimensions N = 1 and N = 2.  One-dimensional marginals

    J1(x1) = integral of J(x1, y) over y

are tabulated on a uniform grid and interpolated linearly; for the bump
family the marginal is itself a bump of exponent p + 1/2, which the
tabulation reproduces to quadrature accuracy.

Exponential moments integral(J1(y) exp(-lam*y) dy) are evaluated by
composite Simpson quadrature on the support.  They are >= 1 for every lam
(Jensen on a symmetric unit-mass density) with equality only at lam = 0.
"""

import math

import numpy as np

__all__ = ["Kernel", "Kernel1D", "marginal_1d"]

# Simpson nodes across the support diameter; must keep >= 64 nodes inside
# the support so the stated quadrature tolerances hold.
DEFAULT_QUAD_POINTS = 2049


def _bump_slice_integral(p):
    """integral of (1 - s^2)^p over [-1, 1], exact for integer p."""
    total = 0.0
    for k in range(p + 1):
        total += math.comb(p, k) * (-1.0) ** k * 2.0 / (2 * k + 1)
    return total


def _simpson(values, h):
    """Composite Simpson on an odd-length uniform sample."""
    n = len(values)
    if n % 2 != 1:
        raise ValueError("Simpson rule needs an odd number of nodes")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(np.dot(w, values)) * h / 3.0


class Kernel:
    """Radial bump kernel in dimension N (1 or 2). Immutable after construction."""

    def __init__(self, dimension, support_radius, exponent, quad_points=DEFAULT_QUAD_POINTS):
        if dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {dimension}")
        if support_radius <= 0:
            raise ValueError("support_radius must be positive")
        if int(exponent) != exponent or exponent < 2:
            raise ValueError("exponent must be an integer >= 2")
        if quad_points < 129 or quad_points % 2 == 0:
            raise ValueError("quad_points must be an odd count >= 129")
        self.dimension = int(dimension)
        self.support_radius = float(support_radius)
        self.exponent = int(exponent)
        self.quad_points = int(quad_points)

        L, p = self.support_radius, self.exponent
        if self.dimension == 1:
            # integral over R: C * L * I_p = 1
            self.normalization = 1.0 / (L * _bump_slice_integral(p))
        else:
            # integral over R^2: C * 2*pi * integral_0^L (1 - r^2/L^2)^p r dr
            #                  = C * pi * L^2 / (p + 1)
            self.normalization = (p + 1) / (math.pi * L * L)

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Density at x.

        Accepts a scalar (N = 1), a length-N point, or an array whose last
        axis has length N. Returns 0 outside the support radius.
        """
        x = np.asarray(x, dtype=float)
        if self.dimension == 1:
            r2 = x * x
        else:
            if x.shape[-1] != self.dimension:
                raise ValueError(f"point has wrong dimension for N={self.dimension}")
            r2 = np.sum(x * x, axis=-1)
        L2 = self.support_radius**2
        arg = 1.0 - r2 / L2
        out = self.normalization * np.where(arg > 0.0, arg, 0.0) ** self.exponent
        if out.ndim == 0:
            return float(out)
        return out

    def total_mass(self):
        """integral of J by composite Simpson; equals 1 to quadrature accuracy."""
        L, n = self.support_radius, self.quad_points
        s = np.linspace(-L, L, n)
        h = s[1] - s[0]
        if self.dimension == 1:
            return _simpson(self.eval(s), h)
        xx, yy = np.meshgrid(s, s, indexing="ij")
        vals = self.eval(np.stack([xx, yy], axis=-1))
        rows = np.array([_simpson(vals[i], h) for i in range(n)])
        return _simpson(rows, h)

    def __repr__(self):
        return (f"Kernel(N={self.dimension}, L={self.support_radius}, "
                f"p={self.exponent})")


class Kernel1D:
    """One-dimensional dispersal density.

    Either an analytic bump (exponent given) or a tabulated density on a
    uniform grid over [-L, L] (the form produced by marginal_1d and by grid
    kernel marginals). Tabulated densities are interpolated linearly.
    """

    def __init__(self, support_radius, exponent=None, table=None,
                 quad_points=DEFAULT_QUAD_POINTS):
        if (exponent is None) == (table is None):
            raise ValueError("give exactly one of exponent or table")
        if support_radius <= 0:
            raise ValueError("support_radius must be positive")
        self.support_radius = float(support_radius)
        self.dimension = 1
        self.quad_points = int(quad_points)
        if exponent is not None:
            base = Kernel(1, support_radius, exponent, quad_points)
            self.exponent = base.exponent
            self.normalization = base.normalization
            self._analytic = base
            self.table_nodes = np.linspace(-self.support_radius, self.support_radius,
                                           self.quad_points)
            self.table_values = base.eval(self.table_nodes)
        else:
            table = np.asarray(table, dtype=float)
            if table.ndim != 1 or len(table) < 65 or len(table) % 2 == 0:
                raise ValueError("table must be 1-D with an odd length >= 65")
            if np.any(table < -1e-14):
                raise ValueError("tabulated density must be nonnegative")
            self.exponent = None
            self._analytic = None
            self.table_nodes = np.linspace(-self.support_radius, self.support_radius,
                                           len(table))
            self.table_values = np.clip(table, 0.0, None)
            self.normalization = float(np.max(self.table_values))

    def __call__(self, z):
        return self.eval(z)

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        if self._analytic is not None:
            return self._analytic.eval(z)
        out = np.interp(z, self.table_nodes, self.table_values, left=0.0, right=0.0)
        if out.ndim == 0:
            return float(out)
        return out

    def total_mass(self):
        h = self.table_nodes[1] - self.table_nodes[0]
        return _simpson(self.table_values, h)

    def exp_moment(self, lam):
        """integral of J1(y) * exp(-lam*y) dy by composite Simpson.

        >= 1 for all finite lam, equality iff lam = 0.
        """
        lam = float(lam)
        if not math.isfinite(lam):
            raise ValueError("lam must be finite")
        h = self.table_nodes[1] - self.table_nodes[0]
        vals = self.table_values if self._analytic is None else self._analytic.eval(self.table_nodes)
        return _simpson(vals * np.exp(-lam * self.table_nodes), h)

    def weights(self, h):
        """Normalized discrete convolution weights at offsets k*h, |k*h| <= L.

        The weights sum to exactly 1 so constant states are exact discrete
        steady states; this is the single notion of the 1-D convolution
        shared by the profile solver and planar oracles.
        """
        m = int(math.floor(self.support_radius / h + 1e-12))
        offsets = np.arange(-m, m + 1) * h
        w = self.eval(offsets) * h
        total = w.sum()
        if total <= 0:
            raise ValueError("kernel support unresolved at this spacing")
        return offsets, w / total

    def __repr__(self):
        kind = f"p={self.exponent}" if self.exponent is not None else "tabulated"
        return f"Kernel1D(L={self.support_radius}, {kind})"


def marginal_1d(kernel):
    """1-D marginal J1(x1) of an N >= 2 kernel, tabulated over [-L, L].

    Each table entry is a composite-Simpson cross-section integral; the
    result integrates to 1 to within 1e-8 and is even by symmetry of J.
    """
    if kernel.dimension < 2:
        raise ValueError("marginal_1d needs a kernel with N >= 2")
    L = kernel.support_radius
    n = kernel.quad_points
    nodes = np.linspace(-L, L, n)
    h = nodes[1] - nodes[0]
    ys = nodes  # cross sections share the support grid
    table = np.empty(n)
    for i, x1 in enumerate(nodes):
        pts = np.stack([np.full_like(ys, x1), ys], axis=-1)
        table[i] = _simpson(kernel.eval(pts), h)
    # symmetrize away quadrature roundoff so evenness is exact
    table = 0.5 * (table + table[::-1])
    return Kernel1D(L, table=table, quad_points=n)
