"""Time stepping for the nonlocal Cauchy problem on exterior grids.

The semidiscrete right-hand side at exterior cells is

    rhs(u)(x) = conv_Omega(J, u)(x) - d(x) u(x) + f(u(x)),

with the convolution taken against u*chi_Omega on the padded box (far-field
closure per the grid: constant 0/1 or the planar wave of the current run)
and f the linearly extended nonlinearity.  Obstacle cells carry no state.

Explicit schemes suffice: the operator norm is bounded by 2 + Lip(f), and
the step ceiling dt <= 0.25/(2 + Lip(f)) reuses the contraction constant of
the Picard existence argument.  Heun is the workhorse (its Euler stages are
order preserving at this ceiling, so comparison-principle structure
survives discretely); classic RK4 is available for accuracy cross-checks.

picard_solve iterates the integral form of the equation with trapezoidal
time quadrature on an inner grid.  It is deliberately independent of the
steppers and serves as their oracle.
"""

from dataclasses import dataclass, field as dataclass_field

import numpy as np

__all__ = ["Field", "Trajectory", "PlanarClosure", "rhs", "step", "picard_solve",
           "solve_interval", "ordering_report", "shifted_quotient_sup",
           "dt_ceiling", "PicardResult", "OrderingReport"]


class PlanarClosure:
    """Pad ring values phi(x1 + c t + shift); constant in the cross direction."""

    def __init__(self, profile, shift=0.0):
        self.profile = profile
        self.shift = float(shift)

    def pad_array(self, grid, t):
        m = grid.pad
        n1 = grid.shape[0] + 2 * m
        x1 = grid.box_lo[0] + (np.arange(n1) - m + 0.5) * grid.h
        line = self.profile.value(x1 + self.profile.c * t + self.shift)
        if grid.dimension == 1:
            return line.copy()
        n2 = grid.shape[1] + 2 * m
        return np.repeat(line[:, None], n2, axis=1)


def _closure_pad(grid, closure, t):
    if closure is None or closure == "zero":
        return 0.0
    if closure == "one":
        return 1.0
    if isinstance(closure, PlanarClosure):
        return closure.pad_array(grid, t)
    raise ValueError(f"unknown closure {closure!r}")


class Field:
    """Scalar state on the exterior cells of a grid at one time stamp."""

    def __init__(self, grid, values, t=0.0):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError("field shape does not match the grid")
        self.grid = grid
        self.values = np.where(grid.chi_omega, values, 0.0)
        self.t = float(t)

    @classmethod
    def from_function(cls, grid, fn, t=0.0):
        centers = grid.cell_centers()
        return cls(grid, fn(centers), t)

    @classmethod
    def constant(cls, grid, value, t=0.0):
        return cls(grid, np.full(grid.shape, float(value)), t)

    def copy(self):
        return Field(self.grid, self.values.copy(), self.t)

    def exterior(self):
        return self.values[self.grid.chi_omega]

    def min(self):
        return float(np.min(self.exterior()))

    def max(self):
        return float(np.max(self.exterior()))

    def finite(self):
        return bool(np.all(np.isfinite(self.exterior())))

    def __repr__(self):
        return f"Field(t={self.t:g}, min={self.min():.4g}, max={self.max():.4g})"


@dataclass
class Trajectory:
    fields: list
    dt: float
    scheme: str

    def __post_init__(self):
        times = [f.t for f in self.fields]
        if any(t2 <= t1 + 1e-14 for t1, t2 in zip(times, times[1:])):
            raise ValueError("snapshot time stamps must increase strictly")

    @property
    def times(self):
        return np.array([f.t for f in self.fields])

    def final(self):
        return self.fields[-1]


def rhs_values(grid, values, t, f, closure=None):
    conv = grid.convolve_exterior(values, _closure_pad(grid, closure, t))
    out = conv - grid.degree_comp * values + f.eval_extended(values)
    return np.where(grid.chi_omega, out, 0.0)


def rhs(u, f, closure=None):
    """Semidiscrete right-hand side as a Field at the same time stamp."""
    return Field(u.grid, rhs_values(u.grid, u.values, u.t, f, closure), u.t)


def dt_ceiling(f):
    return 0.25 / (2.0 + f.lipschitz())


def step(u, dt, f, scheme="heun", closure=None):
    """One explicit step; deterministic for fixed inputs."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if dt > dt_ceiling(f) * (1.0 + 1e-12):
        raise ValueError(f"dt {dt} exceeds the ceiling {dt_ceiling(f):.6g}")
    g, v, t = u.grid, u.values, u.t
    if scheme == "heun":
        k1 = rhs_values(g, v, t, f, closure)
        k2 = rhs_values(g, v + dt * k1, t + dt, f, closure)
        new = v + 0.5 * dt * (k1 + k2)
    elif scheme == "rk4":
        k1 = rhs_values(g, v, t, f, closure)
        k2 = rhs_values(g, v + 0.5 * dt * k1, t + 0.5 * dt, f, closure)
        k3 = rhs_values(g, v + 0.5 * dt * k2, t + 0.5 * dt, f, closure)
        k4 = rhs_values(g, v + dt * k3, t + dt, f, closure)
        new = v + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return Field(g, new, t + dt)


def solve_interval(u0, t0, t1, dt, f, scheme="heun", closure=None,
                   snapshot_stride=1, callback=None):
    """Step from t0 to t1 landing exactly on t1 (last step shortened).

    Snapshots are taken every `snapshot_stride` steps plus the final state.
    `callback(field)` runs on every accepted step when given.
    """
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    u = u0.copy()
    u.t = float(t0)
    snaps = [u.copy()]
    if t1 == t0:
        return Trajectory(snaps, dt, scheme)
    n_full = int(np.floor((t1 - t0) / dt * (1.0 + 1e-12)))
    k = 0
    while k < n_full:
        u = step(u, dt, f, scheme, closure)
        k += 1
        u.t = t0 + k * dt  # keep stamps drift-free
        if callback is not None:
            callback(u)
        if k % snapshot_stride == 0:
            snaps.append(u.copy())
    rem = t1 - (t0 + n_full * dt)
    if rem > 1e-12 * max(1.0, dt):
        u = step(u, rem, f, scheme, closure)
        u.t = t1
        if callback is not None:
            callback(u)
    u.t = t1
    if abs(snaps[-1].t - t1) > 1e-14:
        snaps.append(u.copy())
    else:
        snaps[-1] = u.copy()
    return Trajectory(snaps, dt, scheme)


@dataclass
class PicardResult:
    field: "Field"
    sup_distances: list
    ratios: list = dataclass_field(default_factory=list)

    def __post_init__(self):
        self.ratios = [b / a for a, b in zip(self.sup_distances, self.sup_distances[1:])
                       if a > 1e-300]


def picard_solve(u0, t_window, iterations, f, closure=None, inner_nodes=None):
    """Fixed-point iteration of the integral form, trapezoidal in time.

    Requires the contraction condition (2 + max f') * t_window < 1.  The
    returned result carries the successive sup-distances so callers can
    check the geometric contraction factor.
    """
    factor = (2.0 + f.max_fprime()) * t_window
    if factor >= 1.0:
        raise ValueError(f"contraction condition violated: (2 + max f') * t = {factor:.3f} >= 1")
    grid, t0 = u0.grid, u0.t
    J = inner_nodes if inner_nodes is not None else max(64, int(np.ceil(t_window / 0.00125)))
    delta = t_window / J
    times = t0 + delta * np.arange(J + 1)
    base = u0.values
    U = np.repeat(base[None], J + 1, axis=0)
    distances = []
    prev_dist = None
    for sweep in range(iterations):
        G = np.stack([rhs_values(grid, U[j], times[j], f, closure)
                      for j in range(J + 1)])
        # cumulative trapezoid in time
        increments = 0.5 * delta * (G[:-1] + G[1:])
        cumulative = np.concatenate([np.zeros_like(base)[None],
                                     np.cumsum(increments, axis=0)])
        new = base[None] + cumulative
        dist = float(np.max(np.abs(new - U)))
        U = new
        distances.append(dist)
        if prev_dist is not None and prev_dist > 1e-300 and dist > prev_dist and dist > 1e-12:
            raise RuntimeError("Picard iterates stopped contracting")
        prev_dist = dist
        if dist < 1e-14:
            break
    return PicardResult(Field(grid, U[-1], t0 + t_window), distances)


@dataclass
class OrderingReport:
    min_gap: float
    violations: int
    tolerance: float = 1e-10

    @property
    def ordered(self):
        return self.violations == 0


def ordering_report(u, v, tolerance=1e-10):
    """min over exterior cells of (u - v) and the count below -tolerance."""
    if u.grid is not v.grid:
        raise ValueError("fields live on different grids")
    if abs(u.t - v.t) > 1e-12:
        raise ValueError("fields carry different time stamps")
    gap = u.exterior() - v.exterior()
    return OrderingReport(float(np.min(gap)),
                          int(np.count_nonzero(gap < -tolerance)), tolerance)


def shifted_quotient_sup(u, axis=0):
    """sup over cell pairs (both exterior) of |u(x + h e) - u(x)| / h."""
    g = u.grid
    vals, mask = u.values, g.chi_omega
    d = np.abs(np.diff(vals, axis=axis)) / g.h
    if axis == 0:
        pair = mask[1:] & mask[:-1] if g.dimension == 1 else mask[1:, :] & mask[:-1, :]
    else:
        pair = mask[:, 1:] & mask[:, :-1]
    if not np.any(pair):
        raise ValueError("no exterior cell pairs along this axis")
    return float(np.max(d[pair]))
