"""Traveling-wave profiles of the 1-D nonlocal wave equation.

Solves the profile problem

    (J1 * phi)(z) - phi(z) - c phi'(z) + f(phi(z)) = 0,
    phi(-inf) = 0,  phi(+inf) = 1,  phi(0) = theta0,

on a truncated grid [-Z_max, Z_max] with phi clamped to 0 left of the grid
and 1 right of it.  The convolution uses normalized discrete kernel weights
(so constants are exact steady states), phi' is 4th-order central
differencing, and the phase condition closes the system with the speed c as
the extra unknown.  A damped Newton iteration drives the sup-norm residual
below the requested tolerance.

Decay rates: the left tail phi ~ e^(lam z) has lam the positive root of

    c*lam = integral(J1(y) e^(-lam y) dy) - 1 + f'(0),

while linearizing 1 - phi ~ e^(-mu z) at +inf gives mu as the positive
root of

    integral(J1(y) e^(-mu y) dy) - 1 + f'(1) + c*mu = 0

(the sign of the c*mu term differs between the two tails; the tail-fit
cross-check below pins it down).
"""

import math
import warnings

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.linalg import lu_factor, lu_solve

__all__ = ["WaveProfile", "decay_rates", "solve_profile", "fit_asymptotics",
           "NoRootError", "ProfileConvergenceError"]

FD4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0  # offsets -2..2, divide by h


class NoRootError(RuntimeError):
    pass


class ProfileConvergenceError(RuntimeError):
    pass


def _positive_root(g, cap=200.0, width=1e-13):
    """Positive root of g by doubling bracket search plus bisection."""
    g0 = g(0.0)
    if g0 >= 0.0:
        raise NoRootError("g(0) must be negative (needs f'(0), f'(1) < 0)")
    lo, hi = 0.0, 1e-3
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > cap:
            raise NoRootError(f"no sign change below lambda = {cap}; inconsistent inputs")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    if abs(g(root)) > 1e-10:
        raise NoRootError("bisection stalled away from a root")
    return root


def decay_rates(c, fp0, fp1, j1):
    """Exponential decay rates (lam, mu) of the two profile tails."""
    if c <= 0.0:
        raise ValueError("need c > 0")
    if fp0 >= 0.0 or fp1 >= 0.0:
        raise ValueError("need f'(0) < 0 and f'(1) < 0")
    lam = _positive_root(lambda s: j1.exp_moment(s) - 1.0 + fp0 - c * s)
    mu = _positive_root(lambda s: j1.exp_moment(s) - 1.0 + fp1 + c * s)
    return lam, mu


class WaveProfile:
    """Converged discrete profile with speed, decay rates and fitted constants."""

    FIT_FIELDS = ("alpha0", "beta0", "alpha1", "beta1", "gamma0", "delta0",
                  "gamma1", "delta1", "C_phi", "k_phi", "K_phi", "lambda0",
                  "lambda_fit", "mu_fit")

    def __init__(self, z, phi, dphi, c, theta0, lam, mu, support_radius=1.0):
        self.z = np.asarray(z, dtype=float)
        self.phi = np.asarray(phi, dtype=float)
        self.dphi = np.asarray(dphi, dtype=float)
        self.c = float(c)
        self.theta0 = float(theta0)
        self.lam = float(lam)
        self.mu = float(mu)
        self.support_radius = float(support_radius)
        self.h = float(self.z[1] - self.z[0])
        self.z_max = float(self.z[-1])
        self.convex_left = None
        for name in self.FIT_FIELDS:
            setattr(self, name, None)
        self._spline = CubicHermiteSpline(self.z, self.phi, self.dphi)
        self._dspline = self._spline.derivative()

    # -- evaluation ---------------------------------------------------------

    def value(self, xi):
        """phi at arbitrary arguments, clamped to 0/1 beyond the grid."""
        xi = np.asarray(xi, dtype=float)
        inner = self._spline(np.clip(xi, self.z[0], self.z[-1]))
        out = np.where(xi < self.z[0], 0.0, np.where(xi > self.z[-1], 1.0, inner))
        if out.ndim == 0:
            return float(out)
        return out

    def slope(self, xi):
        """phi' at arbitrary arguments, 0 beyond the grid."""
        xi = np.asarray(xi, dtype=float)
        inner = self._dspline(np.clip(xi, self.z[0], self.z[-1]))
        out = np.where((xi < self.z[0]) | (xi > self.z[-1]), 0.0, inner)
        if out.ndim == 0:
            return float(out)
        return out

    def max_slope(self):
        return float(np.max(self.dphi))

    # -- diagnostics ---------------------------------------------------------

    def residual(self, j1, f):
        """Sup-norm residual of the discrete profile equation."""
        return float(np.max(np.abs(_profile_residual(
            self.phi, self.c, *_operator_pieces(j1, f, self.z, self.h)))))

    def is_monotone(self):
        return bool(np.all(np.diff(self.phi) > 0.0))

    # -- serialization -------------------------------------------------------

    def to_csv(self, path_or_buf):
        """CSV of (z, phi, dphi) plus a header carrying every scalar.

        Values are written with repr so the round-trip is bit-exact.
        """
        scalars = {"c": self.c, "theta0": self.theta0, "lam": self.lam,
                   "mu": self.mu, "h": self.h, "z_max": self.z_max,
                   "support_radius": self.support_radius}
        for name in self.FIT_FIELDS:
            scalars[name] = getattr(self, name)
        scalars["convex_left"] = self.convex_left
        head = " ".join(f"{k}={v!r}" for k, v in scalars.items())
        own = isinstance(path_or_buf, str)
        fh = open(path_or_buf, "w") if own else path_or_buf
        try:
            fh.write(f"# nlfront-profile-v1 {head}\n")
            fh.write("z,phi,dphi\n")
            for zi, pi, di in zip(self.z, self.phi, self.dphi):
                fh.write(f"{float(zi)!r},{float(pi)!r},{float(di)!r}\n")
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path_or_buf):
        own = isinstance(path_or_buf, str)
        fh = open(path_or_buf, "r") if own else path_or_buf
        try:
            header = fh.readline().strip()
            if not header.startswith("# nlfront-profile-v1 "):
                raise ValueError("not a profile CSV")
            scalars = {}
            for item in header[len("# nlfront-profile-v1 "):].split(" "):
                key, raw = item.split("=", 1)
                scalars[key] = None if raw == "None" else (
                    raw == "True" if raw in ("True", "False") else float(raw))
            fh.readline()  # column row
            data = np.loadtxt(fh, delimiter=",").reshape(-1, 3)
        finally:
            if own:
                fh.close()
        prof = cls(data[:, 0], data[:, 1], data[:, 2], scalars["c"],
                   scalars["theta0"], scalars["lam"], scalars["mu"],
                   scalars.get("support_radius", 1.0))
        for name in cls.FIT_FIELDS:
            setattr(prof, name, scalars.get(name))
        prof.convex_left = scalars.get("convex_left")
        return prof

    def __repr__(self):
        return (f"WaveProfile(n={len(self.z)}, h={self.h:g}, c={self.c:.8g}, "
                f"lam={self.lam:.4g}, mu={self.mu:.4g})")


def _operator_pieces(j1, f, z, h):
    offsets, w = j1.weights(h)
    m = len(offsets) // 2
    return w, m, h, f


def _profile_residual(phi, c, w, m, h, f):
    padded = np.concatenate([np.zeros(m), phi, np.ones(m)])
    conv = np.convolve(padded, w, mode="valid")
    return conv - phi - c * _fd4_derivative(phi, h) + f.eval_extended(phi)


def _fd4_derivative(phi, h):
    padded = np.concatenate([np.zeros(2), phi, np.ones(2)])
    return (FD4[0] * padded[:-4] + FD4[1] * padded[1:-3] + FD4[3] * padded[3:-1]
            + FD4[4] * padded[4:]) / h


def solve_profile(j1, f, z_max, h, init=None, newton_tol=1e-8, max_iter=100):
    """Solve for (phi, c) by damped Newton with the phase condition phi(0) = theta0.

    Requires z_max >= 10 L and h <= L/16 so truncation and quadrature stay
    inside the residual budget.  Rejects c <= 0 (the propagation theory
    needs rightward invasion).
    """
    L = j1.support_radius
    if z_max < 10.0 * L:
        raise ValueError(f"z_max must be >= 10*L = {10 * L}")
    if h > L / 16.0 + 1e-12:
        raise ValueError(f"h must be <= L/16 = {L / 16}")
    n_half = int(round(z_max / h))
    if abs(n_half * h - z_max) > 1e-9:
        raise ValueError("z_max must be an integer multiple of h")
    z = (np.arange(2 * n_half + 1) - n_half) * h
    n = len(z)
    i0 = n_half  # z[i0] == 0 exactly
    theta0 = f.theta0()

    w, m, _, _ = _operator_pieces(j1, f, z, h)

    if init is not None:
        phi = init.value(z)
        c = init.c
    else:
        shift = math.atanh(1.0 - 2.0 * theta0)
        phi = 0.5 * (1.0 + np.tanh(z - shift))
        c = max(0.05, 6.0 * f.mass())

    def assemble(phi, c):
        res = _profile_residual(phi, c, w, m, h, f)
        full = np.empty(n + 1)
        full[:n] = res
        full[n] = phi[i0] - theta0
        return full

    res = assemble(phi, c)
    norm = np.max(np.abs(res))
    rows_cache = {}
    for _ in range(max_iter):
        if norm <= newton_tol:
            break
        jac = np.zeros((n + 1, n + 1))
        # convolution band: d(conv_i)/d(phi_j) = w[k+m] for j = i - k
        for k in range(-m, m + 1):
            if k not in rows_cache:
                lo_cache = max(0, k)
                hi_cache = min(n, n + k)
                rows_cache[k] = np.arange(lo_cache, hi_cache)
            rows = rows_cache[k]
            jac[rows, rows - k] += w[k + m]
        idx = np.arange(n)
        jac[idx, idx] += -1.0 + f.derivative(phi)
        for o, coef in zip((-2, -1, 1, 2), (FD4[0], FD4[1], FD4[3], FD4[4])):
            rows = idx[(idx + o >= 0) & (idx + o < n)]
            jac[rows, rows + o] += -c * coef / h
        jac[:n, n] = -_fd4_derivative(phi, h)
        jac[n, i0] = 1.0
        try:
            delta = lu_solve(lu_factor(jac), -res)
        except np.linalg.LinAlgError as exc:
            raise ProfileConvergenceError(f"singular Newton system: {exc}") from exc
        step = 1.0
        for _ in range(30):
            cand_phi = phi + step * delta[:n]
            cand_c = c + step * delta[n]
            cand_res = assemble(cand_phi, cand_c)
            cand_norm = np.max(np.abs(cand_res))
            if cand_norm < (1.0 - 0.25 * step) * norm or cand_norm <= newton_tol:
                phi, c, res, norm = cand_phi, cand_c, cand_res, cand_norm
                break
            step *= 0.5
        else:
            raise ProfileConvergenceError("line search failed to reduce the residual")
    else:
        raise ProfileConvergenceError(
            f"no convergence in {max_iter} Newton steps (residual {norm:.3e})")

    if c <= 0.0:
        raise ProfileConvergenceError(f"converged to c = {c:.3e} <= 0")

    phi = _clean_tails(phi, z, h)
    res_after = np.max(np.abs(_profile_residual(phi, c, w, m, h, f)))
    if res_after > newton_tol:
        raise ProfileConvergenceError(
            f"tail cleanup pushed the residual to {res_after:.3e}")
    if not np.all(np.diff(phi) > 0.0):
        raise ProfileConvergenceError("converged profile is not strictly monotone")
    if np.any(phi[1:-1] <= 0.0) or np.any(phi[1:-1] >= 1.0):
        raise ProfileConvergenceError("interior profile values escaped (0, 1)")

    lam, mu = decay_rates(c, f.fp0, f.fp1, j1)
    prof = WaveProfile(z, phi, _fd4_derivative(phi, h), c, theta0, lam, mu,
                       support_radius=L)
    prof._sup_residual = float(res_after)
    return prof


def _geometric_rebuild(values, h, lo, hi, floor):
    """Replace values below `floor` with the geometric decay measured on
    the window values in [lo, hi]. Returns values unchanged when the tail
    never dips below the floor."""
    n = len(values)
    window = np.nonzero((values >= lo) & (values <= hi))[0]
    if len(window) < 10:
        return values
    anchor = window[-1]
    below = values[:anchor] < floor
    if not np.any(below):
        return values
    zw = window * h
    slope = np.polyfit(zw, np.log(values[window]), 1)[0]  # per unit z, > 0
    if slope <= 0.0:
        return values
    start = int(np.nonzero(below)[0][-1]) + 1  # first kept index
    # keep the leftmost rebuilt value representable
    max_slope = (math.log(values[start]) + 290.0 * math.log(10.0)) / (h * max(start, 1))
    slope = min(slope, max_slope)
    out = values.copy()
    steps = start - np.arange(start)
    out[:start] = values[start] * np.exp(-slope * h * steps)
    return out


def _clean_tails(phi, z, h, floor=1e-10, lo=1e-9, hi=1e-6):
    """Rebuild the far tails below the direct-solve noise floor.

    Values beneath `floor` (and their mirror 1 - phi on the right) are at
    the level of linear-algebra roundoff; the local decay measured where
    the tail is clean replaces them so positivity and strict monotonicity
    survive in floating point.  Near 1 the spacing of float64 exceeds the
    true tail increments, so a final right-to-left pass walks offending
    nodes down by single ulps.  All replacements live at magnitudes <=
    `floor`, far inside the absolute residual budget.
    """
    out = _geometric_rebuild(phi.copy(), h, lo, hi, floor)
    # mirror the right tail through v = 1 - phi, splitting where phi >= 0.5
    # so the subtraction is exact (Sterbenz) and the left tail is untouched
    split = int(np.searchsorted(out, 0.5))
    v = 1.0 - out[split:][::-1]
    v = _geometric_rebuild(v, h, lo, hi, floor)
    out[split:] = 1.0 - v[::-1]
    top = np.nextafter(1.0, 0.0)
    np.minimum(out, top, out=out)
    np.maximum(out, 5e-324, out=out)
    for i in range(len(out) - 2, -1, -1):
        if out[i] >= out[i + 1]:
            out[i] = np.nextafter(out[i + 1], 0.0)
    if np.max(np.abs(out - phi)) > 10.0 * floor:
        raise ProfileConvergenceError("tail cleanup moved values above its budget")
    return out


def fit_asymptotics(profile, inner=5.0, min_nodes=20):
    """Fill the tail-bound constants of the profile in place and return it.

    Amplitudes come from log-linear least squares on |z| in
    [inner, z_max - 2L] (2L taken as 2 units of the stored grid trim), then
    get inflated/deflated by 5% so the exponential bounds are strict at
    every fit node.  The refined left-tail expansion (C_phi, k_phi, K_phi)
    is fitted where the quadratic remainder dominates the tail noise.
    """
    z, phi, dphi = profile.z, profile.phi, profile.dphi
    lam, mu = profile.lam, profile.mu
    outer = profile.z_max - 2.0 * profile.support_radius
    # restrict to where the tails are representable in float64: phi on the
    # left, 1 - phi on the right (spacing near 1 swallows anything smaller)
    left = np.nonzero((z <= -inner) & (z >= -outer) & (phi >= 1e-290))[0]
    right = np.nonzero((z >= inner) & (z <= outer) & (1.0 - phi >= 1e-13))[0]
    if len(left) < min_nodes or len(right) < min_nodes:
        raise ValueError("tail fit region has fewer than 20 nodes")

    logphi = np.log(phi[left])
    profile.lambda_fit = float(np.polyfit(z[left], logphi, 1)[0])
    ratio = phi[left] * np.exp(-lam * z[left])
    profile.alpha0 = 0.95 * float(np.min(ratio))
    profile.beta0 = 1.05 * float(np.max(ratio))

    v = 1.0 - phi[right]
    profile.mu_fit = float(-np.polyfit(z[right], np.log(v), 1)[0])
    ratio = v * np.exp(mu * z[right])
    profile.alpha1 = 0.95 * float(np.min(ratio))
    profile.beta1 = 1.05 * float(np.max(ratio))

    dratio = dphi[left] * np.exp(-lam * z[left])
    profile.gamma0 = 0.95 * float(np.min(dratio))
    profile.delta0 = 1.05 * float(np.max(dratio))
    dratio = dphi[right] * np.exp(mu * z[right])
    profile.gamma1 = 0.95 * float(np.min(dratio))
    profile.delta1 = 1.05 * float(np.max(dratio))

    # refined left-tail expansion |phi - C_phi e^(lam z)| <= K_phi e^((k_phi+lam) z).
    # The remainder of the linearized tail is quadratic, so k_phi = lam and
    # (C_phi, D) come from a two-term exponential fit; K_phi is then sized
    # to cover the actual remainder at every window node.
    near = np.nonzero((z >= -4.0) & (z <= -2.0) & (phi >= 1e-9))[0]
    if len(near) < min_nodes:
        raise ValueError("refined-expansion window has fewer than 20 nodes")
    scaled = phi[near] * np.exp(-lam * z[near])  # = C + D e^(lam z) + ...
    basis = np.stack([np.ones(len(near)), np.exp(lam * z[near])], axis=-1)
    coef, *_ = np.linalg.lstsq(basis, scaled, rcond=None)
    profile.C_phi = float(coef[0])
    profile.k_phi = lam
    rem = phi[near] - profile.C_phi * np.exp(lam * z[near])
    profile.K_phi = 1.05 * float(np.max(
        np.abs(rem) * np.exp(-(profile.k_phi + lam) * z[near])))
    profile.kphi_window = (float(z[near][0]), float(z[near][-1]))

    profile.lambda0 = 0.5 * min(lam, profile.k_phi)

    d2 = np.diff(phi, 2) / profile.h**2
    left_half = z[1:-1] <= 0.0
    profile.convex_left = bool(np.all(d2[left_half] >= -1e-8))
    if not profile.convex_left:
        warnings.warn("phi'' < 0 detected on the left half-line; certificate "
                      "checks relying on left convexity are conditional",
                      RuntimeWarning, stacklevel=2)
    return profile
