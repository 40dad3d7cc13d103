"""Sub/super-solution certificates and their numerical verification.

Every explicit certificate used by the theory lives here together with the
machinery that checks the claimed differential inequalities on a grid:

* the shift ``xi(t) = (1/lambda0) ln(1/(1 - M e^(lambda0 c t)/c))`` and the
  entire-solution pair W-/W+ built from two reflected profile copies;
* the large-time pair u-/u+ built from a tilted profile argument
  ``x1 + c(t - 1 + t_eps) -/+ theta(x', t) -/+ Z(t)`` and the damping
  function z(t);
* the planar squeezing pair used for the far-field argument.

The verification evaluates

    L w = w_t - [conv_Omega(J, w) - d w] - f(w)

with w_t by central differences and the same discrete convolution the
simulator uses, then reports the worst signed residual over the sampled
(x, t) set: sup L <= tol for sub-solutions, inf L >= -tol for supers.

The proofs only assert the inequalities for "sufficiently large" M and K_z;
here the explicit floors from the case analyses are computed, doubled, and
the largest sampled time T1 at which every sign still holds is detected
empirically and reported.
"""

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.signal import fftconvolve

__all__ = [
    "ShiftParams", "LargeTimeParams", "ZParams", "ZFunction",
    "PlanarSqueezeParams", "FloorConstants", "xi", "xi_prime", "w_minus",
    "w_plus", "WMinus", "WPlus", "UMinus", "UPlus", "PlanarLower",
    "PlanarUpper", "p_minus", "p_plus", "z_construct", "z_axiom_report",
    "certificate_residual", "certificate_floor_constants", "detect_t1",
    "CertificateReport",
]


# ---------------------------------------------------------------------------
# shift machinery


@dataclass
class ShiftParams:
    """Amplitude M, rate lambda0 and speed c of the shift xi(t).

    T is the last time the shift is defined; ct + xi(t) <= 0 on (-inf, T]
    with equality at T.  M = 0 is allowed only as a negative control.
    """

    M: float
    lambda0: float
    c: float
    floors: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if self.M < 0.0 or self.lambda0 <= 0.0 or self.c <= 0.0:
            raise ValueError("need M >= 0, lambda0 > 0, c > 0")

    @property
    def T(self):
        if self.M == 0.0:
            return 0.0
        return math.log(self.c / (self.c + self.M)) / (self.lambda0 * self.c)

    @classmethod
    def from_floors(cls, profile, f, j1, safety=2.0, t_min=None):
        """M = safety * max(case-analysis floors); lambda0 defaults to half
        the admissible ceiling min(lam, k_phi) and is raised (staying below
        the ceiling) when T must reach back to t_min."""
        fc = certificate_floor_constants(profile, f, j1)
        lf = f.lf_constant()
        floors = {
            "case_a": lf * profile.beta0 / fc.k3,
            "case_b_far": 2.0 * lf * profile.beta0 / profile.gamma1,
            "case_b_mid": 2.0 * lf * profile.beta0
                          * math.exp(max(0.0, profile.mu - profile.lam) * fc.L2)
                          / profile.gamma1,
            "wplus_far": lf * profile.alpha0 * math.exp(profile.mu * fc.L0)
                         / profile.gamma1,
            "wplus_mid": (lf * profile.beta0 + fc.C0)
                         / (2.0 * min(profile.gamma0, profile.alpha0)),
            "wplus_left": fc.C0 / (2.0 * profile.gamma0),
        }
        M = safety * max(floors.values())
        ceiling = min(profile.lam, profile.k_phi)
        lambda0 = 0.5 * ceiling
        if t_min is not None:
            # T(M, lambda0) >= t_min  <=>  lambda0 >= ln((c+M)/c) / (|t_min| c)
            needed = math.log((profile.c + M) / profile.c) / (abs(t_min) * profile.c)
            lambda0 = max(lambda0, 1.02 * needed)
            if lambda0 >= 0.97 * ceiling:
                raise ValueError(
                    f"cannot reach T >= {t_min}: needs lambda0 {lambda0:.3f} "
                    f"against the ceiling {ceiling:.3f}")
        return cls(M, lambda0, profile.c, floors)


def xi(t, p):
    """Closed-form shift; increasing, xi(-inf) = 0; defined for t <= T."""
    t = np.asarray(t, dtype=float)
    if np.any(t > p.T + 1e-12):
        raise ValueError(f"xi is defined for t <= T = {p.T:.6g}")
    arg = 1.0 - np.exp(p.lambda0 * p.c * t) * p.M / p.c
    out = np.log(1.0 / arg) / p.lambda0
    if out.ndim == 0:
        return float(out)
    return out


def xi_prime(t, p):
    """Analytic xi'(t) = M e^(lambda0 (ct + xi))."""
    t = np.asarray(t, dtype=float)
    out = p.M * np.exp(p.lambda0 * (p.c * t + np.asarray(xi(t, p))))
    if out.ndim == 0:
        return float(out)
    return out


def w_minus(x1, t, profile, p):
    """phi(x1+ct-xi) - phi(-x1+ct-xi) for x1 >= 0, zero on x1 < 0."""
    x1 = np.asarray(x1, dtype=float)
    s = profile.c * t - xi(t, p)
    val = profile.value(x1 + s) - profile.value(-x1 + s)
    out = np.where(x1 >= 0.0, val, 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def w_plus(x1, t, profile, p):
    """phi(x1+ct+xi) + phi(-x1+ct+xi) for x1 >= 0, 2 phi(ct+xi) on x1 < 0."""
    x1 = np.asarray(x1, dtype=float)
    s = profile.c * t + xi(t, p)
    val = profile.value(x1 + s) + profile.value(-x1 + s)
    out = np.where(x1 >= 0.0, val, 2.0 * profile.value(s))
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# the damping function z(t)


@dataclass
class ZParams:
    eta_z: float
    eps1: float
    t1: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta_z < math.log(2.0):
            raise ValueError("eta_z must lie in (0, ln 2)")
        if self.eps1 <= 0.0:
            raise ValueError("eps1 must be positive")
        if self.t1 < 0.0:
            raise ValueError("t1 must be >= 0")

    @property
    def l_P(self):
        return 1.0 / self.eta_z

    def validate_against(self, f):
        """The large-time analysis needs eta_z < sigma/2, where f' <= -sigma
        near 0 and 1."""
        sigma = min(abs(f.fp0), abs(f.fp1)) / 2.0
        if self.eta_z >= sigma / 2.0:
            raise ValueError(f"eta_z must be < sigma/2 = {sigma / 2:.6g}")


def p_minus(x, zp):
    """P-(x) = -(1/3) eta^2 (x + 1/eta)^2 + 1 on [-l_P, 0]."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -zp.l_P - 1e-12) or np.any(x > 1e-12):
        raise ValueError("p_minus is defined on [-l_P, 0]")
    eta = zp.eta_z
    out = 1.0 - (eta**2 / 3.0) * (x + 1.0 / eta) ** 2
    if out.ndim == 0:
        return float(out)
    return out


def p_plus(x, zp, nu):
    """P+(x) = (nu eta/3)(x - 1/eta)^2 + 2/3 - nu/(3 eta) on [0, l_P]."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12) or np.any(x > zp.l_P + 1e-12):
        raise ValueError("p_plus is defined on [0, l_P]")
    if not 0.0 < nu <= zp.eta_z + 1e-12:
        raise ValueError("need 0 < nu <= eta_z")
    eta = zp.eta_z
    out = (nu * eta / 3.0) * (x - 1.0 / eta) ** 2 + 2.0 / 3.0 - nu / (3.0 * eta)
    if out.ndim == 0:
        return float(out)
    return out


def _z1(t, eta):
    """Base damping profile and its derivative; C^1 at the branch point."""
    t = np.asarray(t, dtype=float)
    tstar = 1.5 / eta - 1.0
    C2 = eta**-1.5 * 1.5**1.5 * math.exp(eta - 1.5)
    early = t <= tstar
    val = np.where(early, np.exp(-eta * np.minimum(t, tstar)),
                   C2 * np.maximum(1.0 + t, 1e-300) ** -1.5)
    der = np.where(early, -eta * np.exp(-eta * np.minimum(t, tstar)),
                   -1.5 * C2 * np.maximum(1.0 + t, 1e-300) ** -2.5)
    return val, der


class ZFunction:
    """Piecewise C^1 damping function of the large-time certificates.

    For t1 >= 3/eta the five pieces are: eps1*z1, a scaled P+ ramp-off, a
    monotone cubic-Hermite bridge rising to eps1 (clamped zero end slopes),
    eps1*P-, and the restarted decay (2/3) eps1 z1(t - t1).  The P+ piece is
    normalized by P+(0) so value and slope match eps1*z1 at the junction;
    the remaining junctions match as written.
    """

    def __init__(self, params):
        self.params = params
        eta, eps1, t1 = params.eta_z, params.eps1, params.t1
        self.eta = eta
        self.simple = t1 < 3.0 / eta
        if not self.simple:
            self.b0 = t1 - 3.0 / eta
            self.b1 = t1 - 2.0 / eta
            self.b2 = t1 - 1.0 / eta
            self.b3 = t1
            v0, d0 = _z1(self.b0, eta)
            self.nu = float(-d0 / v0)
            self.z_b0 = eps1 * float(v0)
            pp_0 = p_plus(0.0, params, self.nu)
            pp_end = p_plus(params.l_P, params, self.nu)
            self.scaleB = self.z_b0 / pp_0
            self.bridge_lo = self.scaleB * pp_end
            self.bridge_hi = eps1
        self._cache = None

    # -- evaluation -----------------------------------------------------

    def _bridge(self, t):
        # monotone cubic Hermite with clamped zero end slopes
        s = (t - self.b1) / (self.b2 - self.b1)
        val = self.bridge_lo + (self.bridge_hi - self.bridge_lo) * s * s * (3.0 - 2.0 * s)
        der = (self.bridge_hi - self.bridge_lo) * 6.0 * s * (1.0 - s) / (self.b2 - self.b1)
        return val, der

    def _eval(self, t):
        p = self.params
        eta, eps1 = self.eta, p.eps1
        t = np.asarray(t, dtype=float)
        if np.any(t < -1e-12):
            raise ValueError("z is defined on [0, +inf)")
        if self.simple:
            v, d = _z1(t, eta)
            return eps1 * v, eps1 * d
        val = np.empty_like(t)
        der = np.empty_like(t)
        mA = t <= self.b0
        v, d = _z1(t[mA], eta)
        val[mA], der[mA] = eps1 * v, eps1 * d
        mB = (t > self.b0) & (t <= self.b1)
        xB = t[mB] - self.b0
        vB = p_plus(xB, p, self.nu) * self.scaleB
        dB = (2.0 * self.nu * eta / 3.0) * (xB - 1.0 / eta) * self.scaleB
        val[mB], der[mB] = vB, dB
        mC = (t > self.b1) & (t <= self.b2)
        vC, dC = self._bridge(t[mC])
        val[mC], der[mC] = vC, dC
        mD = (t > self.b2) & (t <= self.b3)
        xD = t[mD] - self.b3
        val[mD] = eps1 * p_minus(xD, p)
        der[mD] = eps1 * (-(2.0 / 3.0) * eta**2 * (xD + 1.0 / eta))
        mE = t > self.b3
        v, d = _z1(t[mE] - self.b3, eta)
        val[mE], der[mE] = (2.0 / 3.0) * eps1 * v, (2.0 / 3.0) * eps1 * d
        return val, der

    def value(self, t):
        out = self._eval(t)[0]
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        out = self._eval(t)[1]
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return self.value(t)

    # -- derived constants ----------------------------------------------

    def junctions(self):
        if self.simple:
            return [1.5 / self.eta - 1.0]
        return [self.b0, self.b1, self.b2, self.b3, self.b3 + 1.5 / self.eta - 1.0]

    def k0(self, horizon=400.0, samples=20001):
        """Reported K0 with z(t) >= K0 (1 + t - t1)^(-3/2) for t >= t1."""
        t1 = self.params.t1
        t = np.linspace(t1, t1 + horizon, samples)
        ratio = self.value(t) * (1.0 + t - t1) ** 1.5
        # beyond the z1 branch point the ratio is exactly constant
        return float(np.min(ratio)) * (1.0 - 1e-12)

    def integral_bound(self):
        """A finite upper bound for the total integral of z."""
        p = self.params
        eta, eps1 = self.eta, p.eps1
        tstar = 1.5 / eta - 1.0
        cut = (p.t1 if not self.simple else 0.0) + tstar
        t = np.linspace(0.0, cut, 40001) if cut > 0 else np.array([0.0])
        numeric = float(np.trapezoid(self.value(t), t)) if cut > 0 else 0.0
        C2 = eta**-1.5 * 1.5**1.5 * math.exp(eta - 1.5)
        scale = (2.0 / 3.0) * eps1 if not self.simple else eps1
        tail = scale * C2 * 2.0 * (1.0 + tstar) ** -0.5
        return 1.01 * (numeric + tail)

    def cumulative(self, t):
        """integral of z over [0, t] by cached dense trapezoid."""
        if self._cache is None:
            p = self.params
            end = (p.t1 if not self.simple else 0.0) + 1.5 / self.eta - 1.0 + 200.0
            grid = np.linspace(0.0, end, 200001)
            vals = self.value(grid)
            cum = np.concatenate([[0.0], np.cumsum(
                0.5 * (vals[1:] + vals[:-1]) * np.diff(grid))])
            self._cache = (grid, cum)
        grid, cum = self._cache
        t = np.asarray(t, dtype=float)
        if np.any(t > grid[-1]):
            raise ValueError("cumulative cache horizon exceeded")
        out = np.interp(t, grid, cum)
        return float(out) if out.ndim == 0 else out


def z_construct(params):
    """The C^1 damping function for the given parameters."""
    return ZFunction(params)


def z_axiom_report(zfn, n_samples=10_000, horizon=None):
    """Checks the damping-function axioms on a dense sample; returns a dict."""
    p = zfn.params
    if horizon is None:
        horizon = max(4.0 * (p.t1 + 1.0), 12.0 / p.eta_z, 50.0)
    t = np.linspace(0.0, horizon, n_samples)
    z = zfn.value(t)
    dz = zfn.derivative(t)
    worst_damping = float(np.min(dz + p.eta_z * z))
    junction_gap = 0.0
    for tj in zfn.junctions():
        if tj <= 0:
            continue
        vl, dl = zfn._eval(np.nextafter(tj, -np.inf))
        vr, dr = zfn._eval(np.nextafter(tj, np.inf))
        junction_gap = max(junction_gap, abs(float(vl) - float(vr)),
                           abs(float(dl) - float(dr)))
    k0 = zfn.k0()
    after = t[t >= p.t1]
    envelope_ok = bool(np.all(zfn.value(after)
                              >= k0 * (1.0 + after - p.t1) ** -1.5))
    return {
        "z0": float(zfn.value(0.0)),
        "z1_value": float(zfn.value(1.0)),
        "damping_min": worst_damping,           # >= -tol required
        "positive": bool(np.all(z > 0.0)),
        "below_initial": bool(np.all(z <= p.eps1 * (1.0 + 1e-14))),
        "junction_gap": junction_gap,
        "K0": k0,
        "envelope_ok": envelope_ok,
        "integral_bound": zfn.integral_bound(),
    }


# ---------------------------------------------------------------------------
# large-time pair


@dataclass
class LargeTimeParams:
    beta: float
    alpha: float
    gamma: float
    beta_plus: float
    alpha_plus: float
    K_z: float
    t_eps: float
    eps: float
    tilt: str = "gaussian"
    floors: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        if not 0.5 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (1/2, 1)")
        if not 0.5 <= self.alpha_plus < 1.0:
            raise ValueError("alpha_plus must lie in [1/2, 1)")
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        if min(self.beta, self.beta_plus, self.K_z) <= 0.0:
            raise ValueError("beta, beta_plus, K_z must be positive")
        if self.tilt not in ("gaussian", "exponential"):
            raise ValueError("tilt must be gaussian or exponential")

    @classmethod
    def from_floors(cls, profile, f, zparams, fc, beta=1.0, alpha=0.75,
                    gamma=2.0, beta_plus=1.0, alpha_plus=0.75, t_eps=1.0,
                    safety=2.0, tilt="gaussian"):
        """K_z = safety * max of the two case-2 floors (sub and super)."""
        zfn = ZFunction(zparams)
        k0 = zfn.k0()
        sup_dphi = profile.max_slope()
        tilt_load = alpha * beta + fc.C_prime + fc.C_K
        floor_sub = (fc.delta0 + 1.5 * zparams.eta_z
                     + tilt_load * sup_dphi / k0) / fc.tau0
        tilt_load_plus = alpha_plus * beta_plus + fc.C_prime + fc.C_K
        floor_super = (tilt_load_plus / k0
                       + (fc.delta_prime + zparams.eta_z) / fc.tau0)
        K_z = safety * max(floor_sub, floor_super)
        return cls(beta, alpha, gamma, beta_plus, alpha_plus, K_z, t_eps,
                   zparams.eps1 / 2.0, tilt,
                   {"sub_case2": floor_sub, "super_case2": floor_super})


def _tilt(xps, t, beta, alpha, gamma, kind):
    if kind == "gaussian":
        return beta * t**-alpha * np.exp(-xps / (gamma * t))
    return beta * t**-alpha * np.exp(-np.sqrt(np.maximum(xps, 0.0)) / (gamma * t))


class UMinus:
    """u-(x,t) = phi(x1 + c(t-1+t_eps) - theta(x',t) - Z(t)) - z(t), t >= 1."""

    name = "uminus"
    is_sub = True

    def __init__(self, profile, lt, zfn):
        self.profile, self.lt, self.zfn = profile, lt, zfn

    def validity(self, t):
        return t >= 1.0

    def __call__(self, points, t):
        if not self.validity(t):
            raise ValueError("u- is defined for t >= 1")
        lt = self.lt
        x1 = points[..., 0]
        xps = np.sum(points[..., 1:] ** 2, axis=-1) if points.shape[-1] > 1 else 0.0
        theta = _tilt(xps, t, lt.beta, lt.alpha, lt.gamma, lt.tilt)
        Z = lt.K_z * self.zfn.cumulative(t)
        arg = x1 + self.profile.c * (t - 1.0 + lt.t_eps) - theta - Z
        return self.profile.value(arg) - self.zfn.value(t)


class UPlus:
    """u+(x,t) = phi(x1 + c(t-1+t_eps) + theta1(x',t) + Z(t)) + z(t), t >= 1."""

    name = "uplus"
    is_sub = False

    def __init__(self, profile, lt, zfn):
        self.profile, self.lt, self.zfn = profile, lt, zfn

    def validity(self, t):
        return t >= 1.0

    def __call__(self, points, t):
        if not self.validity(t):
            raise ValueError("u+ is defined for t >= 1")
        lt = self.lt
        x1 = points[..., 0]
        xps = np.sum(points[..., 1:] ** 2, axis=-1) if points.shape[-1] > 1 else 0.0
        theta = _tilt(xps, t, lt.beta_plus, lt.alpha_plus, lt.gamma, lt.tilt)
        Z = lt.K_z * self.zfn.cumulative(t)
        arg = x1 + self.profile.c * (t - 1.0 + lt.t_eps) + theta + Z
        return self.profile.value(arg) + self.zfn.value(t)


def u_minus(points, t, profile, lt, zfn):
    return UMinus(profile, lt, zfn)(np.asarray(points, dtype=float), t)


def u_plus(points, t, profile, lt, zfn):
    return UPlus(profile, lt, zfn)(np.asarray(points, dtype=float), t)


# ---------------------------------------------------------------------------
# planar squeezing pair


@dataclass
class PlanarSqueezeParams:
    omega: float
    eta: float
    A: float
    delta: float
    eps: float
    t0: float
    sup_fprime: float

    @classmethod
    def from_profile(cls, profile, f, eps, t0=0.0):
        """Every constant recomputed from the actual f and phi."""
        omega = min(abs(f.fp0), abs(f.fp1)) / 2.0
        s = np.linspace(0.0, 1.0, 200_001)
        fp = f.derivative(s)
        ok = fp <= -omega
        # largest eta with f' <= -omega on [0, eta] and [1 - eta, 1]
        first_bad = np.argmin(ok) if not ok.all() else len(s)
        eta_left = s[first_bad - 1] if first_bad > 0 else 0.0
        ok_r = ok[::-1]
        first_bad_r = np.argmin(ok_r) if not ok_r.all() else len(s)
        eta_right = s[::-1][first_bad_r - 1] if first_bad_r > 0 else 1.0
        eta = min(eta_left, 1.0 - eta_right)
        if eta <= 0.0:
            raise ValueError("no flat zone with f' <= -omega")
        if not 0.0 < eps < eta / 2.0:
            raise ValueError(f"eps must lie in (0, eta/2) = (0, {eta / 2:.6g})")
        z, phi = profile.z, profile.phi
        below = z[phi <= eta / 2.0]
        above = z[phi >= 1.0 - eta / 2.0]
        if len(below) == 0 or len(above) == 0:
            raise ValueError("profile grid does not reach the flat zones")
        A = max(-float(below[-1]), float(above[0])) + profile.h
        inside = np.abs(z) <= A
        delta = float(np.min(profile.dphi[inside]))
        if delta <= 0.0:
            raise ValueError("phi' must be positive on the transition zone")
        return cls(omega, eta, A, delta, eps, float(t0), f.sup_norm_fprime())

    def drift(self, t):
        """The accumulated shift 2 eps ||f'|| / (delta omega) (1 - e^(-omega (t-t0)))."""
        return (2.0 * self.eps * self.sup_fprime / (self.delta * self.omega)
                * (1.0 - np.exp(-self.omega * (np.asarray(t) - self.t0))))


class PlanarLower:
    name = "planar_lower"
    is_sub = True

    def __init__(self, profile, p):
        self.profile, self.p = profile, p

    def validity(self, t):
        return t >= self.p.t0

    def __call__(self, points, t):
        if not self.validity(t):
            raise ValueError("planar pair is defined for t >= t0")
        x1 = points[..., 0]
        arg = x1 + self.profile.c * t - self.p.drift(t)
        return self.profile.value(arg) - self.p.eps * np.exp(-self.p.omega * (t - self.p.t0))


class PlanarUpper:
    name = "planar_upper"
    is_sub = False

    def __init__(self, profile, p):
        self.profile, self.p = profile, p

    def validity(self, t):
        return t >= self.p.t0

    def __call__(self, points, t):
        if not self.validity(t):
            raise ValueError("planar pair is defined for t >= t0")
        x1 = points[..., 0]
        arg = x1 + self.profile.c * t + self.p.drift(t)
        return self.profile.value(arg) + self.p.eps * np.exp(-self.p.omega * (t - self.p.t0))


def planar_sub_super(x1, t, profile, p, sign):
    """sign=-1 gives the lower function, +1 the upper."""
    pts = np.asarray(x1, dtype=float)[..., None]
    if sign < 0:
        return PlanarLower(profile, p)(pts, t)
    return PlanarUpper(profile, p)(pts, t)


class WMinus:
    name = "wminus"
    is_sub = True

    def __init__(self, profile, sp):
        self.profile, self.sp = profile, sp

    def validity(self, t):
        return t <= self.sp.T

    def __call__(self, points, t):
        return w_minus(points[..., 0], t, self.profile, self.sp)


class WPlus:
    name = "wplus"
    is_sub = False

    def __init__(self, profile, sp):
        self.profile, self.sp = profile, sp

    def validity(self, t):
        return t <= self.sp.T

    def __call__(self, points, t):
        return w_plus(points[..., 0], t, self.profile, self.sp)


class ConstantCertificate:
    """Steady state w = const; handy as an exactness control."""

    name = "constant"
    is_sub = True

    def __init__(self, value):
        self.value = float(value)

    def validity(self, t):
        return True

    def __call__(self, points, t):
        return np.full(points.shape[:-1], self.value)


# ---------------------------------------------------------------------------
# residual verification


@dataclass
class CertificateReport:
    name: str
    is_sub: bool
    tolerance: float
    times: np.ndarray
    extrema: np.ndarray          # signed worst residual per time sample
    worst_value: float
    worst_time: float
    worst_point: tuple
    passed: bool

    def __str__(self):
        kind = "sub" if self.is_sub else "super"
        status = "pass" if self.passed else "FAIL"
        return (f"{self.name} ({kind}): {status}  worst L = {self.worst_value:.3e} "
                f"at t = {self.worst_time:.4g}, x = {self.worst_point} "
                f"(tol {self.tolerance:.1e})")


def _padded_centers(grid):
    m = grid.pad
    axes = []
    for a in range(grid.dimension):
        n = grid.shape[a] + 2 * m
        axes.append(grid.box_lo[a] + (np.arange(n) - m + 0.5) * grid.h)
    if grid.dimension == 1:
        return axes[0][:, None]
    xx, yy = np.meshgrid(*axes, indexing="ij")
    return np.stack([xx, yy], axis=-1)


def certificate_residual(cert, grid, f, time_samples, dt_fd=1e-3,
                         tolerance=None):
    """Scan L(cert) over the grid at the sampled times.

    Sub-solutions need sup L <= tolerance, super-solutions inf L >=
    -tolerance; the report records the worst offending sample.  The default
    tolerance is the discretization budget 0.1 * (h^2 + dt_fd^2).  The
    kernel support must cover at least 16 cells so the discrete operator is
    the one the simulator trusts.
    """
    if tolerance is None:
        tolerance = 0.1 * (grid.h**2 + dt_fd**2)
    if 2 * grid.pad + 1 < 16:
        raise ValueError("grid too coarse: kernel support spans < 16 cells")
    times = np.asarray(time_samples, dtype=float)
    if times.size == 0:
        raise ValueError("no time samples")
    for t in times:
        if not (cert.validity(t - dt_fd) and cert.validity(t + dt_fd)):
            raise ValueError(f"t = {t} (+- dt_fd) is outside the validity "
                             f"window of {cert.name}")
    centers = grid.cell_centers()
    pcenters = _padded_centers(grid)
    sign = 1.0 if cert.is_sub else -1.0
    extrema = np.empty(times.shape)
    worst = -np.inf
    worst_t = times[0]
    worst_pt = None
    for k, t in enumerate(times):
        w_now = cert(centers, t)
        w_pad = cert(pcenters, t)
        w_t = (cert(centers, t + dt_fd) - cert(centers, t - dt_fd)) / (2.0 * dt_fd)
        conv = grid.convolve_exterior(w_now, pad_value=w_pad)
        lw = w_t - (conv - grid.degree_comp * w_now) - f.eval_extended(w_now)
        signed = np.where(grid.chi_omega, sign * lw, -np.inf)
        idx = np.unravel_index(np.argmax(signed), signed.shape)
        extrema[k] = signed[idx] * sign
        if signed[idx] > worst:
            worst = signed[idx]
            worst_t = float(t)
            worst_pt = tuple(np.round(centers[idx], 6).tolist()) \
                if grid.dimension == 2 else (float(centers[idx][0]),)
    passed = bool(worst <= tolerance)
    return CertificateReport(cert.name, cert.is_sub, tolerance, times,
                             extrema, float(sign * worst), worst_t,
                             worst_pt, passed)


def detect_t1(profile, sp, grid, f, t_lo, n_samples=40, dt_fd=1e-3,
              tolerance=None):
    """Largest sampled time <= T at which both W-/W+ residual signs hold
    for every sample before it."""
    if tolerance is None:
        tolerance = 0.1 * (grid.h**2 + dt_fd**2)
    t_hi = sp.T - 2.0 * dt_fd
    times = np.linspace(t_lo, t_hi, n_samples)
    rep_m = certificate_residual(WMinus(profile, sp), grid, f, times,
                                 dt_fd, tolerance)
    rep_p = certificate_residual(WPlus(profile, sp), grid, f, times,
                                 dt_fd, tolerance)
    ok = (rep_m.extrema <= tolerance) & (rep_p.extrema >= -tolerance)
    if not ok[0]:
        raise ValueError("certificate signs fail already at the earliest sample")
    bad = np.nonzero(~ok)[0]
    t1 = times[-1] if len(bad) == 0 else times[bad[0] - 1]
    return float(t1), rep_m, rep_p


# ---------------------------------------------------------------------------
# floor constants


@dataclass
class FloorConstants:
    k3: float
    k4: float
    L0: float
    L2: float
    C0: float
    tau0: float
    delta0: float
    delta_prime: float
    eta_f: float
    omega: float
    sigma: float
    C_prime: float
    C_K: float

    def as_dict(self):
        return dict(self.__dict__)


def _threshold_scan(profile, f, target, plus):
    """Smallest threshold tau with the f-separation beyond (tau, -tau)."""
    zg = np.linspace(0.25, 12.0, 188)
    phi_p = profile.value(zg)
    phi_m = profile.value(-zg)
    pp, mm = np.meshgrid(phi_p, phi_m, indexing="ij")
    if plus:
        ratio = (f.eval_extended(pp) + f.eval_extended(mm)
                 - f.eval_extended(pp + mm)) / mm
        good = ratio >= target
    else:
        ratio = (f.eval_extended(pp) - f.eval_extended(mm)
                 - f.eval_extended(pp - mm)) / mm
        good = ratio <= target
    for i, tau in enumerate(zg):
        if np.all(good[i:, i:]):
            return float(tau)
    raise ValueError("no threshold found: f separation never kicks in")


def certificate_floor_constants(profile, f, j1, grid=None, lt_draft=None,
                                times=(1.0, 2.0, 5.0, 10.0)):
    """Numeric constants feeding the certificate floors.

    k3 is the profile-slope separation constant (minimized pairwise ratio on
    the left half-line), k4/L0/L2 locate the f' separation, C0 bounds the
    near-interface convolution overshoot through the refined tail expansion,
    and tau0/delta0/delta_prime describe the mid zone.  C_prime and C_K are
    the tilt-convolution constants, measured directly on a grid when one is
    supplied (they default to modest placeholders otherwise and only feed
    the K_z floor).
    """
    if not profile.is_monotone():
        raise ValueError("profile must be strictly monotone")
    z, phi, dphi = profile.z, profile.phi, profile.dphi
    left = np.nonzero((z < 0.0) & (phi > 1e-280))[0][::4]
    pv, dv = phi[left], dphi[left]
    dphi_gap = np.subtract.outer(dv, dv)      # phi'(xi1) - phi'(xi2)
    phi_gap = np.subtract.outer(pv, pv)       # phi(xi1) - phi(xi2)
    mask = phi_gap > 1e-14
    k3 = float(np.min(dphi_gap[mask] / phi_gap[mask]))
    if k3 <= 0.0:
        raise ValueError("k3 <= 0: profile slope separation fails "
                         "(left convexity violated?)")

    sep = abs(f.fp1 - f.fp0)
    k4 = 0.45 * sep
    L2 = _threshold_scan(profile, f, -k4, plus=False)
    L0 = _threshold_scan(profile, f, 0.5 * (f.fp0 - f.fp1), plus=True) \
        if f.fp0 > f.fp1 else 0.25
    C0 = profile.K_phi * (2.0 + 2.0 * j1.exp_moment(profile.lam))

    omega = min(abs(f.fp0), abs(f.fp1)) / 2.0
    sigma = omega
    s = np.linspace(0.0, 1.0, 100_001)
    fp = f.derivative(s)
    ok = fp <= -omega
    first_bad = int(np.argmin(ok)) if not ok.all() else len(s)
    eta_left = s[first_bad - 1] if first_bad > 0 else 0.0
    ok_r = ok[::-1]
    first_bad_r = int(np.argmin(ok_r)) if not ok_r.all() else len(s)
    eta_right = 1.0 - s[::-1][first_bad_r - 1] if first_bad_r > 0 else 0.0
    eta_f = min(eta_left, eta_right)
    mid = (phi >= eta_f) & (phi <= 1.0 - eta_f)
    tau0 = float(np.min(dphi[mid]))
    delta0 = float(np.max(f.derivative(np.linspace(eta_f, 1.0 - eta_f, 20001))))
    delta_prime = float(-np.min(fp))

    C_prime, C_K = 0.5, 0.1
    if grid is not None and lt_draft is not None:
        C_prime, C_K = _measure_tilt_constants(profile, f, grid, lt_draft, times)

    return FloorConstants(k3, k4, L0, L2, C0, tau0, delta0, delta_prime,
                          eta_f, omega, sigma, C_prime, C_K)


def _measure_tilt_constants(profile, f, grid, lt, times):
    """Grid sup of the tilt and obstacle convolution defects, normalized by
    t^-(alpha+1) phi'."""
    centers = grid.cell_centers()
    pcenters = _padded_centers(grid)
    m = grid.pad
    w = grid.kernel_weights
    slope_floor = 0.05 * profile.max_slope()
    cp = ck = 0.0
    for t in times:
        x1 = centers[..., 0]
        xps = np.sum(centers[..., 1:] ** 2, axis=-1) if grid.dimension == 2 else 0.0
        theta = _tilt(xps, t, lt.beta, lt.alpha, lt.gamma, lt.tilt)
        arg = x1 - theta
        vals = profile.value(arg)
        px1 = pcenters[..., 0]
        pxps = np.sum(pcenters[..., 1:] ** 2, axis=-1) if grid.dimension == 2 else 0.0
        ptheta = _tilt(pxps, t, lt.beta, lt.alpha, lt.gamma, lt.tilt)
        pvals = profile.value(px1 - ptheta)
        # full-space convolution (no obstacle mask) of the tilted profile
        padded = pvals.copy()
        core = (slice(m, m + grid.shape[0]),) + (
            (slice(m, m + grid.shape[1]),) if grid.dimension == 2 else ())
        padded[core] = vals
        conv_full = fftconvolve(padded, w, mode="valid")
        slope = profile.slope(arg)
        keep = (slope >= slope_floor) & grid.chi_omega
        planar = profile.c * slope - f.eval_extended(vals)
        r_full = conv_full - vals - planar
        if np.any(keep):
            cp = max(cp, float(np.max(t ** (lt.alpha + 1.0)
                                      * np.maximum(0.0, -r_full[keep]) / slope[keep])))
        if grid.obstacle.kind != "empty":
            padded_k = np.zeros_like(padded)
            padded_k[core] = np.where(grid.chi_k, vals, 0.0)
            conv_k = fftconvolve(padded_k, w, mode="valid")
            padded_m = np.zeros_like(padded)
            padded_m[core] = np.where(grid.chi_k, 1.0, 0.0)
            mass_k = fftconvolve(padded_m, w, mode="valid")
            r_k = conv_k - mass_k * vals
            # the K defect and phi' share an exponential envelope near K,
            # so the ratio stays O(1) even at tiny slopes
            near = grid.chi_omega & (mass_k > 1e-12) & (slope > 1e-12)
            if np.any(near):
                ck = max(ck, float(np.max(t ** (lt.alpha + 1.0)
                                          * np.abs(r_k[near]) / slope[near])))
    return cp, ck
