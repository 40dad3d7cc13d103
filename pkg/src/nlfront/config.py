"""Run configuration: strict TOML with sections per module.

Unknown keys are rejected so archived configs stay unambiguous; every
domain constraint that can be checked at parse time is checked here.
"""

import hashlib

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .domain import ObstacleSpec
from .kernels import Kernel, Kernel1D, marginal_1d
from .nonlinearity import Bistable, Multistable

__all__ = ["RunConfig", "ConfigError", "load_config"]


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "kernel": {"dimension", "support_radius", "exponent", "quad_points"},
    "nonlinearity": {"a", "kappa", "family", "zeros"},
    "domain": {"box", "h"},
    "obstacle": {"kind", "center", "radius", "semi_axes", "vertices",
                 "require_left_halfplane"},
    "wave": {"z_max", "h", "newton_tol", "max_iter"},
    "evolve": {"dt", "scheme", "t0", "t1", "snapshot_stride", "closure",
               "initial", "initial_shift"},
    "certify": {"which", "tolerance", "dt_fd", "t_lo", "samples", "safety",
                "eta_z", "eps1", "t_split", "eps", "t_start", "tilt"},
    "experiment": {"kind", "n_list", "eval_times", "dt", "t_end", "eps",
                   "offsets", "window", "front_lines", "snapshot_stride",
                   "sample_stride"},
    "output": {"directory", "formats"},
}
_TOP_SCALARS = {"seed", "threads"}


def _check_keys(section, table):
    allowed = _SCHEMA[section]
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key '{section}.{key}'")


class RunConfig:
    """Validated configuration bound to constructed model objects."""

    def __init__(self, raw, text=b""):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a table")
        for section in raw:
            if section in _SCHEMA:
                _check_keys(section, raw[section])
            elif section not in _TOP_SCALARS:
                raise ConfigError(f"unknown key '{section}'")
        self.raw = raw
        self.sha256 = hashlib.sha256(text).hexdigest()
        self.seed = int(raw.get("seed", 0))
        self.threads = int(raw.get("threads", 1))
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    # -- constructors for model objects ----------------------------------

    def section(self, name, default=None):
        return self.raw.get(name, {} if default is None else default)

    def kernel(self):
        sec = self.section("kernel")
        try:
            return Kernel(int(sec.get("dimension", 2)),
                          float(sec.get("support_radius", 1.0)),
                          int(sec.get("exponent", 2)),
                          int(sec.get("quad_points", 2049)))
        except ValueError as exc:
            raise ConfigError(f"kernel: {exc}") from exc

    def kernel1d(self):
        k = self.kernel()
        if k.dimension == 1:
            return Kernel1D(k.support_radius, exponent=k.exponent,
                            quad_points=k.quad_points)
        return marginal_1d(k)

    def nonlinearity(self):
        sec = self.section("nonlinearity")
        family = sec.get("family", "bistable")
        try:
            if family == "bistable":
                return Bistable(float(sec.get("a", 0.25)),
                                float(sec.get("kappa", 1.0)))
            if family == "multistable":
                return Multistable(tuple(sec.get("zeros", (0.2, 0.5, 0.8))),
                                   float(sec.get("kappa", 1.0)))
        except ValueError as exc:
            raise ConfigError(f"nonlinearity: {exc}") from exc
        raise ConfigError(f"nonlinearity.family must be bistable or "
                          f"multistable, got {family!r}")

    def obstacle(self):
        sec = self.section("obstacle")
        try:
            return ObstacleSpec(
                sec.get("kind", "empty"),
                center=tuple(sec.get("center", (0.0, 0.0))),
                radius=float(sec.get("radius", 1.0)),
                semi_axes=tuple(sec.get("semi_axes", (1.0, 1.0))),
                vertices=sec.get("vertices"),
                require_left_halfplane=bool(sec.get("require_left_halfplane",
                                                    False)))
        except ValueError as exc:
            raise ConfigError(f"obstacle: {exc}") from exc

    def grid(self):
        from .domain import build_grid

        sec = self.section("domain")
        if "box" not in sec:
            raise ConfigError("domain.box is required")
        box = np.asarray(sec["box"], dtype=float)
        h = float(sec.get("h", self.kernel().support_radius / 16.0))
        try:
            return build_grid(box, h, self.obstacle(), self.kernel())
        except ValueError as exc:
            raise ConfigError(f"domain: {exc}") from exc

    def wave_params(self):
        sec = self.section("wave")
        L = self.kernel().support_radius
        return {
            "z_max": float(sec.get("z_max", 40.0 * L)),
            "h": float(sec.get("h", L / 20.0)),
            "newton_tol": float(sec.get("newton_tol", 1e-8)),
            "max_iter": int(sec.get("max_iter", 100)),
        }

    def evolve_params(self):
        sec = self.section("evolve")
        scheme = sec.get("scheme", "heun")
        if scheme not in ("heun", "rk4"):
            raise ConfigError(f"evolve.scheme must be heun or rk4, got {scheme!r}")
        closure = sec.get("closure", "planar")
        if closure not in ("planar", "zero", "one"):
            raise ConfigError("evolve.closure must be planar, zero or one")
        initial = sec.get("initial", "planar")
        if initial not in ("planar", "zero", "one"):
            raise ConfigError("evolve.initial must be planar, zero or one")
        return {
            "dt": float(sec.get("dt", 0.05)),
            "scheme": scheme,
            "t0": float(sec.get("t0", 0.0)),
            "t1": float(sec.get("t1", 10.0)),
            "snapshot_stride": int(sec.get("snapshot_stride", 20)),
            "closure": closure,
            "initial": initial,
            "initial_shift": float(sec.get("initial_shift", 0.0)),
        }

    def certify_params(self):
        sec = self.section("certify")
        which = sec.get("which", "wminus")
        if which not in ("wminus", "wplus", "uminus", "uplus", "planar"):
            raise ConfigError("certify.which must be one of wminus, wplus, "
                              "uminus, uplus, planar")
        tilt = sec.get("tilt", "gaussian")
        if tilt not in ("gaussian", "exponential"):
            raise ConfigError("certify.tilt must be gaussian or exponential")
        return {
            "which": which,
            "tolerance": float(sec.get("tolerance", 1e-3)),
            "dt_fd": float(sec.get("dt_fd", 1e-3)),
            "t_lo": float(sec.get("t_lo", -40.0)),
            "samples": int(sec.get("samples", 24)),
            "safety": float(sec.get("safety", 2.0)),
            "eta_z": sec.get("eta_z"),
            "eps1": float(sec.get("eps1", 0.1)),
            "t_split": float(sec.get("t_split", 0.0)),
            "eps": float(sec.get("eps", 0.02)),
            "t_start": float(sec.get("t_start", 0.0)),
            "tilt": tilt,
        }

    def experiment_params(self):
        sec = self.section("experiment")
        kind = sec.get("kind", "entire")
        if kind not in ("entire", "recover", "farfield", "liouville"):
            raise ConfigError("experiment.kind must be entire, recover, "
                              "farfield or liouville")
        return {
            "kind": kind,
            "n_list": [int(n) for n in sec.get("n_list", (10, 20, 40))],
            "eval_times": [float(t) for t in sec.get("eval_times", (-5.0, 0.0, 5.0))],
            "dt": float(sec.get("dt", 0.05)),
            "t_end": float(sec.get("t_end", 80.0)),
            "eps": float(sec.get("eps", 0.1)),
            "offsets": [float(o) for o in sec.get("offsets", (5.0, 10.0, 20.0))],
            "window": float(sec.get("window", 2.0)),
            "front_lines": [float(y) for y in sec.get("front_lines", (0.0,))],
            "snapshot_stride": int(sec.get("snapshot_stride", 20)),
            "sample_stride": int(sec.get("sample_stride", 20)),
        }

    def output_params(self, fallback_dir="."):
        sec = self.section("output")
        formats = sec.get("formats", ["csv", "bin"])
        for fmt in formats:
            if fmt not in ("csv", "bin"):
                raise ConfigError(f"unknown output format {fmt!r}")
        return {"directory": sec.get("directory", fallback_dir),
                "formats": list(formats)}

    def validate(self):
        """Parse-time validation of every section; returns self."""
        self.kernel()
        self.nonlinearity()
        self.obstacle()
        if "domain" in self.raw:
            box = self.raw["domain"].get("box")
            if box is None:
                raise ConfigError("domain.box is required")
        self.wave_params()
        self.evolve_params()
        self.certify_params()
        self.experiment_params()
        self.output_params()
        return self


def load_config(path):
    with open(path, "rb") as fh:
        text = fh.read()
    try:
        raw = tomllib.loads(text.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    return RunConfig(raw, text).validate()
