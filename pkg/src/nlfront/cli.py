"""Command-line entry point.

Subcommands: wave, simulate, certify, experiment, zfn, selfcheck.  All take
a TOML configuration (zfn takes direct flags), honor --dry-run, and write a
manifest recording the config hash, library versions and wall-clock per
stage.  Exit codes: 0 success, 1 assertion/criterion failure, 2
configuration error.
"""

import argparse
import sys
import time

import numpy as np

from . import __version__
from . import certificates as ct
from . import experiments as ex
from .config import ConfigError, load_config
from .domain import write_field_dump, write_slice_csv
from .evolution import Field, PlanarClosure, ordering_report, solve_interval
from .nonlinearity import check_condition_F
from .wave import fit_asymptotics, solve_profile

__all__ = ["main"]


class Stages:
    """Wall-clock bookkeeping for the manifest."""

    def __init__(self):
        self.entries = []
        self._t = time.perf_counter()

    def mark(self, name):
        now = time.perf_counter()
        self.entries.append((name, now - self._t))
        self._t = now


def _write_manifest(outdir, cfg, stages, extra=None):
    import os

    import scipy

    lines = [
        f"config_sha256={cfg.sha256}",
        f"nlfront_version={__version__}",
        f"numpy_version={np.__version__}",
        f"scipy_version={scipy.__version__}",
        f"seed={cfg.seed}",
        f"threads={cfg.threads}",
    ]
    for name, seconds in stages.entries:
        lines.append(f"walltime.{name}={seconds:.3f}")
    for key, val in (extra or {}).items():
        lines.append(f"{key}={val}")
    with open(os.path.join(outdir, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _ensure_outdir(path):
    import os

    os.makedirs(path, exist_ok=True)
    return path


def _profile_for(cfg):
    wp = cfg.wave_params()
    prof = solve_profile(cfg.kernel1d(), cfg.nonlinearity(), wp["z_max"],
                         wp["h"], newton_tol=wp["newton_tol"],
                         max_iter=wp["max_iter"])
    return fit_asymptotics(prof)


def _grid_consistent_profile(cfg, grid):
    """Profile sharing the grid's planar convolution (for experiment runs)."""
    wp = cfg.wave_params()
    h = min(wp["h"], grid.h)
    prof = solve_profile(grid.marginal_kernel1d(), cfg.nonlinearity(),
                         wp["z_max"], h, newton_tol=wp["newton_tol"],
                         max_iter=wp["max_iter"])
    return fit_asymptotics(prof)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_wave(args):
    cfg = load_config(args.config)
    if args.dry_run:
        wp = cfg.wave_params()
        print(f"plan: solve profile on [-{wp['z_max']}, {wp['z_max']}] at "
              f"h={wp['h']}, tol={wp['newton_tol']}")
        return 0
    stages = Stages()
    outdir = _ensure_outdir(args.out)
    prof = _profile_for(cfg)
    stages.mark("wave")
    import os

    path = os.path.join(outdir, "profile.csv")
    prof.to_csv(path)
    stages.mark("write")
    resid = prof._sup_residual
    print(f"profile: c={prof.c!r} lambda={prof.lam:.6g} mu={prof.mu:.6g} "
          f"residual={resid:.3e}")
    _write_manifest(outdir, cfg, stages, {"residual": repr(resid),
                                          "c": repr(prof.c)})
    return 0 if resid <= cfg.wave_params()["newton_tol"] else 1


def _cmd_simulate(args):
    cfg = load_config(args.config)
    ep = cfg.evolve_params()
    if args.dry_run:
        print(f"plan: simulate t in [{ep['t0']}, {ep['t1']}] at dt={ep['dt']} "
              f"({ep['scheme']}), closure={ep['closure']}")
        return 0
    import os

    stages = Stages()
    outdir = _ensure_outdir(args.out)
    grid = cfg.grid()
    f = cfg.nonlinearity()
    report = check_condition_F(f, float(np.nanmin(grid.degree)))
    if not report.passed:
        print(str(report), file=sys.stderr)
        return 1
    stages.mark("grid")
    prof = _grid_consistent_profile(cfg, grid)
    stages.mark("wave")

    x1 = grid.cell_centers()[..., 0]
    if ep["initial"] == "planar":
        u0 = Field(grid, prof.value(x1 + ep["initial_shift"]), ep["t0"])
    else:
        u0 = Field.constant(grid, 0.0 if ep["initial"] == "zero" else 1.0,
                            ep["t0"])
    closure = (PlanarClosure(prof, shift=ep["initial_shift"] - prof.c * ep["t0"])
               if ep["closure"] == "planar" else ep["closure"])
    traj = solve_interval(u0, ep["t0"], ep["t1"], ep["dt"], f,
                          scheme=ep["scheme"], closure=closure,
                          snapshot_stride=ep["snapshot_stride"])
    stages.mark("evolve")

    out = cfg.output_params(args.out)
    probe = ex.probe_mask(grid)
    rows = []
    for k, fld in enumerate(traj.fields):
        d = ex.front_distance(fld, prof, fld.t - ep["t0"]
                              + ep["initial_shift"] / prof.c, probe)
        if grid.dimension == 2:
            mid = grid.shape[1] // 2
            pos = ex._front_crossing(fld.values[:, mid], x1[:, 0], prof.theta0)
        else:
            pos = ex._front_crossing(fld.values, x1, prof.theta0)
        rows.append((fld.t, fld.min(), fld.max(), pos, d))
        if "bin" in out["formats"]:
            write_field_dump(os.path.join(outdir, f"field_{k:04d}.bin"),
                             fld.values, grid.h, fld.t,
                             obstacle_mask=grid.chi_k)
    _write_csv(os.path.join(outdir, "diagnostics.csv"),
               ["t", "min", "max", "front_position", "planar_distance"], rows)
    if "bin" in out["formats"]:
        write_field_dump(os.path.join(outdir, "degree.bin"), grid.degree_comp,
                         grid.h, 0.0, obstacle_mask=grid.chi_k)
        write_field_dump(os.path.join(outdir, "mask.bin"),
                         grid.chi_k.astype(float), grid.h, 0.0)
    write_slice_csv(os.path.join(outdir, "degree_slice.csv"), grid,
                    grid.degree_comp)
    write_slice_csv(os.path.join(outdir, "final_slice.csv"), grid,
                    traj.final().values)
    stages.mark("write")
    _write_manifest(outdir, cfg, stages,
                    {"snapshots": len(traj.fields),
                     "final_min": repr(traj.final().min()),
                     "final_max": repr(traj.final().max())})
    print(f"simulated {len(traj.fields)} snapshots to t={traj.final().t}")
    return 0


def _certify_wpair(cfg, grid, prof, f, cp):
    sp = ct.ShiftParams.from_floors(prof, f, cfg.kernel1d(),
                                    safety=cp["safety"], t_min=cp["t_lo"])
    t1, rep_m, rep_p = ct.detect_t1(prof, sp, grid, f, t_lo=cp["t_lo"],
                                    n_samples=cp["samples"],
                                    dt_fd=cp["dt_fd"],
                                    tolerance=cp["tolerance"])
    return {"wminus": rep_m, "wplus": rep_p}, {"T1": t1, "M": sp.M,
                                               "lambda0": sp.lambda0}


def _certify_upair(cfg, grid, prof, f, cp):
    sigma = min(abs(f.fp0), abs(f.fp1)) / 2.0
    eta_z = cp["eta_z"] if cp["eta_z"] is not None else 0.4 * sigma
    zp = ct.ZParams(float(eta_z), cp["eps1"], cp["t_split"])
    zp.validate_against(f)
    zfn = ct.z_construct(zp)
    draft = ct.LargeTimeParams(beta=1.0, alpha=0.75, gamma=2.0, beta_plus=1.0,
                               alpha_plus=0.75, K_z=1.0, t_eps=1.0,
                               eps=cp["eps1"] / 2.0, tilt=cp["tilt"])
    fc = ct.certificate_floor_constants(prof, f, cfg.kernel1d(), grid=grid,
                                        lt_draft=draft)
    lt = ct.LargeTimeParams.from_floors(prof, f, zp, fc, safety=cp["safety"],
                                        tilt=cp["tilt"])
    times = np.linspace(1.0 + 2 * cp["dt_fd"], 50.0, cp["samples"])
    rm = ct.certificate_residual(ct.UMinus(prof, lt, zfn), grid, f, times,
                                 cp["dt_fd"], cp["tolerance"])
    rp = ct.certificate_residual(ct.UPlus(prof, lt, zfn), grid, f, times,
                                 cp["dt_fd"], cp["tolerance"])
    return {"uminus": rm, "uplus": rp}, {"K_z": lt.K_z, "eta_z": eta_z}


def _certify_planar(cfg, grid, prof, f, cp):
    psq = ct.PlanarSqueezeParams.from_profile(prof, f, eps=cp["eps"],
                                              t0=cp["t_start"])
    times = np.linspace(cp["t_start"] + 2 * cp["dt_fd"],
                        cp["t_start"] + 30.0, cp["samples"])
    rl = ct.certificate_residual(ct.PlanarLower(prof, psq), grid, f, times,
                                 cp["dt_fd"], cp["tolerance"])
    ru = ct.certificate_residual(ct.PlanarUpper(prof, psq), grid, f, times,
                                 cp["dt_fd"], cp["tolerance"])
    return {"planar_lower": rl, "planar_upper": ru}, {"omega": psq.omega,
                                                      "delta": psq.delta}


def _cmd_certify(args):
    cfg = load_config(args.config)
    cp = cfg.certify_params()
    which = args.which or cp["which"]
    if args.dry_run:
        print(f"plan: certify {which} at tolerance {cp['tolerance']}")
        return 0
    import os

    stages = Stages()
    outdir = _ensure_outdir(args.out)
    grid = cfg.grid()
    f = cfg.nonlinearity()
    prof = _profile_for(cfg)
    stages.mark("setup")
    if which in ("wminus", "wplus"):
        reports, extra = _certify_wpair(cfg, grid, prof, f, cp)
    elif which in ("uminus", "uplus"):
        reports, extra = _certify_upair(cfg, grid, prof, f, cp)
    else:
        reports, extra = _certify_planar(cfg, grid, prof, f, cp)
    stages.mark("scan")
    ok = True
    for name, rep in reports.items():
        rows = list(zip(rep.times, rep.extrema))
        _write_csv(os.path.join(outdir, f"residuals_{name}.csv"),
                   ["t", "extremum"], rows)
        print(str(rep))
        ok = ok and rep.passed
    stages.mark("write")
    extra = {k: repr(float(v)) for k, v in extra.items()}
    extra["passed"] = ok
    _write_manifest(outdir, cfg, stages, extra)
    return 0 if ok else 1


def _cmd_experiment(args):
    cfg = load_config(args.config)
    xp = cfg.experiment_params()
    kind = args.kind or xp["kind"]
    if args.dry_run:
        print(f"plan: experiment {kind}")
        return 0
    import os

    stages = Stages()
    outdir = _ensure_outdir(args.out)
    grid = cfg.grid()
    f = cfg.nonlinearity()
    report = {}
    if kind == "liouville":
        final, rep = ex.stationary_liouville(grid, f, t_end=xp["t_end"],
                                             dt=xp["dt"])
        write_field_dump(os.path.join(outdir, "final.bin"), final.values,
                         grid.h, final.t, obstacle_mask=grid.chi_k)
        report.update(rep)
        ok = rep["sup_gap_to_one"] <= 1e-3 and rep["rhs_sup"] <= 1e-6
    else:
        prof = _grid_consistent_profile(cfg, grid)
        stages.mark("wave")
        if kind == "entire":
            sp = ex.entire_shift_params(prof, xp["n_list"])
            ea = ex.construct_entire(xp["n_list"], grid, prof, sp, f,
                                     eval_times=xp["eval_times"], dt=xp["dt"],
                                     sample_stride=xp["sample_stride"])
            report.update({
                "T1": ea.t1, "monotone_min": ea.monotone_min,
                "sandwich_low": ea.sandwich_low,
                "sandwich_high": ea.sandwich_high, "ut_min": ea.ut_min,
                "error_estimate": ea.error_estimate,
            })
            for (n, t), fld in ea.fields.items():
                if t in xp["eval_times"]:
                    write_field_dump(
                        os.path.join(outdir, f"entire_n{n}_t{t:+.1f}.bin"),
                        fld.values, grid.h, t, obstacle_mask=grid.chi_k)
            ok = ea.monotone_min >= -1e-8
        elif kind == "recover":
            diag = ex.recovery_experiment(grid, prof, f, t_end=xp["t_end"],
                                          dt=xp["dt"], eps=xp["eps"],
                                          snapshot_stride=xp["snapshot_stride"],
                                          front_lines=xp["front_lines"])
            rows = list(zip(diag.times, diag.planar_distance, diag.u_min,
                            diag.u_max, diag.front_axis[:, 0]))
            _write_csv(os.path.join(outdir, "front_diagnostics.csv"),
                       ["t", "planar_distance", "min", "max", "front_axis"],
                       rows)
            report.update({"t_eps": diag.t_eps, "d_max": diag.info["d_max"],
                           "d_end": diag.info["d_end"],
                           "hypothesis_met": diag.info["hypothesis_met"]})
            final = diag.info["final_field"]
            write_field_dump(os.path.join(outdir, "final.bin"), final.values,
                             grid.h, final.t, obstacle_mask=grid.chi_k)
            ok = diag.info["d_max"] > 0.1
        else:  # farfield
            x1 = grid.cell_centers()[..., 0]
            u0 = Field(grid, prof.value(x1), 0.0)
            traj = solve_interval(u0, 0.0, xp["t_end"], xp["dt"], f,
                                  scheme="heun", closure=PlanarClosure(prof),
                                  snapshot_stride=10**9)
            rep = ex.farfield_translate_check(traj.final(), prof,
                                              offsets=xp["offsets"],
                                              window=xp["window"])
            _write_csv(os.path.join(outdir, "farfield.csv"),
                       ["offset", "distance"],
                       list(zip(rep["offsets"], rep["distances"])))
            report["distances"] = rep["distances"]
            d = rep["distances"]
            ok = all(a > b for a, b in zip(d, d[1:]))
    stages.mark("run")
    with open(os.path.join(outdir, "report.txt"), "w") as fh:
        for key, val in report.items():
            fh.write(f"{key}={val}\n")
    _write_manifest(outdir, cfg, stages, {"kind": kind, "passed": ok})
    print(f"experiment {kind}: {'pass' if ok else 'FAIL'}")
    for key, val in report.items():
        print(f"  {key}={val}")
    return 0 if ok else 1


def _cmd_zfn(args):
    zp = ct.ZParams(args.eta, args.eps1, args.t1)
    zfn = ct.z_construct(zp)
    if args.dry_run:
        print(f"plan: z function eta={args.eta} eps1={args.eps1} t1={args.t1}")
        return 0
    import os

    outdir = _ensure_outdir(args.out)
    horizon = max(4.0 * (args.t1 + 1.0), 12.0 / args.eta, 50.0)
    ts = np.linspace(0.0, horizon, 2001)
    _write_csv(os.path.join(outdir, "zfn.csv"), ["t", "z", "zprime"],
               zip(ts, zfn.value(ts), zfn.derivative(ts)))
    rep = ct.z_axiom_report(zfn)
    for key, val in rep.items():
        print(f"{key}={val}")
    ok = (rep["damping_min"] >= -1e-10 and rep["positive"]
          and rep["below_initial"] and rep["junction_gap"] <= 1e-10
          and rep["envelope_ok"])
    return 0 if ok else 1


def _cmd_selfcheck(args):
    if args.dry_run:
        print("plan: quick invariants (kernel mass, profile residual, "
              "comparison, convolution oracle)")
        return 0
    from .domain import ObstacleSpec, build_grid
    from .kernels import Kernel, Kernel1D
    from .nonlinearity import Bistable

    rng = np.random.default_rng(args.seed)
    failures = []

    k1 = Kernel1D(1.0, exponent=2)
    if abs(k1.total_mass() - 1.0) > 1e-10:
        failures.append("kernel mass")
    f = Bistable(0.25, 1.0)
    prof = solve_profile(k1, f, z_max=15.0, h=0.0625)
    if prof._sup_residual > 1e-8 or not prof.is_monotone():
        failures.append("profile residual/monotonicity")

    ob = ObstacleSpec("disc", center=(0.0, 0.0), radius=0.5)
    grid = build_grid([(-2.0, 2.0), (-2.0, 2.0)], 0.125, ob, Kernel(2, 1.0, 2))
    u = rng.uniform(size=grid.shape)
    gap = np.max(np.abs(grid.convolve_exterior(u, 0.0)
                        - grid.convolve_exterior_direct(u, 0.0)))
    if gap > 1e-12:
        failures.append("convolution oracle")

    g1 = build_grid([(-6.0, 6.0)], 0.0625, ObstacleSpec("empty"),
                    Kernel(1, 1.0, 2))
    a = rng.uniform(0.0, 1.0, size=g1.shape)
    b = rng.uniform(0.0, 1.0, size=g1.shape)
    hi = Field(g1, np.maximum(a, b))
    lo = Field(g1, np.minimum(a, b))
    th = solve_interval(hi, 0.0, 1.0, 0.08, f, snapshot_stride=1000)
    tl = solve_interval(lo, 0.0, 1.0, 0.08, f, snapshot_stride=1000)
    if ordering_report(th.final(), tl.final()).violations:
        failures.append("comparison principle")

    if failures:
        print("selfcheck FAILED: " + ", ".join(failures))
        return 1
    print("selfcheck passed")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nlfront",
        description="Bistable nonlocal dispersal fronts around obstacles")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--dry-run", action="store_true",
                       help="validate the config, print the plan, write nothing")

    common(sub.add_parser("wave", help="solve the traveling-wave profile"))
    common(sub.add_parser("simulate", help="time-step the Cauchy problem"))
    p = sub.add_parser("certify", help="verify sub/super-solution signs")
    p.add_argument("--which", choices=["wminus", "wplus", "uminus", "uplus",
                                       "planar"], default=None)
    common(p)
    p = sub.add_parser("experiment", help="run a propagation scenario")
    p.add_argument("kind", nargs="?", default=None,
                   choices=["entire", "recover", "farfield", "liouville"])
    common(p)
    p = sub.add_parser("zfn", help="inspect the damping function z(t)")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--eps1", type=float, required=True)
    p.add_argument("--t1", type=float, default=0.0)
    common(p, needs_config=False)
    p = sub.add_parser("selfcheck", help="quick internal invariant suite")
    p.add_argument("--seed", type=int, default=0)
    common(p, needs_config=False)
    return parser


_HANDLERS = {
    "wave": _cmd_wave,
    "simulate": _cmd_simulate,
    "certify": _cmd_certify,
    "experiment": _cmd_experiment,
    "zfn": _cmd_zfn,
    "selfcheck": _cmd_selfcheck,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
