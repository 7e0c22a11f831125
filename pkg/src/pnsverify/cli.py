"""Command-line entry point: experiment orchestration and report emission.

Subcommands: verify-residuals, run-dns, blowup-report, inequality-report,
wave-check, dump-fields.  Each reads one config file, executes its module
pipeline, writes CSV (and PNG when plots are enabled) plus a manifest, and
exits 0 on success, 1 on a failed check, 2 on invalid input.
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .blowup import fit_blowup_exponent, figure1_data, ode_crosscheck
from .config import parse_config, validate
from .dns import init as dns_init, random_divergence_free, run as dns_run
from .errors import ConfigError, DivergenceError, PnsError, StepRejectedError
from .families import (
    SixthRootFamily,
    SixthRootParams,
    LogisticParams,
    SymbolicField,
    LatticeFlowParams,
    LatticeVelocityField,
    logistic_blowup_time,
    sample_on_grid,
    separable_product,
    taylor_green,
)
from .grid import (
    ScalarField,
    make_grid,
    laplacian,
    leray_project,
    norm,
    solve_poisson,
    to_physical,
    to_spectral,
    divergence,
    gradient,
)
from .inequalities import default_bump_family, hardy_check, sandwich_report
from .pnsf import read_field, write_field
from .reporting import RunManifest, write_csv
from .residuals import CSV_HEADER, FlowParams, momentum_residual
from .waves import WaveParams, acceleration_residual, quartic_time_residual, reduction_check, wave_residual

log = logging.getLogger("pnsverify")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pnsverify",
        description="Pseudo-spectral verification toolkit for the periodic "
        "incompressible Navier-Stokes equations",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("verify-residuals", "manufactured-solution residuals and substrate checks"),
        ("run-dns", "time integration with blowup diagnostics"),
        ("blowup-report", "derivative-growth curves, exponent fits, ODE cross-check"),
        ("inequality-report", "weighted-norm inequality on a bump family"),
        ("wave-check", "auxiliary wave couplings and the reduction implication"),
        ("dump-fields", "write family fields in the PNSF1 dump format"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to key=value config file")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config entry (repeatable)",
        )
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="seed for random test fields")
        p.add_argument("--jobs", type=int, help="parallel workers for fan-out steps")
    return parser


def _load_config(args):
    cfg = parse_config(args.config)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        cfg.set(key.strip(), raw.strip())
    if args.out is not None:
        cfg.set("output.dir", args.out)
    if args.seed is not None:
        cfg.set("seed", str(args.seed))
    if args.jobs is not None:
        cfg.set("jobs", str(args.jobs))
    validate(cfg)
    return cfg


def _start(cfg, subcommand):
    out_dir = cfg.get("output.dir")
    os.makedirs(out_dir, exist_ok=True)
    manifest = RunManifest(
        experiment=cfg.get("experiment.name"),
        subcommand=subcommand,
        version=__version__,
        config=cfg.snapshot(),
    )
    return out_dir, manifest


def _finish(manifest, out_dir):
    path = manifest.write(out_dir)
    for check in manifest.checks:
        status = "PASS" if check["passed"] else "FAIL"
        detail = ""
        if "value" in check:
            detail = f" (value={check['value']:.6g}"
            if "tolerance" in check:
                detail += f", tol={check['tolerance']:.6g}"
            detail += ")"
        print(f"{status} {check['name']}{detail}")
    print(f"manifest: {path}")
    return 0 if manifest.all_passed else 1


def _flow_params(cfg):
    return FlowParams(
        rho=cfg.require("flow.rho"),
        mu=cfg.require("flow.mu"),
        delta=cfg.get("flow.delta"),
        eta=cfg.get("flow.eta"),
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_verify_residuals(cfg):
    out_dir, manifest = _start(cfg, "verify-residuals")
    params = _flow_params(cfg)
    grid = make_grid(cfg.get("grid.n_modes"), cfg.get("grid.box_length"))
    t = cfg.get("verify.time")
    tol = cfg.get("tol.residual")

    flow = taylor_green(params.nu, rho=params.rho)
    reports = momentum_residual(
        flow.velocity(grid, t),
        flow.pressure_field(grid, t),
        params,
        flow.velocity_rate(grid, t),
        t=t,
    )
    rows = [r.csv_row() for r in reports.reports()]
    csv_path = os.path.join(out_dir, "residuals.csv")
    write_csv(csv_path, CSV_HEADER, rows)
    manifest.add_file(csv_path, out_dir)
    for r in reports.reports():
        manifest.add_check(f"residual_{r.name}_l2", r.l2 <= tol, r.l2, tol)

    # spectral-substrate invariants on a seeded random field
    rng = np.random.default_rng(cfg.get("seed"))
    vals = rng.standard_normal((grid.n_modes,) * 3)
    f = ScalarField(grid, vals)
    back = to_physical(to_spectral(f))
    rt = float(np.max(np.abs(back.values - vals)) / np.max(np.abs(vals)))
    manifest.add_check("transform_round_trip", rt <= 1e-12, rt, 1e-12)
    spec = to_spectral(f)
    parseval = abs(
        norm(f, 2) - float(np.sqrt(grid.edge**3 * np.sum(np.abs(spec.values) ** 2)))
    ) / norm(f, 2)
    manifest.add_check("parseval", parseval <= 1e-12, parseval, 1e-12)
    zero_mean = ScalarField(grid, vals - np.mean(vals))
    pois = solve_poisson(laplacian(zero_mean))
    pois_err = norm(ScalarField(grid, pois.values - zero_mean.values), 2) / norm(
        zero_mean, 2
    )
    manifest.add_check("poisson_inverse", pois_err <= 1e-11, pois_err, 1e-11)
    # band-limit before taking the gradient: the per-axis Nyquist zeroing of
    # odd-order derivatives would otherwise break the exact-gradient structure
    smooth = to_physical(
        ScalarField(grid, to_spectral(zero_mean).values * grid.dealias_mask, "spectral")
    )
    v = gradient(smooth)
    lp = leray_project(v)
    leray_err = norm(lp, np.inf) / max(norm(v, np.inf), 1e-300)
    manifest.add_check("leray_annihilates_gradient", leray_err <= 1e-12, leray_err, 1e-12)

    if cfg.get("plots.enabled"):
        from . import figures

        png = figures.residual_bars(
            list(reports.reports()), os.path.join(out_dir, "residuals.png")
        )
        manifest.add_file(png, out_dir)
    return _finish(manifest, out_dir)


def cmd_run_dns(cfg):
    out_dir, manifest = _start(cfg, "run-dns")
    params = _flow_params(cfg)
    grid = make_grid(cfg.get("grid.n_modes"), cfg.get("grid.box_length"))
    initial = cfg.get("solver.initial")
    if initial == "taylor-green":
        flow = taylor_green(params.nu, rho=params.rho)
        u0 = flow.velocity(grid, 0.0)
    else:
        u0 = random_divergence_free(grid, seed=cfg.get("seed"))
    state = dns_init(
        u0,
        params,
        dt=cfg.get("solver.dt"),
        cfl_limit=cfg.get("solver.cfl_limit"),
        vorticity_ceiling=cfg.get("solver.vorticity_ceiling"),
    )
    t_end = cfg.get("solver.t_end")
    dump_interval = cfg.get("dump.interval")
    dumped = []

    def observer(s):
        if dump_interval <= 0:
            return
        k = round(s.t / dump_interval)
        if abs(s.t - k * dump_interval) < 1e-9 and s.t > 0:
            phys = to_physical(s.u)
            for comp, label in zip(phys.components(), ("ux", "uy", "uz")):
                path = os.path.join(out_dir, f"snapshot_{label}_{k:04d}.pnsf")
                write_field(path, comp, s.t, f"{label}")
                dumped.append(path)

    diverged = None
    try:
        state, series = dns_run(
            state,
            t_end,
            sample_interval=cfg.get("solver.sample_interval"),
            observer=observer,
        )
    except DivergenceError as err:
        diverged = err
        series = None

    if diverged is not None:
        manifest.add_check(
            "run_completed", False, value=float(diverged.t)
        )
        print(f"divergence at t={diverged.t:.6g}: {diverged}", file=sys.stderr)
        if diverged.bkm_integral is not None:
            print(f"BKM integral at halt: {diverged.bkm_integral:.6e}", file=sys.stderr)
        return _finish(manifest, out_dir)

    csv_path = os.path.join(out_dir, "diagnostics.csv")
    write_csv(csv_path, list(series.CSV_HEADER), series.rows())
    manifest.add_file(csv_path, out_dir)
    for path in dumped:
        manifest.add_file(path, out_dir)
    manifest.add_check("run_completed", True, value=state.t)
    if initial == "taylor-green":
        ratio = series.energy[-1] / series.energy[0]
        exact = float(np.exp(-4.0 * params.nu * state.t))
        err = abs(ratio - exact)
        manifest.add_check(
            "energy_decay_matches_exponential", err <= cfg.get("tol.energy"),
            err, cfg.get("tol.energy"),
        )
    else:
        nonincreasing = bool(np.all(np.diff(series.energy) <= 1e-12))
        manifest.add_check("energy_nonincreasing", nonincreasing)
    final_div = norm(divergence(to_physical(state.u)), np.inf)
    urange = max(norm(to_physical(state.u), np.inf), 1e-300)
    manifest.add_check(
        "velocity_divergence_free", final_div <= 1e-11 * urange, final_div
    )
    if cfg.get("plots.enabled"):
        from . import figures

        png = figures.dns_diagnostics(series, os.path.join(out_dir, "diagnostics.png"))
        manifest.add_file(png, out_dir)
    return _finish(manifest, out_dir)


def cmd_blowup_report(cfg):
    out_dir, manifest = _start(cfg, "blowup-report")
    params = SixthRootParams(
        coeff=cfg.get("blowup.coeff"),
        t_star=cfg.get("blowup.t_star"),
        sign=cfg.get("blowup.sign"),
    )
    t_grid = np.linspace(0.0, cfg.get("blowup.t_max"), cfg.get("blowup.samples"))
    t_grid = t_grid[t_grid != params.t_star]
    header, rows = figure1_data(params, [0, 1, 2, 3], t_grid)
    curve_path = os.path.join(out_dir, "figure1.csv")
    write_csv(curve_path, header, rows)
    manifest.add_file(curve_path, out_dir)

    jobs = cfg.get("jobs")
    j_min, j_max = cfg.get("blowup.j_min"), cfg.get("blowup.j_max")
    orders = [0, 1, 2, 3]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            fits = list(
                pool.map(lambda m: fit_blowup_exponent(params, m, j_min, j_max), orders)
            )
    else:
        fits = [fit_blowup_exponent(params, m, j_min, j_max) for m in orders]
    fit_header = ["m", "fitted_slope", "expected_slope", "rel_error", "j_min", "j_max"]
    fit_rows = [
        [f.m, f.fitted_slope, f.expected_slope, f.rel_error, f.j_min, f.j_max]
        for f in fits
    ]
    fits_path = os.path.join(out_dir, "exponents.csv")
    write_csv(fits_path, fit_header, fit_rows)
    manifest.add_file(fits_path, out_dir)
    tol = cfg.get("tol.exponent")
    for f in fits:
        if f.m >= 1:
            manifest.add_check(
                f"exponent_fit_m{f.m}", f.rel_error <= tol, f.rel_error, tol
            )

    crosscheck = ode_crosscheck(params, 0.9)
    manifest.add_check(
        "ode_crosscheck", crosscheck.max_rel_deviation <= 1e-8,
        crosscheck.max_rel_deviation, 1e-8,
    )

    lg = LogisticParams(
        a=cfg.get("logistic.a"),
        a2=cfg.get("logistic.a2"),
        c1=cfg.get("logistic.c1"),
        epsilon=cfg.get("logistic.epsilon"),
    )
    t_root = logistic_blowup_time(lg)
    den = float(np.exp(-lg.a1 * t_root / lg.a2) * lg.c1 * lg.a1 + 2.0 * lg.a)
    lg_path = os.path.join(out_dir, "logistic.csv")
    write_csv(
        lg_path,
        ["a", "a1", "a2", "c1", "epsilon", "blowup_time", "denominator_at_root"],
        [[lg.a, lg.a1, lg.a2, lg.c1, lg.epsilon, t_root, den]],
    )
    manifest.add_file(lg_path, out_dir)
    manifest.add_check("logistic_denominator_root", abs(den) <= 1e-12, abs(den), 1e-12)

    if cfg.get("plots.enabled"):
        from . import figures

        png1 = figures.blowup_curves(
            header, rows, params.t_star, os.path.join(out_dir, "blowup_curves.png")
        )
        png2 = figures.exponent_fits(fits, os.path.join(out_dir, "exponent_fits.png"))
        manifest.add_file(png1, out_dir)
        manifest.add_file(png2, out_dir)
    return _finish(manifest, out_dir)


def cmd_inequality_report(cfg):
    out_dir, manifest = _start(cfg, "inequality-report")
    grid = make_grid(cfg.get("grid.n_modes"), cfg.get("grid.box_length"))
    p, n = cfg.get("hardy.p"), cfg.get("hardy.n")
    family = default_bump_family(grid)
    jobs = cfg.get("jobs")

    def check_one(item):
        idx, bump = item
        return hardy_check(bump, p, n, grid=grid, name=f"bump_{idx}")

    items = list(enumerate(family))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(check_one, items))
    else:
        reports = [check_one(it) for it in items]

    header = ["name", "p", "n", "lhs", "rhs", "constant", "satisfied", "margin"]
    rows = [
        [r.name, r.p, r.n, r.lhs, r.rhs, r.constant, r.satisfied, r.margin]
        for r in reports
    ]
    csv_path = os.path.join(out_dir, "inequality.csv")
    write_csv(csv_path, header, rows)
    manifest.add_file(csv_path, out_dir)
    for r in reports:
        manifest.add_check(f"{r.name}_satisfied", r.satisfied, r.margin)

    sw = sandwich_report(family[0], p, grid=grid)
    sw_path = os.path.join(out_dir, "sandwich.csv")
    write_csv(
        sw_path,
        ["p", "grad_term", "weighted_term", "first_clause", "middle_clause",
         "strict_clause", "chain_holds"],
        [[sw.p, sw.grad_term, sw.weighted_term, sw.first_clause, sw.middle_clause,
          sw.strict_clause, sw.chain_holds]],
    )
    manifest.add_file(sw_path, out_dir)

    if cfg.get("plots.enabled"):
        from . import figures

        png = figures.inequality_margins(
            reports, os.path.join(out_dir, "margins.png")
        )
        manifest.add_file(png, out_dir)
    return _finish(manifest, out_dir)


def cmd_wave_check(cfg):
    out_dir, manifest = _start(cfg, "wave-check")
    import sympy as sp

    from .families import T, X, Y, Z

    c = cfg.get("wave.c")
    params = WaveParams(c=c)
    rng = np.random.default_rng(cfg.get("seed"))
    n_samples = cfg.get("wave.samples")
    samples = [
        (*rng.uniform(0.2, 2.8, size=3), rng.uniform(0.0, 1.5))
        for _ in range(n_samples)
    ]

    omega = sp.sqrt(3 * sp.nsimplify(c, rational=True))
    u_dir = SymbolicField(sp.sin(X) * sp.sin(Y) * sp.sin(Z) * sp.cos(omega * T))
    u_z = SymbolicField(-sp.Rational(1, 3) * u_dir.expr)

    rand_z = SymbolicField("sin(x)*cos(y)*sin(z)*exp(t/2)")
    rand_dir = SymbolicField("cos(x)*sin(2*y)*cos(z)*exp(-t/3)")
    worst = 0.0
    for x, y, z, t in samples:
        q = quartic_time_residual(rand_z, rand_dir, params, (x, y, z), t)
        a = acceleration_residual(rand_z, rand_dir, params, (x, y, z), t)
        w = wave_residual(rand_dir, params, (x, y, z), t)
        scale = max(abs(q), abs(a), abs(c * w), 1.0)
        worst = max(worst, abs(q + a - c * w) / scale)
    manifest.add_check("sum_identity", worst <= 1e-12, worst, 1e-12)

    wave_tol = cfg.get("tol.wave")
    max_wave = max(
        abs(wave_residual(u_dir, params, (x, y, z), t)) for x, y, z, t in samples
    )
    manifest.add_check("manufactured_wave", max_wave <= wave_tol, max_wave, wave_tol)

    red_tol = cfg.get("tol.reduction")
    constructed = reduction_check(u_z, u_dir, params, samples, tol=red_tol)
    manifest.add_check(
        "reduction_implication",
        constructed.implication_holds and constructed.n_applicable == n_samples,
        float(constructed.max_wave),
    )
    unrelated = reduction_check(rand_z, rand_dir, params, samples, tol=red_tol)
    manifest.add_check(
        "unrelated_fields_not_claimed", unrelated.n_applicable == 0,
        float(unrelated.max_quartic),
    )

    rows = [
        ["sum_identity_max_rel", worst],
        ["manufactured_wave_max", max_wave],
        ["constructed_max_quartic", constructed.max_quartic],
        ["constructed_max_acceleration", constructed.max_acceleration],
        ["constructed_max_wave", constructed.max_wave],
        ["unrelated_max_quartic", unrelated.max_quartic],
        ["unrelated_applicable_points", float(unrelated.n_applicable)],
    ]
    csv_path = os.path.join(out_dir, "wave.csv")
    write_csv(csv_path, ["quantity", "value"], rows)
    manifest.add_file(csv_path, out_dir)

    if cfg.get("plots.enabled"):
        from . import figures

        png = figures.wave_residual_bars(
            rows[:6], os.path.join(out_dir, "wave.png")
        )
        manifest.add_file(png, out_dir)
    return _finish(manifest, out_dir)


def cmd_dump_fields(cfg):
    out_dir, manifest = _start(cfg, "dump-fields")
    grid = make_grid(cfg.get("grid.n_modes"), cfg.get("grid.box_length"))
    t = cfg.get("dump.time")
    family = cfg.get("dump.family")
    fields = {}
    if family == "taylor-green":
        params = _flow_params(cfg)
        flow = taylor_green(params.nu, rho=params.rho)
        u = flow.velocity(grid, t)
        fields = {
            "ux": u.x,
            "uy": u.y,
            "uz": u.z,
            "pressure": flow.pressure_field(grid, t),
        }
    elif family == "lattice":
        lat = LatticeFlowParams(
            cell_scale=cfg.get("lattice.cell_scale"), eta=cfg.get("lattice.eta")
        )
        for label, comp in (("ux", "x"), ("uy", "y")):
            fields[label] = sample_on_grid(
                LatticeVelocityField(lat, comp), grid, t
            )
    else:  # separable
        time_factor = SixthRootFamily(
            SixthRootParams(
                coeff=cfg.get("blowup.coeff"),
                t_star=cfg.get("blowup.t_star"),
                sign=cfg.get("blowup.sign"),
            )
        )
        spatial = SymbolicField(cfg.get("fields.spatial_factor"))
        fields["uz"] = sample_on_grid(
            separable_product(time_factor, spatial), grid, t
        )
    for label, field in fields.items():
        path = os.path.join(out_dir, f"{label}.pnsf")
        write_field(path, field, t, label)
        back, t_back, name_back = read_field(path)
        ok = (
            np.array_equal(back.values, field.values)
            and t_back == t
            and name_back == label
        )
        manifest.add_check(f"dump_round_trip_{label}", ok)
        manifest.add_file(path, out_dir)
    return _finish(manifest, out_dir)


COMMANDS = {
    "verify-residuals": cmd_verify_residuals,
    "run-dns": cmd_run_dns,
    "blowup-report": cmd_blowup_report,
    "inequality-report": cmd_inequality_report,
    "wave-check": cmd_wave_check,
    "dump-fields": cmd_dump_fields,
}


def main(argv=None):
    level = os.environ.get("PNS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        log.info("running %s (experiment %s)", args.command, cfg.get("experiment.name"))
        return COMMANDS[args.command](cfg)
    except StepRejectedError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except DivergenceError as err:
        print(f"divergence: {err}", file=sys.stderr)
        return 1
    except PnsError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
