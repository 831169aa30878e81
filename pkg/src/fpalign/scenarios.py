"""Experiment orchestration: build runs from configs, write outputs, grade monitors.

Every scenario writes `effective_config.json`, `timeseries.csv`, optional
periodic snapshots, and `summary.json` with a pass/fail entry per invariant
monitor.  Floats are written with 17 significant digits so reruns with the
same config are byte-identical.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .config import emit_config
from .diagnostics import EntropyReport, fit_decay_rate, hydro_report
from .errors import ConfigError
from .grids import TorusGrid, make_grids
from .kernels import KernelSpec, build_kernel, default_density_floor
from .kinetic import (InitAnsatz, KineticState, init_state, local_maxwellian,
                      run as kinetic_run)
from .macro import init_macro, macro_run
from .particles import (locked_pair_ensemble, run_particles,
                        uniform_random_ensemble)

EXIT_PASS = 0
EXIT_MONITOR = 2
EXIT_SOLVER = 3
EXIT_CONFIG = 4


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: str, columns, rows):
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")


def _clean(obj):
    """Make a summary JSON-safe: non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_summary(path: str, summary: dict):
    with open(path, "w") as fh:
        json.dump(_clean(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def monitor(value: float, threshold: float, sense: str = "le") -> dict:
    ok = value <= threshold if sense == "le" else value >= threshold
    return {"value": value, "threshold": threshold, "sense": sense,
            "pass": bool(ok)}


def write_kinetic_snapshot(path: str, grid, f):
    xs = grid.x.centers
    vs = grid.v.centers
    with open(path, "w") as fh:
        fh.write("x,v,f\n")
        for i in range(grid.x.nx):
            for j in range(grid.v.nv):
                fh.write(f"{fmt(xs[i])},{fmt(vs[j])},{fmt(f[i, j])}\n")


def write_macro_snapshot(path: str, grid: TorusGrid, rho, m):
    xs = grid.centers
    with open(path, "w") as fh:
        fh.write("x,rho,m\n")
        for i in range(grid.nx):
            fh.write(f"{fmt(xs[i])},{fmt(rho[i])},{fmt(m[i])}\n")


def write_ensemble(path: str, ens):
    cols = ["id", "m"] + [f"x{d + 1}" for d in range(ens.dim)] \
        + [f"v{d + 1}" for d in range(ens.dim)]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(ens.n):
            row = [str(i), fmt(ens.masses[i]),
                   *(fmt(x) for x in ens.positions[i]),
                   *(fmt(v) for v in ens.velocities[i])]
            fh.write(",".join(row) + "\n")


def build_kinetic(cfg: dict):
    """Grids, kernel, and initial state from an effective kinetic config."""
    grid = make_grids(cfg["domain"]["length"], cfg["domain"]["nx"],
                      cfg["velocity"]["vmax"], cfg["velocity"]["nv"])
    kern = build_kernel(KernelSpec(**cfg["kernel"]), grid.x)
    ic = cfg["init"]
    ansatz = InitAnsatz(kind=ic["kind"], ubar=ic["ubar"], amplitude=ic["amplitude"],
                        wavenumber=ic["wavenumber"], width=ic["width"])
    state = init_state(ansatz, grid, cfg["sigma"], cfg["mass"],
                       mode=cfg["mode"], eps_pen=cfg.get("epsilon_pen"))
    margin_r = cfg["diagnostics"]["margin_r"]
    if margin_r is None:
        margin_r = kern.r0 / 2.0
    return grid, kern, state, margin_r


def kinetic_monitors(reports: list[EntropyReport], mass: float, min_f: float,
                     kern, floor: float, t_end: float) -> dict:
    """Grade every run-level invariant monitor from the report series."""
    r0 = reports[0]
    mass_err = max(abs(r.mass - mass) for r in reports) / mass
    hier = min(min(r.E - r.Ecal, r.Ecal - r.Ephi, r.Ephi - r.Ephiphi, r.Ephiphi)
               for r in reports)
    align = max(abs(r.A_direct - r.A_double)
                / (1e-10 * max(abs(r.A_direct), abs(r.A_double))
                   + 1e-13 * max(r.Ephi, 1e-30))
                for r in reports)
    fisher = max(abs(r.fisher_identity_residual) / (r.Ivv0 + r.Ephi + 1.0)
                 for r in reports)
    pinsker = min(r.pinsker_slack for r in reports)
    ratios = [r.logsob_ratio for r in reports if r.H > 1e-10]
    logsob_min = min(ratios) if ratios else float("nan")
    e_bound = max(r.E for r in reports) - (r0.E + 2.0 * mass * t_end)
    out = {
        "mass_conservation": monitor(mass_err, 1e-12),
        "positivity": monitor(min_f, 0.0, "ge"),
        "energy_hierarchy": monitor(hier, -1e-12, "ge"),
        "alignment_identity": monitor(align, 1.0),
        "fisher_identity": monitor(fisher, 1e-8),
        "pinsker": monitor(pinsker, -1e-10, "ge"),
        "min_rho_phi": monitor(min(r.min_rho_phi for r in reports), floor, "ge"),
        "energy_bound": monitor(e_bound, 0.0),
    }
    if ratios:
        out["logsob_positive"] = monitor(logsob_min, 0.0, "ge")
    if kern.family in ("global_uniform", "wrapped_gaussian"):
        dH = max(reports[k + 1].H - reports[k].H for k in range(len(reports) - 1))
        out["entropy_monotone"] = monitor(dH, 1e-10)
    return out


def run_kinetic_scenario(cfg: dict, out_dir: str) -> int:
    grid, kern, state, margin_r = build_kinetic(cfg)
    ubar = cfg["init"]["ubar"]
    mass = cfg["mass"]
    floor = default_density_floor(mass, grid.x.length)
    res = kinetic_run(state, kern, cfg["t_end"], cfg["dt"], cfg["report_every"],
                      ubar=ubar, mass=mass, margin_r=margin_r, floor=floor,
                      snapshot_every=cfg["snapshot_every"])

    write_csv(os.path.join(out_dir, "timeseries.csv"), EntropyReport.CSV_COLUMNS,
              (r.csv_values() for r in res.reports))
    for k, (t, f) in enumerate(res.snapshots):
        write_kinetic_snapshot(os.path.join(out_dir, f"snapshot_{k:04d}.csv"), grid, f)
    write_kinetic_snapshot(os.path.join(out_dir, "snapshot_final.csv"), grid,
                           res.state.f)

    summary = {"command": "kinetic", "degeneracy": res.degeneracy, "fit": None}
    if res.degeneracy is not None:
        summary["monitors"] = {}
        summary["exit_code"] = EXIT_SOLVER
        write_summary(os.path.join(out_dir, "summary.json"), summary)
        return EXIT_SOLVER

    summary["monitors"] = kinetic_monitors(res.reports, mass,
                                           float(res.state.f.min()), kern, floor,
                                           cfg["t_end"])
    window = cfg["diagnostics"]["fit_window"]
    if window is None:
        window = [cfg["t_end"] / 2.0, cfg["t_end"]]
    col = cfg["diagnostics"]["fit_column"]
    ts = [r.t for r in res.reports]
    ys = [getattr(r, col) for r in res.reports]
    try:
        c1, c2, r2 = fit_decay_rate(ts, ys, window)
        summary["fit"] = {"column": col, "window": window, "c1": c1, "c2": c2,
                          "r2": r2}
    except ConfigError as err:
        summary["fit"] = {"column": col, "window": window, "error": str(err)}

    code = EXIT_PASS if all(m["pass"] for m in summary["monitors"].values()) \
        else EXIT_MONITOR
    summary["exit_code"] = code
    write_summary(os.path.join(out_dir, "summary.json"), summary)
    return code


def run_particles_scenario(cfg: dict, out_dir: str, seed_override=None) -> int:
    p = cfg["particles"]
    seed = seed_override if seed_override is not None else p["seed"]
    L = cfg["domain"]["length"]
    kf, kr0 = cfg["kernel"]["family"], cfg["kernel"]["r0"]
    if p["init"]["kind"] == "locked_pair":
        ens = locked_pair_ensemble(L, p["init"]["speed"], seed, p["mass_total"])
    else:
        ens = uniform_random_ensemble(p["init"]["n"], p["n_dim"], L, seed,
                                      p["init"]["speed"], p["mass_total"])
    p0 = ens.momentum().copy()
    var0 = ens.velocity_variance()
    diam0 = ens.velocity_diameter()
    series = run_particles(ens, kf, kr0, cfg["sigma"], cfg["dt"], cfg["t_end"],
                           cfg["report_every"], p["deposition_nodes"],
                           kappa_mode=p["kappa_mode"])

    write_csv(os.path.join(out_dir, "timeseries.csv"),
              series.csv_columns(ens.dim), series.csv_rows())
    write_ensemble(os.path.join(out_dir, "ensemble_final.csv"), ens)

    summary = {"command": "particles", "seed": seed,
               "initial": {"momentum": p0.tolist(), "velocity_variance": var0,
                           "v_diameter": diam0},
               "final": {"momentum": ens.momentum().tolist(),
                         "velocity_variance": series.velocity_variance[-1],
                         "v_diameter": series.v_diameter[-1]},
               "monitors": {}}
    if cfg["sigma"] == 0.0:
        drift = float(np.abs(series.momentum - p0[None, :]).max())
        scale = max(1.0, float(np.abs(p0).max()))
        summary["monitors"]["momentum_conservation"] = monitor(drift / scale, 1e-12)
        summary["misalignment_ratio"] = float(series.v_diameter[-1] / diam0) \
            if diam0 > 0 else 0.0
        summary["locked_state_persistent"] = bool(summary["misalignment_ratio"] >= 0.9)
    code = EXIT_PASS if all(m["pass"] for m in summary["monitors"].values()) \
        else EXIT_MONITOR
    summary["exit_code"] = code
    write_summary(os.path.join(out_dir, "summary.json"), summary)
    return code


def run_macro_scenario(cfg: dict, out_dir: str) -> int:
    grid = TorusGrid(cfg["domain"]["length"], cfg["domain"]["nx"])
    kern = build_kernel(KernelSpec(**cfg["kernel"]), grid)
    mc = cfg["macro"]
    state = init_macro(grid, mc["mass"], mc["rho_amplitude"], mc["u_amplitude"],
                       mc["wavenumber"])
    mass = state.mass
    umax = float(np.abs(state.u).max())
    res = macro_run(state, kern, cfg["t_end"], cfg["dt"], cfg["report_every"],
                    snapshot_every=cfg["snapshot_every"])

    from .macro import MacroReport
    write_csv(os.path.join(out_dir, "timeseries.csv"), MacroReport.CSV_COLUMNS,
              (r.csv_values() for r in res.reports))
    for k, (t, rho, m) in enumerate(res.snapshots):
        write_macro_snapshot(os.path.join(out_dir, f"snapshot_{k:04d}.csv"), grid,
                             rho, m)
    write_macro_snapshot(os.path.join(out_dir, "snapshot_final.csv"), grid,
                         res.state.rho, res.state.m)

    summary = {"command": "macro", "degeneracy": res.degeneracy}
    if res.degeneracy is not None:
        summary["monitors"] = {}
        summary["exit_code"] = EXIT_SOLVER
        write_summary(os.path.join(out_dir, "summary.json"), summary)
        return EXIT_SOLVER

    mom0 = res.reports[0].momentum
    mass_err = max(abs(r.mass - mass) for r in res.reports) / mass
    mom_err = max(abs(r.momentum - mom0) for r in res.reports)
    hier = min(min(r.Ecal - r.Ephi, r.Ephi - r.Ephiphi, r.Ephiphi)
               for r in res.reports)
    summary["monitors"] = {
        "mass_conservation": monitor(mass_err, 1e-13),
        "momentum_conservation": monitor(mom_err,
                                         1e-10 * mass * max(umax, 1.0) * cfg["t_end"]),
        "energy_hierarchy": monitor(hier, -1e-12, "ge"),
    }
    code = EXIT_PASS if all(m["pass"] for m in summary["monitors"].values()) \
        else EXIT_MONITOR
    summary["exit_code"] = code
    write_summary(os.path.join(out_dir, "summary.json"), summary)
    return code


def run_hydro_sweep(cfg: dict, out_dir: str, eps_override=None) -> int:
    """The penalized-relaxation sweep against one macro reference solution."""
    eps_list = sorted((float(e) for e in (eps_override or cfg["eps_list"])),
                      reverse=True)
    L, nx = cfg["domain"]["length"], cfg["domain"]["nx"]
    grid = make_grids(L, nx, cfg["velocity"]["vmax"], cfg["velocity"]["nv"])
    kern = build_kernel(KernelSpec(**cfg["kernel"]), grid.x)
    sw = cfg["sweep"]
    dt, t_star = cfg["dt"], cfg["t_star"]
    mass = sw["mass"]

    mstate = init_macro(grid.x, mass, sw["rho_amplitude"], sw["u_amplitude"],
                        sw["wavenumber"])
    mres = macro_run(mstate, kern, t_star, dt, cfg["report_every"], keep_states=True)
    if not mres.ok:
        summary = {"command": "hydro-sweep", "degeneracy": mres.degeneracy,
                   "exit_code": EXIT_SOLVER}
        write_summary(os.path.join(out_dir, "summary.json"), summary)
        return EXIT_SOLVER
    from .macro import MacroReport
    write_csv(os.path.join(out_dir, "macro_reference.csv"), MacroReport.CSV_COLUMNS,
              (r.csv_values() for r in mres.reports))

    from .kinetic import _exact_steps, step as kstep
    nsteps = _exact_steps(t_star, dt, "t_star")
    cadence = _exact_steps(cfg["report_every"], dt, "report_every")
    floor = default_density_floor(mass, L)

    table = []
    per_eps = {}
    for eps in eps_list:
        rho0, m0 = mres.states[0][1], mres.states[0][2]
        f0 = local_maxwellian(grid, rho0, m0 / rho0, 1.0)
        state = KineticState(grid=grid, f=f0, t=0.0, sigma=1.0, mode="penalized",
                             eps_pen=eps)
        reports = [hydro_report(state.f, rho0, m0, grid, eps, t=0.0)]
        for k in range(1, nsteps + 1):
            state = kstep(state, dt, kern, floor)
            if k % cadence == 0:
                _, rho_m, m_m = mres.states[k // cadence]
                reports.append(hydro_report(state.f, rho_m, m_m, grid, eps,
                                            t=state.t))
        from .diagnostics import HydroReport
        write_csv(os.path.join(out_dir, f"timeseries_eps_{fmt(eps)}.csv"),
                  HydroReport.CSV_COLUMNS, (r.csv_values() for r in reports))
        dh = max((reports[k + 1].H_eps - reports[k].H_eps)
                 / (reports[k + 1].t - reports[k].t)
                 for k in range(len(reports) - 1))
        per_eps[fmt(eps)] = {
            "H0": reports[0].H_rel,
            "max_dHeps_dt": dh,
            "max_decomp_residual": max(abs(r.decomp_residual)
                                       / (1.0 + r.H_rel) for r in reports),
        }
        last = reports[-1]
        table.append([eps, last.H_rel, last.l1_rho, last.l1_mom, last.reynolds_L1])

    write_csv(os.path.join(out_dir, "sweep_table.csv"),
              ["eps", "H_rel", "l1_rho", "l1_mom", "reynolds_L1"], table)

    cols = np.array([row[1:] for row in table])
    mono = {name: bool(np.all(np.diff(cols[:, i]) < 0.0))
            for i, name in enumerate(("H_rel", "l1_rho", "l1_mom", "reynolds_L1"))}
    summary = {
        "command": "hydro-sweep", "eps_list": eps_list, "t_star": t_star,
        "monotone_decreasing": mono, "per_eps": per_eps,
        "monitors": {
            "monotonicity": {"value": mono, "pass": all(mono.values())},
            "initial_closure": monitor(max(v["H0"] for v in per_eps.values()), 1e-8),
            "entropy_rate_bound": monitor(
                max(v["max_dHeps_dt"] for v in per_eps.values()), mass + 1e-6),
            "decomposition_identity": monitor(
                max(v["max_decomp_residual"] for v in per_eps.values()), 1e-10),
        },
    }
    code = EXIT_PASS if all(m["pass"] for m in summary["monitors"].values()) \
        else EXIT_MONITOR
    summary["exit_code"] = code
    write_summary(os.path.join(out_dir, "summary.json"), summary)
    return code


def run_scenario(cfg: dict, out_dir: str, seed_override=None, eps_override=None) -> int:
    """Dispatch on the config's command; returns the process exit code."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "effective_config.json"), "w") as fh:
        fh.write(emit_config(cfg) + "\n")
    cmd = cfg["command"]
    if cmd == "kinetic":
        return run_kinetic_scenario(cfg, out_dir)
    if cmd == "particles":
        return run_particles_scenario(cfg, out_dir, seed_override)
    if cmd == "macro":
        return run_macro_scenario(cfg, out_dir)
    if cmd == "hydro-sweep":
        return run_hydro_sweep(cfg, out_dir, eps_override)
    raise ConfigError(f"unknown command {cmd!r}")
