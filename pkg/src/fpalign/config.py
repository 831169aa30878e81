"""Scenario configuration: JSON parsing, validation, defaults, round-trip.

One JSON document per run.  Unknown keys are rejected with their full path;
mode-conditional keys (epsilon_pen) must be present exactly when required.
The parsed result is an "effective" nested dict with every default
materialized, so emit -> parse round-trips to the identical document.
"""

from __future__ import annotations

import json
import math

from .errors import ConfigError
from .kernels import KERNEL_FAMILIES

COMMANDS = ("kinetic", "particles", "macro", "hydro-sweep")

_KERNEL_KEYS = {"family", "r0", "c0"}
_INIT_KINDS = ("maxwellian", "shifted_maxwellian", "modulated", "double_bump")
_PARTICLE_INIT_KINDS = ("uniform_random", "locked_pair")

_SCHEMAS = {
    "kinetic": {"domain", "velocity", "kernel", "sigma", "dt", "t_end",
                "report_every", "mode", "epsilon_pen", "init", "mass",
                "diagnostics", "snapshot_every", "output_dir"},
    "particles": {"domain", "kernel", "sigma", "dt", "t_end", "report_every",
                  "particles", "output_dir"},
    "macro": {"domain", "kernel", "dt", "t_end", "report_every", "macro",
              "snapshot_every", "output_dir"},
    "hydro-sweep": {"domain", "velocity", "kernel", "dt", "t_star", "eps_list",
                    "report_every", "sweep", "output_dir"},
}


def _require(cfg: dict, key: str, path: str):
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"missing required key {path}{key}")
    return cfg[key]


def _reject_unknown(d: dict, allowed, path: str):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown key {path}{k}")


def _positive(x, name):
    if not isinstance(x, (int, float)) or not x > 0:
        raise ConfigError(f"{name} must be a positive number, got {x!r}")
    return float(x)


def _nonneg(x, name):
    if not isinstance(x, (int, float)) or x < 0:
        raise ConfigError(f"{name} must be a nonnegative number, got {x!r}")
    return float(x)


def _int_at_least(x, lo, name):
    if not isinstance(x, int) or isinstance(x, bool) or x < lo:
        raise ConfigError(f"{name} must be an integer >= {lo}, got {x!r}")
    return x


def _domain(cfg: dict, need_nx: bool) -> dict:
    d = dict(_require(cfg, "domain", ""))
    allowed = {"length", "nx"} if need_nx else {"length"}
    _reject_unknown(d, allowed, "domain.")
    out = {"length": _positive(_require(d, "length", "domain."), "domain.length")}
    if need_nx:
        out["nx"] = _int_at_least(_require(d, "nx", "domain."), 4, "domain.nx")
    return out


def _velocity(cfg: dict) -> dict:
    v = dict(cfg.get("velocity") or {})
    _reject_unknown(v, {"vmax", "nv"}, "velocity.")
    nv = _int_at_least(_require(v, "nv", "velocity."), 8, "velocity.nv")
    if nv % 2:
        raise ConfigError(f"velocity.nv must be even, got {nv}")
    vmax = v.get("vmax")
    if vmax is not None:
        vmax = _positive(vmax, "velocity.vmax")
    return {"vmax": vmax, "nv": nv}


def _kernel(cfg: dict) -> dict:
    k = dict(_require(cfg, "kernel", ""))
    _reject_unknown(k, _KERNEL_KEYS, "kernel.")
    family = _require(k, "family", "kernel.")
    if family not in KERNEL_FAMILIES:
        raise ConfigError(f"kernel.family must be one of {KERNEL_FAMILIES}, got {family!r}")
    r0 = k.get("r0")
    if r0 is not None:
        r0 = _positive(r0, "kernel.r0")
    elif family != "global_uniform":
        raise ConfigError(f"kernel.r0 is required for family {family!r}")
    c0 = k.get("c0")
    if c0 is not None:
        c0 = _positive(c0, "kernel.c0")
    return {"family": family, "r0": r0, "c0": c0}


def _init(cfg: dict) -> dict:
    i = dict(_require(cfg, "init", ""))
    _reject_unknown(i, {"kind", "ubar", "amplitude", "wavenumber", "width"}, "init.")
    kind = _require(i, "kind", "init.")
    if kind not in _INIT_KINDS:
        raise ConfigError(f"init.kind must be one of {_INIT_KINDS}, got {kind!r}")
    out = {"kind": kind, "ubar": float(i.get("ubar", 0.0)),
           "amplitude": float(i.get("amplitude", 0.0)),
           "wavenumber": _int_at_least(i.get("wavenumber", 1), 1, "init.wavenumber"),
           "width": None if i.get("width") is None else _positive(i["width"], "init.width")}
    if kind == "shifted_maxwellian" and out["ubar"] == 0.0:
        raise ConfigError("init.ubar must be nonzero for shifted_maxwellian")
    if kind == "modulated" and not abs(out["amplitude"]) < 1.0:
        raise ConfigError("init.amplitude must satisfy |a| < 1 for modulated data")
    return out


def parse_config(text: str, command: str) -> dict:
    """Validate a JSON scenario document and return the effective config."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown(raw, _SCHEMAS[command], "")

    out = {"command": command}
    out["kernel"] = _kernel(raw)
    out["report_every"] = _positive(raw.get("report_every", 0.05), "report_every")
    out["output_dir"] = raw.get("output_dir")
    out["dt"] = _positive(_require(raw, "dt", ""), "dt")

    if command == "kinetic":
        out["domain"] = _domain(raw, need_nx=True)
        out["velocity"] = _velocity(raw)
        out["sigma"] = _positive(_require(raw, "sigma", ""), "sigma")
        out["t_end"] = _positive(_require(raw, "t_end", ""), "t_end")
        mode = raw.get("mode", "plain")
        if mode not in ("plain", "penalized"):
            raise ConfigError(f"mode must be 'plain' or 'penalized', got {mode!r}")
        out["mode"] = mode
        if mode == "penalized":
            out["epsilon_pen"] = _positive(_require(raw, "epsilon_pen", ""), "epsilon_pen")
            if out["sigma"] != 1.0:
                raise ConfigError("penalized mode fixes sigma = 1.0 (unit temperature)")
        elif "epsilon_pen" in raw:
            raise ConfigError("epsilon_pen is only valid with mode 'penalized'")
        out["init"] = _init(raw)
        out["mass"] = (_positive(raw["mass"], "mass") if raw.get("mass") is not None
                       else out["domain"]["length"])
        diag = dict(raw.get("diagnostics") or {})
        _reject_unknown(diag, {"margin_r", "fit_window", "fit_column"}, "diagnostics.")
        margin_r = diag.get("margin_r")
        if margin_r is not None:
            margin_r = _positive(margin_r, "diagnostics.margin_r")
        fit_window = diag.get("fit_window")
        if fit_window is not None:
            if (not isinstance(fit_window, list) or len(fit_window) != 2
                    or not 0 <= fit_window[0] < fit_window[1] <= out["t_end"]):
                raise ConfigError("diagnostics.fit_window must be [a, b] inside [0, t_end]")
            fit_window = [float(fit_window[0]), float(fit_window[1])]
        out["diagnostics"] = {"margin_r": margin_r, "fit_window": fit_window,
                              "fit_column": diag.get("fit_column", "L1_to_maxwellian")}
        snap = raw.get("snapshot_every")
        out["snapshot_every"] = None if snap is None else _positive(snap, "snapshot_every")
        # Resolve the velocity truncation: ubar_bound + 8 sqrt(sigma) by default.
        if out["velocity"]["vmax"] is None:
            out["velocity"]["vmax"] = (abs(out["init"]["ubar"])
                                       + 8.0 * math.sqrt(out["sigma"]))

    elif command == "particles":
        out["domain"] = _domain(raw, need_nx=False)
        out["sigma"] = _nonneg(_require(raw, "sigma", ""), "sigma")
        out["t_end"] = _positive(_require(raw, "t_end", ""), "t_end")
        p = dict(_require(raw, "particles", ""))
        _reject_unknown(p, {"n_dim", "deposition_nodes", "seed", "init", "mass_total",
                            "kappa_mode"}, "particles.")
        kappa_mode = p.get("kappa_mode", "averaged")
        if kappa_mode not in ("averaged", "cucker_smale"):
            raise ConfigError("particles.kappa_mode must be 'averaged' or "
                              "'cucker_smale'")
        n_dim = _int_at_least(_require(p, "n_dim", "particles."), 1, "particles.n_dim")
        if n_dim > 2:
            raise ConfigError("particles.n_dim must be 1 or 2")
        init = dict(_require(p, "init", "particles."))
        _reject_unknown(init, {"kind", "n", "speed"}, "particles.init.")
        kind = _require(init, "kind", "particles.init.")
        if kind not in _PARTICLE_INIT_KINDS:
            raise ConfigError(
                f"particles.init.kind must be one of {_PARTICLE_INIT_KINDS}, got {kind!r}")
        if kind == "locked_pair" and n_dim != 2:
            raise ConfigError("locked_pair requires particles.n_dim = 2")
        n = init.get("n")
        if kind == "uniform_random":
            n = _int_at_least(_require(init, "n", "particles.init."), 2, "particles.init.n")
        out["particles"] = {
            "n_dim": n_dim,
            "deposition_nodes": _int_at_least(p.get("deposition_nodes", 64), 8,
                                              "particles.deposition_nodes"),
            "seed": _int_at_least(_require(p, "seed", "particles."), 0, "particles.seed"),
            "mass_total": _positive(p.get("mass_total", 1.0), "particles.mass_total"),
            "kappa_mode": kappa_mode,
            "init": {"kind": kind, "n": n, "speed": _positive(init.get("speed", 1.0),
                                                              "particles.init.speed")},
        }

    elif command == "macro":
        out["domain"] = _domain(raw, need_nx=True)
        out["t_end"] = _positive(_require(raw, "t_end", ""), "t_end")
        m = dict(_require(raw, "macro", ""))
        _reject_unknown(m, {"mass", "rho_amplitude", "u_amplitude", "wavenumber"},
                        "macro.")
        amp = float(m.get("rho_amplitude", 0.0))
        if not abs(amp) < 1.0:
            raise ConfigError("macro.rho_amplitude must satisfy |a| < 1")
        out["macro"] = {
            "mass": (_positive(m["mass"], "macro.mass") if m.get("mass") is not None
                     else out["domain"]["length"]),
            "rho_amplitude": amp,
            "u_amplitude": float(m.get("u_amplitude", 0.0)),
            "wavenumber": _int_at_least(m.get("wavenumber", 1), 1, "macro.wavenumber"),
        }
        snap = raw.get("snapshot_every")
        out["snapshot_every"] = None if snap is None else _positive(snap, "snapshot_every")

    else:  # hydro-sweep
        out["domain"] = _domain(raw, need_nx=True)
        out["velocity"] = _velocity(raw)
        if out["kernel"]["family"] == "bump":
            raise ConfigError("hydro-sweep requires a global kernel family "
                              "(global_uniform or wrapped_gaussian)")
        out["t_star"] = _positive(_require(raw, "t_star", ""), "t_star")
        eps = _require(raw, "eps_list", "")
        if (not isinstance(eps, list) or len(eps) < 1
                or any(not isinstance(e, (int, float)) or not e > 0 for e in eps)):
            raise ConfigError("eps_list must be a nonempty list of positive numbers")
        out["eps_list"] = sorted((float(e) for e in eps), reverse=True)
        s = dict(_require(raw, "sweep", ""))
        _reject_unknown(s, {"mass", "rho_amplitude", "u_amplitude", "wavenumber"},
                        "sweep.")
        amp = float(s.get("rho_amplitude", 0.0))
        if not abs(amp) < 1.0:
            raise ConfigError("sweep.rho_amplitude must satisfy |a| < 1")
        out["sweep"] = {
            "mass": (_positive(s["mass"], "sweep.mass") if s.get("mass") is not None
                     else out["domain"]["length"]),
            "rho_amplitude": amp,
            "u_amplitude": float(s.get("u_amplitude", 0.0)),
            "wavenumber": _int_at_least(s.get("wavenumber", 1), 1, "sweep.wavenumber"),
        }
        if out["velocity"]["vmax"] is None:
            out["velocity"]["vmax"] = abs(out["sweep"]["u_amplitude"]) + 0.5 + 8.0

    return out


def emit_config(cfg: dict) -> str:
    """Serialize an effective config; parse(emit(cfg)) == cfg."""
    doc = {k: v for k, v in cfg.items() if k != "command"}
    return json.dumps(doc, indent=2, sort_keys=True)


def reparse(cfg: dict) -> dict:
    return parse_config(emit_config(cfg), cfg["command"])
