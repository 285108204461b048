"""Command-line front end.

Subcommands: dispersion | analytic | propagate | design | sweep | materials.
Exit codes: 0 success, 1 configuration/validation error, 2 physics/numerics
error. Outputs are deterministic: identical config and tool version give
byte-identical CSV/JSON files, regardless of --jobs. Every output embeds the
SHA-256 of the raw config file. CSV files carry two comment lines
("# schema=...", "# config_sha256=..."), then the header row; floats are
written with '%.10e'. Unless --no-plot is given, each report also renders a
PNG figure next to its CSV.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .core import (
    angular_frequency_to_wavelength,
    wavelength_to_angular_frequency,
)
from .cmt import (
    BraggScatteringSetup,
    conversion_efficiency,
    idler_frequencies,
    phase_matching_curve,
)
from .design import EMITTER_PRESETS, DesignTarget, design_for_sps
from .errors import PhysicsError, ValidationError
from .materials import default_material_db_path, load_material_db
from .modesolver import (
    PROFILE_CSV_COLUMNS,
    WaveguideGeometry,
    profile_csv_rows,
    propagation_constant_table,
    zero_dispersion_wavelengths,
)
from .ssfm import GridPolicy, bs_conversion_experiment

MATERIALS_ENV_VAR = "FWMBS_MATERIALS"
SPECTRUM_FLOOR_REL = 1e-16  # keep spectrum bins within 160 dB of the peak


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10e}"
    return str(value)


def _write_csv(path: Path, schema: str, sha256: str, columns, rows):
    lines = [f"# schema={schema}/1", f"# config_sha256={sha256}",
             ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _summary(**kv):
    print(" ".join(f"{k}={v}" for k, v in kv.items()))


def _resolve_materials(args):
    if args.materials:
        return load_material_db(args.materials)
    env = os.environ.get(MATERIALS_ENV_VAR)
    if env:
        return load_material_db(env)
    return load_material_db(default_material_db_path())


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _geometry(cfg: RunConfig) -> WaveguideGeometry:
    g = cfg.section("geometry")
    return WaveguideGeometry(width=g["width"], height=g["height"],
                             core=g["core"], top_clad=g["top_clad"],
                             substrate=g["substrate"], length=g["length"])


def _auto_profile(db, cfg, geometry, omegas, margin):
    """Dispersion table covering the margin-expanded box around `omegas`,
    or the explicit [dispersion] section when present."""
    if cfg.has("dispersion"):
        dd = cfg.section("dispersion")
        return propagation_constant_table(
            db, geometry, (dd["lambda_min"], dd["lambda_max"]), dd["points"],
            dd["polarization"])
    om_mid = 0.5 * (max(omegas) + min(omegas))
    half = 0.5 * margin * (max(omegas) - min(omegas))
    pad = max(0.02 * om_mid, 1.2 * half / 256)
    lam_lo = angular_frequency_to_wavelength(om_mid + half + pad)
    lam_hi = angular_frequency_to_wavelength(om_mid - half - pad)
    return propagation_constant_table(db, geometry, (lam_lo, lam_hi), 256)


def _bragg_setup(cfg: RunConfig, profile) -> BraggScatteringSetup:
    b = cfg.section("bragg")
    om_p1 = wavelength_to_angular_frequency(b["pump1"])
    om_p2 = wavelength_to_angular_frequency(b["pump2"])
    om_s = wavelength_to_angular_frequency(b["signal"])
    return BraggScatteringSetup(
        omega_p1=om_p1, omega_p2=om_p2, omega_s=om_s,
        p1=b["p1"], p2=b["p2"],
        gamma1=profile.gamma_at(om_p1), gamma2=profile.gamma_at(om_p2),
        profile=profile, length=profile.geometry.length,
        signal_power=b["signal_power"],
    )


def _grid_policy(cfg: RunConfig) -> GridPolicy:
    if not cfg.has("propagation"):
        return GridPolicy()
    p = cfg.section("propagation")
    return GridPolicy(margin_factor=p["margin"], step=p["step"],
                      loss_db_per_m=p["loss"])


def cmd_dispersion(args) -> int:
    cfg = load_config(args.config)
    db = _resolve_materials(args)
    geometry = _geometry(cfg)
    d = cfg.section("dispersion")
    profile = propagation_constant_table(
        db, geometry, (d["lambda_min"], d["lambda_max"]), d["points"],
        d["polarization"])
    zdw = zero_dispersion_wavelengths(profile)
    out = _out_dir(args)
    csv_path = out / "dispersion.csv"
    _write_csv(csv_path, "fwmbs.dispersion", cfg.sha256, PROFILE_CSV_COLUMNS,
               profile_csv_rows(profile))
    if not args.no_plot:
        from . import plotting
        rows = np.array(list(profile_csv_rows(profile)))
        plotting.plot_dispersion(rows[:, 0], rows[:, 5], [z * 1e9 for z in zdw],
                                 out / "dispersion.png", cfg.sha256)
    _summary(status="ok", zdw_count=len(zdw),
             zdw_nm=",".join(f"{z * 1e9:.2f}" for z in zdw) or "none",
             csv=csv_path)
    return 0


def cmd_analytic(args) -> int:
    cfg = load_config(args.config)
    db = _resolve_materials(args)
    geometry = _geometry(cfg)
    b = cfg.section("bragg")
    lam_lo = b.get("sweep_min") or b["signal"]
    lam_hi = b.get("sweep_max") or b["signal"]
    om_edges = [wavelength_to_angular_frequency(l)
                for l in (b["pump1"], b["pump2"], lam_lo, lam_hi)]
    om_edges += list(idler_frequencies(om_edges[0], om_edges[1], om_edges[2]))
    om_edges += list(idler_frequencies(om_edges[0], om_edges[1], om_edges[3]))
    profile = _auto_profile(db, cfg, geometry, om_edges, margin=1.1)
    setup = _bragg_setup(cfg, profile)

    res = conversion_efficiency(setup, b["branch"])
    if b.get("sweep_min") is not None and b.get("sweep_max") is not None:
        n = b["sweep_points"]
        lam_sweep = np.linspace(b["sweep_min"], b["sweep_max"], n)
        omega_sweep = wavelength_to_angular_frequency(lam_sweep)
    else:
        omega_sweep = np.array([setup.omega_s])
    curve = phase_matching_curve(setup, omega_sweep, b["branch"])

    out = _out_dir(args)
    csv_path = out / "analytic.csv"
    lam_s_nm = angular_frequency_to_wavelength(curve.omega_s) * 1e9
    lam_i_nm = angular_frequency_to_wavelength(curve.omega_i) * 1e9
    eta_db = np.where(curve.eta_norm > 0, 10.0 * np.log10(
        np.where(curve.eta_norm > 0, curve.eta_norm, 1.0)), -math.inf)
    rows = zip(lam_s_nm, lam_i_nm, curve.kappa, curve.eta_norm, eta_db)
    _write_csv(csv_path, "fwmbs.analytic", cfg.sha256,
               ("lambda_s_nm", "lambda_i_nm", "kappa_rad_m", "eta", "eta_db"),
               rows)
    _write_json(out / "analytic.json", {
        "schema": "fwmbs.analytic_summary",
        "schema_version": 1,
        "tool_version": __version__,
        "config_sha256": cfg.sha256,
        "branch": b["branch"],
        "eta": res.eta,
        "eta_db": res.eta_db if res.eta > 0 else None,
        "kappa_rad_m": res.mismatch.total,
        "kappa_linear_rad_m": res.mismatch.linear,
        "kappa_nonlinear_rad_m": res.mismatch.nonlinear,
        "g_rad_m": res.g,
        "lambda_s_nm": b["signal"] * 1e9,
        "lambda_i_nm": angular_frequency_to_wavelength(res.idler_omega) * 1e9,
        "curve_points": int(curve.omega_s.size),
    })
    if not args.no_plot:
        from . import plotting
        plotting.plot_phase_matching_curve(lam_i_nm, curve.eta_norm,
                                           out / "analytic.png", cfg.sha256)
    _summary(status="ok", branch=b["branch"], eta=f"{res.eta:.6e}",
             kappa_rad_m=f"{res.mismatch.total:.6e}", csv=csv_path)
    return 0


def _experiment_manifest(cfg: RunConfig, setup, policy, result) -> dict:
    lam_i_p = angular_frequency_to_wavelength(result.omega_i_plus)
    lam_i_m = angular_frequency_to_wavelength(result.omega_i_minus)
    g = setup.profile.geometry
    return {
        "schema": "fwmbs.run_manifest",
        "schema_version": 1,
        "tool_version": __version__,
        "config_sha256": cfg.sha256,
        "inputs": {
            "geometry": {
                "width_nm": g.width * 1e9,
                "height_nm": g.height * 1e9,
                "length_mm": g.length * 1e3,
                "core": g.core,
                "top_clad": g.top_clad,
                "substrate": g.substrate,
            },
            "pump1_omega_rad_s": setup.omega_p1,
            "pump2_omega_rad_s": setup.omega_p2,
            "signal_omega_rad_s": setup.omega_s,
            "p1_w": setup.p1,
            "p2_w": setup.p2,
            "signal_power_w": result.signal_power,
            "gamma1_w_m": setup.gamma1,
            "gamma2_w_m": setup.gamma2,
            "margin_factor": policy.margin_factor,
            "loss_db_per_m": policy.loss_db_per_m,
        },
        "grid": {
            "n_points": result.grid.n_points,
            "time_window_s": result.grid.time_window,
            "carrier_omega_rad_s": result.grid.carrier_omega,
            "bin_spacing_rad_s": result.grid.domega,
            "snap_rel_errors": list(result.snap_errors),
        },
        "run": {
            "steps": result.log.steps,
            "step_m": result.log.step,
            "max_nonlinear_phase_rad": result.log.max_nonlinear_phase,
            "conservation_error": result.log.conservation_error,
            "max_out_of_band_fraction": result.log.max_out_of_band_fraction,
        },
        "results": {
            "eta_plus": result.eta_plus,
            "eta_minus": result.eta_minus,
            "eta_plus_db": 10 * math.log10(result.eta_plus) if result.eta_plus > 0 else None,
            "eta_minus_db": 10 * math.log10(result.eta_minus) if result.eta_minus > 0 else None,
            "lambda_i_plus_nm": lam_i_p * 1e9,
            "lambda_i_minus_nm": lam_i_m * 1e9,
        },
    }


def _spectrum_rows(result):
    power = result.field.spectrum_power()
    omegas = result.grid.omegas()
    peak = power.max()
    keep = power >= max(peak * SPECTRUM_FLOOR_REL, 1e-300)
    lam_nm = angular_frequency_to_wavelength(omegas[keep]) * 1e9
    p_w = power[keep]
    order = np.argsort(lam_nm)
    lam_nm, p_w = lam_nm[order], p_w[order]
    p_dbm = 10.0 * np.log10(p_w / 1e-3)
    return zip(lam_nm, p_w, p_dbm)


def _run_experiment(cfg: RunConfig, db):
    geometry = _geometry(cfg)
    b = cfg.section("bragg")
    omegas = [wavelength_to_angular_frequency(l)
              for l in (b["pump1"], b["pump2"], b["signal"])]
    policy = _grid_policy(cfg)
    profile = _auto_profile(db, cfg, geometry, omegas, policy.margin_factor)
    setup = _bragg_setup(cfg, profile)
    result = bs_conversion_experiment(setup, policy)
    return setup, policy, result


def cmd_propagate(args) -> int:
    cfg = load_config(args.config)
    db = _resolve_materials(args)
    setup, policy, result = _run_experiment(cfg, db)
    out = _out_dir(args)
    manifest = _experiment_manifest(cfg, setup, policy, result)
    _write_json(out / "manifest.json", manifest)
    csv_path = out / "spectrum.csv"
    rows = list(_spectrum_rows(result))
    _write_csv(csv_path, "fwmbs.spectrum", cfg.sha256,
               ("lambda_nm", "power_w", "power_dbm"), rows)
    if not args.no_plot:
        from . import plotting
        arr = np.array(rows, dtype=float)
        plotting.plot_spectrum(arr[:, 0], arr[:, 2], out / "spectrum.png",
                               cfg.sha256)
    _summary(status="ok",
             eta_plus=f"{result.eta_plus:.6e}",
             eta_minus=f"{result.eta_minus:.6e}",
             conservation_error=f"{result.log.conservation_error:.3e}",
             manifest=out / "manifest.json")
    return 0


def cmd_design(args) -> int:
    db = _resolve_materials(args)
    if args.config:
        cfg = load_config(args.config)
        d = cfg.section("design")
        sha = cfg.sha256
        if d["emitter"] is not None:
            lam_sps = _emitter_wavelength(d["emitter"])
        else:
            lam_sps = d["lambda_sps"]
        target = DesignTarget(
            lambda_sps=lam_sps, lambda_telecom=d["lambda_telecom"],
            height=d["height"], length=d["length"],
            eta_target=d["eta_target"], pump_offset=d["pump_offset"],
        )
        power_cap, refine = d["power_cap"], d["refine"]
    else:
        if not args.emitter:
            raise ValidationError(
                "design needs --emitter or a config with a [design] section; "
                f"presets: {sorted(EMITTER_PRESETS)}"
            )
        lam_sps = _emitter_wavelength(args.emitter)
        target = DesignTarget(lambda_sps=lam_sps, eta_target=args.eta_target)
        power_cap, refine = args.power_cap, not args.no_refine
        sha = "none"

    report = design_for_sps(db, target, power_cap=power_cap, refine=refine)
    out = _out_dir(args)
    (out / "design.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out / "design.txt").write_text(report.to_text_table() + "\n", encoding="utf-8")
    if not args.no_plot:
        from . import plotting
        geometry = WaveguideGeometry(width=report.width, height=target.height,
                                     length=target.length)
        lo = 0.8 * target.zdw_target
        hi = min(1.6 * target.zdw_target, 1.15 * target.lambda_telecom)
        profile = propagation_constant_table(db, geometry, (lo, hi), 160)
        rows = np.array(list(profile_csv_rows(profile)))
        zdw = zero_dispersion_wavelengths(profile)
        plotting.plot_dispersion(rows[:, 0], rows[:, 5],
                                 [z * 1e9 for z in zdw],
                                 out / "design.png", sha)
    _summary(status="ok", width_nm=f"{report.width * 1e9:.1f}",
             zdw_nm=f"{report.lambda_zdw * 1e9:.2f}",
             pump_power_analytic_w=f"{report.pump_power_analytic:.3f}",
             pump_power_ssfm_w=("none" if report.pump_power_ssfm is None
                                else f"{report.pump_power_ssfm:.3f}"),
             warnings=len(report.warnings),
             json=out / "design.json")
    return 0


def _emitter_wavelength(name: str) -> float:
    if name not in EMITTER_PRESETS:
        raise ValidationError(
            f"unknown emitter {name!r}; presets: {sorted(EMITTER_PRESETS)}"
        )
    return EMITTER_PRESETS[name]


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    db = _resolve_materials(args)
    sw = cfg.section("sweep")
    axis, n = sw["axis"], sw["points"]
    values = np.linspace(sw["start"], sw["stop"], n)
    values = np.sort(values)

    geometry = _geometry(cfg)
    b = cfg.section("bragg")
    policy = _grid_policy(cfg)

    def one_point(value: float):
        geom = geometry
        bragg = dict(b)
        if axis == "pump_power":
            bragg["p1"] = bragg["p2"] = float(value)
        elif axis == "signal_lambda":
            bragg["signal"] = float(value)
        elif axis == "width":
            geom = replace(geometry, width=float(value))
        omegas = [wavelength_to_angular_frequency(l)
                  for l in (bragg["pump1"], bragg["pump2"], bragg["signal"])]
        profile = _auto_profile(db, cfg, geom, omegas, policy.margin_factor)
        om_p1 = wavelength_to_angular_frequency(bragg["pump1"])
        om_p2 = wavelength_to_angular_frequency(bragg["pump2"])
        om_s = wavelength_to_angular_frequency(bragg["signal"])
        setup = BraggScatteringSetup(
            omega_p1=om_p1, omega_p2=om_p2, omega_s=om_s,
            p1=bragg["p1"], p2=bragg["p2"],
            gamma1=profile.gamma_at(om_p1), gamma2=profile.gamma_at(om_p2),
            profile=profile, length=geom.length,
            signal_power=bragg["signal_power"],
        )
        result = bs_conversion_experiment(setup, policy)
        return setup, result

    jobs = max(1, args.jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        outcomes = list(pool.map(one_point, values))

    out = _out_dir(args)
    axis_col = {"pump_power": "pump_power_w", "signal_lambda": "signal_lambda_nm",
                "width": "width_nm"}[axis]
    scale = 1.0 if axis == "pump_power" else 1e9
    rows = []
    for i, (value, (setup, result)) in enumerate(zip(values, outcomes)):
        _write_json(out / f"point_{i:03d}.json",
                    _experiment_manifest(cfg, setup, policy, result))
        rows.append((
            value * scale, result.eta_plus, result.eta_minus,
            10 * math.log10(result.eta_plus) if result.eta_plus > 0 else -math.inf,
            10 * math.log10(result.eta_minus) if result.eta_minus > 0 else -math.inf,
            result.log.conservation_error,
        ))
    csv_path = out / "sweep.csv"
    _write_csv(csv_path, "fwmbs.sweep", cfg.sha256,
               (axis_col, "eta_plus", "eta_minus", "eta_plus_db",
                "eta_minus_db", "conservation_error"), rows)
    if not args.no_plot:
        from . import plotting
        arr = np.array(rows, dtype=float)
        plotting.plot_sweep(arr[:, 0], arr[:, 1], arr[:, 2], axis_col,
                            out / "sweep.png", cfg.sha256)
    _summary(status="ok", axis=axis, points=n, csv=csv_path)
    return 0


def cmd_materials(args) -> int:
    if args.materials:
        path = Path(args.materials)
    else:
        env = os.environ.get(MATERIALS_ENV_VAR)
        path = Path(env) if env else default_material_db_path()
    db = load_material_db(path)
    print(f"# material database: {path}")
    for name in db.names():
        model = db.get(name)
        kind = "sellmeier" if hasattr(model, "b") else "constant"
        lo, hi = model.range_m
        extra = (f"terms={len(model.b)}" if kind == "sellmeier"
                 else f"n={model.n:g}")
        print(f"{name} kind={kind} range_nm=[{lo * 1e9:.0f}, {hi * 1e9:.0f}] {extra}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fwmbs",
        description="Frequency conversion by four-wave-mixing Bragg scattering "
                    "in Si3N4 waveguides",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="run configuration file")
        p.add_argument("--materials", help="material database file "
                       f"(default: ${MATERIALS_ENV_VAR} or the bundled one)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel sweep workers")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; no stochastic paths exist")
        p.add_argument("--no-plot", action="store_true",
                       help="skip PNG figure rendering")

    p = sub.add_parser("dispersion", help="dispersion table + ZDW")
    common(p)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("analytic", help="coupled-mode conversion curve")
    common(p)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("propagate", help="one split-step run")
    common(p)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("design", help="inverse design for an emitter")
    common(p, config_required=False)
    p.add_argument("--emitter", help=f"preset: {sorted(EMITTER_PRESETS)}")
    p.add_argument("--eta-target", type=float, default=0.25)
    p.add_argument("--power-cap", type=float, default=50.0)
    p.add_argument("--no-refine", action="store_true",
                   help="skip the split-step power sweep")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("sweep", help="parameter sweep (config [sweep] section)")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("materials", help="list/validate the material database")
    p.add_argument("--materials", help="material database file")
    p.set_defaults(func=cmd_materials)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PhysicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
