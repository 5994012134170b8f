"""Experiment runner: TOML config in, CSV tables + a run manifest out.

Subcommands: evolve, collision, continuum, moments, disc-study, talbot,
wick-verify.  Exit codes: 2 config parse error, 3 validation error, 4
numerical guard tripped.  Floats print with 17 significant digits; the
manifest re-runs to bit-identical CSVs.  BEC_KINETICS_THREADS caps the
worker count of row-parallel scans (default: all cores).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # py3.10
    import tomli as tomllib

from . import __version__
from .collision import KineticParams, q_mollified_d
from .continuum import HypersurfaceQuadrature, q_energy_conserving, q_mollified_vs_sharp
from .dispersion import DispersionContext, profile_from_name
from .evolution import DEFAULT_G_TERMS, evolve_F, evolve_G
from .lattice import MomentumLattice
from .quasifree import GeneratorK, bose_density_field, cumulant, number_moment
from .studies import gaussian_chi, oscillatory_disc_error, poisson_error_scan, talbot_scan
from .wick import duhamel_f_second_order, duhamel_g_second_order

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

SUBCOMMANDS = ("evolve", "collision", "continuum", "moments", "disc-study",
               "talbot", "wick-verify")

_REQUIRED_PHYSICS = ("lambda", "bigN", "T", "beta", "mu", "L", "cutoffM")

_NUMERICS_DEFAULTS = {
    "sGridCount": 32,
    "quad_nodes": 48,
    "picard_depth": 2,
    "with_subleading": False,
    "deterministic": True,
}


class ValidationError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def worker_count() -> int:
    cap = os.environ.get("BEC_KINETICS_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            raise ValueError(f"BEC_KINETICS_THREADS must be an integer, got {cap!r}")
    return n


def load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def resolve_config(raw: dict) -> dict:
    phys = dict(raw.get("physics", {}))
    for key in _REQUIRED_PHYSICS:
        if key not in phys:
            raise ValidationError(f"missing config key '{key}' in [physics]")
    phys.setdefault("profile", "gaussian_bump")
    phys.setdefault("profile_params", {"a": 1.0, "sigma": 1.0})
    num = dict(_NUMERICS_DEFAULTS)
    num.update(raw.get("numerics", {}))
    out = dict(raw.get("output", {}))
    out.setdefault("dir", ".")
    return {"physics": phys, "numerics": num, "output": out}


def build_objects(cfg: dict):
    phys = cfg["physics"]
    num = cfg["numerics"]
    lat = MomentumLattice(float(phys["L"]), int(phys["cutoffM"]))
    profile = profile_from_name(phys["profile"], **phys["profile_params"])
    ctx = DispersionContext(profile, float(phys["lambda"]))
    params = KineticParams(lam=float(phys["lambda"]), big_n=float(phys["bigN"]),
                           T=float(phys["T"]), s_grid_count=int(num["sGridCount"]))
    K = GeneratorK(beta=float(phys["beta"]), mu=float(phys["mu"]), lattice=lat)
    return lat, ctx, params, K


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return '"' + str(v).replace('"', '\\"') + '"'


def write_manifest(cfg: dict, subcommand: str, outdir: str):
    """Resolved config echoed as valid TOML plus a [run] metadata section."""
    lines = [f"# bec-kinetics run manifest", f"[run]",
             f'subcommand = "{subcommand}"', f'version = "{__version__}"', ""]
    for section in ("physics", "numerics", "output"):
        lines.append(f"[{section}]")
        for k, v in cfg[section].items():
            if isinstance(v, dict):
                continue
            lines.append(f"{k} = {_toml_value(v)}")
        for k, v in cfg[section].items():
            if isinstance(v, dict):
                lines.append(f"[{section}.{k}]")
                for kk, vv in v.items():
                    lines.append(f"{kk} = {_toml_value(vv)}")
        lines.append("")
    with open(os.path.join(outdir, "manifest.toml"), "w") as fh:
        fh.write("\n".join(lines))


def write_csv(path: str, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def guard_finite(*values):
    for v in values:
        arr = np.atleast_1d(np.asarray(v))
        if np.iscomplexobj(arr):
            ok = np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))
        else:
            ok = np.all(np.isfinite(arr))
        if not ok:
            raise FloatingPointError("non-finite value in results")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_evolve(cfg, outdir):
    lat, ctx, params, K = build_objects(cfg)
    f0 = bose_density_field(K, lat)
    num = cfg["numerics"]
    state = evolve_F(lat, ctx, params, f0, depth=int(num["picard_depth"]),
                     with_subleading=bool(num["with_subleading"]))
    guard_finite(state.F, state.psi)
    rows = [(params.T, z[0], z[1], z[2], F, state.psi.real, state.psi.imag)
            for z, F in zip(lat.zpoints, state.F)]
    write_csv(os.path.join(outdir, "evolution.csv"),
              ["T", "q_index_x", "q_index_y", "q_index_z", "F", "Psi_re", "Psi_im"],
              rows)


def cmd_collision(cfg, outdir):
    lat, ctx, params, K = build_objects(cfg)
    f0 = bose_density_field(K, lat)
    jv = np.zeros(lat.n_points)
    jv[lat.zero_index] = lat.volume
    s_nodes = np.linspace(0.0, params.T, int(cfg["numerics"]["sGridCount"]))
    rows = []
    for S in s_nodes:
        val = q_mollified_d(lat, ctx, params, f0, jv, S)
        guard_finite(val)
        rows.append((S, val))
    write_csv(os.path.join(outdir, "collision.csv"), ["S", "q_mollified"], rows)


def cmd_continuum(cfg, outdir):
    lat, ctx, params, K = build_objects(cfg)
    beta = float(cfg["physics"]["beta"])
    sigma = float(cfg["physics"]["profile_params"].get("sigma", 1.0))
    r_max = 8.0 * max(sigma, 1.0 / np.sqrt(beta))

    def f_eq(r):
        # mu = 0 equilibrium; radial grids exclude r = 0
        return 1.0 / np.expm1(beta * 0.5 * np.asarray(r, dtype=float) ** 2)

    def j_gauss(r):
        return np.exp(-np.asarray(r, dtype=float) ** 2 / 2.0)

    quad = HypersurfaceQuadrature(r_max=r_max)
    mol, sharp, gap = q_mollified_vs_sharp(ctx, params, f_eq, j_gauss,
                                           r_max=r_max, quad=quad)
    guard_finite(mol, sharp, gap)
    write_csv(os.path.join(outdir, "continuum.csv"), ["quantity", "value"],
              [("q_mollified_time_integral", mol),
               ("sharp_times_T", sharp),
               ("gap", gap)])


def cmd_moments(cfg, outdir):
    lat, ctx, params, K = build_objects(cfg)
    rows = []
    for n in range(1, 7):
        rows.append(("kappa", n, cumulant(K, lat, n)))
    for ell in range(1, 7):
        rows.append(("moment", ell, number_moment(K, lat, ell)))
    guard_finite([r[2] for r in rows])
    write_csv(os.path.join(outdir, "moments.csv"), ["kind", "order", "value"], rows)


def cmd_disc_study(cfg, outdir):
    lat, ctx, params, K = build_objects(cfg)
    chi = gaussian_chi(1.0)
    L_list = [1.0, 2.0, 4.0, 8.0]
    scan = poisson_error_scan(chi, L_list)
    osc = oscillatory_disc_error(ctx, chi.radial, "F1_F2", params.lam, params.T,
                                 L_list, reach=chi.cutoff)
    rows = [(L, pe, oe) for (L, pe), (_, oe) in zip(scan["rows"], osc["rows"])]
    write_csv(os.path.join(outdir, "disc_study.csv"),
              ["L", "poisson_error", "oscillatory_error"], rows)


def cmd_talbot(cfg, outdir):
    lat, ctx, params, K = build_objects(cfg)
    f0 = bose_density_field(K, lat)
    jv = np.zeros(lat.n_points)
    jv[lat.zero_index] = lat.volume
    T_grid = np.linspace(params.T / 200.0, params.T, 200)
    nw = worker_count()
    # rows are pure per-T evaluations; map them on a deterministic index order
    def row(T):
        sub = talbot_scan(lat, ctx, params, [T], jv, f0)
        return tuple(sub["rows"][0])
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            rows = list(ex.map(row, T_grid))
    else:
        rows = [row(T) for T in T_grid]
    guard_finite([r[1] for r in rows], [r[2] for r in rows])
    write_csv(os.path.join(outdir, "talbot.csv"),
              ["T", "q_moll_scaled", "sin2_sum"], rows)


def cmd_wick_verify(cfg, outdir):
    lat, ctx, params, K = build_objects(cfg)
    if lat.n_points > 27:
        raise ValidationError("wick-verify needs cutoffM = 1 (enumeration guard)")
    jv = np.zeros(lat.n_points)
    jv[lat.zero_index] = lat.volume
    total, boltz, cond = duhamel_f_second_order(lat, ctx, params, K, jv)
    gtotal, gboltz, gcond, gpa = duhamel_g_second_order(lat, ctx, params, K, jv)
    guard_finite(total, boltz, cond, gtotal, gboltz, gcond, gpa)
    write_csv(os.path.join(outdir, "wick.csv"), ["quantity", "re", "im"],
              [("f_total", total.real, total.imag),
               ("f_boltzmann", boltz.real, boltz.imag),
               ("f_condensate", cond.real, cond.imag),
               ("g_total", gtotal.real, gtotal.imag),
               ("g_boltzmann", gboltz.real, gboltz.imag),
               ("g_condensate", gcond.real, gcond.imag),
               ("g_pair_absorption", gpa.real, gpa.imag)])


_DISPATCH = {
    "evolve": cmd_evolve,
    "collision": cmd_collision,
    "continuum": cmd_continuum,
    "moments": cmd_moments,
    "disc-study": cmd_disc_study,
    "talbot": cmd_talbot,
    "wick-verify": cmd_wick_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bec-kinetics",
        description="Collision/absorption operators for BEC fluctuation kinetics")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="TOML config path")
    args = parser.parse_args(argv)

    try:
        raw = load_config(args.config)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"config parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    try:
        cfg = resolve_config(raw)
        outdir = cfg["output"]["dir"]
        os.makedirs(outdir, exist_ok=True)
        lat, ctx, params, K = build_objects(cfg)  # validates physics values
    except (ValidationError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        _DISPATCH[args.subcommand](cfg, outdir)
        write_manifest(cfg, args.subcommand, outdir)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical guard tripped: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
