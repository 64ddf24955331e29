"""Command-line interface: config-driven, deterministic tabular output.

Usage: covhopfield <command> <config.toml> [--natural-units]

Commands: validate, dispersion, diagonalize, norms, constraints, scatter,
sweep.  Every CSV starts with a comment line carrying the config hash and
the box-normalization convention, so runs are diffable experiment records.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import constraints as con
from . import modes, products, quanta, scattering
from .config import RunConfig
from .errors import ConfigError, NumericalFailure
from .kinematics import Boost
from .medium import MediumSpec

_DELTA_NOTE = "delta3(k-k') -> V kron(k,k')/(2pi)^3; delta3(x-y) -> kron/a^d"


def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path: Path, header: list, rows: list, cfg: RunConfig,
               extra_note: str = "") -> None:
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg.config_hash}; {_DELTA_NOTE}"
              f"{'; ' + extra_note if extra_note else ''}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    path.write_text(buf.getvalue())


def _write_json(path: Path, payload: dict, cfg: RunConfig) -> None:
    payload = {"config_hash": cfg.config_hash,
               "delta_convention": _DELTA_NOTE, **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _out_dir(cfg: RunConfig) -> Path:
    directory = os.environ.get("COVHOPFIELD_OUTPUT_DIR",
                               cfg.output_directory)
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _summary(name: str, residual: float, tol: float) -> bool:
    ok = residual <= tol
    print(f"{'PASS' if ok else 'FAIL'} {name}: residual={residual:.3e} "
          f"(tolerance {tol:.1e})")
    return ok


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_dispersion(cfg: RunConfig, natural_units: bool) -> int:
    m = cfg.rest_medium()
    if not m.is_homogeneous:
        m = MediumSpec(oscillators=m.oscillators, c=m.c)
    scale = 1.0 / m.c if natural_units else 1.0
    rows = []
    worst = 0.0
    labels: list = []
    for k in cfg.k_grid:
        samples = modes.dispersion_solve(m, float(k))
        by_label: dict = {}
        for s in samples:
            label = s.branch
            # several decoupled oscillators may share the pol-only label
            while label in by_label:
                label += "'"
            by_label[label] = s
            if label not in labels:
                labels.append(label)
        rows.append([k] + [by_label[lab].omega * scale for lab in labels]
                    + [max(s.residual for s in samples)])
        worst = max(worst, max(s.residual for s in samples))
    header = ["k"] + [f"omega_{lab}" for lab in labels] + ["residual"]
    _write_csv(_out_dir(cfg) / "dispersion.csv", header, rows, cfg,
               extra_note=f"c={m.c}")
    ok = _summary("dispersion residual", worst, cfg.bracket_tol)
    return 0 if ok else 3


def cmd_diagonalize(cfg: RunConfig, natural_units: bool) -> int:
    m = cfg.rest_medium()
    if not m.is_homogeneous:
        m = MediumSpec(oscillators=m.oscillators, c=m.c)
    scale = 1.0 / m.c if natural_units else 1.0
    rows = []
    worst = 0.0
    for k in cfg.k_grid:
        block = quanta.build_mode_hamiltonian(m, float(k))
        t = quanta.fano_diagonalize(block)
        res = max(t.symplectic_residual(), t.eigen_residual())
        worst = max(worst, res)
        coeffs = []
        for row in (t.matrix[0], t.matrix[len(t.frequencies) - 1]):
            for entry in row:
                coeffs.extend([entry.real, entry.imag])
        rows.append([k, t.omega_lower * scale, t.omega_upper * scale]
                    + coeffs + [res])
    ncoef = (len(rows[0]) - 4) // 2
    header = ["k", "omega_lower", "omega_upper"] \
        + [f"{b}_{i}_{p}" for b in ("lower", "upper")
           for i in range(ncoef // 2) for p in ("re", "im")] \
        + ["symplectic_residual"]
    _write_csv(_out_dir(cfg) / "diagonalize.csv", header, rows, cfg)
    ok = _summary("fano symplectic residual", worst, 1e-10)
    return 0 if ok else 3


def cmd_norms(cfg: RunConfig, natural_units: bool) -> int:
    m = cfg.rest_medium()
    hom = MediumSpec(oscillators=m.oscillators, c=m.c)
    grid = products.Grid(shape=(64,), spacing=2 * np.pi / 64, axes=(3,))
    length = grid.shape[0] * grid.spacing
    rows = []
    for i, spec in enumerate(cfg.mode_list):
        harmonic = max(1, round(spec["k"] * length / (2 * np.pi)))
        kvec = [0.0, 0.0, 2 * np.pi * harmonic / length]
        mode = modes.make_plane_wave(hom, kvec, spec["polarization"],
                                     spec["branch"])
        if spec.get("conjugate", False):
            mode = modes.conjugate_mode(mode)
        u = products.from_plane_waves(grid, [mode])
        norm = products.scalar_product_constrained(u, u, hom)
        rows.append([f"mode_{i}", norm.real, norm.imag,
                     products.classify_norm(u, hom)])
    _write_csv(_out_dir(cfg) / "norms.csv",
               ["mode_id", "norm_value_re", "norm_value_im",
                "classification"], rows, cfg)
    print(f"PASS norms: {len(rows)} modes classified")
    return 0


def cmd_constraints(cfg: RunConfig, natural_units: bool) -> int:
    m = cfg.rest_medium()
    hom = MediumSpec(oscillators=m.oscillators[:1], c=m.c)
    sites, spacing = cfg.lattice_shape
    system = con.LatticeSystem(
        con.LatticePhaseSpace(n_sites=sites, spacing=spacing), hom)
    chain = con.constraint_chain(system)
    table = con.dirac_table(system)
    opcheck = con.operator_constraint_check(system)
    C, C_inv = con.build_and_invert_C(system)
    payload = {
        "chain": chain.to_dict(),
        "dirac_table": table,
        "operator_constraints": opcheck,
        "c_matrix_inverse_residual": float(
            np.max(np.abs(C @ C_inv - np.eye(C.shape[0])))),
    }
    _write_json(_out_dir(cfg) / "constraints.json", payload, cfg)
    ok = _summary("constraint chain", chain.max_residual, 1e-10)
    ok &= _summary("dirac table", table["max_residual"], 1e-12)
    return 0 if ok else 3


def _scatter_rows(m, omega, ky, kz, tol):
    rows = []
    worst_pu = 0.0
    worst_drift = 0.0
    for sector in ("transverse-y", "transverse-z"):
        sol = scattering.solve_scattering(m, omega, ky, kz, sector=sector,
                                          tol=tol)
        drift = _solution_drift(m, omega, ky, kz, sol, tol)
        worst_pu = max(worst_pu, sol.pseudo_unitarity_residual)
        worst_drift = max(worst_drift, drift)
        for (j, i), amp in sorted(sol.alpha.items()):
            rows.append([omega, ky, kz, f"{sector}:{j}", f"{sector}:{i}",
                         amp.real, amp.imag, 0.0, 0.0,
                         sol.pseudo_unitarity_residual, drift])
        for (j, i), amp in sorted(sol.beta.items()):
            rows.append([omega, ky, kz, f"{sector}:{j}", f"{sector}:{i}",
                         0.0, 0.0, amp.real, amp.imag,
                         sol.pseudo_unitarity_residual, drift])
    return rows, worst_pu, worst_drift


def _solution_drift(m, omega, ky, kz, sol, tol) -> float:
    if not sol.raw_coefficients:
        return 0.0
    ch = sol.channels
    jin = sorted(sol.raw_coefficients)[0]
    side = sol.incident_sides[jin]
    W = ch[jin].vector.copy()
    for i, c in sol.raw_coefficients[jin].items():
        decay_right = not ch[i].propagating and ch[i].kx.imag > 0
        decay_left = not ch[i].propagating and ch[i].kx.imag < 0
        moving_back = ch[i].propagating and (
            ch[i].direction > 0 if side == "right" else ch[i].direction < 0)
        if (side == "right" and (decay_right or moving_back)) or \
                (side == "left" and (decay_left or moving_back)):
            W += c * ch[i].vector
    basis = scattering.classify_channels(m, omega, ky, kz)
    xl, xr = scattering.default_endpoints(m, basis, growth_cap=1e8)
    x0, x1 = (xr, xl) if side == "right" else (xl, xr)
    xs, states = scattering.propagate_state(m, omega, ky, kz, W, x0, x1,
                                            samples=17, tol=tol)
    return scattering.flux_conservation_check(m, omega, ky, kz, xs, states)


def _sweep_point(args):
    cfg_raw, omega, ky, kz, tol = args
    cfg = RunConfig.from_dict(cfg_raw)
    m = scattering.comoving_medium(cfg.rest_medium(),
                                   cfg.perturbation_velocity)
    return _scatter_rows(m, omega, ky, kz, tol)


_SCATTER_HEADER = ["omega_prime", "ky", "kz", "channel_in", "channel_out",
                   "alpha_re", "alpha_im", "beta_re", "beta_im",
                   "pseudo_unitarity_residual", "flux_drift"]


def cmd_scatter(cfg: RunConfig, natural_units: bool) -> int:
    m = scattering.comoving_medium(cfg.rest_medium(),
                                   cfg.perturbation_velocity)
    ky, kz = cfg.transverse_wavevector
    omega = cfg.omega_prime_values[0]
    rows, pu, drift = _scatter_rows(m, omega, ky, kz, cfg.integrator_tol)
    if natural_units:
        rows = [[r[0] / m.c] + r[1:] for r in rows]
    _write_csv(_out_dir(cfg) / "scatter.csv", _SCATTER_HEADER, rows, cfg)
    ok = _summary("pseudo-unitarity", pu, 1e-8)
    ok &= _summary("flux drift", drift, 1e-8)
    return 0 if ok else 3


def cmd_sweep(cfg: RunConfig, natural_units: bool) -> int:
    ky, kz = cfg.transverse_wavevector
    tasks = [(cfg.raw, float(om), ky, kz, cfg.integrator_tol)
             for om in cfg.omega_prime_values]
    results = []
    if cfg.max_workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.max_workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    rows = []
    worst_pu = worst_drift = 0.0
    for point_rows, pu, drift in results:
        rows.extend(point_rows)
        worst_pu = max(worst_pu, pu)
        worst_drift = max(worst_drift, drift)
    m = cfg.rest_medium()
    if natural_units:
        rows = [[r[0] / m.c] + r[1:] for r in rows]
    _write_csv(_out_dir(cfg) / "sweep.csv", _SCATTER_HEADER, rows, cfg)
    ok = _summary("sweep pseudo-unitarity", worst_pu, 1e-8)
    ok &= _summary("sweep flux drift", worst_drift, 1e-8)
    return 0 if ok else 3


def cmd_validate(cfg: RunConfig, natural_units: bool) -> int:
    m = cfg.rest_medium()
    hom = MediumSpec(oscillators=m.oscillators, c=m.c)
    ok = True

    worst = max(
        max(s.residual for s in modes.dispersion_solve(hom, float(k)))
        for k in np.linspace(0.2, 2.0, 5)
    )
    ok &= _summary("dispersion residual", worst, cfg.bracket_tol)

    if hom.n_oscillators == 1:
        res = 0.0
        for k in (0.4, 1.1):
            t = quanta.fano_diagonalize(quanta.build_mode_hamiltonian(hom, k))
            samples = {s.branch: s.omega for s in modes.dispersion_solve(hom, k)}
            res = max(res,
                      abs(t.omega_lower - samples["lower"]) / samples["lower"],
                      abs(t.omega_upper - samples["upper"]) / samples["upper"],
                      t.symplectic_residual())
        ok &= _summary("fano vs dispersion", res, 1e-8)

        report = quanta.unphysical_sector_report(hom, 0.9)
        ok &= _summary("unphysical sector",
                       max(report["max_hprime_matrix_element"],
                           report["max_gauge_condition_violation"]), 1e-12)

        sites, spacing = cfg.lattice_shape
        system = con.LatticeSystem(
            con.LatticePhaseSpace(n_sites=min(sites, 8), spacing=spacing), hom)
        table = con.dirac_table(system)
        ok &= _summary("dirac table", table["max_residual"], 1e-12)

        grid = products.Grid(shape=(32,), spacing=2 * np.pi / 32, axes=(3,))
        mode = modes.make_plane_wave(hom, [0, 0, 2.0], 1, "lower")
        u = products.from_plane_waves(grid, [mode])
        val = products.scalar_product_fields(u, u, hom)
        expected = products.plane_wave_norm_coefficient(hom, mode.omega) * grid.volume
        ok &= _summary("plane-wave norm coefficient",
                       abs(val.real - expected) / expected, 1e-10)

        boosted = modes.boost_mode(mode, Boost(axis=3,
                                               velocity=cfg.frame_velocity
                                               if cfg.frame_velocity else 0.3,
                                               c=hom.c))
        res = modes.mode_equation_residual(boosted.medium, boosted.omega,
                                           boosted.k, boosted.A_amp,
                                           boosted.P_amps)
        ok &= _summary("boosted-mode field equations", res, 1e-8)
    return 0 if ok else 3


_COMMANDS = {
    "validate": cmd_validate,
    "dispersion": cmd_dispersion,
    "diagonalize": cmd_diagonalize,
    "norms": cmd_norms,
    "constraints": cmd_constraints,
    "scatter": cmd_scatter,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="covhopfield",
        description="Covariant Hopfield-model simulation and verification "
                    "toolkit.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("config", help="path to the TOML run configuration")
    parser.add_argument("--natural-units", action="store_true",
                        help="rescale c = 1 on output columns only")
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        return _COMMANDS[args.command](cfg, args.natural_units)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
