"""Command-line entry point: run a configured calculation and write artifacts.

Exit codes: 0 success, 1 validation failure, 2 numerical-accuracy failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import acp, mastereq, qubit, spectrum
from .config import RunConfig, load_config
from .errors import AccuracyError, SpinLindError, ValidationError
from .mastereq import FieldConfig, build_model
from .spincore import (
    build_x,
    build_zo,
    compress,
    decompress,
    is_hermitian,
    level_data,
    spin_spin_hamiltonian,
    total_sz,
    xi_operator,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ACCURACY = 2
EXIT_IO = 3


def _field(cfg: RunConfig) -> FieldConfig:
    return FieldConfig(b_o=cfg.field_b_o, b_1=cfg.field_b_1, dist=cfg.dist)


def run_spectrum(cfg: RunConfig, out: Path, verbose: bool) -> int:
    labels = cfg.resonance if len(cfg.resonance) > 1 else cfg.resonance[0]
    spec = spectrum.stick_spectrum(cfg.groups, labels, cfg.omega_o,
                                   scaled=cfg.scaled)
    csv_path = out / f"{cfg.basename}_spectrum.csv"
    svg_path = out / f"{cfg.basename}_spectrum.svg"
    spectrum.export_csv(spec, csv_path)
    spectrum.export_svg(spec, svg_path)
    if verbose:
        print(f"{len(spec.lines)} lines, total intensity {spec.total_intensity}")
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return EXIT_OK


def run_propagate(cfg: RunConfig, out: Path, verbose: bool) -> int:
    model = build_model(cfg.system, _field(cfg), cfg.beta)
    traj = mastereq.propagate(model, model.boltzmann, cfg.t_end, cfg.dt,
                              store_every=cfg.store_every)
    csv_path = out / f"{cfg.basename}_trajectory.csv"
    mastereq.export_trajectory_csv(model, traj, csv_path)
    if verbose:
        print(f"{traj.times.size} stored frames, final trace "
              f"{np.trace(traj.final).real:.12g}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def run_qubit(cfg: RunConfig, out: Path, verbose: bool) -> int:
    model = build_model(cfg.system, _field(cfg), cfg.beta)
    params = qubit.QubitParams.from_field(cfg.system.gammas[0], cfg.field_b_o,
                                          cfg.field_b_1, cfg.beta, cfg.dist)
    traj = mastereq.propagate(model, model.boltzmann, cfg.t_end, cfg.dt)
    states = traj.schrodinger_states()
    xi = {a: xi_operator(cfg.system, a) for a in "xyz"}
    gamma = cfg.system.gammas[0]

    idx = np.unique(np.linspace(0, traj.times.size - 1, cfg.n_points).astype(int))
    rows = []
    max_dev = 0.0
    for i in idx:
        t = float(traj.times[i])
        rho = states[i]
        # numeric Bloch components: <sigma_a> = -2 <xi^a> / gamma
        num = [float(np.real(np.trace(rho @ xi[a]))) * (-2.0 / gamma) for a in "xyz"]
        ana = qubit.trajectory(params, t)
        max_dev = max(max_dev, max(abs(n - a) for n, a in zip(num, ana)))
        rows.append((t, *num, *ana))

    csv_path = out / f"{cfg.basename}_qubit.csv"
    with open(csv_path, "w") as fh:
        fh.write("t,num_sigma_1,num_sigma_2,num_sigma_3,"
                 "ana_sigma_1,ana_sigma_2,ana_sigma_3\n")
        for row in rows:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
    report = {
        "max_abs_deviation": max_dev,
        "rate": params.rate,
        "varpi": params.varpi,
        "n_compared": int(len(rows)),
    }
    report_path = out / f"{cfg.basename}_qubit_report.json"
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=1)
    print(f"wrote {csv_path}")
    print(f"wrote {report_path}")
    print(f"max |numeric - analytic| = {max_dev:.3e}")
    if cfg.tolerance is not None and max_dev > cfg.tolerance:
        print(f"deviation exceeds tolerance {cfg.tolerance:.3e}", file=sys.stderr)
        return EXIT_ACCURACY
    return EXIT_OK


def run_acp(cfg: RunConfig, out: Path, verbose: bool) -> int:
    order = cfg.acp_order
    moments = acp.moments_up_to(cfg.system, cfg.field_b_o, order, cfg.beta)
    zetas = acp.zeta_recursive(moments)
    dets = [acp.zeta_determinant(moments, n) for n in range(1, order + 1)]
    payload = {
        "order": order,
        "moments": [[m.real, m.imag] for m in moments.values],
        "zeta_recursive": [[z.real, z.imag] for z in zetas.zetas],
        "zeta_determinant": [[1.0, 0.0]] + [[d.real, d.imag] for d in dets],
    }
    path = out / f"{cfg.basename}_zeta.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
    print(f"wrote {path}")
    return EXIT_OK


def _verify_checks(cfg: RunConfig):
    system = cfg.system
    b_o = cfg.field_b_o
    rng = np.random.default_rng(7)

    def bijection():
        for idx in range(system.dim):
            if compress(decompress(idx, system.spins), system.spins) != idx:
                return False
        return True

    zo = build_zo(system, b_o)
    x = build_x(system)
    sz = total_sz(system)
    xi_x = xi_operator(system, "x")

    def reconstruction():
        full = spin_spin_hamiltonian(system) + b_o * xi_operator(system, "z")
        scale = max(np.max(np.abs(full)), 1.0)
        return np.max(np.abs(zo + x - full)) <= 1e-12 * scale

    def commute():
        return np.max(np.abs(sz @ zo - zo @ sz)) <= 1e-12 * max(np.max(np.abs(zo)), 1.0)

    def eigenops_complete():
        from .eigenops import decompose
        dec = decompose(xi_x, level_data(system, b_o))
        if not dec.blocks:
            return np.max(np.abs(xi_x)) == 0
        resid = np.max(np.abs(dec.sum() - xi_x))
        steps_ok = all(b.step in (1, -1) for b in dec.blocks)
        return resid <= 1e-12 * max(np.max(np.abs(xi_x)), 1.0) and steps_ok

    def dissipator_traceless():
        model = build_model(system, _field(cfg), cfg.beta)
        a = rng.normal(size=(system.dim, system.dim)) \
            + 1j * rng.normal(size=(system.dim, system.dim))
        rho = a + a.conj().T
        return abs(np.trace(mastereq.dissipator(model, rho))) <= 1e-10 * np.max(np.abs(rho))

    def lamb_shift_commutes():
        model = build_model(system, _field(cfg), cfg.beta)
        h = model.h_ls
        scale = max(np.max(np.abs(h)), 1e-300)
        comm = np.max(np.abs(h @ zo - zo @ h))
        return is_hermitian(h, 1e-10) and comm <= 1e-10 * max(scale * np.max(np.abs(zo)), 1.0)

    return [
        ("index-compression bijection", bijection),
        ("Z0 + X reconstructs the static Hamiltonian", reconstruction),
        ("[Sz, Z0] = 0", commute),
        ("ladder decomposition complete with steps +-1", eigenops_complete),
        ("dissipator output traceless", dissipator_traceless),
        ("Lamb shift Hermitian and conserved", lamb_shift_commutes),
    ]


def run_verify(cfg: RunConfig, out: Path, verbose: bool) -> int:
    results = []
    failed = False
    for name, check in _verify_checks(cfg):
        try:
            ok = bool(check())
        except SpinLindError as exc:
            ok = False
            if verbose:
                print(f"{name}: raised {exc}")
        results.append((name, ok))
        failed = failed or not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    report = out / f"{cfg.basename}_verify.json"
    with open(report, "w") as fh:
        json.dump({name: ok for name, ok in results}, fh, indent=1)
    print(f"wrote {report}")
    return EXIT_ACCURACY if failed else EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinlind",
        description="Semiclassical CW magnetic-resonance calculations",
    )
    parser.add_argument("--config", required=True, help="path to a run config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--mode", default=None, help="override the configured mode")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved for future stochastic features")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.mode:
        cfg.mode = args.mode.strip().lower()

    out_dir = os.environ.get("SPINLIND_OUT") or args.out
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO

    runners = {
        "spectrum": run_spectrum,
        "propagate": run_propagate,
        "qubit": run_qubit,
        "acp": run_acp,
        "verify": run_verify,
    }
    runner = runners.get(cfg.mode)
    if runner is None:
        print(f"unknown mode {cfg.mode!r}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        return runner(cfg, out, args.verbose)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except AccuracyError as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
