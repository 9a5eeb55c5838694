"""Command-line entry point: ``cgmd <command> --config cfg.json --out dir``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(instability, blowup, dependent basis).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import SCHEMA_VERSION, load_config
from .errors import CGMDError, ConfigError
from .io import write_csv, write_json

log = logging.getLogger("cgmd")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

REFLECTION_NOTE = ("reflection_fraction = E_atomistic(t_final) / E_initial; "
                   "each bond energy is split half-and-half between its atoms")


def _snapshot_rows(times, atoms, disp, snapshot_times):
    picked = []
    for ts in snapshot_times:
        i = int(np.argmin(np.abs(times - ts)))
        if abs(times[i] - ts) <= 1e-9 + 0.5 * (times[1] - times[0] if len(times) > 1 else 0):
            picked.append((float(times[i]), disp[i]))
    rows = [(t, a, x) for t, u in picked for a, x in zip(atoms, u)]
    return picked, rows


def cmd_simulate(cfg, out: Path, seed, figures: bool) -> int:
    res = ex.run_simulation(cfg, seed=seed)
    traj = res.trajectory
    atoms = res.model.free
    disp = traj.displacements()
    vel = traj.atom_velocities()
    rows = ((t, a, x, v) for t, u, w in zip(traj.times, disp, vel)
            for a, x, v in zip(atoms, u, w))
    write_csv(out / "trajectory.csv", ["t", "atom", "displacement", "velocity"], rows)
    d = traj.diagnostics
    cols = [k for k in ("E_total", "E_left", "E_right") if k in d]
    write_csv(out / "diagnostics.csv", ["t"] + cols,
              zip(traj.times, *(d[k] for k in cols)))
    summary = {"kind": res.system.kind.value, "dim": res.system.dim,
               "n_records": len(traj), "aborted": res.aborted}
    if "E_total" in d and len(traj):
        e = d["E_total"]
        summary["relative_energy_drift"] = float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] else 0.0
    write_json(out / "summary.json", summary)
    if figures:
        from . import plotting
        picked, _ = _snapshot_rows(traj.times, atoms, disp, cfg.report["snapshots"])
        plotting.plot_snapshots(out / "snapshots.png", res.model.reference_positions[atoms],
                                picked, interface=res.split_atom)
        if cols:
            plotting.plot_energy(out / "energy.png", traj.times, {k: d[k] for k in cols})
    return EXIT_NUMERICAL if res.aborted else EXIT_OK


def cmd_reflect(cfg, out: Path, seed, figures: bool) -> int:
    report, res = ex.run_reflection_experiment(cfg, seed=seed)
    write_json(out / "report.json", report.summary())
    write_csv(out / "energy.csv", ["t", "E_total", "E_coarse", "E_atomistic"],
              zip(report.times, report.E_total, report.E_coarse, report.E_atomistic),
              comments=[REFLECTION_NOTE])
    traj = res.trajectory
    atoms = res.model.free
    picked, rows = _snapshot_rows(traj.times, atoms, traj.displacements(),
                                  cfg.report["snapshots"])
    write_csv(out / "snapshots.csv", ["t", "atom", "displacement"], rows)
    if figures:
        from . import plotting
        plotting.plot_snapshots(out / "snapshots.png", res.model.reference_positions[atoms],
                                picked, interface=res.split_atom,
                                title=f"{report.kind}, L = {report.krylov_depth}")
        plotting.plot_energy(out / "energy.png", report.times,
                             {"total": report.E_total, "coarse side": report.E_coarse,
                              "atomistic side": report.E_atomistic})
    log.info("reflection fraction %.6f at t = %g", report.reflection_fraction, report.t_final)
    return EXIT_NUMERICAL if report.unstable else EXIT_OK


def cmd_kernel(cfg, out: Path, seed, figures: bool) -> int:
    times, nodes, theta, basis = ex.kernel_report(cfg)
    rows = ((t, int(n), theta[i, j]) for i, t in enumerate(times) for j, n in enumerate(nodes))
    write_csv(out / "kernel.csv", ["t", "node", "theta"], rows)
    peaks = np.max(np.abs(theta), axis=0)
    write_json(out / "kernel_peaks.json", {
        "interface_node": basis.interface_index,
        "nodes": nodes.tolist(),
        "node_atoms": basis.node_atoms[nodes].tolist(),
        "max_abs_theta": peaks.tolist(),
    })
    if figures:
        from . import plotting
        plotting.plot_kernel(out / "kernel.png", times, nodes, theta,
                             highlight=basis.interface_index)
    return EXIT_OK


def cmd_stability(cfg, out: Path, seed, figures: bool) -> int:
    report = ex.stability_report(cfg)
    write_json(out / "stability.json", report)
    if figures:
        from . import plotting
        plotting.plot_eigenvalues(out / "eigenvalues.png", report)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "reflect": cmd_reflect,
    "kernel": cmd_kernel,
    "stability": cmd_stability,
}


def _run_one(job):
    command, cfg_dict, out, seed, figures = job
    try:
        cfg = load_config(cfg_dict)
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "config.resolved.json", cfg.to_dict())
        return COMMANDS[command](cfg, out, seed, figures)
    except ConfigError as exc:
        log.error("%s: %s", out, exc)
        return EXIT_CONFIG
    except (CGMDError, np.linalg.LinAlgError) as exc:
        log.error("%s: %s", out, exc)
        return EXIT_NUMERICAL


def _load_sweep(path: Path):
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read sweep file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != SCHEMA_VERSION or not isinstance(doc.get("runs"), list):
        raise ConfigError("sweep file needs {'version': 1, 'runs': [...]}")
    jobs = []
    names = set()
    for k, run in enumerate(doc["runs"]):
        command = run.get("command", "reflect")
        if command not in COMMANDS:
            raise ConfigError(f"runs[{k}]: unknown command {command!r}")
        if "config" in run:
            cfg = run["config"]
        elif "config_path" in run:
            cfg = load_config(path.parent / run["config_path"]).to_dict()
        else:
            raise ConfigError(f"runs[{k}] needs 'config' or 'config_path'")
        name = run.get("name", f"run{k:03d}")
        if name in names:
            raise ConfigError(f"duplicate run name {name!r}")
        names.add(name)
        load_config(cfg)  # validate before any work starts
        jobs.append((name, command, cfg))
    return jobs, int(doc.get("workers", 1))


def cmd_sweep(config_path: Path, out: Path, seed, figures: bool, workers=None) -> int:
    jobs, n_workers = _load_sweep(config_path)
    if workers is not None:
        n_workers = workers
    payload = [(cmd, cfg, str(out / name), seed, figures) for name, cmd, cfg in jobs]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            codes = list(pool.map(_run_one, payload))
    else:
        codes = [_run_one(p) for p in payload]
    write_json(out / "sweep.json", {name: code for (name, _, _), code in zip(jobs, codes)})
    return max(codes, default=EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgmd", description="Coarse-grained chain dynamics experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("simulate", "integrate a reduction, write trajectory and diagnostics"),
                            ("reflect", "wave-packet reflection report"),
                            ("kernel", "diagonal memory-kernel traces near the interface"),
                            ("stability", "eigenvalues of the reduced pencils"),
                            ("sweep", "run a list of configs, optionally in parallel")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized initial states")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        if name == "sweep":
            p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    figures = not args.no_figures
    try:
        if args.command == "sweep":
            return cmd_sweep(args.config, args.out, args.seed, figures, args.workers)
        cfg = load_config(args.config)
        args.out.mkdir(parents=True, exist_ok=True)
        write_json(args.out / "config.resolved.json", cfg.to_dict())
        return COMMANDS[args.command](cfg, args.out, args.seed, figures)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CGMDError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
