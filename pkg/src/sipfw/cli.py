"""Command-line entry point: run, convergence, compare, resample-demo."""

from __future__ import annotations

import argparse
import os
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .chem import PositivityError
from .config import ConfigError, parse_config, render_config, template
from .diagnostics import ErrorRecord, convergence_slope, relative_error
from .io import write_csv, write_manifest, write_snapshots
from .model import ParticleEnsemble
from .particles import RngStream, residual_resample
from .reference import CflError, reference_run
from .simulator import RunConfig, SimulationError, final_density, run


def _threads_from_env(value):
    if value is not None:
        return value
    env = os.environ.get("SIPFW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"SIPFW_THREADS must be an integer, got {env!r}") from None
    return None


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        updates["output_dir"] = args.out
    if getattr(args, "snapshot_every", None) is not None:
        updates["snapshot_every"] = args.snapshot_every
    threads = _threads_from_env(getattr(args, "threads", None))
    if threads is not None:
        updates["threads"] = threads
    return replace(config, **updates) if updates else config


def _versions() -> dict:
    return {
        "sipfw": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def cmd_init_config(args) -> int:
    text = template(args.kind)
    out = Path(args.out)
    out.write_text(text)
    print(f"wrote {out}")
    return 0


def cmd_run(args) -> int:
    config, spec = parse_config(args.config)
    config = _apply_overrides(config, args)
    if config.output_dir is None:
        config = replace(config, output_dir="out")
    initial = spec.make(config.domain.dim)
    t0 = time.perf_counter()
    result = run(config, initial)
    wall = time.perf_counter() - t0
    outdir = Path(config.output_dir)
    files = write_snapshots(outdir, result.snapshots, config.domain.length)
    resolved = render_config(config, spec)
    (outdir / "resolved.cfg").write_text(resolved)
    manifest = {
        "command": "run",
        "config_file": "resolved.cfg",
        "seed": config.seed,
        "steps": result.state.step,
        "final_time": result.state.time,
        "total_mass": result.state.ensemble.total_mass,
        "wall_time_s": wall,
        "phase_seconds": result.timings,
        "snapshots": files,
        "versions": _versions(),
    }
    write_manifest(outdir / "manifest.json", manifest)
    print(f"completed {result.state.step} steps to t={result.state.time:g}; outputs in {outdir}")
    return 0


def _parse_resolutions(text: str):
    try:
        values = [int(part) for part in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"bad resolutions list {text!r}") from None
    if len(values) < 3:
        raise ConfigError("need at least 3 resolutions (the largest is the reference)")
    if sorted(set(values)) != sorted(values):
        raise ConfigError("resolutions must be distinct")
    return sorted(values)


def cmd_convergence(args) -> int:
    if args.table:
        rows = [line.split(",") for line in Path(args.table).read_text().strip().splitlines()[1:]]
        records = [ErrorRecord(int(r[0]), float(r[4]), 0, float(r[3])) for r in rows]
        slope = convergence_slope(records)
        print(f"slope = {slope:.4f}")
        return 0
    config, spec = parse_config(args.config)
    config = _apply_overrides(config, args)
    resolutions = _parse_resolutions(args.resolutions)
    reference_h = resolutions[-1]
    initial = spec.make(config.domain.dim)
    fields = {}
    for h in resolutions:
        disc = replace(config.disc, h_modes=h, h0_cutoff=min(config.disc.h0_cutoff, h) if args.keep_h0 else h)
        cfg_h = replace(config, disc=disc, output_dir=None)
        result = run(cfg_h, initial, collect_snapshots=False)
        fields[h] = final_density(result.state)
        print(f"H={h:4d} done ({result.state.step} steps)")
    records = []
    for h in resolutions[:-1]:
        err = relative_error(fields[h], fields[reference_h], args.target, config.domain.length)
        records.append(ErrorRecord(h, err, reference_h, config.disc.t_final))
        print(f"H={h:4d}  E={err:.6e}")
    slope = convergence_slope(records)
    print(f"slope = {slope:.4f}")
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        rows = [
            [r.resolution, config.disc.n_particles, config.disc.dt, r.time, r.error, config.seed]
            for r in records
        ]
        write_csv(outdir / "convergence.csv", ["H", "P", "tau", "T", "E", "seed"], rows)
        write_manifest(
            outdir / "manifest.json",
            {
                "command": "convergence",
                "resolutions": resolutions,
                "reference": reference_h,
                "comparison_grid": args.target,
                "slope": slope,
                "seed": config.seed,
                "versions": _versions(),
            },
        )
        print(f"table in {outdir}/convergence.csv")
    return 0


def cmd_compare(args) -> int:
    config, spec = parse_config(args.config)
    config = _apply_overrides(config, args)
    if config.domain.dim != 2:
        raise ConfigError("compare supports 2D configurations only (no 3D reference solver)")
    times = [float(part) for part in args.times.replace(",", " ").split()] if args.times else [
        config.disc.t_final
    ]
    times = sorted(set(times))
    if any(t <= 0 or t > config.disc.t_final + 1e-12 for t in times):
        raise ConfigError("comparison times must lie in (0, t_final]")
    initial = spec.make(2)
    rows = []
    for t in times:
        disc_t = replace(config.disc, t_final=t)
        cfg_t = replace(config, disc=disc_t, output_dir=None)
        result = run(cfg_t, initial, collect_snapshots=False)
        mesh = reference_run(initial, config.params, config.domain, args.ref_n, t)
        err = relative_error(final_density(result.state), mesh.u, args.target, config.domain.length)
        rows.append([t, config.disc.h_modes, args.ref_n, err])
        print(f"t={t:g}  E(particle vs mesh) = {err:.6e}")
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        write_csv(outdir / "compare.csv", ["t", "H", "N_ref", "E"], rows)
        print(f"table in {outdir}/compare.csv")
    return 0


def cmd_resample_demo(args) -> int:
    rng_stream = RngStream(args.seed)
    positions = np.array([[1.0, 1.0], [2.0, 2.0]])
    weights = np.array([1.5, 0.5])
    counts = np.zeros(2)
    for trial in range(args.trials):
        out = residual_resample(ParticleEnsemble(positions, weights), rng_stream.resampling(trial))
        for p in range(2):
            counts[p] += np.all(out.positions == positions[p], axis=1).sum()
    means = counts / args.trials
    print(f"two-particle demo, weights (1.5, 0.5), {args.trials} trials")
    print(f"mean copy counts: ({means[0]:.4f}, {means[1]:.4f})  expected (1.5, 0.5)")
    print("total mass preserved each trial; every output carries the mean weight")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sipfw", description="Weighted particle-field invasion engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-config", help="write a configuration template")
    p.add_argument("--kind", default="benchmark2d", choices=("benchmark2d", "benchmark3d", "custom"))
    p.add_argument("--out", default="sipfw.cfg")
    p.set_defaults(func=cmd_init_config)

    p = sub.add_parser("run", help="execute one simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--snapshot-every", type=int, dest="snapshot_every")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("convergence", help="self-convergence study over resolutions")
    p.add_argument("--config")
    p.add_argument("--resolutions", default="32,64,128,256")
    p.add_argument("--target", type=int, default=16)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--threads", type=int)
    p.add_argument("--table", help="fit a slope on an existing CSV table instead of running")
    p.add_argument("--keep-h0", action="store_true", dest="keep_h0",
                   help="cap h0_cutoff at the configured value instead of tracking H")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("compare", help="particle engine vs mesh reference solver")
    p.add_argument("--config", required=True)
    p.add_argument("--ref-n", type=int, default=256, dest="ref_n")
    p.add_argument("--times")
    p.add_argument("--target", type=int, default=16)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("resample-demo", help="statistics of the residual resampler")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_resample_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "convergence" and not args.table and not args.config:
        print("error: convergence needs --config (or --table)", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, PositivityError, CflError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
