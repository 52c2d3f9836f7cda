"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import backend
from .config import Experiment, load_experiment
from .errors import ConfigError, NumericalError, SnapshotError
from .kernel import normalize
from .sim import VariantSpec, run_2d_scenario, run_ensemble, run_episode
from .snapshot import (load_snapshot, save_snapshot, write_runs_csv, write_stats_csv,
                       write_surface_csv)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _select_variants(exp: Experiment, names: list[str] | None) -> list[VariantSpec]:
    if not names:
        return list(exp.variants)
    return [exp.variant(n) for n in names]


def _scenario(exp: Experiment, args):
    sc = exp.scenario
    if getattr(args, "steps", None) is not None:
        sc = replace(sc, steps=args.steps)
    return sc


def _out_dir(exp: Experiment, args) -> Path:
    return Path(args.out if args.out is not None else exp.output_dir)


def cmd_simulate(args) -> int:
    exp = load_experiment(args.config)
    sc = _scenario(exp, args)
    seed = sc.seed_base if args.seed is None else args.seed
    out = _out_dir(exp, args)
    for v in _select_variants(exp, args.variant):
        stats = run_episode(v, sc, seed)
        path = out / f"{v.name}.csv"
        write_stats_csv(path, stats)
        print(f"{v.name}: wrote {path}")
    return EXIT_OK


def cmd_ensemble(args) -> int:
    exp = load_experiment(args.config)
    sc = _scenario(exp, args)
    if args.seed is not None:
        sc = replace(sc, seed_base=args.seed)
    runs = sc.n_runs if args.runs is None else args.runs
    if runs < 1:
        raise ConfigError("--runs must be >= 1")
    parallel = exp.parallel if args.parallel is None else args.parallel
    out = _out_dir(exp, args)
    for v in _select_variants(exp, args.variant):
        res = run_ensemble(v, sc, n_runs=runs, parallel=parallel)
        write_stats_csv(out / f"{v.name}_mean.csv", res.mean)
        write_runs_csv(out / f"{v.name}_runs.csv", res.runs, res.seeds)
        print(f"{v.name}: {runs} runs -> {out / f'{v.name}_mean.csv'}")
    return EXIT_OK


def _surface_header(exp: Experiment, variant: VariantSpec, steps: int, seed: int) -> str:
    k = exp.scenario.kernel
    mono = ";".join(f"dim{m.dim}:s={m.sign},B={m.bound!r},r_ic={m.r_ic!r}"
                    for m in exp.scenario.monotonicity)
    return (f"sigma_k={k.sigma_k!r} length_scale={k.length_scale!r} "
            f"points={'x'.join(map(str, k.points_per_dim))} "
            f"noise_variance={exp.scenario.noise_variance!r} steps={steps} seed={seed} "
            f"variant={variant.name} max_updates={variant.max_updates} "
            f"delta_b={variant.delta_b!r} delta_u={variant.delta_u!r} monotonicity={mono}")


def cmd_demo2d(args) -> int:
    exp = load_experiment(args.config)
    sc = _scenario(exp, args)
    if sc.kernel.dims != 2:
        raise ConfigError("demo2d needs a 2-D kernel (points_per_dim with two entries)")
    constrained = [v for v in exp.variants if v.constrained]
    if not constrained:
        raise ConfigError("demo2d needs one constrained variant in config.variants")
    variant = constrained[0]
    seed = sc.seed_base if args.seed is None else args.seed
    res = run_2d_scenario(sc, variant, seed=seed)
    out = _out_dir(exp, args)
    header = _surface_header(exp, variant, sc.steps, seed)
    write_surface_csv(out / "mean_rgpm.csv", res.axes, res.mean_constrained, header)
    write_surface_csv(out / "mean_rgp.csv", res.axes, res.mean_plain, header)
    write_surface_csv(out / "variance_rgpm.csv", res.axes, res.var_constrained, header)
    write_surface_csv(out / "variance_rgp.csv", res.axes, res.var_plain, header)
    summary = {
        "monotone_fraction_rgpm": float(res.satisfied_constrained.mean()),
        "monotone_fraction_rgp": float(res.satisfied_plain.mean()),
        "final_rmse_rgpm": float(res.stats_constrained.rmse[-1]) if len(res.stats_constrained.rmse) else None,
        "final_rmse_rgp": float(res.stats_plain.rmse[-1]) if len(res.stats_plain.rmse) else None,
        "cpmu": float(res.stats_constrained.cpmu[-1]) if len(res.stats_constrained.cpmu) else 0.0,
    }
    print(json.dumps(summary, indent=1))
    return EXIT_OK


def cmd_snapshot_save(args) -> int:
    exp = load_experiment(args.config)
    sc = _scenario(exp, args)
    variant = exp.variant(args.variant) if args.variant else exp.variants[0]
    seed = sc.seed_base if args.seed is None else args.seed
    _, model = run_episode(variant, sc, seed, return_model=True)
    save_snapshot(model, args.path)
    print(f"saved {variant.name} model after {model.step} steps to {args.path}")
    return EXIT_OK


def cmd_snapshot_load(args) -> int:
    model = load_snapshot(args.path)
    info = {"step": model.step, "n_basis": model.n_basis,
            "points_per_dim": list(model.cfg.points_per_dim)}
    if args.at:
        pts = np.array([[float(v) for v in p.split(",")] for p in args.at])
        pred = model.infer(normalize(pts, model.cfg))
        info["predictions"] = [
            {"input": p.tolist(), "mean": float(m), "variance": float(s)}
            for p, m, s in zip(pts, pred.mean, pred.var)
        ]
    print(json.dumps(info, indent=1))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rgpm", description="Recursive GP regression with monotonicity constraints")
    p.add_argument("--backend", choices=backend.available(), help="kernel backend override")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="single run per variant, CSV of RMSE/CPMU per checkpoint")
    s.add_argument("config")
    s.add_argument("--seed", type=int)
    s.add_argument("--variant", action="append", help="variant name (repeatable; default all)")
    s.add_argument("--steps", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("ensemble", help="averaged RMSE/CPMU over many seeded runs")
    e.add_argument("config")
    e.add_argument("--runs", type=int)
    e.add_argument("--parallel", type=int)
    e.add_argument("--seed", type=int, help="override seed_base")
    e.add_argument("--variant", action="append")
    e.add_argument("--steps", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_ensemble)

    d = sub.add_parser("demo2d", help="2-D monotone surface: RGPm vs RGP mean and variance CSVs")
    d.add_argument("config")
    d.add_argument("--seed", type=int)
    d.add_argument("--steps", type=int)
    d.add_argument("--out")
    d.set_defaults(func=cmd_demo2d)

    snap = sub.add_parser("snapshot", help="save or inspect model snapshots")
    ssub = snap.add_subparsers(dest="snapshot_command", required=True, parser_class=_Parser)
    sv = ssub.add_parser("save", help="train one run and save the final model")
    sv.add_argument("config")
    sv.add_argument("path")
    sv.add_argument("--variant")
    sv.add_argument("--seed", type=int)
    sv.add_argument("--steps", type=int)
    sv.set_defaults(func=cmd_snapshot_save)
    ld = ssub.add_parser("load", help="load a snapshot, print a summary and optional predictions")
    ld.add_argument("path")
    ld.add_argument("--at", action="append", help="raw input point, comma separated (repeatable)")
    ld.set_defaults(func=cmd_snapshot_load)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.backend:
        backend.set_backend(args.backend)
    try:
        return args.func(args)
    except (ConfigError, SnapshotError) as exc:
        print(f"rgpm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"rgpm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
