"""Command-line entry point.

Exit codes: 0 success, 2 configuration or argument error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .bootstrap import aggregate, run_bootstrap
from .channels import StateError
from .linalg import CapacityError, NumericError
from .pipeline import ConfigError, ExperimentConfig, StatisticsConfig, crossover_scan, finite_size_scan, run
from .stats import CsrSample, StatisticsError, compute_csr, histogram, marginals, summarize
from .tomography import FitConfig, ShotDataset, fit

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# flag -> dotted ExperimentConfig key
CONFIG_FLAGS = {
    "family": ("family", str),
    "n": ("n", int),
    "e": ("e", int),
    "T": ("T", int),
    "size": ("size", int),
    "dim": ("dim", int),
    "sector": ("sector", str),
    "seed": ("seed", int),
    "output": ("output", str),
    "noise": ("noise.enabled", None),
    "e_p_1q": ("noise.e_p_1q", float),
    "e_p_2q": ("noise.e_p_2q", float),
    "twirl_m": ("noise.twirl_m", int),
    "noise_seed": ("noise.seed", int),
    "compile_cz": ("noise.compile_cz", None),
    "tomography": ("tomography.enabled", None),
    "N_p": ("tomography.N_p", int),
    "N_s": ("tomography.N_s", int),
    "iterations": ("tomography.iterations", int),
    "learning_rate": ("tomography.learning_rate", float),
    "n_boot": ("tomography.bootstrap", int),
    "real_axis_cut": ("statistics.real_axis_cut", float),
    "conjugate_pairs": ("statistics.conjugate_pairs", str),
    "bins": ("statistics.bins", int),
    "smear_sigma": ("statistics.smear_sigma", float),
}


def _add_workers(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, default=1, help="processes for ensemble members")


def _add_config_flags(p: argparse.ArgumentParser, skip=()) -> None:
    _add_workers(p)
    p.add_argument("--config", type=Path, help="YAML experiment config; flags override its keys")
    for name, (key, typ) in CONFIG_FLAGS.items():
        if name in skip:
            continue
        flag = "--" + name.replace("_", "-") if name not in ("N_p", "N_s", "T") else "--" + name
        if typ is None:
            p.add_argument(flag, dest=name, action="store_true", default=None, help=f"set {key}")
        else:
            p.add_argument(flag, dest=name, type=typ, default=None, help=f"override {key}")


def _config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes = {}
    for name, (key, _) in CONFIG_FLAGS.items():
        value = getattr(args, name, None)
        if value is not None:
            changes[key] = value
    return cfg.replace(**changes) if changes else cfg


def _print(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_ensemble(args) -> int:
    cfg = _config_from_args(args)
    res = run(cfg, workers=args.workers)
    out = res.summary.to_dict()
    out["failures"] = len(res.failures)
    if res.bootstrap is not None:
        out["bootstrap"] = res.bootstrap.to_dict()
    _print(out)
    return EXIT_OK


def cmd_csr(args) -> int:
    paths = []
    for p in args.spectra:
        paths += sorted(p.glob("*.csv")) if p.is_dir() else [p]
    if not paths:
        raise ConfigError({"spectra": "no spectrum files found"})
    opts = {"real_axis_cut": args.real_axis_cut, "conjugate_pairs": args.conjugate_pairs}
    samples = [compute_csr(io.load_spectrum(p), **opts) for p in paths]
    csr = CsrSample.concatenate(samples)
    summ = summarize(csr)
    if args.output:
        out = Path(args.output)
        io.save_summary(summ, out / "summary.json")
        io.save_histogram(histogram(csr, args.bins, args.smear_sigma), out / "csr_histogram.csv", out / "csr_histogram.json")
        io.save_marginals(marginals(csr), out / "marginal_r.csv", out / "marginal_theta.csv")
    _print(summ.to_dict())
    return EXIT_OK


def _fit_config(args) -> FitConfig:
    return FitConfig(args.iterations, args.learning_rate, args.seed, args.optimizer, joint=args.joint)


def cmd_tomo_fit(args) -> int:
    data = ShotDataset.from_json(Path(args.data).read_text())
    spam_data = ShotDataset.from_json(Path(args.spam_data).read_text())
    res = fit(data, spam_data, _fit_config(args))
    out = Path(args.output)
    io.save_channel(res.channel, out / "channel.json")
    io.write_json(out / "spam.json", {
        "rho0_re": res.spam.rho0.real.tolist(),
        "rho0_im": res.spam.rho0.imag.tolist(),
        "corruption": res.spam.corruption.tolist(),
    })
    io.save_trace(out / "loss_trace.csv", res.loss_trace)
    report = {
        "final_loss": res.final_loss,
        "iterations": len(res.loss_trace),
        "channel_file": "channel.json",
        "spam_file": "spam.json",
        "loss_trace_csv": "loss_trace.csv",
    }
    io.write_json(out / "fit_report.json", report)
    _print(report)
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    if len(args.data) != len(args.spam_data):
        raise ConfigError({"spam_data": "give one SPAM dataset per map dataset"})
    ensembles = []
    seeds = np.random.SeedSequence(args.seed).spawn(len(args.data))
    for d, s, ss in zip(args.data, args.spam_data, seeds):
        data = ShotDataset.from_json(Path(d).read_text())
        spam_data = ShotDataset.from_json(Path(s).read_text())
        cfg = FitConfig(args.iterations, args.learning_rate, None, args.optimizer, joint=args.joint)
        ensembles.append(run_bootstrap(data, spam_data, args.functional, args.n_boot, cfg, ss))
    report = aggregate(ensembles)
    if args.output:
        io.write_json(Path(args.output) / "bootstrap.json", report.to_dict())
    _print(report.to_dict())
    return EXIT_OK


def cmd_crossover(args) -> int:
    cfg = _config_from_args(args)
    if not cfg.noise.enabled:
        cfg = cfg.replace(**{"noise.enabled": True})
    rows = crossover_scan(cfg, args.depths or [], workers=args.workers)
    _print([r.to_dict() for r in rows])
    return EXIT_OK


def cmd_finite_size(args) -> int:
    st = StatisticsConfig(bins=args.bins, smear_sigma=args.smear_sigma)
    grid = finite_size_scan(args.n, args.e, args.size, args.seed, st, args.output, args.workers)
    _print([{"n": n, "e": e, **r.summary.to_dict()} for (n, e), r in grid.items()])
    return EXIT_OK


def _add_fit_flags(p) -> None:
    p.add_argument("--data", required=True, help="map dataset JSON")
    p.add_argument("--spam-data", dest="spam_data", required=True, help="preparation-only dataset JSON")
    p.add_argument("--iterations", type=int, default=4000)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=["adam", "gd"], default="adam")
    p.add_argument("--joint", action="store_true", help="refine SPAM and map jointly after the two stages")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dqchaos", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ensemble", help="run an ensemble experiment and write its artifacts")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("csr", help="spacing-ratio statistics of exported spectra")
    p.add_argument("spectra", nargs="+", type=Path, help="spectrum CSV files or directories of them")
    p.add_argument("--real-axis-cut", dest="real_axis_cut", type=float, default=0.0)
    p.add_argument("--conjugate-pairs", dest="conjugate_pairs", choices=["both", "upper"], default="both")
    p.add_argument("--bins", type=int, default=51)
    p.add_argument("--smear-sigma", dest="smear_sigma", type=float, default=0.05)
    p.add_argument("--output", type=Path)
    p.set_defaults(func=cmd_csr)

    p = sub.add_parser("tomo-fit", help="fit SPAM and a channel to shot data")
    _add_fit_flags(p)
    p.add_argument("--output", type=Path, required=True)
    p.set_defaults(func=cmd_tomo_fit)

    p = sub.add_parser("bootstrap", help="bootstrap error of a channel functional over experiments")
    p.add_argument("--data", action="append", required=True, help="map dataset JSON (repeat per experiment)")
    p.add_argument("--spam-data", dest="spam_data", action="append", required=True)
    p.add_argument("--n-boot", dest="n_boot", type=int, default=10)
    p.add_argument("--functional", default="mean_r", choices=["mean_r", "mean_minus_cos_theta"])
    p.add_argument("--iterations", type=int, default=4000)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=["adam", "gd"], default="adam")
    p.add_argument("--joint", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path)
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("crossover", help="CSR summary of noisy free-fermion circuits versus depth")
    _add_config_flags(p, skip=("T",))
    p.add_argument("--depths", type=int, nargs="*", default=[5, 10, 20, 40])
    p.set_defaults(func=cmd_crossover)

    p = sub.add_parser("finite-size", help="steady-state CSR histograms over an (n, e) grid")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--e", type=int, nargs="+", required=True)
    p.add_argument("--size", type=int, default=100)
    _add_workers(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=51)
    p.add_argument("--smear-sigma", dest="smear_sigma", type=float, default=0.05)
    p.add_argument("--output", type=Path)
    p.set_defaults(func=cmd_finite_size)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (NumericError, StatisticsError, StateError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, CapacityError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
