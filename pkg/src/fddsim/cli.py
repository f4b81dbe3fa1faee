"""Command-line interface.

Subcommands:
  simulate     run the Monte Carlo experiment from a config file
  extrapolate  run the single-user covariance pipeline and export CSVs
  sparsify     solve beam/user selection for a beam-power matrix
  validate     run the self-check suites

Exit codes: 0 success, 1 validation/solver failure, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .channel import ArrayConfig, make_scenario, sample_channels
from .config import ConfigError, parse_config
from .covariance import (circulant_eigenvalues, estimate_asf, extrapolate_dl,
                         export_covariance_csv, export_spectrum_csv,
                         project_toeplitz_psd, sample_covariance)
from .errors import FddsimError, InvalidArgumentError
from .evaluation import run_experiment, summarize, write_records_csv, write_summary_json
from .numerics import gaussian_complex
from .sparsifier import build_beam_graph, formulate_milp, solve_sparsification
from .validate import run_suites, SUITES


def _cmd_simulate(args) -> int:
    cfg = parse_config(args.config)
    records = run_experiment(cfg, threads=args.threads)
    out = args.output or cfg.output_path or "results.csv"
    write_records_csv(records, out)
    print(f"wrote {len(records)} records to {out}")
    if args.summary:
        write_summary_json(records, args.summary)
        print(f"wrote summary to {args.summary}")
    for row in summarize(records)["grid"]:
        print(f"  Tdl={row['tdl']:<4d} snr={row['snr_db']:<6g} "
              f"rate={row['sum_rate_mean']:.3f} +- {row['sum_rate_se']:.3f} "
              f"served={row['served_mean']:.2f}")
    return 0


def _cmd_extrapolate(args) -> int:
    cfg = parse_config(args.config)
    arr = ArrayConfig(m=cfg.m, theta_max=np.deg2rad(cfg.theta_max_deg), alpha=cfg.alpha)
    _, users = make_scenario(cfg.n_clusters, cfg.cluster_width, max(args.user + 1, 1),
                             cfg.seed, 0, 0)
    asf = users[args.user].asf
    h_ul = sample_channels(arr, asf, "ul", cfg.n_ul, cfg.seed, 0, args.user, 1)
    noise = np.sqrt(cfg.ul_sigma2) * gaussian_complex(
        arr.m * cfg.n_ul, cfg.seed, 0, args.user, 2).reshape(arr.m, cfg.n_ul)
    c_ul = project_toeplitz_psd(sample_covariance(h_ul + noise, cfg.ul_sigma2))
    est = estimate_asf(c_ul.first_column, arr, grid_size=cfg.grid_factor * arr.m)
    c_dl = extrapolate_dl(est, arr)
    lam = circulant_eigenvalues(c_dl)

    os.makedirs(args.outdir, exist_ok=True)
    export_covariance_csv(c_ul, os.path.join(args.outdir, "c_ul_hat.csv"))
    export_covariance_csv(c_dl, os.path.join(args.outdir, "c_dl_hat.csv"))
    export_spectrum_csv(lam, os.path.join(args.outdir, "spectrum.csv"))
    print(f"wrote c_ul_hat.csv, c_dl_hat.csv, spectrum.csv to {args.outdir}")
    return 0


def _cmd_sparsify(args) -> int:
    try:
        w = np.loadtxt(args.spectra, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"could not read beam-power matrix {args.spectra!r}: {exc}")
    graph = build_beam_graph(w, th_rel=args.th_rel)
    if args.dump_milp:
        mip = formulate_milp(graph, args.tdl, args.p0,
                             epsilon=0.5 / max(graph.n_beams, 1))
        with open(args.dump_milp, "w") as fh:
            fh.write(mip.to_debug_text())
    plan = solve_sparsification(graph, args.tdl, p0=args.p0)
    text = plan.to_json()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    print(f"selected {len(plan.beams)} beams, {len(plan.users)} users, "
          f"matching size {plan.matching_size}", file=sys.stderr)
    return 0


def _cmd_validate(args) -> int:
    results = run_suites(args.suite or None, inject_fault=args.inject_fault)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: {r.detail}")
        failed += not r.passed
    print(f"{len(results) - failed}/{len(results)} suites passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fddsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the Monte Carlo experiment")
    p.add_argument("config", help="experiment config file (key = value lines)")
    p.add_argument("-o", "--output", default=None, help="records CSV path")
    p.add_argument("--summary", default=None, help="also write a summary JSON")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes; results are identical for any count")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("extrapolate", help="single-user covariance pipeline")
    p.add_argument("config", help="experiment config file")
    p.add_argument("--user", type=int, default=0, help="user index in the scenario")
    p.add_argument("--outdir", default=".", help="directory for the output CSVs")
    p.set_defaults(func=_cmd_extrapolate)

    p = sub.add_parser("sparsify", help="beam/user selection from a power matrix")
    p.add_argument("spectra", help="CSV matrix, rows = beams, columns = users")
    p.add_argument("--tdl", type=int, required=True, help="per-user beam budget")
    p.add_argument("--p0", type=float, default=0.0, help="per-user power floor")
    p.add_argument("--th-rel", type=float, default=0.01,
                   help="edge threshold relative to the largest power")
    p.add_argument("-o", "--output", default=None, help="plan JSON path (default stdout)")
    p.add_argument("--dump-milp", default=None, help="write the MILP in debug text form")
    p.set_defaults(func=_cmd_sparsify)

    p = sub.add_parser("validate", help="run self-check suites")
    p.add_argument("--suite", action="append", choices=sorted(SUITES),
                   help="run only this suite (repeatable; default: all)")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FddsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
