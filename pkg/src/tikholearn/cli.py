"""Command-line entry point: ``tikholearn {run,convergence,toy,spectrum}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, TikholearnError
from .experiments import convergence_study, emit_outputs, load_config, loglog_slope, run_experiment
from .persist import load_dataset, spectrum_csv
from .subspace import fit_subspace
from .svg import line_svg
from .toy import sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

TOY_COLUMNS = ("sigma", "sigma1", "sigma2", "t_star", "t_bar", "err_xbar", "r_tstar",
               "r_tbar", "r_pi_tstar", "r_pi_tbar")


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_experiment(cfg, args.threads)
    out = emit_outputs(result.records, args.out, result.summary)
    for key, value in result.summary.items():
        print(f"{key} = {value}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = load_config(args.config)
    rows = convergence_study(cfg, args.n, args.threads)
    lines = ["n,median_proj_dist,median_abs_t_gap,bound_b"]
    lines += [f"{r.n},{r.median_proj_dist:.17g},{r.median_abs_t_gap:.17g},{r.bound_b:.17g}"
              for r in rows]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if len(rows) > 1 and all(r.median_proj_dist > 0 for r in rows):
        print(f"loglog slope of median proj_dist: "
              f"{loglog_slope([r.n for r in rows], [r.median_proj_dist for r in rows]):.4f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "convergence.csv").write_text(text)
    return EXIT_OK


def cmd_toy(args) -> int:
    if not args.sweep:
        print("nothing to do: pass --sweep", file=sys.stderr)
        return EXIT_CONFIG
    sigmas = np.linspace(-1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0), args.points)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ratio in args.ratios:
        try:
            rows = sweep(sigmas, ratio)
        except ValueError as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
        stem = f"toy_ratio_{ratio:g}"
        with open(out / f"{stem}.csv", "w") as fh:
            fh.write(",".join(TOY_COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(f"{row[c]:.17g}" for c in TOY_COLUMNS) + "\n")
        series = {name: [row[name] for row in rows] for name in ("err_xbar", "r_tstar", "r_tbar")}
        (out / f"{stem}.svg").write_text(line_svg(sigmas, series, f"sigma_1 = {ratio:g} sigma"))
        proj = {name: [row[name] for row in rows] for name in ("err_xbar", "r_pi_tstar", "r_pi_tbar")}
        (out / f"{stem}_projected.svg").write_text(
            line_svg(sigmas, proj, f"projected errors, sigma_1 = {ratio:g} sigma"))
        print(f"wrote {out / stem}.csv")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    try:
        data = load_dataset(args.dataset)
    except OSError as exc:
        raise ConfigError(f"invalid config: cannot read dataset {args.dataset}: {exc}") from exc
    gap_policy = "max_ratio" if args.threshold is None else args.threshold
    est = fit_subspace(data, h_override=args.h, gap_policy=gap_policy)
    text = spectrum_csv(est)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    print(f"h_detected = {est.h_detected}, gap_ratio = {est.gap_ratio:.6g}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tikholearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and write CSV/SVG outputs")
    p.add_argument("--config", required=True, help="key=value or JSON config file")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--threads", type=int, default=None, help="worker threads")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("convergence", help="summaries over increasing training sizes")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=_int_list, required=True, help="e.g. 100,400,1600")
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("toy", help="two-dimensional toy model")
    p.add_argument("--sweep", action="store_true", help="sweep sigma over [-1/sqrt2, 1/sqrt2]")
    p.add_argument("--ratios", type=_float_list, default=[1.0, 1.2, 0.7],
                   help="sigma_1 / sigma ratios (default: 1,1.2,0.7)")
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out", default="toy_out")
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("spectrum", help="eigenvalues and the detected cut of a dataset")
    p.add_argument("--dataset", required=True, help="ys CSV file or dataset directory")
    p.add_argument("--h", type=int, default=None, help="force the rank")
    p.add_argument("--threshold", type=float, default=None, help="eigenvalue threshold")
    p.add_argument("--out", default=None, help="write the table here instead of stdout")
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TikholearnError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
