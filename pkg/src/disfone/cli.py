"""Command-line entry point: ``disfone <subcommand> [options]``."""

import argparse
import logging
import sys

from . import harness
from .data import dump_csv, generate_problem
from .harness import ExperimentSpec, parse_config


def _spec_from_args(args, **defaults):
    """Subcommand defaults, overridden by the --spec file, overridden by flags."""
    fields = dict(defaults)
    if args.spec:
        with open(args.spec) as fh:
            fields.update(parse_config(fh.read()))
    if args.seed is not None:
        fields["seed"] = args.seed
    if args.reps is not None:
        fields["reps"] = args.reps
    return ExperimentSpec(**fields)


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _emit(report, args):
    if args.out in (None, "-"):
        text = harness.report_to_csv(report) if args.format == "csv" else harness.render_table(report)
        sys.stdout.write(text)
    else:
        harness.emit_report(report, args.out, args.format)


def cmd_generate(args):
    spec = _spec_from_args(args)
    problem = generate_problem(spec.loss_model(), spec.design_spec(), spec.N,
                               seed=spec.seed, noise_sd=spec.noise_sd)
    out = args.out or "dataset.csv"
    dump_csv(problem.dataset, out)
    print(f"wrote {problem.dataset.n} x {problem.dataset.p} samples to {out}", file=sys.stderr)
    print("theta_star = " + ",".join(repr(float(v)) for v in problem.theta_star), file=sys.stderr)


def cmd_run(args):
    if not args.spec:
        raise SystemExit("run needs --spec")
    report = harness.run_experiment(_spec_from_args(args), threads=args.threads)
    _emit(report, args)


def _parse_values(param, text):
    return [int(float(v)) for v in text.split(",") if v.strip()]


def cmd_sweep(args):
    spec = _spec_from_args(args)
    results = harness.run_sweep(spec, args.param, _parse_values(args.param, args.values), args.threads)
    if args.format == "csv":
        _write(harness.sweep_summary_csv(args.param, results), args.out)
    else:
        text = "".join(f"# {args.param} = {v}\n" + harness.render_table(r) for v, r in results)
        _write(text, args.out)


def cmd_inference(args):
    overrides = {"model": "quantile", "N": 200_000, "L": 1, "estimators": ("SINVW", "VARIANCE")}
    spec = _spec_from_args(args, **overrides)
    _emit(harness.run_experiment(spec, threads=args.threads), args)


def cmd_demo_random_init(args):
    overrides = {"model": "logistic", "p": 200, "N": 100_000, "L": 1,
                 "estimators": ("INIT", "SGD", "RANDINIT_SGD")}
    spec = _spec_from_args(args, **overrides)
    report = harness.run_experiment(spec, threads=args.threads)
    _emit(report, args)
    ratio = report.mean("RANDINIT_SGD") / report.mean("SGD")
    print(f"random-init / consistent-init mean error ratio: {ratio:.2f}", file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(prog="disfone", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", help="experiment spec file (key = value lines)")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--reps", type=int, help="number of replications")
        p.add_argument("--out", help="output path; stdout when omitted")
        p.add_argument("--format", choices=("csv", "table"), default="csv")
        p.add_argument("--threads", type=int, default=1)
        return p

    common(sub.add_parser("generate", help="draw one dataset and write it as CSV")).set_defaults(
        func=cmd_generate)
    common(sub.add_parser("run", help="run the experiment described by --spec")).set_defaults(
        func=cmd_run)
    sw = common(sub.add_parser("sweep", help="repeat an experiment over one parameter"))
    sw.add_argument("--param", required=True, choices=harness.SWEEP_PARAMS)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.set_defaults(func=cmd_sweep)
    common(sub.add_parser("inference", help="Sigma^{-1}w error and variance-ratio study")).set_defaults(
        func=cmd_inference)
    common(sub.add_parser("demo-random-init", help="SGD from a random versus a consistent start")
           ).set_defaults(func=cmd_demo_random_init)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise SystemExit("--seed must be an unsigned 64-bit integer")
    args.func(args)


if __name__ == "__main__":
    main()
