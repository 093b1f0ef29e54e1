"""``gridsense`` command line: validate networks, run scenarios, sweep K.

Exit status is 0 on success, 1 on a configuration or network error and 2
when at least one trial diverged (the report is still written).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import bench
from .exceptions import GridSenseError
from .gamp import SolverOptions
from .network import assemble_topology, load_network, validate_network

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2


def _solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--max-iter", type=int, default=500, help="iteration cap (default 500)")
    p.add_argument("--epsilon", type=float, default=1e-8, help="stop when sum |dx|^2 falls below this")
    p.add_argument("--em", choices=("on", "off"), default="on", help="learn the prior mean and variance")
    p.add_argument("--damping", type=float, default=0.0, help="damping of omega and rho in [0, 1]")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--trials", type=int, default=None, help="override the scenario trial count")
    p.add_argument("--estimators", default="emswgamp,lmmse", help="comma-separated subset of emswgamp,lmmse")
    p.add_argument("--format", choices=bench.FORMATS, default="pretty")
    p.add_argument("-o", "--output", default=None, help="write the report here as well as to stdout")
    p.add_argument("--workers", type=int, default=None, help="worker threads (capped by GRIDSENSE_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridsense", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a network file and print its dimensions")
    v.add_argument("network")

    r = sub.add_parser("run", help="Monte Carlo run of one scenario")
    r.add_argument("scenario")
    _solver_flags(r)

    s = sub.add_parser("sweep", help="run the scenario once per K of the selection ladder")
    s.add_argument("scenario")
    s.add_argument("--k", required=True, help="comma-separated K values, e.g. 2,4,17")
    s.add_argument("--bits", type=int, default=None, help="quantizer bits (default: scenario or 1)")
    _solver_flags(s)
    return ap


def _config(args) -> bench.RunConfig:
    sc = bench.load_scenario(args.scenario)
    if args.seed is not None:
        sc.seed = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise bench.ConfigParseError("--trials must be >= 1")
        sc.trials = args.trials
    try:
        opts = SolverOptions(
            max_iterations=args.max_iter,
            epsilon=args.epsilon,
            em_enabled=args.em == "on",
            damping=args.damping,
        )
    except ValueError as exc:
        raise bench.ConfigParseError(str(exc)) from exc
    ests = tuple(e.strip() for e in args.estimators.split(",") if e.strip())
    return bench.RunConfig(sc, ests, args.output, args.format, opts)


def _cmd_validate(args) -> int:
    model = load_network(args.network)
    v = validate_network(model)
    H = assemble_topology(model).H
    print(f"{model.name or args.network}: N={v.N} buses, L={v.L} PMUs, M={v.M} meters, "
          f"P={v.P} channels, H {H.shape[0]}x{H.shape[1]}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _config(args)
    report = bench.run_scenario(cfg, args.workers)
    sys.stdout.write(bench.emit_report(report, cfg.format, cfg.output))
    b = report.bits
    print(f"# bits per snapshot {b.bits_total} of {b.baseline_bits} ({b.saved_pct:.2f}% saved); "
          f"per component {b.component_bits} of {b.component_baseline}", file=sys.stderr)
    if report.diverged:
        print(f"# {report.diverged} diverged trial(s)", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    try:
        ks = [int(k) for k in args.k.split(",") if k.strip()]
    except ValueError:
        raise bench.ConfigParseError(f"--k must be comma-separated integers, got {args.k!r}") from None
    if args.bits is not None:
        cfg.scenario.profile = {**cfg.scenario.profile, "bits": args.bits}
    results = bench.sweep_k(cfg, ks, args.workers)
    text = bench.render_sweep(results, cfg.format)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_DIVERGED if any(rep.diverged for _, rep in results) else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"validate": _cmd_validate, "run": _cmd_run, "sweep": _cmd_sweep}[args.command]
    try:
        return handler(args)
    except (GridSenseError, OSError, ValueError) as exc:
        print(f"gridsense: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
