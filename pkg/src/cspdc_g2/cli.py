"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 model-domain error,
3 validation failure.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import analytic, detstate, montecarlo, optsweep
from .configfile import fmt, load_config, write_table
from .core import (
    ConfigError,
    DomainError,
    EstimationError,
    ExperimentConfig,
    G2Error,
    Model,
    ResourceError,
    SourceKind,
)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(G2Error):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _windows(text: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value < 1 or value != int(value):
        raise argparse.ArgumentTypeError(f"window count must be a positive integer, got {text!r}")
    return int(value)


def _print_rates(rates, out):
    for name, value in rates.items():
        out.write(f"rate {name:<5s} {fmt(value)} /s\n")


def _evaluate(model: str, loaded, args):
    cfg = loaded.experiment
    if model == "analytic":
        if cfg.is_cascaded:
            return analytic.g2_cspdc(cfg, two_pair=args.two_pair)
        return analytic.g2_spdc(cfg)
    if model == "matrix":
        return detstate.g2_matrix(cfg, loaded.truncation_epsilon)
    return montecarlo.g2_montecarlo(cfg, args.windows, args.seed, workers=args.workers)


def cmd_g2(args, out) -> int:
    loaded = load_config(args.config)
    loaded.experiment.require_pair_rate()
    res = _evaluate(args.model, loaded, args)
    line = f"g2 {fmt(res.g2)}"
    if res.statistical_sigma is not None:
        line += f" +/- {fmt(res.statistical_sigma)}"
    if res.upper_bound is not None:
        line += f" (95% upper bound {fmt(res.upper_bound)})"
    out.write(f"model {res.model.value}\nsource {loaded.experiment.source_kind.value}\n{line}\n")
    _print_rates(res.rates, out)
    return EXIT_OK


def _model_arg(model: str) -> Model:
    if model == "mc":
        raise UsageError("--model mc is not available for searches; use analytic or matrix")
    return Model(model)


def cmd_min(args, out) -> int:
    loaded = load_config(args.config)
    cfg, model = loaded.experiment, _model_arg(args.model)
    minimum = optsweep.minimize_g2(model, cfg, epsilon=loaded.truncation_epsilon)
    out.write(f"model {model.value}\nsource {cfg.source_kind.value}\n")
    out.write(f"n_opt {fmt(minimum.n_opt)} /s\n")
    out.write(f"g2_min {fmt(minimum.g2_min)}\n")
    if model is Model.ANALYTIC:
        closed = analytic.g2_cspdc_min(cfg) if cfg.is_cascaded else analytic.g2_spdc_min(cfg)
        out.write(f"g2_min_closed_form {fmt(closed.g2_min)}\n")
    if minimum.degenerate:
        out.write("degenerate yes (optimum at the search boundary; no plateau)\n")
        return EXIT_OK
    pl = optsweep.plateau(model, cfg, loaded.plateau_delta, minimum,
                          epsilon=loaded.truncation_epsilon)
    out.write(f"plateau_delta {fmt(pl.delta)}\n")
    out.write(f"plateau_lo {fmt(pl.lo)} /s{' (open)' if pl.open_lo else ''}\n")
    out.write(f"plateau_hi {fmt(pl.hi)} /s{' (open)' if pl.open_hi else ''}\n")
    out.write(f"plateau_decades {fmt(pl.decades)}\n")
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    loaded = load_config(args.config)
    cfg, model = loaded.experiment, _model_arg(args.model)
    if args.source == "both":
        if not cfg.is_cascaded:
            raise ConfigError("--source both needs a cspdc configuration")
        bases = [cfg.as_spdc(), cfg]
    elif args.source == "spdc":
        bases = [cfg.as_spdc()]
    elif args.source == "cspdc":
        if not cfg.is_cascaded:
            raise ConfigError("--source cspdc needs a cspdc configuration")
        bases = [cfg]
    else:
        bases = [cfg]
    rows = []
    for base in bases:
        spec = optsweep.SweepSpec(
            parameter=args.param, start=args.start, stop=args.stop, points=args.points,
            base_cfg=base, scale=args.scale, model=model, delta=loaded.plateau_delta,
        )
        rows += optsweep.sweep(spec, workers=args.workers or 1)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_table(rows, args.param, fh)
    else:
        write_table(rows, args.param, out)
    if rows and all(r.error for r in rows):
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_criterion(args, out) -> int:
    loaded = load_config(args.config)
    cfg, model = loaded.experiment, _model_arg(args.model)
    if not cfg.is_cascaded:
        raise ConfigError("source.type: criterion needs a cspdc configuration")
    res = optsweep.threshold_crossing(cfg, model)
    out.write(f"model {model.value}\n")
    out.write(f"p_threshold_general {fmt(res.p_threshold)}\n")
    if res.p_threshold_identical is not None:
        out.write(f"p_threshold_identical_detectors {fmt(res.p_threshold_identical)}\n")
        diff = abs(res.p_threshold_identical - res.p_threshold) / res.p_threshold \
            if res.p_threshold > 0 else math.inf
        out.write(f"identical_vs_general_rel_diff {fmt(diff)}\n")
    else:
        out.write("p_threshold_identical_detectors n/a (detectors differ)\n")
    out.write(f"p_star_numeric {fmt(res.p_star)} ({res.status})\n")
    out.write(f"p_star_vs_general_rel_diff {fmt(res.relative_difference)}\n")
    verdict = optsweep.is_advantageous(cfg, model)
    out.write(f"cascade_efficiency {fmt(cfg.cascade_efficiency)}\n")
    out.write(f"ADVANTAGEOUS {'yes' if verdict else 'no'}\n")
    return EXIT_OK


def _rel(a, b):
    if a is None or b is None:
        return "n/a"
    if b == 0:
        return fmt(0.0) if a == 0 else "inf"
    return fmt(abs(a - b) / abs(b))


def cmd_validate(args, out) -> int:
    loaded = load_config(args.config)
    cfg = loaded.experiment
    cfg.require_pair_rate()

    ana = ana_alt = None
    if cfg.symmetric_g2_detectors():
        try:
            if cfg.is_cascaded:
                ana = analytic.g2_cspdc(cfg).g2
                ana_alt = analytic.g2_cspdc(cfg, two_pair=analytic.TWO_PAIR_UNCONVERTED).g2
            else:
                ana = analytic.g2_spdc(cfg).g2
        except DomainError:
            pass
    model = detstate.MatrixModel(cfg, loaded.truncation_epsilon)
    marg = model.marginals([cfg.pair_rate])[0]
    mat = float(model.g2_from_marginals(marg))
    tally = montecarlo.simulate(montecarlo.SimulationPlan(cfg, args.windows, args.seed),
                                workers=args.workers)
    est = montecarlo.g2_estimate(tally, cfg.source_kind, cfg.window)

    out.write(f"source {cfg.source_kind.value}\nwindows {args.windows}\nseed {args.seed}\n")
    out.write(f"{'':<10s}{'analytic':>17s}{'matrix':>17s}{'mc':>17s}{'mc_sigma':>17s}\n")
    out.write(f"{'g2':<10s}{fmt(ana) or 'n/a':>17s}{fmt(mat):>17s}{fmt(est.g2):>17s}"
              f"{fmt(est.statistical_sigma):>17s}\n")
    if est.upper_bound is not None:
        out.write(f"mc_upper_bound {fmt(est.upper_bound)}\n")
    out.write(f"rel_diff analytic-matrix {_rel(ana, mat)}\n")
    out.write(f"rel_diff analytic-mc {_rel(ana, est.g2)}\n")
    out.write(f"rel_diff matrix-mc {_rel(est.g2, mat)}\n")
    if ana_alt is not None:
        out.write(f"analytic_unconverted_two_pair {fmt(ana_alt)} rel_diff_vs_matrix {_rel(ana_alt, mat)}\n")

    failed = []
    g2_ok = montecarlo.g2_consistent(est, mat)
    z = (est.g2 - mat) / est.statistical_sigma if est.statistical_sigma else 0.0
    out.write(f"g2 matrix-mc z {z:+.3f} {'ok' if g2_ok else 'FAIL'}\n")
    if not g2_ok:
        failed.append("g2")
    for chk in montecarlo.compare_marginals(tally, marg):
        status = "ok" if chk.consistent else "FAIL"
        out.write(f"marginal {chk.combo:<5s} count {chk.count:>10d} expected {fmt(chk.expected)} "
                  f"z {chk.z:+.3f} p {chk.p_value:.3e} {status}\n")
        if not chk.consistent:
            failed.append(chk.combo)
    if failed:
        out.write(f"FAIL matrix vs mc beyond 3 sigma: {', '.join(failed)}\n")
        return EXIT_VALIDATION
    out.write("PASS\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cspdc-g2",
                description="Heralded g2 of SPDC and cascaded-SPDC single-photon sources.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, models=("analytic", "matrix", "mc"), default="matrix"):
        sp.add_argument("config", help="TOML experiment configuration")
        sp.add_argument("--model", choices=models, default=default)
        sp.add_argument("--workers", type=int, default=None,
                        help=f"worker threads (default: ${montecarlo.WORKERS_ENV} or CPU count)")

    g = sub.add_parser("g2", help="evaluate g2 at the configured pair rate")
    common(g)
    g.add_argument("--windows", type=_windows, default=10 ** 7)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--two-pair", choices=analytic.TWO_PAIR_FORMS, default=analytic.TWO_PAIR_CASCADED,
                   help="form of the analytic double-cascade fourfold term")
    g.set_defaults(func=cmd_g2)

    m = sub.add_parser("min", help="minimise g2 over the pair rate and report the plateau")
    common(m, ("analytic", "matrix"))
    m.set_defaults(func=cmd_min)

    s = sub.add_parser("sweep", help="parameter sweep written as CSV")
    common(s, ("analytic", "matrix"))
    s.add_argument("--param", required=True, choices=[x.value for x in optsweep.SweepParameter])
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--points", type=int, default=50)
    scale = s.add_mutually_exclusive_group()
    scale.add_argument("--log", dest="scale", action="store_const", const="log")
    scale.add_argument("--linear", dest="scale", action="store_const", const="linear")
    s.set_defaults(scale="log")
    s.add_argument("--source", choices=("config", "spdc", "cspdc", "both"), default="config")
    s.add_argument("--out", help="CSV output path (default: stdout)")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("criterion", help="cascade-efficiency threshold and verdict")
    common(c, ("analytic", "matrix"), default="analytic")
    c.set_defaults(func=cmd_criterion)

    v = sub.add_parser("validate", help="compare analytic, matrix and Monte Carlo models")
    v.add_argument("config")
    v.add_argument("--windows", type=_windows, default=10 ** 7)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=None)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ResourceError, EstimationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
