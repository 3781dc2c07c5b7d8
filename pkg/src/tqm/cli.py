"""Command-line front end: ``tqm verify|density|clock|sweep|nogo``.

Exit codes: 0 all checks pass, 1 a check or physics failure, 2 a usage or
configuration error.  A JSON report is written in every case.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import clock as ck
from .checks import NOGO_LAMBDAS, run_checks
from .config import ConfigError, ExperimentConfig
from .povm import ideal_time_density, nogo_sweep, total_variation
from .report import RunReport
from .representation import PhysicsParams
from .sampling import ks_statistic, sample_density, write_samples

log = logging.getLogger("tqm")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list:
    vals = [v.strip() for v in text.split(",") if v.strip()]
    try:
        return [float(v) for v in vals]
    except ValueError:
        raise UsageError(f"cannot parse value list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--report", help="JSON report path (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tqm", description="time-measurement numerics")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("verify", parents=[common], help="run the verification suite")

    d = sub.add_parser("density", parents=[common], help="ideal time density CSV")
    d.add_argument("--out", required=True)

    c = sub.add_parser("clock", parents=[common], help="clock-model run")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--tau", type=float, help="posterior at this outcome")
    g.add_argument("--samples", type=int, help="number of outcome samples")
    c.add_argument("--out", required=True)
    c.add_argument("--density-out", help="tau,p_real,p_ideal CSV (default: derived from --out)")

    s = sub.add_parser("sweep", parents=[common], help="limit sweep of a pointer metric")
    s.add_argument("--param", choices=("lambda", "E", "hbar"), required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--metric", choices=("fwhm", "tv", "peak"), required=True)
    s.add_argument("--out", required=True)

    n = sub.add_parser("nogo", parents=[common], help="TV distance staircase")
    n.add_argument("--lambdas", default=",".join(str(x) for x in NOGO_LAMBDAS))
    n.add_argument("--out", required=True)
    return p


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        cfg.set(k, v)
    return cfg.validate()


def _density_path(args) -> str:
    if args.density_out:
        return args.density_out
    if args.tau is None and args.samples is None:
        return args.out
    stem = args.out[:-4] if args.out.endswith(".csv") else args.out
    return stem + ".density.csv"


def write_columns(path, header, *cols):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


# --- commands -----------------------------------------------------------------------

def cmd_verify(cfg, args, rep: RunReport):
    for c in run_checks(cfg):
        rep.add_check(c.name, c.value, c.tolerance, **c.detail)
    rep.results["profile"] = cfg.tolerance


def cmd_density(cfg, args, rep: RunReport):
    psi = cfg.state()
    dens = ideal_time_density(psi, cfg.time_grid())
    dens.to_csv(args.out, column="p_ideal")
    rep.add_output(args.out)
    rep.results.update(mass=dens.mass, tail_loss=dens.tail_loss,
                       state_tail_mass=psi.notes["tail_mass"])


def cmd_clock(cfg, args, rep: RunReport):
    psi, clk, tg = cfg.state(), cfg.clock(), cfg.time_grid()
    real = ck.outcome_density(psi, clk, tg)
    ideal = ideal_time_density(psi, tg)
    dpath = _density_path(args)
    write_columns(dpath, ("tau", "p_real", "p_ideal"), tg.points, real.values, ideal.values)
    rep.results.update(mass_real=real.mass, mass_ideal=ideal.mass,
                       tv_distance=total_variation(real, ideal))
    if args.tau is not None:
        try:
            out = ck.posterior_state(psi, clk, args.tau)
        except ck.ImpossibleOutcomeError as exc:
            rep.add_output(dpath)
            rep.add_check("likelihood_above_floor", math.inf, ck.POSTERIOR_FLOOR)
            rep.error = str(exc)
            return
        out.to_csv(args.out)
        rep.add_output(args.out)
        rep.results.update(tau=out.tau, likelihood=out.likelihood,
                           posterior_norm2=out.posterior.norm2)
        rep.add_check("posterior_norm", out.posterior.norm2 - 1, 1e-12)
        rep.add_check("posterior_negative_energy_mass",
                      out.posterior.notes["discarded_negative_mass"], 1e-10)
    elif args.samples is not None:
        if args.samples < 1:
            raise UsageError("--samples must be >= 1")
        draws = sample_density(real, args.samples, cfg.seed)
        write_samples(args.out, draws)
        rep.add_output(args.out)
        ks = ks_statistic(draws, real)
        rep.results.update(samples=args.samples, seed=cfg.seed, median=float(np.median(draws)))
        rep.add_check("sampler_ks", ks, 1.95 / math.sqrt(args.samples))
    if dpath != args.out or (args.tau is None and args.samples is None):
        rep.add_output(dpath)


def _sweep_metric(cfg, param, value, metric):
    hbar = value if param == "hbar" else cfg.hbar
    params = PhysicsParams(hbar)
    kw = {"params": params}
    if param == "lambda":
        kw["lam"] = value
    elif param == "E":
        if cfg.clock_kind != "b":
            raise ConfigError("an E sweep needs clock.kind=b")
        kw["E"] = value
    clk = cfg.clock(**kw)
    if metric == "tv":
        c2 = ExperimentConfig(**{**cfg.__dict__, "hbar": hbar})
        psi, tg = c2.state(), c2.time_grid()
        return total_variation(ck.outcome_density(psi, clk, tg), ideal_time_density(psi, tg))
    m = ck.sharpness_metrics(clk, cfg.time_grid())
    return m.fwhm if metric == "fwhm" else m.peak_height


def cmd_sweep(cfg, args, rep: RunReport):
    values = _floats(args.values)
    if not values:
        raise UsageError("empty --values list")
    metrics = [_sweep_metric(cfg, args.param, v, args.metric) for v in values]
    write_columns(args.out, ("value", "metric"), values, metrics)
    rep.add_output(args.out)
    pairs = list(zip(values, metrics))
    rep.results.update(param=args.param, metric=args.metric, rows=pairs,
                       increasing=all(b > a for a, b in zip(metrics, metrics[1:])),
                       decreasing=all(b < a for a, b in zip(metrics, metrics[1:])))


def cmd_nogo(cfg, args, rep: RunReport):
    lams = _floats(args.lambdas)
    if not lams:
        raise UsageError("empty --lambdas list")
    try:
        table = nogo_sweep(cfg.state(), lams, cfg.time_grid())
    except ConfigError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    table.to_csv(args.out)
    rep.add_output(args.out)
    d = table.distances
    rep.results.update(rows=table.rows())
    rep.add_check("nogo_positive", sum(1 for x in d if not x > 0), 0)
    rep.add_check("nogo_decreasing", sum(1 for a, b in zip(d, d[1:]) if not a > b), 0)


COMMANDS = {"verify": cmd_verify, "density": cmd_density, "clock": cmd_clock,
            "sweep": cmd_sweep, "nogo": cmd_nogo}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    rep = RunReport(args.command)
    try:
        cfg = load_config(args)
        rep.config = cfg.as_dict()
        COMMANDS[args.command](cfg, args, rep)
        rep.exit_code = EXIT_OK if rep.all_passed and rep.error is None else EXIT_FAIL
    except (ConfigError, UsageError) as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
        rep.exit_code = EXIT_USAGE
    except OSError as exc:
        rep.error = f"I/O error: {exc}"
        rep.exit_code = EXIT_USAGE
    if rep.error:
        print(f"tqm {args.command}: {rep.error}", file=sys.stderr)
    try:
        rep.write(args.report)
    except OSError as exc:
        print(f"tqm: cannot write report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
