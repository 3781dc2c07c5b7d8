"""TV distance between clock-realized and ideal time densities as the clock sharpens.

    python scripts/nogo_staircase.py --lambdas 1,0.3,0.1,0.03,0.01 --out nogo.csv
"""

import argparse
import sys

from tqm.config import ExperimentConfig
from tqm.povm import lorentzian_tv, nogo_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambdas", default="1,0.3,0.1,0.03,0.01")
    ap.add_argument("--beta", type=float, default=1.0, help="exponential state rate")
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args(argv)

    cfg = ExperimentConfig(state_beta=args.beta).validate()
    lams = [float(v) for v in args.lambdas.split(",") if v.strip()]
    table = nogo_sweep(cfg.state(), lams, cfg.time_grid())
    if args.out:
        table.to_csv(args.out)
    out = sys.stdout
    hbar = cfg.hbar
    out.write("lambda,tv_window,tv_full_line\n")
    for lam, d in zip(lams, table.distances):
        # psi ~ exp(-beta eps) has a Cauchy law of scale hbar beta; the clock adds hbar lam
        closed = lorentzian_tv(hbar * args.beta, hbar * (args.beta + lam))
        out.write(f"{lam:g},{d:.6f},{closed:.6f}\n")


if __name__ == "__main__":
    main()
