"""Posterior state after reading the clock at tau, for a sharp and an unsharp clock.

    python scripts/posterior_demo.py --tau 0.5 --lambdas 0.01,1,100
"""

import argparse

import numpy as np

from tqm.clock import ExponentialClock, posterior_state
from tqm.povm import ideal_time_density, ml_estimate
from tqm.representation import EnergyGrid, Exponential, PhysicsParams, TimeGrid, inner_product, make_energy_state


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tau", type=float, default=0.5)
    ap.add_argument("--lambdas", default="0.01,0.1,1,10,100")
    ap.add_argument("--csv", help="write the last posterior as eps,re,im")
    args = ap.parse_args(argv)

    params = PhysicsParams(1.0)
    psi = make_energy_state(Exponential(1.0), EnergyGrid(40.0, 2 ** 14), params)
    local = TimeGrid(args.tau - 5.0, args.tau + 5.0, 8192)
    print("lambda,likelihood,overlap_with_prior,posterior_time_mode,mass_within_0.1")
    out = None
    for lam in (float(v) for v in args.lambdas.split(",")):
        out = posterior_state(psi, ExponentialClock(lam, params), args.tau)
        dens = ideal_time_density(out.posterior, local)
        near = np.abs(local.points - args.tau) < 0.1
        print(f"{lam:g},{out.likelihood:.6g},{abs(inner_product(out.posterior, psi)):.6f},"
              f"{ml_estimate(dens):.4f},{np.sum(dens.values[near]) * local.step:.4f}")
    if args.csv and out is not None:
        out.to_csv(args.csv)


if __name__ == "__main__":
    main()
