"""Pointer width and height across the sharp, wide-band and classical limits.

    python scripts/limit_sweeps.py > sweeps.csv
"""

import argparse
import math
import sys

from tqm.clock import ExponentialClock, TruncatedExponentialClock, sharpness_metrics
from tqm.representation import PhysicsParams, TimeGrid


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lambdas", default="1,0.5,0.1,0.01")
    ap.add_argument("--energies", default="1,4,16,64")
    ap.add_argument("--hbars", default="1,0.5,0.1")
    args = ap.parse_args(argv)
    floats = lambda s: [float(v) for v in s.split(",") if v.strip()]  # noqa: E731
    tg = TimeGrid(-80.0, 80.0, 2 ** 14)

    out = sys.stdout
    out.write("sweep,value,metric,measured,expected\n")
    for lam in floats(args.lambdas):
        m = sharpness_metrics(ExponentialClock(lam), tg)
        out.write(f"lambda,{lam:g},fwhm,{m.fwhm:.10g},{2 * lam:.10g}\n")
    for hb in floats(args.hbars):
        m = sharpness_metrics(ExponentialClock(1.0, PhysicsParams(hb)), tg)
        out.write(f"hbar,{hb:g},fwhm,{m.fwhm:.10g},{2 * hb:.10g}\n")
    for E in floats(args.energies):
        m = sharpness_metrics(TruncatedExponentialClock(0.0, E), tg)
        out.write(f"E,{E:g},peak,{m.peak_height:.10g},{E / (2 * math.pi):.10g}\n")
        out.write(f"E,{E:g},fwhm,{m.fwhm:.10g},\n")


if __name__ == "__main__":
    main()
