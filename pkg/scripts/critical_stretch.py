"""Bisect the cavitation threshold in the far-field stretch for a stored energy."""
import argparse

from slicfan.cavitation3d import critical_lambda
from slicfan.constitutive import make_stored_energy

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("energy", nargs="?", default="reciprocal", choices=["reciprocal", "superlinear", "power"])
    ap.add_argument("--lo", type=float, default=1.5)
    ap.add_argument("--hi", type=float, default=2.0)
    ap.add_argument("--iters", type=int, default=10)
    args = ap.parse_args()
    lo, hi = critical_lambda(make_stored_energy(args.energy), args.lo, args.hi, args.iters)
    print(f"{args.energy}: threshold stretch in ({lo:.6f}, {hi:.6f})")
