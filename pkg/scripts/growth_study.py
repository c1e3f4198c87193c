"""Compare the leading unstable eigenvalue with the growth rate of a perturbed evolution.

    python3 scripts/growth_study.py --k 3 --omega 0.95 --eps 1e-5 --T 150
"""

import argparse

import numpy as np

from solerlab.clifford import build_algebra
from solerlab.evolution import periodic_grid_for, perturbation_growth
from solerlab.fields import SpinorField
from solerlab.linearization import (GridConfig, assemble_one_frequency, complexify_vector, compute_spectrum,
                                    detect_instability)
from solerlab.profiles import Nonlinearity, solve_soler_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=float, default=3.0)
    ap.add_argument("--omega", type=float, default=0.95)
    ap.add_argument("--eps", type=float, default=1e-5)
    ap.add_argument("--T", type=float, default=150.0)
    ap.add_argument("--dt", type=float, default=2e-3)
    ap.add_argument("--points", type=int, default=800)
    args = ap.parse_args()
    nl = Nonlinearity.power(args.k)
    prof = solve_soler_profile(args.omega, 1.0, 1, nl)
    op = assemble_one_frequency(build_algebra(1, 2), prof, nl, GridConfig(M=args.points))
    modes = detect_instability(compute_spectrum(op))
    if not modes:
        print("no eigenvalue above threshold")
        return
    lam = modes[0].eigenvalue
    vec = op.to_rho(modes[0].vector)
    j = int(np.argmax(np.abs(vec)))
    y = (vec * np.exp(-1j * np.angle(vec[j]))).real
    mode = SpinorField(complexify_vector(y).reshape(2, -1), op.grid)
    rec = perturbation_growth(prof, mode, args.eps, args.T, args.dt, periodic_grid_for(prof, M=1024), nl)
    print(f"eigenvalue      {lam.real:.6f} {lam.imag:+.6f}i")
    if rec.inconclusive:
        print(f"evolution       inconclusive ({rec.reason})")
    else:
        print(f"evolution rate  {rec.rate:.6f}  R^2 {rec.r_squared:.6f}  window {rec.window}")
        print(f"relative error  {abs(rec.rate - lam.real) / lam.real:.2%}")


if __name__ == "__main__":
    main()
