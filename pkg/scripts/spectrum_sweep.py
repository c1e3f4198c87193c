"""Largest Re(lambda) of the linearization over a frequency sweep, one line per omega.

The imaginary part and pi/h are printed alongside: candidates near the top of the lattice band
(|Im lambda| comparable to pi/h) are grid modes, not instabilities of the wave.

    python3 scripts/spectrum_sweep.py --k 1 --omegas 0.5:0.95:10 --points 400
"""

import argparse

import numpy as np

from solerlab.clifford import build_algebra
from solerlab.linearization import (GridConfig, SpectrumConfig, assemble_one_frequency, compute_spectrum,
                                    detect_instability)
from solerlab.profiles import Nonlinearity, solve_soler_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=float, default=1.0)
    ap.add_argument("--omegas", default="0.5:0.95:10", help="lo:hi:count")
    ap.add_argument("--points", type=int, default=400)
    args = ap.parse_args()
    lo, hi, count = args.omegas.split(":")
    nl = Nonlinearity.power(args.k)
    alg = build_algebra(1, 2)
    print("omega,re_lambda,im_lambda,pi_over_h,threshold,unstable")
    for omega in np.linspace(float(lo), float(hi), int(count)):
        prof = solve_soler_profile(omega, 1.0, 1, nl)
        op = assemble_one_frequency(alg, prof, nl, GridConfig(M=args.points))
        spec = compute_spectrum(op, SpectrumConfig(vectors=False))
        modes = detect_instability(spec)
        lam = spec.eigenvalues[np.argmax(spec.eigenvalues.real)]
        print(f"{omega:.4f},{lam.real:.6e},{abs(lam.imag):.4f},{np.pi / op.h:.2f},"
              f"{spec.tolerances['threshold']:.3e},{len(modes)}")


if __name__ == "__main__":
    main()
