"""Time-step self-convergence of the method-of-steps schemes against a tight Picard run.

Prints the error at t_final and the observed order for each scheme.
"""
import argparse

import numpy as np

from sddpde.initial import bump
from sddpde.model import make_model
from sddpde.solver import method_of_steps_oracle, solve
from sddpde.spectral import l2_norm


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-modes", type=int, default=8)
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--steps", default="8e-3,4e-3,2e-3,1e-3")
    args = p.parse_args()
    model = make_model(n_modes=args.n_modes)
    phi = bump(args.n_modes, model.h)
    ref = solve(phi, model, args.t_final, tol=1e-13, m_t=129).curve(args.t_final)
    steps = [float(s) for s in args.steps.split(",")]
    print(f"{'scheme':<10} {'dt':>8} {'error':>11} {'order':>6}")
    for scheme in ("exp_euler", "etd2", "rk4"):
        prev = None
        for dt in steps:
            orc = method_of_steps_oracle(phi, model, args.t_final, dt, scheme)
            if not orc.ok:
                print(f"{scheme:<10} {dt:>8.1e} {orc.status}")
                continue
            err = float(l2_norm(orc.curve(args.t_final) - ref))
            order = "" if prev is None else f"{np.log2(prev / err):6.2f}"
            print(f"{scheme:<10} {dt:>8.1e} {err:11.3e} {order:>6}")
            prev = err


if __name__ == "__main__":
    main()
