"""Sweep the kernel amplitude and report planned window length, predicted and observed contraction."""
import argparse

import numpy as np

from sddpde.initial import bump
from sddpde.model import make_model
from sddpde.solver import solve


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--amplitudes", default="0.05,0.1,0.2,0.4,0.8,1.6")
    p.add_argument("--t-final", type=float, default=0.5)
    args = p.parse_args()
    print(f"{'amp':>6} {'status':>9} {'windows':>7} {'min T':>9} {'pred':>6} {'obs':>8} {'iters':>5}")
    for a in (float(x) for x in args.amplitudes.split(",")):
        model = make_model(amplitude=a)
        tr = solve(bump(model.n_modes, model.h), model, args.t_final, t_max=None)
        log = tr.window_log
        if not log:
            print(f"{a:6.2f} {tr.status:>9}")
            continue
        print(f"{a:6.2f} {tr.status:>9} {len(log):7d} {min(w['T'] for w in log):9.2e} "
              f"{max(w['predicted'] for w in log):6.3f} {max(w['observed'] for w in log):8.1e} "
              f"{int(np.max([w['iterations'] for w in log])):5d}")


if __name__ == "__main__":
    main()
