"""Finite-difference derivative check of the semiflow under both sign conventions.

Only the dissipative convention should pass; the other is kept as a regression guard.
"""
import argparse
import json

from sddpde.initial import random_segment
from sddpde.manifold import estimate_b, project_tangent, project_to_manifold, random_unit_directions
from sddpde.model import make_model
from sddpde.variational import semiflow_derivative_check


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--t-eval", type=float, default=0.5)
    args = p.parse_args()
    model = make_model()
    raw = random_segment(model.n_modes, model.h, args.seed, amplitude=0.3)
    b = estimate_b(raw, model)
    phi, _ = project_to_manifold(raw, model, b=b, tol=1e-15, member_tol=1e-15)
    chi = project_tangent(phi, random_unit_directions(phi, 2, args.seed)[1], model, b=b)
    for sign in ("-A", "+A"):
        rep = semiflow_derivative_check(phi, chi, model, args.t_eval, b=b, sign=sign)
        print(json.dumps({"sign": sign, "passed": rep.passed, "order": round(rep.order, 3),
                          "errors": [f"{e:.3e}" for e in rep.errors]}))


if __name__ == "__main__":
    main()
