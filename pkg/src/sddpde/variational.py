"""Linearized flow along a computed trajectory and its finite-difference check.

The variational equation ``v' = -A v + DF(x_t) v_t`` is solved with the same
windowed Picard machinery and the same window schedule as the base run.  On
identical grids the discrete variational solution is the derivative of the
discrete solution map, so central differences of re-projected solves converge
to it at second order until rounding takes over.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .history import HermiteCurve, HistorySegment, norms, segment_at
from .manifold import estimate_b, project_to_manifold
from .nonlinearity import linearized_forcing
from .solver import Trajectory, c1_gap_on, picard_engine, rates, solve

DEFAULT_STEPS = (1e-2, 1e-3, 1e-4)


@dataclass
class VariationalRun:
    base: Trajectory
    direction: HistorySegment
    times: np.ndarray
    v_values: np.ndarray
    v_derivs: np.ndarray
    sign: str = "-A"
    fd_comparison: list = field(default_factory=list)
    status: str = "ok"
    message: str = ""

    @property
    def h(self) -> float:
        return self.base.h

    @property
    def curve(self) -> HermiteCurve:
        return HermiteCurve(self.times, self.v_values, self.v_derivs)

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _shifted(curve: HermiteCurve, shift: float) -> HermiteCurve:
    return HermiteCurve(curve.times - shift, curve.values, curve.derivs)


def solve_variational(base: Trajectory, chi: HistorySegment, model, sign: str = "-A",
                      tol: float = 1e-12, max_iter: int = 200) -> VariationalRun:
    """Integrate the linearized equation with ``v_0 = chi`` on the base window schedule."""
    if not base.ok:
        raise ValueError(f"base trajectory is flagged {base.status!r}: {base.message}")
    if any("m_t" not in rec for rec in base.window_log):
        raise ValueError("base trajectory must come from the Picard solver")
    if abs(chi.h - base.h) > 1e-12:
        raise ValueError("direction horizon differs from the base horizon")
    h = base.h
    rate = rates(model, sign)
    base_curve = base.curve
    times, vals, ders = [chi.times], [chi.values], [chi.derivs]
    vcurve = HermiteCurve(chi.times, chi.values, chi.derivs)
    status, message = "ok", ""
    t0 = 0.0
    for k, rec in enumerate(base.window_log):
        T, m_t = rec["T"], rec["m_t"]
        seg = chi if k == 0 else segment_at(vcurve, t0, h)
        local = _shifted(base_curve.restrict(t0 - h, t0 + T), t0)
        s = np.linspace(0.0, T, m_t)
        r_base = model.delay.delays(local, s)[0]

        def force(vc, s_, local=local, r_base=r_base):
            return linearized_forcing(model, local, vc, s_, r_base), r_base

        with np.errstate(over="ignore", invalid="ignore"):
            res = picard_engine(seg, T, m_t, rate, force, tol, max_iter)
        if not res.converged:
            status = "diverged"
            message = (f"variational: window at t={t0:.6g} stopped after {res.iterations} "
                       f"sweeps with increment {res.increment:.3e}")
            break
        start = 0 if k == 0 else 1
        times.append(t0 + res.s[start:])
        vals.append(res.values[start:])
        ders.append(res.derivs[start:])
        vcurve = HermiteCurve(np.concatenate(times), np.vstack(vals), np.vstack(ders))
        t0 = t0 + T
    return VariationalRun(base, chi, np.concatenate(times), np.vstack(vals), np.vstack(ders),
                          sign, [], status, message)


@dataclass
class DerivativeCheck:
    t_eval: float
    h_steps: list
    errors: list
    order: float
    passed: bool
    sign: str
    message: str = ""

    def to_dict(self) -> dict:
        return {"t_eval": self.t_eval, "h_steps": list(self.h_steps), "errors": list(self.errors),
                "order": self.order, "passed": self.passed, "sign": self.sign,
                "message": self.message}


def _fit_order(h_steps, errors) -> float:
    h = np.log(np.asarray(h_steps, dtype=float))
    e = np.log(np.maximum(np.asarray(errors, dtype=float), 1e-300))
    if not np.all(np.isfinite(e)) or len(h) < 2:
        return float("nan")
    return float(np.polyfit(h, e, 1)[0])


def semiflow_derivative_check(phi: HistorySegment, chi: HistorySegment, model, t_eval: float,
                              h_steps=DEFAULT_STEPS, sign: str = "-A", tol: float = 1e-13,
                              max_error: float = 1e-3, b: float | None = None) -> DerivativeCheck:
    """Compare ``v_t`` with central differences of re-projected solves.

    ``phi`` should lie on the solution manifold and ``chi`` be tangent there.
    PASS needs errors decreasing as ``h`` shrinks and the smallest-``h``
    error at most ``max_error`` (relative, C1 norm on the segment).
    """
    steps = sorted((float(x) for x in h_steps), reverse=True)
    base = solve(phi, model, t_eval, tol=tol)
    if not base.ok:
        return DerivativeCheck(t_eval, steps, [], float("nan"), False, sign, base.message)
    run = solve_variational(base, chi, model, sign, tol=min(tol, 1e-12))
    if not run.ok:
        return DerivativeCheck(t_eval, steps, [], float("nan"), False, sign, run.message)
    v_seg = segment_at(run, t_eval, model.h)
    grid = v_seg.sample_points()
    scale = norms(v_seg).c1_norm
    if b is None:
        b = estimate_b(phi, model)
    errors = []
    for hs in steps:
        ends = []
        for sgn in (1.0, -1.0):
            start, _ = project_to_manifold(phi + (sgn * hs) * chi, model, b=b, tol=1e-15,
                                           member_tol=1e-15)
            tr = solve(start, model, t_eval, tol=tol, schedule=base.schedule)
            if not tr.ok:
                return DerivativeCheck(t_eval, steps, errors, float("nan"), False, sign, tr.message)
            ends.append(segment_at(tr, t_eval, model.h))
        quotient = HermiteCurve(ends[0].times, (ends[0].values - ends[1].values) / (2 * hs),
                                (ends[0].derivs - ends[1].derivs) / (2 * hs))
        with np.errstate(over="ignore", invalid="ignore"):
            err = c1_gap_on(quotient, v_seg, grid) / scale if scale > 0 else c1_gap_on(quotient, v_seg, grid)
        errors.append(float(err) if np.isfinite(err) else float("inf"))
    run.fd_comparison = [(t_eval, hs, e) for hs, e in zip(steps, errors)]
    decreasing = all(b_ < a_ for a_, b_ in zip(errors, errors[1:]))
    passed = bool(decreasing and errors[-1] <= max_error)
    msg = "" if passed else (f"variational: derivative check failed (errors {errors}, "
                             f"decreasing={decreasing}, sign {sign})")
    return DerivativeCheck(t_eval, steps, errors, _fit_order(steps, errors), passed, sign, msg)
