"""Acceptance criteria as callable checks.

Each ``criterion_*`` function runs one self-contained experiment and returns
a :class:`CriterionResult`.  The test suite and the ``certify`` preset both
call these, so the numbers printed by either agree.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .delay import ThresholdDelay, delay_derivative, solve_delay
from .history import HistorySegment, holder_exponent_estimate
from .initial import cusp, random_segment
from .manifold import (estimate_b, manifold_residual, project_tangent, project_to_manifold,
                       random_unit_directions)
from .model import make_model
from .nonlinearity import apply_DF, apply_F, build_ledger, forcing
from .solver import (WindowRejected, classical_residual, method_of_steps_oracle, plan_window,
                     solve, uniqueness_probe)
from .spectral import Spectrum, l2_norm
from .variational import semiflow_derivative_check


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.number} ({self.name}): {self.summary} [{self.runtime:.1f}s]"

    def to_dict(self) -> dict:
        return asdict(self)


def _timed(fn):
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        res.runtime = time.perf_counter() - t
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# 1 -------------------------------------------------------------------------------

def scalar_dde_model(amplitude: float = 0.5, r0: float = 0.5):
    """One mode, constant lag, cosine kernel: ``u' = -u + kappa u(t - r0)``, ``kappa = a pi / 2``."""
    return make_model(n_modes=1, kernel="cosine", amplitude=amplitude, b="identity",
                      delay="constant", r0=r0, h=1.0)


def scalar_dde_history(m: int = 64) -> HistorySegment:
    return HistorySegment.from_function(1.0, lambda s: np.array([1.0 + 0.5 * s + 0.3 * np.sin(3 * s)]),
                                        lambda s: np.array([0.5 + 0.9 * np.cos(3 * s)]), m)


@_timed
def criterion_oracle(seed: int = 42, t_final: float = 2.0) -> CriterionResult:
    """Picard vs method of steps on the scalar reduction, and the four-way probe at N = 16."""
    model = scalar_dde_model()
    phi = scalar_dde_history()
    t = time.perf_counter()
    tr = solve(phi, model, t_final)
    orc = method_of_steps_oracle(phi, model, t_final, 1e-4, "rk4")
    t_scalar = time.perf_counter() - t
    grid = np.linspace(0.0, t_final, 2001)
    gap = float(np.max(l2_norm(tr.curve(grid) - orc.curve(grid))))
    big = make_model()
    phi16 = random_segment(16, 1.0, np.random.default_rng(seed), amplitude=0.3)
    t = time.perf_counter()
    rep = uniqueness_probe(phi16, big, t_final)
    t_probe = time.perf_counter() - t
    ok = gap <= 1e-5 and t_scalar < 5.0 and rep.passed and t_probe < 60.0
    return CriterionResult(1, "oracle equivalence", ok,
                           f"scalar gap {gap:.2e} (<=1e-5, {t_scalar:.2f}s<5s); "
                           f"N=16 divergence {rep.divergence:.2e} (<=1e-4, {t_probe:.1f}s<60s)",
                           {"scalar_gap": gap, "scalar_runtime": t_scalar,
                            "probe_divergence": rep.divergence, "probe_runtime": t_probe,
                            "pairwise": rep.pairwise})


# 2 -------------------------------------------------------------------------------

def random_model(rng, n_modes=None):
    n = int(rng.choice([4, 8, 16])) if n_modes is None else n_modes
    if rng.uniform() < 0.6:
        kern = dict(kernel="gaussian", amplitude=rng.uniform(0.02, 0.3), width=rng.uniform(0.2, 1.0))
    else:
        kern = dict(kernel="cosine", amplitude=rng.uniform(0.02, 0.2))
    b = str(rng.choice(["identity", "tanh", "clipped"]))
    return make_model(n_modes=n, b=b, gain=rng.uniform(0.5, 2.0), clip=rng.uniform(0.5, 2.0),
                      c1=rng.uniform(0.0, 1.0), c2=rng.uniform(2.0, 6.0), c3=rng.uniform(1.0, 2.0),
                      **kern)


@_timed
def criterion_contraction(seed: int = 42, n_models: int = 20, t_final: float = 0.25,
                          tol: float = 1e-10, slack: float = 0.05) -> CriterionResult:
    rng = np.random.default_rng(seed)
    checked = 0
    attempts = 0
    worst_gap = -math.inf
    worst_iter_margin = -math.inf
    windows = 0
    while checked < n_models and attempts < 5 * n_models:
        attempts += 1
        model = random_model(rng)
        phi = random_segment(model.n_modes, model.h, rng, amplitude=0.3)
        try:
            eps = 2.0 * (phi.max_norms()[0] + phi.max_norms()[1] + 1.0)
            plan_window(model, build_ledger(model, eps), eps)
        except WindowRejected:
            continue
        tr = solve(phi, model, t_final, tol=tol)
        if not tr.ok:
            continue
        checked += 1
        for rec in tr.window_log:
            windows += 1
            L = rec["predicted"]
            worst_gap = max(worst_gap, rec["observed"] - L)
            bound = math.ceil(math.log(tol / rec["epsilon"]) / math.log(L)) + 2 if L > 0 else 2
            worst_iter_margin = max(worst_iter_margin, rec["iterations"] - bound)
    ok = checked >= n_models and worst_gap <= slack and worst_iter_margin <= 0
    return CriterionResult(2, "contraction certificate", ok,
                           f"{checked} models/{windows} windows; max(observed-predicted) "
                           f"{worst_gap:.3f} (<= {slack}); max(iters-bound) {worst_iter_margin}",
                           {"models": checked, "windows": windows, "max_ratio_excess": worst_gap,
                            "max_iteration_excess": worst_iter_margin})


# 3 -------------------------------------------------------------------------------

def brute_force_C(alpha: float, n_modes: int, delta: float, t_lo=1e-4, t_hi=10.0,
                  n_t=4000, n_lam=4000) -> float:
    """``sup t^a lam^a exp(-(lam - delta) t)`` over a dense 2-D grid, lam in [1, N^2]."""
    t = np.logspace(np.log10(t_lo), np.log10(t_hi), n_t)
    lam = np.logspace(0.0, np.log10(float(n_modes) ** 2), n_lam) if n_modes > 1 else np.array([1.0])
    best = 0.0
    for chunk in np.array_split(t, 20):
        v = (chunk[:, None] * lam[None, :]) ** alpha * np.exp(-(lam[None, :] - delta) * chunk[:, None])
        best = max(best, float(v.max()))
    return best


@_timed
def criterion_semigroup(seed: int = 42, n_modes: int = 16, delta: float = 0.5) -> CriterionResult:
    sp = Spectrum(n_modes, delta)
    grid = sp.default_t_grid
    rng = np.random.default_rng(seed)
    lam = sp.eigenvalues
    ok = True
    worst24 = 0.0
    worst25 = 0.0
    worst_fit = 0.0
    for a in (0.0, 0.25, 0.5, 1.0):
        C = sp.C_alpha(a)
        lhs = sp.semigroup_norm_bound(a, grid)
        rhs = C * grid ** (-a) * np.exp(-delta * grid)
        worst24 = max(worst24, float(np.max(lhs / rhs)))
        ok &= bool(np.all(lhs <= rhs * (1 + 1e-12)))
        oracle = brute_force_C(a, n_modes, delta)
        rel = abs(C - oracle) / oracle
        worst_fit = max(worst_fit, rel)
        ok &= rel <= 0.05
        if a > 0:
            c_comp = sp.C_alpha(1.0 - a)
            for _ in range(20):
                u = rng.standard_normal(n_modes) / np.arange(1, n_modes + 1) ** rng.uniform(0, 2)
                u /= l2_norm(lam**a * u)
                diff = l2_norm((np.exp(-np.outer(grid, lam)) - 1.0) * u)
                bound = c_comp / a * grid**a
                worst25 = max(worst25, float(np.max(diff / bound)))
                ok &= bool(np.all(diff <= bound * (1 + 1e-12)))
    return CriterionResult(3, "semigroup estimates", bool(ok),
                           f"max lhs/rhs smoothing {worst24:.4f}, increment {worst25:.4f} (<=1); "
                           f"fit vs brute force {100 * worst_fit:.2f}% (<=5%)",
                           {"smoothing_ratio": worst24, "increment_ratio": worst25,
                            "fit_rel_error": worst_fit})


# 4 -------------------------------------------------------------------------------

def random_pair(rng, n_modes: int, h: float = 1.0):
    phi = random_segment(n_modes, h, rng, amplitude=rng.uniform(0.2, 1.0), decay=0.4)
    chi = random_segment(n_modes, h, rng, amplitude=1.0, decay=0.4)
    c1 = chi.max_norms()
    return phi, (1.0 / (c1[0] + c1[1])) * chi


def relative_fd_errors(model, phi, chi, eps: float = 1e-6):
    fd_F = (apply_F(phi + eps * chi, model) - apply_F(phi - eps * chi, model)) / (2 * eps)
    an_F = apply_DF(phi, chi, model)
    err_F = float(l2_norm(fd_F - an_F) / max(l2_norm(an_F), 1e-300))
    d = model.delay
    fd_r = (solve_delay(phi + eps * chi, d).r - solve_delay(phi - eps * chi, d).r) / (2 * eps)
    an_r = delay_derivative(phi, chi, d)
    err_r = abs(fd_r - an_r) / max(abs(an_r), 1e-300)
    return err_F, err_r


@_timed
def criterion_derivatives(seed: int = 42, n_pairs: int = 50, tol: float = 1e-5) -> CriterionResult:
    rng = np.random.default_rng(seed)
    model = make_model(c1=1.0, c2=1.0, c3=1.0, amplitude=0.3)
    worst_F = 0.0
    worst_r = 0.0
    for _ in range(n_pairs):
        phi, chi = random_pair(rng, model.n_modes)
        eF, er = relative_fd_errors(model, phi, chi)
        worst_F = max(worst_F, eF)
        worst_r = max(worst_r, er)
    ok = worst_F <= tol and worst_r <= tol
    return CriterionResult(4, "derivative correctness", ok,
                           f"{n_pairs} pairs: DF rel err {worst_F:.2e}, Dr rel err {worst_r:.2e} (<= {tol:g})",
                           {"df_error": worst_F, "dr_error": worst_r})


# 5 -------------------------------------------------------------------------------

@_timed
def criterion_manifold(seed: int = 42, n_cases: int = 10, t_final: float = 1.0,
                       tol: float = 1e-6) -> CriterionResult:
    rng = np.random.default_rng(seed)
    model = make_model()
    worst_res = 0.0
    worst_jump = 0.0
    for _ in range(n_cases):
        phi0 = random_segment(model.n_modes, model.h, rng, amplitude=0.3)
        phi, rep = project_to_manifold(phi0, model)
        tr = solve(phi, model, t_final)
        worst_res = max(worst_res, classical_residual(tr, model) if tr.ok else math.inf)
    for _ in range(n_cases):
        phi = random_segment(model.n_modes, model.h, rng, amplitude=0.3)
        res = manifold_residual(phi, model).residual_norm
        tr = solve(phi, model, 0.25)
        zero = np.flatnonzero(tr.times == 0.0)
        right = tr.derivs[zero[-1]]
        jump = float(l2_norm(right - phi.head_derivative))
        worst_jump = max(worst_jump, abs(jump - res))
    ok = worst_res <= tol and worst_jump <= tol
    return CriterionResult(5, "manifold invariance", ok,
                           f"max classical residual {worst_res:.2e}; max |jump - residual| "
                           f"{worst_jump:.2e} (<= {tol:g})",
                           {"max_residual": worst_res, "max_jump_mismatch": worst_jump})


# 6 -------------------------------------------------------------------------------

def tangent_pair(model, rng):
    """Projected base history and a tangent direction on its grid."""
    phi0 = random_segment(model.n_modes, model.h, rng, amplitude=0.3)
    b = estimate_b(phi0, model)
    phi, _ = project_to_manifold(phi0, model, b=b, tol=1e-15, member_tol=1e-15)
    raw = random_unit_directions(phi, 2, rng)[1]
    chi = project_tangent(phi, raw, model, b=b)
    return phi, chi, b


@_timed
def criterion_semiflow(seed: int = 42, n_pairs: int = 10, t_eval: float = 0.5,
                       max_error: float = 1e-3) -> CriterionResult:
    rng = np.random.default_rng(seed)
    model = make_model()
    reports = []
    for _ in range(n_pairs):
        phi, chi, b = tangent_pair(model, rng)
        reports.append(semiflow_derivative_check(phi, chi, model, t_eval, b=b, max_error=max_error))
    phi, chi, b = tangent_pair(model, np.random.default_rng(seed + 1))
    wrong = semiflow_derivative_check(phi, chi, model, t_eval, b=b, sign="+A", max_error=max_error)
    worst = max(r.errors[-1] if r.errors else math.inf for r in reports)
    n_ok = sum(r.passed for r in reports)
    ok = n_ok == n_pairs and not wrong.passed
    return CriterionResult(6, "C1-semiflow witness", ok,
                           f"{n_ok}/{n_pairs} pairs pass, worst error at smallest h {worst:.2e} "
                           f"(<= {max_error:g}); '+A' sign check "
                           f"{'FAILS as required' if not wrong.passed else 'unexpectedly passes'}",
                           {"reports": [r.to_dict() for r in reports], "plus_A": wrong.to_dict()})


# 7 -------------------------------------------------------------------------------

def holder_probe(model=None, eta: float = 0.02, levels: int = 6, n_samples: int = 400):
    """Hoelder exponent of ``t -> F(u_t)`` on the first window for cusp data.

    The cusp is placed so that the delayed argument ``t - r(u_t)`` crosses it
    in the middle of the first window; since the window length depends on the
    data, the placement is refined twice.
    """
    model = model or make_model()
    n, h = model.n_modes, model.h
    r0 = solve_delay(cusp(n, h, eta=0.0), model.delay).r
    T = model.h
    theta_c = -r0 + 0.5 * min(T, 0.1)
    for _ in range(3):
        phi = cusp(n, h, eta=eta, theta_c=theta_c, levels=levels)
        tr = solve(phi, model, T)
        if not tr.ok:
            return float("nan"), {"theta_c": theta_c, "window": T, "crosses": False,
                                  "message": tr.message}
        T = tr.window_log[0]["T"]
        r_mid = solve_delay(phi, model.delay).r
        theta_c = -r_mid + 0.5 * T
    phi = cusp(n, h, eta=eta, theta_c=theta_c, levels=levels)
    tr = solve(phi, model, T)
    T = tr.window_log[0]["T"]
    ts = np.linspace(0.0, T, n_samples)
    g, r, _ = forcing(model, tr.curve, ts)
    crossing = ts - r
    expo = holder_exponent_estimate(list(zip(ts, g)))
    return expo, {"theta_c": theta_c, "window": T,
                  "crosses": bool(crossing.min() < theta_c < crossing.max())}


@_timed
def criterion_holder(seed: int = 42, threshold: float = 0.20) -> CriterionResult:
    expo, info = holder_probe()
    ok = expo >= threshold and info["crosses"]
    return CriterionResult(7, "Hoelder bootstrap", bool(ok),
                           f"estimated exponent {expo:.3f} (>= {threshold}); delayed argument "
                           f"{'crosses' if info['crosses'] else 'misses'} the cusp",
                           {"exponent": expo, **info})


# 8 -------------------------------------------------------------------------------

@_timed
def criterion_delay(seed: int = 42, n_segments: int = 1000) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst_res = 0.0
    bound_viol = 0
    mono_viol = 0
    for _ in range(n_segments):
        cfg = ThresholdDelay(rng.uniform(0.0, 2.0), rng.uniform(0.5, 4.0), rng.uniform(1.0, 3.0), 1.0)
        n = int(rng.integers(1, 9))
        phi = random_segment(n, 1.0, rng, amplitude=rng.uniform(0.0, 2.0), decay=0.3, m=32)
        a = solve_delay(phi, cfg)
        b = solve_delay(2.0 * phi, cfg)
        worst_res = max(worst_res, a.residual, b.residual)
        lo, hi = cfg.r_min, cfg.r_max
        for v in (a.r, b.r):
            if not lo - 1e-12 <= v <= hi + 1e-12:
                bound_viol += 1
        if b.r < a.r - 1e-12:
            mono_viol += 1
    ok = worst_res <= 1e-12 and bound_viol == 0 and mono_viol == 0
    return CriterionResult(8, "delay functional", ok,
                           f"max residual {worst_res:.1e} (<=1e-12); bound violations {bound_viol}; "
                           f"monotonicity violations {mono_viol} over {n_segments} segments",
                           {"max_residual": worst_res, "bound_violations": bound_viol,
                            "monotonicity_violations": mono_viol})


CRITERIA = {
    1: criterion_oracle,
    2: criterion_contraction,
    3: criterion_semigroup,
    4: criterion_derivatives,
    5: criterion_manifold,
    6: criterion_semiflow,
    7: criterion_holder,
    8: criterion_delay,
}


def run_criterion(number: int, seed: int = 42) -> CriterionResult:
    return CRITERIA[number](seed=seed)


# criteria with wall-clock limits run alone so sibling workers cannot skew them
TIMED = (1,)


def run_all(seed: int = 42, threads: int = 1, numbers=None) -> list[CriterionResult]:
    numbers = sorted(CRITERIA) if numbers is None else list(numbers)
    workers = min(threads, os.cpu_count() or 1)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        free = [k for k in numbers if k not in TIMED]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = dict(zip(free, pool.map(run_criterion, free, [seed] * len(free))))
        done.update({k: run_criterion(k, seed) for k in numbers if k in TIMED})
        return [done[k] for k in numbers]
    return [run_criterion(k, seed) for k in numbers]
