"""Mild solutions by windowed Picard iteration, plus a method-of-steps oracle.

On a window ``[t0, t0 + T]`` the unknown is the deviation ``y`` of the
solution from the affine continuation of the current segment.  Each Picard
sweep evaluates the forcing ``F(x_s)`` at the window nodes for the current
iterate and integrates ``x' = -A x + F`` mode by mode with exponential
trapezoid weights (forcing linear between nodes, propagator exact).  The
window length comes from the contraction bound of the fixed-point map, and
windows are chained until the final time.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .delay import DelayConfigurationError
from .history import HermiteCurve, HistorySegment, norms, segment_at
from .nonlinearity import LipschitzLedger, build_ledger, forcing
from .spectral import l2_norm

RATIO_FLOOR = 1e-7   # increments below this are rounding noise for the ratio diagnostic
STIFF_WINDOW = 32.0  # default window cap T <= STIFF_WINDOW / lambda_N


class WindowRejected(RuntimeError):
    """No admissible window length makes the fixed-point map a contraction."""


class PicardDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class WindowPlan:
    T: float
    epsilon: float
    contraction: float
    m_t: int = 33
    M_T: float = 1.0
    ball_delta: float = 0.0
    ball_lambda: float = 0.0
    ledger: LipschitzLedger | None = None


def contraction_bound(T, ledger: LipschitzLedger, alpha: float, c_one_minus_alpha: float,
                      M_T: float = 1.0) -> float:
    """Predicted Lipschitz constant of the window map for window length ``T``."""
    return (T * ledger.l_f_0 * (M_T + 1.0)
            + T**alpha * c_one_minus_alpha * M_T / alpha * ledger.l_f_alpha)


def plan_window(model, ledger: LipschitzLedger, epsilon: float, m_t: int = 33,
                t_max: float | None = None, n_candidates: int = 11) -> WindowPlan:
    """Largest ``T`` in ``{h, h/2, ..., h/2**10}`` with predicted contraction at most 1/2."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    cands = [model.h / 2**k for k in range(n_candidates)]
    if t_max is not None:
        cands = [T for T in cands if T <= t_max * (1 + 1e-12)] or [t_max]
    c = model.c_one_minus_alpha
    vals = [contraction_bound(T, ledger, model.alpha, c) for T in cands]
    chosen = next((i for i, v in enumerate(vals) if v <= 0.5), None)
    if chosen is None:
        if vals[-1] < 1.0:
            chosen = len(cands) - 1
        else:
            raise WindowRejected(
                f"no window length down to T={cands[-1]:.3g} gives a contraction "
                f"(bound {vals[-1]:.3g} >= 1); ledger entries: l_f_0={ledger.l_f_0:.4g}, "
                f"l_f_alpha={ledger.l_f_alpha:.4g}, l_b_0={ledger.l_b_0:.4g}, "
                f"l_b_alpha={ledger.l_b_alpha:.4g}, l_r={ledger.l_r:.4g}, l_phi={ledger.l_phi:.4g}")
    L = vals[chosen]
    return WindowPlan(cands[chosen], epsilon, L, m_t, 1.0,
                      0.5 * epsilon * (1.0 - L), 0.5 * (1.0 + L), ledger)


def fixed_plan(model, ledger: LipschitzLedger, epsilon: float, T: float, m_t: int = 33) -> WindowPlan:
    """Plan with a prescribed window length (used to replay a schedule)."""
    L = contraction_bound(T, ledger, model.alpha, model.c_one_minus_alpha)
    return WindowPlan(T, epsilon, L, m_t, 1.0, 0.5 * epsilon * (1.0 - L), 0.5 * (1.0 + L), ledger)


# exponential trapezoid weights -------------------------------------------------

def _phi_functions(z):
    """``g1 = (1 - e^-z)/z`` and ``g2 = (1 - e^-z - z e^-z)/z^2`` without cancellation."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 0.5
    zs = np.where(small, z, 0.0)
    g1s = np.zeros_like(z)
    g2s = np.zeros_like(z)
    term = np.ones_like(z)
    for n in range(20):
        g1s += term / (n + 1)
        g2s += term / (n + 2)
        term = term * (-zs) / (n + 1)
    zl = np.where(small, 1.0, z)
    em = np.exp(-zl)
    g1 = np.where(small, g1s, -np.expm1(-zl) / zl)
    g2 = np.where(small, g2s, (-np.expm1(-zl) - zl * em) / (zl * zl))
    return g1, g2


def exp_trapezoid_weights(rate, dt):
    """Weights of ``x1 = E x0 + wa F0 + wb F1`` for ``x' = rate x + F``, F linear on the step."""
    z = -np.asarray(rate, dtype=float) * dt
    g1, g2 = _phi_functions(z)
    return np.exp(-z), dt * g2, dt * (g1 - g2)


def rates(model, sign: str = "-A") -> np.ndarray:
    lam = model.spectrum.eigenvalues
    if sign == "-A":
        return -lam
    if sign == "+A":
        return lam.copy()
    raise ValueError("sign must be '-A' or '+A'")


# Picard engine ------------------------------------------------------------------

@dataclass
class WindowResult:
    s: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    forcing: np.ndarray
    delays: np.ndarray
    iterations: int
    increment: float
    ratios: list
    y_norm_first: float
    consistency: float
    converged: bool


def _composite(seg: HermiteCurve, s, X, D) -> HermiteCurve:
    """History curve followed by the window nodes (``t = 0`` appears twice)."""
    return HermiteCurve(np.concatenate([seg.times, s]), np.vstack([seg.values, X]),
                        np.vstack([seg.derivs, D]))


def _max_norm(a):
    return float(np.max(l2_norm(a))) if a.size else 0.0


def picard_engine(seg: HermiteCurve, T: float, m_t: int, rate: np.ndarray, force,
                  tol: float = 1e-10, max_iter: int = 200) -> WindowResult:
    """Iterate the window map for ``x' = rate * x + force(curve, s)``.

    ``seg`` is the history on ``[-h, 0]`` in window-local time; ``force``
    returns ``(F, r)`` at local times ``s`` given the composite curve.
    """
    s = np.linspace(0.0, T, m_t)
    dt = s[1] - s[0]
    E, wa, wb = exp_trapezoid_weights(rate, dt)
    head = seg.values[-1]
    slope = seg.derivs[-1]
    X = head + s[:, None] * slope
    D = np.tile(slope, (m_t, 1))
    X0, D0 = X.copy(), D.copy()
    ratios: list[float] = []
    prev = None
    inc = np.inf
    y_first = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        F, r = force(_composite(seg, s, X, D), s)
        Xn = np.empty_like(X)
        Xn[0] = head
        for j in range(m_t - 1):
            Xn[j + 1] = E * Xn[j] + wa * F[j] + wb * F[j + 1]
        Dn = rate * Xn + F
        inc = _max_norm(Xn - X) + _max_norm(Dn - D)
        if it == 1:
            y_first = _max_norm(Xn - X0) + _max_norm(Dn - D0)
        if prev is not None and prev > RATIO_FLOOR:
            ratios.append(inc / prev)
        prev = inc
        X, D = Xn, Dn
        if not np.isfinite(inc):
            break
        if inc < tol:
            converged = True
            break
    F, r = force(_composite(seg, s, X, D), s)
    consistency = _max_norm(D - (rate * X + F))
    return WindowResult(s, X, D, F, r, it, inc, ratios, y_first, consistency, converged)


def picard_window(phi: HistorySegment, plan: WindowPlan, model, tol: float = 1e-10,
                  max_iter: int = 200, sign: str = "-A") -> WindowResult:
    """Solve one window starting from the segment ``phi``."""
    if plan.contraction >= 1.0:
        raise WindowRejected(f"plan contraction {plan.contraction:.3g} is not below 1")

    def force(curve, s):
        F, r, _ = forcing(model, curve, s)
        return F, r

    res = picard_engine(phi, plan.T, plan.m_t, rates(model, sign), force, tol, max_iter)
    if not res.converged:
        raise PicardDiverged(
            f"Picard iteration stopped after {res.iterations} sweeps with increment "
            f"{res.increment:.3e}; ratio history {np.round(res.ratios, 4).tolist()}")
    return res


# trajectories -------------------------------------------------------------------

@dataclass
class Trajectory:
    h: float
    times: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    delays: np.ndarray
    residuals: np.ndarray
    window_log: list = field(default_factory=list)
    status: str = "ok"
    message: str = ""

    @property
    def curve(self) -> HermiteCurve:
        return HermiteCurve(self.times, self.values, self.derivs)

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def schedule(self) -> list[float]:
        return [w["T"] for w in self.window_log]

    def __call__(self, t):
        return self.curve(t)

    def forward_mask(self) -> np.ndarray:
        """Nodes with ``t > 0`` plus the right copy of ``t = 0``."""
        n_hist = int(np.searchsorted(self.times, 0.0, side="right"))
        mask = np.zeros(self.times.size, dtype=bool)
        mask[n_hist:] = True
        if self.times[n_hist - 1] == 0.0 and n_hist >= 2 and self.times[n_hist - 2] == 0.0:
            mask[n_hist - 1] = True
        return mask

    def write_csv(self, path) -> None:
        mask = self.forward_mask()
        n = self.values.shape[1]
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "r"] + [f"c{k}" for k in range(1, n + 1)]
                       + [f"dc{k}" for k in range(1, n + 1)] + ["residual"])
            for i in np.flatnonzero(mask):
                w.writerow([repr(float(self.times[i])), repr(float(self.delays[i]))]
                           + [repr(float(v)) for v in self.values[i]]
                           + [repr(float(v)) for v in self.derivs[i]]
                           + [repr(float(self.residuals[i]))])

    def write_window_log(self, path) -> None:
        with Path(path).open("w") as fh:
            for rec in self.window_log:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _window_epsilon(seg: HistorySegment) -> float:
    return 2.0 * (norms(seg).c1_norm + 1.0)


def default_t_max(model) -> float:
    """Window cap that keeps ``lambda_N * dt <= 1`` on the default 33-node grid."""
    return STIFF_WINDOW / float(model.spectrum.eigenvalues[-1])


def solve(phi: HistorySegment, model, t_final: float, tol: float = 1e-10, m_t: int = 33,
          max_iter: int = 200, schedule=None, t_max: float | None = -1.0,
          sign: str = "-A") -> Trajectory:
    """Continue the mild solution from ``phi`` up to ``t_final``.

    ``t_max`` caps the window length; the default ``-1`` means
    :func:`default_t_max` and ``None`` leaves only the contraction criterion.

    ``schedule`` replays a list of window lengths (e.g. from another run) so
    nearby solutions share one time grid.  A rejected or divergent window ends
    the run early with ``status`` set and the partial trajectory returned.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if abs(phi.h - model.h) > 1e-12:
        raise ValueError("initial segment horizon differs from the model horizon")
    if t_max is not None and t_max < 0:
        t_max = default_t_max(model)
    times = [phi.times]
    vals = [phi.values]
    ders = [phi.derivs]
    delays = [np.full(phi.times.size, np.nan)]
    resid = [np.full(phi.times.size, np.nan)]
    log: list[dict] = []
    status, message = "ok", ""
    t0 = 0.0
    curve = HermiteCurve(phi.times, phi.values, phi.derivs)
    k = 0
    while t0 < t_final - 1e-12:
        seg = phi if k == 0 else segment_at(curve, t0, model.h)
        eps = _window_epsilon(seg)
        try:
            ledger = build_ledger(model, eps)
            if schedule is not None:
                if k >= len(schedule):
                    raise ValueError("schedule shorter than the requested horizon")
                plan = fixed_plan(model, ledger, eps, schedule[k], m_t)
            else:
                plan = plan_window(model, ledger, eps, m_t, t_max)
                T = min(plan.T, t_final - t0)
                if T < plan.T:
                    plan = fixed_plan(model, ledger, eps, T, m_t)
            res = picard_window(seg, plan, model, tol, max_iter, sign)
        except WindowRejected as exc:
            status, message = "rejected", f"solver: window at t={t0:.6g} rejected: {exc}"
            break
        except PicardDiverged as exc:
            status, message = "diverged", f"solver: window at t={t0:.6g} diverged: {exc}"
            break
        except DelayConfigurationError as exc:
            status, message = "delay", f"delay: at t={t0:.6g}: {exc}"
            break
        rate = rates(model, sign)
        node_res = l2_norm(res.derivs - (rate * res.values + res.forcing))
        start = 0 if k == 0 else 1
        times.append(t0 + res.s[start:])
        vals.append(res.values[start:])
        ders.append(res.derivs[start:])
        delays.append(res.delays[start:])
        resid.append(node_res[start:])
        obs = max(res.ratios) if res.ratios else 0.0
        log.append({"t0": t0, "T": plan.T, "m_t": plan.m_t, "epsilon": eps, "iterations": res.iterations,
                    "residual": res.increment, "predicted": plan.contraction,
                    "observed": obs, "ball_delta": plan.ball_delta,
                    "y_first": res.y_norm_first, "ball_ok": bool(res.y_norm_first <= plan.ball_delta),
                    "consistency": res.consistency})
        t0 = t0 + plan.T
        if schedule is not None and t0 > t_final + 1e-12:
            t0 = t_final
        curve = HermiteCurve(np.concatenate(times), np.vstack(vals), np.vstack(ders))
        k += 1
    return Trajectory(model.h, np.concatenate(times), np.vstack(vals), np.vstack(ders),
                      np.concatenate(delays), np.concatenate(resid), log, status, message)


def classical_residual(traj: Trajectory, model, sign: str = "-A") -> float:
    """``max ||u' + A u - F(u_t)||`` over forward nodes, with F recomputed on the final curve."""
    mask = traj.forward_mask()
    t = traj.times[mask]
    curve = traj.curve
    F, _, _ = forcing(model, curve, t)
    # right copy at t = 0 must use the right-hand derivative
    d = traj.derivs[mask]
    return float(np.max(l2_norm(d - (rates(model, sign) * traj.values[mask] + F))))


def integral_identity_residual(traj: Trajectory, model, n_sub: int = 4, q: int = 8) -> float:
    """``max_t ||u(t) - e^{-At} u(0) - int_0^t e^{-A(t-s)} F(u_s) ds||`` at forward nodes.

    The integral uses composite Gauss-Legendre on each node cell split into
    ``n_sub`` pieces, with F evaluated on the Hermite interpolant.
    """
    mask = traj.forward_mask()
    t_nodes = np.unique(traj.times[mask])
    xi, wi = np.polynomial.legendre.leggauss(q)
    xi, wi = 0.5 * (xi + 1.0), 0.5 * wi
    edges = np.concatenate([np.linspace(a, b, n_sub + 1)[:-1] for a, b in zip(t_nodes[:-1], t_nodes[1:])]
                           + [t_nodes[-1:]])
    width = np.diff(edges)
    pts = (edges[:-1, None] + width[:, None] * xi).ravel()
    wts = (width[:, None] * wi).ravel()
    F, _, _ = forcing(model, traj.curve, pts)
    lam = model.spectrum.eigenvalues
    u0 = traj.curve(np.array([0.0]))[0]
    worst = 0.0
    for t in t_nodes[1:]:
        sel = pts < t
        kern = np.exp(-np.multiply.outer(t - pts[sel], lam))
        integral = np.sum((wts[sel, None] * kern) * F[sel], axis=0)
        u = traj.curve(np.array([t]))[0]
        worst = max(worst, float(l2_norm(u - np.exp(-lam * t) * u0 - integral)))
    return worst


# method-of-steps oracle -----------------------------------------------------------

class _DenseHistory:
    """Growing Hermite history on a uniform forward grid, with a running density integral."""

    def __init__(self, phi: HistorySegment, dt: float, n_steps: int, delay, quad_points=6):
        self.phi = phi
        self.dt = dt
        n = phi.n_modes
        self.vals = np.zeros((n_steps + 1, n))
        self.ders = np.zeros((n_steps + 1, n))
        self.count = 1
        self.delay = delay
        self.threshold = getattr(delay, "kind", "") == "threshold"
        xi, wi = np.polynomial.legendre.leggauss(quad_points)
        self.xi, self.wi = 0.5 * (xi + 1.0), 0.5 * wi
        if self.threshold:
            self.hist_acc = delay.accumulator(phi)
            self.g0 = float(self.hist_acc(0.0))
            self.cum = np.zeros(n_steps + 1)
            self.cum[0] = self.g0

    def _cell_eval(self, k, t, deriv=False):
        y0, y1 = self.vals[k], self.vals[k + 1]
        m0, m1 = self.ders[k], self.ders[k + 1]
        dt = self.dt
        s = (np.asarray(t) - k * dt) / dt
        s = np.asarray(s)[..., None]
        if deriv:
            return ((6 * s * s - 6 * s) / dt * (y0 - y1) + (3 * s * s - 4 * s + 1) * m0
                    + (3 * s * s - 2 * s) * m1)
        s2, s3 = s * s, s * s * s
        return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * dt * m0
                + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * dt * m1)

    def _cell(self, t):
        return min(int(t / self.dt), self.count - 2)

    def value(self, t):
        if t <= 0.0:
            return self.phi(np.array([t]))[0]
        return self._cell_eval(self._cell(t), t)

    def derivative(self, t):
        if t <= 0.0:
            return self.phi.derivative(np.array([t]))[0]
        return self._cell_eval(self._cell(t), t, deriv=True)

    def push(self, value, deriv):
        self.vals[self.count] = value
        self.ders[self.count] = deriv
        self.count += 1

    def set_last(self, value, deriv):
        self.vals[self.count - 1] = value
        self.ders[self.count - 1] = deriv

    def close_cell(self):
        """Add the integral over the newest cell to the running sum."""
        if self.threshold:
            k = self.count - 2
            pts = (k + self.xi) * self.dt
            dens = self.delay.density(self._cell_eval(k, pts))
            self.cum[k + 1] = self.cum[k] + self.dt * float(dens @ self.wi)

    def _partial(self, k, t):
        pts = k * self.dt + (t - k * self.dt) * self.xi
        return (t - k * self.dt) * float(self.delay.density(self._cell_eval(k, pts)) @ self.wi)

    def G(self, t):
        if t <= 0.0:
            return float(self.hist_acc(t))
        k = self._cell(t)
        return self.cum[k] + self._partial(k, t)

    def delay_at(self, t, head_value=None):
        """Delay of the segment ending at ``t``.

        ``head_value`` supplies the state at ``t`` when ``t`` lies past the last
        stored node (Runge-Kutta stages); the tail integral is then a trapezoid.
        """
        if not self.threshold:
            return self.delay.r0
        t_last = (self.count - 1) * self.dt
        if t > t_last + 1e-15:
            u_last = self.vals[self.count - 1]
            tail = 0.5 * (t - t_last) * (self.delay.density(u_last) + self.delay.density(head_value))
            g_t = self.G(t_last) + float(tail)
        else:
            g_t = self.G(t)
        target = g_t - 1.0
        if target < self.hist_acc.cum[0] - 1e-13:
            raise DelayConfigurationError("threshold unreachable on the available history")
        if target <= self.g0:
            tau = float(self.hist_acc.invert(np.array([max(target, 0.0)]))[0])
            return t - tau
        n_closed = self.count - 1
        k = int(np.clip(np.searchsorted(self.cum[:n_closed + 1], target, side="right") - 1, 0, n_closed - 1))
        lo, hi = k * self.dt, (k + 1) * self.dt
        tau = lo + (target - self.cum[k]) / max(self.cum[k + 1] - self.cum[k], 1e-300) * self.dt
        for _ in range(50):
            f = self.cum[k] + self._partial(k, tau) - target
            if f < 0:
                lo = tau
            else:
                hi = tau
            step = f / float(self.delay.density(self._cell_eval(k, tau)))
            new = tau - step
            if not lo <= new <= hi:
                new = 0.5 * (lo + hi)
            if abs(new - tau) < 1e-16 * max(1.0, abs(tau)):
                tau = new
                break
            tau = new
        return t - tau


def method_of_steps_oracle(phi: HistorySegment, model, t_final: float, dt: float,
                           scheme: str = "exp_euler") -> Trajectory:
    """Explicit time stepping of ``u' = -A u + F(u_t)`` on a uniform grid.

    Schemes: ``exp_euler`` (first order), ``etd2`` (exponential trapezoid
    predictor-corrector, second order) and ``rk4`` (classical, for mildly stiff
    runs).  Delayed values come from a dense Hermite history whose node
    derivatives follow the differential equation.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if scheme not in ("exp_euler", "etd2", "rk4"):
        raise ValueError(f"unknown scheme {scheme!r}")
    n_steps = int(round(t_final / dt))
    if abs(n_steps * dt - t_final) > 1e-9 * t_final:
        raise ValueError("t_final must be a multiple of dt")
    rate = rates(model)
    hist = _DenseHistory(phi, dt, n_steps, model.delay)
    E, wa, wb = exp_trapezoid_weights(rate, dt)
    g1 = wa + wb  # dt * (1 - e^-z) / z

    def F_at(t, head=None):
        r = hist.delay_at(t, head)
        return model.B.apply(hist.value(t - r)), r

    u = phi.head.copy()
    hist.vals[0] = u
    F0, r0 = F_at(0.0)
    hist.ders[0] = rate * u + F0
    out_r = [r0]
    for n in range(n_steps):
        t = n * dt
        if scheme == "exp_euler":
            u_new = E * u + g1 * F0
        elif scheme == "etd2":
            a = E * u + g1 * F0
            hist.push(a, rate * a + F0)
            Fa, _ = F_at(t + dt)
            hist.count -= 1
            u_new = E * u + wa * F0 + wb * Fa
        else:
            def rhs(tt, uu, known=None):
                Fv = known if known is not None else F_at(tt, uu)[0]
                return rate * uu + Fv
            k1 = rhs(t, u, F0)
            k2 = rhs(t + dt / 2, u + dt / 2 * k1)
            k3 = rhs(t + dt / 2, u + dt / 2 * k2)
            k4 = rhs(t + dt, u + dt * k3)
            u_new = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        # provisional slope closes the newest cell; refined once F(u_{t+dt}) is known
        hist.push(u_new, rate * u_new + F0)
        F1, r1 = F_at(t + dt)
        hist.set_last(u_new, rate * u_new + F1)
        hist.close_cell()
        u, F0 = u_new, F1
        out_r.append(r1)
    fwd_t = np.arange(n_steps + 1) * dt
    jump = not np.array_equal(hist.ders[0], phi.head_derivative)
    times = np.concatenate([phi.times, fwd_t if jump else fwd_t[1:]])
    vals = np.vstack([phi.values, hist.vals if jump else hist.vals[1:]])
    ders = np.vstack([phi.derivs, hist.ders if jump else hist.ders[1:]])
    delays = np.concatenate([np.full(phi.times.size, np.nan), out_r if jump else out_r[1:]])
    return Trajectory(model.h, times, vals, ders, delays, np.zeros(times.size),
                      [{"t0": 0.0, "T": t_final, "scheme": scheme, "dt": dt}])


@dataclass
class ProbeReport:
    divergence: float
    tolerance: float
    passed: bool
    pairwise: dict
    runtimes: dict

    def to_dict(self):
        return asdict(self)


def dense_output(traj: Trajectory, model, t, sign: str = "-A") -> np.ndarray:
    """Exponential dense output on ``t >= 0`` from the stored nodes.

    The forcing ``F = u' - rate * u`` is recovered at the nodes, taken linear
    in each cell and integrated exactly against the semigroup.  Unlike plain
    Hermite evaluation this is exact for ``B = 0`` and stays accurate for
    modes that are stiff on the node spacing.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0) or np.any(t > traj.t_final * (1 + 1e-12)):
        raise ValueError("dense output covers [0, t_final] only")
    mask = traj.forward_mask()
    nodes, X, D = traj.times[mask], traj.values[mask], traj.derivs[mask]
    rate = rates(model, sign)
    F = D - rate * X
    j = np.clip(np.searchsorted(nodes, t, side="right") - 1, 0, nodes.size - 2)
    width = nodes[j + 1] - nodes[j]
    theta = (t - nodes[j])[:, None]
    g1, g2 = _phi_functions(-rate * theta)
    slope = (F[j + 1] - F[j]) / width[:, None]
    return (np.exp(rate * theta) * X[j] + theta * g1 * F[j]
            + theta * theta * (g1 - g2) * slope)


def uniqueness_probe(phi: HistorySegment, model, t_final: float, tol: float = 1e-4,
                     dt: float = 2e-3, n_eval: int = 201, m_t: tuple = (33, 65),
                     scheme: str = "etd2") -> ProbeReport:
    """Two Picard resolutions and two oracle step sizes; reports the max pairwise gap."""
    import time

    runs = {}
    runtimes = {}
    for m in m_t:
        t = time.perf_counter()
        runs[f"picard_m{m}"] = solve(phi, model, t_final, m_t=m)
        runtimes[f"picard_m{m}"] = time.perf_counter() - t
    for d in (dt, dt / 2):
        t = time.perf_counter()
        runs[f"oracle_dt{d:g}"] = method_of_steps_oracle(phi, model, t_final, d, scheme)
        runtimes[f"oracle_dt{d:g}"] = time.perf_counter() - t
    for name, tr in runs.items():
        if not tr.ok:
            return ProbeReport(math.inf, tol, False, {name: tr.message}, runtimes)
    grid = np.linspace(0.0, t_final, n_eval)
    samples = {k: dense_output(v, model, grid) for k, v in runs.items()}
    names = list(samples)
    pair = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            pair[f"{a}|{b}"] = float(np.max(l2_norm(samples[a] - samples[b])))
    worst = max(pair.values())
    return ProbeReport(worst, tol, bool(worst <= tol), pair, runtimes)


def semiflow_gap(phi: HistorySegment, model, t1: float, t2: float, n_eval: int = 65) -> float:
    """C1 gap between ``x_{t1+t2}`` from one solve and from a restarted solve."""
    full = solve(phi, model, t1 + t2)
    first = solve(phi, model, t1)
    second = solve(segment_at(first, t1), model, t2)
    grid = np.linspace(-model.h, 0.0, n_eval)
    return c1_gap_on(segment_at(full, t1 + t2), segment_at(second, t2), grid)


def c1_gap_on(a: HermiteCurve, b: HermiteCurve, grid) -> float:
    """Max value gap plus max derivative gap of two curves on a sample grid."""
    va, vb = a(grid), b(grid)
    da, db = a.derivative(grid), b.derivative(grid)
    return float(np.max(l2_norm(va - vb)) + np.max(l2_norm(da - db)))
