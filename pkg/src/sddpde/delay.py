"""State-dependent delay functionals: the threshold condition and a constant lag.

The threshold delay ``r(phi)`` is the root of

    R(r; phi) = int_{-r}^0 [ C1 / (C2 + ||phi(s)||^2) + C3 ] ds = 1.

The integrand is positive, so ``R`` is strictly increasing in ``r`` and the
root is found by inverting a running integral.  Integrals are composite
Gauss-Legendre over the cells of the Hermite curve, which keeps the
quadrature a smooth function of the data and makes the closed-form
derivative match finite differences of the computed root.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .history import HermiteCurve, HistorySegment, _common_grid
from .spectral import HALF_PI


class DelayConfigurationError(ValueError):
    """Raised when the threshold cannot be reached within the horizon."""


class Accumulator:
    """Running integral ``G(t) = int_{t_0}^t rho`` of a density over breakpoints.

    Cells are bisected until the Gauss value of each cell agrees with the sum
    over its two halves to ``rtol`` (relative to ``int |rho|`` over the cell).
    """

    def __init__(self, breaks, density, quad_points: int = 6, rtol: float = 1e-13,
                 max_depth: int = 12):
        self.density = density
        xi, wi = np.polynomial.legendre.leggauss(quad_points)
        self._xi = 0.5 * (xi + 1.0)
        self._wi = 0.5 * wi
        breaks = np.unique(np.asarray(breaks, dtype=float))
        for _ in range(max_depth):
            a, b = breaks[:-1], breaks[1:]
            mid = 0.5 * (a + b)
            whole, mag = self._cells(a, b)
            halves = self._cells(a, mid)[0] + self._cells(mid, b)[0]
            bad = np.abs(whole - halves) > rtol * mag
            if not bad.any():
                break
            breaks = np.sort(np.concatenate([breaks, mid[bad]]))
        else:
            whole = self._cells(breaks[:-1], breaks[1:])[0]
        self.breaks = breaks
        self.cum = np.concatenate([[0.0], np.cumsum(whole)])

    def _cells(self, a, b):
        width = b - a
        vals = self.density(a[:, None] + width[:, None] * self._xi)
        return width * (vals @ self._wi), np.abs(width) * (np.abs(vals) @ self._wi)

    def locate(self, t) -> np.ndarray:
        idx = np.searchsorted(self.breaks, t, side="right") - 1
        return np.clip(idx, 0, self.breaks.size - 2)

    def partial(self, cell, t) -> np.ndarray:
        a = self.breaks[cell]
        width = np.asarray(t) - a
        pts = a[..., None] + width[..., None] * self._xi
        return width * (self.density(pts) @ self._wi)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        cell = self.locate(t)
        return self.cum[cell] + self.partial(cell, t)

    def invert(self, target, tol: float = 1e-14, max_iter: int = 60) -> np.ndarray:
        """Solve ``G(t) = target`` by safeguarded Newton inside the bracketing cell."""
        target = np.atleast_1d(np.asarray(target, dtype=float))
        if np.any(target < -tol) or np.any(target > self.cum[-1] + tol):
            raise DelayConfigurationError("target outside the range of the running integral")
        cell = np.clip(np.searchsorted(self.cum, target, side="right") - 1, 0, self.breaks.size - 2)
        lo = self.breaks[cell].copy()
        hi = self.breaks[cell + 1].copy()
        span = self.cum[cell + 1] - self.cum[cell]
        frac = np.where(span > 0, (target - self.cum[cell]) / np.where(span > 0, span, 1.0), 0.0)
        t = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)
        scale = max(1.0, float(self.cum[-1]))
        done = np.zeros(t.shape, dtype=bool)
        extra = np.zeros(t.shape, dtype=bool)
        for _ in range(max_iter):
            f = self.cum[cell] + self.partial(cell, t) - target
            lo = np.where(f < 0, t, lo)
            hi = np.where(f > 0, t, hi)
            slope = self.density(t)
            step = f / slope
            t_new = t - step
            out = (t_new < lo) | (t_new > hi)
            t_new = np.where(out, 0.5 * (lo + hi), t_new)
            conv = np.abs(f) <= tol * scale
            # one extra Newton step after convergence removes the last rounding
            t = np.where(done, t, t_new)
            done = done | (conv & extra)
            extra = extra | conv
            if np.all(done):
                break
        return t


@dataclass(frozen=True)
class DelayValue:
    r: float
    dR_dr: float
    residual: float


def _sq_norm(values):
    return HALF_PI * np.sum(values * values, axis=-1)


@dataclass(frozen=True)
class ThresholdDelay:
    """Threshold delay with constants ``C1, C2, C3`` on horizon ``h``."""

    c1: float = 0.5
    c2: float = 4.0
    c3: float = 1.0
    h: float = 1.0
    quad_points: int = 6

    kind = "threshold"

    def __post_init__(self):
        if self.c1 < 0 or self.c2 <= 0 or self.c3 <= 0:
            raise ValueError("threshold constants need C1 >= 0, C2 > 0, C3 > 0")
        if 1.0 / self.c3 > self.h * (1 + 1e-12):
            raise DelayConfigurationError(
                f"threshold may be unreachable: need r <= 1/C3 = {1 / self.c3:g} <= h = {self.h:g}")

    @property
    def r_min(self) -> float:
        return 1.0 / (self.c1 / self.c2 + self.c3)

    @property
    def r_max(self) -> float:
        return 1.0 / self.c3

    def density(self, values) -> np.ndarray:
        return self.c1 / (self.c2 + _sq_norm(values)) + self.c3

    def sensitivity(self, values, dirs) -> np.ndarray:
        """Integrand of the delay derivative: ``2 C1 <phi, psi> / (C2 + ||phi||^2)^2``."""
        q = self.c2 + _sq_norm(values)
        return 2.0 * self.c1 * HALF_PI * np.sum(values * dirs, axis=-1) / (q * q)

    def accumulator(self, curve: HermiteCurve) -> Accumulator:
        return Accumulator(curve.breaks, lambda t: self.density(curve(t)), self.quad_points)

    def delays(self, curve: HermiteCurve, s, acc: Accumulator | None = None):
        """Delays ``r(x_s)`` for segments ending at times ``s`` along ``curve``.

        Returns ``(r, dR_dr, residual)`` arrays.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if acc is None:
            acc = self.accumulator(curve)
        g_s = acc(s)
        target = g_s - 1.0
        if np.any(target < -1e-13):
            raise DelayConfigurationError(
                f"threshold unreachable on the available history (r <= 1/C3 = {self.r_max:g} "
                f"must not exceed h = {self.h:g})")
        tau = acc.invert(np.maximum(target, 0.0))
        r = s - tau
        dR = self.density(curve(tau))
        residual = np.abs(g_s - acc(tau) - 1.0)
        return r, dR, residual

    def derivatives(self, curve: HermiteCurve, dcurve: HermiteCurve, s, r) -> np.ndarray:
        """``Dr(x_s) v_s`` for the direction curve ``dcurve`` (same time axis)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.c1 == 0:
            return np.zeros_like(s)
        breaks = np.union1d(curve.breaks, dcurve.breaks)
        acc = Accumulator(breaks, lambda t: self.sensitivity(curve(t), dcurve(t)), self.quad_points)
        tau = s - r
        return (acc(s) - acc(tau)) / self.density(curve(tau))

    def lipschitz_estimate(self, radius: float) -> float:
        return 2.0 * self.c1 * radius * self.h / (self.c2**2 * self.c3)


@dataclass(frozen=True)
class ConstantDelay:
    """Constant lag ``r0`` under the same interface (its derivative is zero)."""

    r0: float = 0.5
    h: float = 1.0

    kind = "constant"

    def __post_init__(self):
        if not 0.0 <= self.r0 <= self.h:
            raise DelayConfigurationError("constant delay must lie in [0, h]")

    @property
    def r_min(self) -> float:
        return self.r0

    @property
    def r_max(self) -> float:
        return self.r0

    def delays(self, curve, s, acc=None):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.full(s.shape, self.r0), np.ones(s.shape), np.zeros(s.shape)

    def derivatives(self, curve, dcurve, s, r):
        return np.zeros(np.atleast_1d(s).shape)

    def lipschitz_estimate(self, radius: float) -> float:
        return 0.0


def threshold_R(r: float, seg: HistorySegment, cfg: ThresholdDelay) -> float:
    """``R(r; phi)`` by composite Gauss-Legendre over the segment cells."""
    if not 0.0 <= r <= seg.h + 1e-12:
        raise ValueError("r must lie in [0, h]")
    acc = cfg.accumulator(seg)
    return float(acc(0.0) - acc(-r))


def solve_delay(seg: HistorySegment, cfg, tol: float = 1e-12) -> DelayValue:
    """Root ``r`` of ``R(r; phi) = 1``."""
    if cfg.kind == "constant":
        return DelayValue(cfg.r0, 1.0, 0.0)
    acc = cfg.accumulator(seg)
    if acc(0.0) - acc(-seg.h) < 1.0:
        raise DelayConfigurationError(
            f"R(h; phi) < 1: threshold unreachable; need r <= 1/C3 = {cfg.r_max:g} <= h = {seg.h:g}")
    r, dR, res = cfg.delays(seg, [0.0], acc)
    if res[0] > tol:
        raise RuntimeError(f"delay root residual {res[0]:.3e} above tolerance {tol:.1e}")
    return DelayValue(float(r[0]), float(dR[0]), float(res[0]))


def delay_derivative(seg: HistorySegment, direction: HistorySegment, cfg) -> float:
    """Directional derivative ``Dr(phi) psi``."""
    if cfg.kind == "constant":
        return 0.0
    a, b = _common_grid(seg, direction)
    r = solve_delay(a, cfg).r
    return float(cfg.derivatives(a, b, [0.0], [r])[0])


def delay_lipschitz_estimate(cfg, radius: float) -> float:
    """Upper bound for the Lipschitz constant of ``r`` on the ball ``||phi||_C <= radius``."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    return float(cfg.lipschitz_estimate(radius))
