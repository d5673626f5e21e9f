"""C1 history segments on [-h, 0] and piecewise cubic Hermite curves.

A curve stores node times, spectral values and time derivatives.  Between
nodes it is the cubic Hermite interpolant of (values, derivs), so it is C1
wherever the stored derivatives agree.  A repeated node time is allowed and
marks a derivative jump: the first copy carries the left derivative, the
second the right one.  Solutions started off the solution manifold have such
a jump at t = 0.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .spectral import Spectrum, l2_norm


class HermiteCurve:
    """Piecewise cubic Hermite curve ``t -> u(t)`` with spectral values."""

    def __init__(self, times, values, derivs):
        times = np.array(times, dtype=float)
        values = np.atleast_2d(np.asarray(values, dtype=float))
        derivs = np.atleast_2d(np.asarray(derivs, dtype=float))
        if times.ndim != 1 or times.size < 2:
            raise ValueError("need at least two nodes")
        if values.shape != derivs.shape or values.shape[0] != times.size:
            raise ValueError("values/derivs must have shape (n_nodes, n_modes)")
        steps = np.diff(times)
        if np.any(steps < 0):
            raise ValueError("node times must be non-decreasing")
        if steps[0] == 0 or steps[-1] == 0:
            raise ValueError("a repeated node cannot sit at either end")
        if np.any((steps[:-1] == 0) & (steps[1:] == 0)):
            raise ValueError("a node may be repeated at most once")
        self.times = times
        self.values = values
        self.derivs = derivs

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @cached_property
    def breaks(self) -> np.ndarray:
        return np.unique(self.times)

    def locate(self, t) -> np.ndarray:
        """Index of the cell ``[times[i], times[i+1]]`` used for ``t``.

        At a repeated node the right-hand cell is chosen.
        """
        idx = np.searchsorted(self.times, t, side="right") - 1
        return np.clip(idx, 0, self.times.size - 2)

    def _basis(self, t, cell):
        t0 = self.times[cell]
        dt = self.times[cell + 1] - t0
        s = (t - t0) / dt
        return s, dt

    def __call__(self, t, cell=None) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if cell is None:
            cell = self.locate(t)
        s, dt = self._basis(t, cell)
        s2 = s * s
        s3 = s2 * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = (s3 - 2 * s2 + s) * dt
        h01 = -2 * s3 + 3 * s2
        h11 = (s3 - s2) * dt
        y0, y1 = self.values[cell], self.values[cell + 1]
        m0, m1 = self.derivs[cell], self.derivs[cell + 1]
        return (h00[..., None] * y0 + h10[..., None] * m0
                + h01[..., None] * y1 + h11[..., None] * m1)

    def derivative(self, t, cell=None) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if cell is None:
            cell = self.locate(t)
        s, dt = self._basis(t, cell)
        s2 = s * s
        d00 = (6 * s2 - 6 * s) / dt
        d10 = 3 * s2 - 4 * s + 1
        d01 = (-6 * s2 + 6 * s) / dt
        d11 = 3 * s2 - 2 * s
        y0, y1 = self.values[cell], self.values[cell + 1]
        m0, m1 = self.derivs[cell], self.derivs[cell + 1]
        return (d00[..., None] * y0 + d10[..., None] * m0
                + d01[..., None] * y1 + d11[..., None] * m1)

    def restrict(self, a: float, b: float) -> "HermiteCurve":
        """Sub-curve on ``[a, b]`` with interpolated end nodes.

        A repeated node at ``a`` keeps its right copy, one at ``b`` its left copy.
        """
        if not (self.t_start - 1e-12 <= a < b <= self.t_end + 1e-12):
            raise ValueError(f"[{a}, {b}] not inside [{self.t_start}, {self.t_end}]")
        times = self.times
        a = _snap(times, a)
        b = _snap(times, b)
        lo = np.searchsorted(times, a, side="right")   # first node strictly after a
        hi = np.searchsorted(times, b, side="left")    # first node at or after b
        inner = slice(lo, hi)
        start_v = self(a)
        start_d = self.derivative(a)
        if hi < times.size and times[hi] == b:
            end_v, end_d = self.values[hi], self.derivs[hi]
        else:
            cell = np.clip(np.searchsorted(times, b, side="left") - 1, 0, times.size - 2)
            end_v = self(b, cell)
            end_d = self.derivative(b, cell)
        new_t = np.concatenate([[a], times[inner], [b]])
        new_v = np.vstack([start_v, self.values[inner], end_v])
        new_d = np.vstack([start_d, self.derivs[inner], end_d])
        return HermiteCurve(new_t, new_v, new_d)

    def sample_points(self) -> np.ndarray:
        """Node times plus cell midpoints (used for sup-norm estimates)."""
        t = self.times
        widths = np.diff(t)
        mids = 0.5 * (t[:-1] + t[1:])[widths > 0]
        return np.concatenate([t, mids])

    def max_norms(self) -> tuple[float, float]:
        """(max ||u||, max ||u'||) over nodes and midpoints."""
        t = self.times
        widths = np.diff(t)
        cells = np.nonzero(widths > 0)[0]
        mids = 0.5 * (t[cells] + t[cells + 1])
        vals = np.vstack([self.values, self(mids, cells)])
        ders = np.vstack([self.derivs, self.derivative(mids, cells)])
        return float(l2_norm(vals).max()), float(l2_norm(ders).max())


def _snap(times, t, rtol=1e-12):
    """Move ``t`` onto a node closer than ``rtol`` (relative to the span)."""
    k = np.searchsorted(times, t)
    tol = rtol * max(1.0, times[-1] - times[0])
    for j in (k - 1, k):
        if 0 <= j < times.size and abs(times[j] - t) <= tol:
            return float(times[j])
    return float(t)


class HistorySegment(HermiteCurve):
    """Element of X: a C1 segment on ``[-h, 0]`` stored at grid nodes."""

    def __init__(self, h, grid, values, derivs):
        super().__init__(grid, values, derivs)
        self.h = float(h)
        if self.h <= 0:
            raise ValueError("horizon h must be positive")
        if abs(self.times[0] + self.h) > 1e-12 * max(1.0, self.h) or self.times[-1] != 0.0:
            raise ValueError("segment grid must run from -h to 0")
        self.times[0] = -self.h

    @property
    def grid(self) -> np.ndarray:
        return self.times

    @classmethod
    def from_curve(cls, curve: HermiteCurve, h: float) -> "HistorySegment":
        return cls(h, curve.times, curve.values, curve.derivs)

    @classmethod
    def from_function(cls, h, fun, dfun, m: int = 64, grid=None) -> "HistorySegment":
        """Sample ``fun(theta) -> coeffs`` and its derivative on a uniform grid."""
        theta = np.linspace(-h, 0.0, m + 1) if grid is None else np.asarray(grid, float)
        vals = np.array([fun(th) for th in theta])
        ders = np.array([dfun(th) for th in theta])
        return cls(h, theta, vals, ders)

    @classmethod
    def constant(cls, h, coeffs, m: int = 64) -> "HistorySegment":
        c = np.asarray(coeffs, dtype=float)
        theta = np.linspace(-h, 0.0, m + 1)
        return cls(h, theta, np.tile(c, (m + 1, 1)), np.zeros((m + 1, c.size)))

    def eval(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        if np.any(th < -self.h - 1e-12) or np.any(th > 1e-12):
            raise ValueError(f"theta outside [-{self.h}, 0]")
        return self(np.clip(th, -self.h, 0.0))

    @property
    def head(self) -> np.ndarray:
        """phi(0)."""
        return self.values[-1]

    @property
    def head_derivative(self) -> np.ndarray:
        """Left derivative phi'(0)."""
        return self.derivs[-1]

    def _check_same(self, other):
        if not isinstance(other, HistorySegment) or other.h != self.h:
            raise TypeError("segments must share the horizon h")

    def __add__(self, other: "HistorySegment") -> "HistorySegment":
        self._check_same(other)
        a, b = _common_grid(self, other)
        return HistorySegment(self.h, a.times, a.values + b.values, a.derivs + b.derivs)

    def __sub__(self, other: "HistorySegment") -> "HistorySegment":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "HistorySegment":
        return HistorySegment(self.h, self.times, scalar * self.values, scalar * self.derivs)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def resample(self, grid) -> "HistorySegment":
        """Exact re-representation on a finer grid containing the old nodes."""
        grid = np.asarray(grid, dtype=float)
        cells = _cells_for_grid(self.times, grid)
        return HistorySegment(self.h, grid, self(grid, cells), self.derivative(grid, cells))


def _cells_for_grid(times, grid):
    """Cell index per new node; repeated new nodes map to the left/right copies."""
    cells = np.clip(np.searchsorted(times, grid, side="right") - 1, 0, times.size - 2)
    rep = np.zeros(grid.size, dtype=bool)
    rep[1:] = np.diff(grid) == 0
    first_of_pair = np.zeros(grid.size, dtype=bool)
    first_of_pair[:-1] = rep[1:]
    # left copy of a repeated node is evaluated at the end of the left cell
    cells[first_of_pair] = np.clip(np.searchsorted(times, grid[first_of_pair], side="left") - 1,
                                   0, times.size - 2)
    return cells


def _common_grid(a: HistorySegment, b: HistorySegment):
    if a.times.size == b.times.size and np.array_equal(a.times, b.times):
        return a, b
    union = np.union1d(a.times, b.times)
    jumps = np.union1d(a.times[1:][np.diff(a.times) == 0], b.times[1:][np.diff(b.times) == 0])
    grid = np.sort(np.concatenate([union, jumps]))
    return a.resample(grid), b.resample(grid)


@dataclass(frozen=True)
class SegmentNorms:
    c_norm: float
    c1_norm: float
    x_norm: float


def norms(seg: HistorySegment, spectrum: Spectrum | None = None) -> SegmentNorms:
    """C, C1 and X norms; maxima taken over nodes and cell midpoints."""
    c_max, d_max = seg.max_norms()
    lam = spectrum.eigenvalues if spectrum is not None else np.arange(1, seg.n_modes + 1) ** 2
    a_head = float(l2_norm(lam * seg.head))
    return SegmentNorms(c_max, c_max + d_max, c_max + d_max + a_head)


def c1_distance(a: HermiteCurve, b: HermiteCurve) -> float:
    """C1 norm of ``a - b`` on a common grid (max value + max derivative)."""
    if isinstance(a, HistorySegment) and isinstance(b, HistorySegment):
        a, b = _common_grid(a, b)
        diff = HermiteCurve(a.times, a.values - b.values, a.derivs - b.derivs)
    else:
        if not np.array_equal(a.times, b.times):
            raise ValueError("curves must share node times")
        diff = HermiteCurve(a.times, a.values - b.values, a.derivs - b.derivs)
    c, d = diff.max_norms()
    return c + d


def extend_ET(seg: HistorySegment, T: float) -> HermiteCurve:
    """Affine continuation ``phi(0) + t phi'(0)`` on ``[0, T]``."""
    if T <= 0:
        raise ValueError("T must be positive")
    end_v = seg.head + T * seg.head_derivative
    times = np.append(seg.times, T)
    values = np.vstack([seg.values, end_v])
    derivs = np.vstack([seg.derivs, seg.head_derivative])
    return HermiteCurve(times, values, derivs)


def segment_at(source, t: float, h: float | None = None) -> HistorySegment:
    """The segment ``u_t(theta) = u(t + theta)`` of a trajectory or curve."""
    curve = getattr(source, "curve", source)
    if h is None:
        h = getattr(source, "h", None)
    if h is None:
        raise ValueError("horizon h required")
    t_max = getattr(source, "t_final", curve.t_end)
    if not (-1e-12 <= t <= t_max + 1e-12):
        raise ValueError(f"t={t} outside [0, {t_max}]")
    t = float(np.clip(t, 0.0, curve.t_end))
    part = curve.restrict(t - h, t)
    times = part.times - part.times[-1]
    times[0] = -h
    return HistorySegment(h, times, part.values, part.derivs)


def holder_exponent_estimate(samples, cutoff: float | None = None, n_bins: int = 16) -> float:
    """Empirical Hoelder exponent of ``t -> g(t)`` from ``(time, coeffs)`` samples.

    All pairs with lag below ``cutoff`` (default: a quarter of the time span)
    are binned by log-lag; the modulus of continuity (largest increment per
    bin) is regressed on the lag in log-log scale.  Returns ``inf`` when the
    samples are constant.
    """
    times = np.array([s[0] for s in samples], dtype=float)
    vals = np.array([np.asarray(s[1], dtype=float) for s in samples])
    if times.size < 16:
        raise ValueError("need at least 16 samples")
    if np.unique(times).size != times.size:
        raise ValueError("sample times must be distinct")
    i, j = np.triu_indices(times.size, k=1)
    lag = np.abs(times[i] - times[j])
    inc = l2_norm(vals[i] - vals[j])
    if np.all(inc <= 1e-14 * max(1.0, float(l2_norm(vals).max()))):
        return float("inf")
    if cutoff is None:
        cutoff = 0.25 * (times.max() - times.min())
    keep = (lag <= cutoff) & (inc > 0)
    lag, inc = lag[keep], inc[keep]
    edges = np.logspace(np.log10(lag.min()), np.log10(lag.max()), n_bins + 1)
    edges[-1] *= 1 + 1e-12
    which = np.digitize(lag, edges) - 1
    xs, ys = [], []
    for b in range(n_bins):
        sel = which == b
        if np.any(sel):
            k = np.argmax(inc[sel])
            xs.append(np.log(lag[sel][k]))
            ys.append(np.log(inc[sel][k]))
    if len(xs) < 2:
        return float("inf")
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def write_segment_csv(seg: HistorySegment, path) -> None:
    """Rows ``theta, c_1..c_N, dc_1..dc_N`` in shortest round-trip float format."""
    n = seg.n_modes
    header = ["theta"] + [f"c{k}" for k in range(1, n + 1)] + [f"dc{k}" for k in range(1, n + 1)]
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for th, v, d in zip(seg.times, seg.values, seg.derivs):
            w.writerow([repr(float(th))] + [repr(float(x)) for x in v] + [repr(float(x)) for x in d])


def read_segment_csv(path) -> HistorySegment:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array(rows[1:], dtype=float)
    n = (data.shape[1] - 1) // 2
    theta = data[:, 0]
    return HistorySegment(-theta[0], theta, data[:, 1:1 + n], data[:, 1 + n:])
