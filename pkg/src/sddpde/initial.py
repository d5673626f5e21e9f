"""Named initial-history generators."""
from __future__ import annotations

import numpy as np

from .history import HistorySegment

GENERATORS = ("zero", "single-mode-decay", "bump", "cusp", "random")


def zero(n_modes: int, h: float = 1.0, m: int = 64) -> HistorySegment:
    return HistorySegment.constant(h, np.zeros(n_modes), m)


def single_mode_decay(n_modes: int, h: float = 1.0, k: int = 1, amplitude: float = 1.0,
                      m: int = 64) -> HistorySegment:
    """``amplitude * exp(-k^2 theta) sin(k x)``: a free solution of the linear heat flow."""
    lam = float(k * k)
    e = np.zeros(n_modes)
    e[k - 1] = amplitude
    return HistorySegment.from_function(h, lambda s: np.exp(-lam * s) * e,
                                        lambda s: -lam * np.exp(-lam * s) * e, m)


def bump_profile(n_modes: int, center: float = np.pi / 2, width: float = 0.4) -> np.ndarray:
    """Sine coefficients of a Gaussian bump in x, by dense trapezoid projection."""
    x = np.linspace(0.0, np.pi, 2049)
    g = np.exp(-0.5 * ((x - center) / width) ** 2)
    w = np.full(x.size, x[1] - x[0])
    w[[0, -1]] *= 0.5
    k = np.arange(1, n_modes + 1)
    return (2.0 / np.pi) * (np.sin(np.outer(k, x)) * w) @ g


def bump(n_modes: int, h: float = 1.0, amplitude: float = 0.5, center: float = np.pi / 2,
         width: float = 0.4, omega: float = 2.0, m: int = 64) -> HistorySegment:
    """Bump in space, modulated in time by ``1 + 0.5 sin(omega theta)``."""
    prof = amplitude * bump_profile(n_modes, center, width)
    return HistorySegment.from_function(
        h, lambda s: (1.0 + 0.5 * np.sin(omega * s)) * prof,
        lambda s: 0.5 * omega * np.cos(omega * s) * prof, m)


def graded_grid(h: float, theta_c: float, m: int = 64, levels: int = 12) -> np.ndarray:
    """Uniform grid on [-h, 0] refined geometrically towards ``theta_c``."""
    base = np.linspace(-h, 0.0, m + 1)
    d = h / m
    extra = theta_c + np.concatenate([-(d * 0.5 ** np.arange(1, levels)), d * 0.5 ** np.arange(1, levels)])
    grid = np.union1d(np.union1d(base, extra[(extra > -h) & (extra < 0.0)]), [theta_c])
    return grid


def cusp(n_modes: int, h: float = 1.0, amplitude: float = 0.5, eta: float = 0.05,
         theta_c: float = -0.9, m: int = 64, levels: int = 12) -> HistorySegment:
    """Smooth bump history plus ``eta sqrt|theta - theta_c|`` in the bump direction.

    The square-root term is only Hoelder-1/2 at ``theta_c``; node derivatives
    there are set to zero and the grid is graded towards the cusp.
    """
    prof = bump_profile(n_modes)
    grid = graded_grid(h, theta_c, m, levels)

    def val(s):
        return (amplitude * (1.0 + 0.5 * np.sin(2.0 * s)) + eta * np.sqrt(abs(s - theta_c))) * prof

    def der(s):
        d = s - theta_c
        cusp_d = 0.0 if d == 0 else eta * np.sign(d) / (2.0 * np.sqrt(abs(d)))
        return (amplitude * np.cos(2.0 * s) + cusp_d) * prof

    return HistorySegment.from_function(h, val, der, grid=grid)


def random_segment(n_modes: int, h: float = 1.0, rng=None, amplitude: float = 0.5,
                   decay: float = 0.6, m: int = 64) -> HistorySegment:
    """Random smooth history: ``sum_j a_j(theta) c_j`` with trigonometric time profiles.

    Spatial coefficients fall off like ``exp(-decay * k)``.
    """
    rng = np.random.default_rng(rng)
    k = np.arange(1, n_modes + 1)
    c = amplitude * rng.standard_normal((3, n_modes)) * np.exp(-decay * (k - 1))
    w = rng.uniform(0.5, 3.0, size=2)
    p = rng.uniform(0, 2 * np.pi, size=2)

    def val(s):
        return c[0] + np.sin(w[0] * s + p[0]) * c[1] + 0.5 * np.cos(w[1] * s + p[1]) * c[2]

    def der(s):
        return w[0] * np.cos(w[0] * s + p[0]) * c[1] - 0.5 * w[1] * np.sin(w[1] * s + p[1]) * c[2]

    return HistorySegment.from_function(h, val, der, m)


def make_initial(name: str, n_modes: int, h: float = 1.0, rng=None, **params) -> HistorySegment:
    if name == "zero":
        return zero(n_modes, h, **params)
    if name == "single-mode-decay":
        return single_mode_decay(n_modes, h, **params)
    if name == "bump":
        return bump(n_modes, h, **params)
    if name == "cusp":
        return cusp(n_modes, h, **params)
    if name == "random":
        return random_segment(n_modes, h, rng, **params)
    raise ValueError(f"unknown initial history {name!r}; choose from {GENERATORS}")
