"""Dirichlet Laplacian on (0, pi) realized in the sine eigenbasis.

A field is an array of sine coefficients ``c`` with ``u(x) = sum_k c_k sin(k x)``.
Arrays may carry leading batch axes; the mode axis is always the last one.
Every operator here is diagonal, so the semigroup, fractional powers and
operator norms are exact within the truncated space.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

HALF_PI = 0.5 * np.pi
DOMAIN_LENGTH = np.pi


def l2_norm(coeffs: np.ndarray) -> np.ndarray:
    """L2(0, pi) norm of one or many fields (Parseval: ||u||^2 = pi/2 sum c_k^2)."""
    c = np.asarray(coeffs, dtype=float)
    return np.sqrt(HALF_PI * np.sum(c * c, axis=-1))


def l2_inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return HALF_PI * np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def mode(k: int, n_modes: int, amplitude: float = 1.0) -> np.ndarray:
    """Coefficient vector of ``amplitude * sin(k x)``."""
    if not 1 <= k <= n_modes:
        raise ValueError(f"mode {k} outside 1..{n_modes}")
    c = np.zeros(n_modes)
    c[k - 1] = amplitude
    return c


@dataclass(frozen=True)
class Spectrum:
    """Truncated spectrum ``lambda_k = k**2`` with spectral-gap parameter ``delta``."""

    n_modes: int = 16
    delta: float = 0.5

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValueError("n_modes must be a positive integer")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, lambda_1) = (0, 1)")

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        k = np.arange(1, self.n_modes + 1, dtype=float)
        return k * k

    @property
    def domain_length(self) -> float:
        return DOMAIN_LENGTH

    def apply_A(self, u: np.ndarray) -> np.ndarray:
        return self.eigenvalues * np.asarray(u, dtype=float)

    def apply_semigroup(self, t: float, u: np.ndarray) -> np.ndarray:
        if t < 0:
            raise ValueError("semigroup time must be non-negative")
        return np.exp(-self.eigenvalues * t) * np.asarray(u, dtype=float)

    def apply_frac_power(self, alpha: float, u: np.ndarray) -> np.ndarray:
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        return self.eigenvalues**alpha * np.asarray(u, dtype=float)

    def semigroup_norm_bound(self, alpha: float, t: float | np.ndarray) -> np.ndarray | float:
        """Exact operator norm ``max_k lambda_k**alpha * exp(-lambda_k t)``.

        Vectorized over ``t``.
        """
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr <= 0):
            raise ValueError("t must be positive")
        lam = self.eigenvalues
        vals = lam**alpha * np.exp(-np.multiply.outer(t_arr, lam))
        out = vals.max(axis=-1)
        return float(out) if out.ndim == 0 else out

    def fit_C_alpha(self, alpha: float, t_grid, delta: float | None = None) -> float:
        """Smallest constant with ``||A^a e^{-At}|| <= C t^-a e^{-delta t}`` on ``t_grid``.

        The ``t -> 0+`` limit of ``t^a e^{delta t} ||A^a e^{-At}||`` (1 for
        ``a = 0``, 0 otherwise in the truncated space) is included, so the
        value is a sup over ``(0, max(t_grid)]`` up to grid resolution.
        """
        t = np.asarray(t_grid, dtype=float)
        if t.size == 0:
            raise ValueError("t_grid must be nonempty")
        d = self.delta if delta is None else delta
        scaled = t**alpha * np.exp(d * t) * self.semigroup_norm_bound(alpha, t)
        limit = 1.0 if alpha == 0 else 0.0
        return float(max(np.max(scaled), limit))

    @cached_property
    def default_t_grid(self) -> np.ndarray:
        return np.logspace(-4, 1, 200)

    def C_alpha(self, alpha: float) -> float:
        """``fit_C_alpha`` on the default 200-point log grid over [1e-4, 10]."""
        return self.fit_C_alpha(alpha, self.default_t_grid)

    def synthesize(self, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Point values ``u(x)`` of one or many fields."""
        basis = np.sin(np.outer(np.arange(1, self.n_modes + 1), np.asarray(x, dtype=float)))
        return np.asarray(coeffs) @ basis
