"""Right-hand side ``F(phi) = B(phi(-r(phi)))`` with a convolution operator B.

``B(u)(x) = int_0^pi f(x - y) b(u(y)) dy`` is evaluated on a uniform physical
grid over [0, pi]: sine synthesis, pointwise ``b``, trapezoid convolution,
sine analysis.  With ``M`` grid points and ``N < M - 1`` modes the discrete
analysis is an exact left inverse of the synthesis.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .spectral import HALF_PI, l2_norm

KERNELS = ("gaussian", "cosine", "zero")
SCALARS = ("identity", "tanh", "clipped")


@dataclass(frozen=True)
class Kernel:
    """Convolution kernel ``f`` on [-pi, pi]."""

    name: str = "gaussian"
    amplitude: float = 0.1
    width: float = 0.5

    def __post_init__(self):
        if self.name not in KERNELS:
            raise ValueError(f"unknown kernel {self.name!r}; choose from {KERNELS}")
        if self.name == "gaussian" and self.width <= 0:
            raise ValueError("gaussian width must be positive")

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.name == "gaussian":
            return self.amplitude * np.exp(-0.5 * (z / self.width) ** 2)
        if self.name == "cosine":
            return self.amplitude * np.cos(z)
        return np.zeros_like(z)

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        if self.name == "gaussian":
            return -z / self.width**2 * self(z)
        if self.name == "cosine":
            return -self.amplitude * np.sin(z)
        return np.zeros_like(z)

    @cached_property
    def l1_norm(self) -> float:
        return _l1(self.__call__)

    @cached_property
    def grad_l1_norm(self) -> float:
        return _l1(self.gradient)


def _l1(fun) -> float:
    val, _ = integrate.quad(lambda z: abs(float(fun(z))), -np.pi, np.pi, limit=200,
                            points=[0.0, -np.pi / 2, np.pi / 2])
    return float(val)


@dataclass(frozen=True)
class ScalarFunction:
    """Scalar nonlinearity ``b(u) = gain * base(u) + offset`` with analytic derivative."""

    name: str = "identity"
    gain: float = 1.0
    offset: float = 0.0
    clip: float = 1.0

    def __post_init__(self):
        if self.name not in SCALARS:
            raise ValueError(f"unknown scalar function {self.name!r}; choose from {SCALARS}")

    def __call__(self, u):
        if self.name == "identity":
            base = u
        elif self.name == "tanh":
            base = np.tanh(u)
        else:
            base = np.clip(u, -self.clip, self.clip)
        return self.gain * base + self.offset

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        if self.name == "identity":
            d = np.ones_like(u)
        elif self.name == "tanh":
            d = 1.0 / np.cosh(u) ** 2
        else:
            d = (np.abs(u) < self.clip).astype(float)
        return self.gain * d

    @property
    def lipschitz(self) -> float:
        return abs(self.gain)

    @property
    def is_linear(self) -> bool:
        return self.name == "identity" and self.offset == 0.0


@dataclass(frozen=True)
class ConvolutionB:
    kernel: Kernel = field(default_factory=Kernel)
    scalar: ScalarFunction = field(default_factory=ScalarFunction)
    n_modes: int = 16
    grid_points: int = 128

    def __post_init__(self):
        if self.n_modes >= self.grid_points - 1:
            raise ValueError("need n_modes < grid_points - 1")

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.grid_points)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.grid_points, np.pi / (self.grid_points - 1))
        w[[0, -1]] *= 0.5
        return w

    @cached_property
    def synthesis(self) -> np.ndarray:
        """(M, N) matrix of ``sin(k x_j)``."""
        return np.sin(np.outer(self.x, np.arange(1, self.n_modes + 1)))

    @cached_property
    def analysis(self) -> np.ndarray:
        """(N, M) trapezoid projection onto sine coefficients."""
        return (2.0 / np.pi) * self.synthesis.T * self.weights

    @cached_property
    def transfer(self) -> np.ndarray:
        """(N, M) matrix taking grid values of ``b(u)`` to coefficients of ``B(u)``."""
        conv = self.kernel(self.x[:, None] - self.x[None, :]) * self.weights
        return self.analysis @ conv

    @property
    def lip_b(self) -> float:
        return self.scalar.lipschitz

    def to_grid(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs, dtype=float) @ self.synthesis.T

    def apply(self, coeffs) -> np.ndarray:
        return self.scalar(self.to_grid(coeffs)) @ self.transfer.T

    def linearized(self, coeffs, direction) -> np.ndarray:
        """``DB(u) w``: pointwise ``b'(u) w`` inside the convolution."""
        gain = self.scalar.derivative(self.to_grid(coeffs))
        return (gain * self.to_grid(direction)) @ self.transfer.T

    def operator_bound(self, alpha: float) -> float:
        """``L_b * ||A^alpha Q||``: exact Lipschitz bound of the discrete operator."""
        lam = np.arange(1, self.n_modes + 1, dtype=float) ** 2
        mat = (lam**alpha)[:, None] * self.transfer / np.sqrt(self.weights)
        return float(self.lip_b * np.sqrt(HALF_PI) * np.linalg.norm(mat, 2))

    def analytic_bound(self, alpha: float) -> float:
        """Young-inequality constants: ``||f||_1 L_b`` at alpha = 0 and
        ``L_b (||f||_1^2 + ||f'||_1^2)^(1/2)`` at alpha = 1/2 (equivalence constant 1)."""
        if alpha == 0:
            return self.kernel.l1_norm * self.lip_b
        if alpha == 0.5:
            return self.lip_b * float(np.hypot(self.kernel.l1_norm, self.kernel.grad_l1_norm))
        raise ValueError("closed-form bound only for alpha in {0, 1/2}")


def apply_B(u, cfg: ConvolutionB) -> np.ndarray:
    return cfg.apply(u)


def estimate_LB_alpha(cfg: ConvolutionB, alpha: float, samples: int = 1000, rng=None) -> float:
    """Largest sampled ``||A^a (B(u) - B(v))|| / ||u - v||`` over random pairs.

    At ``alpha = 1/2`` the sample is compared with the closed-form constant and
    a warning is issued when it exceeds it.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    rng = np.random.default_rng(rng)
    n = cfg.n_modes
    lam = np.arange(1, n + 1, dtype=float) ** 2
    decay = 1.0 / np.arange(1, n + 1) ** rng.uniform(0.0, 2.0, size=(samples, 1))
    scale = 10.0 ** rng.uniform(-1, 1, size=(samples, 1))
    u = scale * decay * rng.standard_normal((samples, n))
    v = u + scale * decay * rng.standard_normal((samples, n)) * 10.0 ** rng.uniform(-3, 0, size=(samples, 1))
    num = l2_norm(lam**alpha * (cfg.apply(u) - cfg.apply(v)))
    den = l2_norm(u - v)
    ratio = float(np.max(num / den))
    if alpha == 0.5:
        bound = cfg.analytic_bound(0.5)
        if ratio > bound * (1 + 1e-9):
            warnings.warn(f"sampled L_B,1/2 = {ratio:.4g} exceeds closed-form constant {bound:.4g}",
                          stacklevel=2)
    return ratio


@dataclass(frozen=True)
class LipschitzLedger:
    alpha: float
    l_b_alpha: float
    l_b_0: float
    l_r: float
    l_phi: float
    l_f_alpha: float
    l_f_0: float

    @classmethod
    def compose(cls, alpha, l_b_alpha, l_b_0, l_r, l_phi) -> "LipschitzLedger":
        factor = l_phi * l_r + 1.0
        return cls(alpha, l_b_alpha, l_b_0, l_r, l_phi, l_b_alpha * factor, l_b_0 * factor)


def build_ledger(model, radius: float) -> LipschitzLedger:
    """Lipschitz constants of B, r and F on the ball of the given radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    from .delay import delay_lipschitz_estimate

    l_r = delay_lipschitz_estimate(model.delay, radius)
    return LipschitzLedger.compose(model.alpha, model.l_b_alpha, model.l_b_0, l_r, radius)


def forcing(model, curve, s, acc=None):
    """``F(x_s)`` at times ``s`` along ``curve``; returns ``(F, r, residual)``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    r, _, residual = model.delay.delays(curve, s, acc)
    return model.B.apply(curve(s - r)), r, residual


def linearized_forcing(model, curve, dcurve, s, r):
    """``DF(x_s) v_s = DB(x(s-r)) [v(s-r) - x'(s-r) Dr(x_s) v_s]``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    tau = s - r
    dr = model.delay.derivatives(curve, dcurve, s, r)
    arg = dcurve(tau) - curve.derivative(tau) * dr[:, None]
    return model.B.linearized(curve(tau), arg)


def apply_F(seg, model) -> np.ndarray:
    return forcing(model, seg, [0.0])[0][0]


def apply_DF(seg, direction, model) -> np.ndarray:
    """Frechet derivative of F at ``seg`` applied to ``direction``.

    Only values of the direction enter, never its derivative, so continuous
    directions are accepted as they are.
    """
    from .history import _common_grid

    a, b = _common_grid(seg, direction)
    r, _, _ = model.delay.delays(a, [0.0])
    return linearized_forcing(model, a, b, np.array([0.0]), r)[0]
