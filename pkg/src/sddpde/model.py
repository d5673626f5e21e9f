"""Model container tying together the spectrum, B, the delay and the horizon."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .delay import ConstantDelay, ThresholdDelay
from .nonlinearity import ConvolutionB, Kernel, ScalarFunction
from .spectral import Spectrum


@dataclass(frozen=True)
class ModelSpec:
    spectrum: Spectrum = field(default_factory=Spectrum)
    B: ConvolutionB = field(default_factory=ConvolutionB)
    delay: ThresholdDelay | ConstantDelay = field(default_factory=ThresholdDelay)
    alpha: float = 0.5

    def __post_init__(self):
        if self.B.n_modes != self.spectrum.n_modes:
            raise ValueError("B and spectrum disagree on n_modes")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def h(self) -> float:
        return self.delay.h

    @property
    def n_modes(self) -> int:
        return self.spectrum.n_modes

    @cached_property
    def l_b_alpha(self) -> float:
        # the closed form, raised to the exact discrete bound if that is larger
        bound = self.B.operator_bound(self.alpha)
        if self.alpha == 0.5:
            return max(self.B.analytic_bound(0.5), bound)
        return bound

    @cached_property
    def l_b_0(self) -> float:
        return max(self.B.analytic_bound(0.0), self.B.operator_bound(0.0))

    @cached_property
    def c_one_minus_alpha(self) -> float:
        return self.spectrum.C_alpha(1.0 - self.alpha)

    @property
    def is_zero(self) -> bool:
        return self.B.kernel.name == "zero" or (self.B.scalar.gain == 0 and self.B.scalar.offset == 0)


def make_model(n_modes: int = 16, delta: float = 0.5, alpha: float = 0.5,
               kernel: str = "gaussian", amplitude: float = 0.1, width: float = 0.5,
               b: str = "tanh", gain: float = 1.0, offset: float = 0.0, clip: float = 1.0,
               delay: str = "threshold", c1: float = 0.5, c2: float = 4.0, c3: float = 1.0,
               r0: float = 0.5, h: float = 1.0, grid_points: int = 128,
               quad_points: int = 6) -> ModelSpec:
    """Flat-keyword constructor used by presets, scripts and tests."""
    sp = Spectrum(n_modes, delta)
    B = ConvolutionB(Kernel(kernel, amplitude, width), ScalarFunction(b, gain, offset, clip),
                     n_modes, grid_points)
    if delay == "threshold":
        d = ThresholdDelay(c1, c2, c3, h, quad_points)
    elif delay == "constant":
        d = ConstantDelay(r0, h)
    else:
        raise ValueError(f"unknown delay kind {delay!r}")
    return ModelSpec(sp, B, d, alpha)
