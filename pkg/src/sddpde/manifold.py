"""Solution manifold: compatibility residual, membership and projection.

A segment lies on the manifold when ``phi'(0) + A phi(0) = F(phi)``.  The
projection keeps ``phi(0)`` and corrects along ``a(s) y`` with
``a(s) = s exp(b s)``, which leaves the head value unchanged (``a(0) = 0``)
and shifts the head derivative by ``y`` (``a'(0) = 1``).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .history import HistorySegment, norms
from .nonlinearity import apply_DF, apply_F
from .spectral import l2_norm

MEMBER_TOL = 1e-8
PROJECT_TOL = 1e-10


class ProjectionError(RuntimeError):
    pass


@dataclass
class ManifoldReport:
    residual_field: np.ndarray
    residual_norm: float
    member: bool
    b_used: float = float("nan")
    corrector_iters: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["residual_field"] = [float(v) for v in self.residual_field]
        return d


def residual_field(phi: HistorySegment, model) -> np.ndarray:
    return phi.head_derivative + model.spectrum.apply_A(phi.head) - apply_F(phi, model)


def manifold_residual(phi: HistorySegment, model, tol: float = MEMBER_TOL) -> ManifoldReport:
    g = residual_field(phi, model)
    n = float(l2_norm(g))
    return ManifoldReport(g, n, n <= tol)


def chart_profile(theta, b: float):
    """``a(s) = s e^{bs}`` and ``a'(s)`` on the grid."""
    theta = np.asarray(theta, dtype=float)
    e = np.exp(b * theta)
    return theta * e, (1.0 + b * theta) * e


def shift_along_chart(phi: HistorySegment, y, b: float) -> HistorySegment:
    a, da = chart_profile(phi.times, b)
    return HistorySegment(phi.h, phi.times, phi.values + a[:, None] * y, phi.derivs + da[:, None] * y)


def random_unit_directions(phi: HistorySegment, count: int, rng=None) -> list[HistorySegment]:
    """Smooth random directions with unit C1 norm on the grid of ``phi``.

    Half of them are constant in time, which is where ``||DF chi||`` tends
    to peak relative to the C1 norm.
    """
    rng = np.random.default_rng(rng)
    theta = phi.times
    n = phi.n_modes
    out = []
    for i in range(count):
        spatial = rng.standard_normal((3, n)) / np.arange(1, n + 1) ** rng.uniform(0, 1.5)
        if i % 2 == 0:
            vals = np.tile(spatial[0], (theta.size, 1))
            ders = np.zeros_like(vals)
        else:
            w = rng.uniform(0.5, 3.0)
            c, s = np.cos(w * theta), np.sin(w * theta)
            vals = spatial[0] + c[:, None] * spatial[1] + s[:, None] * spatial[2]
            ders = w * (-s[:, None] * spatial[1] + c[:, None] * spatial[2])
        chi = HistorySegment(phi.h, theta, vals, ders)
        out.append((1.0 / norms(chi).c1_norm) * chi)
    return out


def estimate_b(phi: HistorySegment, model, samples: int = 64, rng=0) -> float:
    """``2 e max ||DF(phi) chi|| + 1`` over random unit-C1 directions."""
    best = 0.0
    for chi in random_unit_directions(phi, samples, rng):
        best = max(best, float(l2_norm(apply_DF(phi, chi, model))))
    return 2.0 * np.e * best + 1.0


def project_to_manifold(phi: HistorySegment, model, b: float | None = None,
                        tol: float = PROJECT_TOL, member_tol: float = MEMBER_TOL,
                        max_iter: int = 200) -> tuple[HistorySegment, ManifoldReport]:
    """Fixed-point corrector ``y <- F(phi + a y) - A phi(0) - phi'(0)``."""
    start = manifold_residual(phi, model, member_tol)
    if start.member:
        return phi, start
    if b is None:
        b = estimate_b(phi, model)
    base = model.spectrum.apply_A(phi.head) + phi.head_derivative
    y = np.zeros(phi.n_modes)
    prev_step = None
    bad = 0
    for it in range(1, max_iter + 1):
        y_new = apply_F(shift_along_chart(phi, y, b), model) - base
        step = float(l2_norm(y_new - y))
        y = y_new
        if step <= tol:
            break
        if prev_step is not None and step >= prev_step:
            bad += 1
            if bad >= 3:
                raise ProjectionError(
                    f"chart corrector is not contracting (b={b:.4g}); retry with a larger b")
        else:
            bad = 0
        prev_step = step
    else:
        raise ProjectionError(f"chart corrector did not reach {tol:g} in {max_iter} iterations")
    out = shift_along_chart(phi, y, b)
    rep = manifold_residual(out, model, member_tol)
    rep.b_used = float(b)
    rep.corrector_iters = it - 1 if step == 0.0 else it
    return out, rep


def tangency_residual(phi: HistorySegment, chi: HistorySegment, model) -> np.ndarray:
    """``chi'(0) + A chi(0) - DF(phi) chi``: zero for tangent directions."""
    return chi.head_derivative + model.spectrum.apply_A(chi.head) - apply_DF(phi, chi, model)


def project_tangent(phi: HistorySegment, chi: HistorySegment, model, b: float | None = None,
                    tol: float = 1e-14, max_iter: int = 200) -> HistorySegment:
    """Linear analogue of the projection: correct ``chi`` along ``a z`` until tangent at ``phi``."""
    if b is None:
        b = estimate_b(phi, model)
    if not np.array_equal(phi.times, chi.times):
        raise ValueError("direction must share the grid of the base segment")
    base = model.spectrum.apply_A(chi.head) + chi.head_derivative
    z = np.zeros(chi.n_modes)
    for _ in range(max_iter):
        z_new = apply_DF(phi, shift_along_chart(chi, z, b), model) - base
        step = float(l2_norm(z_new - z))
        z = z_new
        if step <= tol * max(1.0, float(l2_norm(z))):
            break
    else:
        raise ProjectionError("tangent corrector did not converge")
    return shift_along_chart(chi, z, b)
