import numpy as np
import pytest
from hypothesis import given, strategies as st

from sddpde.history import (HermiteCurve, HistorySegment, c1_distance, extend_ET,
                            holder_exponent_estimate, norms, read_segment_csv, segment_at,
                            write_segment_csv)
from sddpde.spectral import HALF_PI, l2_norm, mode

RT = np.sqrt(HALF_PI)


def affine(n=4, k=1, m=16):
    e = mode(k, n)
    return HistorySegment.from_function(1.0, lambda s: (1 + s) * e, lambda s: e, m)


def test_constant_segment_reproduces_constant():
    c = np.array([1.0, -2.0, 0.5])
    seg = HistorySegment.constant(1.0, c, 8)
    for th in (-1.0, -0.73, -0.5, 0.0):
        np.testing.assert_allclose(seg.eval(th), c, rtol=0, atol=1e-15)


def test_hermite_is_exact_on_cubics():
    e = mode(1, 3)
    seg = HistorySegment.from_function(1.0, lambda s: (1 + s) * e, lambda s: e, 4)
    np.testing.assert_allclose(seg.eval(-0.5), 0.5 * e, atol=1e-15)
    cub = HistorySegment.from_function(1.0, lambda s: (s**3 - s) * e, lambda s: (3 * s**2 - 1) * e, 3)
    for th in np.linspace(-1, 0, 17):
        np.testing.assert_allclose(cub.eval(th), (th**3 - th) * e, atol=1e-14)


def test_hermite_error_on_exponential():
    e = mode(1, 2)
    seg = HistorySegment.from_function(1.0, lambda s: np.exp(-s) * e, lambda s: -np.exp(-s) * e, 8)
    assert np.max(np.abs(seg.eval(-0.37) - np.exp(0.37) * e)) < 1e-6


def test_eval_rejects_out_of_range():
    seg = affine()
    with pytest.raises(ValueError):
        seg.eval(0.1)
    with pytest.raises(ValueError):
        seg.eval(-1.5)


def test_nodes_are_exact(rng):
    vals = rng.standard_normal((9, 3))
    seg = HistorySegment(1.0, np.linspace(-1, 0, 9), vals, rng.standard_normal((9, 3)))
    np.testing.assert_array_equal(seg.eval(seg.grid), vals)


def test_grid_endpoints_enforced():
    with pytest.raises(ValueError):
        HistorySegment(1.0, np.linspace(-0.9, 0, 5), np.zeros((5, 1)), np.zeros((5, 1)))
    with pytest.raises(ValueError):
        HistorySegment(1.0, np.linspace(-1, -0.1, 5), np.zeros((5, 1)), np.zeros((5, 1)))


def test_norm_examples():
    z = norms(HistorySegment.constant(1.0, np.zeros(3)))
    assert (z.c_norm, z.c1_norm, z.x_norm) == (0.0, 0.0, 0.0)
    s = norms(HistorySegment.constant(1.0, mode(1, 3)))
    assert s.c_norm == pytest.approx(RT)
    assert s.c1_norm == pytest.approx(RT)
    assert s.x_norm == pytest.approx(2 * RT)
    a = norms(affine(3, 2))
    assert a.c_norm == pytest.approx(RT)
    assert a.c1_norm == pytest.approx(2 * RT)
    assert a.x_norm == pytest.approx(6 * RT)


def test_extend_examples():
    c = np.array([0.3, -1.0])
    ext = extend_ET(HistorySegment.constant(1.0, c), 1.0)
    np.testing.assert_allclose(ext(np.linspace(0, 1, 11)), np.tile(c, (11, 1)), atol=1e-15)
    ext = extend_ET(affine(2), 2.0)
    t = np.linspace(0, 2, 21)
    np.testing.assert_allclose(ext(t), np.outer(1 + t, mode(1, 2)), atol=1e-14)
    e = mode(1, 2)
    sq = HistorySegment.from_function(1.0, lambda s: s * s * e, lambda s: 2 * s * e, 8)
    np.testing.assert_allclose(extend_ET(sq, 1.5)(t * 0.75), 0.0, atol=1e-15)


@given(T=st.floats(0.05, 2.0), scale=st.floats(0.01, 1.0), seed=st.integers(0, 10_000))
def test_extension_stability(T, scale, seed):
    r = np.random.default_rng(seed)
    th = np.linspace(-1, 0, 17)
    a = HistorySegment(1.0, th, r.standard_normal((17, 3)), r.standard_normal((17, 3)))
    d = HistorySegment(1.0, th, scale * r.standard_normal((17, 3)), scale * r.standard_normal((17, 3)))
    b = a + d
    base = norms(d).c1_norm
    ea, eb = extend_ET(a, T), extend_ET(b, T)
    for t in np.linspace(0, T, 5):
        ga, gb = segment_at(ea, t, 1.0), segment_at(eb, t, 1.0)
        assert c1_distance(ga, gb) <= (1 + T) * base * (1 + 1e-9) + 1e-14


@given(a=st.floats(-3, 3), b=st.floats(-3, 3), th=st.floats(-1, 0), seed=st.integers(0, 1000))
def test_eval_is_linear(a, b, th, seed):
    r = np.random.default_rng(seed)
    g1, g2 = np.linspace(-1, 0, 9), np.union1d(np.linspace(-1, 0, 5), [-0.33])
    p = HistorySegment(1.0, g1, r.standard_normal((9, 2)), r.standard_normal((9, 2)))
    q = HistorySegment(1.0, g2, r.standard_normal((6, 2)), r.standard_normal((6, 2)))
    lhs = (a * p + b * q).eval(th)
    np.testing.assert_allclose(lhs, a * p.eval(th) + b * q.eval(th), atol=1e-12)


def test_segment_at_examples():
    seg = affine(2)
    np.testing.assert_array_equal(segment_at(seg, 0.0).values, seg.values)
    c = HistorySegment.constant(1.0, np.array([1.0, 2.0]))
    long = HermiteCurve(np.linspace(-1, 3, 9), np.tile([1.0, 2.0], (9, 1)), np.zeros((9, 2)))
    np.testing.assert_allclose(segment_at(long, 2.5, 1.0).values, np.tile([1.0, 2.0], (9 - 6, 1)))
    assert c.h == 1.0
    # analytic single-mode decay on [-1, 2]: u(t) = e^{-t}
    t = np.linspace(-1, 2, 97)
    e = mode(1, 1)
    curve = HermiteCurve(t, np.exp(-t)[:, None] * e, -np.exp(-t)[:, None] * e)
    s = segment_at(curve, 1.0, 1.0)
    th = np.linspace(-1, 0, 33)
    np.testing.assert_allclose(s.eval(th)[:, 0], np.exp(-(1.0 + th)), atol=1e-7)


def test_holder_examples():
    t = np.linspace(0, 1, 401)
    lip = holder_exponent_estimate(list(zip(t, np.outer(t, mode(1, 2)))))
    assert lip == pytest.approx(1.0, abs=0.05)
    sq = holder_exponent_estimate(list(zip(t, np.outer(np.sqrt(t), mode(1, 2)))))
    assert sq == pytest.approx(0.5, abs=0.05)
    const = holder_exponent_estimate(list(zip(t, np.ones((t.size, 2)))))
    assert const == np.inf


def test_csv_roundtrip(tmp_path, rng):
    seg = HistorySegment(1.0, np.linspace(-1, 0, 5), rng.standard_normal((5, 3)), rng.standard_normal((5, 3)))
    write_segment_csv(seg, tmp_path / "seg.csv")
    back = read_segment_csv(tmp_path / "seg.csv")
    np.testing.assert_array_equal(back.values, seg.values)
    np.testing.assert_array_equal(back.derivs, seg.derivs)
    np.testing.assert_array_equal(back.grid, seg.grid)
    assert back.h == seg.h


def test_norm_ordering(rng):
    for _ in range(20):
        seg = HistorySegment(1.0, np.linspace(-1, 0, 9), rng.standard_normal((9, 4)), rng.standard_normal((9, 4)))
        n = norms(seg)
        assert n.c_norm <= n.c1_norm <= n.x_norm
        assert n.c_norm >= float(np.max(l2_norm(seg.values)))
