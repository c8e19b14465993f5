import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from wfrestore.framelets import Filter1D, Filter2D, bspline_bank, level_filter
from wfrestore.transform import (
    FrameCoefficients, LambdaWeights, analyze, circ_conv, coefficient_index, highpass_l1,
    max_levels, periodize, synthesize, weighted_l1,
)


def brute_analyze(u, bank, levels):
    """(W_{l,a} u)[k] = sum_j a_{l,a}[j] u[k + j mod N] straight from the level filters."""
    n = u.shape[0]
    out = []
    for l, alpha in coefficient_index(bank.order, levels):
        lf = level_filter(bank, l, alpha)
        plane = np.zeros((n, n))
        s1, s2 = lf.rows.support, lf.cols.support
        for k1 in range(n):
            for k2 in range(n):
                acc = 0.0
                for i, j1 in enumerate(s1):
                    for j, j2 in enumerate(s2):
                        acc += lf.taps2d[i, j] * u[(k1 + j1) % n, (k2 + j2) % n]
                plane[k1, k2] = acc
        out.append(plane)
    return np.array(out)


def brute_conv(mask, u):
    n = u.shape[0]
    p = periodize(mask, n)
    out = np.zeros((n, n))
    for k1 in range(n):
        for k2 in range(n):
            for m1 in range(n):
                for m2 in range(n):
                    out[k1, k2] += p[(k1 - m1) % n, (k2 - m2) % n] * u[m1, m2]
    return out


def test_periodize_examples():
    d = Filter2D(np.ones((1, 1)), (0, 0))
    assert periodize(d, 4)[0, 0] == 1 and periodize(d, 4).sum() == 1
    far = Filter2D(np.ones((1, 1)), (-5, -1))
    p = periodize(far, 4)
    assert p[1, 1] == 1 and p.sum() == 1
    np.testing.assert_allclose(periodize(Filter1D(np.array([0.25, 0.5, 0.25]), 1), 2), [0.5, 0.5])


def test_circ_conv_examples(rng):
    u = rng.random((4, 4))
    delta = Filter2D(np.ones((1, 1)), (0, 0))
    np.testing.assert_array_equal(circ_conv(delta, u), u)
    avg = Filter2D(np.full((3, 3), 1 / 9), (1, 1))
    np.testing.assert_allclose(circ_conv(avg, np.full((4, 4), 2.5)), 2.5)
    half = Filter2D(np.array([[0.5, 0.5]]), (0, 0))
    d = np.zeros((4, 4))
    d[0, 0] = 1
    out = circ_conv(half, d)
    assert out[0, 0] == 0.5 and out[0, 1] == 0.5 and out.sum() == 1


@pytest.mark.parametrize("n", [3, 5, 8])
def test_circ_conv_brute_force(rng, n):
    mask = Filter2D(rng.standard_normal((3, 4)), (1, 2))
    u = rng.standard_normal((n, n))
    np.testing.assert_allclose(circ_conv(mask, u), brute_conv(mask, u), atol=1e-12)
    # reverse mode is the adjoint
    v = rng.standard_normal((n, n))
    assert np.vdot(circ_conv(mask, u), v) == pytest.approx(np.vdot(u, circ_conv(mask, v, reverse=True)))


@pytest.mark.parametrize("r,levels", [(1, 1), (2, 1), (2, 2), (4, 2)])
def test_analyze_brute_force(rng, r, levels):
    bank = bspline_bank(r)
    u = rng.standard_normal((8, 8))
    want = brute_analyze(u, bank, levels)
    np.testing.assert_allclose(analyze(u, bank, levels).planes, want, atol=1e-12)
    np.testing.assert_allclose(analyze(u, bank, levels, method="spectral").planes, want, atol=1e-12)


def test_delta_gives_flipped_filter():
    bank = bspline_bank(2)
    u = np.zeros((8, 8))
    u[0, 0] = 1
    c = analyze(u, bank, 1)
    lf = level_filter(bank, 0, (1, 0))
    flipped = Filter2D(lf.taps2d[::-1, ::-1], (lf.taps2d.shape[0] - 1 - lf.offset[0],
                                              lf.taps2d.shape[1] - 1 - lf.offset[1]))
    np.testing.assert_allclose(c.plane(0, (1, 0)), periodize(flipped, 8))


def test_plane_count_and_order():
    for r in (1, 2, 4):
        for L in (1, 2, 3):
            idx = coefficient_index(r, L)
            assert len(idx) == L * (r + 1) ** 2 - L + 1
            assert idx == tuple(sorted(idx))
            assert sum(a == (0, 0) for _, a in idx) == 1
            assert (L - 1, (0, 0)) in idx


def test_constant_image():
    bank = bspline_bank(3)
    c = analyze(np.full((16, 16), 0.7), bank, 2)
    for (l, a), p in zip(c.index, c.planes):
        np.testing.assert_allclose(p, 0.7 if a == (0, 0) else 0.0, atol=1e-14)
    assert weighted_l1(c, LambdaWeights.schedule(0.5, 16, 2, 3)) == pytest.approx(0, abs=1e-12)


def test_levels_validated():
    bank = bspline_bank(2)
    assert max_levels(16) == 3
    with pytest.raises(ValueError):
        analyze(np.zeros((16, 16)), bank, 4)
    with pytest.raises(ValueError):
        analyze(np.zeros((16, 16)), bank, 0)
    with pytest.raises(ValueError):
        analyze(np.zeros((8, 4)), bank, 1)
    with pytest.raises(ValueError):
        analyze(np.zeros((8, 8)), bank, 1, method="wavelet")


def test_synthesize_shape_checks():
    c = analyze(np.zeros((8, 8)), bspline_bank(2), 1)
    with pytest.raises(ValueError):
        synthesize(c, bspline_bank(1))
    with pytest.raises(ValueError):
        synthesize(FrameCoefficients(c.planes[:-1], 2, 1), bspline_bank(2))
    np.testing.assert_array_equal(synthesize(c, bspline_bank(2)), 0.0)


@pytest.mark.parametrize("r,L,n", [(1, 3, 16), (2, 2, 32), (4, 1, 16), (4, 3, 16)])
def test_perfect_reconstruction_and_energy(rng, r, L, n):
    bank = bspline_bank(r)
    u = rng.random((5, n, n))
    c = analyze(u, bank, L)
    assert np.abs(synthesize(c, bank) - u).max() <= 1e-10
    assert np.abs(synthesize(c, bank, method="spectral") - u).max() <= 1e-10
    energy = np.sum(c.planes**2, axis=(0, 2, 3))
    np.testing.assert_allclose(energy, np.sum(u**2, axis=(1, 2)), rtol=1e-10)


@given(arrays(np.float64, (8, 8), elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, (8, 8), elements=st.floats(-1e3, 1e3)),
       st.sampled_from([1, 2, 3]), st.sampled_from([1, 2]))
@settings(max_examples=40, deadline=None)
def test_linearity_and_adjoint(u, v, r, L):
    bank = bspline_bank(r)
    cu, cv = analyze(u, bank, L), analyze(v, bank, L)
    np.testing.assert_allclose(analyze(2 * u - v, bank, L).planes, 2 * cu.planes - cv.planes,
                               atol=1e-9)
    lhs = cu.inner(cv)
    rhs = float(np.vdot(u, synthesize(cv, bank)))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs), np.sum(u**2) + np.sum(v**2))


def test_coefficient_arithmetic(rng):
    bank = bspline_bank(2)
    c = analyze(rng.random((8, 8)), bank, 1)
    np.testing.assert_array_equal((c + c).planes, (2 * c).planes)
    np.testing.assert_array_equal((c - c).planes, 0.0)
    assert c.highpass.tolist() == [a != (0, 0) for _, a in c.index]


def test_lambda_schedule():
    w = LambdaWeights.schedule(0.5, 32, 2, 1)
    idx = coefficient_index(1, 2)
    for (l, a), v in zip(idx, w.values):
        assert v == (0.0 if a == (0, 0) else 2 ** (0.5 * (5 - l - 1)))
    np.testing.assert_array_equal(LambdaWeights.schedule(0.0, 32, 2, 1).values,
                                  LambdaWeights.ones(1, 2).values)


def test_lambda_validation():
    with pytest.raises(ValueError):
        LambdaWeights.schedule(1.5, 16, 1, 2)
    idx = coefficient_index(2, 1)
    with pytest.raises(ValueError):
        LambdaWeights.from_upsilon(0.5, np.full(len(idx), 5.0), 16, 2, 1)
    with pytest.raises(ValueError):
        LambdaWeights.from_upsilon(0.5, np.full(len(idx), 1.5), 16, 2, 1)
    with pytest.raises(ValueError):
        LambdaWeights.from_upsilon(0.5, np.ones(3), 16, 2, 1)


def test_weighted_l1(rng):
    bank = bspline_bank(2)
    c = analyze(rng.random((16, 16)), bank, 2)
    plain = sum(np.abs(p).sum() for (_, a), p in zip(c.index, c.planes) if a != (0, 0))
    assert highpass_l1(c) == pytest.approx(plain)
    assert weighted_l1(c, LambdaWeights.schedule(0.0, 16, 2, 2)) == pytest.approx(plain)
    w = LambdaWeights.schedule(-0.5, 16, 2, 2)
    want = sum(v * np.abs(p).sum() for v, p in zip(w.values, c.planes))
    assert weighted_l1(c, w) == pytest.approx(want)
    per_pixel = LambdaWeights(0.0, np.broadcast_to(w.values[:, None, None], c.planes.shape).copy())
    assert weighted_l1(c, per_pixel) == pytest.approx(want)
