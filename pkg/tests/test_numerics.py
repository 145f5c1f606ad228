import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mpmath
from ehfdr.errors import ConvergenceError, DomainError
from ehfdr.numerics import (
    RandomStream,
    bessel_i0,
    bessel_i0e,
    bessel_k,
    bessel_ke,
    integrate,
    sample_channels,
    upper_incomplete_gamma_zero,
)
from ehfdr.numerics.quadrature import integrate_family
from ehfdr.numerics.random import CHUNK_SIZE, chunk_layout
from ehfdr.channel import SystemParams

scipy_special = pytest.importorskip("scipy.special")

POINTS = np.concatenate([np.geomspace(1e-8, 2.0, 40), np.linspace(2.0, 60.0, 80), [100.0, 300.0, 700.0]])


# -- special functions -------------------------------------------------------

def test_bessel_i0_matches_scipy():
    np.testing.assert_allclose(bessel_i0(POINTS[POINTS < 700]), scipy_special.i0(POINTS[POINTS < 700]), rtol=1e-13)
    np.testing.assert_allclose(bessel_i0e(POINTS), scipy_special.i0e(POINTS), rtol=1e-13)


@pytest.mark.parametrize("order", [0, 1])
def test_bessel_k_matches_scipy(order):
    np.testing.assert_allclose(bessel_k(order, POINTS[POINTS < 600]), scipy_special.kv(order, POINTS[POINTS < 600]),
                               rtol=1e-12)
    np.testing.assert_allclose(bessel_ke(order, POINTS), scipy_special.kve(order, POINTS), rtol=1e-12)


def test_reference_values():
    assert bessel_i0(0.0) == 1.0
    assert bessel_i0(1.0) == pytest.approx(1.2660658777520082, rel=1e-15)
    assert bessel_k(1, 2.0) == pytest.approx(0.13986588181652243, rel=1e-14)
    assert bessel_k(0, 1.0) == pytest.approx(float(mpmath.besselk(0, 1)), rel=1e-14)


def test_e1_matches_mpmath():
    for x in [1e-6, 0.3, 1.0, 2.5, 10.0, 80.0]:
        assert upper_incomplete_gamma_zero(x) == pytest.approx(float(mpmath.e1(x)), rel=1e-13)
        assert upper_incomplete_gamma_zero(x, scaled=True) == pytest.approx(float(mpmath.e1(x) * mpmath.exp(x)),
                                                                            rel=1e-13)


def test_special_domain_errors():
    with pytest.raises(DomainError):
        bessel_k(0, 0.0)
    with pytest.raises(DomainError):
        bessel_k(2, 1.0)
    with pytest.raises(DomainError):
        upper_incomplete_gamma_zero(-1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 500.0))
def test_bessel_orderings(x):
    k0 = bessel_ke(0, x)
    k1 = bessel_ke(1, x)
    assert 0 < k0 < k1
    assert bessel_i0e(x) <= 1.0


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 50.0), st.floats(1.0001, 2.0))
def test_e1_decreasing(x, factor):
    assert upper_incomplete_gamma_zero(x * factor) < upper_incomplete_gamma_zero(x)


# -- quadrature --------------------------------------------------------------

def test_integrate_known_integrals():
    assert integrate(lambda t: np.exp(-t), 0.0, np.inf).value == pytest.approx(1.0, abs=1e-12)
    assert integrate(np.log, 0.0, 1.0).value == pytest.approx(-1.0, rel=1e-9)
    assert integrate(lambda t: 1.0 / (1.0 + t * t), 0.0, np.inf, scale=1.0).value == pytest.approx(np.pi / 2, rel=1e-9)
    # flipped limits change sign
    assert integrate(np.cos, np.pi / 2, 0.0).value == pytest.approx(-1.0, rel=1e-12)


def test_integrate_breakpoints_and_evaluations():
    res = integrate(np.abs, -1.0, 2.0, breakpoints=[0.0])
    assert res.value == pytest.approx(2.5, rel=1e-14)
    assert res.evaluations > 0 and res.abs_error_estimate >= 0


def test_bessel_kernel_integral_identity():
    # int_0^inf exp(-a/(4t) - b t) dt = sqrt(a/b) K1(sqrt(a b))
    rng = np.random.default_rng(4)
    for a, b in rng.uniform(0.1, 5.0, size=(10, 2)):
        got = integrate(lambda t: np.exp(-a / (4 * t) - b * t), 0.0, np.inf, abs_tol=1e-13, rel_tol=1e-11).value
        expected = np.sqrt(a / b) * scipy_special.kv(1, np.sqrt(a * b))
        assert got == pytest.approx(expected, rel=1e-9)


def test_integrate_family_per_member_limits():
    lo = np.zeros(5)
    hi = np.arange(1.0, 6.0)
    res = integrate_family(lambda x, m: x ** 2, lo, hi)
    np.testing.assert_allclose(res.value, hi ** 3 / 3, rtol=1e-12)


def test_convergence_error_carries_estimate():
    with pytest.raises(ConvergenceError) as info:
        integrate(lambda t: np.sin(1.0 / t) / t, 1e-12, 1.0, max_intervals=8)
    assert info.value.estimate is not None


def test_non_finite_integrand_rejected():
    with pytest.raises(DomainError):
        integrate(lambda t: np.where(t > 0.5, np.inf, 1.0), 0.0, 1.0)


# -- random streams ----------------------------------------------------------

def test_streams_are_reproducible_and_prefix_stable():
    p = SystemParams()
    a = sample_channels(p, RandomStream(9), 20000)
    b = sample_channels(p, RandomStream(9), 20000)
    short = sample_channels(p, RandomStream(9), 100)
    np.testing.assert_array_equal(a.h1, b.h1)
    np.testing.assert_array_equal(a.h0[:100], short.h0)
    other = sample_channels(p, RandomStream(9, stream_id=1), 100)
    assert not np.allclose(other.h1, short.h1)


def test_chunk_layout_covers_blocks():
    layout = chunk_layout(2 * CHUNK_SIZE + 5)
    assert [c for _, _, c in layout] == [CHUNK_SIZE, CHUNK_SIZE, 5]
    assert [s for _, s, _ in layout] == [0, CHUNK_SIZE, 2 * CHUNK_SIZE]


def test_channel_moments():
    p = SystemParams(lambda1=2.0, sigma_02=0.4)
    ch = sample_channels(p, RandomStream(3), 200000)
    assert np.mean(ch.g1) == pytest.approx(2.0, rel=0.02)
    assert np.mean(ch.g2) == pytest.approx(1.0, rel=0.02)
    assert np.mean(ch.g0) == pytest.approx(0.4, rel=0.02)
    # Rician K from moments: E|h0| of the specular part
    g0 = ch.g0
    k_est = np.sqrt(2 * np.mean(g0) ** 2 - np.mean(g0 ** 2)) / (np.mean(g0) - np.sqrt(2 * np.mean(g0) ** 2 - np.mean(g0 ** 2)))
    assert k_est == pytest.approx(p.rician_k, rel=0.05)
