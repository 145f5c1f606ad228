"""Modified Bessel functions I0, K0, K1 and the exponential integral Gamma(0, x).

All routines accept scalars or numpy arrays and return the same shape.
Small arguments use power series.  Larger arguments use the asymptotic
expansion (I0), Steed's continued fraction followed by the asymptotic series
(K0, K1), and Lentz's continued fraction (Gamma(0, x)).
"""

import numpy as np

from ..errors import DomainError

EULER_GAMMA = 0.57721566490153286061
_EPS = np.finfo(float).eps

# I0 switches from the power series to the asymptotic series here; below this
# the asymptotic series cannot reach double precision.
_I0_SWITCH = 20.0
# K0/K1 switch from the log-series to Steed's continued fraction, and from
# there to the large-argument asymptotic series.
_K_SWITCH = 2.0
_K_ASYMPTOTIC = 50.0


def _as_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _restore(arr, like):
    return arr.item() if np.ndim(like) == 0 else arr


def _i0e_series(x):
    # exp(-x) * sum (x/2)^{2k} / (k!)^2
    q = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    k = 0
    while True:
        k += 1
        term = term * q / (k * k)
        total = total + term
        if np.all(term <= _EPS * 0.1 * total) or k > 200:
            break
    return total * np.exp(-x)


def _i0e_asymptotic(x):
    # I0(x) e^{-x} ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 60):
        term = term * (2 * k - 1) ** 2 / (8.0 * k * x)
        total = total + term
        if np.all(term <= _EPS * 0.1 * total):
            break
    return total / np.sqrt(2.0 * np.pi * x)


def bessel_i0e(x):
    """Exponentially scaled I0: ``I0(x) * exp(-x)`` for ``x >= 0``."""
    arr = _as_array(x)
    if np.any(arr < 0):
        raise DomainError("bessel_i0 requires x >= 0")
    out = np.empty_like(arr)
    small = arr < _I0_SWITCH
    if np.any(small):
        out[small] = _i0e_series(arr[small])
    if np.any(~small):
        out[~small] = _i0e_asymptotic(arr[~small])
    return _restore(out, x)


def bessel_i0(x):
    """Modified Bessel function of the first kind, order zero.

    >>> bessel_i0(0.0)
    1.0
    """
    arr = _as_array(x)
    scaled = np.asarray(bessel_i0e(arr))
    with np.errstate(over="ignore"):
        out = scaled * np.exp(arr)
    return _restore(out, x)


def _k_series(x):
    """K0 and K1 from their logarithmic power series, accurate for 0 < x <= 2."""
    q = 0.25 * x * x
    lg = np.log(0.5 * x)
    # K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} H_k q^k / (k!)^2
    # K1 = 1/x + ln(x/2) I1 - (x/4) sum_{k>=0} (psi(k+1) + psi(k+2)) q^k / (k!(k+1)!)
    t0 = np.ones_like(x)       # q^k / (k!)^2
    t1 = np.ones_like(x)       # q^k / (k!(k+1)!)
    i0 = np.ones_like(x)
    i1 = np.ones_like(x)       # (2/x) I1 = sum q^k / (k!(k+1)!)
    s0 = np.zeros_like(x)
    harmonic = 0.0
    psi_k1 = -EULER_GAMMA      # psi(k+1) at k=0
    psi_k2 = 1.0 - EULER_GAMMA  # psi(k+2) at k=0
    s1 = (psi_k1 + psi_k2) * t1
    for k in range(1, 60):
        t0 = t0 * q / (k * k)
        t1 = t1 * q / (k * (k + 1))
        harmonic += 1.0 / k
        psi_k1 += 1.0 / k
        psi_k2 += 1.0 / (k + 1)
        i0 = i0 + t0
        i1 = i1 + t1
        s0 = s0 + harmonic * t0
        s1 = s1 + (psi_k1 + psi_k2) * t1
        if np.all(t0 <= _EPS * 1e-3 * i0):
            break
    k0 = -(lg + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / x + lg * (0.5 * x * i1) - 0.25 * x * s1
    return k0, k1


def _ke_steed(x):
    """exp(x)*K0 and exp(x)*K1 via Steed's continued fraction (x >= 2)."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, 500):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) < _EPS * np.abs(s)):
            break
    h = a1 * h
    k0e = np.sqrt(np.pi / (2.0 * x)) / s
    k1e = k0e * (x + 0.5 - h) / x
    return k0e, k1e


def _ke_asymptotic(order, x):
    # K_v(x) e^x ~ sqrt(pi/2x) sum_k prod_{j<=k} (4v^2 - (2j-1)^2) / (j 8x)
    mu4 = 4.0 * order * order
    term = np.ones_like(x)
    total = np.ones_like(x)
    for j in range(1, 40):
        term = term * (mu4 - (2 * j - 1) ** 2) / (8.0 * j * x)
        total = total + term
        if np.all(np.abs(term) <= _EPS * 0.1 * np.abs(total)):
            break
    return np.sqrt(np.pi / (2.0 * x)) * total


def bessel_ke(order, x):
    """Exponentially scaled K: ``K_order(x) * exp(x)`` for order 0 or 1."""
    if order not in (0, 1):
        raise DomainError("only orders 0 and 1 are supported")
    arr = _as_array(x)
    if np.any(arr <= 0):
        raise DomainError("bessel_k requires x > 0")
    out = np.empty_like(arr)
    small = arr <= _K_SWITCH
    if np.any(small):
        xs = arr[small]
        k0, k1 = _k_series(xs)
        out[small] = (k0 if order == 0 else k1) * np.exp(xs)
    mid = ~small & (arr <= _K_ASYMPTOTIC)
    if np.any(mid):
        k0e, k1e = _ke_steed(arr[mid])
        out[mid] = k0e if order == 0 else k1e
    large = arr > _K_ASYMPTOTIC
    if np.any(large):
        out[large] = _ke_asymptotic(order, arr[large])
    return _restore(out, x)


def bessel_k(order, x):
    """Modified Bessel function of the second kind, order 0 or 1."""
    arr = _as_array(x)
    scaled = np.asarray(bessel_ke(order, arr))
    with np.errstate(under="ignore"):
        out = scaled * np.exp(-arr)
    return _restore(out, x)


def _e1_series(x):
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    total = np.zeros_like(x)
    fact = np.ones_like(x)
    for k in range(1, 80):
        fact = -fact * x / k
        term = -fact / k
        total = total + term
        if np.all(np.abs(term) < _EPS * np.abs(total)):
            break
    return -EULER_GAMMA - np.log(x) + total


def _e1_scaled_cf(x):
    # exp(x) E1(x) by the modified Lentz method (x > 1)
    tiny = 1e-300
    b = x + 1.0
    c = np.full_like(x, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, 500):
        an = -float(i * i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            break
    return h


def upper_incomplete_gamma_zero(x, scaled=False):
    """Gamma(0, x) = E1(x) = int_x^inf e^{-t}/t dt for x > 0.

    With ``scaled=True`` returns ``exp(x) * Gamma(0, x)``, which stays finite
    for large x.
    """
    arr = _as_array(x)
    if np.any(arr <= 0):
        raise DomainError("upper_incomplete_gamma_zero requires x > 0")
    out = np.empty_like(arr)
    small = arr <= 1.0
    if np.any(small):
        xs = arr[small]
        e1 = _e1_series(xs)
        out[small] = e1 * np.exp(xs) if scaled else e1
    if np.any(~small):
        xl = arr[~small]
        e1s = _e1_scaled_cf(xl)
        with np.errstate(under="ignore"):
            out[~small] = e1s if scaled else e1s * np.exp(-xl)
    return _restore(out, x)
