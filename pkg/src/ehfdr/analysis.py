"""Closed-form and quadrature expressions for outage, ergodic capacity and throughput.

Every expression keeps the exact statistical model: Rayleigh hops with means
``lambda1``, ``lambda2``, ``lambda3`` and a Rician self-interference gain
``|h0|^2`` with K-factor ``rician_k`` and mean ``sigma_02``.  Nested integrals
are evaluated with the vectorized adaptive quadrature of
:mod:`ehfdr.numerics.quadrature`: each outer batch of nodes triggers one family
integration of all inner integrals at once.
"""

from dataclasses import dataclass
from enum import Enum
import logging

import numpy as np

from .errors import ContractError, ConvergenceError, DomainError, SingularIntegrandError
from .numerics.quadrature import integrate, integrate_family
from .numerics.special import bessel_i0e, bessel_ke, upper_incomplete_gamma_zero
from .relay import Scheme

log = logging.getLogger(__name__)

LN2 = np.log(2.0)

# Inner integrals use these tolerances; outer integrals are ten times looser.
INNER_ABS_TOL = 1e-9
INNER_REL_TOL = 1e-7
OUTER_ABS_TOL = 1e-8
OUTER_REL_TOL = 1e-6

SERIES_MAX_TERMS = 500
SERIES_REL_STOP = 1e-12


class Method(str, Enum):
    EXACT_INTEGRAL = "exact_integral"
    HIGH_SNR_APPROX = "high_snr_approx"
    SERIES = "series"
    CLOSED_FORM = "closed_form"


class Mode(str, Enum):
    DELAY_LIMITED = "delay_limited"
    DELAY_TOLERANT = "delay_tolerant"
    INSTANTANEOUS = "instantaneous"


@dataclass(frozen=True)
class AnalyticResult:
    """An analytic metric with the method used and a numerical error bound."""

    value: float
    method: Method
    error_bound: float = 0.0


def _clamp_probability(value, label):
    if value < -1e-6 or value > 1.0 + 1e-6:
        log.warning("%s deviates from [0, 1] before clamping: %.3e", label, value)
    return float(min(max(value, 0.0), 1.0))


def _clamp_nonnegative(value, label):
    if value < -1e-6:
        log.warning("%s is negative before clamping: %.3e", label, value)
    return float(max(value, 0.0))


# ---------------------------------------------------------------------------
# Self-interference statistics


def rician_pdf(w, k_factor, sigma_02):
    """Density of the Rician power gain ``|h0|^2`` (non-central chi-square, 2 dof)."""
    w = np.asarray(w, dtype=float)
    arg = 2.0 * np.sqrt(k_factor * (k_factor + 1.0) * np.maximum(w, 0.0) / sigma_02)
    scaled_i0 = np.asarray(bessel_i0e(arg))
    out = (k_factor + 1.0) / sigma_02 * np.exp(-k_factor - (k_factor + 1.0) * w / sigma_02 + arg) * scaled_i0
    return np.where(w >= 0, out, 0.0)


def rician_mgf(q, k_factor, sigma_02):
    """``E[exp(-q |h0|^2)]`` for ``q > -(1+K)/sigma_02``."""
    q = np.asarray(q, dtype=float)
    den = 1.0 + k_factor + q * sigma_02
    return (1.0 + k_factor) / den * np.exp(-k_factor * q * sigma_02 / den)


def rician_support(k_factor, sigma_02):
    """Point beyond which the Rician density carries less than ~1e-18 of its mass."""
    return sigma_02 * (np.sqrt(k_factor) + 6.5) ** 2 / (k_factor + 1.0)


# ---------------------------------------------------------------------------
# Maximum relay


def _max_relay_coefficients(params, ps, mu, w):
    p = params
    a = p.loss_src * ps * p.d1 ** p.m * p.d2 ** p.m * p.sigma_d2 * p.gamma_th * (1.0 + mu * p.ant_gain_relay * w)
    b = p.d1 ** (2 * p.m) * p.d2 ** p.m * p.sigma_r2 * p.sigma_d2 * p.gamma_th
    c = p.loss_src ** 2 * p.loss_relay * ps ** 2 * mu * (1.0 - mu * p.gamma_th * p.ant_gain_relay * w)
    d = p.loss_src * p.loss_relay * ps * p.d1 ** p.m * p.sigma_r2 * mu * p.gamma_th
    return a, b, c, d


def outage_max(params, ps, alpha, method=Method.EXACT_INTEGRAL):
    """Outage probability of the maximum relay at a fixed TS factor.

    The exact form integrates, over the self-interference gain ``w`` and the
    first-hop gain, the probability that the second hop is strong enough.
    The high-SNR form replaces the inner integral with ``rho K1(rho)``.
    Above ``w = 1/(mu gamma_th A_r)`` the SINR can never reach the threshold.

    Parameters
    ----------
    params : SystemParams
    ps : float
        Source power in watts.
    alpha : float
        TS factor in (0, 1).
    method : Method
        ``EXACT_INTEGRAL`` (default) or ``HIGH_SNR_APPROX``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if ps <= 0:
        raise DomainError("source power must be positive")
    p = params
    method = Method(method)
    if p.gamma_th == 0:
        return AnalyticResult(0.0, method, 0.0)
    mu = alpha * p.eta / (1.0 - alpha)
    w_cut = 1.0 / (mu * p.gamma_th * p.ant_gain_relay)
    w_hi = min(w_cut, rician_support(p.rician_k, p.sigma_02))
    lam1, lam2 = p.lambda1, p.lambda2
    inner_err = [0.0]

    if method is Method.HIGH_SNR_APPROX:
        def outer(w):
            a, _b, c, d = _max_relay_coefficients(p, ps, mu, w)
            ok = c > 0
            c_safe = np.where(ok, c, 1.0)
            rho = np.sqrt(4.0 * a / (c_safe * lam1 * lam2))
            val = rho * np.asarray(bessel_ke(1, rho)) * np.exp(-rho - d / (c_safe * lam1))
            return np.where(ok, rician_pdf(w, p.rician_k, p.sigma_02) * val, 0.0)
    elif method is Method.EXACT_INTEGRAL:
        def outer(w):
            shape = np.shape(w)
            wf = np.ravel(w)
            a, b, c, d = _max_relay_coefficients(p, ps, mu, wf)
            ok = c > 0
            c_safe = np.where(ok, c, 1.0)
            z0 = d / c_safe
            big_a = a / (c_safe * lam2)
            big_b = b / (c_safe * lam2)

            # first-hop gain z = z0 + y; exponent -y/lam1 - (a z + b)/(c z y lam2)
            def inner(y, m):
                z = z0[m] + y
                with np.errstate(divide="ignore", over="ignore"):
                    expo = -y / lam1 - big_a[m] / y - big_b[m] / (z * y)
                return np.where(y > 0, np.exp(expo), 0.0)

            scale = np.maximum(np.sqrt(big_a * lam1), 1e-6 * lam1)
            res = integrate_family(inner, np.zeros_like(wf), np.inf, abs_tol=INNER_ABS_TOL,
                                   rel_tol=INNER_REL_TOL, scale=scale)
            inner_err[0] = max(inner_err[0], float(np.max(res.abs_error_estimate, initial=0.0)))
            val = np.exp(-z0 / lam1) * res.value / lam1
            out = np.where(ok, rician_pdf(wf, p.rician_k, p.sigma_02) * val, 0.0)
            return out.reshape(shape)
    else:
        raise DomainError(f"unsupported method {method}")

    res = integrate(outer, 0.0, w_hi, abs_tol=OUTER_ABS_TOL, rel_tol=OUTER_REL_TOL)
    value = _clamp_probability(1.0 - res.value, "maximum-relay outage")
    return AnalyticResult(value, method, res.abs_error_estimate + inner_err[0])


def _log1p_product_exponential(y):
    """``E[ln(1 + y X)]`` for ``X`` the product of two unit-mean exponentials.

    Integrates ``ln(1 + y v^2) 4 v K0(2 v)``, the density of ``X`` after the
    substitution ``X = v^2``.  ``y`` is an array; returns the same shape.
    """
    y = np.ravel(np.asarray(y, dtype=float))

    def f(v, m):
        vv = np.maximum(v, 1e-300)
        k0 = np.asarray(bessel_ke(0, 2.0 * vv)) * np.exp(-2.0 * vv)
        return np.log1p(y[m] * vv * vv) * 4.0 * vv * k0

    res = integrate_family(f, np.zeros_like(y), np.inf, abs_tol=INNER_ABS_TOL,
                           rel_tol=INNER_REL_TOL, scale=1.0)
    return res.value, res.abs_error_estimate


def _capacity_max_coefficients(params, ps, mu):
    p = params
    base = p.loss_src * p.loss_relay * ps * p.lambda1 * p.lambda2 / (p.d1 ** p.m * p.d2 ** p.m * p.sigma_d2)
    # first expectation: argument base*mu*(1 + mu A_r w); second: base*mu^2*A_r*w
    return base * mu, base * mu * mu * p.ant_gain_relay


def ergodic_capacity_max(params, ps, alpha, method=Method.EXACT_INTEGRAL):
    """Ergodic capacity of the maximum relay in the self-interference dominated regime.

    ``C = E[log2(1 + mu t (1 + mu A_r w))] - E[log2(1 + mu^2 t A_r w)]`` where
    ``t`` is the two-hop SNR and ``w = |h0|^2``.

    ``method=EXACT_INTEGRAL`` evaluates both expectations by nested quadrature.
    ``method=SERIES`` evaluates the inner expectations as Meijer-G functions
    and the second outer expectation as its Rician power series; if the series
    needs more than 500 terms the quadrature value is returned instead, with
    ``method`` reporting ``EXACT_INTEGRAL``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if ps <= 0:
        raise DomainError("source power must be positive")
    method = Method(method)
    p = params
    mu = alpha * p.eta / (1.0 - alpha)
    c1, c2 = _capacity_max_coefficients(p, ps, mu)
    w_hi = rician_support(p.rician_k, p.sigma_02)

    if method is Method.SERIES:
        try:
            return _ergodic_capacity_max_series(p, c1, c2, mu, w_hi)
        except ConvergenceError as exc:
            log.warning("Meijer-G series did not converge (%s); using quadrature", exc)
    elif method is not Method.EXACT_INTEGRAL:
        raise DomainError(f"unsupported method {method}")

    inner_err = [0.0]

    def outer(w):
        shape = np.shape(w)
        wf = np.ravel(w)
        first, e1 = _log1p_product_exponential(c1 * (1.0 + mu * p.ant_gain_relay * wf))
        second, e2 = _log1p_product_exponential(c2 * wf)
        inner_err[0] = max(inner_err[0], float(np.max(e1 + e2, initial=0.0)))
        return (rician_pdf(wf, p.rician_k, p.sigma_02) * (first - second)).reshape(shape)

    res = integrate(outer, 0.0, w_hi, abs_tol=OUTER_ABS_TOL, rel_tol=OUTER_REL_TOL)
    value = _clamp_nonnegative(res.value / LN2, "maximum-relay capacity")
    return AnalyticResult(value, Method.EXACT_INTEGRAL, (res.abs_error_estimate + inner_err[0]) / LN2)


def _ergodic_capacity_max_series(p, c1, c2, mu, w_hi):
    import mpmath

    k = p.rician_k

    def meijer_log(y):
        return float(mpmath.meijerg([[0, 0, 1, 1], []], [[1], [0]], y))

    meijer_vec = np.vectorize(meijer_log, otypes=[float])

    first = integrate(
        lambda w: rician_pdf(w, k, p.sigma_02) * meijer_vec(c1 * (1.0 + mu * p.ant_gain_relay * w)),
        0.0, w_hi, abs_tol=OUTER_ABS_TOL, rel_tol=OUTER_REL_TOL,
    )

    q = 1.0 / (c2 * p.sigma_02)
    total = mpmath.mpf(0)
    log_coef = mpmath.mpf(0)  # log of (q K (K+1))^{n+1} / (n!)^2
    base = mpmath.mpf(q * k * (k + 1.0))
    arg = mpmath.mpf(q * (k + 1.0))
    converged = False
    n_terms = 0
    for n in range(SERIES_MAX_TERMS):
        log_coef = mpmath.log(base) * (n + 1) - 2 * mpmath.loggamma(n + 1)
        g = mpmath.meijerg([[-1 - n], []], [[0, -1 - n, -1 - n, -n], []], arg)
        term = mpmath.exp(log_coef) * g
        total += term
        n_terms = n + 1
        if n > 0 and abs(term) < SERIES_REL_STOP * abs(total):
            converged = True
            break
    if not converged:
        raise ConvergenceError(f"series not converged after {SERIES_MAX_TERMS} terms",
                               estimate=float(total))
    second = float(mpmath.exp(-k) / k * total)
    value = (first.value - second) / LN2
    log.debug("Meijer-G series converged in %d terms", n_terms)
    return AnalyticResult(_clamp_nonnegative(value, "maximum-relay capacity (series)"), Method.SERIES,
                          first.abs_error_estimate / LN2 + SERIES_REL_STOP * abs(second))


# ---------------------------------------------------------------------------
# SINR relay


def _first_hop_ratio(params, ps):
    """Factor turning ``|h1|^2`` into the first-hop SNR."""
    p = params
    return p.loss_src * ps / (p.d1 ** p.m * p.sigma_r2)


def _relay_noise_ratio(params):
    p = params
    return p.loss_relay * p.sigma_r2 / (p.d2 ** p.m * p.sigma_d2)


def outage_sinr(params, ps):
    """Outage probability of the SINR relay.

    Conditioning on ``|h1|^2 = z`` the outage event is an exponential tail in
    ``|h2|^2`` whose rate is linear in ``|h0|^2``, so averaging over the
    self-interference gives the Rician moment generating function.
    """
    if ps <= 0:
        raise DomainError("source power must be positive")
    p = params
    if p.gamma_th == 0:
        return AnalyticResult(0.0, Method.EXACT_INTEGRAL, 0.0)
    g = p.gamma_th
    to_snr = _first_hop_ratio(p, ps)
    k_ratio = _relay_noise_ratio(p)
    z_th = g / to_snr

    def integrand(y):
        s = (z_th + y) * to_snr
        with np.errstate(divide="ignore"):
            rho = g * (g + s * (1.0 + 2.0 * g) + 2.0 * np.sqrt(g * (1.0 + g) * s * (1.0 + s))) / (
                k_ratio * p.lambda2 * (s - g) ** 2)
        mgf = np.where(y > 0, rician_mgf(p.ant_gain_relay * np.where(y > 0, rho, 0.0), p.rician_k, p.sigma_02), 0.0)
        return np.exp(-(z_th + y) / p.lambda1) * mgf

    res = integrate(integrand, 0.0, np.inf, abs_tol=INNER_ABS_TOL, rel_tol=INNER_REL_TOL, scale=p.lambda1)
    value = _clamp_probability(1.0 - res.value / p.lambda1, "SINR-relay outage")
    return AnalyticResult(value, Method.EXACT_INTEGRAL, res.abs_error_estimate / p.lambda1)


def _sinr_capacity_terms(params, ps):
    p = params
    expo_rate = 2.0 * p.d1 ** p.m * p.sigma_r2 / (p.loss_src * ps * p.lambda1)
    v_coef = p.ant_gain_relay * p.d1 ** p.m * p.d2 ** p.m * p.sigma_d2 / (
        p.loss_src * p.loss_relay * ps * p.lambda1 * p.lambda2)
    return expo_rate, v_coef


def sinr_density(params, ps, gamma, w):
    """High-SNR joint density of the SINR-relay SINR ``gamma`` and ``|h0|^2 = w``
    (without the Rician factor)."""
    expo_rate, v_coef = _sinr_capacity_terms(params, ps)
    gamma = np.asarray(gamma, dtype=float)
    w = np.asarray(w, dtype=float)
    root = np.sqrt(gamma * (gamma + 1.0))
    v = 2.0 * np.sqrt(v_coef * w * gamma * (2.0 * gamma + 1.0 + 2.0 * root))
    v_safe = np.maximum(v, 1e-300)
    k1e = np.asarray(bessel_ke(1, v_safe))
    k0e = np.asarray(bessel_ke(0, v_safe))
    # v*K1(v) -> 1 and v^2 K0(v) -> 0 as v -> 0
    vk1 = v_safe * k1e * np.exp(-v_safe)
    with np.errstate(invalid="ignore", divide="ignore"):
        dv_ratio = v_safe * v_safe * k0e * np.exp(-v_safe) / (2.0 * gamma * (gamma + 1.0 - root))
    dv_ratio = np.where(v > 0, dv_ratio, 0.0)
    return np.exp(-expo_rate * gamma) * (expo_rate * vk1 + dv_ratio)


def sinr_ccdf(params, ps, gamma, w):
    """High-SNR ``P(gamma_sinr > gamma | |h0|^2 = w)``; the density above is its negative derivative."""
    expo_rate, v_coef = _sinr_capacity_terms(params, ps)
    gamma = np.asarray(gamma, dtype=float)
    root = np.sqrt(gamma * (gamma + 1.0))
    v = 2.0 * np.sqrt(v_coef * np.asarray(w, dtype=float) * gamma * (2.0 * gamma + 1.0 + 2.0 * root))
    v_safe = np.maximum(v, 1e-300)
    vk1 = np.where(v > 0, v_safe * np.asarray(bessel_ke(1, v_safe)) * np.exp(-v_safe), 1.0)
    return np.exp(-expo_rate * gamma) * vk1


_W_CUTS = np.array([1.0, 10.0, 100.0, 1e3, 1e4])


def ergodic_capacity_sinr(params, ps, by_parts=False):
    """Ergodic capacity of the SINR relay from its high-SNR density.

    The default integrates ``density * log2(1 + gamma)`` over ``gamma`` and the
    self-interference gain.  ``by_parts=True`` integrates the survival
    function against ``1 / (1 + gamma)`` instead; the two agree up to
    quadrature error and serve as mutual checks.
    """
    if ps <= 0:
        raise DomainError("source power must be positive")
    p = params
    expo_rate, v_coef = _sinr_capacity_terms(p, ps)
    w_hi = rician_support(p.rician_k, p.sigma_02)
    inner_err = [0.0]

    def outer(gamma):
        shape = np.shape(gamma)
        gf = np.ravel(gamma)
        # At large gamma the w-integrand lives in a thin layer near w = 0 and
        # decays like exp(-v) beyond it; geometric cuts in units of the point
        # where v = 1 keep every piece resolvable.
        w_one = 1.0 / (4.0 * v_coef * np.maximum(gf, 1e-300) * (2.0 * gf + 1.0 + 2.0 * np.sqrt(gf * (gf + 1.0))))
        cuts = np.minimum(w_one[None, :] * _W_CUTS[:, None], w_hi)
        lo = np.concatenate([np.zeros_like(gf), cuts.ravel()])
        hi = np.concatenate([cuts.ravel(), np.full_like(gf, w_hi)])
        n_pieces = len(_W_CUTS) + 1
        gm = np.tile(gf, n_pieces)
        kernel = sinr_ccdf if by_parts else sinr_density

        def inner(w, m):
            return rician_pdf(w, p.rician_k, p.sigma_02) * kernel(p, ps, gm[m], w)

        # densities can be far below any fixed absolute tolerance at large gamma
        res = integrate_family(inner, lo, hi, abs_tol=1e-300, rel_tol=INNER_REL_TOL)
        inner_err[0] = max(inner_err[0], float(np.max(res.abs_error_estimate, initial=0.0)))
        value = res.value.reshape(n_pieces, -1).sum(axis=0)
        weight = 1.0 / ((1.0 + gf) * LN2) if by_parts else np.log2(1.0 + gf)
        return (value * weight).reshape(shape)

    # SINR scale: the smaller of the noise-limited decay 1/expo_rate and the
    # value where the Bessel argument reaches one at the mean interference
    scale = min(1.0 / expo_rate, 0.25 / np.sqrt(v_coef * p.sigma_02))
    res = integrate(outer, 0.0, np.inf, abs_tol=OUTER_ABS_TOL, rel_tol=OUTER_REL_TOL,
                    scale=scale, breakpoints=[scale])
    value = _clamp_nonnegative(res.value, "SINR-relay capacity")
    return AnalyticResult(value, Method.HIGH_SNR_APPROX, res.abs_error_estimate + inner_err[0])


# ---------------------------------------------------------------------------
# Target relay


def outage_target(params, ps, gamma_hat):
    """Outage probability of the target relay for SINR target ``gamma_hat``.

    Blocks with first-hop SNR at or below ``gamma_hat`` cannot harvest enough
    energy and count as outages.  The lower integration limit is the larger
    of that feasibility point and the point where the outage threshold
    becomes reachable.
    """
    if ps <= 0:
        raise DomainError("source power must be positive")
    if gamma_hat <= 0:
        raise DomainError("gamma_hat must be positive")
    p = params
    g = p.gamma_th
    gh = float(gamma_hat)
    if g == 0:
        return AnalyticResult(0.0, Method.EXACT_INTEGRAL, 0.0)
    reach = gh + 2.0 * gh * g - g * g
    if reach <= 0:
        return AnalyticResult(1.0, Method.CLOSED_FORM, 0.0)
    to_snr = _first_hop_ratio(p, ps)
    noise_r = p.d1 ** p.m * p.sigma_r2
    z_reach = noise_r * g * g * (gh + 1.0) / (p.loss_src * ps * reach)
    z_feasible = gh / to_snr
    z_lo = max(z_reach, z_feasible)
    sig = p.ant_gain_relay * p.sigma_02
    k = p.rician_k

    def integrand(y):
        z = z_lo + y
        zz = np.maximum(z, 1e-300)
        omega = np.sqrt((gh + 1.0) * (noise_r + p.loss_src * ps * zz) / (p.loss_src * ps * gh * zz))
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = p.d1 ** p.m * p.d2 ** p.m * g * p.sigma_d2 * omega / (
                p.loss_relay * p.lambda2 * ((omega - 1.0) * g - 1.0)
                * ((omega - 1.0) * p.loss_src * ps * zz - noise_r))
        # rho >= 0 marks channels whose SINR stays below threshold for any h2
        ok = (y > 0) & np.isfinite(rho) & (rho < 0) & (zz * to_snr > gh)
        q = np.where(ok, sig * rho, 0.0)
        den = 1.0 + k - q
        if np.any(den[ok] <= 0):
            raise SingularIntegrandError("target-relay integrand crosses its pole")
        val = (1.0 + k) / den * np.exp(-z / p.lambda1 + k * q / den)
        return np.where(ok, val, 0.0)

    res = integrate(integrand, 0.0, np.inf, abs_tol=INNER_ABS_TOL, rel_tol=INNER_REL_TOL, scale=p.lambda1)
    value = _clamp_probability(1.0 - res.value / p.lambda1, "target-relay outage")
    return AnalyticResult(value, Method.EXACT_INTEGRAL, res.abs_error_estimate / p.lambda1)


# ---------------------------------------------------------------------------
# Direct link and combining


def direct_link(params, ps):
    """Outage probability and ergodic capacity of the source-destination link alone."""
    if ps <= 0:
        raise DomainError("source power must be positive")
    p = params
    x = p.d3 ** p.m * p.sigma_d2 / (p.loss_src * ps * p.lambda3)
    outage = float(-np.expm1(-x * p.gamma_th))
    capacity = float(upper_incomplete_gamma_zero(x, scaled=True)) / LN2
    return (AnalyticResult(outage, Method.CLOSED_FORM, 0.0),
            AnalyticResult(capacity, Method.CLOSED_FORM, 0.0))


def mrc_outage_upper_bound(params, ps, scheme_outage):
    """Product bound on the combined-link outage: direct-link outage times relay outage."""
    scheme_outage = float(scheme_outage)
    if not 0.0 <= scheme_outage <= 1.0:
        raise DomainError("relay outage must lie in [0, 1]")
    direct, _ = direct_link(params, ps)
    return direct.value * scheme_outage


# ---------------------------------------------------------------------------
# Throughput and energy efficiency


def statistical_throughput(params, mode, alpha, outage=None, capacity=None):
    """Average throughput for a TS factor fixed from statistics.

    Delay-limited: ``(1 - alpha)(1 - P_out) R``.  Delay-tolerant:
    ``(1 - alpha) C``.
    """
    mode = Mode(mode)
    if not 0.0 < alpha <= 1.0:
        raise DomainError("alpha must lie in (0, 1]")
    if mode is Mode.DELAY_LIMITED:
        if outage is None:
            raise ContractError("delay-limited throughput needs an outage probability")
        return (1.0 - alpha) * (1.0 - outage) * params.rate_bps_hz
    if mode is Mode.DELAY_TOLERANT:
        if capacity is None:
            raise ContractError("delay-tolerant throughput needs an ergodic capacity")
        return (1.0 - alpha) * capacity
    raise ContractError("instantaneous throughput depends on per-block CSI; use block_throughput")


def mrc_delay_limited_lower_bound(params, alpha, direct_outage, combined_outage_bound):
    """``alpha (1 - P_sd) R + (1 - alpha)(1 - P_ub) R`` for a statistical TS factor."""
    r = params.rate_bps_hz
    return alpha * (1.0 - direct_outage) * r + (1.0 - alpha) * (1.0 - combined_outage_bound) * r


def block_throughput(params, mode, decision, snrs=None, mrc=False):
    """Per-block throughput whose sample mean estimates the average throughput.

    Delay-limited blocks earn ``(1 - alpha) R`` when the SINR clears the
    threshold, delay-tolerant blocks ``(1 - alpha) log2(1 + gamma)``.  With
    ``mrc=True`` the harvesting phase also carries direct-link data and the
    relaying phase uses the combined SINR.  Infeasible blocks relay nothing.
    """
    mode = Mode(mode)
    p = params
    feasible = np.asarray(decision.feasible)
    gamma = np.where(feasible, decision.esinr, 0.0)
    alpha = np.where(feasible, decision.alpha, 1.0)
    if mrc:
        if snrs is None:
            raise ContractError("combined-link throughput needs the direct-link SNR")
        gsd = np.asarray(snrs.gamma_sd, dtype=float)
        combined = gsd + gamma
        if mode is Mode.DELAY_LIMITED:
            return (alpha * (gsd > p.gamma_th) + (1.0 - alpha) * (combined > p.gamma_th)) * p.rate_bps_hz
        return alpha * np.log2(1.0 + gsd) + (1.0 - alpha) * np.log2(1.0 + combined)
    if mode is Mode.DELAY_LIMITED:
        return np.where(feasible & (gamma > p.gamma_th), (1.0 - alpha) * p.rate_bps_hz, 0.0)
    return np.where(feasible, (1.0 - alpha) * np.log2(1.0 + gamma), 0.0)


def throughput_expressions(params, mode, scheme, alpha=None, outage=None, capacity=None,
                           decision=None, snrs=None, mrc=False):
    """Average throughput for any scheme and mode.

    The maximum relay uses a statistical TS factor and closed-form inputs
    (``outage`` or ``capacity``).  The SINR and target relays choose their TS
    factor per block, so they take a ``decision`` array and average the
    per-block throughput.  Passing a fixed ``alpha`` to those schemes, or
    omitting it for the maximum relay without a decision, raises
    :class:`ContractError`.
    """
    scheme = Scheme(scheme)
    mode = Mode(mode)
    if scheme is not Scheme.MAXIMUM and alpha is not None:
        raise ContractError(f"the {scheme.value} relay sets its TS factor from instantaneous CSI")
    if decision is not None:
        return float(np.mean(block_throughput(params, mode, decision, snrs, mrc)))
    if scheme is not Scheme.MAXIMUM:
        raise ContractError(f"the {scheme.value} relay needs per-block decisions")
    if alpha is None:
        raise ContractError("the maximum relay needs a statistical TS factor")
    return statistical_throughput(params, mode, alpha, outage, capacity)


def energy_efficiency(throughput, params, ps):
    """Bits per joule: ``B * throughput / ps``."""
    if np.any(np.asarray(ps) <= 0):
        raise DomainError("source power must be positive")
    return params.bandwidth_hz * np.asarray(throughput) / ps
