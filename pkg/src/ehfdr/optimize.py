"""TS-factor search, Dinkelbach iteration over source power, and parameter sweeps."""

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import DomainError, EhfdrError
from .parallel import ordered_map

ALPHA_MIN = 1e-4
ALPHA_MAX = 1.0 - 1e-4

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_BISECTION_GUARD = 4


@dataclass(frozen=True)
class OptResult:
    """Outcome of a one-dimensional maximisation.

    ``boundary`` marks a maximiser pinned at the edge of the search domain;
    ``fallback`` marks a bisection that detected a non-unimodal gradient and
    switched to golden-section search.
    """

    argmax: float
    value: float
    iterations: int
    converged: bool
    tolerance: float
    method: str = "bisection"
    boundary: bool = False
    fallback: bool = False
    history: tuple = field(default=(), compare=False)


def golden_section(objective, lo, hi, tol=1e-8, max_iter=500, log_scale=False):
    """Maximise a unimodal ``objective`` on ``[lo, hi]`` by golden-section search.

    With ``log_scale=True`` the search runs over ``log(x)`` (``lo > 0``), so
    ``tol`` becomes a relative bracket width.
    """
    if not hi > lo:
        raise DomainError("golden section needs lo < hi")
    if log_scale:
        if lo <= 0:
            raise DomainError("log-scale search needs a positive lower bound")
        f = lambda u: objective(math.exp(u))
        a, b = math.log(lo), math.log(hi)
    else:
        f = objective
        a, b = float(lo), float(hi)
    a0, b0 = a, b
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    it = 0
    while b - a > tol and it < max_iter:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
        it += 1
    best_u, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    # the interior search cannot land exactly on an endpoint; check them
    for edge in (a0, b0):
        fe = f(edge)
        if fe > best_f:
            best_u, best_f = edge, fe
    boundary = best_u in (a0, b0)
    argmax = math.exp(best_u) if log_scale else best_u
    return OptResult(argmax, float(best_f), it, b - a <= tol, tol, "golden_section", boundary)


def _gradient_sign(objective, alpha, step):
    return np.sign(objective(alpha + step) - objective(alpha - step))


def bisect_alpha(objective, tol=1e-6, lo=ALPHA_MIN, hi=ALPHA_MAX, probe_points=17):
    """Maximise a unimodal function of the TS factor by derivative-sign bisection.

    The gradient is a central difference.  Before bisecting, its sign is
    probed on a coarse grid; a sign pattern other than ``+ ... + - ... -``
    means the objective is not unimodal and golden-section search is used
    instead (``fallback=True``).

    Parameters
    ----------
    objective : callable
        Scalar function of ``alpha``.
    tol : float
        Final bracket width.
    """
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    step = min(tol / 8.0, 1e-7)
    probes = np.linspace(lo + step, hi - step, probe_points)
    signs = np.array([_gradient_sign(objective, a, step) for a in probes])
    nonzero = signs[signs != 0]
    if nonzero.size and np.any(np.diff(nonzero) > 0):
        res = golden_section(objective, lo, hi, tol)
        return OptResult(res.argmax, res.value, res.iterations, res.converged, tol,
                         "golden_section", res.boundary, True)

    a, b = float(lo), float(hi)
    budget = math.ceil(math.log2((hi - lo) / tol)) + _BISECTION_GUARD
    it = 0
    while b - a > tol and it < budget:
        mid = 0.5 * (a + b)
        s = _gradient_sign(objective, mid, min(step, 0.5 * (mid - lo), 0.5 * (hi - mid)))
        if s > 0:
            a = mid
        elif s < 0:
            b = mid
        else:
            a = b = mid
        it += 1
    argmax = 0.5 * (a + b)
    value = float(objective(argmax))
    boundary = (argmax - lo) <= tol or (hi - argmax) <= tol
    return OptResult(argmax, value, it, b - a <= tol, tol, "bisection", boundary)


def bisect_alpha_batch(objective, n, tol=1e-6, lo=ALPHA_MIN, hi=ALPHA_MAX):
    """Derivative-sign bisection for ``n`` independent objectives at once.

    ``objective(alpha)`` maps an array of ``n`` TS factors to ``n`` values,
    one objective per entry.  Returns the array of maximisers.
    """
    step = min(tol / 8.0, 1e-7)
    a = np.full(n, float(lo))
    b = np.full(n, float(hi))
    budget = math.ceil(math.log2((hi - lo) / tol)) + _BISECTION_GUARD
    for _ in range(budget):
        if np.all(b - a <= tol):
            break
        mid = 0.5 * (a + b)
        h = np.minimum(step, 0.5 * np.minimum(mid - lo, hi - mid))
        s = np.sign(objective(mid + h) - objective(mid - h))
        a = np.where(s > 0, mid, a)
        b = np.where(s < 0, mid, b)
        a = np.where(s == 0, mid, a)
        b = np.where(s == 0, mid, b)
    return 0.5 * (a + b)


def _bracketed_log_max(objective, lo, hi, rel_tol, probe_points):
    """Golden section in log scale around the best point of a coarse log grid.

    ``N(p) - lambda p`` tends to zero as ``p -> 0`` and may dip below zero
    before its peak, so a plain golden section over the whole range can
    settle on the flat low-power end.
    """
    grid = np.geomspace(lo, hi, probe_points)
    values = [objective(float(q)) for q in grid]
    i = int(np.argmax(values))
    left, right = grid[max(i - 1, 0)], grid[min(i + 1, probe_points - 1)]
    res = golden_section(objective, float(left), float(right), tol=rel_tol, log_scale=True)
    if values[i] > res.value:
        return replace(res, argmax=float(grid[i]), value=float(values[i]))
    return res


def dinkelbach_ps(numerator, ps_max, tol=1e-12, ps_min=None, bandwidth=1.0, circuit_power=0.0,
                  max_iter=100, inner_rel_tol=1e-7, probe_points=121):
    """Maximise ``bandwidth * N(ps) / (ps + circuit_power)`` over ``(0, ps_max]``.

    Dinkelbach iteration: ``lambda_k = N(p_k) / (p_k + pc)``, then
    ``p_{k+1} = argmax N(p) - lambda_k (p + pc)`` by golden-section search in
    log power (relative bracket ``inner_rel_tol``), started from the best of
    ``probe_points`` log-spaced powers.  Stops once the inner
    maximum is within ``tol`` of zero.  ``ps_min`` clips the domain away from
    zero (default ``1e-9 * ps_max``).

    The returned ``history`` holds the ``lambda_k`` sequence.  ``value`` is
    the energy efficiency at ``argmax``.
    """
    if ps_max <= 0 or tol <= 0:
        raise DomainError("ps_max and tol must be positive")
    ps_min = 1e-9 * ps_max if ps_min is None else float(ps_min)
    if not 0 < ps_min < ps_max:
        raise DomainError("need 0 < ps_min < ps_max")
    denom = lambda p: p + circuit_power

    p = ps_max
    lam = numerator(p) / denom(p)
    history = [lam]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        inner = _bracketed_log_max(lambda q: numerator(q) - lam * denom(q), ps_min, ps_max,
                                   inner_rel_tol, probe_points)
        if inner.value <= tol:
            # no power beats the current ratio by more than tol
            converged = True
            break
        p = inner.argmax
        lam = numerator(p) / denom(p)
        history.append(lam)
    rel = 1e-6
    boundary = p <= ps_min * (1.0 + rel) or p >= ps_max * (1.0 - rel)
    value = bandwidth * numerator(p) / denom(p)
    return OptResult(p, float(value), it, converged, tol, "dinkelbach", boundary, False, tuple(history))


class SweepAxis(str, Enum):
    PS = "ps"
    SIGMA02 = "sigma02"
    GAMMA_HAT = "gamma_hat"
    PLACEMENT = "placement"
    KAPPA = "kappa"


@dataclass(frozen=True)
class SweepPoint:
    """Resolved inputs of one grid point."""

    axis: SweepAxis
    axis_value: float
    params: object
    ps: float
    gamma_hat: float = None
    kappa: float = 0.0


@dataclass(frozen=True)
class SweepRow:
    point: SweepPoint
    result: object = None
    error: str = None

    @property
    def ok(self):
        return self.error is None


def sweep_point(axis, value, params, ps, gamma_hat=None, kappa=0.0):
    """Apply one axis value to the template inputs.

    Placement values are ratios ``r = d1/d3`` with ``d1 + d2 = d3``.
    """
    axis = SweepAxis(axis)
    value = float(value)
    if axis is SweepAxis.PS:
        ps = value
    elif axis is SweepAxis.SIGMA02:
        params = params.replace(sigma_02=value)
    elif axis is SweepAxis.GAMMA_HAT:
        gamma_hat = value
    elif axis is SweepAxis.PLACEMENT:
        if not 0.0 < value < 1.0:
            raise DomainError("placement ratio must lie in (0, 1)")
        params = params.replace(d1=value * params.d3, d2=(1.0 - value) * params.d3)
    else:
        kappa = value
    return SweepPoint(axis, value, params, ps, gamma_hat, kappa)


def sweep(axis, grid, evaluate, params, ps, gamma_hat=None, kappa=0.0, workers=None):
    """Evaluate ``evaluate(point)`` at every grid value.

    Points are independent and may run concurrently; rows keep grid order.
    A point that raises an artifact error is recorded with its message and
    the sweep carries on.
    """
    grid = list(grid)
    if not grid:
        raise DomainError("sweep grid must not be empty")
    diffs = np.diff(np.asarray(grid, dtype=float))
    if diffs.size and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise DomainError("sweep grid must be strictly monotone")

    def run(value):
        try:
            point = sweep_point(axis, value, params, ps, gamma_hat, kappa)
        except EhfdrError as exc:
            return SweepRow(SweepPoint(SweepAxis(axis), float(value), params, ps, gamma_hat, kappa),
                            error=str(exc))
        try:
            return SweepRow(point, evaluate(point))
        except EhfdrError as exc:
            return SweepRow(point, error=f"{type(exc).__name__}: {exc}")

    return ordered_map(run, grid, workers)
