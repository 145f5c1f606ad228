"""Block-fading Monte Carlo estimates of every link metric.

Blocks are generated in fixed-size chunks from counter-based streams, so
block ``i`` sees the same channel no matter how many blocks are requested
or how many worker threads run.  Each chunk reduces to ``(count, mean, M2)``
and chunks are merged in index order, which makes the estimate bit-identical
across worker counts.

CSI errors (``kappa > 0``): relay decisions are taken on the perturbed
channel estimate, while the realised SINR is evaluated on the true channel.
The chosen gain is clipped to what the true harvested power can sustain.
"""

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .analysis import Mode, block_throughput
from .channel import ChannelSample, LinkSNRs, link_snrs
from .errors import ContractError, DomainError
from .numerics.random import (
    PURPOSE_CSI_ERROR,
    RandomStream,
    chunk_layout,
    complex_normal_chunk,
    sample_channel_chunk,
)
from .optimize import bisect_alpha, bisect_alpha_batch
from .parallel import ordered_map
from .relay import (
    RelayDecision,
    Scheme,
    decide,
    esinr,
    max_relay,
    max_relay_gain,
)

RARE_EVENT_LEVEL = 1e-5


class Metric(str, Enum):
    OUTAGE = "outage"
    ERGODIC_CAPACITY = "ergodic_capacity"
    THROUGHPUT_DL = "throughput_dl"
    THROUGHPUT_DT = "throughput_dt"
    THROUGHPUT_INST = "throughput_inst"
    EE = "ee"
    MRC_OUTAGE = "mrc_outage"
    MRC_THROUGHPUT_DL = "mrc_throughput_dl"
    MRC_THROUGHPUT_DT = "mrc_throughput_dt"


_MRC_METRICS = {Metric.MRC_OUTAGE, Metric.MRC_THROUGHPUT_DL, Metric.MRC_THROUGHPUT_DT}
_TO_MRC = {
    Metric.OUTAGE: Metric.MRC_OUTAGE,
    Metric.THROUGHPUT_DL: Metric.MRC_THROUGHPUT_DL,
    Metric.THROUGHPUT_DT: Metric.MRC_THROUGHPUT_DT,
}


@dataclass(frozen=True)
class MetricEstimate:
    """Sample mean of a per-block metric.

    ``stderr`` is the sample standard deviation over ``sqrt(n)``.  ``rare``
    flags an outage estimate below ``1e-5``, where ``n`` is probably too
    small for the estimate to be trusted.
    """

    value: float
    stderr: float
    n: int
    metric: Metric
    rare: bool = False
    label: str = ""


@dataclass(frozen=True)
class RunSpec:
    """One Monte Carlo experiment.

    ``alpha`` is the TS-factor policy: a number in (0, 1) is a statistical TS
    factor (maximum relay only); ``None`` lets the scheme pick the TS factor
    from instantaneous CSI.  The maximum relay accepts ``None`` only for the
    instantaneous-throughput metrics, where it bisects its TS factor per block.  ``mode`` selects the
    throughput definition behind the ``EE`` metric.  ``ps`` is in watts.
    """

    params: object
    ps: float
    scheme: Scheme
    metric: Metric
    n_blocks: int
    seed: int
    mode: Mode = Mode.INSTANTANEOUS
    kappa: float = 0.0
    gamma_hat: float = None
    alpha: float = None
    stream_id: int = 0

    @property
    def per_block_alpha(self):
        """Maximum relay with its TS factor bisected per block (instantaneous metrics only)."""
        instantaneous = self.metric is Metric.THROUGHPUT_INST or (
            self.metric is Metric.EE and self.mode is Mode.INSTANTANEOUS
        )
        return self.scheme is Scheme.MAXIMUM and self.alpha is None and instantaneous

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "metric", Metric(self.metric))
        object.__setattr__(self, "mode", Mode(self.mode))
        if int(self.n_blocks) < 1:
            raise DomainError("n_blocks must be at least 1")
        if not self.ps > 0:
            raise DomainError("source power must be positive")
        if self.kappa < 0:
            raise DomainError("kappa must be non-negative")
        if self.scheme is Scheme.MAXIMUM:
            if self.alpha is None:
                if not self.per_block_alpha:
                    raise ContractError(
                        "the maximum relay needs a statistical TS factor outside the instantaneous mode"
                    )
            elif not 0.0 < self.alpha < 1.0:
                raise DomainError("statistical TS factor must lie in (0, 1)")
        elif self.alpha is not None:
            raise ContractError(f"the {self.scheme.value} relay sets its TS factor from instantaneous CSI")
        if self.scheme is Scheme.TARGET and self.gamma_hat is None:
            raise ContractError("the target relay needs gamma_hat")


def _perturb_chunk(ch, kappa, stream, chunk_index, count):
    """CSI estimates ``h + sqrt(kappa)|h| e`` for one chunk of blocks."""
    unit = complex_normal_chunk(stream, chunk_index, count, 4, PURPOSE_CSI_ERROR)
    hs = [np.broadcast_to(np.asarray(h), (count,)) for h in (ch.h0, ch.h1, ch.h2, ch.h3)]
    noisy = [h + np.sqrt(kappa) * np.abs(h) * unit[:, i] for i, h in enumerate(hs)]
    return ChannelSample.from_coefficients(*noisy)


def realise(decision, true_snrs, true_g0, params):
    """Apply a decision taken on estimated CSI to the true channel.

    The gain is capped at the true maximum-power gain for the chosen TS factor
    (the relay cannot spend energy it did not harvest).
    """
    feasible = np.asarray(decision.feasible)
    alpha = np.asarray(decision.alpha, dtype=float)
    safe_alpha = np.where(feasible, alpha, 0.5)
    mu = safe_alpha * params.eta / (1.0 - safe_alpha)
    cap = max_relay_gain(true_snrs, true_g0, params, mu)
    beta = np.where(feasible, np.minimum(decision.beta, cap), 0.0)
    gamma = np.where(feasible, esinr(true_snrs, true_g0, params, beta), np.nan)
    return RelayDecision(decision.scheme, alpha, np.where(feasible, mu, np.nan), beta, gamma, feasible)


def _block_values(spec, decision, snrs):
    p = spec.params
    metric = spec.metric
    feasible = np.asarray(decision.feasible)
    gamma = np.where(feasible, decision.esinr, 0.0)
    if metric is Metric.OUTAGE:
        return np.where(feasible, gamma < p.gamma_th, True).astype(float)
    if metric is Metric.ERGODIC_CAPACITY:
        return np.log2(1.0 + gamma)
    if metric is Metric.THROUGHPUT_DL:
        return block_throughput(p, Mode.DELAY_LIMITED, decision)
    if metric is Metric.THROUGHPUT_DT:
        return block_throughput(p, Mode.DELAY_TOLERANT, decision)
    if metric is Metric.THROUGHPUT_INST:
        return block_throughput(p, Mode.INSTANTANEOUS, decision)
    if metric is Metric.EE:
        return p.bandwidth_hz * block_throughput(p, spec.mode, decision) / spec.ps
    if metric is Metric.MRC_OUTAGE:
        return (np.asarray(snrs.gamma_sd) + gamma < p.gamma_th).astype(float)
    if metric is Metric.MRC_THROUGHPUT_DL:
        return block_throughput(p, Mode.DELAY_LIMITED, decision, snrs, mrc=True)
    return block_throughput(p, Mode.DELAY_TOLERANT, decision, snrs, mrc=True)


def _decide(spec, snrs, g0):
    if spec.per_block_alpha:
        return instantaneous_decision(spec.scheme, snrs, g0, spec.params)
    return decide(spec.scheme, snrs, g0, spec.params, spec.alpha, spec.gamma_hat)


def _chunk_moments(spec, chunk):
    idx, _start, count = chunk
    stream = RandomStream(spec.seed, spec.stream_id)
    ch = sample_channel_chunk(spec.params, stream, idx, count)
    true_snrs = link_snrs(spec.params, ch, spec.ps)
    if spec.kappa > 0:
        est = _perturb_chunk(ch, spec.kappa, stream, idx, count)
        est_snrs = link_snrs(spec.params, est, spec.ps)
        chosen = _decide(spec, est_snrs, est.g0)
        decision = realise(chosen, true_snrs, ch.g0, spec.params)
    else:
        decision = _decide(spec, true_snrs, ch.g0)
    values = np.asarray(_block_values(spec, decision, true_snrs), dtype=float)
    mean = float(np.mean(values))
    m2 = float(np.sum((values - mean) ** 2))
    return count, mean, m2


def _merge_moments(parts):
    """Chan et al. pairwise update, applied left to right."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        total = n + nb
        delta = mb - mean
        mean = mean + delta * nb / total
        m2 = m2 + m2b + delta * delta * n * nb / total
        n = total
    return n, mean, m2


def _estimate(n, mean, m2, metric, label=""):
    stderr = float(np.sqrt(m2 / (n - 1) / n)) if n > 1 else 0.0
    rare = metric in (Metric.OUTAGE, Metric.MRC_OUTAGE) and mean < RARE_EVENT_LEVEL
    return MetricEstimate(float(mean), stderr, int(n), metric, bool(rare), label)


def simulate(spec, workers=None):
    """Monte Carlo estimate of ``spec.metric``.

    Infeasible target-relay blocks are outages with zero throughput; the EE
    metric still charges them the source power.
    """
    chunks = chunk_layout(int(spec.n_blocks))
    parts = ordered_map(lambda c: _chunk_moments(spec, c), chunks, workers)
    label = "fading-averaged CSI error" if spec.kappa > 0 else ""
    return _estimate(*_merge_moments(parts), spec.metric, label)


def simulate_mrc(spec, workers=None):
    """Monte Carlo estimate of a combined direct-plus-relay metric.

    Outage and delay-limited/tolerant throughput metrics are mapped to their
    combined-link versions.
    """
    metric = spec.metric
    if metric not in _MRC_METRICS:
        if metric not in _TO_MRC:
            raise ContractError(f"metric {metric.value} has no combined-link version")
        metric = _TO_MRC[metric]
    return simulate(replace(spec, metric=metric), workers)


@dataclass(frozen=True)
class CsiErrorResult:
    """Throughput on one channel with perfect CSI versus erroneous CSI."""

    scheme: Scheme
    kappa: float
    perfect: float
    estimate: MetricEstimate

    @property
    def drop(self):
        return self.perfect - self.estimate.value


def _instantaneous_max_alpha(snrs, g0, params, tol):
    n = int(np.size(snrs.gamma_sr))

    def objective(alpha):
        return block_throughput(params, Mode.INSTANTANEOUS, max_relay(snrs, g0, params, alpha))

    return bisect_alpha_batch(objective, n, tol)


def instantaneous_decision(scheme, snrs, g0, params, gamma_hat=None, tol=1e-6):
    """Relay decision using full CSI; the maximum relay bisects its TS factor per block."""
    scheme = Scheme(scheme)
    if scheme is Scheme.MAXIMUM:
        if np.ndim(snrs.gamma_sr) == 0:
            res = bisect_alpha(
                lambda a: block_throughput(params, Mode.INSTANTANEOUS, max_relay(snrs, g0, params, a)),
                tol,
            )
            alpha = res.argmax
        else:
            alpha = _instantaneous_max_alpha(snrs, g0, params, tol)
        return max_relay(snrs, g0, params, alpha)
    return decide(scheme, snrs, g0, params, gamma_hat=gamma_hat)


def csi_error_fixed_channel(params, channel, ps, scheme, kappa, n_draws, seed, gamma_hat=None,
                            stream_id=0, tol=1e-6, workers=None):
    """Instantaneous throughput on one channel realisation under CSI errors.

    Each draw perturbs the channel, runs the scheme (the maximum relay
    bisects its TS factor) on the estimate and evaluates the result on the
    true channel.  The perfect-CSI throughput is returned alongside.
    """
    if kappa < 0:
        raise DomainError("kappa must be non-negative")
    if int(n_draws) < 1:
        raise DomainError("n_draws must be at least 1")
    scheme = Scheme(scheme)
    if scheme is Scheme.TARGET and gamma_hat is None:
        raise ContractError("the target relay needs gamma_hat")
    true_snrs = link_snrs(params, channel, ps)
    perfect = instantaneous_decision(scheme, true_snrs, channel.g0, params, gamma_hat, tol)
    perfect_value = float(np.asarray(block_throughput(params, Mode.INSTANTANEOUS, perfect)))
    stream = RandomStream(seed, stream_id)

    def chunk_moments(chunk):
        idx, _start, count = chunk
        if kappa == 0:
            return count, perfect_value, 0.0
        est = _perturb_chunk(channel, kappa, stream, idx, count)
        est_snrs = link_snrs(params, est, ps)
        chosen = instantaneous_decision(scheme, est_snrs, est.g0, params, gamma_hat, tol)
        snrs_here = LinkSNRs(*(np.broadcast_to(np.asarray(v, dtype=float), (count,)) for v in (
            true_snrs.gamma_sr, true_snrs.gamma_rd, true_snrs.gamma_sd)))
        realised = realise(chosen, snrs_here, np.broadcast_to(np.asarray(channel.g0), (count,)), params)
        values = np.asarray(block_throughput(params, Mode.INSTANTANEOUS, realised), dtype=float)
        mean = float(np.mean(values))
        return count, mean, float(np.sum((values - mean) ** 2))

    parts = ordered_map(chunk_moments, chunk_layout(int(n_draws)), workers)
    est = _estimate(*_merge_moments(parts), Metric.THROUGHPUT_INST, "fixed-channel CSI error")
    return CsiErrorResult(scheme, float(kappa), perfect_value, est)
