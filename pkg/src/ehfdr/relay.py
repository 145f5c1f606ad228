"""Per-block relay control: relay gain, TS factor and end-to-end SINR.

Three schemes are provided:

* maximum relay: spend all harvested power (gain pinned at the energy cap)
  for a TS factor chosen from statistics, or per block;
* SINR relay: the gain that maximises the end-to-end SINR, together with the
  TS factor that makes that gain exactly affordable;
* target relay: the smallest TS factor whose maximum-power gain reaches a
  preset SINR target, using first-hop and self-interference CSI only.

All functions broadcast over numpy arrays of blocks.  Throughout, ``s`` is the
first-hop SNR, ``t`` the two-hop SNR product term and ``x = A_r |h0|^2`` the
effective self-interference gain.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import ts_ratio
from .errors import DegenerateChannelError, DomainError, OscillationError


class Scheme(str, Enum):
    MAXIMUM = "maximum"
    SINR = "sinr"
    TARGET = "target"


@dataclass(frozen=True)
class TargetConfig:
    """SINR target of the target relay (linear ratio)."""

    gamma_hat: float

    def __post_init__(self):
        if not np.all(np.asarray(self.gamma_hat) > 0):
            raise DomainError("gamma_hat must be positive")


@dataclass(frozen=True)
class RelayDecision:
    """Relay control outcome for one block or an array of blocks.

    Infeasible target-relay blocks carry ``alpha = 1``, ``beta = 0`` and
    ``esinr = nan`` (no relaying happens).
    """

    scheme: Scheme
    alpha: np.ndarray
    mu: np.ndarray
    beta: np.ndarray
    esinr: np.ndarray
    feasible: np.ndarray


def _si_gain(params, g0):
    return params.ant_gain_relay * np.asarray(g0, dtype=float)


def esinr(snrs, g0, params, beta):
    """End-to-end SINR for relay gain ``beta``.

    ``gamma = s t / (s/beta + t + (s+1) t x / (1/beta - x))``.  The harvested
    power enters only through ``beta``; ``t`` is independent of the TS factor.

    Raises
    ------
    OscillationError
        If ``beta * x >= 1`` for any block, i.e. the self-interference loop
        has no finite steady-state power.
    """
    s = np.asarray(snrs.gamma_sr, dtype=float)
    t = np.asarray(snrs.gamma_rd, dtype=float)
    x = _si_gain(params, g0)
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0):
        raise DomainError("relay gain must be non-negative")
    if np.any(beta * x >= 1.0):
        raise OscillationError("relay gain violates the non-oscillation bound beta < 1/(A_r g0)")
    with np.errstate(divide="ignore", invalid="ignore"):
        # multiply through by beta to keep beta -> 0 finite
        denom = s + beta * t + (s + 1.0) * t * x * beta * beta / (1.0 - beta * x)
        out = np.where(beta > 0, beta * s * t / denom, 0.0)
    return out.item() if out.ndim == 0 else out


def max_relay_gain(snrs, g0, params, mu):
    """Gain that spends exactly the harvested power: ``mu s / (1 + s + mu s x)``."""
    s = np.asarray(snrs.gamma_sr, dtype=float)
    x = _si_gain(params, g0)
    return mu * s / (1.0 + s + mu * s * x)


def max_relay_esinr(snrs, g0, params, mu):
    """``mu s t / (s + (mu s x + 1)(mu t + 1))``."""
    s = np.asarray(snrs.gamma_sr, dtype=float)
    t = np.asarray(snrs.gamma_rd, dtype=float)
    x = _si_gain(params, g0)
    return mu * s * t / (s + (mu * s * x + 1.0) * (mu * t + 1.0))


def max_relay(snrs, g0, params, alpha):
    """Maximum relay for a given TS factor ``alpha`` in (0, 1)."""
    mu = np.asarray(ts_ratio(alpha, params.eta), dtype=float)
    beta = max_relay_gain(snrs, g0, params, mu)
    gamma = max_relay_esinr(snrs, g0, params, mu)
    alpha_arr = np.broadcast_to(np.asarray(alpha, dtype=float), np.shape(gamma))
    return RelayDecision(
        Scheme.MAXIMUM, alpha_arr, np.broadcast_to(mu, np.shape(gamma)), beta, gamma,
        np.ones(np.shape(gamma), dtype=bool),
    )


def stationary_alpha(snrs, g0, params):
    """TS factor at which the maximum-relay SINR stops increasing in ``alpha``.

    Equals ``sqrt(s+1) / (sqrt(s+1) + eta sqrt(s t x))``, the same value the
    SINR relay uses.
    """
    s = np.asarray(snrs.gamma_sr, dtype=float)
    t = np.asarray(snrs.gamma_rd, dtype=float)
    x = _si_gain(params, g0)
    root = np.sqrt(s + 1.0)
    return root / (root + params.eta * np.sqrt(s * t * x))


def sinr_relay(snrs, g0, params):
    """SINR-maximising gain and the TS factor that makes it exactly affordable."""
    s = np.asarray(snrs.gamma_sr, dtype=float)
    t = np.asarray(snrs.gamma_rd, dtype=float)
    x = _si_gain(params, g0)
    if np.any(s <= 0) or np.any(t <= 0) or np.any(x <= 0):
        raise DegenerateChannelError("SINR relay needs positive first-hop, second-hop and RSI gains")
    cross = np.sqrt(s * (s + 1.0) * t * x)
    beta = s / (s * x + cross)
    gamma = s * t / (s * x + t + 2.0 * cross)
    alpha = stationary_alpha(snrs, g0, params)
    # mu = alpha eta / (1 - alpha) simplifies to this without cancellation
    mu = np.sqrt((s + 1.0) / (s * t * x))
    return RelayDecision(Scheme.SINR, alpha, mu, beta, gamma, np.ones(np.shape(gamma), dtype=bool))


def target_alpha(snrs, g0, params, gamma_hat):
    """Smallest TS factor whose maximum-power SINR reaches ``gamma_hat``.

    Uses only ``s`` and ``x``.  Returns 1 where ``gamma_hat >= s`` (the target
    is unreachable at any TS factor).
    """
    s = np.asarray(snrs.gamma_sr, dtype=float)
    x = _si_gain(params, g0)
    gh = np.asarray(gamma_hat, dtype=float)
    eta = params.eta
    feasible = gh < s
    with np.errstate(invalid="ignore", divide="ignore"):
        num = (s + 1.0) * (s - gh)
        den = (s + 1.0) * (s - gh + eta * gh * s * x) + eta * s * x * np.sqrt(gh * (gh + 1.0) * s * (s + 1.0))
        alpha = np.where(feasible, num / den, 1.0)
    return alpha, feasible


def target_relay(snrs, g0, params, cfg):
    """Target relay for SINR target ``cfg.gamma_hat``.

    The reported ``esinr`` is computed from the realised two-hop SNR, so it
    equals the target only when the channel matches the one the TS factor was
    designed for.
    """
    gamma_hat = cfg.gamma_hat if isinstance(cfg, TargetConfig) else TargetConfig(cfg).gamma_hat
    alpha, feasible = target_alpha(snrs, g0, params, gamma_hat)
    shape = np.broadcast_shapes(np.shape(alpha), np.shape(snrs.gamma_rd))
    alpha = np.broadcast_to(alpha, shape)
    feasible = np.broadcast_to(feasible, shape)
    safe_alpha = np.where(feasible, alpha, 0.5)
    mu_ok = safe_alpha * params.eta / (1.0 - safe_alpha)
    beta = np.where(feasible, max_relay_gain(snrs, g0, params, mu_ok), 0.0)
    gamma = np.where(feasible, max_relay_esinr(snrs, g0, params, mu_ok), np.nan)
    mu = np.where(feasible, mu_ok, np.nan)
    return RelayDecision(Scheme.TARGET, alpha, mu, beta, gamma, feasible)


def decide(scheme, snrs, g0, params, alpha=None, gamma_hat=None):
    """Dispatch to one of the three schemes."""
    scheme = Scheme(scheme)
    if scheme is Scheme.MAXIMUM:
        if alpha is None:
            raise DomainError("maximum relay needs a TS factor")
        return max_relay(snrs, g0, params, alpha)
    if scheme is Scheme.SINR:
        return sinr_relay(snrs, g0, params)
    if gamma_hat is None:
        raise DomainError("target relay needs gamma_hat")
    return target_relay(snrs, g0, params, TargetConfig(gamma_hat))


def mrc_esinr(snrs, relay_esinr):
    """SINR after maximum ratio combining of the direct and relayed paths."""
    gsd = np.asarray(snrs.gamma_sd, dtype=float)
    gr = np.asarray(relay_esinr, dtype=float)
    if np.any(gsd < 0) or np.any(gr < 0):
        raise DomainError("SINRs must be non-negative")
    return gsd + gr


def instantaneous_throughput(decision):
    """``(1 - alpha) log2(1 + gamma)``; zero for infeasible blocks."""
    feasible = np.asarray(decision.feasible)
    gamma = np.where(feasible, decision.esinr, 0.0)
    out = np.where(feasible, (1.0 - decision.alpha) * np.log2(1.0 + gamma), 0.0)
    return out.item() if out.ndim == 0 else out


def instantaneous_throughput_mrc(decision, snrs):
    """Direct link during harvesting plus combined paths during relaying.

    ``alpha log2(1 + gamma_sd) + (1 - alpha) log2(1 + gamma_sd + gamma_relay)``.
    An infeasible block has ``alpha = 1``, leaving only the direct link.
    """
    feasible = np.asarray(decision.feasible)
    gsd = np.asarray(snrs.gamma_sd, dtype=float)
    relay = np.where(feasible, decision.esinr, 0.0)
    alpha = np.where(feasible, decision.alpha, 1.0)
    out = alpha * np.log2(1.0 + gsd) + (1.0 - alpha) * np.log2(1.0 + mrc_esinr(snrs, relay))
    return out.item() if out.ndim == 0 else out


def relay_power(params, ch, ps, beta):
    """Steady-state relay transmit power for gain ``beta`` (watts)."""
    x = _si_gain(params, ch.g0)
    beta = np.asarray(beta, dtype=float)
    if np.any(beta * x >= 1.0):
        raise OscillationError("relay gain violates the non-oscillation bound")
    p = params
    received = p.loss_src * p.d1 ** -p.m * ps * ch.g1 + p.sigma_r2
    return beta * received / (1.0 - x * beta)
