"""System parameters, unit conversions, link budgets and the CSI-error model.

Everything inside this module is in linear units (watts, power ratios).
Decibel quantities are converted once, at the configuration boundary.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _scalar_or_array(x):
    arr = np.asarray(x, dtype=float)
    return arr.item() if arr.ndim == 0 else arr


def dbm_to_watts(p_dbm):
    """Convert dBm to watts.

    >>> dbm_to_watts(30.0)
    1.0
    """
    return _scalar_or_array(10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0))


def watts_to_dbm(p_w):
    return _scalar_or_array(10.0 * np.log10(p_w) + 30.0)


def db_to_linear(x_db):
    """Convert a decibel power ratio to linear scale."""
    return _scalar_or_array(10.0 ** (np.asarray(x_db, dtype=float) / 10.0))


def linear_to_db(x):
    return _scalar_or_array(10.0 * np.log10(x))


@dataclass(frozen=True)
class SystemParams:
    """Static physical constants of the source-relay-destination link.

    Distances are in metres, already normalised to the 1 m reference of the
    path-loss model.  Powers and noise variances are in watts; gains are
    linear ratios.  ``gamma_th=None`` ties the outage threshold to the rate,
    ``gamma_th = 2**rate_bps_hz - 1``.
    """

    eta: float = 0.8
    pathloss_ref: float = 1e-3
    ant_gain_src: float = 10.0 ** 1.8
    ant_gain_relay: float = 10.0 ** 0.8
    m: float = 3.0
    d1: float = 10.0
    d2: float = 10.0
    d3: float = 20.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    sigma_r2: float = 10.0 ** -12.5
    sigma_d2: float = 10.0 ** -12.5
    sigma_02: float = 0.1
    rician_k: float = 10.0 ** 0.6
    bandwidth_hz: float = 200e3
    rate_bps_hz: float = 2.0
    gamma_th: float = None
    block_time: float = 1.0

    def __post_init__(self):
        if self.gamma_th is None:
            object.__setattr__(self, "gamma_th", 2.0 ** self.rate_bps_hz - 1.0)
        checks = [
            (0.0 < self.eta <= 1.0, "eta must lie in (0, 1]"),
            (self.m >= 2.0, "path-loss exponent m must be >= 2"),
            (min(self.d1, self.d2, self.d3) > 0.0, "distances must be positive"),
            (min(self.lambda1, self.lambda2, self.lambda3) > 0.0, "channel variances must be positive"),
            (min(self.sigma_r2, self.sigma_d2, self.sigma_02) > 0.0, "noise and RSI variances must be positive"),
            (self.rician_k > 0.0, "Rician K-factor must be positive"),
            (min(self.pathloss_ref, self.ant_gain_src, self.ant_gain_relay) > 0.0,
             "path loss and antenna gains must be positive"),
            (self.bandwidth_hz > 0.0 and self.block_time > 0.0, "bandwidth and block time must be positive"),
            (self.gamma_th >= 0.0, "gamma_th must be non-negative"),
        ]
        for ok, message in checks:
            if not ok:
                raise DomainError(message)

    @classmethod
    def reference(cls, **overrides):
        """Default simulation parameters (-30 dB path loss, 18/8 dBi antennas, -95 dBm noise)."""
        return cls(**overrides)

    def replace(self, **changes):
        """Copy with some fields changed; a changed rate re-derives ``gamma_th``
        unless ``gamma_th`` is given too."""
        if "rate_bps_hz" in changes and "gamma_th" not in changes:
            changes["gamma_th"] = None
        return dataclasses.replace(self, **changes)

    @property
    def loss_src(self):
        """Source-side path-loss factor (reference loss times source antenna gain)."""
        return self.ant_gain_src * self.pathloss_ref

    @property
    def loss_relay(self):
        """Relay-side path-loss factor (reference loss times relay antenna gain)."""
        return self.ant_gain_relay * self.pathloss_ref


@dataclass(frozen=True)
class ChannelSample:
    """Channel coefficients of one block (or an array of blocks).

    ``h0`` is the residual self-interference channel, ``h1`` source-relay,
    ``h2`` relay-destination and ``h3`` source-destination.
    """

    h0: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray

    @classmethod
    def from_coefficients(cls, h0, h1, h2, h3):
        hs = [np.asarray(h, dtype=complex) for h in (h0, h1, h2, h3)]
        gs = [h.real ** 2 + h.imag ** 2 for h in hs]
        return cls(*hs, *gs)

    @classmethod
    def from_gains(cls, g0, g1, g2, g3=1.0):
        """Build a sample with real, non-negative coefficients ``sqrt(g_i)``."""
        gains = [np.asarray(g, dtype=float) for g in (g0, g1, g2, g3)]
        if np.any(gains[0] <= 0):
            raise DomainError("self-interference gain g0 must be positive")
        if any(np.any(g < 0) for g in gains):
            raise DomainError("channel gains must be non-negative")
        return cls.from_coefficients(*[np.sqrt(g) + 0j for g in gains])

    def __len__(self):
        return int(np.size(self.g1))

    def take(self, index):
        """Sub-sample of the blocks selected by ``index``."""
        shape = np.shape(self.g1)
        return ChannelSample(*(np.broadcast_to(v, shape)[index] for v in dataclasses.astuple(self)))


@dataclass(frozen=True)
class LinkSNRs:
    """Per-hop channel SNRs: first hop, two-hop product and direct link."""

    gamma_sr: np.ndarray
    gamma_rd: np.ndarray
    gamma_sd: np.ndarray


def link_snrs(params, ch, ps):
    """Channel SNRs of the three links for source power ``ps`` (watts).

    The relay-destination SNR carries the first-hop gain as well, since the
    relay's transmit power scales with the energy it harvested from the source.
    """
    if np.any(np.asarray(ps) <= 0):
        raise DomainError("source power must be positive")
    p = params
    gamma_sr = p.loss_src * ps * ch.g1 / (p.d1 ** p.m * p.sigma_r2)
    gamma_rd = p.loss_src * p.loss_relay * ps * ch.g1 * ch.g2 / (p.d1 ** p.m * p.d2 ** p.m * p.sigma_d2)
    gamma_sd = p.loss_src * ps * ch.g3 / (p.d3 ** p.m * p.sigma_d2)
    return LinkSNRs(gamma_sr, gamma_rd, gamma_sd)


def ts_ratio(alpha, eta):
    """``mu = alpha * eta / (1 - alpha)``: harvested-to-relaying power ratio."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0) or np.any(alpha >= 1):
        raise DomainError("TS factor alpha must lie strictly inside (0, 1)")
    out = alpha * eta / (1.0 - alpha)
    return out.item() if out.ndim == 0 else out


def harvested_energy(params, ch, ps, alpha):
    """Energy harvested at the relay during the ``alpha * T`` harvesting phase."""
    ts_ratio(alpha, params.eta)  # domain check
    p = params
    return p.eta * p.loss_src * p.d1 ** -p.m * ps * ch.g1 * alpha * p.block_time


def max_relay_power(params, ch, ps, alpha):
    """Largest relay transmit power the harvested energy can sustain over ``(1 - alpha) T``."""
    mu = ts_ratio(alpha, params.eta)
    p = params
    return mu * p.loss_src * p.d1 ** -p.m * ps * ch.g1


def perturb_csi(ch, kappa, rng_stream):
    """Channel estimates ``h + e`` with ``e ~ CN(0, kappa |h|^2)`` independent of ``h``.

    ``rng_stream`` is a ``numpy.random.Generator`` or a ``RandomStream``.
    ``kappa = 0`` returns ``ch`` itself.
    """
    if kappa < 0:
        raise DomainError("kappa must be non-negative")
    if kappa == 0:
        return ch
    hs = [np.asarray(h) for h in (ch.h0, ch.h1, ch.h2, ch.h3)]
    shape = np.shape(hs[0])
    n = int(np.prod(shape)) if shape else 1
    if isinstance(rng_stream, np.random.Generator):
        z = rng_stream.standard_normal((n, 8))
        unit = (z[:, 0::2] + 1j * z[:, 1::2]) * np.sqrt(0.5)
    else:
        from .numerics.random import chunk_layout, complex_normal_chunk

        unit = np.concatenate([
            complex_normal_chunk(rng_stream, idx, count, 4)
            for idx, _s, count in chunk_layout(n)
        ])
    noisy = [
        h + np.sqrt(kappa) * np.abs(h) * unit[:, i].reshape(shape)
        for i, h in enumerate(hs)
    ]
    return ChannelSample.from_coefficients(*noisy)
