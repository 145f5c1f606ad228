import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehfdr.channel import (
    ChannelSample,
    SystemParams,
    db_to_linear,
    dbm_to_watts,
    harvested_energy,
    linear_to_db,
    link_snrs,
    max_relay_power,
    perturb_csi,
    ts_ratio,
    watts_to_dbm,
)
from ehfdr.errors import DomainError
from ehfdr.numerics import RandomStream

REFERENCE_CHANNEL = dict(g0=0.342, g1=1.898, g2=0.986)


def test_unit_conversions():
    assert dbm_to_watts(30.0) == 1.0
    assert dbm_to_watts(-95.0) == pytest.approx(10 ** -12.5, rel=1e-15)
    assert watts_to_dbm(1e-3) == pytest.approx(0.0, abs=1e-12)
    assert db_to_linear(6.0) == pytest.approx(10 ** 0.6, rel=1e-15)
    assert linear_to_db(100.0) == pytest.approx(20.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-150.0, 80.0))
def test_dbm_round_trip(p_dbm):
    assert watts_to_dbm(dbm_to_watts(p_dbm)) == pytest.approx(p_dbm, abs=1e-9)


def test_default_parameters():
    p = SystemParams.reference()
    assert p.gamma_th == 3.0
    assert p.loss_src == pytest.approx(10 ** 1.8 * 1e-3)
    assert p.loss_relay == pytest.approx(10 ** 0.8 * 1e-3)
    assert p.replace(rate_bps_hz=3.0).gamma_th == 7.0
    assert p.replace(rate_bps_hz=3.0, gamma_th=1.0).gamma_th == 1.0


@pytest.mark.parametrize("bad", [dict(eta=0.0), dict(m=1.5), dict(d1=0.0), dict(sigma_02=-1.0),
                                 dict(rician_k=0.0), dict(gamma_th=-1.0)])
def test_parameter_validation(bad):
    with pytest.raises(DomainError):
        SystemParams(**bad)


def test_first_hop_snr_reference_value():
    p = SystemParams()
    snrs = link_snrs(p, ChannelSample.from_gains(**REFERENCE_CHANNEL), dbm_to_watts(30.0))
    assert linear_to_db(snrs.gamma_sr) == pytest.approx(85.78, abs=0.01)


def test_link_snrs_independent_budget():
    # received powers computed link by link in dBm
    p = SystemParams()
    ch = ChannelSample.from_gains(0.2, 0.5, 2.0, 0.7)
    ps_dbm = 17.0
    rx_relay_dbm = ps_dbm + 18.0 - 30.0 - 30.0 * np.log10(10.0) + 10 * np.log10(0.5)
    gamma_sr_db = rx_relay_dbm - (-95.0)
    snrs = link_snrs(p, ch, dbm_to_watts(ps_dbm))
    assert linear_to_db(snrs.gamma_sr) == pytest.approx(gamma_sr_db, abs=1e-9)
    rd_db = gamma_sr_db + 8.0 - 30.0 - 30.0 + 10 * np.log10(2.0)
    assert linear_to_db(snrs.gamma_rd) == pytest.approx(rd_db, abs=1e-9)
    sd_db = ps_dbm + 18.0 - 30.0 - 30.0 * np.log10(20.0) + 10 * np.log10(0.7) + 95.0
    assert linear_to_db(snrs.gamma_sd) == pytest.approx(sd_db, abs=1e-9)


def test_harvested_energy_and_power():
    p = SystemParams()
    ch = ChannelSample.from_gains(**REFERENCE_CHANNEL)
    e = harvested_energy(p, ch, 1.0, 0.25)
    pmax = max_relay_power(p, ch, 1.0, 0.25)
    # energy spread over the relaying phase
    assert pmax == pytest.approx(e / (0.75 * p.block_time))
    assert ts_ratio(0.5, 0.8) == pytest.approx(0.8)
    with pytest.raises(DomainError):
        ts_ratio(1.0, 0.8)


def test_channel_sample_validation():
    with pytest.raises(DomainError):
        ChannelSample.from_gains(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        ChannelSample.from_gains(0.1, -1.0, 1.0)
    ch = ChannelSample.from_gains([0.1, 0.2], [1.0, 2.0], [3.0, 4.0])
    assert len(ch) == 2
    assert ch.take(1).g1 == pytest.approx(2.0)


def test_perturb_csi():
    p = SystemParams()
    from ehfdr.numerics import sample_channels

    ch = sample_channels(p, RandomStream(1), 100000)
    assert perturb_csi(ch, 0.0, RandomStream(2)) is ch
    est = perturb_csi(ch, 0.1, RandomStream(2))
    err = est.h1 - ch.h1
    # error variance kappa |h|^2, independent of h
    assert np.mean(np.abs(err) ** 2 / ch.g1) == pytest.approx(0.1, rel=0.02)
    assert abs(np.mean(err * np.conj(ch.h1))) < 0.01
    again = perturb_csi(ch, 0.1, np.random.default_rng(5))
    assert again.h1.shape == ch.h1.shape
    with pytest.raises(DomainError):
        perturb_csi(ch, -0.1, RandomStream(2))
