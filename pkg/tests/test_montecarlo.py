import numpy as np
import pytest

from ehfdr import analysis as an
from ehfdr.analysis import Mode
from ehfdr.channel import ChannelSample, SystemParams, db_to_linear, dbm_to_watts
from ehfdr.errors import ContractError, DomainError
from ehfdr.montecarlo import (
    Metric,
    RunSpec,
    _merge_moments,
    csi_error_fixed_channel,
    simulate,
    simulate_mrc,
)

P = SystemParams()


def _spec(**kw):
    base = dict(params=P, ps=dbm_to_watts(20.0), scheme="sinr", metric="outage", n_blocks=20000, seed=3)
    base.update(kw)
    return RunSpec(**base)


def test_results_identical_across_worker_counts():
    for spec in [_spec(), _spec(scheme="maximum", alpha=0.2, metric="ergodic_capacity"),
                 _spec(scheme="target", gamma_hat=db_to_linear(6.0), metric="ee", kappa=0.05)]:
        one = simulate(spec, workers=1)
        four = simulate(spec, workers=4)
        assert one == four


def test_seed_and_stream_change_the_draws():
    a = simulate(_spec(metric="ergodic_capacity"))
    b = simulate(_spec(metric="ergodic_capacity", seed=4))
    c = simulate(_spec(metric="ergodic_capacity", stream_id=1))
    assert a.value != b.value and a.value != c.value


def test_merge_matches_one_pass_moments():
    rng = np.random.default_rng(0)
    data = rng.exponential(size=10000)
    parts = []
    for block in np.array_split(data, 7):
        m = block.mean()
        parts.append((block.size, m, float(np.sum((block - m) ** 2))))
    n, mean, m2 = _merge_moments(parts)
    assert n == data.size
    assert mean == pytest.approx(data.mean(), rel=1e-13)
    assert m2 / (n - 1) == pytest.approx(data.var(ddof=1), rel=1e-11)


def test_zero_threshold_never_outage():
    p = P.replace(gamma_th=0.0)
    est = simulate(_spec(params=p))
    assert est.value == 0.0 and est.stderr == 0.0


def test_contracts():
    with pytest.raises(ContractError):
        _spec(scheme="maximum")
    with pytest.raises(ContractError):
        _spec(scheme="sinr", alpha=0.3)
    with pytest.raises(ContractError):
        _spec(scheme="target")
    with pytest.raises(DomainError):
        _spec(n_blocks=0)
    with pytest.raises(DomainError):
        _spec(scheme="maximum", alpha=1.0)
    with pytest.raises(ContractError):
        simulate_mrc(_spec(metric="ergodic_capacity"))
    # per-block TS factor is accepted for instantaneous metrics
    assert _spec(scheme="maximum", metric="throughput_inst", n_blocks=100).per_block_alpha


def test_stderr_scales_with_sample_size():
    small = simulate(_spec(metric="ergodic_capacity", n_blocks=40000))
    large = simulate(_spec(metric="ergodic_capacity", n_blocks=80000))
    assert small.stderr / large.stderr == pytest.approx(np.sqrt(2.0), rel=0.1)


def test_rare_flag():
    # a very low threshold drives the outage below the trust level
    est = simulate(_spec(params=P.replace(gamma_th=1e-9), ps=dbm_to_watts(50.0), n_blocks=1000))
    assert est.rare
    assert not simulate(_spec(n_blocks=1000)).rare


def test_mrc_without_direct_link_equals_relay_only():
    p = P.replace(lambda3=1e-12)
    relay_only = simulate(_spec(params=p))
    combined = simulate_mrc(_spec(params=p))
    assert combined.value == pytest.approx(relay_only.value, abs=1e-12)


def test_mrc_outage_below_product_bound():
    ps = dbm_to_watts(15.0)
    spec = _spec(ps=ps, n_blocks=100000)
    combined = simulate_mrc(spec)
    bound = an.mrc_outage_upper_bound(P, ps, an.outage_sinr(P, ps).value)
    assert combined.value <= bound + 3 * combined.stderr


def test_sinr_relay_capacity_exceeds_max_relay():
    max_est = simulate(_spec(scheme="maximum", alpha=0.2, metric="ergodic_capacity"))
    sinr_est = simulate(_spec(metric="ergodic_capacity"))
    assert sinr_est.value >= max_est.value - 2 * max_est.stderr


def test_sinr_outage_at_low_power():
    est = simulate(_spec(ps=dbm_to_watts(10.0), n_blocks=50000))
    assert est.value == pytest.approx(0.8, abs=0.02)


def test_throughput_metrics_consistent_with_outage():
    spec = _spec(scheme="maximum", alpha=0.25)
    outage = simulate(spec)
    dl = simulate(_spec(scheme="maximum", alpha=0.25, metric="throughput_dl"))
    assert dl.value == pytest.approx(0.75 * (1 - outage.value) * P.rate_bps_hz, rel=1e-12)


def test_csi_error_fixed_channel():
    ch = ChannelSample.from_gains(0.342, 1.898, 0.986)
    ps = dbm_to_watts(30.0)
    exact = csi_error_fixed_channel(P, ch, ps, "sinr", 0.0, 1000, 1)
    assert exact.drop == 0.0
    noisy = csi_error_fixed_channel(P, ch, ps, "sinr", 0.1, 4000, 1)
    assert noisy.drop > 0.0
    assert noisy.estimate.metric is Metric.THROUGHPUT_INST
    again = csi_error_fixed_channel(P, ch, ps, "sinr", 0.1, 4000, 1, workers=3)
    assert again.estimate == noisy.estimate
    with pytest.raises(ContractError):
        csi_error_fixed_channel(P, ch, ps, "target", 0.1, 10, 1)


def test_instantaneous_ee_uses_source_power():
    spec = _spec(metric="ee", mode=Mode.INSTANTANEOUS, n_blocks=5000)
    thr = simulate(_spec(metric="throughput_inst", n_blocks=5000))
    ee = simulate(spec)
    assert ee.value == pytest.approx(thr.value * P.bandwidth_hz / spec.ps, rel=1e-12)
