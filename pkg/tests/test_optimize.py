import math

import numpy as np
import pytest

from ehfdr import analysis as an
from ehfdr.analysis import Mode
from ehfdr.channel import ChannelSample, SystemParams, dbm_to_watts, link_snrs, watts_to_dbm
from ehfdr.config import resolve
from ehfdr.errors import DomainError
from ehfdr.experiments import run_ee_sweep
from ehfdr.optimize import (
    ALPHA_MAX,
    ALPHA_MIN,
    bisect_alpha,
    bisect_alpha_batch,
    dinkelbach_ps,
    golden_section,
    sweep,
    sweep_point,
)
from ehfdr.relay import max_relay, stationary_alpha

P = SystemParams()
REFERENCE_CHANNEL = ChannelSample.from_gains(0.342, 1.898, 0.986)
WEAK_RSI_CHANNEL = ChannelSample.from_gains(0.1, 1.898, 0.986)


def test_bisection_on_parabola():
    res = bisect_alpha(lambda a: -(a - 0.3) ** 2, tol=1e-6)
    assert res.argmax == pytest.approx(0.3, abs=1e-6)
    assert res.converged and not res.fallback
    assert res.iterations <= math.ceil(math.log2((ALPHA_MAX - ALPHA_MIN) / 1e-6)) + 4


def test_bisection_reports_boundary():
    res = bisect_alpha(lambda a: a, tol=1e-6)
    assert res.boundary and res.argmax == pytest.approx(ALPHA_MAX, abs=1e-6)


def test_bisection_falls_back_on_multimodal_objective():
    res = bisect_alpha(lambda a: math.sin(12 * a) + 0.1 * a, tol=1e-6)
    assert res.fallback
    grid = np.linspace(ALPHA_MIN, ALPHA_MAX, 20001)
    best = np.max(np.sin(12 * grid) + 0.1 * grid)
    # golden section lands on some local peak that is at least not below the edges
    assert res.value >= min(best, math.sin(12 * ALPHA_MAX) + 0.1 * ALPHA_MAX) - 1e-9


def test_golden_section_log_scale():
    res = golden_section(lambda p: -(math.log(p) - 1.0) ** 2, 1e-3, 1e3, tol=1e-9, log_scale=True)
    assert res.argmax == pytest.approx(math.e, rel=1e-6)


def test_bisection_matches_stationary_point():
    snrs = link_snrs(P, REFERENCE_CHANNEL, dbm_to_watts(30.0))
    res = bisect_alpha(lambda a: float(max_relay(snrs, REFERENCE_CHANNEL.g0, P, a).esinr), tol=1e-8)
    assert res.argmax == pytest.approx(float(stationary_alpha(snrs, REFERENCE_CHANNEL.g0, P)), abs=1e-7)


def test_instantaneous_throughput_against_grid():
    snrs = link_snrs(P, REFERENCE_CHANNEL, dbm_to_watts(20.0))
    objective = lambda a: an.block_throughput(P, Mode.INSTANTANEOUS, max_relay(snrs, REFERENCE_CHANNEL.g0, P, a))
    grid = np.arange(ALPHA_MIN, ALPHA_MAX, 1e-4)
    oracle = grid[np.argmax(objective(grid))]
    res = bisect_alpha(lambda a: float(objective(a)), tol=1e-6)
    assert abs(res.argmax - oracle) <= 1e-4


def test_batch_bisection_matches_scalar():
    from ehfdr.numerics import RandomStream, sample_channels

    ch = sample_channels(P, RandomStream(9), 50)
    snrs = link_snrs(P, ch, dbm_to_watts(30.0))
    batch = bisect_alpha_batch(lambda a: max_relay(snrs, ch.g0, P, a).esinr, 50, tol=1e-8)
    np.testing.assert_allclose(batch, stationary_alpha(snrs, ch.g0, P), atol=1e-7)


def test_dinkelbach_interior_optimum():
    # ln(1+p) / (p + 1) peaks at p = e - 1
    res = dinkelbach_ps(np.log1p, 100.0, circuit_power=1.0)
    assert res.converged and not res.boundary
    assert res.argmax == pytest.approx(math.e - 1.0, rel=1e-6)
    grid = np.arange(1e-5, 100.0, 1e-5)
    assert abs(res.argmax - grid[np.argmax(np.log1p(grid) / (grid + 1.0))]) <= 1e-5
    assert np.all(np.diff(res.history) >= -1e-15)


def test_dinkelbach_flags_boundary():
    # sqrt(p) / p grows without bound towards zero
    res = dinkelbach_ps(math.sqrt, 4.0)
    assert res.boundary
    assert res.argmax == pytest.approx(4e-9, rel=1e-3)
    with pytest.raises(DomainError):
        dinkelbach_ps(math.sqrt, -1.0)


def test_sweep_single_point_and_errors():
    rows = sweep("ps", [2.0], lambda pt: pt.ps * 2, P, 1.0)
    assert len(rows) == 1 and rows[0].result == 4.0
    rows = sweep("placement", [0.5, 1.5], lambda pt: pt.params.d1, P, 1.0)
    assert rows[0].ok and rows[0].result == pytest.approx(10.0)
    assert not rows[1].ok and "placement" in rows[1].error

    def fails(pt):
        raise DomainError("boom")

    assert sweep("ps", [1.0, 2.0], fails, P, 1.0)[1].error == "DomainError: boom"
    with pytest.raises(DomainError):
        sweep("ps", [], fails, P, 1.0)
    with pytest.raises(DomainError):
        sweep("ps", [1.0, 3.0, 2.0], fails, P, 1.0)


def test_sweep_point_axes():
    assert sweep_point("sigma02", 0.4, P, 1.0).params.sigma_02 == 0.4
    assert sweep_point("gamma_hat", 5.0, P, 1.0).gamma_hat == 5.0
    assert sweep_point("kappa", 0.1, P, 1.0).kappa == 0.1
    pt = sweep_point("placement", 0.3, P, 1.0)
    assert pt.params.d1 + pt.params.d2 == pytest.approx(P.d3)


def test_midway_placement_is_worst_for_sinr_relay():
    ps = dbm_to_watts(30.0)
    rows = sweep("placement", [0.2, 0.5, 0.8], lambda pt: an.outage_sinr(pt.params, ps).value, P, ps)
    values = [r.result for r in rows]
    assert values[1] > max(values[0], values[2])


def test_fixed_channel_ee_peaks_at_interior_target():
    cfg = resolve(overrides={
        "sweep.axis": "gamma_hat", "sweep.channel": "fixed", "run.scheme": "target",
        "channel.g0": "0.1", "sweep.gamma_hat_db": "11..19:1",
    })
    rows = [r for r in run_ee_sweep(cfg) if r.metric == "ee"]
    grid = [r.axis_value for r in rows]
    ee = np.array([r.analytic for r in rows])
    peak = grid[int(np.argmax(ee))]
    assert peak == pytest.approx(15.0, abs=1.0)
    assert ee[0] < 0.95 * ee.max() and ee[-1] < 0.95 * ee.max()
    assert WEAK_RSI_CHANNEL.g0 == cfg["channel.g0"]
    assert watts_to_dbm(dbm_to_watts(cfg["run.ps_fixed_dbm"])) == pytest.approx(30.0)
