"""Delay algebra, sum-rule residuals and lifetime extraction."""

import math

import numpy as np
import pytest

from evlab import cmt, delays
from evlab.cmt import BarrierSpec
from evlab.delays import (DecayTrace, DelayReport, SimulationQualityError,
                          cavity_lifetime, delay_report, dwell_time,
                          flux_delays, q_factor, verify_sum_rules)


def test_dwell_time_basics():
    assert dwell_time(1.0, 1.0) == 1.0  # barrier-free: U0/P_i = tau0
    spec = BarrierSpec.normalized(4.0)
    tau = dwell_time(cmt.stored_energy(spec, 0.0, 1.0), 1.0)
    assert tau == pytest.approx(math.tanh(4.0) / 4.0, rel=1e-12)
    spec2 = BarrierSpec.normalized(2.0)
    tau2 = dwell_time(cmt.stored_energy(spec2, 0.0, 2.5), 2.5)
    assert tau2 == pytest.approx(math.tanh(2.0) / 2.0, rel=1e-12)
    with pytest.raises(ValueError):
        dwell_time(1.0, 0.0)
    with pytest.raises(ValueError):
        dwell_time(-1.0, 1.0)


def test_flux_delays_split():
    tau_t, tau_r = flux_delays(1.0, 0.5, 0.5)
    assert tau_t == tau_r == 2.0
    # strong barrier at midgap: tau_t = tau_d / sech^2(4)
    spec = BarrierSpec.normalized(4.0)
    tau_d = math.tanh(4.0) / 4.0
    t2 = 1.0 / math.cosh(4.0) ** 2
    tau_t, tau_r = flux_delays(tau_d, t2, 1.0 - t2)
    assert tau_t == pytest.approx(tau_d / t2, rel=1e-12)
    assert tau_t == pytest.approx(186.31, rel=1e-4)
    # vanishing channels produce infinities, not exceptions
    tau_t, tau_r = flux_delays(1.0, 1.0, 0.0)
    assert tau_r == math.inf and tau_t == 1.0
    tau_t, tau_r = flux_delays(1.0, 0.0, 1.0)
    assert tau_t == math.inf and tau_r == 1.0
    with pytest.raises(ValueError):
        flux_delays(1.0, 0.7, 0.7)


def test_reciprocal_rule_is_algebraic():
    for t2 in (1e-6, 0.1, 0.5, 0.93):
        tau_t, tau_r = flux_delays(0.37, t2, 1.0 - t2)
        assert abs(1.0 / tau_t + 1.0 / tau_r - 1.0 / 0.37) * 0.37 < 1e-12


def test_sum_rules_from_cmt_reports():
    for k_l in (0.5, 1.0, 2.0, 4.0, 6.0):
        spec = BarrierSpec.normalized(k_l)
        for omega in (0.0, 0.5 * k_l, 1.5 * k_l, *cmt.resonance_detunings(spec, 1)):
            rules = verify_sum_rules(delay_report(spec, omega))
            assert rules["flux_fraction_sum"] < 1e-6
            assert rules["escape_rate_sum"] < 1e-6
            assert rules["group_vs_dwell"] < 1e-6
            assert rules["weighted_flux_rule"] < 1e-6
            assert rules["reciprocal_rule"] < 1e-12


def test_sum_rules_report_violations():
    # hand-built report violating the partition rule by 0.1
    report = DelayReport(tau_g=1.0, tau_d=1.0, tau_t=2.0, tau_r=2.0 / 0.9,
                         tau_c=1.0, tau_0=1.0, T2=0.5, R2=0.5)
    rules = verify_sum_rules(report)
    assert rules["flux_fraction_sum"] == pytest.approx(0.1, rel=1e-9)


def test_resonance_report_has_infinite_reflected_flux_delay():
    spec = BarrierSpec.normalized(4.0)
    omega_1 = cmt.resonance_detunings(spec, 1)[0]
    report = delay_report(spec, omega_1)
    assert report.R2 == pytest.approx(0.0, abs=1e-25)
    assert report.tau_r == math.inf
    assert report.tau_t == pytest.approx(report.tau_d, rel=1e-9)
    rules = verify_sum_rules(report)
    assert rules["escape_rate_sum"] < 1e-6


def test_q_factor():
    free = BarrierSpec.normalized(0.0)
    assert q_factor(free, 0.0) == pytest.approx(free.omega_B, rel=1e-12)
    spec = BarrierSpec.normalized(4.0)  # omega_B * tau0 = 100
    assert q_factor(spec, 0.0) == pytest.approx(100.0 * math.tanh(4.0) / 4.0,
                                                rel=1e-12)
    # Q/omega equals the dwell time at any detuning
    for omega in (0.0, 1.0, 5.0):
        assert q_factor(spec, omega) / (spec.omega_B + omega) == pytest.approx(
            dwell_time(cmt.stored_energy(spec, omega, 1.0), 1.0), rel=1e-12)


# ---------------------------------------------------------------------------
# lifetime extraction
# ---------------------------------------------------------------------------

def exponential_trace(tau, t_off=2.0, dt=1e-3, horizon=5.0):
    times = np.arange(0.0, t_off + horizon, dt)
    energy = np.where(times < t_off, 1.0, np.exp(-(times - t_off) / tau))
    return DecayTrace(times=times, energy=energy, t_off=t_off)


def test_cavity_lifetime_exact_on_exponential():
    estimate = cavity_lifetime(exponential_trace(0.37))
    assert estimate.tau_c == pytest.approx(0.37, rel=1e-9)
    assert estimate.tau_fit == pytest.approx(0.37, rel=1e-9)


def test_cavity_lifetime_normalization_independent():
    trace = exponential_trace(0.21)
    scaled = DecayTrace(times=trace.times, energy=7.3 * trace.energy,
                        t_off=trace.t_off)
    assert cavity_lifetime(scaled).tau_c == pytest.approx(
        cavity_lifetime(trace).tau_c, rel=1e-12)


def test_cavity_lifetime_plateau_trace():
    # drop to 0.6, hold, then drop again: crossing sits in the second drop
    dt = 1e-3
    times = np.arange(0.0, 4.0, dt)
    energy = np.ones_like(times)
    t = times - 1.0
    seg1 = (t >= 0) & (t < 0.2)
    energy[seg1] = np.exp(-t[seg1] / (0.2 / math.log(1 / 0.6)))
    seg2 = (t >= 0.2) & (t < 1.0)
    energy[seg2] = 0.6
    seg3 = t >= 1.0
    energy[seg3] = 0.6 * np.exp(-(t[seg3] - 1.0) / 0.1)
    trace = DecayTrace(times=times, energy=energy, t_off=1.0)
    estimate = cavity_lifetime(trace)
    expected = 1.0 + 0.1 * math.log(0.6 * math.e)  # solve 0.6 e^{-x/0.1} = 1/e
    assert estimate.tau_c == pytest.approx(expected, rel=1e-3)


def test_cavity_lifetime_insufficient_trace():
    trace = exponential_trace(1.0, horizon=0.5)  # never reaches 1/e
    with pytest.raises(SimulationQualityError):
        cavity_lifetime(trace)


def test_cavity_lifetime_input_validation():
    trace = exponential_trace(0.3)
    with pytest.raises(ValueError):
        cavity_lifetime(DecayTrace(times=trace.times, energy=trace.energy,
                                   t_off=trace.times[-1] + 1.0))
    with pytest.raises(ValueError):
        cavity_lifetime(DecayTrace(times=trace.times[:2], energy=trace.energy[:2],
                                   t_off=0.0))


def test_delay_report_fields_consistent():
    spec = BarrierSpec.normalized(2.0)
    report = delay_report(spec, 1.0)
    assert report.T2 + report.R2 == pytest.approx(1.0, abs=1e-12)
    assert report.tau_0 == spec.tau0
    assert report.tau_c == pytest.approx(report.tau_d, rel=1e-12)
    assert report.tau_g == pytest.approx(report.tau_d, rel=1e-12)
