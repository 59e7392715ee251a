"""Quantum rectangular barrier: amplitudes and delay identities.

The independent oracle is direct numerical integration of the stationary
equation (``integrate_stationary``), which shares no algebra with the
transfer-matrix closed forms.  The below-barrier dwell time additionally
has an exact closed form from analytic integration of |psi|^2, hard-coded
here for one reference point.
"""

import cmath
import math

import numpy as np
import pytest

from evlab import quantum
from evlab.quantum import (QBarrierSpec, delay_report, dwell_time, group_delay,
                           integrate_stationary, packet_ratio, scatter,
                           self_interference_delay, sum_rule_residual,
                           wavefunction)


def closed_form_dwell(spec: QBarrierSpec, energy: float) -> float:
    """Analytic below-barrier dwell time (real evanescent q only)."""
    k = spec.wavenumber(energy)
    q = math.sqrt(spec.evanescent_sq(energy))
    s, c = math.sinh(q * spec.length_L), math.cosh(q * spec.length_L)
    w = (2 * k * k / q) * (q * spec.length_L * (q * q - k * k)
                           + (q * q + k * k) * s * c) \
        / (4 * k * k * q * q + (q * q + k * k) ** 2 * s * s)
    return w / spec.velocity(energy)


def test_spec_validation():
    with pytest.raises(ValueError):
        QBarrierSpec(v0=0.0, length_L=1.0)
    with pytest.raises(ValueError):
        QBarrierSpec(v0=1.0, length_L=-1.0)
    spec = QBarrierSpec(v0=1.0, length_L=2.0)
    with pytest.raises(ValueError):
        spec.wavenumber(0.0)


def test_scatter_no_barrier_limit():
    spec = QBarrierSpec(v0=1e-13, length_L=2.0)
    sc = scatter(spec, 0.5)
    assert abs(sc.T) == pytest.approx(1.0, abs=1e-10)
    assert abs(sc.R) < 1e-10
    # T carries the free-propagation phase exp(ikL)
    assert sc.T == pytest.approx(cmath.exp(1j * sc.k * 2.0), abs=1e-10)


def test_scatter_classical_limit():
    spec = QBarrierSpec(v0=1.0, length_L=2.0)
    assert abs(scatter(spec, 400.0).T) == pytest.approx(1.0, abs=1e-3)


def test_scatter_reference_transmission():
    # E = V0/2 with qL = 4: textbook magnitude, evaluated in the test
    spec = QBarrierSpec(v0=1.0, length_L=4.0)
    energy = 0.5
    k = math.sqrt(2 * energy)
    q = math.sqrt(2 * (1.0 - energy))
    eps = (q * q - k * k) / (2 * k * q)
    expected = 1.0 / (math.cosh(q * 4.0) ** 2 + eps**2 * math.sinh(q * 4.0) ** 2)
    assert abs(scatter(spec, energy).T) ** 2 == pytest.approx(expected, rel=1e-12)


def test_flux_conservation_dense_grid():
    for v0 in (0.25, 1.0, 4.0, 16.0):
        for frac in (0.05, 0.3, 0.5, 0.8, 0.999, 1.0, 1.001, 1.5, 3.0):
            for length in (0.3, 1.0, 3.0, 8.0):
                sc = scatter(QBarrierSpec(v0=v0, length_L=length), frac * v0)
                assert abs(abs(sc.R) ** 2 + abs(sc.T) ** 2 - 1.0) < 1e-12


def test_wavefunction_matches_boundary_values():
    spec = QBarrierSpec(v0=1.0, length_L=3.0)
    for energy in (0.3, 1.0, 1.7):
        sc = scatter(spec, energy)
        assert wavefunction(spec, energy, 0.0) == pytest.approx(1.0 + sc.R, rel=1e-12)
        assert wavefunction(spec, energy, spec.length_L) == pytest.approx(sc.T, rel=1e-12)
    with pytest.raises(ValueError):
        wavefunction(spec, 0.5, 3.5)


def test_amplitudes_against_stationary_integration():
    # 25 parameter points spanning below, at and above the barrier
    v0s = (0.5, 1.0, 2.0, 4.0, 8.0)
    fracs = (0.25, 0.5, 0.8, 1.0, 1.6)
    lengths = (0.8, 1.6, 2.4, 3.2, 4.0)
    worst = 0.0
    for i, v0 in enumerate(v0s):
        for j, frac in enumerate(fracs):
            spec = QBarrierSpec(v0=v0, length_L=lengths[(i + j) % 5])
            energy = frac * v0
            sc = scatter(spec, energy)
            r_ode, t_ode, w_ode = integrate_stationary(spec, energy)
            worst = max(worst, abs(sc.R - r_ode), abs(sc.T - t_ode))
            tau_ode = w_ode / spec.velocity(energy)
            worst = max(worst, abs(dwell_time(spec, energy) - tau_ode) / tau_ode)
    assert worst < 1e-8


def test_dwell_time_free_limit():
    spec = QBarrierSpec(v0=1e-13, length_L=2.0)
    energy = 0.5
    assert dwell_time(spec, energy) == pytest.approx(
        2.0 / spec.velocity(energy), rel=1e-9)


def test_dwell_time_closed_form_reference():
    spec = QBarrierSpec(v0=1.0, length_L=4.0)  # E = V0/2, qL = 4
    assert dwell_time(spec, 0.5) == pytest.approx(closed_form_dwell(spec, 0.5),
                                                  rel=1e-10)
    # at E = V0/2 the closed form collapses to tanh(qL)/(k v_p)
    k = math.sqrt(1.0)
    assert closed_form_dwell(spec, 0.5) == pytest.approx(
        math.tanh(4.0) / (k * k), rel=1e-12)


def test_dwell_time_saturates_with_length():
    spec_a = QBarrierSpec(v0=1.0, length_L=10.0)
    spec_b = QBarrierSpec(v0=1.0, length_L=20.0)
    tau_a = dwell_time(spec_a, 0.5)
    tau_b = dwell_time(spec_b, 0.5)
    assert abs(tau_b - tau_a) / tau_a < 1e-4


def test_group_delay_free_limit():
    spec = QBarrierSpec(v0=1e-13, length_L=2.0)
    assert group_delay(spec, 0.5) == pytest.approx(2.0 / spec.velocity(0.5),
                                                   rel=1e-6)


def test_group_delay_hartman_saturation():
    # E = V0/2: tau_g -> 2/(q v_p), independent of L
    v0 = 1.0
    q = math.sqrt(2 * 0.5)
    v_p = math.sqrt(2 * 0.5)
    limit = 2.0 / (q * v_p)
    for q_l in (6.0, 8.0, 12.0):
        length = q_l / q
        tau_1 = group_delay(QBarrierSpec(v0=v0, length_L=length), 0.5)
        tau_2 = group_delay(QBarrierSpec(v0=v0, length_L=2 * length), 0.5)
        assert abs(tau_2 - tau_1) / tau_1 < 0.01
    assert group_delay(QBarrierSpec(v0=v0, length_L=12.0), 0.5) == pytest.approx(
        limit, rel=1e-6)


def test_group_delay_continuous_in_energy():
    spec = QBarrierSpec(v0=1.0, length_L=3.0)
    energies = np.linspace(0.1, 3.0, 241)
    taus = np.array([group_delay(spec, float(e)) for e in energies])
    assert np.all(np.isfinite(taus))
    assert np.max(np.abs(np.diff(taus))) < 1.0  # no unwrapping jumps


def test_continuity_across_barrier_top():
    spec = QBarrierSpec(v0=1.0, length_L=3.0)
    t_top = scatter(spec, 1.0).T
    expected = 1.0 / (1.0 - 1j * spec.wavenumber(1.0) * 3.0 / 2.0)
    assert t_top == pytest.approx(expected, rel=1e-12)
    for eps in (-1e-9, 1e-9):
        sc = scatter(spec, 1.0 + eps)
        assert abs(sc.T - t_top) / abs(t_top) < 1e-6
        assert abs(group_delay(spec, 1.0 + eps) - group_delay(spec, 1.0)) \
            / group_delay(spec, 1.0) < 1e-6


def test_self_interference_delay():
    spec0 = QBarrierSpec(v0=1e-13, length_L=2.0)
    assert self_interference_delay(spec0, 0.5) == pytest.approx(0.0, abs=1e-10)
    # generalized rule at E = V0/2, qL = 4: tau_i = tau_g - tau_d
    spec = QBarrierSpec(v0=1.0, length_L=4.0)
    tau_i = self_interference_delay(spec, 0.5)
    assert tau_i == pytest.approx(group_delay(spec, 0.5) - dwell_time(spec, 0.5),
                                  rel=1e-6)
    assert tau_i > 0


def test_self_interference_dominates_at_low_energy():
    spec = QBarrierSpec(v0=1.0, length_L=2.0)
    fractions = np.array([0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 0.9])
    ratios = np.array([self_interference_delay(spec, f) / dwell_time(spec, f)
                       for f in fractions])
    assert ratios[0] > 100.0
    assert np.all(np.diff(ratios) < 0)
    # crossover tau_i = tau_d sits at E = V0/2, where k = q by symmetry
    assert ratios[5] == pytest.approx(1.0, rel=1e-9)
    assert ratios[-1] < 1.0


def test_sum_rule_grid():
    worst = 0.0
    for v0 in np.geomspace(0.25, 8.0, 10):
        for frac in np.linspace(0.05, 0.95, 10):
            spec = QBarrierSpec(v0=float(v0), length_L=2.0)
            worst = max(worst, sum_rule_residual(spec, float(frac * v0)))
    assert worst < 1e-6


def test_sum_rule_above_barrier():
    spec = QBarrierSpec(v0=1.0, length_L=2.0)
    for energy in (1.2, 2.0, 5.0):
        assert sum_rule_residual(spec, energy) < 1e-6


def test_sum_rule_no_barrier():
    assert sum_rule_residual(QBarrierSpec(v0=1e-12, length_L=2.0), 0.5) < 1e-9


def test_packet_ratio():
    spec = QBarrierSpec(v0=1.0, length_L=10.0)  # opaque at E = V0/2
    ratio_t, ratio_x = packet_ratio(spec, 0.5, 0.01)
    assert ratio_t == ratio_x
    # of order delta_E / V0 (the symmetric point carries a factor 2)
    assert 0.005 < ratio_t < 0.05
    assert ratio_t == pytest.approx(2.0 * 0.01, rel=1e-3)
    small_t, _ = packet_ratio(spec, 0.5, 1e-6)
    assert small_t == pytest.approx(ratio_t * 1e-4, rel=1e-6)
    with pytest.raises(ValueError):
        packet_ratio(spec, 0.5, 1.5)
    with pytest.raises(ValueError):
        packet_ratio(spec, 0.5, 0.0)


def test_delay_report():
    spec = QBarrierSpec(v0=1.0, length_L=4.0)
    report = delay_report(spec, 0.5, delta_e=0.01)
    assert report.tau_d_tilde == pytest.approx(report.tau_d + report.tau_i)
    assert report.tau_g == pytest.approx(report.tau_d_tilde, rel=1e-6)
    assert report.ratio_check == pytest.approx(report.tau_g * 0.01, rel=1e-12)
    assert delay_report(spec, 0.5).ratio_check is None


def test_physical_units_round_trip():
    # hbar = m = 1 results scale correctly to physical constants
    base = QBarrierSpec(v0=1.0, length_L=4.0)
    hbar, mass = 1.054e-34, 9.109e-31
    energy_scale = 1.602e-19
    length_scale = hbar / math.sqrt(2 * mass * energy_scale)
    phys = QBarrierSpec(v0=energy_scale, length_L=4.0 * length_scale,
                        mass=mass, hbar=hbar)
    time_scale = hbar / energy_scale
    assert group_delay(phys, 0.5 * energy_scale) / time_scale == pytest.approx(
        group_delay(base, 0.5), rel=1e-5)
