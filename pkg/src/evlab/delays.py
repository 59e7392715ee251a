"""Delay-time algebra: dwell time, flux delays, sum rules, cavity Q and
lifetime extraction from decay traces.

For a lossless symmetric barrier the group delay, the dwell time U/P_i and
the cavity lifetime are one and the same quantity; the helpers here compute
each from its own definition so the identities can be verified rather than
assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cmt
from .cmt import BarrierSpec

__all__ = [
    "SimulationQualityError",
    "DelayReport",
    "DecayTrace",
    "LifetimeEstimate",
    "dwell_time",
    "flux_delays",
    "verify_sum_rules",
    "cavity_lifetime",
    "q_factor",
    "delay_report",
]


class SimulationQualityError(RuntimeError):
    """A simulation or trace does not meet the quality its consumer needs
    (steady state not reached, trace too short, ...)."""


@dataclass(frozen=True)
class DelayReport:
    """All delay quantities at one detuning.

    tau_t and tau_r are the times to drain the stored energy through the
    transmission or reflection channel alone; a channel with zero flux
    carries an infinite flux delay (serialized as the CSV field ``inf``).
    """

    tau_g: float
    tau_d: float
    tau_t: float
    tau_r: float
    tau_c: float
    tau_0: float
    T2: float
    R2: float


@dataclass(frozen=True)
class DecayTrace:
    """Stored energy after source turn-off.

    ``energy`` is U(t) normalized by tau_g * P_i, so a trace that starts
    from steady state reads 1 at ``t_off`` up to solver accuracy and is
    non-increasing afterwards.
    """

    times: np.ndarray
    energy: np.ndarray
    t_off: float


@dataclass(frozen=True)
class LifetimeEstimate:
    """1/e crossing time (primary) plus an early-phase exponential-fit
    rate over the first decade down to 1/e (secondary)."""

    tau_c: float
    tau_fit: float


def dwell_time(stored_energy: float, incident_power: float) -> float:
    """Dwell time U/P_i: stored energy per unit incident power."""
    if incident_power <= 0:
        raise ValueError("incident_power must be positive")
    if stored_energy < 0:
        raise ValueError("stored_energy must be >= 0")
    return stored_energy / incident_power


def flux_delays(tau_d: float, T2: float, R2: float) -> tuple[float, float]:
    """Flux delays (tau_t, tau_r) = (tau_d/T2, tau_d/R2).

    A vanishing channel (T2 == 0 or R2 == 0) yields an infinite delay for
    that channel rather than an error; 1/tau_t + 1/tau_r = 1/tau_d holds
    identically.
    """
    if T2 < 0 or R2 < 0:
        raise ValueError("T2 and R2 must be >= 0")
    if abs(T2 + R2 - 1.0) > 1e-9:
        raise ValueError("T2 + R2 must equal 1 for a lossless barrier")
    tau_t = tau_d / T2 if T2 > 0 else math.inf
    tau_r = tau_d / R2 if R2 > 0 else math.inf
    return tau_t, tau_r


def verify_sum_rules(report: DelayReport) -> dict[str, float]:
    """Relative residuals of the delay identities for one report.

    Returns
    -------
    dict with entries
        ``flux_fraction_sum``  : |tau_g/tau_r + tau_g/tau_t - 1|
        ``escape_rate_sum``    : |1/tau_g - 1/tau_r - 1/tau_t| * tau_g
        ``group_vs_dwell``     : |tau_g - tau_d| / tau_d
        ``weighted_flux_rule`` : |R2*tau_g + T2*tau_g - tau_d| / tau_d
        ``reciprocal_rule``    : |1/tau_t + 1/tau_r - 1/tau_d| * tau_d

    Residuals are reported, not asserted; the caller decides tolerances.
    For the symmetric barrier the reflection and transmission group delays
    coincide with tau_g, which is what the first two rules assume.
    """
    inv_t = 0.0 if math.isinf(report.tau_t) else 1.0 / report.tau_t
    inv_r = 0.0 if math.isinf(report.tau_r) else 1.0 / report.tau_r
    return {
        "flux_fraction_sum": abs(report.tau_g * inv_r + report.tau_g * inv_t - 1.0),
        "escape_rate_sum": abs(1.0 / report.tau_g - inv_r - inv_t) * report.tau_g,
        "group_vs_dwell": abs(report.tau_g - report.tau_d) / report.tau_d,
        "weighted_flux_rule": abs(report.R2 * report.tau_g + report.T2 * report.tau_g
                                  - report.tau_d) / report.tau_d,
        "reciprocal_rule": abs(inv_t + inv_r - 1.0 / report.tau_d) * report.tau_d,
    }


def cavity_lifetime(trace: DecayTrace) -> LifetimeEstimate:
    """Extract the 1/e lifetime of stored energy from a decay trace.

    The primary estimate is the first time U(t)/U(t_off) crosses 1/e,
    located by linear interpolation in log(U); it is exact on a pure
    exponential and independent of how the energy axis is normalized.  The
    secondary estimate is -1/slope of a least-squares line through
    log(U) over the samples between turn-off and the crossing.

    Raises
    ------
    SimulationQualityError
        If the trace never reaches the 1/e level (simulation too short).
    """
    times = np.asarray(trace.times, dtype=float)
    energy = np.asarray(trace.energy, dtype=float)
    if times.ndim != 1 or times.shape != energy.shape or times.size < 3:
        raise ValueError("trace needs matching 1-D times/energy with >= 3 samples")
    if not (times[0] <= trace.t_off <= times[-1]):
        raise ValueError("t_off must lie within the trace")
    i0 = int(np.searchsorted(times, trace.t_off))
    u_ref = energy[i0]
    if u_ref <= 0:
        raise ValueError("energy at turn-off must be positive")
    ratio = energy[i0:] / u_ref
    tt = times[i0:] - times[i0]
    level = 1.0 / math.e
    below = np.nonzero(ratio <= level)[0]
    if below.size == 0 or below[0] == 0:
        raise SimulationQualityError(
            "trace does not reach the 1/e level; extend the simulation"
        )
    k = below[0]
    log_hi = math.log(ratio[k - 1])
    log_lo = math.log(ratio[k])
    frac = (log_hi - math.log(level)) / (log_hi - log_lo)
    tau_c = tt[k - 1] + frac * (tt[k] - tt[k - 1])
    # early-phase fit: all samples from turn-off down to the crossing
    sel = slice(0, k + 1)
    design = np.vstack([tt[sel], np.ones(k + 1)]).T
    slope = np.linalg.lstsq(design, np.log(ratio[sel]), rcond=None)[0][0]
    tau_fit = -1.0 / slope if slope < 0 else math.inf
    return LifetimeEstimate(tau_c=float(tau_c), tau_fit=float(tau_fit))


def q_factor(spec: BarrierSpec, omega: float) -> float:
    """Quality factor Q = omega_carrier * U / P_i at steady state.

    With the escaping power equal to the incident power at steady state,
    Q/omega_carrier is the cavity lifetime, which equals the dwell time.
    """
    tau_d = cmt.stored_energy(spec, omega, 1.0)
    return (spec.omega_B + omega) * tau_d


def delay_report(spec: BarrierSpec, omega: float) -> DelayReport:
    """Assemble the full delay bookkeeping at one detuning."""
    coeffs = cmt.scatter_coeffs(spec, omega)
    T2 = abs(coeffs.T) ** 2
    R2 = abs(coeffs.R) ** 2
    tau_d = dwell_time(cmt.stored_energy(spec, omega, 1.0), 1.0)
    tau_t, tau_r = flux_delays(tau_d, T2, R2)
    return DelayReport(
        tau_g=cmt.group_delay_closed(spec, omega),
        tau_d=tau_d,
        tau_t=tau_t,
        tau_r=tau_r,
        tau_c=q_factor(spec, omega) / (spec.omega_B + omega),
        tau_0=spec.tau0,
        T2=T2,
        R2=R2,
    )
