"""evlab: a numerical laboratory for barrier tunneling delay times.

Closed-form coupled-mode analytics for photonic bandgap barriers, a
dispersion-free time-domain solver for the coupled-mode equations, quantum
rectangular-barrier delay analytics, and the delay-time algebra (dwell
time, flux delays, cavity lifetime) tying them together.
"""

from .cmt import (
    BarrierSpec,
    ScatterCoeffs,
    group_delay_closed,
    group_delay_fd,
    midgap_delay,
    propagation_gamma,
    reflection,
    resonance_detunings,
    scatter_coeffs,
    steady_fields,
    stored_energy,
    transmission,
)
from .delays import (
    DecayTrace,
    DelayReport,
    LifetimeEstimate,
    SimulationQualityError,
    cavity_lifetime,
    delay_report,
    dwell_time,
    flux_delays,
    q_factor,
    verify_sum_rules,
)
from .quantum import (
    QBarrierSpec,
    QDelayReport,
    QScatter,
)
from .tdsim import (
    FieldState,
    Grid,
    PulseReport,
    SourceSpec,
    TimeSeries,
    decay_experiment,
    pulse_experiment,
    simulate,
    snapshot,
    step_advance,
    stored_energy_of,
)

__version__ = "0.1.0"
