"""Series-guarded elementary functions used by the barrier models.

All of these are even in their argument, so they are safe to evaluate on
either branch of a complex square root.  Below |x| = 0.05 the direct
formulas lose digits to cancellation and a Taylor form takes over; at the
switch point the two branches agree to better than 1e-12.
"""

from __future__ import annotations

import numpy as np

_CUTOFF = 0.05


def _split_eval(x, series, direct):
    x = np.asarray(x)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = np.abs(x) < _CUTOFF
    if small.any():
        out[small] = series(x[small])
    if (~small).any():
        out[~small] = direct(x[~small])
    return out[0] if scalar else out


def sinhc(x):
    """sinh(x)/x with the removable singularity at x = 0 filled in."""
    return _split_eval(
        x,
        lambda s: 1.0 + s * s / 6.0 + s**4 / 120.0 + s**6 / 5040.0,
        lambda b: np.sinh(b) / b,
    )


def tanhc(x):
    """tanh(x)/x with the removable singularity at x = 0 filled in."""
    return _split_eval(
        x,
        lambda s: 1.0 - s * s / 3.0 + 2.0 * s**4 / 15.0 - 17.0 * s**6 / 315.0,
        lambda b: np.tanh(b) / b,
    )


def tanhc_residual(x):
    """(tanh(x)/x - 1) / x**2, finite at x = 0 (limit -1/3)."""
    return _split_eval(
        x,
        lambda s: -1.0 / 3.0 + 2.0 * s * s / 15.0 - 17.0 * s**4 / 315.0
        + 62.0 * s**6 / 2835.0,
        lambda b: (np.tanh(b) / b - 1.0) / (b * b),
    )


def sech2_residual(x):
    """(sech(x)**2 - 1) / x**2, finite at x = 0 (limit -1)."""
    return _split_eval(
        x,
        lambda s: -1.0 + 2.0 * s * s / 3.0 - 17.0 * s**4 / 45.0
        + 62.0 * s**6 / 315.0,
        lambda b: (1.0 / np.cosh(b) ** 2 - 1.0) / (b * b),
    )


def real_checked(z, rel_tol: float = 1e-10):
    """Return the real part of ``z`` after asserting the imaginary residue
    is below ``rel_tol`` relative to |z|.

    Observables computed through the complex-arithmetic code path must come
    out real; a larger residue indicates a formula bug, not roundoff.
    """
    z = np.asarray(z)
    scale = np.maximum(np.abs(z), 1e-300)
    bad = np.abs(np.imag(z)) > rel_tol * scale
    if np.any(bad):
        worst = np.max(np.abs(np.imag(z)) / scale)
        raise ArithmeticError(
            f"imaginary residue {worst:.3e} exceeds {rel_tol:.1e} on a real observable"
        )
    out = np.real(z)
    return float(out) if out.ndim == 0 else out
