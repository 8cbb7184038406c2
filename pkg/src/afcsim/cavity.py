"""Asymmetric two-mirror resonator around the absorbing crystal.

The crystal is crossed twice per round trip, so the round-trip response is
M(f) = sqrt(1-eps) * H(f)^2 * exp(2*pi*i*(f - offset)*T_rt) with H the
single-pass medium transfer function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .errors import GridMismatchError, NoResonanceError, ValidationError
from .medium import FrequencyGrid, TransferFunction


@dataclass(frozen=True)
class CavitySpec:
    """Mirror reflectivities (intensity), lumped round-trip loss and timing."""

    r_in: float                    # input-mirror intensity reflectivity
    r_out: float                   # back-mirror intensity reflectivity
    round_trip_loss: float = 0.0   # intensity fraction, excludes medium OD
    round_trip_time: float = 0.003  # us
    resonance_offset: float = 0.0  # MHz, bare-cavity detuning from grid center

    def __post_init__(self):
        if not (0.0 <= self.r_in <= 1.0 and 0.0 <= self.r_out <= 1.0):
            raise ValidationError("mirror reflectivities must lie in [0, 1]")
        if not (0.0 <= self.round_trip_loss < 1.0):
            raise ValidationError("round_trip_loss must lie in [0, 1)")
        if self.round_trip_time <= 0:
            raise ValidationError("round_trip_time must be positive")


@dataclass(frozen=True)
class LinewidthReport:
    fwhm: float                   # MHz
    resonance_frequency: float    # MHz
    group_delay_at_center: float  # us (round-trip group delay when known)
    effective_fsr: float          # MHz

    def __post_init__(self):
        if self.fwhm <= 0:
            raise ValidationError("fwhm must be positive")


def check_impedance(r_in: float, r_out: float, loss: float, d_eff: float) -> float:
    """Signed matching residual R_in - (R_out - eps) * exp(-2*d_eff).

    Zero means impedance matched; negative means over-coupled.
    """
    return r_in - (r_out - loss) * np.exp(-2.0 * d_eff)


def _round_trip(medium: TransferFunction, cav: CavitySpec) -> np.ndarray:
    f = medium.grid.frequencies()
    loss_amp = np.sqrt(1.0 - cav.round_trip_loss)
    detuning_phase = 2.0 * np.pi * (f - cav.resonance_offset) * cav.round_trip_time
    return loss_amp * medium.values**2 * np.exp(1j * detuning_phase)


def round_trip_phase(medium: TransferFunction, cav: CavitySpec) -> np.ndarray:
    """Unwrapped round-trip phase 2*arg(H) + 2*pi*(f - offset)*T_rt."""
    f = medium.grid.frequencies()
    return 2.0 * medium.phase() + 2.0 * np.pi * (f - cav.resonance_offset) * cav.round_trip_time


def _check_grids(medium: TransferFunction, grid: FrequencyGrid):
    if not medium.grid.compatible(grid):
        raise GridMismatchError("medium and cavity grids differ")


def cavity_reflection(medium: TransferFunction, cav: CavitySpec) -> TransferFunction:
    """Loaded-cavity reflection r(f); r -> 0 on resonance at impedance match."""
    m = _round_trip(medium, cav)
    r1 = np.sqrt(cav.r_in)
    r2 = np.sqrt(cav.r_out)
    denom_min = 1.0 - np.max(np.abs(r1 * r2 * m))
    if denom_min < 1e-12:
        raise ValidationError("lossless closed cavity: round-trip gain reaches 1")
    values = (-r1 + r2 * m) / (1.0 - r1 * r2 * m)
    return TransferFunction(medium.grid, values)


def cavity_transmission(medium: TransferFunction, cav: CavitySpec) -> TransferFunction:
    """Loaded-cavity transmission t(f); with no loss |r|^2 + |t|^2 = 1."""
    m = _round_trip(medium, cav)
    r1 = np.sqrt(cav.r_in)
    r2 = np.sqrt(cav.r_out)
    denom = 1.0 - r1 * r2 * m
    if 1.0 - np.max(np.abs(r1 * r2 * m)) < 1e-12:
        raise ValidationError("lossless closed cavity: round-trip gain reaches 1")
    # single pass through the cavity: sqrt of the round-trip amplitude/phase
    half_phase = 0.5 * round_trip_phase(medium, cav)
    single = np.sqrt(np.abs(m)) * np.exp(1j * half_phase)
    values = np.sqrt((1.0 - cav.r_in) * (1.0 - cav.r_out)) * single / denom
    return TransferFunction(medium.grid, values)


def _half_crossing(freqs, mag, i0, half, direction):
    """Walk from i0 in +-1 direction to the first half-level crossing."""
    i = i0
    n = mag.size
    while 0 < i < n - 1:
        j = i + direction
        a, b = mag[i], mag[j]
        if (a - half) * (b - half) <= 0 and a != b:
            frac = (half - a) / (b - a)
            return freqs[i] + frac * (freqs[j] - freqs[i])
        i = j
    return None


def resonance_linewidth(tf: TransferFunction, *,
                        round_trip_phase_values: np.ndarray | None = None) -> LinewidthReport:
    """Locate the resonance nearest the grid center and measure its FWHM.

    Half-maximum crossings are bracketed with linear interpolation, which
    stays robust for the asymmetric lineshapes dispersion produces.  When the
    unwrapped round-trip phase is supplied, the group delay and effective
    free spectral range come from its slope at resonance; otherwise they are
    estimated from the transfer function's own phase.
    """
    freqs = tf.grid.frequencies()
    mag = tf.magnitude_squared()
    lo, hi = float(np.min(mag)), float(np.max(mag))
    if hi - lo < 1e-9:
        raise NoResonanceError("transfer function is flat: no resonance found")

    # most samples sit on the baseline, so the median tells dips from peaks
    if np.median(mag) > 0.5 * (hi + lo):
        signal, kind = hi - mag, "dip"
    else:
        signal, kind = mag - lo, "peak"
    idx, _ = find_peaks(signal, prominence=0.5 * (hi - lo))
    if not idx.size:
        raise NoResonanceError("no resonance feature with sufficient prominence")

    center = tf.grid.center_frequency
    i0 = int(idx[np.argmin(np.abs(freqs[idx] - center))])
    if kind == "dip":
        half = 0.5 * (mag[i0] + hi)  # half depth below the baseline
    else:
        half = 0.5 * mag[i0]  # absolute half maximum, the Fabry-Perot convention
        if lo >= half:
            raise NoResonanceError("peak contrast too low for a half-maximum width")
    left = _half_crossing(freqs, mag, i0, half, -1)
    right = _half_crossing(freqs, mag, i0, half, +1)
    if left is None or right is None:
        raise NoResonanceError("resonance half-maximum crossings leave the grid")
    fwhm = right - left
    f_res = float(freqs[i0])

    df = tf.grid.df
    if round_trip_phase_values is not None:
        slope = np.gradient(np.asarray(round_trip_phase_values, dtype=float), df)
        t_group = slope[i0] / (2.0 * np.pi)
        if t_group <= 0:
            raise ValidationError("non-positive round-trip group delay at resonance")
        effective_fsr = 1.0 / t_group
        group_delay = t_group
    else:
        # filter delay at resonance plus the Airy relation rho = (pi*t_d*fwhm)^2
        phase = tf.phase()
        t_d = float(np.gradient(phase, df)[i0] / (2.0 * np.pi))
        rho = min(max((np.pi * t_d * fwhm) ** 2, 0.0), 1.0 - 1e-9)
        finesse = np.pi * np.sqrt(rho) / (1.0 - rho) if rho > 0 else 1.0
        effective_fsr = max(finesse, 1.0 + 1e-9) * fwhm
        group_delay = t_d
    return LinewidthReport(fwhm=float(fwhm), resonance_frequency=f_res,
                           group_delay_at_center=float(group_delay),
                           effective_fsr=float(effective_fsr))
