"""Atomic-frequency-comb absorption profiles and their complex transfer functions.

Frequencies are in MHz relative to the pulse carrier, times in microseconds,
so MHz * us = 1 and time/frequency grids are exact FFT conjugates.

Sign conventions used throughout the package: the spectrum of an envelope is
S(f) = integral E(t) exp(+2*pi*i*f*t) dt, so a delay by tau multiplies the
spectrum by exp(+2*pi*i*f*tau) and a causal response is analytic in the upper
half of the complex frequency plane.  The minimum-phase companion of an
absorption profile is then phi = Im[analytic_signal(-d/2)].
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import GridResolutionError, ValidationError

# Grid samples required across one tooth width when rendering a comb.
MIN_SAMPLES_PER_TOOTH = 16

# Conversion between a Gaussian tooth's peak OD and its contribution to the
# period-averaged OD: integral of exp(-f^2/2 sigma^2) over one period divided
# by the spacing, with FWHM = spacing / finesse.
GAUSSIAN_AREA_FACTOR = float(np.sqrt(2.0 * np.pi) / (2.0 * np.sqrt(2.0 * np.log(2.0))))


class ToothShape(str, Enum):
    SQUARE = "square"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid; 0 MHz is the pulse carrier.

    The conjugate time grid starts at 0 with dt = 1/span, so dt*df = 1/n_points.
    """

    span: float
    n_points: int
    center_frequency: float = 0.0

    def __post_init__(self):
        if self.span <= 0:
            raise ValidationError("grid span must be positive")
        n = self.n_points
        if n < 2 or (n & (n - 1)) != 0:
            raise ValidationError(f"n_points must be a power of two >= 2, got {n}")

    @property
    def df(self) -> float:
        return self.span / self.n_points

    @property
    def dt(self) -> float:
        return 1.0 / self.span

    @property
    def duration(self) -> float:
        return self.n_points * self.dt

    def frequencies(self) -> np.ndarray:
        """Ascending frequency axis (fftshift order relative to the FFT)."""
        n = self.n_points
        return self.center_frequency + (np.arange(n) - n // 2) * self.df

    def times(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dt

    def compatible(self, other: "FrequencyGrid") -> bool:
        return (
            self.n_points == other.n_points
            and abs(self.span - other.span) < 1e-12 * self.span
            and abs(self.center_frequency - other.center_frequency) < 1e-9
        )


@dataclass(frozen=True)
class CombSpec:
    """Parametric description of an AFC on a spectral window.

    peak_od is the tooth height above the background background_od; both are
    natural-log intensity ODs per pass (transmission = exp(-od)).
    """

    tooth_spacing: float          # MHz
    finesse: float                # spacing / tooth width
    tooth_shape: ToothShape = ToothShape.SQUARE
    peak_od: float = 0.0
    background_od: float = 0.0
    bandwidth: float = 10.0       # MHz, total comb extent
    center_offset: float = 0.0    # MHz, spectral shift of the whole comb

    def __post_init__(self):
        if self.tooth_spacing <= 0:
            raise ValidationError("tooth_spacing must be positive")
        if self.finesse < 1:
            raise ValidationError("comb finesse must be >= 1")
        if self.peak_od < 0 or self.background_od < 0:
            raise ValidationError("optical depths must be non-negative")
        if self.bandwidth <= 0:
            raise ValidationError("comb bandwidth must be positive")
        if not isinstance(self.tooth_shape, ToothShape):
            object.__setattr__(self, "tooth_shape", ToothShape(self.tooth_shape))

    @property
    def tooth_width(self) -> float:
        return self.tooth_spacing / self.finesse

    @property
    def storage_time(self) -> float:
        """AFC rephasing delay 1/spacing, in us."""
        return 1.0 / self.tooth_spacing

    def effective_depth(self) -> float:
        """Period-averaged OD implied by the parameters (comb + background)."""
        if self.tooth_shape is ToothShape.SQUARE:
            comb_part = self.peak_od / self.finesse
        else:
            comb_part = self.peak_od * GAUSSIAN_AREA_FACTOR / self.finesse
        return comb_part + self.background_od

    def with_peak_od(self, peak_od: float) -> "CombSpec":
        return replace(self, peak_od=peak_od)


def peak_od_for_depth(d_eff: float, finesse: float, shape: ToothShape,
                      background_od: float = 0.0) -> float:
    """Peak OD that renders a comb with the requested period-averaged OD."""
    comb_part = d_eff - background_od
    if comb_part < 0:
        raise ValidationError("target effective depth below background OD")
    shape = ToothShape(shape)
    if shape is ToothShape.SQUARE:
        return comb_part * finesse
    return comb_part * finesse / GAUSSIAN_AREA_FACTOR


@dataclass(frozen=True)
class AbsorptionProfile:
    """Optical depth alpha(f)*L sampled on a frequency grid."""

    grid: FrequencyGrid
    od: np.ndarray

    def __post_init__(self):
        od = np.asarray(self.od, dtype=float)
        if od.shape != (self.grid.n_points,):
            raise ValidationError("OD array does not match the grid")
        if not np.all(np.isfinite(od)) or np.any(od < 0):
            raise ValidationError("OD values must be finite and non-negative")
        object.__setattr__(self, "od", od)


@dataclass(frozen=True)
class TransferFunction:
    """Complex amplitude response H(f) on a frequency grid, |H| <= 1."""

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n_points,):
            raise ValidationError("transfer values do not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValidationError("transfer values must be finite")
        peak = np.max(np.abs(v))
        if peak > 1.0 + 1e-9:
            raise ValidationError(f"passive transfer function has |H|={peak:.3g} > 1")
        object.__setattr__(self, "values", v)

    def magnitude_squared(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def phase(self) -> np.ndarray:
        return np.unwrap(np.angle(self.values))

    def group_delay(self) -> np.ndarray:
        """d(arg H)/df / 2pi in us; positive means the response is delayed."""
        return np.gradient(self.phase(), self.grid.df) / (2.0 * np.pi)


def flat_profile(grid: FrequencyGrid, od: float) -> AbsorptionProfile:
    return AbsorptionProfile(grid, np.full(grid.n_points, float(od)))


def _square_teeth(f: np.ndarray, spec: CombSpec) -> np.ndarray:
    """Flat-top teeth with fractional cell coverage at the edges.

    Cell-averaged rendering keeps the period-averaged OD exact instead of
    quantizing each tooth width to whole grid cells.
    """
    df = f[1] - f[0]
    rel = (f - spec.center_offset) / spec.tooth_spacing
    k = np.round(rel)
    dist = np.abs(rel - k) * spec.tooth_spacing
    coverage = np.clip((spec.tooth_width / 2 - dist) / df + 0.5, 0.0, 1.0)
    # only teeth that fit entirely inside the comb band; partial edge teeth
    # would bias the period average
    inside = np.abs(k * spec.tooth_spacing) <= spec.bandwidth / 2 - spec.tooth_width / 2
    return coverage * inside


def _gaussian_teeth(f: np.ndarray, spec: CombSpec) -> np.ndarray:
    sigma = spec.tooth_width / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    rel = f - spec.center_offset
    k0 = np.round(rel / spec.tooth_spacing)
    out = np.zeros_like(f)
    for dk in range(-3, 4):  # tails beyond 3 teeth are < 1e-10 for finesse >= 1
        k = k0 + dk
        center = k * spec.tooth_spacing
        inside = np.abs(center) <= spec.bandwidth / 2 - spec.tooth_width / 2
        out += inside * np.exp(-((rel - center) ** 2) / (2.0 * sigma**2))
    return out


def build_comb_profile(spec: CombSpec, grid: FrequencyGrid, *,
                       pit_width: float = 18.0,
                       line_od: float = 0.0) -> AbsorptionProfile:
    """Render a comb inside a transparent spectral pit.

    Inside the comb bandwidth the OD is background_od plus teeth of height
    peak_od; the rest of the pit (total width pit_width, centered on the comb)
    is fully transparent; outside the pit the broad line absorbs with line_od.
    """
    if grid.df * MIN_SAMPLES_PER_TOOTH > spec.tooth_width:
        raise GridResolutionError(
            f"grid too coarse: df={grid.df:.3g} MHz gives fewer than "
            f"{MIN_SAMPLES_PER_TOOTH} samples per {spec.tooth_width:.3g} MHz tooth"
        )
    if spec.bandwidth > grid.span / 2:
        raise GridResolutionError(
            f"comb bandwidth {spec.bandwidth:.3g} MHz exceeds half the grid span"
        )
    if grid.span < 4.0 * spec.bandwidth:
        raise GridResolutionError(
            f"grid span {grid.span:.3g} MHz must cover at least 4x the comb bandwidth"
        )
    if line_od > 0 and pit_width < spec.bandwidth:
        raise ValidationError("spectral pit narrower than the comb bandwidth")

    f = grid.frequencies()
    if spec.tooth_shape is ToothShape.SQUARE:
        teeth = _square_teeth(f, spec)
    else:
        teeth = _gaussian_teeth(f, spec)

    in_band = np.abs(f - spec.center_offset) <= spec.bandwidth / 2
    od = spec.peak_od * teeth + spec.background_od * in_band
    if line_od > 0:
        outside_pit = np.abs(f - spec.center_offset) > pit_width / 2
        od = od + line_od * outside_pit
    return AbsorptionProfile(grid, od)


def comb_effective_depth(profile: AbsorptionProfile, spacing: float, *,
                         center: float = 0.0, n_periods: int = 1) -> float:
    """Period-averaged OD, (1/spacing) * integral of OD over whole periods.

    The integration window is anchored on inter-tooth midpoints around
    `center` so its endpoints sit in flat regions of the profile.  Samples
    are treated as cell averages (matching the comb renderer), so the sum is
    exact for square teeth and midpoint-accurate for smooth shapes.
    """
    if spacing <= 0:
        raise ValidationError("spacing must be positive")
    grid = profile.grid
    f = grid.frequencies()
    df = grid.df
    half = (n_periods / 2.0) * spacing
    lo, hi = center - half, center + half
    if lo < f[0] - df / 2 or hi > f[-1] + df / 2:
        raise ValidationError("integration period not contained in the grid")
    cell_lo = f - df / 2
    cell_hi = f + df / 2
    overlap = np.clip(np.minimum(cell_hi, hi) - np.maximum(cell_lo, lo), 0.0, df)
    integral = float(np.dot(profile.od, overlap))
    return integral / (n_periods * spacing)


def _apodize(od: np.ndarray, fraction: float = 0.05) -> np.ndarray:
    """Blend the outer `fraction` of the profile to its edge values.

    Raised-cosine rolloff suppresses wrap-around artifacts in the discrete
    Hilbert transform; it is affine in the profile so Hilbert linearity holds.
    """
    n = od.size
    m = max(int(n * fraction), 2)
    out = od.astype(float).copy()
    ramp = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, m)))  # 0 at edge -> 1 inside
    out[:m] = od[0] + (od[:m] - od[0]) * ramp
    out[n - m:] = od[-1] + (od[n - m:] - od[-1]) * ramp[::-1]
    return out


def kramers_kronig_phase(profile: AbsorptionProfile) -> np.ndarray:
    """Minimum-phase companion of the attenuation -d(f)/2.

    Returns phi(f) such that exp(-d/2 + i*phi) is a causal response: its
    impulse response vanishes for t < 0 under the package sign conventions.
    """
    od = profile.od
    if not np.all(np.isfinite(od)):
        raise ValidationError("OD profile contains non-finite values")
    log_mag = -_apodize(od) / 2.0
    n = log_mag.size
    spectrum = np.fft.fft(np.fft.ifftshift(log_mag))
    keep = np.zeros(n)
    keep[0] = 1.0
    keep[1:n // 2] = 2.0
    keep[n // 2] = 1.0
    analytic = np.fft.ifft(spectrum * keep)
    return np.fft.fftshift(analytic.imag)


def single_pass_transfer(profile: AbsorptionProfile) -> TransferFunction:
    """H(f) = exp(-d/2 + i*phi) with the Kramers-Kronig phase, so |H| = e^{-d/2}."""
    phi = kramers_kronig_phase(profile)
    values = np.exp(-profile.od / 2.0 + 1j * phi)
    return TransferFunction(profile.grid, values)


def unity_transfer(grid: FrequencyGrid) -> TransferFunction:
    return TransferFunction(grid, np.ones(grid.n_points, dtype=complex))
