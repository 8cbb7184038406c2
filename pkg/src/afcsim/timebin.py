"""Time-bin qubit storage and analysis.

The analyzer is a second comb whose rephasing delay equals the bin
separation, acting as an unbalanced interferometer: the transmitted field is
the short arm and the comb echo the long arm.  Shifting the comb's spectral
position by s multiplies the echo arm by exp(-2*pi*i*s/spacing); that phase
is what the fringe scan records and fits.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import BalanceError, ValidationError
from .medium import CombSpec, FrequencyGrid, TransferFunction, build_comb_profile, single_pass_transfer
from .propagation import PulseEnvelope, make_gaussian_pulse, propagate


@dataclass(frozen=True)
class TimeBinQubit:
    """Normalized early/late superposition with resolvable Gaussian bins."""

    amp_early: complex
    amp_late: complex
    bin_separation: float = 1.0   # us
    pulse_fwhm: float = 0.51      # us
    mu: float = 0.25

    def __post_init__(self):
        norm = abs(self.amp_early) ** 2 + abs(self.amp_late) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError("qubit amplitudes must be normalized")
        if self.bin_separation <= self.pulse_fwhm:
            raise ValidationError("bins are not resolvable: separation <= pulse fwhm")
        if self.mu < 0:
            raise ValidationError("mean photon number must be non-negative")

    @property
    def relative_phase(self) -> float:
        if self.amp_early == 0 or self.amp_late == 0:
            return 0.0
        return float(cmath.phase(self.amp_late / self.amp_early))

    @classmethod
    def equatorial(cls, delta: float, **kwargs) -> "TimeBinQubit":
        return cls(amp_early=1.0 / np.sqrt(2.0),
                   amp_late=np.exp(1j * delta) / np.sqrt(2.0), **kwargs)

    @classmethod
    def early(cls, **kwargs) -> "TimeBinQubit":
        return cls(amp_early=1.0, amp_late=0.0, **kwargs)

    @classmethod
    def late(cls, **kwargs) -> "TimeBinQubit":
        return cls(amp_early=0.0, amp_late=1.0, **kwargs)


@dataclass(frozen=True)
class FringeScan:
    phases: np.ndarray            # rad, analyzer phase per point
    p_detect: np.ndarray          # detection probability per trial
    stderr: np.ndarray            # standard error per point (zeros if noiseless)
    visibility: float
    phase_offset: float           # rad
    amplitude: float              # fitted mean level A
    visibility_stderr: float | None = None

    def __post_init__(self):
        for name in ("phases", "p_detect", "stderr"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.p_detect < -1e-12) or np.any(self.p_detect > 1.0 + 1e-9):
            raise ValidationError("detection probabilities must lie in [0, 1]")
        if not 0.0 <= self.visibility <= 1.0 + 1e-12:
            raise ValidationError("visibility must lie in [0, 1]")


@dataclass(frozen=True)
class FidelityReport:
    v_coh: float
    f_coh: float
    f_pole: float
    f_total: float
    f_threshold: float
    passes_quantum_bound: bool


def make_timebin_qubit(qubit: TimeBinQubit, grid: FrequencyGrid,
                       early_time: float) -> PulseEnvelope:
    """Two Gaussian pulses with the qubit's amplitudes, total photon number mu."""
    early = make_gaussian_pulse(qubit.pulse_fwhm, early_time, 1.0, 0.0, grid)
    late = make_gaussian_pulse(qubit.pulse_fwhm, early_time + qubit.bin_separation,
                               1.0, 0.0, grid)
    values = qubit.amp_early * early.values + qubit.amp_late * late.values
    energy = np.sum(np.abs(values) ** 2) * grid.dt
    if qubit.mu > 0 and energy > 0:
        values = values * np.sqrt(qubit.mu / energy)
    else:
        values = np.zeros_like(values)
    return PulseEnvelope(grid, values, qubit.mu if energy > 0 else 0.0)


def snap_shift(spectral_shift: float, grid: FrequencyGrid) -> float:
    """Round a spectral shift to whole grid cells.

    A whole-cell shift renders the comb as an exact circular translation, so
    the echo arm picks up exactly exp(-2*pi*i*shift/spacing) with no
    rasterization jitter; the snapped value is what gets recorded.
    """
    return round(spectral_shift / grid.df) * grid.df


def analyzer_transfer(filter_comb: CombSpec, spectral_shift: float,
                      grid: FrequencyGrid, *,
                      bin_separation: float | None = None) -> TransferFunction:
    """Single-pass transfer of the filter comb shifted by `spectral_shift` MHz."""
    if bin_separation is not None:
        delay = filter_comb.storage_time
        if abs(delay - bin_separation) > 0.01 * bin_separation:
            raise ValidationError(
                f"analyzer delay {delay:.4g} us does not match the bin separation "
                f"{bin_separation:.4g} us"
            )
    shift = snap_shift(spectral_shift, grid)
    shifted = replace(filter_comb, center_offset=filter_comb.center_offset + shift)
    return single_pass_transfer(build_comb_profile(shifted, grid))


def analyzer_phase(spectral_shift: float, spacing: float) -> float:
    """Interferometer phase the shift imprints on the echo arm, in [0, 2pi)."""
    return float((-2.0 * np.pi * spectral_shift / spacing) % (2.0 * np.pi))


def balance_analyzer(filter_comb: CombSpec, grid: FrequencyGrid,
                     pulse_fwhm: float = 0.51) -> CombSpec:
    """Tune the filter comb's OD until transmission and first echo balance.

    The root is found against the actual propagation of a reference pulse;
    the balance makes both interferometer arms equally probable.
    """
    tau = filter_comb.storage_time
    t0 = max(6.0 * pulse_fwhm, 0.05 * grid.duration)
    if t0 + 1.6 * tau > grid.duration:
        raise ValidationError("grid too short for the analyzer balance windows")
    reference = make_gaussian_pulse(pulse_fwhm, t0, 1.0, 0.0, grid)
    window = min(tau, 4.0 * pulse_fwhm)

    def imbalance(peak_od: float) -> float:
        tf = single_pass_transfer(build_comb_profile(filter_comb.with_peak_od(peak_od), grid))
        out = propagate(reference, tf)
        trans = out.window_energy(t0 - window / 2, t0 + window / 2)
        echo = out.window_energy(t0 + tau - window / 2, t0 + tau + window / 2)
        return trans - echo

    lo, hi = 1e-3, 10.0
    if imbalance(hi) > 0:
        raise BalanceError("no transmission/echo balance for peak OD in (0, 10]")
    root = brentq(imbalance, lo, hi, xtol=1e-6, rtol=1e-6)
    return filter_comb.with_peak_od(float(root))


def fit_fringe(phases: np.ndarray, p: np.ndarray,
               sigma: np.ndarray | None = None) -> tuple[float, float, float, float | None]:
    """Least-squares fit of p = A (1 + V cos(phase + phi0)).

    Returns (A, V, phi0, sigma_V); sigma_V is None without per-point errors.
    """
    phases = np.asarray(phases, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.unique(np.round(phases, 9)).size < 3:
        raise ValidationError("fringe fit needs at least 3 distinct phases")
    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    if sigma is not None:
        w = 1.0 / np.clip(np.asarray(sigma, dtype=float), 1e-12, None)
        coeffs, *_ = np.linalg.lstsq(design * w[:, None], p * w, rcond=None)
    else:
        coeffs, *_ = np.linalg.lstsq(design, p, rcond=None)
    a, b, c = coeffs  # p = a + b cos + c sin = a(1 + V cos(phase + phi0))
    amp = np.hypot(b, c)
    visibility = amp / a if a > 0 else 0.0
    phi0 = float(np.arctan2(-c, b))
    sigma_v = None
    if sigma is not None:
        cov = np.linalg.inv((design * w[:, None] ** 2).T @ design)
        grad = np.array([-amp / a**2,
                         b / (amp * a) if amp > 0 else 0.0,
                         c / (amp * a) if amp > 0 else 0.0])
        sigma_v = float(np.sqrt(grad @ cov @ grad))
    return float(a), float(min(max(visibility, 0.0), 1.0)), phi0, sigma_v


def fringe_scan(qubit: TimeBinQubit, memory_tf: TransferFunction,
                filter_comb: CombSpec, shifts: list[float], *,
                memory_delay: float, early_time: float,
                detection_window: float = 1.0,
                balance: bool = True) -> FringeScan:
    """Detection probability in the interfering middle bin versus analyzer phase.

    The interferometer phase is produced physically by the comb's spectral
    shift inside the propagation and only read out by the fit afterwards.
    """
    if memory_delay < qubit.bin_separation + detection_window:
        raise ValidationError("memory storage time too short to isolate the middle bin")
    grid = memory_tf.grid
    if balance:
        filter_comb = balance_analyzer(filter_comb, grid, qubit.pulse_fwhm)
    envelope = make_timebin_qubit(qubit, grid, early_time)
    after_memory = propagate(envelope, memory_tf)
    t_mid = early_time + memory_delay + qubit.bin_separation

    phases = []
    probs = []
    for shift in shifts:
        applied = snap_shift(shift, grid)
        tf = analyzer_transfer(filter_comb, applied, grid,
                               bin_separation=qubit.bin_separation)
        out = propagate(after_memory, tf)
        p = out.window_energy(t_mid - detection_window / 2, t_mid + detection_window / 2)
        phases.append(analyzer_phase(applied, filter_comb.tooth_spacing))
        probs.append(p)
    phases = np.array(phases)
    probs = np.array(probs)
    amplitude, visibility, phi0, _ = fit_fringe(phases, probs)
    return FringeScan(phases=phases, p_detect=probs, stderr=np.zeros_like(probs),
                      visibility=visibility, phase_offset=phi0, amplitude=amplitude)


def pole_fidelity(memory_tf: TransferFunction, qubit: TimeBinQubit, *,
                  memory_delay: float, early_time: float,
                  detection_window: float = 1.0,
                  filter_tf: TransferFunction | None = None,
                  background_per_window: float = 0.0) -> float:
    """Correct-bin probability for the pole states, averaged over early and late.

    The filter crystal is left transparent (identity unless a transfer is
    given).  A flat background count expectation per window models detector
    noise on both bins.
    """
    grid = memory_tf.grid
    totals = []
    for is_early in (True, False):
        maker = TimeBinQubit.early if is_early else TimeBinQubit.late
        q = maker(bin_separation=qubit.bin_separation,
                  pulse_fwhm=qubit.pulse_fwhm, mu=qubit.mu)
        envelope = make_timebin_qubit(q, grid, early_time)
        out = propagate(envelope, memory_tf)
        if filter_tf is not None:
            out = propagate(out, filter_tf)
        t_early = early_time + memory_delay
        t_late = t_early + qubit.bin_separation
        e_early = out.window_energy(t_early - detection_window / 2,
                                    t_early + detection_window / 2)
        e_late = out.window_energy(t_late - detection_window / 2,
                                   t_late + detection_window / 2)
        correct = e_early if is_early else e_late
        wrong = e_late if is_early else e_early
        totals.append((correct + background_per_window,
                       correct + wrong + 2.0 * background_per_window))
    return float(np.mean([c / t for c, t in totals]))


def wcs_threshold(mu: float, eta: float) -> float:
    """Measure-and-prepare fidelity bound for Poissonian inputs.

    A cheater that measures photon number keeps the most informative pulses:
    multi-photon pulses are treated as fully compromised (unambiguous
    discrimination with post-selection), single photons allow at best the
    2/3 estimation fidelity, and any remaining output budget is blind
    guessing at 1/2.  The output rate must match eta * mu photons per trial.
    """
    if mu <= 0:
        raise ValidationError("mean photon number must be positive")
    if not 0.0 < eta <= 1.0:
        raise ValidationError("efficiency must lie in (0, 1]")
    rate = eta * mu
    p0 = np.exp(-mu)
    p1 = mu * np.exp(-mu)
    p_multi = 1.0 - p0 - p1
    if rate <= p_multi:
        return 1.0
    if rate <= p_multi + p1:
        f = (p_multi + (rate - p_multi) * (2.0 / 3.0)) / rate
    else:
        blind = rate - p_multi - p1
        f = (p_multi + p1 * (2.0 / 3.0) + 0.5 * blind) / rate
    return float(min(f, 1.0))


def fidelity_report(v_coh: float, f_pole: float, mu: float, eta: float) -> FidelityReport:
    """Bloch-sphere-averaged fidelity and the weak-coherent-state threshold."""
    if not 0.0 <= v_coh <= 1.0 or not 0.0 <= f_pole <= 1.0:
        raise ValidationError("visibility and pole fidelity must lie in [0, 1]")
    f_coh = (1.0 + v_coh) / 2.0
    f_total = (2.0 / 3.0) * f_coh + (1.0 / 3.0) * f_pole
    f_threshold = wcs_threshold(mu, eta)
    return FidelityReport(v_coh=v_coh, f_coh=f_coh, f_pole=f_pole, f_total=f_total,
                          f_threshold=f_threshold,
                          passes_quantum_bound=bool(f_total > f_threshold))
