"""Counting emulation of the measurement protocol.

Every other cycle blocks the cavity with a high-OD feature, so the detector
alternates between reference pulses (the fraction reflected off the input
mirror) and memory cycles with echoes.  Counts are Poissonian with uniform
dark counts; totals over trials are drawn as aggregated Poisson variables,
which is distributionally identical to per-trial draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .timebin import FringeScan, fit_fringe

US_PER_S = 1e6


class HistogramTag(str, Enum):
    REFERENCE = "reference"
    MEMORY = "memory"
    FRINGE_POINT = "fringe_point"


@dataclass(frozen=True)
class CountingConfig:
    pulses_per_cycle: int = 1000
    cycle_rate: float = 1.0            # Hz, cryostat cycles per second
    measurement_duration: float = 120.0  # s
    dark_rate: float = 25.0            # Hz
    detection_window: float = 2.0      # us
    reference_reflectivity: float = 0.40
    detector_efficiency: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.pulses_per_cycle <= 0:
            raise ValidationError("pulses_per_cycle must be positive")
        if min(self.cycle_rate, self.measurement_duration) <= 0:
            raise ValidationError("rates and durations must be positive")
        if self.dark_rate < 0 or not (0.0 < self.reference_reflectivity <= 1.0):
            raise ValidationError("dark_rate >= 0 and reference_reflectivity in (0, 1] required")
        if not (0.0 <= self.detector_efficiency <= 1.0):
            raise ValidationError("detector_efficiency must lie in [0, 1]")

    @property
    def n_cycles(self) -> int:
        return max(int(round(self.measurement_duration * self.cycle_rate)), 2)

    @property
    def reference_trials(self) -> int:
        return ((self.n_cycles + 1) // 2) * self.pulses_per_cycle

    @property
    def memory_trials(self) -> int:
        return (self.n_cycles // 2) * self.pulses_per_cycle


@dataclass(frozen=True)
class CountHistogram:
    bin_edges: np.ndarray   # us, len = n_bins + 1
    counts: np.ndarray      # integer totals over all trials
    n_trials: int
    tag: HistogramTag

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or edges.size != counts.size + 1:
            raise ValidationError("bin_edges must have one more entry than counts")
        if np.any(counts < 0):
            raise ValidationError("counts must be non-negative")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    def window_counts(self, t_lo: float, t_hi: float) -> int:
        centers = 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])
        mask = (centers >= t_lo) & (centers < t_hi)
        return int(np.sum(self.counts[mask]))

    def dark_expectation(self, t_lo: float, t_hi: float, cfg: CountingConfig) -> float:
        return cfg.dark_rate * (t_hi - t_lo) / US_PER_S * self.n_trials


def _rng_for(cfg: CountingConfig, tag: HistogramTag, shard: int = 0) -> np.random.Generator:
    # counter-style stream: reproducible independently of evaluation order
    tag_code = list(HistogramTag).index(tag)
    return np.random.default_rng(np.random.SeedSequence(
        entropy=cfg.rng_seed, spawn_key=(tag_code, shard)))


def run_counting(signal_means: np.ndarray, bin_edges: np.ndarray,
                 cfg: CountingConfig, n_trials: int,
                 tag: HistogramTag = HistogramTag.MEMORY,
                 shard: int = 0) -> CountHistogram:
    """Poisson-sample a time histogram from per-trial photon means per bin."""
    means = np.asarray(signal_means, dtype=float)
    edges = np.asarray(bin_edges, dtype=float)
    if means.size != edges.size - 1:
        raise ValidationError("signal means do not match the bin edges")
    if np.any(means < 0):
        raise ValidationError("photon means must be non-negative")
    widths = np.diff(edges)
    dark_mean = cfg.dark_rate * widths / US_PER_S
    per_trial = means * cfg.detector_efficiency + dark_mean
    rng = _rng_for(cfg, tag, shard)
    counts = rng.poisson(per_trial * n_trials)
    return CountHistogram(bin_edges=edges, counts=counts, n_trials=n_trials, tag=tag)


def trace_to_bin_means(times: np.ndarray, intensity: np.ndarray,
                       bin_edges: np.ndarray) -> np.ndarray:
    """Rebin an intensity trace (photons/us) into expected photons per bin."""
    dt = times[1] - times[0]
    photons = np.asarray(intensity, dtype=float) * dt
    idx = np.digitize(times, bin_edges) - 1
    means = np.zeros(len(bin_edges) - 1)
    valid = (idx >= 0) & (idx < means.size)
    np.add.at(means, idx[valid], photons[valid])
    return means


def estimate_efficiency(ref: CountHistogram, mem: CountHistogram,
                        cfg: CountingConfig, *,
                        input_window: tuple[float, float],
                        echo_window: tuple[float, float]) -> tuple[float, float]:
    """Echo counts over the reflectivity-normalized reference, with 1-sigma error.

    The reference pulses see only the input-mirror reflection, so dividing by
    the reference reflectivity recovers the full input rate.
    """
    ref_counts = ref.window_counts(*input_window)
    echo_counts = mem.window_counts(*echo_window)
    ref_signal = ref_counts - ref.dark_expectation(*input_window, cfg)
    echo_signal = echo_counts - mem.dark_expectation(*echo_window, cfg)
    if ref_signal <= 0:
        raise ValidationError("reference window holds no counts above dark level")
    echo_signal = max(echo_signal, 0.0)

    ref_rate = ref_signal / ref.n_trials / cfg.reference_reflectivity
    echo_rate = echo_signal / mem.n_trials
    eta = echo_rate / ref_rate

    var_echo = max(echo_counts, 1) / mem.n_trials**2
    var_ref = max(ref_counts, 1) / (ref.n_trials * cfg.reference_reflectivity) ** 2
    sigma = np.sqrt(var_echo / ref_rate**2 + var_ref * (echo_rate / ref_rate**2) ** 2)
    return float(eta), float(sigma)


def fringe_counts(energies: np.ndarray, phases: np.ndarray, cfg: CountingConfig,
                  *, trials_per_phase: int | None = None,
                  window: float | None = None) -> FringeScan:
    """Poisson-sampled fringe with standard errors and fitted visibility."""
    energies = np.asarray(energies, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if energies.shape != phases.shape:
        raise ValidationError("energies and phases must align")
    if trials_per_phase is None:
        trials_per_phase = max(cfg.memory_trials // max(energies.size, 1), 1)
    win = cfg.detection_window if window is None else window
    dark_mean = cfg.dark_rate * win / US_PER_S
    means = energies * cfg.detector_efficiency + dark_mean
    rng = _rng_for(cfg, HistogramTag.FRINGE_POINT)
    counts = rng.poisson(means * trials_per_phase)
    p_hat = counts / trials_per_phase
    stderr = np.sqrt(np.maximum(counts, 1)) / trials_per_phase
    amplitude, visibility, phi0, sigma_v = fit_fringe(phases, p_hat, stderr)
    return FringeScan(phases=phases, p_detect=p_hat, stderr=stderr,
                      visibility=visibility, phase_offset=phi0,
                      amplitude=amplitude, visibility_stderr=sigma_v)
