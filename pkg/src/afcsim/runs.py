"""Orchestration: turn a RunConfig into simulation results.

Each run_* function returns plain dicts/arrays for the CLI to serialize, so
they are directly testable without touching the filesystem.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import analytics, montecarlo, timebin
from .cavity import (
    CavitySpec,
    cavity_reflection,
    cavity_transmission,
    check_impedance,
    resonance_linewidth,
    round_trip_phase,
)
from .config import AUTO, RunConfig
from .errors import ValidationError
from .medium import CombSpec, FrequencyGrid, build_comb_profile, peak_od_for_depth, single_pass_transfer
from .propagation import (
    StoragePipeline,
    grid_for_comb,
    make_gaussian_pulse,
    propagate,
    scan_bandwidth,
    scan_storage_time,
    storage_efficiency,
)

GAUSSIAN_TBP = 2.0 * np.log(2.0) / np.pi


def cavity_from_config(cfg: RunConfig) -> CavitySpec:
    c = cfg.cavity
    return CavitySpec(r_in=c.r_in, r_out=c.r_out, round_trip_loss=c.round_trip_loss,
                      round_trip_time=c.round_trip_time,
                      resonance_offset=c.resonance_offset)


def comb_from_config(cfg: RunConfig, *, tooth_spacing: float | None = None) -> CombSpec:
    c = cfg.comb
    spacing = c.tooth_spacing if tooth_spacing is None else tooth_spacing
    if c.peak_od == AUTO:
        target = analytics.impedance_matched_depth(
            cfg.cavity.r_in, cfg.cavity.r_out, cfg.cavity.round_trip_loss)
        peak = peak_od_for_depth(target, c.finesse, c.tooth_shape, c.background_od)
    else:
        peak = float(c.peak_od)
    return CombSpec(tooth_spacing=spacing, finesse=c.finesse, tooth_shape=c.tooth_shape,
                    peak_od=peak, background_od=c.background_od,
                    bandwidth=c.bandwidth, center_offset=c.center_offset)


def pipeline_from_config(cfg: RunConfig) -> StoragePipeline:
    comb = comb_from_config(cfg)
    grid = None
    if cfg.pulse.grid_points and cfg.pulse.grid_span:
        grid = FrequencyGrid(span=cfg.pulse.grid_span, n_points=cfg.pulse.grid_points)
    return StoragePipeline(comb=comb, cavity=cavity_from_config(cfg),
                           pulse_fwhm=cfg.pulse.fwhm, pulse_center=cfg.pulse.center,
                           mu_in=cfg.pulse.mu_in, detuning=cfg.pulse.detuning,
                           window=cfg.pulse.window, pit_width=cfg.comb.pit_width,
                           line_od=cfg.comb.line_od, grid=grid)


def run_storage(cfg: RunConfig) -> dict:
    pipe = pipeline_from_config(cfg)
    result = pipe.run()
    trace = result.output_trace
    echo_time = result.echo_times[0] - cfg.pulse.center if result.echo_times else float("nan")
    return {
        "summary": {
            "eta": result.echo_efficiency,
            "reflected_fraction": result.reflected_fraction,
            "echo_time_us": echo_time,
        },
        "times": trace.times(),
        "intensity": trace.intensity(),
        "pipeline": pipe,
        "result": result,
    }


def run_scan_storage_time(cfg: RunConfig) -> dict:
    pipe = pipeline_from_config(cfg)
    t2 = cfg.scan.t2_eff if cfg.scan.t2_eff > 0 else None
    points = scan_storage_time(pipe, list(cfg.scan.storage_times), t2_eff=t2)
    fit = analytics.fit_decay([(p.storage_time, p.eta_cavity) for p in points])
    rows = [
        {
            "tau_us": p.storage_time,
            "eta_cavity": p.eta_cavity,
            "eta_single_pass": p.eta_single_pass,
            "eta_fit": fit.eta0 * np.exp(-4.0 * p.storage_time / fit.t2_eff),
        }
        for p in points
    ]
    return {"rows": rows, "fit": fit}


def run_scan_bandwidth(cfg: RunConfig) -> dict:
    pipe = pipeline_from_config(cfg)
    fwhms = [GAUSSIAN_TBP / b for b in cfg.scan.bandwidths]
    points = scan_bandwidth(pipe, fwhms, mu_ref=cfg.pulse.mu_in)
    rows = [{"bandwidth_MHz": p.bandwidth, "eta": p.eta} for p in points]
    return {"rows": rows}


def run_optimize(cfg: RunConfig) -> dict:
    c = cfg.cavity
    opt = analytics.optimize_depth(c.r_out, c.round_trip_loss,
                                   cfg.comb.finesse, cfg.comb.tooth_shape)
    return {
        "d_tilde_star": opt.d_eff,
        "eta_star": opt.eta,
        "eta_deph": analytics.eta_dephasing(cfg.comb.finesse, cfg.comb.tooth_shape),
        "matched_residual": float(check_impedance(c.r_in, c.r_out,
                                                  c.round_trip_loss, opt.d_eff)),
        "degenerate": opt.degenerate,
    }


def run_linewidth(cfg: RunConfig) -> dict:
    """Cavity linewidth at the center of the spectral window (no comb)."""
    comb = comb_from_config(cfg)
    bare = replace(comb, peak_od=0.0, background_od=0.0)
    grid = (FrequencyGrid(span=cfg.pulse.grid_span, n_points=cfg.pulse.grid_points)
            if cfg.pulse.grid_points and cfg.pulse.grid_span
            else grid_for_comb(comb, min_span=max(200.0, 4.0 * cfg.comb.pit_width)))
    profile = build_comb_profile(bare, grid, pit_width=cfg.comb.pit_width,
                                 line_od=cfg.comb.line_od)
    medium = single_pass_transfer(profile)
    cav = cavity_from_config(cfg)
    tf = cavity_transmission(medium, cav)
    theta = round_trip_phase(medium, cav)
    report = resonance_linewidth(tf, round_trip_phase_values=theta)
    return {
        "summary": {
            "fwhm_MHz": report.fwhm,
            "group_delay_us": report.group_delay_at_center,
            "effective_fsr_MHz": report.effective_fsr,
        },
        "frequencies": grid.frequencies(),
        "transmission": tf.magnitude_squared(),
        "report": report,
    }


def _qubit_setup(cfg: RunConfig):
    q = cfg.qubit
    comb = comb_from_config(cfg)
    if comb.storage_time < q.bin_separation + q.detection_window:
        raise ValidationError("memory storage time too short for qubit analysis")
    filter_comb = CombSpec(tooth_spacing=1.0 / q.bin_separation,
                           finesse=q.filter_finesse,
                           tooth_shape=cfg.comb.tooth_shape,
                           peak_od=1.0,  # placeholder, balanced below
                           bandwidth=q.filter_bandwidth)
    min_duration = cfg.pulse.center + 2.0 * comb.storage_time + 4.0 * q.bin_separation + 8.0
    grid = grid_for_comb(comb, min_span=max(100.0, 4.0 * q.filter_bandwidth),
                         min_duration=min_duration)
    profile = build_comb_profile(comb, grid, pit_width=cfg.comb.pit_width,
                                 line_od=cfg.comb.line_od)
    memory_tf = cavity_reflection(single_pass_transfer(profile), cavity_from_config(cfg))
    return comb, filter_comb, grid, memory_tf


def run_qubit_fringe(cfg: RunConfig, *, counting: bool = False,
                     seed: int | None = None) -> dict:
    q = cfg.qubit
    comb, filter_comb, grid, memory_tf = _qubit_setup(cfg)
    early = cfg.pulse.center
    tau = comb.storage_time
    balanced = timebin.balance_analyzer(filter_comb, grid, q.pulse_fwhm)
    shifts = [k * filter_comb.tooth_spacing / q.n_shifts for k in range(q.n_shifts)]

    template = timebin.TimeBinQubit.equatorial(
        0.0, bin_separation=q.bin_separation, pulse_fwhm=q.pulse_fwhm, mu=q.mu_in)

    # storage efficiency of the qubit memory, from the pole-state echo energy
    e_env = timebin.make_timebin_qubit(
        timebin.TimeBinQubit.early(bin_separation=q.bin_separation,
                                   pulse_fwhm=q.pulse_fwhm, mu=q.mu_in), grid, early)
    e_out = propagate(e_env, memory_tf)
    eta_qubit = (e_out.window_energy(early + tau - q.detection_window / 2,
                                     early + tau + q.detection_window / 2)
                 + e_out.window_energy(early + tau + q.bin_separation - q.detection_window / 2,
                                       early + tau + q.bin_separation + q.detection_window / 2)
                 ) / max(q.mu_in, 1e-12)

    cfg_mc = montecarlo.CountingConfig(
        pulses_per_cycle=cfg.montecarlo.pulses_per_cycle,
        cycle_rate=cfg.montecarlo.cycle_rate,
        measurement_duration=cfg.montecarlo.measurement_duration,
        dark_rate=cfg.montecarlo.dark_rate,
        detection_window=q.detection_window,
        reference_reflectivity=cfg.cavity.r_in,
        detector_efficiency=cfg.montecarlo.detector_efficiency,
        rng_seed=cfg.output.seed if seed is None else seed)

    scans = {}
    visibilities = []
    for phase_deg in q.phases_deg:
        qubit = replace(template,
                        amp_late=np.exp(1j * np.deg2rad(phase_deg)) / np.sqrt(2.0))
        scan = timebin.fringe_scan(qubit, memory_tf, balanced, shifts,
                                   memory_delay=tau, early_time=early,
                                   detection_window=q.detection_window,
                                   balance=False)
        if counting:
            scan = montecarlo.fringe_counts(scan.p_detect, scan.phases, cfg_mc,
                                            window=q.detection_window)
        scans[phase_deg] = scan
        visibilities.append(scan.visibility)

    f_pole = timebin.pole_fidelity(memory_tf, template, memory_delay=tau,
                                   early_time=early,
                                   detection_window=q.detection_window)
    report = timebin.fidelity_report(float(np.mean(visibilities)), f_pole,
                                     q.mu_in, float(eta_qubit))
    return {"scans": scans, "report": report, "eta_qubit": float(eta_qubit),
            "filter_comb": balanced}


def run_montecarlo_storage(cfg: RunConfig, *, seed: int | None = None) -> dict:
    storage = run_storage(cfg)
    pipe: StoragePipeline = storage["pipeline"]
    result = storage["result"]
    grid = result.output_trace.grid
    pulse = make_gaussian_pulse(pipe.pulse_fwhm, pipe.pulse_center, pipe.mu_in,
                                pipe.detuning, grid)

    mc = cfg.montecarlo
    counting_cfg = montecarlo.CountingConfig(
        pulses_per_cycle=mc.pulses_per_cycle, cycle_rate=mc.cycle_rate,
        measurement_duration=mc.measurement_duration, dark_rate=mc.dark_rate,
        detection_window=cfg.pulse.window,
        reference_reflectivity=cfg.cavity.r_in,
        detector_efficiency=mc.detector_efficiency,
        rng_seed=cfg.output.seed if seed is None else seed)

    t0 = pipe.pulse_center
    tau = pipe.comb.storage_time
    t_hi = t0 + tau + 1.5 * cfg.pulse.window
    edges = np.arange(0.0, t_hi + mc.histogram_bin, mc.histogram_bin)

    ref_means = montecarlo.trace_to_bin_means(
        pulse.times(), pulse.intensity() * cfg.cavity.r_in, edges)
    mem_means = montecarlo.trace_to_bin_means(
        result.output_trace.times(), result.output_trace.intensity(), edges)

    ref = montecarlo.run_counting(ref_means, edges, counting_cfg,
                                  counting_cfg.reference_trials,
                                  montecarlo.HistogramTag.REFERENCE)
    mem = montecarlo.run_counting(mem_means, edges, counting_cfg,
                                  counting_cfg.memory_trials,
                                  montecarlo.HistogramTag.MEMORY)
    w = cfg.pulse.window
    eta, sigma = montecarlo.estimate_efficiency(
        ref, mem, counting_cfg,
        input_window=(t0 - w / 2, t0 + w / 2),
        echo_window=(t0 + tau - w / 2, t0 + tau + w / 2))
    return {
        "estimate": {"eta": eta, "sigma": sigma,
                     "n_trials": counting_cfg.memory_trials,
                     "seed": counting_cfg.rng_seed},
        "reference": ref,
        "memory": mem,
        "truth": storage["summary"]["eta"],
    }
