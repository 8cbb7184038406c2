"""Matplotlib figures rendered next to the delimited output files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def storage_trace_figure(times, intensity, t0, tau, window, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    lo = max(t0 - 2.0 * window, times[0])
    hi = min(t0 + tau + 2.0 * window, times[-1])
    mask = (times >= lo) & (times <= hi)
    ax.plot(times[mask], intensity[mask], "b-", lw=1)
    ax.axvspan(t0 - window / 2, t0 + window / 2, alpha=0.15, color="gray",
               label="input window")
    ax.axvspan(t0 + tau - window / 2, t0 + tau + window / 2, alpha=0.15,
               color="red", label="echo window")
    ax.set_xlabel("Time (us)")
    ax.set_ylabel("Intensity (photons/us)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def storage_time_figure(rows, path: Path) -> Path:
    tau = [r["tau_us"] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(tau, [r["eta_cavity"] for r in rows], "bo", label="cavity")
    ax.semilogy(tau, [r["eta_single_pass"] for r in rows], "g^", label="single pass")
    ax.semilogy(tau, [r["eta_fit"] for r in rows], "r-", lw=1, label="decay fit")
    ax.set_xlabel("Storage time (us)")
    ax.set_ylabel("Efficiency")
    ax.legend()
    ax.grid(True, alpha=0.3, which="both")
    return _save(fig, path)


def bandwidth_figure(rows, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot([r["bandwidth_MHz"] for r in rows], [r["eta"] for r in rows], "bo-")
    ax.set_xlabel("Pulse bandwidth (MHz)")
    ax.set_ylabel("Efficiency")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def fringe_figure(scans: dict, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    dense = np.linspace(0.0, 2.0 * np.pi, 200)
    for phase_deg, scan in scans.items():
        order = np.argsort(scan.phases)
        ax.errorbar(scan.phases[order] / np.pi, scan.p_detect[order],
                    yerr=scan.stderr[order] if np.any(scan.stderr) else None,
                    fmt="o", ms=4, label=f"{phase_deg:g} deg")
        model = scan.amplitude * (1.0 + scan.visibility
                                  * np.cos(dense + scan.phase_offset))
        ax.plot(dense / np.pi, model, "-", lw=0.8, alpha=0.6)
    ax.set_xlabel("Analyzer phase (units of pi)")
    ax.set_ylabel("Detection probability per trial")
    ax.legend(fontsize="small")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def linewidth_figure(frequencies, transmission, report, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    half = 5.0 * report.fwhm
    mask = np.abs(frequencies - report.resonance_frequency) <= half
    if not np.any(mask):
        mask = slice(None)
    ax.plot(frequencies[mask], transmission[mask], "b-", lw=1)
    ax.axvline(report.resonance_frequency - report.fwhm / 2, color="r", ls="--", lw=0.8)
    ax.axvline(report.resonance_frequency + report.fwhm / 2, color="r", ls="--", lw=0.8)
    ax.set_xlabel("Frequency (MHz)")
    ax.set_ylabel("Cavity transmission")
    ax.set_title(f"FWHM = {report.fwhm:.3g} MHz")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def histogram_figure(reference, memory, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    centers = 0.5 * (reference.bin_edges[:-1] + reference.bin_edges[1:])
    ax.step(centers, reference.counts, where="mid", label="reference (blocked)")
    ax.step(centers, memory.counts, where="mid", label="memory")
    ax.set_xlabel("Time (us)")
    ax.set_ylabel("Counts")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)
