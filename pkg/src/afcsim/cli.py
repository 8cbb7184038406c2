"""Command-line entry points: orchestrate runs and serialize plot-ready files.

Exit codes: 0 success, 2 configuration error, 3 numerical-validation failure.
stdout carries only data and output paths; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import report as figs
from . import runs
from .config import RunConfig, default_config_text, parse_config, render_config
from .errors import ConfigError, ValidationError

_FLOAT_FMT = "{:.9g}"  # decimal, 9 significant digits, locale independent


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return _FLOAT_FMT.format(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_json(path: Path, payload: dict, schema_name: str) -> Path:
    schema = json.loads(
        resources.files("afcsim").joinpath(f"schemas/{schema_name}").read_text())
    jsonschema.validate(payload, schema)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def _load_config(args) -> RunConfig:
    if args.config is None:
        cfg = RunConfig()
    else:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cfg = parse_config(path.read_text(encoding="utf-8"))
    if args.out is not None:
        cfg = _replace_output(cfg, dir=args.out)
    if args.seed is not None:
        cfg = _replace_output(cfg, seed=args.seed)
    return cfg


def _replace_output(cfg: RunConfig, **kwargs) -> RunConfig:
    from dataclasses import replace
    return replace(cfg, output=replace(cfg.output, **kwargs))


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(path: Path):
    print(path)


def cmd_storage(cfg: RunConfig, out: Path, figures: bool):
    data = runs.run_storage(cfg)
    trace = write_csv(out / "storage_trace.csv", ["time_us", "intensity"],
                      zip(data["times"], data["intensity"]))
    summary = write_json(out / "storage_summary.json", data["summary"],
                         "storage_summary.schema.json")
    _emit(trace)
    _emit(summary)
    if figures:
        pipe = data["pipeline"]
        _emit(figs.storage_trace_figure(data["times"], data["intensity"],
                                        pipe.pulse_center, pipe.comb.storage_time,
                                        pipe.window, out / "storage_trace.png"))


def cmd_scan_storage_time(cfg: RunConfig, out: Path, figures: bool):
    data = runs.run_scan_storage_time(cfg)
    rows = [(r["tau_us"], r["eta_cavity"], r["eta_single_pass"], r["eta_fit"])
            for r in data["rows"]]
    path = write_csv(out / "scan_storage_time.csv",
                     ["tau_us", "eta_cavity", "eta_single_pass", "eta_fit"], rows)
    _emit(path)
    print(f"fitted T2_eff_us {_fmt(data['fit'].t2_eff)}")
    if figures:
        _emit(figs.storage_time_figure(data["rows"], out / "scan_storage_time.png"))


def cmd_scan_bandwidth(cfg: RunConfig, out: Path, figures: bool):
    data = runs.run_scan_bandwidth(cfg)
    path = write_csv(out / "scan_bandwidth.csv", ["bandwidth_MHz", "eta"],
                     [(r["bandwidth_MHz"], r["eta"]) for r in data["rows"]])
    _emit(path)
    if figures:
        _emit(figs.bandwidth_figure(data["rows"], out / "scan_bandwidth.png"))


def cmd_optimize(cfg: RunConfig, out: Path, figures: bool):
    payload = runs.run_optimize(cfg)
    _emit(write_json(out / "optimize_comb.json", payload, "optimize_comb.schema.json"))


def cmd_qubit_fringe(cfg: RunConfig, out: Path, figures: bool, counting: bool = False):
    data = runs.run_qubit_fringe(cfg, counting=counting)
    for phase_deg, scan in data["scans"].items():
        rows = zip(scan.phases, scan.p_detect, scan.stderr)
        _emit(write_csv(out / f"fringe_phase{phase_deg:g}.csv",
                        ["phase_rad", "p_detect", "stderr"], rows))
    rep = data["report"]
    payload = {
        "v_coh": rep.v_coh, "f_coh": rep.f_coh, "f_pole": rep.f_pole,
        "f_total": rep.f_total, "f_threshold": rep.f_threshold,
        "passes_quantum_bound": rep.passes_quantum_bound,
        "eta_qubit": data["eta_qubit"], "mu_in": cfg.qubit.mu_in,
        "visibilities": {f"{k:g}": s.visibility for k, s in data["scans"].items()},
    }
    _emit(write_json(out / "fidelity.json", payload, "fidelity.schema.json"))
    if figures:
        _emit(figs.fringe_figure(data["scans"], out / "fringes.png"))


def cmd_linewidth(cfg: RunConfig, out: Path, figures: bool):
    data = runs.run_linewidth(cfg)
    _emit(write_json(out / "linewidth.json", data["summary"], "linewidth.schema.json"))
    if figures:
        _emit(figs.linewidth_figure(data["frequencies"], data["transmission"],
                                    data["report"], out / "linewidth.png"))


def cmd_montecarlo(cfg: RunConfig, out: Path, figures: bool, mode: str):
    if mode == "qubit-fringe":
        cmd_qubit_fringe(cfg, out, figures, counting=True)
        return
    data = runs.run_montecarlo_storage(cfg)
    for tag in ("reference", "memory"):
        hist = data[tag]
        centers = 0.5 * (hist.bin_edges[:-1] + hist.bin_edges[1:])
        _emit(write_csv(out / f"histogram_{tag}.csv", ["time_us", "counts"],
                        zip(centers, hist.counts)))
    _emit(write_json(out / "montecarlo.json", data["estimate"],
                     "montecarlo_estimate.schema.json"))
    if figures:
        _emit(figs.histogram_figure(data["reference"], data["memory"],
                                    out / "histograms.png"))


_COMMANDS = {
    "storage": cmd_storage,
    "scan-storage-time": cmd_scan_storage_time,
    "scan-bandwidth": cmd_scan_bandwidth,
    "optimize-comb": cmd_optimize,
    "qubit-fringe": cmd_qubit_fringe,
    "linewidth": cmd_linewidth,
}


def _add_common(parser: argparse.ArgumentParser, *, suppress: bool):
    # flags are accepted both before and after the subcommand; the suppressed
    # copies only contribute when actually given on the command line
    default = argparse.SUPPRESS if suppress else None
    flag_default = argparse.SUPPRESS if suppress else False
    parser.add_argument("--config", metavar="PATH", default=default,
                        help="run configuration file")
    parser.add_argument("--out", metavar="DIR", default=default,
                        help="output directory")
    parser.add_argument("--seed", type=int, metavar="N", default=default,
                        help="override the RNG seed")
    parser.add_argument("--no-figures", action="store_true", default=flag_default,
                        help="skip rendering PNG figures")
    parser.add_argument("--print-defaults", action="store_true", default=flag_default,
                        help="print the default configuration and exit")
    parser.add_argument("--print-config", action="store_true", default=flag_default,
                        help="print the effective configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afcsim",
        description="Cavity-enhanced AFC memory simulator")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command")
    for name in _COMMANDS:
        _add_common(sub.add_parser(name), suppress=True)
    mc = sub.add_parser("montecarlo")
    _add_common(mc, suppress=True)
    mc.add_argument("--mode", choices=["storage", "qubit-fringe"], default="storage")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.print_defaults:
        print(default_config_text(), end="")
        return 0

    try:
        cfg = _load_config(args)
        if args.print_config:
            print(render_config(cfg), end="")
            return 0
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("error: a subcommand is required", file=sys.stderr)
            return 2
        out = _outdir(cfg)
        figures = cfg.output.figures and not args.no_figures
        if args.command == "montecarlo":
            cmd_montecarlo(cfg, out, figures, args.mode)
        else:
            _COMMANDS[args.command](cfg, out, figures)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
