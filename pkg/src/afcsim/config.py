"""Strict run-configuration parsing.

Configs are flat INI-style sections of `key = value` lines with `#` comments.
Unknown sections or keys are errors: silent typos in physics parameters are
the costliest failure mode.  Every default is visible via --print-defaults.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields as dc_fields

from .errors import ConfigError

AUTO = "auto"


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    items = [s for s in (piece.strip() for piece in text.split(",")) if s]
    if not items:
        raise ConfigError("expected a comma-separated list of numbers")
    return tuple(_parse_float(s) for s in items)


def _parse_od(text: str) -> float | str:
    if text.strip().lower() == AUTO:
        return AUTO
    return _parse_float(text)


@dataclass(frozen=True)
class CombSection:
    tooth_spacing: float = 0.5     # MHz
    finesse: float = 5.8
    tooth_shape: str = "square"
    peak_od: float | str = AUTO    # "auto" = impedance-matched depth
    background_od: float = 0.0
    bandwidth: float = 10.0        # MHz
    center_offset: float = 0.0     # MHz
    pit_width: float = 18.0        # MHz
    line_od: float = 0.0           # OD outside the spectral pit


@dataclass(frozen=True)
class CavitySection:
    r_in: float = 0.40
    r_out: float = 0.97
    round_trip_loss: float = 0.03
    round_trip_time: float = 0.003  # us
    resonance_offset: float = 0.0   # MHz


@dataclass(frozen=True)
class PulseSection:
    fwhm: float = 0.8       # us
    center: float = 10.0    # us
    mu_in: float = 0.33
    detuning: float = 0.0   # MHz
    window: float = 2.0     # us, detection window
    grid_points: int = 0    # 0 = choose automatically
    grid_span: float = 0.0  # MHz, 0 = choose automatically


@dataclass(frozen=True)
class QubitSection:
    bin_separation: float = 1.0   # us
    pulse_fwhm: float = 0.51      # us
    mu_in: float = 0.25
    phases_deg: tuple[float, ...] = (0.0, 45.0, 90.0, 135.0)
    n_shifts: int = 12
    detection_window: float = 1.0  # us
    filter_finesse: float = 5.8
    filter_bandwidth: float = 12.0  # MHz


@dataclass(frozen=True)
class ScanSection:
    bandwidths: tuple[float, ...] = (0.412, 0.5, 0.7, 1.0, 1.4, 1.85, 2.5, 3.0, 3.7)
    storage_times: tuple[float, ...] = (2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0)
    t2_eff: float = 89.0   # us, 0 disables the decay factor


@dataclass(frozen=True)
class MonteCarloSection:
    pulses_per_cycle: int = 1000
    cycle_rate: float = 1.0
    measurement_duration: float = 120.0  # s
    dark_rate: float = 25.0              # Hz
    detector_efficiency: float = 1.0
    histogram_bin: float = 0.1           # us


@dataclass(frozen=True)
class OutputSection:
    dir: str = "afcsim-out"
    seed: int = 12345
    figures: bool = True


@dataclass(frozen=True)
class RunConfig:
    comb: CombSection = field(default_factory=CombSection)
    cavity: CavitySection = field(default_factory=CavitySection)
    pulse: PulseSection = field(default_factory=PulseSection)
    qubit: QubitSection = field(default_factory=QubitSection)
    scan: ScanSection = field(default_factory=ScanSection)
    montecarlo: MonteCarloSection = field(default_factory=MonteCarloSection)
    output: OutputSection = field(default_factory=OutputSection)


_SECTIONS = {
    "comb": CombSection,
    "cavity": CavitySection,
    "pulse": PulseSection,
    "qubit": QubitSection,
    "scan": ScanSection,
    "montecarlo": MonteCarloSection,
    "output": OutputSection,
}

_PARSERS = {
    ("comb", "tooth_shape"): str.strip,
    ("comb", "peak_od"): _parse_od,
    ("qubit", "phases_deg"): _parse_float_list,
    ("scan", "bandwidths"): _parse_float_list,
    ("scan", "storage_times"): _parse_float_list,
    ("output", "dir"): str.strip,
    ("output", "figures"): _parse_bool,
}

# (section, key) -> (check, description); checks run on parsed values
_RANGES = {
    ("comb", "tooth_spacing"): (lambda v: v > 0, "must be > 0"),
    ("comb", "finesse"): (lambda v: v >= 1, "must be >= 1"),
    ("comb", "tooth_shape"): (lambda v: v in ("square", "gaussian"),
                              "must be 'square' or 'gaussian'"),
    ("comb", "peak_od"): (lambda v: v == AUTO or v >= 0, "must be >= 0 or 'auto'"),
    ("comb", "background_od"): (lambda v: v >= 0, "must be >= 0"),
    ("comb", "bandwidth"): (lambda v: v > 0, "must be > 0"),
    ("comb", "pit_width"): (lambda v: v > 0, "must be > 0"),
    ("comb", "line_od"): (lambda v: v >= 0, "must be >= 0"),
    ("cavity", "r_in"): (lambda v: 0 <= v <= 1, "must lie in [0, 1]"),
    ("cavity", "r_out"): (lambda v: 0 <= v <= 1, "must lie in [0, 1]"),
    ("cavity", "round_trip_loss"): (lambda v: 0 <= v < 1, "must lie in [0, 1)"),
    ("cavity", "round_trip_time"): (lambda v: v > 0, "must be > 0"),
    ("pulse", "fwhm"): (lambda v: v > 0, "must be > 0"),
    ("pulse", "center"): (lambda v: v > 0, "must be > 0"),
    ("pulse", "mu_in"): (lambda v: v >= 0, "must be >= 0"),
    ("pulse", "window"): (lambda v: v > 0, "must be > 0"),
    ("pulse", "grid_points"): (lambda v: v == 0 or (v >= 2 and (v & (v - 1)) == 0),
                               "must be 0 or a power of two"),
    ("pulse", "grid_span"): (lambda v: v >= 0, "must be >= 0"),
    ("qubit", "bin_separation"): (lambda v: v > 0, "must be > 0"),
    ("qubit", "pulse_fwhm"): (lambda v: v > 0, "must be > 0"),
    ("qubit", "mu_in"): (lambda v: v >= 0, "must be >= 0"),
    ("qubit", "n_shifts"): (lambda v: v >= 3, "must be >= 3"),
    ("qubit", "detection_window"): (lambda v: v > 0, "must be > 0"),
    ("qubit", "filter_finesse"): (lambda v: v >= 1, "must be >= 1"),
    ("qubit", "filter_bandwidth"): (lambda v: v > 0, "must be > 0"),
    ("scan", "t2_eff"): (lambda v: v >= 0, "must be >= 0"),
    ("montecarlo", "pulses_per_cycle"): (lambda v: v > 0, "must be > 0"),
    ("montecarlo", "cycle_rate"): (lambda v: v > 0, "must be > 0"),
    ("montecarlo", "measurement_duration"): (lambda v: v > 0, "must be > 0"),
    ("montecarlo", "dark_rate"): (lambda v: v >= 0, "must be >= 0"),
    ("montecarlo", "detector_efficiency"): (lambda v: 0 <= v <= 1, "must lie in [0, 1]"),
    ("montecarlo", "histogram_bin"): (lambda v: v > 0, "must be > 0"),
}


def _parser_for(section: str, key: str, default) -> object:
    if (section, key) in _PARSERS:
        return _PARSERS[(section, key)]
    if isinstance(default, bool):  # before int: bool is an int subclass
        return _parse_bool
    if isinstance(default, float):
        return _parse_float
    if isinstance(default, int):
        return _parse_int
    return str.strip


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document; all omitted keys take defaults."""
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        cls = _SECTIONS[section]
        defaults = cls()
        known = {f.name for f in dc_fields(cls)}
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            parse = _parser_for(section, key, getattr(defaults, key))
            try:
                value = parse(raw)
            except ConfigError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
            check = _RANGES.get((section, key))
            if check and not check[0](value):
                raise ConfigError(f"range violation: [{section}] {key} {check[1]}, "
                                  f"got {value!r}")
            values[section][key] = value

    return RunConfig(**{name: cls(**values.get(name, {}))
                        for name, cls in _SECTIONS.items()})


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(f"{v:g}" for v in value)
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def render_config(cfg: RunConfig) -> str:
    """Emit the fully-populated config; parse(render(cfg)) round-trips."""
    out = io.StringIO()
    for name in _SECTIONS:
        section = getattr(cfg, name)
        out.write(f"[{name}]\n")
        for f in dc_fields(section):
            out.write(f"{f.name} = {_format_value(getattr(section, f.name))}\n")
        out.write("\n")
    return out.getvalue()


def default_config_text() -> str:
    return render_config(RunConfig())
