"""Plain-text (INI) run configuration.

Frequencies are given in Hz, lengths in m, losses as power fractions,
squeezing in dB and LO phases in degrees. Everything is converted to the
internal units (rad/s, squeeze factor, rad) when a :class:`GeoConfig` is built.
"""
import configparser
import re
from dataclasses import dataclass, field

import numpy as np

from .cavity import OmcSpec
from .geo import TWO_PI, GeoConfig, LossBudget
from .squeezer import HomodyneAngles, SqueezerSpec
from .twophoton import db_to_squeeze_factor


class ConfigError(ValueError):
    """Invalid configuration; ``diagnostics`` holds one message per problem."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(self.diagnostics))


def _floats(text):
    return [float(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def _ints(text):
    return [int(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ValueError("expected a boolean")


def _choice(*options):
    def parse(text):
        t = text.strip()
        if t not in options:
            raise ValueError("expected one of %s" % ", ".join(options))
        return t
    return parse


def _optional_float(text):
    t = text.strip().lower()
    return None if t in ("", "none") else float(t)


# section -> key -> (parser, default); a default of REQUIRED must be given
REQUIRED = object()
SCHEMA = {
    "interferometer": {
        "arm_length": (float, 1200.0),
        "sr_length": (float, 1.0),
        "pr_length": (float, 1.15),
        "T_PRM": (float, 900e-6),
        "T_SRM": (float, 0.02),
        "T_BS": (float, 0.5),
        "T_ETM": (float, 0.0),
        "input_power": (float, 2.0),
        "fixed_arm_power": (_optional_float, None),
        "schnupp_ls": (float, 0.0),
        "detuning_hz": (float, REQUIRED),
        "wavelength": (float, 1064e-9),
    },
    "squeezer": {
        "epr_db": (float, 13.0),
        "theta_s_deg": (float, 90.0),
        "delta_hz": (float, 0.0),
    },
    "homodyne": {
        "theta_deg": (float, 90.0),
        "phi_deg": (float, 0.0),
    },
    "omc": {
        "enabled": (_bool, False),
        "linewidth_hz": (float, 1.4e6),
        "fsr_hz": (float, 435e6),
        "mode": (_choice("transmit_signal_reflect_idler", "transmit_idler_reflect_signal"),
                 "transmit_signal_reflect_idler"),
    },
    "losses": {
        "input": (float, 0.0),
        "output": (float, 0.0),
        "internal_symmetric": (float, 0.0),
        "internal_asymmetric": (float, 0.0),
    },
    "optimizer": {
        "n_fsr": (int, 80),
        "objective": (_choice("auto", "noise_at_detuning", "band_integrated"), "auto"),
        "n_delta": (int, 161),
        "n_phi": (int, 360),
        "band_min_hz": (float, 200.0),
        "band_max_hz": (float, 2e4),
    },
    "grid": {
        "f_min_hz": (float, 100.0),
        "f_max_hz": (float, 1e5),
        "n_log": (int, 300),
        "n_lin": (int, 100),
    },
    "study": {
        "single_mode_db": (float, 10.0),
        "homodyne_angles_deg": (_floats, [0.0, 30.0, 60.0, 90.0, 120.0, 150.0]),
        "schnupp_lengths": (_floats, [0.03, 0.2]),
        "schnupp_n_fsr": (_ints, [1, 20, 40, 80]),
        "prm_transmissions": (_floats, [900e-6, 0.005, 0.02]),
        "omc_n_min": (int, 10),
        "omc_n_max": (int, 280),
        "omc_n_step": (int, 10),
        "io_losses": (_floats, [0.01, 0.02, 0.05, 0.10, 0.15]),
        "internal_losses": (_floats, [0.0005, 0.001, 0.002, 0.005]),
        "coupled_schnupp_lengths": (_floats, [0.0, 0.03, 0.1, 0.2, 0.4]),
        "coupled_span_hz": (float, 1e4),
        "coupled_points": (int, 2001),
    },
}


@dataclass
class RunConfig:
    geo: GeoConfig
    optimizer: dict
    grid: dict
    study: dict
    raw: dict = field(default_factory=dict)     # resolved values in file units

    def frequencies(self, config=None):
        from .geo import default_grid
        g = self.grid
        return default_grid(self.geo if config is None else config, g["n_log"], g["n_lin"],
                            g["f_min_hz"], g["f_max_hz"])


def _line_numbers(text):
    """Map (section, key) -> line number for diagnostics."""
    lines = {}
    section = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = n
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            lines[(section, m.group(1).strip())] = n
    return lines


def parse_config(text, source="<config>", overrides=()):
    """Parse INI ``text`` (plus ``section.key=value`` overrides) into a RunConfig.

    Raises :class:`ConfigError` listing every problem with its line number.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as exc:
        raise ConfigError(["%s:%d: cannot parse %r" % (source, n, line.strip())
                           for n, line in exc.errors])
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = "%s:%d" % (source, lineno) if lineno else source
        raise ConfigError(["%s: %s" % (where, exc.message)])
    lines = _line_numbers(text)
    origin = {}
    diagnostics = []
    for item in overrides:
        m = re.match(r"\s*([A-Za-z_]+)\.([A-Za-z_0-9]+)\s*=(.*)$", item)
        if not m:
            diagnostics.append("override %r: expected section.key=value" % item)
            continue
        sec, key, value = m.group(1), m.group(2), m.group(3).strip()
        if not cp.has_section(sec):
            cp.add_section(sec)
            origin[(sec, None)] = "override %r" % item
        cp.set(sec, key, value)
        origin[(sec, key)] = "override %r" % item

    def where(sec, key=None):
        if (sec, key) in origin:
            return origin[(sec, key)]
        n = lines.get((sec, key))
        return "%s:%d" % (source, n) if n else source

    values = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            diagnostics.append("%s: unknown section [%s]" % (where(sec), sec))
            continue
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                diagnostics.append("%s: unknown key %r in [%s]" % (where(sec, key), key, sec))
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (parse, default) in keys.items():
            if cp.has_option(sec, key):
                text_value = cp.get(sec, key)
                try:
                    values[sec][key] = parse(text_value)
                except ValueError as exc:
                    diagnostics.append("%s: [%s] %s = %r: %s" % (where(sec, key), sec, key,
                                                                 text_value, exc))
            elif default is REQUIRED:
                diagnostics.append("%s: missing required key %r in [%s]" % (source, key, sec))
            else:
                values[sec][key] = default
    if diagnostics:
        raise ConfigError(diagnostics)
    try:
        geo = _build_geo_config(values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(["%s: %s" % (source, exc)])
    if values["optimizer"]["n_fsr"] < 1:
        raise ConfigError(["%s: [optimizer] n_fsr must be >= 1" % where("optimizer", "n_fsr")])
    return RunConfig(geo, values["optimizer"], values["grid"], values["study"], values)


def _build_geo_config(v):
    ifo = v["interferometer"]
    for key in ("T_PRM", "T_SRM", "T_BS", "T_ETM"):
        if not 0 <= ifo[key] <= 1:
            raise ValueError("[interferometer] %s must lie in [0, 1]" % key)
    for key in ("arm_length", "sr_length", "pr_length", "wavelength", "input_power"):
        if not ifo[key] > 0:
            raise ValueError("[interferometer] %s must be positive" % key)
    if ifo["detuning_hz"] < 0:
        raise ValueError("[interferometer] detuning_hz must be >= 0")
    sq = v["squeezer"]
    squeezer = SqueezerSpec(db_to_squeeze_factor(sq["epr_db"]), np.deg2rad(sq["theta_s_deg"]),
                            TWO_PI * sq["delta_hz"])
    hd = v["homodyne"]
    homodyne = HomodyneAngles(np.deg2rad(hd["theta_deg"]), np.deg2rad(hd["phi_deg"]))
    o = v["omc"]
    omc = OmcSpec(TWO_PI * o["linewidth_hz"], TWO_PI * o["fsr_hz"], o["mode"]) if o["enabled"] else None
    ls = v["losses"]
    losses = LossBudget(ls["input"], ls["output"], ls["internal_symmetric"], ls["internal_asymmetric"])
    return GeoConfig(
        arm_length=ifo["arm_length"], sr_length=ifo["sr_length"], pr_length=ifo["pr_length"],
        T_PRM=ifo["T_PRM"], T_SRM=ifo["T_SRM"], T_BS=ifo["T_BS"], T_ETM=ifo["T_ETM"],
        input_power=ifo["input_power"], schnupp_ls=ifo["schnupp_ls"],
        detuning=TWO_PI * ifo["detuning_hz"], squeezer=squeezer, homodyne=homodyne, omc=omc,
        losses=losses, wavelength=ifo["wavelength"], fixed_arm_power=ifo["fixed_arm_power"])


def load_config(path, overrides=()):
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, str(path), overrides)


def default_config_text():
    """INI text with every key at its default (detuning 2 kHz)."""
    out = []
    for sec, keys in SCHEMA.items():
        out.append("[%s]" % sec)
        for key, (_, default) in keys.items():
            if default is REQUIRED:
                default = 2000.0
            if isinstance(default, list):
                default = ", ".join(repr(x) for x in default)
            elif default is None:
                default = "none"
            elif isinstance(default, bool):
                default = str(default).lower()
            out.append("%s = %s" % (key, default))
        out.append("")
    return "\n".join(out)


def snapshot(run):
    """JSON-friendly copy of the resolved configuration (file units)."""
    return {sec: {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in d.items()}
            for sec, d in run.raw.items()}
