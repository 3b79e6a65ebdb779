"""Run configuration: INI-style sections of key = value lines.

Grammar (see README for a full description):

    [run]               mode = spectrum | propagate | qubit | acp | verify
    [system]            spins / gammas as whitespace-separated numbers,
                        couplings as ';'-separated matrix rows
    [field]             b_o, b_1, dist = lorentzian|gaussian|delta, center, width
    [thermal]           exactly one of beta / temperature_kelvin
    [group:<label>]     j, count, gamma, abundance, lambda.<other> = Gauss
    [spectrum]          resonance (one label or several), omega_o, scaled
    [propagate]         t_end, dt (optional), store_every (optional)
    [qubit]             t_end, n_points, dt (optional), tolerance (optional)
    [acp]               order
    [output]            basename (optional)

Validation failures name the violated invariant; parse failures carry the
line information from the underlying parser.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .lineshape import FrequencyDistribution
from .spectrum import EquivalentGroup
from .spincore import SpinSystem, beta_from_kelvin

__all__ = ["RunConfig", "load_config"]

MODES = ("spectrum", "propagate", "qubit", "acp", "verify")


@dataclass
class RunConfig:
    mode: str
    system: SpinSystem | None = None
    field_b_o: float | None = None
    field_b_1: float | None = None
    dist: FrequencyDistribution | None = None
    beta: float | None = None
    groups: tuple = ()
    resonance: tuple = ()
    omega_o: float = 0.0
    scaled: bool = False
    t_end: float | None = None
    dt: float | None = None
    store_every: int | None = None
    n_points: int = 200
    tolerance: float | None = None
    acp_order: int = 2
    basename: str = "run"
    raw: dict = field(default_factory=dict)


def _floats(text: str) -> list:
    try:
        return [float(tok) for tok in text.split()]
    except ValueError as exc:
        raise ValidationError(f"expected numbers, got {text!r}") from exc


def _matrix(text: str) -> np.ndarray:
    rows = [r for r in (row.strip() for row in text.split(";")) if r]
    return np.array([_floats(r) for r in rows])


def _bool(text: str) -> bool:
    val = text.strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def _parse_system(section) -> SpinSystem:
    if "spins" not in section or "gammas" not in section:
        raise ValidationError("[system] requires explicit 'spins' and 'gammas' lists")
    spins = _floats(section["spins"])
    gammas = _floats(section["gammas"])
    couplings = _matrix(section["couplings"]) if "couplings" in section else None
    return SpinSystem(spins, gammas, couplings)


def _parse_dist(section) -> FrequencyDistribution:
    kind = section.get("dist", "lorentzian").strip().lower()
    center = float(section.get("center", "0"))
    width = float(section.get("width", "0"))
    return FrequencyDistribution(kind, center, width)


def _parse_groups(parser) -> tuple:
    groups = []
    for name in parser.sections():
        if not name.startswith("group:"):
            continue
        label = name.split(":", 1)[1].strip()
        sec = parser[name]
        for key in ("j", "count", "gamma"):
            if key not in sec:
                raise ValidationError(f"[{name}] is missing {key!r}")
        lambdas = {}
        for key, value in sec.items():
            if key.startswith("lambda."):
                lambdas[key.split(".", 1)[1]] = float(value)
        groups.append(EquivalentGroup(
            label=label,
            j=float(sec["j"]),
            count=int(sec["count"]),
            gamma=float(sec["gamma"]),
            lambdas=lambdas,
            abundance=float(sec.get("abundance", "1.0")),
        ))
    return tuple(groups)


def load_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ValidationError(f"config parse error: {exc}") from exc

    if "run" not in parser or "mode" not in parser["run"]:
        raise ValidationError("config must declare [run] mode = ...")
    mode = parser["run"]["mode"].strip().lower()
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")

    cfg = RunConfig(mode=mode)
    cfg.raw = {s: dict(parser[s]) for s in parser.sections()}

    if "thermal" in parser:
        sec = parser["thermal"]
        has_beta = "beta" in sec
        has_temp = "temperature_kelvin" in sec
        if has_beta == has_temp:
            raise ValidationError(
                "[thermal] requires exactly one of beta / temperature_kelvin")
        cfg.beta = (float(sec["beta"]) if has_beta
                    else beta_from_kelvin(float(sec["temperature_kelvin"])))

    if "system" in parser:
        cfg.system = _parse_system(parser["system"])
    if "field" in parser:
        sec = parser["field"]
        if "b_o" not in sec or "b_1" not in sec:
            raise ValidationError("[field] requires b_o and b_1")
        cfg.field_b_o = float(sec["b_o"])
        cfg.field_b_1 = float(sec["b_1"])
        cfg.dist = _parse_dist(sec)

    cfg.groups = _parse_groups(parser)

    if "spectrum" in parser:
        sec = parser["spectrum"]
        if "resonance" in sec:
            cfg.resonance = tuple(sec["resonance"].split())
        cfg.omega_o = float(sec.get("omega_o", "0"))
        if "scaled" in sec:
            cfg.scaled = _bool(sec["scaled"])
    if "propagate" in parser:
        sec = parser["propagate"]
        if "t_end" not in sec:
            raise ValidationError("[propagate] requires t_end")
        cfg.t_end = float(sec["t_end"])
        if "dt" in sec:
            cfg.dt = float(sec["dt"])
        if "store_every" in sec:
            cfg.store_every = int(sec["store_every"])
    if "qubit" in parser:
        sec = parser["qubit"]
        if "t_end" not in sec:
            raise ValidationError("[qubit] requires t_end")
        cfg.t_end = float(sec["t_end"])
        cfg.n_points = int(sec.get("n_points", "200"))
        if "dt" in sec:
            cfg.dt = float(sec["dt"])
        if "tolerance" in sec:
            cfg.tolerance = float(sec["tolerance"])
    if "acp" in parser:
        cfg.acp_order = int(parser["acp"].get("order", "2"))
    if "output" in parser:
        cfg.basename = parser["output"].get("basename", "run").strip()

    _validate_mode(cfg)
    return cfg


def _validate_mode(cfg: RunConfig) -> None:
    needs_matrix = cfg.mode in ("propagate", "qubit", "acp", "verify")
    if needs_matrix:
        if cfg.system is None:
            raise ValidationError(f"mode {cfg.mode!r} requires an explicit [system] spin list")
        if cfg.beta is None:
            raise ValidationError(f"mode {cfg.mode!r} requires a [thermal] section")
    if cfg.mode in ("propagate", "qubit", "verify"):
        if cfg.field_b_o is None:
            raise ValidationError(f"mode {cfg.mode!r} requires a [field] section")
    if cfg.mode == "acp" and cfg.field_b_o is None:
        raise ValidationError("mode 'acp' requires a [field] section for b_o")
    if cfg.mode in ("propagate", "qubit") and cfg.t_end is None:
        raise ValidationError(f"mode {cfg.mode!r} requires t_end")
    if cfg.mode == "qubit":
        if cfg.system is not None and (cfg.system.n_spins != 1
                                       or cfg.system.spins[0] != 0.5):
            raise ValidationError("mode 'qubit' requires a single spin-1/2 system")
    if cfg.mode == "spectrum":
        if not cfg.groups:
            raise ValidationError("mode 'spectrum' requires at least one [group:...] section")
        if not cfg.resonance:
            raise ValidationError("mode 'spectrum' requires [spectrum] resonance = <label>")
        labels = {g.label for g in cfg.groups}
        for lab in cfg.resonance:
            if lab not in labels:
                raise ValidationError(f"resonance group {lab!r} is not defined")
