"""INI run configuration: scenario, gains, run options and gain search.

See ``data/paper_n5.ini`` for the complete schema with comments.
"""

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
import math
import re

from .bounds import ALIASES, KINDS
from .controller import GainSet, REFERENCE_GAINS, VARIANTS
from .model import (AugmentedState, DisturbanceSpec, PlatoonConfig, VehicleParams,
                    VehicleSpec, sample_scenario)
from .simulator import ACCEL, FORCE
from .synthesis import SearchSpec

BUNDLED = {"paper_n5": "paper_n5.ini"}

SCENARIO_KEYS = {
    "n_vehicles": int, "gap": float, "spacing": "floats", "leader_speed": float,
    "leader_initial_position": float, "mass_nominal": float, "mass_spread": float,
    "seed": int, "randomize": bool, "disturbance_decay": float, "disturbance_freq": float,
}
VEHICLE_KEYS = {
    "q0": float, "v0": float, "zeta0": float, "mass_true": float, "mass_nominal": float,
    "w_bar": float, "amp": float, "decay": float, "freq": float,
}
RUN_KEYS = {
    "variant": str, "dt": float, "t_end": float, "out": str, "bounds": "strs",
    "n_list": "ints", "disturbance_channel": str, "figures": bool, "name": str,
}
SYNTH_KEYS = {
    "n_starts": int, "max_iters": int, "seed": int, "shrink": float, "init_step": float,
    "min_step": float, "start_from_gains": bool,
}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; the message names the field."""


@dataclass
class RunConfig:
    base: PlatoonConfig
    gains: GainSet = REFERENCE_GAINS
    variant: str = "c2"
    dt: float = 0.01
    t_end: float = 100.0
    out: str = "out"
    bound_kinds: tuple = ("original_eq16", "monteil_eq17")
    n_list: tuple = (3, 5, 10, 20, 40)
    channel: str = ACCEL
    figures: bool = False
    name: str = "run"
    seed: int = 1
    mass_spread: float = 200.0
    randomize: bool = True
    synthesis: SearchSpec = field(default_factory=SearchSpec)

    def scenario(self, seed=None, mass_spread=None):
        """Concrete scenario; randomized draws unless the vehicles are explicit."""
        if not self.randomize:
            return self.base
        seed = self.seed if seed is None else seed
        spread = self.mass_spread if mass_spread is None else mass_spread
        return sample_scenario(self.base, seed, mass_spread=spread)

    @property
    def scenario_id(self):
        return f"{self.name}_n{self.base.n_vehicles}_{self.variant}_seed{self.seed}"


def _line_of(text, section, key=None):
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno
            continue
        if current == section and key is not None:
            if re.match(rf"\s*{re.escape(key)}\s*[=:]", line):
                return lineno
    return None


class _Reader:
    def __init__(self, text, source):
        self.text, self.source = text, source
        self.cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        try:
            self.cp.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError(f"{source}: {exc}") from exc

    def where(self, section, key=None):
        line = _line_of(self.text, section, key)
        loc = f"{self.source}:{line}" if line else self.source
        return f"{loc}: [{section}]" + (f" {key}" if key else "")

    def section(self, name, schema):
        if not self.cp.has_section(name):
            return {}
        out = {}
        for key, raw in self.cp.items(name):
            if key not in schema:
                raise ConfigError(f"{self.where(name, key)}: unknown field")
            out[key] = self.convert(name, key, raw, schema[key])
        return out

    def convert(self, section, key, raw, kind):
        raw = raw.strip()
        try:
            if kind is bool:
                low = raw.lower()
                if low in ("true", "yes", "on", "1"):
                    return True
                if low in ("false", "no", "off", "0"):
                    return False
                raise ValueError(f"expected a boolean, got {raw!r}")
            if kind == "floats":
                return tuple(_float(x) for x in raw.split(",") if x.strip())
            if kind == "ints":
                return tuple(int(x) for x in raw.split(",") if x.strip())
            if kind == "strs":
                return tuple(x.strip() for x in raw.split(",") if x.strip())
            if kind is float:
                return _float(raw)
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.where(section, key)}: {exc}") from exc


def _float(raw):
    val = float(raw)
    if not math.isfinite(val):
        raise ValueError(f"expected a finite number, got {raw!r}")
    return val


def _gains(reader):
    if not reader.cp.has_section("gains"):
        return REFERENCE_GAINS
    schema = {name: float for name in GainSet.names()}
    vals = reader.section("gains", schema)
    missing = [n for n in GainSet.names() if n not in vals and n not in ("alpha", "beta", "eps")]
    if missing:
        raise ConfigError(f"{reader.where('gains')}: missing field(s) {', '.join(missing)}")
    try:
        return GainSet(**vals)
    except ValueError as exc:
        raise ConfigError(f"{reader.where('gains')}: {exc}") from exc


def _scenario(reader):
    sc = reader.section("scenario", SCENARIO_KEYS)
    n = sc.get("n_vehicles", 5)
    if "spacing" in sc:
        spacing = sc["spacing"]
        if len(spacing) == 1:
            spacing = spacing * n
    else:
        spacing = (sc.get("gap", 10.0),) * n
    m_nom = sc.get("mass_nominal", 1000.0)
    dist = DisturbanceSpec(decay=sc.get("disturbance_decay", 0.1), freq=sc.get("disturbance_freq", 1.0))
    vehicle_sections = sorted(
        (s for s in reader.cp.sections() if s.startswith("vehicle.")),
        key=lambda s: int(s.split(".", 1)[1]) if s.split(".", 1)[1].isdigit() else -1,
    )
    try:
        base = PlatoonConfig(
            n_vehicles=n, spacing=spacing,
            leader_speed=sc.get("leader_speed", 20.0),
            leader_initial_position=sc.get("leader_initial_position", 0.0),
            seed=sc.get("seed", 1),
        )
        base = replace(base, per_vehicle=tuple(
            replace(p, params=VehicleParams(m_nom, m_nom), disturbance=dist) for p in base.per_vehicle))
    except ValueError as exc:
        raise ConfigError(f"{reader.where('scenario')}: {exc}") from exc

    if not vehicle_sections:
        return base, sc, sc.get("randomize", True)

    expected = [f"vehicle.{i}" for i in range(1, n + 1)]
    if vehicle_sections != expected:
        raise ConfigError(
            f"{reader.source}: explicit vehicles need sections {expected[0]}..{expected[-1]}, "
            f"found {', '.join(vehicle_sections)}")
    vehicles = []
    for i, name in enumerate(expected, start=1):
        vs = reader.section(name, VEHICLE_KEYS)
        default = base.per_vehicle[i - 1]
        try:
            vehicles.append(VehicleSpec(
                params=VehicleParams(vs.get("mass_true", vs.get("mass_nominal", m_nom)),
                                     vs.get("mass_nominal", m_nom)),
                disturbance=DisturbanceSpec(
                    w_bar=vs.get("w_bar", 0.0), amp=vs.get("amp", 0.0),
                    decay=vs.get("decay", dist.decay), freq=vs.get("freq", dist.freq)),
                initial=AugmentedState(vs.get("q0", default.initial.q),
                                       vs.get("v0", default.initial.v), vs.get("zeta0", 0.0)),
            ))
        except ValueError as exc:
            raise ConfigError(f"{reader.where(name)}: {exc}") from exc
    return replace(base, per_vehicle=tuple(vehicles)), sc, False


def _synthesis(reader, gains):
    opts = reader.section("synthesis", SYNTH_KEYS)
    bounds = {}
    if reader.cp.has_section("synthesis.bounds"):
        schema = {n: "floats" for n in GainSet.names()}
        for key, box in reader.section("synthesis.bounds", schema).items():
            if len(box) != 2:
                raise ConfigError(f"{reader.where('synthesis.bounds', key)}: expected 'lo, hi'")
            bounds[key] = box
    fixed = {"eps": 1.0}
    if reader.cp.has_section("synthesis.fixed"):
        fixed = reader.section("synthesis.fixed", {n: float for n in GainSet.names()})
    start = opts.pop("start_from_gains", False)
    try:
        return SearchSpec(bounds=bounds, fixed=fixed, initial=gains if start else None, **opts)
    except ValueError as exc:
        raise ConfigError(f"{reader.where('synthesis')}: {exc}") from exc


def parse_config(text, source="<config>"):
    reader = _Reader(text, source)
    known = {"scenario", "gains", "run", "synthesis", "synthesis.bounds", "synthesis.fixed",
             "certificate"}
    for sec in reader.cp.sections():
        if sec not in known and not sec.startswith("vehicle."):
            raise ConfigError(f"{reader.where(sec)}: unknown section")
    gains = _gains(reader)
    base, sc, randomize = _scenario(reader)
    run = reader.section("run", RUN_KEYS)

    variant = run.get("variant", "c2").lower()
    if variant not in VARIANTS:
        raise ConfigError(f"{reader.where('run', 'variant')}: expected one of {VARIANTS}, got {variant!r}")
    channel = run.get("disturbance_channel", ACCEL)
    if channel not in (ACCEL, FORCE):
        raise ConfigError(f"{reader.where('run', 'disturbance_channel')}: expected accel or force")
    kinds = tuple(ALIASES.get(k, k) for k in run.get("bounds", ("eq16", "eq17")))
    bad = [k for k in kinds if k not in KINDS]
    if bad:
        raise ConfigError(f"{reader.where('run', 'bounds')}: unknown bound kind(s) {', '.join(bad)}")
    for key in ("dt", "t_end"):
        if key in run and not run[key] > 0:
            raise ConfigError(f"{reader.where('run', key)}: must be positive")
    if any(n < 1 for n in run.get("n_list", ())):
        raise ConfigError(f"{reader.where('run', 'n_list')}: string lengths must be >= 1")

    return RunConfig(
        base=base, gains=gains, variant=variant,
        dt=run.get("dt", 0.01), t_end=run.get("t_end", 100.0), out=run.get("out", "out"),
        bound_kinds=kinds, n_list=run.get("n_list", (3, 5, 10, 20, 40)), channel=channel,
        figures=run.get("figures", False), name=run.get("name", "run"),
        seed=sc.get("seed", 1), mass_spread=sc.get("mass_spread", 200.0),
        randomize=randomize, synthesis=_synthesis(reader, gains),
    )


def bundled_path(name="paper_n5"):
    return resources.files("platoon_dss") / "data" / BUNDLED[name]


def load_config(path=None):
    """Load a config file; ``None`` or a bundled name selects a shipped example."""
    if path is None or path in BUNDLED:
        res = bundled_path(path or "paper_n5")
        return parse_config(res.read_text(), source=str(res))
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_config(text, source=str(path))


def format_gains_record(gains, report=None):
    """INI text with a ``[gains]`` section and an optional ``[certificate]``.

    Floats use ``repr`` so the record round-trips exactly and identical gain
    sets always produce identical bytes.
    """
    lines = ["[gains]"]
    lines += [f"{name} = {getattr(gains, name)!r}" for name in GainSet.names()]
    if report is not None:
        lines += ["", "[certificate]"]
        d = report.to_dict()
        for key in ("feasible", "c_sq", "b", "b_eps_scaled", "cbar_sq", "gain_k", "eps_max_allowed",
                    "c1_ok", "c2_ok", "c3_ok"):
            val = d[key]
            lines.append(f"{key} = {str(val).lower() if isinstance(val, bool) else repr(val)}")
        lines.append(f"worst_vertex = {', '.join(repr(v) for v in d['worst_vertex'])}")
    return "\n".join(lines) + "\n"
