"""Run configuration: INI-style text with sections [chart], [grid],
[tolerances], [growth], [output].  Unknown keys are errors; every field
has a default so a minimal config only names a chart."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from . import catalog, engines, exprchart
from .errors import ConfigError

_ALLOWED = {
    "chart": None,            # free keys: name/expression plus parameters
    "grid": {"resolution", "engine"},
    "tolerances": {"gauss", "c1", "c2", "nn", "g0", "intrinsic"},
    "growth": {"x0", "radii", "window", "resolution", "exploratory",
               "flow_box", "flow_resolution", "flow_step", "t_range",
               "pairs"},
    "output": {"dir"},
}

MIN_RESOLUTION = 17


@dataclass
class RunConfig:
    chart_name: str = None
    chart_params: dict = field(default_factory=dict)
    expression_path: str = None
    resolution: tuple = (65,)          # broadcast to every axis if length 1
    engine: str = None                 # None: the chart's own engine
    tolerances: dict = field(default_factory=dict)
    x0: tuple = None                   # None: domain center
    radii: tuple = (0.5, 0.75, 1.0, 1.25, 1.5)
    window: tuple = None
    growth_resolution: int = None
    exploratory: bool = False
    flow_box: tuple = ((-0.3, 0.3),)   # broadcast to every axis if length 1
    flow_resolution: int = 9
    flow_step: float = 0.02
    t_range: tuple = (-0.3, 0.3)
    pairs: int = 100
    out_dir: str = "out"
    seed: int = 12345

    def make_chart(self):
        if self.expression_path is not None:
            return exprchart.load_chart(self.expression_path)
        try:
            return catalog.get(self.chart_name, **self.chart_params).chart
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad chart request: {exc}") from None

    def grid_resolution(self, n):
        res = self.resolution
        if len(res) == 1:
            res = res * n
        if len(res) != n:
            raise ConfigError(
                f"resolution has {len(res)} axes, chart has {n}")
        return res

    def flow_box_for(self, n):
        box = self.flow_box
        if len(box) == 1:
            box = box * n
        if len(box) != n:
            raise ConfigError(f"flow_box has {len(box)} axes, chart has {n}")
        return box


def _floats(text):
    return tuple(float(x) for x in text.split(","))


def _interval(text):
    lo, hi = (float(x) for x in text.split(":"))
    return (lo, hi)


def _intervals(text):
    return tuple(_interval(p) for p in text.split(","))


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text):
    """Parse configuration text into a validated RunConfig."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                   interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    unknown_sections = set(cp.sections()) - set(_ALLOWED)
    if unknown_sections:
        raise ConfigError(f"unknown sections: {sorted(unknown_sections)}")
    for sec, allowed in _ALLOWED.items():
        if allowed is None or not cp.has_section(sec):
            continue
        bad = set(cp.options(sec)) - allowed
        if bad:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(bad)}")

    cfg = RunConfig()
    try:
        if cp.has_section("chart"):
            items = dict(cp.items("chart"))
            cfg.chart_name = items.pop("name", None)
            cfg.expression_path = items.pop("expression", None)
            cfg.chart_params = {k: float(v) for k, v in items.items()}
        if cp.has_section("grid"):
            if cp.has_option("grid", "resolution"):
                cfg.resolution = tuple(
                    int(x) for x in cp.get("grid", "resolution").split(","))
            if cp.has_option("grid", "engine"):
                cfg.engine = cp.get("grid", "engine").strip().lower()
        if cp.has_section("tolerances"):
            cfg.tolerances = {k: float(v)
                              for k, v in cp.items("tolerances")}
        if cp.has_section("growth"):
            g = dict(cp.items("growth"))
            if "x0" in g:
                cfg.x0 = _floats(g["x0"])
            if "radii" in g:
                cfg.radii = _floats(g["radii"])
            if "window" in g:
                cfg.window = _interval(g["window"])
            if "resolution" in g:
                cfg.growth_resolution = int(g["resolution"])
            if "exploratory" in g:
                cfg.exploratory = _bool(g["exploratory"])
            if "flow_box" in g:
                cfg.flow_box = _intervals(g["flow_box"])
            if "flow_resolution" in g:
                cfg.flow_resolution = int(g["flow_resolution"])
            if "flow_step" in g:
                cfg.flow_step = float(g["flow_step"])
            if "t_range" in g:
                cfg.t_range = _interval(g["t_range"])
            if "pairs" in g:
                cfg.pairs = int(g["pairs"])
        if cp.has_section("output") and cp.has_option("output", "dir"):
            cfg.out_dir = cp.get("output", "dir")
    except ValueError as exc:
        raise ConfigError(f"bad config value: {exc}") from None

    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.chart_name is None and cfg.expression_path is None:
        raise ConfigError("[chart] must set 'name' or 'expression'")
    if cfg.chart_name is not None and cfg.expression_path is not None:
        raise ConfigError("[chart] sets both 'name' and 'expression'")
    if cfg.engine is not None and cfg.engine not in engines.ENGINES:
        raise ConfigError(f"unknown engine {cfg.engine!r}; "
                          f"choose from {engines.ENGINES}")
    for r in cfg.resolution:
        if r < MIN_RESOLUTION:
            raise ConfigError(
                f"resolution {r} below the minimum {MIN_RESOLUTION}")
    if cfg.growth_resolution is not None \
            and cfg.growth_resolution < MIN_RESOLUTION:
        raise ConfigError(
            f"growth resolution {cfg.growth_resolution} below the "
            f"minimum {MIN_RESOLUTION}")
    for k, v in cfg.tolerances.items():
        if not v > 0:
            raise ConfigError(f"tolerance {k} must be positive, got {v}")
    radii = cfg.radii
    if not radii or any(r <= 0 for r in radii) \
            or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConfigError(
            "radii must be positive and strictly increasing")
    if cfg.window is not None and not cfg.window[0] < cfg.window[1]:
        raise ConfigError("fit window must be a non-empty interval")
    if cfg.flow_step <= 0:
        raise ConfigError("flow_step must be positive")
    if cfg.flow_resolution < 1:
        raise ConfigError("flow_resolution must be at least 1")
    if cfg.pairs < 1:
        raise ConfigError("pairs must be at least 1")
    if not cfg.t_range[0] < cfg.t_range[1]:
        raise ConfigError("t_range must be a non-empty interval")


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
