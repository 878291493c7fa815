"""Run configuration: TOML files, named map presets and flag overrides."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .errors import ConfigError, DomainError, HypermodError
from .funcspace import BallClamp, Constant, Dilate, Identity, MapExpr, blend, map_from_json
from .geometry import Space, make_space
from .moduli import Modulus, modulus_from_config

SCENARIOS = ("verify-space", "step1", "step2", "porosity", "dtheta", "estimate-modulus", "controls")

# scenario -> scalar parameters it cannot run without
REQUIRED = {
    "step1": ("s", "mu", "eps"),
    "step2": ("s", "mu", "eps"),
    "porosity": ("s", "eps"),
}

DEFAULT_BUDGETS = {
    "trials": 100000,
    "budget": 20000,
    "neighbors": 50,
    "N": 30,
    "mesh": 1e-3,
}

DEFAULT_TOLERANCES = {"geometry": 1e-9, "construction": 1e-7}


def preset_map(space: Space, name: str, params: dict | None = None) -> MapExpr:
    """Named maps, all anchored at the base point ``x0`` of ``space``.

    ``identity``; ``constant`` (value ``x0``); ``clamp`` (projection onto
    ``B(x0, radius)``); ``clamped_blend`` (``(1 - t) clamp + t x0``);
    ``contraction`` (``(1 - t) id + t x0``); ``dilation`` (``x0 + factor (x - x0)``).
    """
    params = dict(params or {})
    x0 = space.base_point
    radius = float(params.get("radius", 1.0))
    t = float(params.get("t", 0.5))
    if name == "identity":
        return Identity()
    if name == "constant":
        return Constant(x0)
    if name == "clamp":
        return BallClamp(x0, radius)
    if name == "clamped_blend":
        return blend(BallClamp(x0, radius), Constant(x0), t)
    if name == "contraction":
        return blend(Identity(), Constant(x0), t)
    if name == "dilation":
        return Dilate(x0, float(params.get("factor", 2.0)))
    raise ConfigError(f"unknown map preset {name!r}")


SUBTABLE_KEYS = {
    "space": {"model", "dimension", "base_point", "n_rays"},
    "budgets": set(DEFAULT_BUDGETS),
    "tolerances": set(DEFAULT_TOLERANCES),
    "output": {"dir", "plot"},
}

PRESETS = ("identity", "constant", "clamp", "clamped_blend", "contraction", "dilation")


@dataclass
class RunConfig:
    scenario: str
    space: dict = field(default_factory=dict)
    modulus: dict = field(default_factory=lambda: {"variant": "linear", "c": 1.0})
    map: dict = field(default_factory=lambda: {"preset": "identity"})
    params: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str | None = None
    plot: bool = False
    source: str | None = None

    def __post_init__(self):
        self.budgets = {**DEFAULT_BUDGETS, **self.budgets}
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}

    # -- builders ---------------------------------------------------------

    def build_space(self) -> Space:
        try:
            return make_space(self.space)
        except (DomainError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid space: {exc}") from None

    def build_modulus(self) -> Modulus:
        try:
            return modulus_from_config(self.modulus)
        except ConfigError:
            raise
        except (DomainError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid modulus: {exc}") from None

    def build_map(self, space: Space) -> MapExpr:
        spec = self.map
        if "expr" in spec:
            try:
                return map_from_json(spec["expr"])
            except (HypermodError, KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"invalid map expression: {exc}") from None
        if "file" in spec:
            path = Path(spec["file"])
            if not path.is_absolute() and self.source:
                path = Path(self.source).parent / path
            try:
                return map_from_json(json.loads(path.read_text()))
            except OSError as exc:
                raise ConfigError(f"cannot read map file: {exc}") from None
        params = {k: v for k, v in spec.items() if k != "preset"}
        return preset_map(space, spec.get("preset", "identity"), params)

    # -- validation -------------------------------------------------------

    def validate(self) -> "RunConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        missing = [k for k in REQUIRED.get(self.scenario, ()) if k not in self.params]
        if missing:
            raise ConfigError(f"scenario {self.scenario!r} needs {', '.join(missing)}")
        p = self.params
        if "mu" in p and not 0 < float(p["mu"]) < 1:
            raise ConfigError("mu must lie in (0, 1)")
        for k in ("s", "eps"):
            if k in p and not float(p[k]) > 0:
                raise ConfigError(f"{k} must be positive")
        for k, v in self.budgets.items():
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"budget {k!r} must be positive")
        return self

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "space": self.space,
            "modulus": self.modulus,
            "map": self.map,
            "params": self.params,
            "budgets": self.budgets,
            "tolerances": self.tolerances,
            "seed": self.seed,
        }


def load_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None


def build_config(scenario: str, data: dict | None = None, overrides: dict[str, Any] | None = None,
                 source: str | None = None) -> RunConfig:
    """Merge file contents with command-line overrides; overrides win."""
    data = dict(data or {})
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    file_scenario = data.get("scenario")
    if file_scenario is not None and file_scenario != scenario:
        raise ConfigError(f"config is for scenario {file_scenario!r}, not {scenario!r}")
    known = {"scenario", "space", "modulus", "map", "params", "budgets", "tolerances", "seed", "output"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for table, allowed in SUBTABLE_KEYS.items():
        extra = set(data.get(table, {})) - allowed
        if extra:
            raise ConfigError(f"unknown keys in [{table}]: {sorted(extra)}")
    space = dict(data.get("space", {}))
    if "model" in ov:
        space = {"model": ov["model"]} if ov["model"] != space.get("model") else space
    if "dimension" in ov:
        space["dimension"] = ov["dimension"]
    params = dict(data.get("params", {}))
    for k in ("s", "mu", "eps"):
        if k in ov:
            params[k] = ov[k]
    budgets = dict(data.get("budgets", {}))
    if "trials" in ov:
        budgets["trials"] = ov["trials"]
    if "budget" in ov:
        budgets["budget"] = ov["budget"]
    tolerances = dict(data.get("tolerances", {}))
    if "tol" in ov:
        tolerances["geometry"] = tolerances["construction"] = ov["tol"]
    output = dict(data.get("output", {}))
    cfg = RunConfig(
        scenario=scenario,
        space=space,
        modulus=dict(data.get("modulus", {"variant": "linear", "c": 1.0})),
        map=dict(data.get("map", {"preset": "identity"})),
        params=params,
        budgets=budgets,
        tolerances=tolerances,
        seed=int(ov.get("seed", data.get("seed", 0))),
        out_dir=ov.get("out_dir", output.get("dir")),
        plot=bool(ov.get("plot", output.get("plot", False))),
        source=source,
    )
    return cfg.validate()
